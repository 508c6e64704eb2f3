//! Sliced flows `X_i`, the randomized penalty profile `Y_i`, and the
//! penalized minimum `min_i (X_i + Y_i)` with its winning slab and cut.

use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityField, TwoPointDist};
use crate::error::{domain, Result};
use crate::flow::{CutSet, LatticeFlow};
use crate::lattice::{CylinderSpec, LatticeIndex};
use crate::network::Cap;
use crate::rng::{bernoulli, Purpose, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub slab_height: usize,
    /// Lowest slab index; slab `i` spans heights `[i, i + slab_height]`.
    pub min_index: usize,
}

impl PenaltyParams {
    pub fn new(epsilon: f64, delta: f64, slab_height: usize) -> Result<Self> {
        let p = PenaltyParams {
            epsilon,
            delta,
            slab_height,
            min_index: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < self.delta && self.delta < 0.25) {
            return domain(format!(
                "need 0 < epsilon < delta < 1/4, got epsilon={} delta={}",
                self.epsilon, self.delta
            ));
        }
        if self.slab_height == 0 {
            return domain("slab height must be positive");
        }
        Ok(())
    }

    pub fn check_spec(&self, spec: &CylinderSpec) -> Result<()> {
        self.validate()?;
        if self.slab_height > spec.height {
            return domain(format!("slab height {} exceeds H = {}", self.slab_height, spec.height));
        }
        if self.min_index > spec.height - self.slab_height {
            return domain("no slab index in range");
        }
        Ok(())
    }

    /// `M = floor(n^epsilon)`.
    pub fn m(&self, n: usize) -> usize {
        ((n as f64).powf(self.epsilon) + 1e-12).floor() as usize
    }

    /// Slab indices `min_index ..= H - slab_height`.
    pub fn indices(&self, height: usize) -> std::ops::RangeInclusive<usize> {
        self.min_index..=height - self.slab_height
    }
}

/// `n^{(d-1)/2} / log n`.
pub fn penalty_bound(d: usize, n: usize) -> f64 {
    (n as f64).powf((d as f64 - 1.0) / 2.0) / (n as f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyProfile {
    pub i0: i64,
    /// `Y_i` for every height `0 <= i <= H`.
    pub y: Vec<f64>,
    pub z_draws: Vec<i8>,
    pub s_m: i64,
}

/// Draws `Z_1..Z_M` (`-1` with probability `p_a`) and evaluates `Y_i`.
pub fn penalty_profile(
    params: &PenaltyParams,
    spec: &CylinderSpec,
    dist: &TwoPointDist,
    seed: u64,
    sample_index: u64,
) -> Result<PenaltyProfile> {
    params.validate()?;
    let (d, n, h) = (spec.d, spec.n, spec.height);
    if n < 2 {
        return domain(format!("penalty profile needs n >= 2, got {n}"));
    }
    let m = params.m(n);
    let mut stream = Stream::new(seed, Purpose::Penalty, sample_index);
    let z_draws: Vec<i8> = (0..m)
        .map(|_| if bernoulli(stream.next_word(), dist.p_num, dist.p_den) { -1 } else { 1 })
        .collect();
    let s_m: i64 = z_draws.iter().map(|&z| z as i64).sum();
    let i0 = (h / 2) as i64 + s_m;
    Ok(PenaltyProfile {
        i0,
        y: profile_values(params, d, n, h, i0),
        z_draws,
        s_m,
    })
}

/// `Y_i(i0)` for `0 <= i <= H`.
pub fn profile_values(params: &PenaltyParams, d: usize, n: usize, h: usize, i0: i64) -> Vec<f64> {
    let nf = n as f64;
    let nd = nf.powf(params.delta);
    let coef = nf.powf((d as f64 - 1.0) / 2.0) / (nd * nf.ln());
    let window = h as f64 / 2.0 - nd;
    (0..=h)
        .map(|i| {
            let dist = (i0 - i as i64).abs() as f64;
            if dist <= window {
                0.0
            } else {
                coef * (dist - window)
            }
        })
        .collect()
}

/// Penalty of the slab with bottom height `s`; slabs carry labels starting
/// at 1, so this is `Y_{s+1}`.
pub fn slab_penalty(y: &[f64], s: usize) -> f64 {
    y[s + 1]
}

/// The sub-lattice of one slab.
pub fn slab_lattice(spec: &CylinderSpec, slab_height: usize) -> Result<LatticeIndex> {
    if slab_height == 0 || slab_height > spec.height {
        return domain(format!("slab height {slab_height} outside [1, {}]", spec.height));
    }
    LatticeIndex::new(CylinderSpec::new(spec.d, spec.n, slab_height)?)
}

/// Bottom-to-top flows of the slabs `[i, i + h]` of a fixed lattice. Slab
/// edges form a contiguous id range, so a slab is solved on its own lattice
/// with a slice of the field.
pub struct SlicedFlows<'a> {
    full: &'a LatticeIndex,
    solver: LatticeFlow<'a>,
    height: usize,
}

impl<'a> SlicedFlows<'a> {
    pub fn new(full: &'a LatticeIndex, slab: &'a LatticeIndex) -> Result<Self> {
        let (fs, ss) = (full.spec(), slab.spec());
        if fs.d != ss.d || fs.n != ss.n || ss.height > fs.height {
            return domain("slab lattice does not fit the cylinder");
        }
        Ok(SlicedFlows {
            full,
            solver: LatticeFlow::bottom_top(slab),
            height: ss.height,
        })
    }

    pub fn slab_height(&self) -> usize {
        self.height
    }

    /// `X_i` for the slab starting at height `i`.
    pub fn solve(&mut self, values: &[Cap], i: usize) -> Result<Cap> {
        if i + self.height > self.full.spec().height {
            return domain(format!(
                "slab index {i} out of range for H = {} and slab height {}",
                self.full.spec().height,
                self.height
            ));
        }
        Ok(self.solver.solve(&values[self.full.slab_edges(i, i + self.height)]))
    }

    /// `D_e X_i` for every edge of the last solved slab, in slab-local ids.
    pub fn flip_differences(&mut self, low: Cap, high: Cap) -> Vec<Cap> {
        self.solver.flip_differences(low, high)
    }

    /// Canonical cut of the last solved slab `i`, in full-lattice edge ids.
    pub fn cut(&self, i: usize, values: &[Cap]) -> CutSet {
        let offset = i * self.full.layer_stride();
        let edges = self.solver.canonical_cut().edges.iter().map(|&e| e + offset).collect();
        CutSet::new(self.full, edges, values)
    }
}

pub fn sliced_flow(lattice: &LatticeIndex, field: &CapacityField, i: usize, slab_height: usize) -> Result<Cap> {
    let slab = slab_lattice(&lattice.spec(), slab_height)?;
    let mut flows = SlicedFlows::new(lattice, &slab)?;
    flows.solve(&field.values, i)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenalizedMinimum {
    pub phi_tilde: f64,
    pub j0: usize,
    pub cut: CutSet,
    /// `X_i` for `i` in the index range, starting at `min_index`.
    pub x: Vec<Cap>,
}

impl PenalizedMinimum {
    pub fn min_x(&self) -> Cap {
        *self.x.iter().min().expect("nonempty index range")
    }
}

/// `min_i (X_i + Y_i)`, the smallest minimizing index and its canonical cut.
pub fn penalized_minimum_with(
    flows: &mut SlicedFlows<'_>,
    values: &[Cap],
    profile: &PenaltyProfile,
    params: &PenaltyParams,
) -> Result<PenalizedMinimum> {
    let spec = flows.full.spec();
    params.check_spec(&spec)?;
    if flows.slab_height() != params.slab_height || profile.y.len() != spec.height + 1 {
        return domain("penalty profile or slab solver does not match the parameters");
    }
    let mut x = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for i in params.indices(spec.height) {
        let xi = flows.solve(values, i)?;
        x.push(xi);
        let total = xi as f64 + slab_penalty(&profile.y, i);
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, i));
        }
    }
    let (phi_tilde, j0) = best.expect("nonempty index range");
    flows.solve(values, j0)?;
    Ok(PenalizedMinimum {
        phi_tilde,
        j0,
        cut: flows.cut(j0, values),
        x,
    })
}

pub fn penalized_minimum(
    lattice: &LatticeIndex,
    field: &CapacityField,
    profile: &PenaltyProfile,
    params: &PenaltyParams,
) -> Result<PenalizedMinimum> {
    let slab = slab_lattice(&lattice.spec(), params.slab_height)?;
    let mut flows = SlicedFlows::new(lattice, &slab)?;
    penalized_minimum_with(&mut flows, &field.values, profile, params)
}

/// One row of the penalized experiment log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenalizedRecord {
    pub seed: u64,
    pub sample_index: u64,
    pub phi: Cap,
    pub phi_tilde: f64,
    pub j0: usize,
    pub cut_size: usize,
    pub extent: usize,
}

impl PenalizedRecord {
    pub const HEADER: &'static str = "seed,sample_index,phi,phi_tilde,j0,cut_size,extent";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.seed, self.sample_index, self.phi, self.phi_tilde, self.j0, self.cut_size, self.extent
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::sample_field;
    use crate::surface::is_bottom_top_cut;

    fn lattice(d: usize, n: usize, h: usize) -> LatticeIndex {
        LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PenaltyParams::new(0.1, 0.2, 4).is_ok());
        assert!(PenaltyParams::new(0.2, 0.1, 4).is_err());
        assert!(PenaltyParams::new(0.1, 0.3, 4).is_err());
        assert!(PenaltyParams::new(0.0, 0.2, 4).is_err());
        let p = PenaltyParams::new(0.1, 0.2, 4).unwrap();
        assert_eq!(p.m(16), 1);
        assert_eq!(PenaltyParams::new(0.2, 0.24, 4).unwrap().m(32), 2);
        assert!(p.check_spec(&CylinderSpec::new(2, 4, 3).unwrap()).is_err());
    }

    #[test]
    fn profile_values_match_definition() {
        let p = PenaltyParams::new(0.1, 0.2, 4).unwrap();
        let (d, n, h) = (2, 16, 64);
        let nd = 16f64.powf(0.2);
        let i0 = 33;
        let y = profile_values(&p, d, n, h, i0);
        assert_eq!(y[i0 as usize], 0.0);
        let window = h as f64 / 2.0 - nd;
        for (i, &yi) in y.iter().enumerate() {
            let dist = (i0 - i as i64).abs() as f64;
            assert_eq!(yi == 0.0, dist <= window);
        }
        // at distance window + n^delta / 2 the penalty is n^{(d-1)/2} / (2 log n)
        let dist = window + nd / 2.0;
        let coef = 4.0 / (nd * 16f64.ln());
        let expected = 4.0 / (2.0 * 16f64.ln());
        assert!((coef * (dist - window) - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_z_draws() {
        let spec = CylinderSpec::new(2, 16, 64).unwrap();
        let p = PenaltyParams::new(0.2, 0.24, 8).unwrap();
        let all_a = TwoPointDist::new(1, 2, 1, 1).unwrap();
        let prof = penalty_profile(&p, &spec, &all_a, 3, 0).unwrap();
        assert!(prof.z_draws.iter().all(|&z| z == -1));
        assert_eq!(prof.i0, 32 - p.m(16) as i64);
        let bad = CylinderSpec::new(2, 1, 8).unwrap();
        assert!(penalty_profile(&p, &bad, &all_a, 3, 0).is_err());
    }

    #[test]
    fn full_height_slab_is_the_cylinder() {
        let l = lattice(2, 4, 6);
        let field = sample_field(&l, TwoPointDist::default(), 8, 2);
        let mut solver = LatticeFlow::bottom_top(&l);
        assert_eq!(sliced_flow(&l, &field, 0, 6).unwrap(), solver.solve(&field.values));
        assert!(sliced_flow(&l, &field, 1, 6).is_err());
    }

    #[test]
    fn uniform_slabs_are_flat() {
        let l = lattice(3, 2, 6);
        let field = CapacityField::constant(&l, TwoPointDist::default(), 1);
        for i in 0..=3 {
            assert_eq!(sliced_flow(&l, &field, i, 3).unwrap(), 9);
        }
        let p = PenaltyParams::new(0.1, 0.2, 3).unwrap();
        let prof = penalty_profile(&p, &l.spec(), &TwoPointDist::default(), 1, 0).unwrap();
        let out = penalized_minimum(&l, &field, &prof, &p).unwrap();
        let first_zero = p.indices(6).find(|&i| slab_penalty(&prof.y, i) == 0.0).unwrap();
        assert_eq!(out.j0, first_zero);
        assert_eq!(out.phi_tilde, 9.0);
    }

    #[test]
    fn slab_minimum_bounds_and_cut() {
        let l = lattice(2, 6, 24);
        let dist = TwoPointDist::default();
        let p = PenaltyParams::new(0.1, 0.2, 12).unwrap();
        let mut solver = LatticeFlow::bottom_top(&l);
        for k in 0..20 {
            let field = sample_field(&l, dist, 4, k);
            let phi = solver.solve(&field.values);
            let prof = penalty_profile(&p, &l.spec(), &dist, 4, k).unwrap();
            let out = penalized_minimum(&l, &field, &prof, &p).unwrap();
            assert!(out.x.iter().all(|&x| x >= phi));
            assert!(is_bottom_top_cut(&l, &out.cut.edges));
            assert_eq!(out.cut.capacity, out.x[out.j0]);
            assert!(out.cut.h_min >= out.j0 && out.cut.h_max <= out.j0 + 12);
            assert!(dist.a as usize * out.cut.len() <= dist.b as usize * 7);
            assert_eq!(penalized_minimum(&l, &field, &prof, &p).unwrap(), out);
        }
    }

    #[test]
    fn bottom_cut_saturates_the_bound() {
        let (n, h, slab) = (4, 16, 4);
        let l = lattice(2, n, h);
        let p = PenaltyParams::new(0.1, 0.2, slab).unwrap();
        let dist = TwoPointDist::default();
        let block = l.layer_stride();
        let horiz = l.horizontal_per_layer();
        let bound = penalty_bound(2, n);
        for (layer, shift) in [(0, 1i64), (h - 1, -1)] {
            let mut values = vec![dist.b as Cap; l.num_edges()];
            for e in layer * block + horiz..(layer + 1) * block {
                values[e] = dist.a as Cap;
            }
            let field = CapacityField::from_values(&l, dist, values).unwrap();
            let i0 = (h / 2) as i64 + shift;
            let prof = PenaltyProfile {
                i0,
                y: profile_values(&p, 2, n, h, i0),
                z_draws: vec![shift as i8],
                s_m: shift,
            };
            let out = penalized_minimum(&l, &field, &prof, &p).unwrap();
            let gap = out.phi_tilde - out.min_x() as f64;
            if layer == 0 {
                assert!((gap - bound).abs() < 1e-9, "gap {gap} bound {bound}");
            } else {
                assert_eq!(gap, 0.0);
            }
        }
    }

    #[test]
    fn record_row() {
        let r = PenalizedRecord {
            seed: 1,
            sample_index: 2,
            phi: 7,
            phi_tilde: 7.5,
            j0: 3,
            cut_size: 5,
            extent: 1,
        };
        assert_eq!(r.csv_row(), "1,2,7,7.5,3,5,1");
        assert_eq!(PenalizedRecord::HEADER.split(',').count(), 7);
    }
}
