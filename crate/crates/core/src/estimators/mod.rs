//! Monte Carlo estimators. Sample `i` of a plan always uses
//! `sample_index = i`, runs as an independent task, and results are folded
//! in index order, so reports do not depend on the thread count.

mod bounds;
mod boundary;
mod chaos;
mod influence;
mod subadditivity;

pub use bounds::{efron_stein_rhs, newman_piza_lhs, BoundEstimate};
pub use boundary::{boundary_and_localization, BoundaryReport, LocalizationPoint};
pub use chaos::{chaos_curve, ChaosCurve, ChaosPoint};
pub use influence::{
    influence_profile, talagrand_rhs, DerivativeNorms, InfluenceOptions, InfluenceProfile, ShiftRegularity,
    TalagrandRhs, ThresholdCount,
};
pub use subadditivity::{subadditivity_defect, SubadditivityReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{sample_field, sample_field_for, CapacityField, TwoPointDist};
use crate::error::{domain, Result};
use crate::flow::LatticeFlow;
use crate::lattice::{CylinderSpec, EdgeId, LatticeIndex};
use crate::lipschitz::{sample_vertex_weights, solve_lipschitz, VertexWeightField};
use crate::penalized::{
    penalized_minimum_with, penalty_profile, profile_values, slab_lattice, slab_penalty, PenalizedMinimum, PenaltyParams,
    PenaltyProfile, SlicedFlows,
};
use crate::rng::Purpose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Phi,
    PenalizedPhi,
    Lipschitz,
    Anchored,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quantity::Phi => "phi",
            Quantity::PenalizedPhi => "penalized_phi",
            Quantity::Lipschitz => "lipschitz",
            Quantity::Anchored => "anchored",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPlan {
    pub n_samples: u64,
    pub master_seed: u64,
    pub quantity: Quantity,
    pub spec: CylinderSpec,
    pub dist: TwoPointDist,
    /// Required for the penalized quantity, ignored otherwise.
    pub params: Option<PenaltyParams>,
}

impl MonteCarloPlan {
    pub fn new(quantity: Quantity, spec: CylinderSpec, dist: TwoPointDist, n_samples: u64, master_seed: u64) -> Self {
        MonteCarloPlan {
            n_samples,
            master_seed,
            quantity,
            spec,
            dist,
            params: None,
        }
    }

    pub fn with_params(mut self, params: PenaltyParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return domain(format!("n_samples must be at least 2, got {}", self.n_samples));
        }
        self.spec.validate()?;
        self.dist.validate()?;
        if self.quantity == Quantity::PenalizedPhi {
            match &self.params {
                None => return domain("the penalized quantity needs penalty parameters"),
                Some(p) => p.check_spec(&self.spec)?,
            }
            if self.spec.n < 2 {
                return domain("the penalized quantity needs n >= 2");
            }
        }
        Ok(())
    }
}

/// Sample mean and variance with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr_of_mean: f64,
    pub stderr_of_variance: f64,
    pub n_samples: u64,
    pub master_seed: u64,
}

impl Estimate {
    /// Two-pass unbiased variance; its standard error comes from the sample
    /// fourth central moment.
    pub fn from_samples(xs: &[f64], master_seed: u64) -> Estimate {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        let variance = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
        let m4 = m4 / n;
        let var_of_var = if xs.len() > 1 {
            (m4 - variance * variance * (n - 3.0) / (n - 1.0)) / n
        } else {
            0.0
        };
        Estimate {
            mean,
            variance,
            stderr_of_mean: (variance / n).sqrt(),
            stderr_of_variance: var_of_var.max(0.0).sqrt(),
            n_samples: xs.len() as u64,
            master_seed,
        }
    }
}

/// Lattices shared by all workers of one plan.
pub(crate) struct Context<'p> {
    pub plan: &'p MonteCarloPlan,
    pub lattice: LatticeIndex,
    pub slab: Option<LatticeIndex>,
}

impl<'p> Context<'p> {
    pub fn new(plan: &'p MonteCarloPlan) -> Result<Self> {
        plan.validate()?;
        let lattice = LatticeIndex::new(plan.spec)?;
        let slab = match (&plan.quantity, &plan.params) {
            (Quantity::PenalizedPhi, Some(p)) => Some(slab_lattice(&plan.spec, p.slab_height)?),
            _ => None,
        };
        let ctx = Context { plan, lattice, slab };
        Sampler::new(&ctx)?;
        Ok(ctx)
    }

    /// Runs `f` on every sample index in parallel, collecting in index order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut Sampler<'_>, u64) -> Result<T> + Sync,
    {
        (0..self.plan.n_samples)
            .into_par_iter()
            .map_init(|| Sampler::new(self).expect("checked when the context was built"), |s, i| f(s, i))
            .collect()
    }
}

/// Per-sample derivatives `D_j f = f(bit j high) - f(bit j low)`.
pub(crate) struct SampleDerivatives {
    /// Whether bit `j` currently takes its low value.
    pub low: Vec<bool>,
    pub diffs: Vec<f64>,
    /// Number of leading bits that are edges (or vertices); the rest are
    /// penalty bits.
    pub primary_bits: usize,
    /// The minimal cut behind `value`, for flow quantities.
    pub cut: Option<Vec<EdgeId>>,
}

/// Per-thread solvers.
pub(crate) struct Sampler<'a> {
    pub ctx: &'a Context<'a>,
    pub flow: LatticeFlow<'a>,
    pub sliced: Option<SlicedFlows<'a>>,
}

impl<'a> Sampler<'a> {
    fn new(ctx: &'a Context<'a>) -> Result<Self> {
        let flow = match ctx.plan.quantity {
            Quantity::Anchored => LatticeFlow::anchored(&ctx.lattice)?,
            _ => LatticeFlow::bottom_top(&ctx.lattice),
        };
        let sliced = match &ctx.slab {
            Some(slab) => Some(SlicedFlows::new(&ctx.lattice, slab)?),
            None => None,
        };
        Ok(Sampler { ctx, flow, sliced })
    }

    pub fn plan(&self) -> &MonteCarloPlan {
        self.ctx.plan
    }

    pub fn field(&self, i: u64) -> CapacityField {
        sample_field(&self.ctx.lattice, self.plan().dist, self.plan().master_seed, i)
    }

    pub fn weights(&self, i: u64) -> VertexWeightField {
        sample_vertex_weights(&self.ctx.lattice, self.plan().dist, self.plan().master_seed, i)
    }

    pub fn profile(&self, i: u64) -> Result<PenaltyProfile> {
        let plan = self.plan();
        let params = plan.params.as_ref().expect("validated plan");
        penalty_profile(params, &plan.spec, &plan.dist, plan.master_seed, i)
    }

    pub fn penalized(&mut self, field: &CapacityField, profile: &PenaltyProfile) -> Result<PenalizedMinimum> {
        let params = self.ctx.plan.params.as_ref().expect("validated plan");
        let sliced = self.sliced.as_mut().expect("penalized plan has a slab solver");
        penalized_minimum_with(sliced, &field.values, profile, params)
    }

    /// The plan's quantity on sample `i`.
    pub fn value(&mut self, i: u64) -> Result<f64> {
        match self.plan().quantity {
            Quantity::Phi | Quantity::Anchored => {
                let field = self.field(i);
                Ok(self.flow.solve(&field.values) as f64)
            }
            Quantity::PenalizedPhi => {
                let field = self.field(i);
                let profile = self.profile(i)?;
                Ok(self.penalized(&field, &profile)?.phi_tilde)
            }
            Quantity::Lipschitz => Ok(solve_lipschitz(&self.ctx.lattice, &self.weights(i))?.0 as f64),
        }
    }

    /// Exact conditional derivatives of every bit on sample `i`.
    pub fn derivatives(&mut self, i: u64) -> Result<SampleDerivatives> {
        let dist = self.plan().dist;
        let (a, b) = (dist.low(), dist.high());
        match self.plan().quantity {
            Quantity::Phi | Quantity::Anchored => {
                let field = self.field(i);
                self.flow.solve(&field.values);
                let diffs = self.flow.flip_differences(a, b).into_iter().map(|d| d as f64).collect();
                let low: Vec<bool> = field.values.iter().map(|&c| c == a).collect();
                Ok(SampleDerivatives {
                    primary_bits: low.len(),
                    low,
                    diffs,
                    cut: Some(self.flow.canonical_cut().edges),
                })
            }
            Quantity::Lipschitz => {
                let mut weights = self.weights(i);
                let lattice = &self.ctx.lattice;
                let value = solve_lipschitz(lattice, &weights)?.0;
                let low: Vec<bool> = weights.weights.iter().map(|&w| w == a).collect();
                let mut diffs = Vec::with_capacity(low.len());
                for v in 0..low.len() {
                    let other = if low[v] { b } else { a };
                    weights.weights[v] = other;
                    let flipped = solve_lipschitz(lattice, &weights)?.0;
                    weights.weights[v] = if low[v] { a } else { b };
                    let d = if low[v] { flipped - value } else { value - flipped };
                    diffs.push(d as f64);
                }
                Ok(SampleDerivatives {
                    primary_bits: low.len(),
                    low,
                    diffs,
                    cut: None,
                })
            }
            Quantity::PenalizedPhi => {
                let field = self.field(i);
                let profile = self.profile(i)?;
                let (min, mut low, mut diffs) = self.penalized_derivatives(&field, &profile)?;
                let primary_bits = low.len();
                let params = self.plan().params.expect("validated plan");
                let spec = self.plan().spec;
                let phi_at = |i0: i64| -> f64 {
                    let y = profile_values(&params, spec.d, spec.n, spec.height, i0);
                    params
                        .indices(spec.height)
                        .zip(&min.x)
                        .map(|(i, &x)| x as f64 + slab_penalty(&y, i))
                        .fold(f64::INFINITY, f64::min)
                };
                for &z in &profile.z_draws {
                    let (hi, lo) = if z < 0 {
                        (profile.i0 + 2, profile.i0)
                    } else {
                        (profile.i0, profile.i0 - 2)
                    };
                    low.push(z < 0);
                    diffs.push(phi_at(hi) - phi_at(lo));
                }
                Ok(SampleDerivatives {
                    low,
                    diffs,
                    primary_bits,
                    cut: Some(min.cut.edges),
                })
            }
        }
    }

    /// `D_e` of the penalized minimum for every edge, from per-slab flip
    /// differences: only slabs containing `e` change when `t_e` does.
    fn penalized_derivatives(
        &mut self,
        field: &CapacityField,
        profile: &PenaltyProfile,
    ) -> Result<(PenalizedMinimum, Vec<bool>, Vec<f64>)> {
        let min = self.penalized(field, profile)?;
        let params = self.plan().params.expect("validated plan");
        let dist = self.plan().dist;
        let (a, b) = (dist.low(), dist.high());
        let ctx = self.ctx;
        let lattice = &ctx.lattice;
        let height = lattice.spec().height;
        let h = params.slab_height;
        let block = lattice.layer_stride();
        let horiz = lattice.horizontal_per_layer();
        let first = params.min_index;
        let last = height - h;
        let sliced = self.sliced.as_mut().expect("penalized plan has a slab solver");
        let mut slab_diffs = Vec::with_capacity(last + 1 - first);
        for i in first..=last {
            sliced.solve(&field.values, i)?;
            slab_diffs.push(sliced.flip_differences(a, b));
        }
        let totals: Vec<f64> = (first..=last).map(|i| min.x[i - first] as f64 + slab_penalty(&profile.y, i)).collect();
        let k = totals.len();
        let mut prefix = vec![f64::INFINITY; k + 1];
        let mut suffix = vec![f64::INFINITY; k + 1];
        for j in 0..k {
            prefix[j + 1] = prefix[j].min(totals[j]);
            suffix[k - 1 - j] = suffix[k - j].min(totals[k - 1 - j]);
        }
        let mut low = Vec::with_capacity(field.values.len());
        let mut diffs = Vec::with_capacity(field.values.len());
        for (e, &c) in field.values.iter().enumerate() {
            let layer = e / block;
            let vertical = e % block >= horiz;
            let lo_slab = (layer + usize::from(vertical)).saturating_sub(h).max(first);
            let hi_slab = layer.min(last);
            low.push(c == a);
            if lo_slab > hi_slab {
                diffs.push(0.0);
                continue;
            }
            let (j_lo, j_hi) = (lo_slab - first, hi_slab - first);
            let outside = prefix[j_lo].min(suffix[j_hi + 1]);
            let (mut up, mut down) = (outside, outside);
            for j in j_lo..=j_hi {
                let d = slab_diffs[j][e - (j + first) * block] as f64;
                let x = totals[j];
                let (hi_total, lo_total) = if c == a { (x + d, x) } else { (x, x - d) };
                up = up.min(hi_total);
                down = down.min(lo_total);
            }
            diffs.push(up - down);
        }
        Ok((min, low, diffs))
    }
}

pub fn estimate_variance(plan: &MonteCarloPlan) -> Result<Estimate> {
    let ctx = Context::new(plan)?;
    let values = ctx.run(|s, i| s.value(i))?;
    Ok(Estimate::from_samples(&values, plan.master_seed))
}

/// Largest vertical extent of the canonical minimum cut over `samples`
/// pilot fields, drawn from a stream independent of the main samples.
pub fn pilot_max_extent(spec: &CylinderSpec, dist: TwoPointDist, seed: u64, samples: u64) -> Result<usize> {
    let lattice = LatticeIndex::new(*spec)?;
    let extents: Vec<usize> = (0..samples)
        .into_par_iter()
        .map_init(
            || LatticeFlow::bottom_top(&lattice),
            |flow, i| {
                let field = sample_field_for(&lattice, dist, seed, i, Purpose::Pilot);
                flow.solve(&field.values);
                flow.canonical_cut().extent()
            },
        )
        .collect();
    Ok(extents.into_iter().max().unwrap_or(0))
}

/// Twice the pilot extent, clamped to `[1, H]`.
pub fn default_slab_height(spec: &CylinderSpec, dist: TwoPointDist, seed: u64, samples: u64) -> Result<usize> {
    Ok((2 * pilot_max_extent(spec, dist, seed, samples)?).clamp(1, spec.height))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: usize,
    pub height: usize,
    pub estimate: Estimate,
    /// `Var * ln n / n^{d-1}`.
    pub scaled: f64,
    pub scaled_stderr: f64,
}

/// Variance of the flow over an `n` sweep with `H = ceil(aspect * n)`.
pub fn superconcentration_trend(
    d: usize,
    ns: &[usize],
    aspect: f64,
    dist: TwoPointDist,
    n_samples: u64,
    master_seed: u64,
) -> Result<Vec<TrendRow>> {
    if !(aspect > 0.0) {
        return domain(format!("aspect ratio must be positive, got {aspect}"));
    }
    ns.iter()
        .map(|&n| {
            if n < 2 {
                return domain(format!("trend needs n >= 2, got {n}"));
            }
            let height = (aspect * n as f64).ceil() as usize;
            let spec = CylinderSpec::new(d, n, height)?;
            let estimate = estimate_variance(&MonteCarloPlan::new(Quantity::Phi, spec, dist, n_samples, master_seed))?;
            let scale = (n as f64).ln() / (n as f64).powi(d as i32 - 1);
            Ok(TrendRow {
                n,
                height,
                scaled: estimate.variance * scale,
                scaled_stderr: estimate.stderr_of_variance * scale,
                estimate,
            })
        })
        .collect()
}

/// `Var(t_e)` as a float.
pub(crate) fn var_te(dist: &TwoPointDist) -> f64 {
    dist.variance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{config_table, EnumerationGuard, OracleQuantity};
    use num_traits::ToPrimitive;

    pub(crate) fn spec(d: usize, n: usize, h: usize) -> CylinderSpec {
        CylinderSpec::new(d, n, h).unwrap()
    }

    pub(crate) fn dist(a: u64, b: u64, p: u64, q: u64) -> TwoPointDist {
        TwoPointDist::new(a, b, p, q).unwrap()
    }

    #[test]
    fn estimate_formulas() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(e.mean, 2.5);
        assert!((e.variance - 5.0 / 3.0).abs() < 1e-12);
        let c = Estimate::from_samples(&[7.0; 10], 0);
        assert_eq!((c.variance, c.stderr_of_variance), (0.0, 0.0));
    }

    #[test]
    fn degenerate_field_has_zero_variance() {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 3, 4), dist(1, 2, 1, 1), 50, 3);
        assert_eq!(estimate_variance(&plan).unwrap().variance, 0.0);
        let plan = MonteCarloPlan::new(Quantity::Lipschitz, spec(2, 2, 2), dist(1, 2, 0, 1), 2, 3);
        assert_eq!(estimate_variance(&plan).unwrap().variance, 0.0);
    }

    #[test]
    fn single_edge_bernoulli_variance() {
        let d = dist(1, 3, 1, 4);
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 0, 1), d, 20_000, 11);
        let e = estimate_variance(&plan).unwrap();
        assert!((e.variance - d.variance()).abs() <= 4.0 * e.stderr_of_variance);
        assert!((e.mean - d.mean()).abs() <= 4.0 * e.stderr_of_mean);
    }

    #[test]
    fn tiny_instance_matches_oracle() {
        let g = EnumerationGuard::default();
        for (q, oq) in [
            (Quantity::Phi, OracleQuantity::Phi),
            (Quantity::Anchored, OracleQuantity::Anchored),
            (Quantity::Lipschitz, OracleQuantity::Lipschitz),
        ] {
            let (s, d) = (spec(2, 1, 2), dist(1, 2, 1, 2));
            let exact = config_table(&s, d, oq, &g).unwrap().moments().unwrap();
            let e = estimate_variance(&MonteCarloPlan::new(q, s, d, 20_000, 5)).unwrap();
            let v = exact.variance.to_f64().unwrap();
            assert!((e.variance - v).abs() <= 4.0 * e.stderr_of_variance, "{q}: {} vs {v}", e.variance);
        }
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 4, 6), dist(1, 2, 1, 2), 200, 9);
        let a = estimate_variance(&plan).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_variance(&plan)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn penalized_plan_needs_params() {
        let plan = MonteCarloPlan::new(Quantity::PenalizedPhi, spec(2, 4, 8), dist(1, 2, 1, 2), 10, 1);
        assert!(estimate_variance(&plan).is_err());
        let plan = plan.with_params(PenaltyParams::new(0.1, 0.2, 4).unwrap());
        assert!(estimate_variance(&plan).is_ok());
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 4, 8), dist(1, 2, 1, 2), 1, 1);
        assert!(estimate_variance(&plan).is_err());
    }

    #[test]
    fn penalized_derivatives_match_recomputation() {
        let s = spec(2, 4, 8);
        let d = dist(1, 3, 1, 2);
        let params = PenaltyParams::new(0.1, 0.2, 4).unwrap();
        let plan = MonteCarloPlan::new(Quantity::PenalizedPhi, s, d, 4, 21).with_params(params.clone());
        let ctx = Context::new(&plan).unwrap();
        let mut sampler = Sampler::new(&ctx).unwrap();
        for i in 0..4 {
            let der = sampler.derivatives(i).unwrap();
            let field = sampler.field(i);
            let profile = sampler.profile(i).unwrap();
            for e in 0..field.values.len() {
                let mut hi = field.clone();
                hi.values[e] = 3;
                let mut lo = field.clone();
                lo.values[e] = 1;
                let up = sampler.penalized(&hi, &profile).unwrap().phi_tilde;
                let down = sampler.penalized(&lo, &profile).unwrap().phi_tilde;
                assert!((der.diffs[e] - (up - down)).abs() < 1e-9, "sample {i} edge {e}");
            }
            for (j, &z) in profile.z_draws.iter().enumerate() {
                let shift = |zj: i64| profile.i0 - z as i64 + zj;
                let at = |i0: i64| {
                    let p = PenaltyProfile {
                        i0,
                        y: profile_values(&params, 2, 4, 8, i0),
                        z_draws: profile.z_draws.clone(),
                        s_m: 0,
                    };
                    sampler_value(&ctx, &field, &p)
                };
                let expect = at(shift(1)) - at(shift(-1));
                assert!((der.diffs[field.values.len() + j] - expect).abs() < 1e-9);
            }
        }
    }

    fn sampler_value(ctx: &Context<'_>, field: &CapacityField, p: &PenaltyProfile) -> f64 {
        let mut s = Sampler::new(ctx).unwrap();
        s.penalized(field, p).unwrap().phi_tilde
    }

    #[test]
    fn trend_rows() {
        let rows = superconcentration_trend(2, &[2, 4], 2.0, dist(1, 2, 1, 2), 50, 1).unwrap();
        assert_eq!(rows.iter().map(|r| r.height).collect::<Vec<_>>(), vec![4, 8]);
        assert!(rows.iter().all(|r| r.scaled >= 0.0));
    }

    #[test]
    fn pilot_slab_height_is_clamped() {
        let s = spec(2, 4, 16);
        let h = default_slab_height(&s, dist(1, 2, 1, 2), 3, 20).unwrap();
        assert!((2..=16).contains(&h) && h % 2 == 0);
    }
}
