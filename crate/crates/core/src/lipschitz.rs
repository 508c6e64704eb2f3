//! Minimal total vertex weight over 1-Lipschitz height functions, solved
//! exactly by a layered min-cut reduction, with a brute-force oracle.

use serde::{Deserialize, Serialize};

use crate::capacity::TwoPointDist;
use crate::error::{domain, Error, Result};
use crate::lattice::{CylinderSpec, LatticeIndex};
use crate::network::{Cap, NetworkBuilder};
use crate::rng::{Purpose, Stream};

/// Largest candidate count `(H+1)^{(n+1)^{d-1}}` the brute force accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexWeightField {
    pub spec: CylinderSpec,
    pub dist: TwoPointDist,
    pub seed: u64,
    pub sample_index: u64,
    /// One weight per lattice vertex, indexed like the lattice.
    pub weights: Vec<Cap>,
}

impl VertexWeightField {
    pub fn from_weights(lattice: &LatticeIndex, dist: TwoPointDist, weights: Vec<Cap>) -> Result<Self> {
        if weights.len() != lattice.num_vertices() {
            return domain(format!(
                "expected {} weights, got {}",
                lattice.num_vertices(),
                weights.len()
            ));
        }
        if weights.iter().any(|&w| !dist.contains(w)) {
            return domain("vertex weight outside {a, b}");
        }
        Ok(VertexWeightField {
            spec: lattice.spec(),
            dist,
            seed: 0,
            sample_index: 0,
            weights,
        })
    }

    #[inline]
    pub fn weight(&self, base: usize, h: usize) -> Cap {
        self.weights[h * self.spec.layer_size() + base]
    }
}

pub fn sample_vertex_weights(
    lattice: &LatticeIndex,
    dist: TwoPointDist,
    seed: u64,
    sample_index: u64,
) -> VertexWeightField {
    let mut stream = Stream::new(seed, Purpose::VertexWeight, sample_index);
    let weights = (0..lattice.num_vertices())
        .map(|_| dist.draw(stream.next_word()))
        .collect();
    VertexWeightField {
        spec: lattice.spec(),
        dist,
        seed,
        sample_index,
        weights,
    }
}

/// Height per base point, indexed by base index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LipschitzFunction {
    pub psi: Vec<usize>,
}

/// Pairs of adjacent base points `(u, v)` with `u < v`.
fn base_edges(lattice: &LatticeIndex) -> Vec<(usize, usize)> {
    let d = lattice.spec().d;
    let mut out = Vec::new();
    for u in 0..lattice.layer_vertices() {
        for axis in 0..d - 1 {
            if let Some(v) = lattice.neighbor(u, axis, true) {
                out.push((u, v));
            }
        }
    }
    out
}

fn on_base_boundary(lattice: &LatticeIndex, u: usize) -> bool {
    let n = lattice.spec().n;
    (0..lattice.spec().d - 1).any(|axis| {
        let x = lattice.coordinate(u, axis);
        x == 0 || x == n
    })
}

pub fn is_lipschitz(lattice: &LatticeIndex, psi: &LipschitzFunction) -> bool {
    psi.psi.len() == lattice.layer_vertices()
        && psi.psi.iter().all(|&h| h <= lattice.spec().height)
        && base_edges(lattice)
            .iter()
            .all(|&(u, v)| psi.psi[u].abs_diff(psi.psi[v]) <= 1)
}

pub fn lipschitz_cost(field: &VertexWeightField, psi: &LipschitzFunction) -> Cap {
    psi.psi.iter().enumerate().map(|(u, &h)| field.weight(u, h)).sum()
}

fn check_field(lattice: &LatticeIndex, field: &VertexWeightField) -> Result<()> {
    if field.spec != lattice.spec() || field.weights.len() != lattice.num_vertices() {
        return domain("vertex weights do not match the lattice");
    }
    Ok(())
}

/// Chain `s -> (u,1) -> ... -> (u,H) -> t` per base point; cutting the arc
/// into `(u,h+1)` sets `psi(u) = h`. Pinned chains get an unbounded cost
/// everywhere except at their pinned height.
fn solve_layered(
    lattice: &LatticeIndex,
    field: &VertexWeightField,
    pin: Option<usize>,
) -> Result<(Cap, LipschitzFunction)> {
    check_field(lattice, field)?;
    let spec = lattice.spec();
    let (h, nb) = (spec.height, lattice.layer_vertices());
    let inf: Cap = 1 + field.weights.iter().sum::<Cap>();
    let node = |u: usize, k: usize| u * h + (k - 1);
    let (s, t) = (nb * h, nb * h + 1);
    let mut b = NetworkBuilder::new(nb * h + 2);
    for u in 0..nb {
        let pinned = pin.filter(|_| on_base_boundary(lattice, u));
        for k in 0..=h {
            let w = match pinned {
                Some(p) if p != k => inf,
                _ => field.weight(u, k),
            };
            let from = if k == 0 { s } else { node(u, k) };
            let to = if k == h { t } else { node(u, k + 1) };
            b.add_pair(from, to, w, inf);
        }
    }
    for (u, v) in base_edges(lattice) {
        for k in 2..=h {
            b.add_pair(node(u, k), node(v, k - 1), inf, 0);
            b.add_pair(node(v, k), node(u, k - 1), inf, 0);
        }
    }
    let mut net = b.build();
    let value = net.augment(s, t);
    let side = net.reachable_from(s);
    let psi = (0..nb)
        .map(|u| (1..=h).take_while(|&k| side[node(u, k)]).count())
        .collect();
    Ok((value, LipschitzFunction { psi }))
}

/// Exact minimum and the lowest minimizing height function.
pub fn solve_lipschitz(lattice: &LatticeIndex, field: &VertexWeightField) -> Result<(Cap, LipschitzFunction)> {
    solve_layered(lattice, field, None)
}

/// Same minimization with `psi` fixed to `boundary_height` on the boundary of
/// the base.
pub fn solve_anchored_lipschitz(
    lattice: &LatticeIndex,
    field: &VertexWeightField,
    boundary_height: usize,
) -> Result<(Cap, LipschitzFunction)> {
    if boundary_height > lattice.spec().height {
        return domain(format!(
            "boundary height {boundary_height} exceeds H = {}",
            lattice.spec().height
        ));
    }
    solve_layered(lattice, field, Some(boundary_height))
}

fn brute_force(lattice: &LatticeIndex, field: &VertexWeightField, pin: Option<usize>) -> Result<Cap> {
    check_field(lattice, field)?;
    let spec = lattice.spec();
    let nb = lattice.layer_vertices();
    let choices = spec.height as u64 + 1;
    let mut candidates: u64 = 1;
    for _ in 0..nb {
        candidates = candidates.saturating_mul(choices);
    }
    if candidates > BRUTE_FORCE_LIMIT {
        return Err(Error::Guard(format!(
            "{candidates} height functions exceed the brute-force limit {BRUTE_FORCE_LIMIT}"
        )));
    }
    let lower: Vec<Vec<usize>> = (0..nb)
        .map(|u| {
            (0..spec.d - 1)
                .filter_map(|axis| lattice.neighbor(u, axis, false))
                .collect()
        })
        .collect();
    let pinned: Vec<Option<usize>> = (0..nb)
        .map(|u| pin.filter(|_| on_base_boundary(lattice, u)))
        .collect();
    let mut psi = vec![0usize; nb];
    let mut best = Cap::MAX;
    fn go(
        u: usize,
        acc: Cap,
        psi: &mut Vec<usize>,
        best: &mut Cap,
        lower: &[Vec<usize>],
        pinned: &[Option<usize>],
        field: &VertexWeightField,
    ) {
        if u == psi.len() {
            *best = (*best).min(acc);
            return;
        }
        for h in 0..=field.spec.height {
            if pinned[u].is_some_and(|p| p != h) {
                continue;
            }
            if lower[u].iter().all(|&v| psi[v].abs_diff(h) <= 1) {
                psi[u] = h;
                go(u + 1, acc + field.weight(u, h), psi, best, lower, pinned, field);
            }
        }
    }
    go(0, 0, &mut psi, &mut best, &lower, &pinned, field);
    Ok(best)
}

/// Exhaustive minimum over all height assignments.
pub fn brute_force_lipschitz(lattice: &LatticeIndex, field: &VertexWeightField) -> Result<Cap> {
    brute_force(lattice, field, None)
}

pub fn brute_force_anchored_lipschitz(
    lattice: &LatticeIndex,
    field: &VertexWeightField,
    boundary_height: usize,
) -> Result<Cap> {
    brute_force(lattice, field, Some(boundary_height))
}

/// `x_1,...,x_{d-1},psi` rows in base-index order.
pub fn psi_csv(lattice: &LatticeIndex, psi: &LipschitzFunction) -> String {
    let d = lattice.spec().d;
    let mut out: String = (1..d).map(|k| format!("x{k},")).collect();
    out.push_str("psi\n");
    for (u, &h) in psi.psi.iter().enumerate() {
        for axis in 0..d - 1 {
            out.push_str(&format!("{},", lattice.coordinate(u, axis)));
        }
        out.push_str(&format!("{h}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lattice(d: usize, n: usize, h: usize) -> LatticeIndex {
        LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap()
    }

    fn field(l: &LatticeIndex, weights: Vec<Cap>) -> VertexWeightField {
        VertexWeightField::from_weights(l, TwoPointDist::default(), weights).unwrap()
    }

    #[test]
    fn two_points_decouple() {
        let l = lattice(2, 1, 1);
        // t(0,0)=1 t(1,0)=2 t(0,1)=2 t(1,1)=1
        let f = field(&l, vec![1, 2, 2, 1]);
        let (v, psi) = solve_lipschitz(&l, &f).unwrap();
        assert_eq!(v, 2);
        assert_eq!(psi.psi, vec![0, 1]);
        assert_eq!(brute_force_lipschitz(&l, &f).unwrap(), 2);
    }

    #[test]
    fn uniform_weights() {
        let l = lattice(3, 2, 3);
        let f = field(&l, vec![1; l.num_vertices()]);
        let (v, psi) = solve_lipschitz(&l, &f).unwrap();
        assert_eq!(v, 9);
        assert!(psi.psi.iter().all(|&h| h == 0));
        let g = field(&l, vec![2; l.num_vertices()]);
        assert_eq!(brute_force_lipschitz(&l, &g).unwrap(), 18);
    }

    #[test]
    fn anchored_all_boundary() {
        let l = lattice(3, 1, 4);
        let f = sample_vertex_weights(&l, TwoPointDist::default(), 3, 1);
        let (v, psi) = solve_anchored_lipschitz(&l, &f, 2).unwrap();
        assert!(psi.psi.iter().all(|&h| h == 2));
        assert_eq!(v, (0..4).map(|u| f.weight(u, 2)).sum::<Cap>());
        assert!(solve_anchored_lipschitz(&l, &f, 5).is_err());
    }

    #[test]
    fn anchored_interior_stays_flat_on_cheap_layer() {
        let l = lattice(2, 4, 4);
        let mut w = vec![2; l.num_vertices()];
        for u in 0..5 {
            w[2 * 5 + u] = 1;
        }
        let f = field(&l, w);
        let (v, psi) = solve_anchored_lipschitz(&l, &f, 2).unwrap();
        assert_eq!(psi.psi, vec![2; 5]);
        assert_eq!(v, 5);
        assert_eq!(brute_force_anchored_lipschitz(&l, &f, 2).unwrap(), 5);
    }

    #[test]
    fn guard_refuses_large_instances() {
        let l = lattice(3, 3, 4);
        let f = sample_vertex_weights(&l, TwoPointDist::default(), 1, 0);
        assert!(matches!(brute_force_lipschitz(&l, &f), Err(Error::Guard(_))));
    }

    #[test]
    fn csv_layout() {
        let l = lattice(3, 1, 2);
        let csv = psi_csv(&l, &LipschitzFunction { psi: vec![0, 1, 1, 2] });
        assert_eq!(csv, "x1,x2,psi\n0,0,0\n1,0,1\n0,1,1\n1,1,2\n");
    }

    fn instance() -> impl Strategy<Value = (usize, usize, usize, u64)> {
        prop_oneof![
            (Just(2usize), 1usize..=5, 1usize..=3),
            (Just(3usize), 1usize..=2, 1usize..=2),
        ]
        .prop_flat_map(|(d, n, h)| (Just(d), Just(n), Just(h), any::<u64>()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn solver_matches_brute_force((d, n, h, seed) in instance()) {
            let l = lattice(d, n, h);
            let dist = TwoPointDist::new(1, 3, 1, 2).unwrap();
            let f = sample_vertex_weights(&l, dist, seed, 0);
            let (v, psi) = solve_lipschitz(&l, &f).unwrap();
            prop_assert!(is_lipschitz(&l, &psi));
            prop_assert_eq!(lipschitz_cost(&f, &psi), v);
            prop_assert_eq!(v, brute_force_lipschitz(&l, &f).unwrap());
            let pin = h / 2;
            let (va, psa) = solve_anchored_lipschitz(&l, &f, pin).unwrap();
            prop_assert!(is_lipschitz(&l, &psa));
            prop_assert_eq!(lipschitz_cost(&f, &psa), va);
            prop_assert_eq!(va, brute_force_anchored_lipschitz(&l, &f, pin).unwrap());
            prop_assert!(va >= v);
        }

        #[test]
        fn lowering_a_weight_never_raises_the_minimum((d, n, h, seed) in instance(), pick in any::<prop::sample::Index>()) {
            let l = lattice(d, n, h);
            let f = sample_vertex_weights(&l, TwoPointDist::default(), seed, 0);
            let (v, _) = solve_lipschitz(&l, &f).unwrap();
            let mut g = f.clone();
            let k = pick.index(g.weights.len());
            g.weights[k] = 1;
            prop_assert!(solve_lipschitz(&l, &g).unwrap().0 <= v);
        }
    }
}
