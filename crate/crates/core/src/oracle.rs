//! Ground truth on tiny instances: full enumeration of capacity
//! configurations in exact rational arithmetic, and exhaustive minimum-cut
//! enumeration.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::TwoPointDist;
use crate::error::{domain, Error, Result};
use crate::flow::{CutSet, LatticeFlow};
use crate::lattice::{CylinderSpec, EdgeId, LatticeIndex, VertexId};
use crate::lipschitz::{solve_lipschitz, VertexWeightField};
use crate::network::Cap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationGuard {
    pub max_configs: u64,
    /// Largest edge count accepted by [`enumerate_min_cuts`].
    pub max_cut_edges: usize,
}

impl Default for EnumerationGuard {
    fn default() -> Self {
        EnumerationGuard {
            max_configs: 1 << 24,
            max_cut_edges: 24,
        }
    }
}

impl EnumerationGuard {
    fn check_bits(&self, bits: usize, copies: u32) -> Result<()> {
        let needed = (bits as u32).checked_mul(copies).filter(|&b| b < 64).map(|b| 1u64 << b);
        match needed {
            Some(c) if c <= self.max_configs => Ok(()),
            _ => Err(Error::Guard(format!(
                "enumeration over {}^{bits} configurations exceeds the limit {}",
                1u64 << copies,
                self.max_configs
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleQuantity {
    /// Bottom-to-top flow; one bit per edge.
    Phi,
    /// Anchored flow; one bit per edge.
    Anchored,
    /// Lipschitz minimal weight; one bit per vertex.
    Lipschitz,
}

/// `f` on every configuration. Bit `i` of the index set means variable `i`
/// takes the low value `a`.
#[derive(Clone, Debug)]
pub struct ConfigTable {
    pub bits: usize,
    pub values: Vec<Cap>,
    /// Canonical minimum cut per configuration, as an edge bitmask (flows only).
    pub cut_masks: Option<Vec<u32>>,
    pub dist: TwoPointDist,
}

fn edge_caps(mask: usize, m: usize, dist: &TwoPointDist, caps: &mut [Cap]) {
    for (e, c) in caps.iter_mut().enumerate().take(m) {
        *c = if mask >> e & 1 == 1 { dist.low() } else { dist.high() };
    }
}

pub fn config_table(
    spec: &CylinderSpec,
    dist: TwoPointDist,
    quantity: OracleQuantity,
    guard: &EnumerationGuard,
) -> Result<ConfigTable> {
    let lattice = LatticeIndex::new(*spec)?;
    match quantity {
        OracleQuantity::Phi | OracleQuantity::Anchored => {
            let m = lattice.num_edges();
            guard.check_bits(m, 1)?;
            let (sources, sinks) = match quantity {
                OracleQuantity::Phi => crate::lattice::boundary_sets(spec),
                _ => crate::flow::anchored_terminals(&lattice)?,
            };
            LatticeFlow::new(&lattice, &sources, &sinks)?;
            let size = 1usize << m;
            let mut values = vec![0; size];
            let mut cuts = vec![0u32; size];
            values
                .par_chunks_mut(1024)
                .zip(cuts.par_chunks_mut(1024))
                .enumerate()
                .for_each_init(
                    || {
                        (
                            LatticeFlow::new(&lattice, &sources, &sinks).expect("checked above"),
                            vec![0; m],
                        )
                    },
                    |(solver, caps), (chunk, (vals, cut))| {
                        for (k, (v, c)) in vals.iter_mut().zip(cut.iter_mut()).enumerate() {
                            edge_caps(chunk * 1024 + k, m, &dist, caps);
                            *v = solver.solve(caps);
                            *c = solver.canonical_cut().edges.iter().fold(0, |acc, &e| acc | 1 << e);
                        }
                    },
                );
            Ok(ConfigTable {
                bits: m,
                values,
                cut_masks: Some(cuts),
                dist,
            })
        }
        OracleQuantity::Lipschitz => {
            let nv = lattice.num_vertices();
            guard.check_bits(nv, 1)?;
            let values = (0..1usize << nv)
                .into_par_iter()
                .map(|mask| {
                    let weights = (0..nv)
                        .map(|v| if mask >> v & 1 == 1 { dist.low() } else { dist.high() })
                        .collect();
                    let field = VertexWeightField {
                        spec: *spec,
                        dist,
                        seed: 0,
                        sample_index: 0,
                        weights,
                    };
                    solve_lipschitz(&lattice, &field).map(|(v, _)| v)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConfigTable {
                bits: nv,
                values,
                cut_masks: None,
                dist,
            })
        }
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(x: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMoments {
    #[serde(with = "rational_string")]
    pub mean: BigRational,
    #[serde(with = "rational_string")]
    pub variance: BigRational,
}

/// Exact rationals serialized as `"p/q"` (or `"p"` when integral).
pub mod rational_string {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("not a rational: {s}")))
    }
}

impl ConfigTable {
    fn p(&self) -> BigRational {
        ratio(self.dist.p_num, self.dist.p_den)
    }

    /// Probability weight of a configuration with `k` low bits.
    fn weights_by_popcount(&self) -> Vec<BigRational> {
        let p = self.p();
        let q = BigRational::one() - &p;
        (0..=self.bits)
            .map(|k| num_traits::pow(p.clone(), k) * num_traits::pow(q.clone(), self.bits - k))
            .collect()
    }

    fn derivative(&self, x: usize, i: usize) -> Cap {
        self.values[x & !(1 << i)] - self.values[x | (1 << i)]
    }

    /// Bitmask of variables whose switch from `a` to `b` raises `f`.
    pub fn pivotal_masks(&self) -> Vec<u32> {
        (0..self.values.len())
            .into_par_iter()
            .map(|x| (0..self.bits).filter(|&i| self.derivative(x, i) > 0).fold(0u32, |m, i| m | 1 << i))
            .collect()
    }

    pub fn moments(&self) -> Result<ExactMoments> {
        let overflow = || Error::Capacity("moment accumulation overflowed i128".into());
        let mut s1 = vec![0i128; self.bits + 1];
        let mut s2 = vec![0i128; self.bits + 1];
        for (x, &v) in self.values.iter().enumerate() {
            let k = x.count_ones() as usize;
            let v = v as i128;
            s1[k] = s1[k].checked_add(v).ok_or_else(overflow)?;
            s2[k] = s2[k].checked_add(v.checked_mul(v).ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
        let w = self.weights_by_popcount();
        let mut mean = BigRational::zero();
        let mut second = BigRational::zero();
        for k in 0..=self.bits {
            mean += &w[k] * int(s1[k]);
            second += &w[k] * int(s2[k]);
        }
        let variance = second - &mean * &mean;
        Ok(ExactMoments { mean, variance })
    }

    /// Per variable: `(E|D_i f|, E[(D_i f)^2])` with `D_i f = f(b) - f(a)`.
    pub fn derivative_moments(&self) -> Vec<(BigRational, BigRational)> {
        let w = self.weights_by_popcount();
        (0..self.bits)
            .map(|i| {
                let mut abs = vec![0i128; self.bits + 1];
                let mut sq = vec![0i128; self.bits + 1];
                for x in 0..self.values.len() {
                    let d = self.derivative(x, i) as i128;
                    let k = x.count_ones() as usize;
                    abs[k] += d.abs();
                    sq[k] += d * d;
                }
                let mut l1 = BigRational::zero();
                let mut l2 = BigRational::zero();
                for k in 0..=self.bits {
                    l1 += &w[k] * int(abs[k]);
                    l2 += &w[k] * int(sq[k]);
                }
                (l1, l2)
            })
            .collect()
    }

    /// `sum_i E[(f(X) - f(X^{(i)}))_-^2] = p q sum_i E[(D_i f)^2]`.
    pub fn efron_stein(&self) -> BigRational {
        let p = self.p();
        let q = BigRational::one() - &p;
        let total: BigRational = self.derivative_moments().into_iter().map(|(_, l2)| l2).sum();
        p * q * total
    }

    /// `Var(t_e) sum_e P(e in canonical cut, t_e = b)^2`.
    pub fn newman_piza(&self) -> Result<BigRational> {
        let cuts = self
            .cut_masks
            .as_ref()
            .ok_or_else(|| Error::Domain("quantity has no cut sets".into()))?;
        let w = self.weights_by_popcount();
        let mut total = BigRational::zero();
        for e in 0..self.bits {
            let mut counts = vec![0i128; self.bits + 1];
            for (x, &c) in cuts.iter().enumerate() {
                if c >> e & 1 == 1 && x >> e & 1 == 0 {
                    counts[x.count_ones() as usize] += 1;
                }
            }
            let pr: BigRational = (0..=self.bits).map(|k| &w[k] * int(counts[k])).sum();
            total += &pr * &pr;
        }
        Ok(self.var_te() * total)
    }

    /// `Var(t_e) = (b-a)^2 p (1-p)`.
    pub fn var_te(&self) -> BigRational {
        let p = self.p();
        let q = BigRational::one() - &p;
        let w = int((self.dist.b - self.dist.a) as i128);
        &w * &w * p * q
    }

    /// Pair statistics over `(X, Y)`: `acc[k][alpha]` sums `score(x, y)` over
    /// pairs with `k` differing bits and `alpha` bits low in both.
    fn pair_sums<F>(&self, guard: &EnumerationGuard, score: F) -> Result<Vec<Vec<i128>>>
    where
        F: Fn(usize, usize) -> i128 + Sync,
    {
        guard.check_bits(self.bits, 2)?;
        let n = self.bits;
        let size = self.values.len();
        let acc = (0..size)
            .into_par_iter()
            .fold(
                || vec![vec![0i128; n + 1]; n + 1],
                |mut acc, x| {
                    for y in 0..size {
                        let s = score(x, y);
                        if s != 0 {
                            let k = (x ^ y).count_ones() as usize;
                            let alpha = (x & y).count_ones() as usize;
                            acc[k][alpha] += s;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![vec![0i128; n + 1]; n + 1],
                |mut a, b| {
                    for (ra, rb) in a.iter_mut().zip(b) {
                        for (x, y) in ra.iter_mut().zip(rb) {
                            *x += y;
                        }
                    }
                    a
                },
            );
        Ok(acc)
    }

    /// `sum acc[k][alpha] * P-weight * integral_0^1 t^k (1-qt)^alpha (1-pt)^beta dt`.
    fn integrate_pairs(&self, acc: &[Vec<i128>]) -> BigRational {
        let n = self.bits;
        let p = self.p();
        let q = BigRational::one() - &p;
        let mut total = BigRational::zero();
        for (k, row) in acc.iter().enumerate() {
            for (alpha, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let beta = n - k - alpha;
                let weight = num_traits::pow(p.clone(), alpha)
                    * num_traits::pow(q.clone(), beta)
                    * num_traits::pow(&p * &q, k);
                let poly = time_polynomial(k, alpha, beta, &p, &q);
                let integral: BigRational = poly
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c / int(j as i128 + 1))
                    .sum();
                total += int(c) * weight * integral;
            }
        }
        total
    }

    fn evaluate_pairs(&self, acc: &[Vec<i128>], t: &BigRational) -> BigRational {
        let n = self.bits;
        let p = self.p();
        let q = BigRational::one() - &p;
        let mut total = BigRational::zero();
        for (k, row) in acc.iter().enumerate() {
            for (alpha, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let beta = n - k - alpha;
                let weight = num_traits::pow(p.clone(), alpha)
                    * num_traits::pow(q.clone(), beta)
                    * num_traits::pow(&p * &q, k);
                let poly = time_polynomial(k, alpha, beta, &p, &q);
                let mut value = BigRational::zero();
                for c in poly.iter().rev() {
                    value = value * t + c;
                }
                total += int(c) * weight * value;
            }
        }
        total
    }

    /// `Var(t_e) * integral_0^1 E|P_0 ∩ P_t| dt`.
    pub fn chaos_integral(&self, guard: &EnumerationGuard) -> Result<BigRational> {
        let piv = self.pivotal_masks();
        let acc = self.pair_sums(guard, |x, y| (piv[x] & piv[y]).count_ones() as i128)?;
        Ok(self.var_te() * self.integrate_pairs(&acc))
    }

    /// `p q * integral_0^1 sum_i E[D_i f(X) D_i f(X^t)] dt`, equal to the
    /// variance for every `f`.
    pub fn derivative_chaos_integral(&self, guard: &EnumerationGuard) -> Result<BigRational> {
        let acc = self.pair_sums(guard, |x, y| {
            (0..self.bits)
                .map(|i| self.derivative(x, i) as i128 * self.derivative(y, i) as i128)
                .sum()
        })?;
        let p = self.p();
        let q = BigRational::one() - &p;
        Ok(p * q * self.integrate_pairs(&acc))
    }

    /// `E|P_0 ∩ P_t|` at a fixed `t`.
    pub fn overlap_at(&self, t: &BigRational, guard: &EnumerationGuard) -> Result<BigRational> {
        if t.is_negative() || *t > BigRational::one() {
            return domain(format!("t = {t} outside [0,1]"));
        }
        let piv = self.pivotal_masks();
        let acc = self.pair_sums(guard, |x, y| (piv[x] & piv[y]).count_ones() as i128)?;
        Ok(self.evaluate_pairs(&acc, t))
    }
}

/// Coefficients of `t^k (1 - q t)^alpha (1 - p t)^beta`.
fn time_polynomial(k: usize, alpha: usize, beta: usize, p: &BigRational, q: &BigRational) -> Vec<BigRational> {
    let mut poly = vec![BigRational::zero(); k];
    poly.push(BigRational::one());
    let times_linear = |poly: Vec<BigRational>, c: &BigRational| {
        let mut out = vec![BigRational::zero(); poly.len() + 1];
        for (j, a) in poly.into_iter().enumerate() {
            out[j + 1] -= &a * c;
            out[j] += a;
        }
        out
    };
    for _ in 0..alpha {
        poly = times_linear(poly, q);
    }
    for _ in 0..beta {
        poly = times_linear(poly, p);
    }
    poly
}

pub fn exact_moments(
    spec: &CylinderSpec,
    dist: TwoPointDist,
    quantity: OracleQuantity,
    guard: &EnumerationGuard,
) -> Result<ExactMoments> {
    config_table(spec, dist, quantity, guard)?.moments()
}

pub fn exact_chaos_integral(
    spec: &CylinderSpec,
    dist: TwoPointDist,
    quantity: OracleQuantity,
    guard: &EnumerationGuard,
) -> Result<BigRational> {
    guard.check_bits(LatticeIndex::new(*spec)?.num_edges(), 2)?;
    config_table(spec, dist, quantity, guard)?.chaos_integral(guard)
}

/// All minimum-capacity cut sets, by branch and bound over edge subsets.
pub fn enumerate_min_cuts(
    lattice: &LatticeIndex,
    capacities: &[Cap],
    sources: &[VertexId],
    sinks: &[VertexId],
    guard: &EnumerationGuard,
) -> Result<Vec<CutSet>> {
    let m = lattice.num_edges();
    if m > guard.max_cut_edges {
        return Err(Error::Guard(format!(
            "{m} edges exceed the cut enumeration limit {}",
            guard.max_cut_edges
        )));
    }
    if capacities.iter().any(|&c| c <= 0) {
        return domain("cut enumeration needs positive capacities");
    }
    let mut is_sink = vec![false; lattice.num_vertices()];
    for &t in sinks {
        is_sink[t] = true;
    }
    let connected = |in_cut: &[bool], decided: usize| {
        let mut seen = vec![false; lattice.num_vertices()];
        let mut stack: Vec<VertexId> = Vec::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            if is_sink[u] {
                return true;
            }
            for e in lattice.incident_edges(u) {
                if e >= decided || in_cut[e] {
                    continue;
                }
                let (a, b) = lattice.endpoints(e);
                let w = if a == u { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    };
    struct Search<'c> {
        best: Cap,
        found: Vec<Vec<EdgeId>>,
        in_cut: Vec<bool>,
        caps: &'c [Cap],
    }
    fn go(s: &mut Search<'_>, e: usize, cost: Cap, m: usize, connected: &dyn Fn(&[bool], usize) -> bool) {
        if cost > s.best || connected(&s.in_cut, e) {
            return;
        }
        if e == m {
            if cost < s.best {
                s.best = cost;
                s.found.clear();
            }
            s.found.push((0..m).filter(|&i| s.in_cut[i]).collect());
            return;
        }
        s.in_cut[e] = true;
        go(s, e + 1, cost + s.caps[e], m, connected);
        s.in_cut[e] = false;
        go(s, e + 1, cost, m, connected);
    }
    let mut search = Search {
        best: Cap::MAX,
        found: Vec::new(),
        in_cut: vec![false; m],
        caps: capacities,
    };
    go(&mut search, 0, 0, m, &connected);
    let mut cuts: Vec<CutSet> = search
        .found
        .into_iter()
        .map(|edges| CutSet::new(lattice, edges, capacities))
        .collect();
    cuts.sort_by(|a, b| a.edges.cmp(&b.edges));
    Ok(cuts)
}

/// Edges common to every cut in the list.
pub fn intersection(cuts: &[CutSet]) -> Vec<EdgeId> {
    match cuts.split_first() {
        None => Vec::new(),
        Some((first, rest)) => first
            .edges
            .iter()
            .copied()
            .filter(|&e| rest.iter().all(|c| c.contains(e)))
            .collect(),
    }
}

/// Flow quantities of one field, derived from minimum-cut enumeration only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub value: Cap,
    /// The minimum cut with the smallest source side.
    pub canonical_cut: Vec<EdgeId>,
    pub essential: Vec<EdgeId>,
    /// Edges whose switch from `low` to `high` raises the minimum.
    pub pivotal: Vec<EdgeId>,
    pub min_cut_count: usize,
}

pub fn ground_truth(
    lattice: &LatticeIndex,
    capacities: &[Cap],
    sources: &[VertexId],
    sinks: &[VertexId],
    low: Cap,
    high: Cap,
    guard: &EnumerationGuard,
) -> Result<GroundTruth> {
    let cuts = enumerate_min_cuts(lattice, capacities, sources, sinks, guard)?;
    let value = cuts.first().map_or(0, |c| c.capacity);
    let source_side = |cut: &CutSet| {
        let mut seen = vec![false; lattice.num_vertices()];
        let mut stack: Vec<VertexId> = sources.to_vec();
        for &s in sources {
            seen[s] = true;
        }
        while let Some(u) = stack.pop() {
            for e in lattice.incident_edges(u) {
                if cut.contains(e) {
                    continue;
                }
                let (a, b) = lattice.endpoints(e);
                let w = if a == u { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().filter(|&&x| x).count()
    };
    let canonical_cut = cuts
        .iter()
        .min_by_key(|c| source_side(c))
        .map(|c| c.edges.clone())
        .unwrap_or_default();
    let mut caps = capacities.to_vec();
    let mut pivotal = Vec::new();
    for e in 0..caps.len() {
        let old = caps[e];
        caps[e] = high;
        let up = enumerate_min_cuts(lattice, &caps, sources, sinks, guard)?[0].capacity;
        caps[e] = low;
        let down = enumerate_min_cuts(lattice, &caps, sources, sinks, guard)?[0].capacity;
        caps[e] = old;
        if up > down {
            pivotal.push(e);
        }
    }
    Ok(GroundTruth {
        value,
        canonical_cut,
        essential: intersection(&cuts),
        pivotal,
        min_cut_count: cuts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSample {
    pub seed: u64,
    pub sample_index: u64,
    pub capacities: Vec<Cap>,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureInstance {
    pub spec: CylinderSpec,
    pub dist: TwoPointDist,
    pub moments: ExactMoments,
    /// Present when the joint enumeration fits the guard.
    #[serde(with = "optional_rational")]
    pub chaos_integral: Option<BigRational>,
    #[serde(with = "rational_string")]
    pub efron_stein: BigRational,
    #[serde(with = "rational_string")]
    pub newman_piza: BigRational,
    pub samples: Vec<FixtureSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub seed: u64,
    pub instances: Vec<FixtureInstance>,
}

mod optional_rational {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(|_| D::Error::custom(format!("not a rational: {s}"))))
            .transpose()
    }
}

/// Bottom-to-top ground truth for each instance and `samples_per_instance`
/// fields drawn from `seed`.
pub fn build_fixture(
    instances: &[(CylinderSpec, TwoPointDist)],
    seed: u64,
    samples_per_instance: u64,
    guard: &EnumerationGuard,
) -> Result<OracleFixture> {
    let instances = instances
        .iter()
        .map(|&(spec, dist)| {
            let lattice = LatticeIndex::new(spec)?;
            let table = config_table(&spec, dist, OracleQuantity::Phi, guard)?;
            let chaos_integral = match table.chaos_integral(guard) {
                Ok(x) => Some(x),
                Err(Error::Guard(_)) => None,
                Err(e) => return Err(e),
            };
            let (sources, sinks) = crate::lattice::boundary_sets(&spec);
            let samples = (0..samples_per_instance)
                .map(|i| {
                    let field = crate::capacity::sample_field(&lattice, dist, seed, i);
                    let truth =
                        ground_truth(&lattice, &field.values, &sources, &sinks, dist.low(), dist.high(), guard)?;
                    Ok(FixtureSample {
                        seed,
                        sample_index: i,
                        capacities: field.values,
                        truth,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FixtureInstance {
                spec,
                dist,
                moments: table.moments()?,
                chaos_integral,
                efron_stein: table.efron_stein(),
                newman_piza: table.newman_piza()?,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleFixture { seed, instances })
}
