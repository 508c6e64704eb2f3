use serde::{Deserialize, Serialize};

use super::{Context, MonteCarloPlan, Quantity};
use crate::error::{domain, Result};
use crate::lattice::{shift_edge, EdgeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceOptions {
    /// Also estimate derivative norms by the coupled flip method.
    pub derivatives: bool,
    /// Exponents `xi` for the counts of edges with `p(e) >= n^{-xi}`.
    pub xis: Vec<f64>,
    /// Delete-a-group jackknife batches for the Talagrand error.
    pub batches: usize,
}

impl Default for InfluenceOptions {
    fn default() -> Self {
        InfluenceOptions {
            derivatives: true,
            xis: vec![0.5, 1.0, 1.5, 2.0],
            batches: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub xi: f64,
    pub threshold: f64,
    pub count: usize,
}

/// Largest `|p(e) - p(e + 2 e_d)|` over edges with a shifted partner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRegularity {
    pub max_diff: f64,
    pub argmax_edge: Option<EdgeId>,
    pub stderr_at_max: f64,
    /// Largest `|diff| - 4 stderr` over edges.
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeNorms {
    /// `||∂_e f||_1 = E|D_e f| / 2` per edge.
    pub l1: Vec<f64>,
    /// `||∂_e f||_2 = sqrt(E[(D_e f)^2]) / 2` per edge.
    pub l2: Vec<f64>,
    pub penalty_l1: Vec<f64>,
    pub penalty_l2: Vec<f64>,
    /// Per batch: sample count, then sums of `|D|` and `D^2` per bit.
    #[serde(skip)]
    pub(crate) batches: Vec<(u64, Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub quantity: Quantity,
    pub n_samples: u64,
    pub master_seed: u64,
    /// Fraction of samples with `e` in the minimal cut.
    pub hit_frequency: Vec<f64>,
    pub total_hit: f64,
    /// Winning slab counts by index, for the penalized quantity.
    pub j0_counts: Vec<u64>,
    pub thresholds: Vec<ThresholdCount>,
    pub shift: ShiftRegularity,
    pub derivatives: Option<DerivativeNorms>,
    /// `2 n^{(d-1)/2} / (n^delta ln n)`, a bound on `|D_j|` for penalty bits.
    pub penalty_derivative_bound: Option<f64>,
}

struct Record {
    cut: Vec<EdgeId>,
    j0: Option<usize>,
    diffs: Option<Vec<f64>>,
    primary: usize,
}

pub fn influence_profile(plan: &MonteCarloPlan, options: &InfluenceOptions) -> Result<InfluenceProfile> {
    if plan.quantity == Quantity::Lipschitz {
        return domain("influence profiles need a cut-based quantity");
    }
    let ctx = Context::new(plan)?;
    let records = ctx.run(|s, i| {
        if options.derivatives {
            let der = s.derivatives(i)?;
            let j0 = if plan.quantity == Quantity::PenalizedPhi {
                let field = s.field(i);
                let profile = s.profile(i)?;
                Some(s.penalized(&field, &profile)?.j0)
            } else {
                None
            };
            Ok(Record {
                cut: der.cut.expect("flow quantities carry a cut"),
                j0,
                primary: der.primary_bits,
                diffs: Some(der.diffs),
            })
        } else {
            let field = s.field(i);
            let (cut, j0) = if plan.quantity == Quantity::PenalizedPhi {
                let profile = s.profile(i)?;
                let min = s.penalized(&field, &profile)?;
                (min.cut.edges, Some(min.j0))
            } else {
                s.flow.solve(&field.values);
                (s.flow.canonical_cut().edges, None)
            };
            Ok(Record {
                cut,
                j0,
                diffs: None,
                primary: field.values.len(),
            })
        }
    })?;

    let lattice = &ctx.lattice;
    let m = lattice.num_edges();
    let n = records.len() as f64;
    let mut hits = vec![0u64; m];
    let mut both = vec![0u64; m];
    let shifted: Vec<Option<EdgeId>> = (0..m).map(|e| shift_edge(lattice, e, 2)).collect();
    let mut j0_counts = Vec::new();
    if let (Quantity::PenalizedPhi, Some(p)) = (plan.quantity, &plan.params) {
        j0_counts = vec![0; plan.spec.height - p.slab_height + 1];
    }
    for r in &records {
        for &e in &r.cut {
            hits[e] += 1;
            if let Some(f) = shifted[e] {
                if r.cut.binary_search(&f).is_ok() {
                    both[e] += 1;
                }
            }
        }
        if let Some(j) = r.j0 {
            j0_counts[j] += 1;
        }
    }
    let hit_frequency: Vec<f64> = hits.iter().map(|&k| k as f64 / n).collect();

    let mut shift = ShiftRegularity {
        max_diff: 0.0,
        argmax_edge: None,
        stderr_at_max: 0.0,
        max_excess: f64::NEG_INFINITY,
    };
    for e in 0..m {
        if let Some(f) = shifted[e] {
            let (pe, pf, pb) = (hit_frequency[e], hit_frequency[f], both[e] as f64 / n);
            let diff = (pe - pf).abs();
            let se = ((pe + pf - 2.0 * pb - (pe - pf).powi(2)).max(0.0) / n).sqrt();
            if shift.argmax_edge.is_none() || diff > shift.max_diff {
                shift.max_diff = diff;
                shift.argmax_edge = Some(e);
                shift.stderr_at_max = se;
            }
            shift.max_excess = shift.max_excess.max(diff - 4.0 * se);
        }
    }

    let nf = plan.spec.n as f64;
    let thresholds = options
        .xis
        .iter()
        .map(|&xi| {
            let threshold = nf.powf(-xi);
            ThresholdCount {
                xi,
                threshold,
                count: hit_frequency.iter().filter(|&&p| p >= threshold).count(),
            }
        })
        .collect();

    let derivatives = if options.derivatives {
        let bits = records.first().and_then(|r| r.diffs.as_ref()).map_or(0, Vec::len);
        let primary = records.first().map_or(m, |r| r.primary);
        let nb = options.batches.clamp(1, records.len());
        let mut batches = vec![(0u64, vec![0.0; bits], vec![0.0; bits]); nb];
        for (i, r) in records.iter().enumerate() {
            let batch = &mut batches[i * nb / records.len()];
            batch.0 += 1;
            for (j, &d) in r.diffs.as_ref().expect("derivatives requested").iter().enumerate() {
                batch.1[j] += d.abs();
                batch.2[j] += d * d;
            }
        }
        let (l1, l2) = norms_excluding(&batches, None);
        Some(DerivativeNorms {
            l1: l1[..primary].to_vec(),
            l2: l2[..primary].to_vec(),
            penalty_l1: l1[primary..].to_vec(),
            penalty_l2: l2[primary..].to_vec(),
            batches,
        })
    } else {
        None
    };

    let penalty_derivative_bound = plan.params.as_ref().filter(|_| plan.quantity == Quantity::PenalizedPhi).map(|p| {
        2.0 * nf.powf((plan.spec.d as f64 - 1.0) / 2.0) / (nf.powf(p.delta) * nf.ln())
    });

    Ok(InfluenceProfile {
        quantity: plan.quantity,
        n_samples: plan.n_samples,
        master_seed: plan.master_seed,
        total_hit: hit_frequency.iter().sum(),
        hit_frequency,
        j0_counts,
        thresholds,
        shift,
        derivatives,
        penalty_derivative_bound,
    })
}

/// `(||∂||_1, ||∂||_2)` per bit from batch sums, leaving out one batch.
fn norms_excluding(batches: &[(u64, Vec<f64>, Vec<f64>)], skip: Option<usize>) -> (Vec<f64>, Vec<f64>) {
    let bits = batches.first().map_or(0, |b| b.1.len());
    let mut count = 0u64;
    let mut abs = vec![0.0; bits];
    let mut sq = vec![0.0; bits];
    for (k, (c, a, s)) in batches.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        count += c;
        for j in 0..bits {
            abs[j] += a[j];
            sq[j] += s[j];
        }
    }
    let n = count.max(1) as f64;
    (
        abs.iter().map(|x| x / n / 2.0).collect(),
        sq.iter().map(|x| (x / n).sqrt() / 2.0).collect(),
    )
}

/// `||∂||_2^2 / (1 + ln(||∂||_2 / ||∂||_1))`, zero when the derivative vanishes.
pub fn talagrand_term(l1: f64, l2: f64) -> f64 {
    if l2 <= 0.0 || l1 <= 0.0 {
        0.0
    } else {
        l2 * l2 / (1.0 + (l2 / l1).ln())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TalagrandRhs {
    /// Sum over edge and penalty bits, without the universal constant.
    pub value: f64,
    /// Delete-a-group jackknife standard error.
    pub stderr: f64,
    pub edge_part: f64,
    pub penalty_part: f64,
    /// Penalty part with every penalty-bit term replaced by its a priori
    /// bound, when the quantity is penalized.
    pub penalty_bound_part: Option<f64>,
}

pub fn talagrand_rhs(profile: &InfluenceProfile) -> Result<TalagrandRhs> {
    let norms = profile
        .derivatives
        .as_ref()
        .ok_or_else(|| crate::Error::Domain("the profile has no derivative norms".into()))?;
    let primary = norms.l1.len();
    let split = |l1: &[f64], l2: &[f64]| -> (f64, f64) {
        let terms: Vec<f64> = l1.iter().zip(l2).map(|(&a, &b)| talagrand_term(a, b)).collect();
        (terms[..primary].iter().sum(), terms[primary..].iter().sum())
    };
    let all_l1: Vec<f64> = norms.l1.iter().chain(&norms.penalty_l1).copied().collect();
    let all_l2: Vec<f64> = norms.l2.iter().chain(&norms.penalty_l2).copied().collect();
    let (edge_part, penalty_part) = split(&all_l1, &all_l2);
    let value = edge_part + penalty_part;
    let nb = norms.batches.len();
    let stderr = if nb > 1 {
        let reps: Vec<f64> = (0..nb)
            .map(|k| {
                let (l1, l2) = norms_excluding(&norms.batches, Some(k));
                let (e, p) = split(&l1, &l2);
                e + p
            })
            .collect();
        let mean = reps.iter().sum::<f64>() / nb as f64;
        let ss: f64 = reps.iter().map(|r| (r - mean).powi(2)).sum();
        ((nb as f64 - 1.0) / nb as f64 * ss).sqrt()
    } else {
        0.0
    };
    let penalty_bound_part = profile
        .penalty_derivative_bound
        .map(|b| norms.penalty_l1.len() as f64 * (b / 2.0) * (b / 2.0));
    Ok(TalagrandRhs {
        value,
        stderr,
        edge_part,
        penalty_part,
        penalty_bound_part,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{dist, spec};
    use super::*;
    use crate::oracle::{config_table, EnumerationGuard, OracleQuantity};
    use crate::penalized::PenaltyParams;
    use num_traits::ToPrimitive;

    #[test]
    fn dictator_term() {
        let d = dist(1, 4, 1, 2);
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 0, 1), d, 200, 1);
        let prof = influence_profile(&plan, &InfluenceOptions::default()).unwrap();
        let norms = prof.derivatives.as_ref().unwrap();
        assert_eq!((norms.l1[0], norms.l2[0]), (1.5, 1.5));
        let rhs = talagrand_rhs(&prof).unwrap();
        assert_eq!(rhs.value, 9.0 / 4.0);
        assert_eq!(rhs.stderr, 0.0);
        assert_eq!(prof.hit_frequency, vec![1.0]);
    }

    #[test]
    fn flat_function_has_zero_rhs() {
        assert_eq!(talagrand_term(0.0, 0.0), 0.0);
        // every layer of verticals is a minimum cut, so no flip changes the flow
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 2, 3), dist(1, 2, 1, 1), 20, 1);
        let prof = influence_profile(&plan, &InfluenceOptions::default()).unwrap();
        assert_eq!(talagrand_rhs(&prof).unwrap().value, 0.0);
    }

    #[test]
    fn norms_match_enumeration() {
        let (s, d) = (spec(2, 1, 2), dist(1, 3, 1, 2));
        let g = EnumerationGuard::default();
        let table = config_table(&s, d, OracleQuantity::Phi, &g).unwrap();
        let exact = table.derivative_moments();
        let plan = MonteCarloPlan::new(Quantity::Phi, s, d, 20_000, 4);
        let prof = influence_profile(&plan, &InfluenceOptions::default()).unwrap();
        let norms = prof.derivatives.as_ref().unwrap();
        let mut exact_rhs = 0.0;
        for (e, (l1, l2)) in exact.iter().enumerate() {
            let (l1, l2) = (l1.to_f64().unwrap() / 2.0, l2.to_f64().unwrap().sqrt() / 2.0);
            assert!(norms.l1[e] <= norms.l2[e] + 1e-12);
            assert!((norms.l1[e] - l1).abs() < 0.03, "edge {e}");
            assert!((norms.l2[e] - l2).abs() < 0.03, "edge {e}");
            exact_rhs += talagrand_term(l1, l2);
        }
        let rhs = talagrand_rhs(&prof).unwrap();
        assert!((rhs.value - exact_rhs).abs() <= 4.0 * rhs.stderr, "{} vs {exact_rhs}", rhs.value);
    }

    #[test]
    fn penalized_profile_shape() {
        let params = PenaltyParams::new(0.1, 0.2, 4).unwrap();
        let plan =
            MonteCarloPlan::new(Quantity::PenalizedPhi, spec(2, 4, 16), dist(1, 2, 1, 2), 300, 3).with_params(params);
        let prof = influence_profile(&plan, &InfluenceOptions::default()).unwrap();
        assert!(prof.hit_frequency.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(prof.total_hit <= 2.0 * 5.0);
        assert_eq!(prof.j0_counts.iter().sum::<u64>(), 300);
        let norms = prof.derivatives.as_ref().unwrap();
        assert_eq!(norms.penalty_l1.len(), 1);
        for (a, b) in norms.l1.iter().zip(&norms.l2) {
            assert!(a <= &(b + 1e-12));
        }
        let bound = prof.penalty_derivative_bound.unwrap();
        assert!(norms.penalty_l2.iter().all(|&l| l <= bound / 2.0 + 1e-9));
        assert!(talagrand_rhs(&prof).unwrap().value > 0.0);
        let fast = influence_profile(
            &plan,
            &InfluenceOptions {
                derivatives: false,
                ..InfluenceOptions::default()
            },
        )
        .unwrap();
        assert_eq!(fast.hit_frequency, prof.hit_frequency);
        assert!(talagrand_rhs(&fast).is_err());
    }

    #[test]
    fn edges_outside_every_slab_are_never_hit() {
        let mut params = PenaltyParams::new(0.1, 0.2, 4).unwrap();
        params.min_index = 4;
        let plan =
            MonteCarloPlan::new(Quantity::PenalizedPhi, spec(2, 4, 12), dist(1, 2, 1, 2), 100, 3).with_params(params);
        let prof = influence_profile(&plan, &InfluenceOptions::default()).unwrap();
        let lattice = crate::lattice::LatticeIndex::new(plan.spec).unwrap();
        for e in lattice.slab_edges(0, 3) {
            assert_eq!(prof.hit_frequency[e], 0.0);
            assert_eq!(prof.derivatives.as_ref().unwrap().l2[e], 0.0);
        }
    }
}
