use serde::{Deserialize, Serialize};

use super::{var_te, Context, Estimate, MonteCarloPlan, Quantity};
use crate::error::{domain, Result};
use crate::lattice::EdgeId;

/// A plug-in estimate with a delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub master_seed: u64,
}

/// `sum_i E[(f(X) - f(X^{(i)}))_-^2]`, averaging over the resampled value of
/// each coordinate analytically instead of drawing it.
pub fn efron_stein_rhs(plan: &MonteCarloPlan) -> Result<Estimate> {
    let ctx = Context::new(plan)?;
    let p = plan.dist.p_a_f64();
    let q = 1.0 - p;
    let (a, b) = (plan.dist.low(), plan.dist.high());
    let terms = ctx.run(|s, i| match plan.quantity {
        Quantity::Phi | Quantity::Anchored => {
            let field = s.field(i);
            let value = s.flow.solve(&field.values);
            let mut total = 0.0;
            for e in s.flow.essential() {
                if field.values[e] == a {
                    let d = (s.flow.value_if(e, b) - value) as f64;
                    total += q * d * d;
                }
            }
            Ok(total)
        }
        Quantity::PenalizedPhi | Quantity::Lipschitz => {
            let der = s.derivatives(i)?;
            Ok(der
                .low
                .iter()
                .zip(&der.diffs)
                .map(|(&low, &d)| {
                    if low {
                        q * d.max(0.0).powi(2)
                    } else {
                        p * (-d).max(0.0).powi(2)
                    }
                })
                .sum())
        }
    })?;
    Ok(Estimate::from_samples(&terms, plan.master_seed))
}

/// `Var(t_e) sum_e P(e in the minimal cut, t_e = b)^2`, with each square
/// estimated without bias as `k(k-1)/(N(N-1))`.
pub fn newman_piza_lhs(plan: &MonteCarloPlan) -> Result<BoundEstimate> {
    if plan.quantity == Quantity::Lipschitz {
        return domain("the Lipschitz quantity has no cut set");
    }
    let ctx = Context::new(plan)?;
    let b = plan.dist.high();
    let hits: Vec<Vec<EdgeId>> = ctx.run(|s, i| {
        let field = s.field(i);
        let cut = if plan.quantity == Quantity::PenalizedPhi {
            let profile = s.profile(i)?;
            s.penalized(&field, &profile)?.cut
        } else {
            s.flow.solve(&field.values);
            s.flow.canonical_cut()
        };
        Ok(cut.edges.into_iter().filter(|&e| field.values[e] == b).collect())
    })?;
    let n = hits.len() as f64;
    let mut counts = vec![0u64; ctx.lattice.num_edges()];
    for h in &hits {
        for &e in h {
            counts[e] += 1;
        }
    }
    let sum: f64 = counts
        .iter()
        .map(|&k| k as f64 * (k as f64 - 1.0) / (n * (n - 1.0)))
        .sum();
    let scores: Vec<f64> = hits
        .iter()
        .map(|h| h.iter().map(|&e| 2.0 * counts[e] as f64 / n).sum())
        .collect();
    let score = Estimate::from_samples(&scores, plan.master_seed);
    let v = var_te(&plan.dist);
    Ok(BoundEstimate {
        value: v * sum,
        stderr: v * score.stderr_of_mean,
        n_samples: plan.n_samples,
        master_seed: plan.master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{dist, spec};
    use super::super::{estimate_variance, MonteCarloPlan, Quantity};
    use super::*;
    use crate::oracle::{config_table, EnumerationGuard, OracleQuantity};
    use crate::penalized::PenaltyParams;
    use num_traits::ToPrimitive;

    #[test]
    fn single_variable_equality() {
        let d = dist(1, 3, 1, 4);
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 0, 1), d, 5000, 2);
        let es = efron_stein_rhs(&plan).unwrap();
        assert!((es.mean - d.variance()).abs() <= 4.0 * es.stderr_of_mean);
    }

    #[test]
    fn degenerate_fields() {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 3, 4), dist(1, 2, 1, 1), 20, 2);
        assert_eq!(newman_piza_lhs(&plan).unwrap().value, 0.0);
        assert_eq!(efron_stein_rhs(&plan).unwrap().mean, 0.0);
    }

    #[test]
    fn tiny_instances_match_enumeration() {
        let g = EnumerationGuard::default();
        for (s, d) in [(spec(2, 1, 2), dist(1, 2, 1, 2)), (spec(2, 2, 1), dist(1, 3, 1, 3))] {
            let table = config_table(&s, d, OracleQuantity::Phi, &g).unwrap();
            let plan = MonteCarloPlan::new(Quantity::Phi, s, d, 20_000, 8);
            let es = efron_stein_rhs(&plan).unwrap();
            let exact = table.efron_stein().to_f64().unwrap();
            assert!((es.mean - exact).abs() <= 4.0 * es.stderr_of_mean, "{} vs {exact}", es.mean);
            let np = newman_piza_lhs(&plan).unwrap();
            let exact = table.newman_piza().unwrap().to_f64().unwrap();
            assert!((np.value - exact).abs() <= 4.0 * np.stderr, "{} vs {exact}", np.value);
        }
    }

    #[test]
    fn single_column_closed_form() {
        // the canonical cut of a column is its lowest minimum edge, which
        // takes the value b only when every edge does, and then it is edge 0
        let d = dist(1, 2, 1, 2);
        let g = EnumerationGuard::default();
        let table = config_table(&spec(2, 0, 3), d, OracleQuantity::Phi, &g).unwrap();
        let by_hand = 0.25 / 64.0;
        let exact = table.newman_piza().unwrap().to_f64().unwrap();
        assert!((exact - by_hand).abs() < 1e-15);
        let np = newman_piza_lhs(&MonteCarloPlan::new(Quantity::Phi, spec(2, 0, 3), d, 50_000, 4)).unwrap();
        assert!((np.value - exact).abs() <= 4.0 * np.stderr + 1e-4);
    }

    #[test]
    fn sandwich_on_small_plans() {
        for q in [Quantity::Phi, Quantity::Anchored, Quantity::PenalizedPhi] {
            let mut plan = MonteCarloPlan::new(q, spec(2, 4, 8), dist(1, 2, 1, 2), 800, 6);
            if q == Quantity::PenalizedPhi {
                plan = plan.with_params(PenaltyParams::new(0.1, 0.2, 4).unwrap());
            }
            let var = estimate_variance(&plan).unwrap();
            let es = efron_stein_rhs(&plan).unwrap();
            let np = newman_piza_lhs(&plan).unwrap();
            let slack = |x: f64, y: f64| 4.0 * (x * x + y * y).sqrt();
            assert!(var.variance <= es.mean + slack(var.stderr_of_variance, es.stderr_of_mean), "{q}");
            if q != Quantity::PenalizedPhi {
                assert!(np.value <= var.variance + slack(var.stderr_of_variance, np.stderr), "{q}");
            }
        }
    }

    #[test]
    fn lipschitz_efron_stein_matches_enumeration() {
        let g = EnumerationGuard::default();
        let (s, d) = (spec(2, 1, 1), dist(1, 2, 1, 2));
        let table = config_table(&s, d, OracleQuantity::Lipschitz, &g).unwrap();
        let es = efron_stein_rhs(&MonteCarloPlan::new(Quantity::Lipschitz, s, d, 10_000, 3)).unwrap();
        let exact = table.efron_stein().to_f64().unwrap();
        assert!((es.mean - exact).abs() <= 4.0 * es.stderr_of_mean);
        assert!(newman_piza_lhs(&MonteCarloPlan::new(Quantity::Lipschitz, s, d, 10, 3)).is_err());
    }
}
