use serde::{Deserialize, Serialize};

use super::{Context, Estimate, MonteCarloPlan, Quantity};
use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationPoint {
    pub c: f64,
    /// Mean fraction of cut edges with an endpoint outside `|x_d - H/2| <= c`.
    pub outside_fraction: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub quantity: Quantity,
    pub n_samples: u64,
    pub master_seed: u64,
    /// Winning slab in one of the two lowest indices.
    pub p_bottom: Option<f64>,
    pub p_bottom_stderr: Option<f64>,
    /// Winning slab in one of the two highest indices.
    pub p_top: Option<f64>,
    pub p_top_stderr: Option<f64>,
    /// `2 / sqrt(n)`.
    pub bound: Option<f64>,
    pub j0_counts: Vec<u64>,
    pub localization: Vec<LocalizationPoint>,
}

/// Boundary avoidance of the winning slab for penalized plans, and the cut
/// localization statistic for anchored plans.
pub fn boundary_and_localization(plan: &MonteCarloPlan, c_grid: &[f64]) -> Result<BoundaryReport> {
    let ctx = Context::new(plan)?;
    let mut report = BoundaryReport {
        quantity: plan.quantity,
        n_samples: plan.n_samples,
        master_seed: plan.master_seed,
        p_bottom: None,
        p_bottom_stderr: None,
        p_top: None,
        p_top_stderr: None,
        bound: None,
        j0_counts: Vec::new(),
        localization: Vec::new(),
    };
    let n = plan.n_samples as f64;
    match plan.quantity {
        Quantity::PenalizedPhi => {
            let params = plan.params.as_ref().expect("validated plan");
            let first = params.min_index;
            let last = plan.spec.height - params.slab_height;
            let j0s = ctx.run(|s, i| {
                let field = s.field(i);
                let profile = s.profile(i)?;
                Ok(s.penalized(&field, &profile)?.j0)
            })?;
            let mut counts = vec![0u64; last + 1];
            for j in j0s {
                counts[j] += 1;
            }
            let share = |lo: usize, hi: usize| {
                let k: u64 = (lo..=hi.min(last)).map(|j| counts[j]).sum();
                let p = k as f64 / n;
                (p, (p * (1.0 - p) / n).sqrt())
            };
            let (pb, sb) = share(first, first + 1);
            let (pt, st) = share(last.saturating_sub(1).max(first), last);
            report.p_bottom = Some(pb);
            report.p_bottom_stderr = Some(sb);
            report.p_top = Some(pt);
            report.p_top_stderr = Some(st);
            report.bound = Some(2.0 / (plan.spec.n as f64).sqrt());
            report.j0_counts = counts;
        }
        Quantity::Anchored => {
            if c_grid.iter().any(|c| !(*c >= 0.0)) {
                return domain("localization radii must be nonnegative");
            }
            let lattice = &ctx.lattice;
            let mid = plan.spec.height as f64 / 2.0;
            let fractions: Vec<Vec<f64>> = ctx.run(|s, i| {
                let field = s.field(i);
                s.flow.solve(&field.values);
                let cut = s.flow.canonical_cut();
                Ok(c_grid
                    .iter()
                    .map(|&c| {
                        let outside = cut
                            .edges
                            .iter()
                            .filter(|&&e| {
                                let (u, v) = lattice.endpoints(e);
                                [u, v].iter().any(|&w| (lattice.vertex_height(w) as f64 - mid).abs() > c)
                            })
                            .count();
                        outside as f64 / cut.len().max(1) as f64
                    })
                    .collect())
            })?;
            report.localization = c_grid
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let xs: Vec<f64> = fractions.iter().map(|f| f[k]).collect();
                    let e = Estimate::from_samples(&xs, plan.master_seed);
                    LocalizationPoint {
                        c,
                        outside_fraction: e.mean,
                        stderr: e.stderr_of_mean,
                    }
                })
                .collect();
        }
        q => return domain(format!("boundary report needs a penalized or anchored plan, got {q}")),
    }
    Ok(report)
}
