use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{var_te, Context, Estimate, MonteCarloPlan, Quantity};
use crate::capacity::{realize_noise, NoiseCoupling};
use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosPoint {
    pub t: f64,
    /// `t` as an exact fraction.
    pub t_exact: String,
    /// `E|P_0 ∩ P_t|`.
    pub pivotal: f64,
    pub pivotal_stderr: f64,
    /// `E|I_0 ∩ I_t|`.
    pub essential: f64,
    pub essential_stderr: f64,
    /// Standard error of the paired difference to the previous grid point.
    pub step_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosCurve {
    pub points: Vec<ChaosPoint>,
    /// `Var(t_e)` times the trapezoid integral of the pivotal curve.
    pub integral: f64,
    pub integral_stderr: f64,
    pub n_samples: u64,
    pub master_seed: u64,
}

impl ChaosCurve {
    /// Grid indices `k` where the pivotal curve rises from `k-1` to `k` by
    /// more than `sigmas` paired standard errors.
    pub fn monotonicity_violations(&self, sigmas: f64) -> Vec<usize> {
        (1..self.points.len())
            .filter(|&k| {
                let p = &self.points;
                p[k].pivotal - p[k - 1].pivotal > sigmas * p[k].step_stderr
            })
            .collect()
    }

    /// Grid indices where the essential curve exceeds the pivotal one.
    pub fn ordering_violations(&self) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&k| self.points[k].essential > self.points[k].pivotal)
            .collect()
    }
}

/// Overlap of pivotal and essential sets between `X` and its noised copy
/// `X^t`, for every `t` of an increasing grid in `[0,1]`.
pub fn chaos_curve(plan: &MonteCarloPlan, grid: &[Ratio<u64>]) -> Result<ChaosCurve> {
    if !matches!(plan.quantity, Quantity::Phi | Quantity::Anchored) {
        return domain(format!("chaos curves need a flow quantity, got {}", plan.quantity));
    }
    if grid.is_empty() || grid.iter().any(|t| *t > Ratio::from_integer(1)) {
        return domain("t grid must be nonempty and inside [0,1]");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("t grid must be strictly increasing");
    }
    let ctx = Context::new(plan)?;
    let (a, b) = (plan.dist.low(), plan.dist.high());
    let m = ctx.lattice.num_edges();
    let per_sample: Vec<Vec<(u32, u32)>> = ctx.run(|s, i| {
        let coupling = NoiseCoupling::new(&s.ctx.lattice, plan.dist, plan.master_seed, i);
        let sets = |s: &mut super::Sampler<'_>, values: &[i64]| {
            s.flow.solve(values);
            let mut essential = vec![false; m];
            for e in s.flow.essential() {
                essential[e] = true;
            }
            let pivotal: Vec<bool> = s.flow.flip_differences(a, b).into_iter().map(|d| d > 0).collect();
            (pivotal, essential)
        };
        let (p0, i0) = sets(s, &coupling.base.values);
        grid.iter()
            .map(|&t| {
                let field = realize_noise(&coupling, t)?;
                let (pt, it) = sets(s, &field.values);
                let both = |x: &[bool], y: &[bool]| x.iter().zip(y).filter(|(a, b)| **a && **b).count() as u32;
                Ok((both(&p0, &pt), both(&i0, &it)))
            })
            .collect()
    })?;
    let seed = plan.master_seed;
    let column = |k: usize, pick: fn(&(u32, u32)) -> u32| -> Vec<f64> {
        per_sample.iter().map(|r| pick(&r[k]) as f64).collect()
    };
    let ts: Vec<f64> = grid.iter().map(|t| t.to_f64().expect("finite")).collect();
    let mut points = Vec::with_capacity(grid.len());
    for (k, t) in grid.iter().enumerate() {
        let piv = Estimate::from_samples(&column(k, |x| x.0), seed);
        let ess = Estimate::from_samples(&column(k, |x| x.1), seed);
        let step_stderr = if k == 0 {
            0.0
        } else {
            let diffs: Vec<f64> = per_sample.iter().map(|r| r[k].0 as f64 - r[k - 1].0 as f64).collect();
            Estimate::from_samples(&diffs, seed).stderr_of_mean
        };
        points.push(ChaosPoint {
            t: ts[k],
            t_exact: t.to_string(),
            pivotal: piv.mean,
            pivotal_stderr: piv.stderr_of_mean,
            essential: ess.mean,
            essential_stderr: ess.stderr_of_mean,
            step_stderr,
        });
    }
    let v = var_te(&plan.dist);
    let trapezoids: Vec<f64> = per_sample
        .iter()
        .map(|r| {
            (1..r.len())
                .map(|k| (ts[k] - ts[k - 1]) * (r[k].0 + r[k - 1].0) as f64 / 2.0)
                .sum::<f64>()
                * v
        })
        .collect();
    let integral = Estimate::from_samples(&trapezoids, seed);
    Ok(ChaosCurve {
        points,
        integral: integral.mean,
        integral_stderr: integral.stderr_of_mean,
        n_samples: plan.n_samples,
        master_seed: seed,
    })
}
