//! One function per subcommand, each producing a [`Report`].

use num_rational::Ratio;
use rayon::prelude::*;
use serde_json::json;

use fpp_core::capacity::sample_field;
use fpp_core::estimators::{
    boundary_and_localization, chaos_curve, estimate_variance, influence_profile, subadditivity_defect,
    talagrand_rhs, InfluenceOptions, MonteCarloPlan, Quantity,
};
use fpp_core::flow::LatticeFlow;
use fpp_core::lattice::LatticeIndex;
use fpp_core::lipschitz::{
    brute_force_anchored_lipschitz, brute_force_lipschitz, sample_vertex_weights, solve_anchored_lipschitz,
    solve_lipschitz,
};
use fpp_core::oracle::{build_fixture, EnumerationGuard};
use fpp_core::surface::chimney_scan;
use fpp_core::Error;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{num, opt, Report};
use crate::suite::Scale;

fn plan_for(cfg: &ExperimentConfig, n: usize, quantity: Quantity) -> Result<MonteCarloPlan, CliError> {
    let spec = cfg.spec_for(n)?;
    let mut plan = MonteCarloPlan::new(quantity, spec, cfg.dist()?, cfg.n_samples, cfg.master_seed);
    if quantity == Quantity::PenalizedPhi {
        plan = plan.with_params(cfg.params_for(&spec)?);
    }
    Ok(plan)
}

/// Single instance: flow value, canonical cut and its vertical extent.
pub fn flow(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "flow",
        cfg,
        &["d", "n", "height", "seed", "sample_index", "phi", "cut_size", "cut_capacity", "h_min", "h_max", "extent"],
    );
    let mut results = Vec::new();
    for &n in &cfg.n {
        let spec = cfg.spec_for(n)?;
        let lattice = LatticeIndex::new(spec)?;
        let field = sample_field(&lattice, cfg.dist()?, cfg.master_seed, cfg.sample_index);
        let mut solver = LatticeFlow::bottom_top(&lattice);
        let phi = solver.solve(&field.values);
        let cut = solver.canonical_cut();
        report.row(vec![
            spec.d.to_string(),
            n.to_string(),
            spec.height.to_string(),
            cfg.master_seed.to_string(),
            cfg.sample_index.to_string(),
            phi.to_string(),
            cut.len().to_string(),
            cut.capacity.to_string(),
            cut.h_min.to_string(),
            cut.h_max.to_string(),
            cut.extent().to_string(),
        ]);
        results.push(json!({
            "spec": spec,
            "phi": phi,
            "cut_edges": cut.edges,
            "essential": solver.essential(),
            "pivotal": solver.pivotal(field.dist.low(), field.dist.high()),
            "h_min": cut.h_min,
            "h_max": cut.h_max,
        }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Variance estimates of the configured quantity over the `n` sweep.
pub fn variance(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "variance",
        cfg,
        &[
            "quantity", "d", "n", "height", "n_samples", "mean", "variance", "stderr_of_mean", "stderr_of_variance",
            "scaled_variance",
        ],
    );
    let mut results = Vec::new();
    for &n in &cfg.n {
        let plan = plan_for(cfg, n, cfg.quantity)?;
        let e = estimate_variance(&plan)?;
        let scaled = if n >= 2 {
            e.variance * (n as f64).ln() / (n as f64).powi(plan.spec.d as i32 - 1)
        } else {
            f64::NAN
        };
        report.row(vec![
            cfg.quantity.to_string(),
            plan.spec.d.to_string(),
            n.to_string(),
            plan.spec.height.to_string(),
            e.n_samples.to_string(),
            num(e.mean),
            num(e.variance),
            num(e.stderr_of_mean),
            num(e.stderr_of_variance),
            num(scaled),
        ]);
        results.push(json!({ "plan": plan, "estimate": e, "scaled_variance": num(scaled) }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Influence profile of the penalized flow, shift regularity, threshold
/// counts and the Talagrand sum.
pub fn influence(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "influence",
        cfg,
        &[
            "n", "height", "slab_height", "total_hit", "shift_max", "shift_stderr", "shift_bound", "p_bottom",
            "p_bottom_stderr", "talagrand", "talagrand_stderr", "thresholds",
        ],
    );
    let options = InfluenceOptions {
        derivatives: cfg.derivatives,
        xis: cfg.xis.clone(),
        ..InfluenceOptions::default()
    };
    let mut results = Vec::new();
    for &n in &cfg.n {
        let plan = plan_for(cfg, n, Quantity::PenalizedPhi)?;
        let prof = influence_profile(&plan, &options)?;
        let boundary = boundary_and_localization(&plan, &[])?;
        let tal = if cfg.derivatives { Some(talagrand_rhs(&prof)?) } else { None };
        let shift_bound = 2.0 / (n as f64).powf(cfg.epsilon / 2.0);
        let thresholds: Vec<String> = prof.thresholds.iter().map(|t| format!("{}:{}", t.xi, t.count)).collect();
        report.row(vec![
            n.to_string(),
            plan.spec.height.to_string(),
            plan.params.as_ref().map_or(0, |p| p.slab_height).to_string(),
            num(prof.total_hit),
            num(prof.shift.max_diff),
            num(prof.shift.stderr_at_max),
            num(shift_bound),
            opt(boundary.p_bottom.map(num)),
            opt(boundary.p_bottom_stderr.map(num)),
            opt(tal.as_ref().map(|t| num(t.value))),
            opt(tal.as_ref().map(|t| num(t.stderr))),
            thresholds.join(" "),
        ]);
        results.push(json!({ "plan": plan, "profile": prof, "boundary": boundary, "talagrand": tal }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Chaos curve with the integral compared against a direct variance estimate.
pub fn chaos(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "chaos",
        cfg,
        &["n", "height", "t", "pivotal", "pivotal_stderr", "essential", "essential_stderr"],
    );
    let k = cfg.t_points as u64 - 1;
    let grid: Vec<Ratio<u64>> = (0..=k).map(|j| Ratio::new(j, k)).collect();
    let quantity = if cfg.quantity == Quantity::Anchored { Quantity::Anchored } else { Quantity::Phi };
    let mut results = Vec::new();
    for &n in &cfg.n {
        let plan = plan_for(cfg, n, quantity)?;
        let curve = chaos_curve(&plan, &grid)?;
        let var = estimate_variance(&plan)?;
        for p in &curve.points {
            report.row(vec![
                n.to_string(),
                plan.spec.height.to_string(),
                p.t_exact.clone(),
                num(p.pivotal),
                num(p.pivotal_stderr),
                num(p.essential),
                num(p.essential_stderr),
            ]);
        }
        results.push(json!({
            "plan": plan,
            "curve": curve,
            "variance": var,
            "monotonicity_violations": curve.monotonicity_violations(4.0),
            "ordering_violations": curve.ordering_violations(),
        }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Extent histogram and chimney-scan diagnostics of canonical cuts.
pub fn chimney(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "chimney",
        cfg,
        &["n", "height", "sample_index", "cut_size", "h_min", "h_max", "extent", "t_stop", "hat_t_stop", "violations"],
    );
    let mut results = Vec::new();
    for &n in &cfg.n {
        let spec = cfg.spec_for(n)?;
        let lattice = LatticeIndex::new(spec)?;
        let dist = cfg.dist()?;
        let scans = (0..cfg.n_samples)
            .into_par_iter()
            .map_init(
                || LatticeFlow::bottom_top(&lattice),
                |solver, i| {
                    let field = sample_field(&lattice, dist, cfg.master_seed, i);
                    solver.solve(&field.values);
                    chimney_scan(&lattice, &field, &solver.canonical_cut().edges)
                },
            )
            .collect::<Result<Vec<_>, Error>>()?;
        let mut histogram = vec![0u64; spec.height + 1];
        let mut violations = 0usize;
        for (i, s) in scans.iter().enumerate() {
            histogram[s.extent] += 1;
            let v = s.violations();
            violations += v.len();
            report.row(vec![
                n.to_string(),
                spec.height.to_string(),
                i.to_string(),
                s.cut_size.to_string(),
                s.h_min.to_string(),
                s.h_max.to_string(),
                s.extent.to_string(),
                opt(s.t_stop),
                opt(s.hat_t_stop),
                v.len().to_string(),
            ]);
        }
        results.push(json!({ "spec": spec, "extent_histogram": histogram, "violations": violations }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Lipschitz solver values, anchored values, and brute-force checks where
/// the instance is small enough.
pub fn lipschitz(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "lipschitz",
        cfg,
        &["n", "height", "sample_index", "value", "anchored", "brute_force", "anchored_brute_force"],
    );
    let mut results = Vec::new();
    for &n in &cfg.n {
        let spec = cfg.spec_for(n)?;
        let lattice = LatticeIndex::new(spec)?;
        let dist = cfg.dist()?;
        let mid = spec.height / 2;
        let guarded = |r: fpp_core::Result<i64>| match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::Guard(_)) => Ok(None),
            Err(e) => Err(e),
        };
        let rows = (0..cfg.n_samples)
            .into_par_iter()
            .map(|i| {
                let w = sample_vertex_weights(&lattice, dist, cfg.master_seed, i);
                let value = solve_lipschitz(&lattice, &w)?.0;
                let anchored = solve_anchored_lipschitz(&lattice, &w, mid)?.0;
                let brute = guarded(brute_force_lipschitz(&lattice, &w))?;
                let anchored_brute = guarded(brute_force_anchored_lipschitz(&lattice, &w, mid))?;
                Ok((value, anchored, brute, anchored_brute))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let mut mismatches = 0;
        for (i, &(v, a, bf, abf)) in rows.iter().enumerate() {
            if bf.is_some_and(|b| b != v) || abf.is_some_and(|b| b != a) || a < v {
                mismatches += 1;
            }
            report.row(vec![
                n.to_string(),
                spec.height.to_string(),
                i.to_string(),
                v.to_string(),
                a.to_string(),
                opt(bf),
                opt(abf),
            ]);
        }
        let values: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let e = fpp_core::estimators::Estimate::from_samples(&values, cfg.master_seed);
        results.push(json!({ "spec": spec, "estimate": e, "mismatches": mismatches }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Anchored flow variance and the localization statistic.
pub fn anchored(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new("anchored", cfg, &["n", "height", "radius", "outside_fraction", "stderr"]);
    let mut results = Vec::new();
    for &n in &cfg.n {
        let plan = plan_for(cfg, n, Quantity::Anchored)?;
        let var = estimate_variance(&plan)?;
        let loc = boundary_and_localization(&plan, &cfg.radii)?;
        for p in &loc.localization {
            report.row(vec![
                n.to_string(),
                plan.spec.height.to_string(),
                num(p.c),
                num(p.outside_fraction),
                num(p.stderr),
            ]);
        }
        results.push(json!({ "plan": plan, "variance": var, "localization": loc.localization }));
    }
    report.results = json!(results);
    Ok(report)
}

/// Tiny instances for the oracle fixture.
pub fn fixture_instances() -> Vec<(fpp_core::lattice::CylinderSpec, fpp_core::capacity::TwoPointDist)> {
    use fpp_core::capacity::TwoPointDist;
    use fpp_core::lattice::CylinderSpec;
    let s = |d, n, h| CylinderSpec::new(d, n, h).expect("valid");
    let p = |a, b, num, den| TwoPointDist::new(a, b, num, den).expect("valid");
    vec![
        (s(2, 0, 1), p(1, 2, 1, 2)),
        (s(2, 0, 2), p(1, 2, 1, 3)),
        (s(2, 1, 1), p(1, 2, 1, 2)),
        (s(2, 1, 2), p(1, 2, 1, 2)),
        (s(2, 2, 1), p(2, 3, 3, 4)),
        (s(3, 1, 1), p(1, 2, 1, 2)),
    ]
}

/// Exact ground truth written as a JSON fixture: the configured instances when
/// a height is given, the built-in tiny list otherwise.
pub fn oracle(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "oracle",
        cfg,
        &["d", "n", "height", "a", "b", "p_a", "mean", "variance", "chaos_integral", "efron_stein", "newman_piza"],
    );
    let guard = EnumerationGuard::default();
    let instances = match cfg.height {
        Some(_) => cfg
            .n
            .iter()
            .map(|&n| Ok((cfg.spec_for(n)?, cfg.dist()?)))
            .collect::<Result<Vec<_>, Error>>()?,
        None => fixture_instances(),
    };
    let fixture = build_fixture(&instances, cfg.master_seed, 4, &guard)?;
    for inst in &fixture.instances {
        report.row(vec![
            inst.spec.d.to_string(),
            inst.spec.n.to_string(),
            inst.spec.height.to_string(),
            inst.dist.a.to_string(),
            inst.dist.b.to_string(),
            format!("{}/{}", inst.dist.p_num, inst.dist.p_den),
            inst.moments.mean.to_string(),
            inst.moments.variance.to_string(),
            opt(inst.chaos_integral.as_ref()),
            inst.efron_stein.to_string(),
            inst.newman_piza.to_string(),
        ]);
    }
    report.results = serde_json::to_value(&fixture).expect("fixture serializes");
    Ok(report)
}

/// Subadditivity defect over the sweep, with block side `n/2` by default.
pub fn subadditivity(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(
        "subadditivity",
        cfg,
        &["n", "height", "m", "blocks_per_axis", "mean_defect", "stderr", "min_defect", "violations"],
    );
    let mut results = Vec::new();
    for &n in &cfg.n {
        let plan = plan_for(cfg, n, Quantity::Phi)?;
        let m = cfg.block_side.unwrap_or((n / 2).max(1));
        let r = subadditivity_defect(&plan, m)?;
        report.row(vec![
            n.to_string(),
            plan.spec.height.to_string(),
            m.to_string(),
            r.blocks_per_axis.to_string(),
            num(r.defect.mean),
            num(r.defect.stderr_of_mean),
            r.min_defect.to_string(),
            r.violations.len().to_string(),
        ]);
        results.push(json!({ "plan": plan, "report": r }));
    }
    report.results = json!(results);
    Ok(report)
}

pub fn suite(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let scale = if cfg.quick { Scale::Quick } else { Scale::Full };
    let results = crate::suite::run_all_with(scale, cfg.master_seed, |r, elapsed| {
        eprintln!(
            "{} C{} {} ({:.1}s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            elapsed.as_secs_f64(),
            r.detail
        );
    })?;
    let mut r = Report::new("suite", cfg, &["id", "name", "passed", "detail"]);
    for c in &results {
        r.row(vec![format!("C{}", c.id), c.name.to_string(), c.passed.to_string(), c.detail.clone()]);
    }
    r.results = json!({ "scale": scale, "criteria": results });
    Ok(r)
}

/// Turns failed criteria in a suite report into an error.
pub fn check_suite(report: &Report) -> Result<(), CliError> {
    let failed: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| report.command == "suite" && r[2] == "false")
        .map(|r| r[0].as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("criteria failed: {}", failed.join(", "))))
    }
}
