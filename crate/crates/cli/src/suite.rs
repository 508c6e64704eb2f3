//! The acceptance suite: thirteen criteria at pinned sizes, each returning a
//! pass flag and a one-line summary.

use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use fpp_core::capacity::{sample_field, TwoPointDist};
use fpp_core::estimators::{
    chaos_curve, efron_stein_rhs, estimate_variance, influence_profile, newman_piza_lhs, subadditivity_defect,
    superconcentration_trend, InfluenceOptions, MonteCarloPlan, Quantity, TrendRow,
};
use fpp_core::flow::LatticeFlow;
use fpp_core::lattice::{boundary_sets, CylinderSpec, LatticeIndex};
use fpp_core::lipschitz::{
    brute_force_anchored_lipschitz, brute_force_lipschitz, sample_vertex_weights, solve_anchored_lipschitz,
    solve_lipschitz,
};
use fpp_core::oracle::{config_table, ConfigTable, ground_truth, EnumerationGuard, OracleQuantity};
use fpp_core::penalized::{penalized_minimum_with, penalty_bound, penalty_profile, slab_lattice, PenaltyParams, SlicedFlows};
use fpp_core::rng::{Purpose, Stream};
use fpp_core::surface::{chimney_scan, validate_cutset};

use crate::report::num;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// The pinned sizes.
    Full,
    /// Reduced sizes for smoke runs.
    Quick,
}

impl Scale {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "duality"),
    (2, "oracle equivalence"),
    (3, "chaos identity"),
    (4, "chaos monotonicity"),
    (5, "penalization bound"),
    (6, "slab identity"),
    (7, "size bound"),
    (8, "chimney scan"),
    (9, "variance sandwich"),
    (10, "lipschitz solver"),
    (11, "boundary avoidance"),
    (12, "subadditivity"),
    (13, "trend report"),
];

type Outcome = fpp_core::Result<(bool, String)>;

pub fn run_criterion(id: u8, scale: Scale, seed: u64) -> fpp_core::Result<CriterionResult> {
    let (passed, detail) = match id {
        1 => duality(scale, seed)?,
        2 => oracle_equivalence(scale, seed)?,
        3 => chaos_identity(scale)?,
        4 => chaos_monotonicity(scale, seed)?,
        5..=7 => {
            let sweep = penalization_sweep(scale, seed)?;
            match id {
                5 => sweep.bound_outcome(),
                6 => sweep.slab_outcome(),
                _ => sweep.size_outcome(),
            }
        }
        8 => chimney(scale, seed)?,
        9 => sandwich(scale, seed)?,
        10 => lipschitz(scale, seed)?,
        11 => boundary(scale, seed)?,
        12 => subadditivity(scale, seed)?,
        13 => trend(scale, seed)?,
        _ => return Err(fpp_core::Error::Domain(format!("no criterion {id}"))),
    };
    let name = CRITERIA.iter().find(|c| c.0 == id).expect("known id").1;
    Ok(CriterionResult {
        id,
        name,
        passed,
        detail,
    })
}

/// All criteria; the penalization sweep behind 5 to 7 runs once.
pub fn run_all(scale: Scale, seed: u64) -> fpp_core::Result<Vec<CriterionResult>> {
    run_all_with(scale, seed, |_, _| {})
}

/// Like [`run_all`], calling `report` as each criterion finishes.
pub fn run_all_with(
    scale: Scale,
    seed: u64,
    mut report: impl FnMut(&CriterionResult, Duration),
) -> fpp_core::Result<Vec<CriterionResult>> {
    let mut out = Vec::new();
    let mut sweep = None;
    for (id, name) in CRITERIA {
        let start = Instant::now();
        let (passed, detail) = match id {
            5..=7 => {
                if sweep.is_none() {
                    sweep = Some(penalization_sweep(scale, seed)?);
                }
                let s = sweep.as_ref().expect("just computed");
                match id {
                    5 => s.bound_outcome(),
                    6 => s.slab_outcome(),
                    _ => s.size_outcome(),
                }
            }
            _ => {
                let r = run_criterion(id, scale, seed)?;
                (r.passed, r.detail)
            }
        };
        let r = CriterionResult {
            id,
            name,
            passed,
            detail,
        };
        report(&r, start.elapsed());
        out.push(r);
    }
    Ok(out)
}

/// Instance parameters drawn from a counter-based stream.
struct Picker(Stream);

impl Picker {
    fn new(seed: u64, k: u64) -> Self {
        Picker(Stream::new(seed ^ 0x5eed_c0de, Purpose::Pilot, k))
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.0.next_word() % (hi - lo + 1)
    }

    fn dist(&mut self) -> TwoPointDist {
        let a = self.range(1, 3);
        let b = a + self.range(1, 4);
        let den = 8;
        TwoPointDist::new(a, b, self.range(1, den - 1), den).expect("valid parameters")
    }
}

fn dist(a: u64, b: u64, p: u64, q: u64) -> TwoPointDist {
    TwoPointDist::new(a, b, p, q).expect("valid parameters")
}

fn spec(d: usize, n: usize, h: usize) -> CylinderSpec {
    CylinderSpec::new(d, n, h).expect("valid spec")
}

fn duality(scale: Scale, seed: u64) -> Outcome {
    let count = scale.pick(1000, 100);
    let failures: Vec<u64> = (0..count)
        .into_par_iter()
        .filter_map(|k| {
            let mut p = Picker::new(seed, k);
            let d = p.range(2, 3) as usize;
            let n = p.range(1, 8) as usize;
            let h = p.range(1, 16) as usize;
            let dist = p.dist();
            let lattice = LatticeIndex::new(spec(d, n, h)).expect("valid");
            let field = sample_field(&lattice, dist, seed, k);
            let mut solver = LatticeFlow::bottom_top(&lattice);
            let value = solver.solve(&field.values);
            let cut = solver.canonical_cut();
            let (b, t) = boundary_sets(&lattice.spec());
            let ok = cut.capacity == value && validate_cutset(&lattice, &cut.edges, &b, &t);
            (!ok).then_some(k)
        })
        .collect();
    Ok((
        failures.is_empty(),
        format!("{count} instances, {} mismatches {:?}", failures.len(), failures),
    ))
}

/// Tiny bottom-to-top instances with at most `max_edges` edges.
fn tiny_instances(max_edges: usize) -> Vec<CylinderSpec> {
    let mut out = Vec::new();
    for d in [2usize, 3] {
        for n in 0..=8usize {
            for h in 1..=20usize {
                let s = spec(d, n, h);
                if LatticeIndex::new(s).expect("valid").num_edges() <= max_edges && !(d == 3 && n == 0) {
                    out.push(s);
                }
            }
        }
    }
    out
}

fn oracle_equivalence(scale: Scale, seed: u64) -> Outcome {
    let guard = EnumerationGuard::default();
    let instances = tiny_instances(scale.pick(20, 10));
    let samples = scale.pick(100_000, 20_000);
    let fields = scale.pick(10, 3);
    let dists = [dist(1, 2, 1, 2), dist(1, 2, 1, 3), dist(1, 3, 3, 4)];
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    for (k, &s) in instances.iter().enumerate() {
        let d = dists[k % dists.len()];
        let table = config_table(&s, d, OracleQuantity::Phi, &guard)?;
        let exact = table.moments()?.variance.to_f64().expect("finite");
        let e = estimate_variance(&MonteCarloPlan::new(Quantity::Phi, s, d, samples, seed))?;
        let se = variance_stderr(&table, samples);
        let z = if se > 0.0 {
            (e.variance - exact).abs() / se
        } else if e.variance == exact {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
        if z > 4.0 {
            failures.push(format!("{s} variance z={}", num(z)));
        }
        let lattice = LatticeIndex::new(s)?;
        let (b, t) = boundary_sets(&s);
        let mut solver = LatticeFlow::bottom_top(&lattice);
        for i in 0..fields {
            let field = sample_field(&lattice, d, seed, i);
            let truth = ground_truth(&lattice, &field.values, &b, &t, d.low(), d.high(), &guard)?;
            let value = solver.solve(&field.values);
            if truth.value != value
                || truth.canonical_cut != solver.canonical_cut().edges
                || truth.essential != solver.essential()
                || truth.pivotal != solver.pivotal(d.low(), d.high())
            {
                failures.push(format!("{s} sample {i} sets differ"));
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{} instances, {samples} samples each, {fields} fields checked per instance, worst variance z={} against the exact-law standard error; {}",
            instances.len(),
            num(worst_z),
            if failures.is_empty() { "no failures".to_string() } else { failures.join("; ") }
        ),
    ))
}

/// Standard error of the sample variance of `n` draws from the exact law.
fn variance_stderr(table: &ConfigTable, n: u64) -> f64 {
    let p = table.dist.p_a_f64();
    let weight = |c: usize| {
        let low = c.count_ones() as i32;
        p.powi(low) * (1.0 - p).powi(table.bits as i32 - low)
    };
    let mean: f64 = table.values.iter().enumerate().map(|(c, &v)| weight(c) * v as f64).sum();
    let (m2, m4) = table.values.iter().enumerate().fold((0.0, 0.0), |(m2, m4), (c, &v)| {
        let x = (v as f64 - mean).powi(2);
        (m2 + weight(c) * x, m4 + weight(c) * x * x)
    });
    let n = n as f64;
    (m4 / n - m2 * m2 * (n - 3.0) / (n * (n - 1.0))).max(0.0).sqrt()
}

fn chaos_identity(scale: Scale) -> Outcome {
    let guard = EnumerationGuard::default();
    let mut cases: Vec<(CylinderSpec, TwoPointDist)> = Vec::new();
    let max_h = scale.pick(12, 6);
    for h in 1..=max_h {
        cases.push((spec(2, 0, h), dist(1, 2, 1, 2)));
    }
    let mut extra = vec![
        (spec(2, 1, 1), dist(1, 2, 1, 2)),
        (spec(2, 1, 2), dist(1, 2, 1, 3)),
        (spec(2, 2, 1), dist(2, 3, 3, 4)),
        (spec(2, 0, 3), dist(1, 2, 1, 5)),
        (spec(2, 1, 1), dist(5, 6, 2, 3)),
    ];
    if scale == Scale::Full {
        extra.extend([
            (spec(2, 1, 3), dist(1, 2, 1, 2)),
            (spec(2, 2, 2), dist(1, 2, 2, 5)),
            (spec(2, 3, 1), dist(3, 4, 1, 2)),
            (spec(3, 1, 1), dist(1, 2, 1, 2)),
            (spec(2, 0, 5), dist(1, 2, 7, 8)),
        ]);
    }
    cases.extend(extra);
    let mut failures = Vec::new();
    for &(s, d) in &cases {
        let table = config_table(&s, d, OracleQuantity::Phi, &guard)?;
        if table.chaos_integral(&guard)? != table.moments()?.variance {
            failures.push(format!("{s} {d}"));
        }
    }
    Ok((
        failures.is_empty(),
        format!("{} instances, exact equality on {}", cases.len(), cases.len() - failures.len()),
    ))
}

fn chaos_monotonicity(scale: Scale, seed: u64) -> Outcome {
    let plan = MonteCarloPlan::new(
        Quantity::Phi,
        spec(2, 6, 12),
        dist(1, 2, 1, 2),
        scale.pick(2000, 200),
        seed,
    );
    let grid: Vec<Ratio<u64>> = (0..=5).map(|j| Ratio::new(j, 5)).collect();
    let c = chaos_curve(&plan, &grid)?;
    let mono = c.monotonicity_violations(4.0);
    let order = c.ordering_violations();
    let curve: Vec<String> = c
        .points
        .iter()
        .map(|p| format!("{}:{:.3}/{:.3}", p.t_exact, p.pivotal, p.essential))
        .collect();
    Ok((
        mono.is_empty() && order.is_empty(),
        format!(
            "P/I curve {}; rises beyond 4se at {:?}; I above P at {:?}",
            curve.join(" "),
            mono,
            order
        ),
    ))
}

pub struct SweepOutcome {
    pub instances: u64,
    pub bound_violations: Vec<String>,
    pub max_gap_ratio: f64,
    pub slab_violations: Vec<String>,
    pub full_slab_violations: Vec<String>,
    pub size_violations: Vec<String>,
    pub slab_heights: Vec<String>,
}

impl SweepOutcome {
    fn bound_outcome(&self) -> (bool, String) {
        (
            self.bound_violations.is_empty(),
            format!(
                "{} instances, {} violations, max |Phi~ - Phi| / bound = {}{}",
                self.instances,
                self.bound_violations.len(),
                num(self.max_gap_ratio),
                sample_list(&self.bound_violations)
            ),
        )
    }

    fn slab_outcome(&self) -> (bool, String) {
        (
            self.slab_violations.is_empty(),
            format!(
                "slab heights {}; {} violations at twice the max extent, {} at slab height H{}",
                self.slab_heights.join(" "),
                self.slab_violations.len(),
                self.full_slab_violations.len(),
                sample_list(&self.slab_violations)
            ),
        )
    }

    fn size_outcome(&self) -> (bool, String) {
        (
            self.size_violations.is_empty(),
            format!("{} instances, {} violations{}", self.instances, self.size_violations.len(), sample_list(&self.size_violations)),
        )
    }
}

fn sample_list(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        let head: Vec<&str> = v.iter().take(5).map(String::as_str).collect();
        format!(" (first: {})", head.join(", "))
    }
}

/// The shared sweep behind criteria 5 to 7: `H = 4n`, slab height twice the
/// largest extent observed in the sweep itself.
pub fn penalization_sweep(scale: Scale, seed: u64) -> fpp_core::Result<SweepOutcome> {
    let sizes: [(usize, usize); 5] = [(2, 4), (2, 8), (2, 16), (3, 2), (3, 4)];
    let per_size = scale.pick(2000u64, 100);
    let d12 = dist(1, 2, 1, 2);
    let mut out = SweepOutcome {
        instances: 0,
        bound_violations: Vec::new(),
        max_gap_ratio: 0.0,
        slab_violations: Vec::new(),
        full_slab_violations: Vec::new(),
        size_violations: Vec::new(),
        slab_heights: Vec::new(),
    };
    for (d, n) in sizes {
        let s = spec(d, n, 4 * n);
        let lattice = LatticeIndex::new(s)?;
        let first: Vec<(i64, usize)> = (0..per_size)
            .into_par_iter()
            .map_init(
                || LatticeFlow::bottom_top(&lattice),
                |solver, i| {
                    let field = sample_field(&lattice, d12, seed, i);
                    let v = solver.solve(&field.values);
                    (v, solver.canonical_cut().extent())
                },
            )
            .collect();
        let max_extent = first.iter().map(|x| x.1).max().unwrap_or(1);
        let h = (2 * max_extent).clamp(1, s.height);
        out.slab_heights.push(format!("d{d}n{n}:{h}"));
        let params = PenaltyParams::new(0.1, 0.2, h)?;
        let full_params = PenaltyParams::new(0.1, 0.2, s.height)?;
        let slab = slab_lattice(&s, h)?;
        let whole = slab_lattice(&s, s.height)?;
        let bound = penalty_bound(d, n);
        let flat = (n as i64 + 1).pow(d as u32 - 1);
        let results = (0..per_size)
            .into_par_iter()
            .map_init(
                || {
                    (
                        SlicedFlows::new(&lattice, &slab).expect("fits"),
                        SlicedFlows::new(&lattice, &whole).expect("fits"),
                    )
                },
                |(sliced, full), i| -> fpp_core::Result<(f64, bool, bool, bool)> {
                    let field = sample_field(&lattice, d12, seed, i);
                    let phi = first[i as usize].0;
                    let profile = penalty_profile(&params, &s, &d12, seed, i)?;
                    let min = penalized_minimum_with(sliced, &field.values, &profile, &params)?;
                    let full_profile = penalty_profile(&full_params, &s, &d12, seed, i)?;
                    let full_min = penalized_minimum_with(full, &field.values, &full_profile, &full_params)?;
                    let size_ok = d12.low() * min.cut.len() as i64 <= d12.high() * flat;
                    Ok(((min.phi_tilde - phi as f64).abs(), min.min_x() == phi, full_min.min_x() == phi, size_ok))
                },
            )
            .collect::<fpp_core::Result<Vec<_>>>()?;
        for (i, &(gap, slab_ok, full_ok, size_ok)) in results.iter().enumerate() {
            let tag = format!("d{d}n{n}#{i}");
            out.max_gap_ratio = out.max_gap_ratio.max(gap / bound);
            if gap > bound + 1e-9 {
                out.bound_violations.push(tag.clone());
            }
            if !slab_ok {
                out.slab_violations.push(tag.clone());
            }
            if !full_ok {
                out.full_slab_violations.push(tag.clone());
            }
            if !size_ok {
                out.size_violations.push(tag);
            }
        }
        out.instances += per_size;
    }
    Ok(out)
}

fn chimney(scale: Scale, seed: u64) -> Outcome {
    let count = scale.pick(1000, 100);
    let results = (0..count)
        .into_par_iter()
        .map(|k| -> fpp_core::Result<usize> {
            let mut p = Picker::new(seed ^ 8, k);
            let d = p.range(2, 3) as usize;
            let n = p.range(1, if d == 2 { 8 } else { 4 }) as usize;
            let h = p.range(2, 12) as usize;
            let dist = p.dist();
            let lattice = LatticeIndex::new(spec(d, n, h))?;
            let field = sample_field(&lattice, dist, seed, k);
            let mut solver = LatticeFlow::bottom_top(&lattice);
            solver.solve(&field.values);
            Ok(chimney_scan(&lattice, &field, &solver.canonical_cut().edges)?.violations().len())
        })
        .collect::<fpp_core::Result<Vec<_>>>()?;
    let bad: Vec<usize> = results.iter().enumerate().filter(|(_, &v)| v > 0).map(|(k, _)| k).collect();
    Ok((bad.is_empty(), format!("{count} minimal cuts, {} with violations {:?}", bad.len(), bad)))
}

fn sandwich(scale: Scale, seed: u64) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [4usize, 8, 16] {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, n, 2 * n), dist(1, 2, 1, 2), scale.pick(10_000, 500), seed);
        let var = estimate_variance(&plan)?;
        let es = efron_stein_rhs(&plan)?;
        let np = newman_piza_lhs(&plan)?;
        let upper = 4.0 * (var.stderr_of_variance.powi(2) + es.stderr_of_mean.powi(2)).sqrt();
        let lower = 4.0 * (var.stderr_of_variance.powi(2) + np.stderr.powi(2)).sqrt();
        let holds = np.value - lower <= var.variance && var.variance <= es.mean + upper;
        ok &= holds;
        parts.push(format!(
            "n={n}: NP {} <= Var {} <= ES {}{}",
            num(round4(np.value)),
            num(round4(var.variance)),
            num(round4(es.mean)),
            if holds { "" } else { " FAILS" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn lipschitz(scale: Scale, seed: u64) -> Outcome {
    let count = scale.pick(500, 60);
    let results = (0..count)
        .into_par_iter()
        .map(|k| -> fpp_core::Result<Option<String>> {
            let mut p = Picker::new(seed ^ 10, k);
            let d = p.range(2, 3) as usize;
            let (n, h) = if d == 2 {
                (p.range(0, 3) as usize, p.range(1, 4) as usize)
            } else {
                (1, p.range(1, 3) as usize)
            };
            let dist = p.dist();
            let lattice = LatticeIndex::new(spec(d, n, h))?;
            let w = sample_vertex_weights(&lattice, dist, seed, k);
            let value = solve_lipschitz(&lattice, &w)?.0;
            let brute = brute_force_lipschitz(&lattice, &w)?;
            let mid = h / 2;
            let anchored = solve_anchored_lipschitz(&lattice, &w, mid)?.0;
            let anchored_brute = brute_force_anchored_lipschitz(&lattice, &w, mid)?;
            Ok((value != brute || anchored != anchored_brute || anchored < value)
                .then(|| format!("#{k} d{d}n{n}H{h}: {value}/{brute} anchored {anchored}/{anchored_brute}")))
        })
        .collect::<fpp_core::Result<Vec<_>>>()?;
    let bad: Vec<String> = results.into_iter().flatten().collect();
    Ok((bad.is_empty(), format!("{count} instances, {} failures{}", bad.len(), sample_list(&bad))))
}

fn boundary(scale: Scale, seed: u64) -> Outcome {
    let n = scale.pick(16usize, 8);
    let s = spec(2, n, 4 * n);
    let d = dist(1, 2, 1, 2);
    let h = fpp_core::estimators::default_slab_height(&s, d, seed, 200)?;
    let params = PenaltyParams::new(0.1, 0.2, h)?;
    let plan = MonteCarloPlan::new(Quantity::PenalizedPhi, s, d, scale.pick(10_000, 500), seed).with_params(params);
    let prof = influence_profile(
        &plan,
        &InfluenceOptions {
            derivatives: false,
            ..InfluenceOptions::default()
        },
    )?;
    let total = plan.n_samples as f64;
    let low: u64 = prof.j0_counts.iter().take(2).sum();
    let p = low as f64 / total;
    let se = (p * (1.0 - p) / total).sqrt();
    let avoid_bound = 2.0 / (n as f64).sqrt();
    let shift_bound = 2.0 / (n as f64).powf(params.epsilon / 2.0);
    let avoid_ok = p <= avoid_bound + 4.0 * se;
    let shift_ok = prof.shift.max_excess <= shift_bound;
    Ok((
        avoid_ok && shift_ok,
        format!(
            "slab height {h}; P(j0 in lowest two) = {} (se {}) vs {}; max shift diff {} (se {}) vs {}",
            num(round4(p)),
            num(round4(se)),
            num(round4(avoid_bound)),
            num(round4(prof.shift.max_diff)),
            num(round4(prof.shift.stderr_at_max)),
            num(round4(shift_bound))
        ),
    ))
}

fn subadditivity(scale: Scale, seed: u64) -> Outcome {
    let sizes: [(usize, usize, usize, u64); 3] = [(2, 8, 8, 400), (2, 16, 8, 300), (3, 4, 4, 300)];
    let mut total = 0;
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for (d, n, h, count) in sizes {
        let count = scale.pick(count, count / 10);
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(d, n, h), dist(1, 2, 1, 2), count, seed);
        let r = subadditivity_defect(&plan, n / 2)?;
        total += count;
        parts.push(format!("d{d}n{n}: mean defect/n^(d-1) {}", num(round4(r.defect.mean))));
        bad.extend(r.violations.iter().map(|i| format!("d{d}n{n}#{i}")));
    }
    Ok((
        bad.is_empty(),
        format!("{total} instances, {} negative defects; {}", bad.len(), parts.join("; ")),
    ))
}

pub fn trend_rows(scale: Scale, seed: u64) -> fpp_core::Result<Vec<TrendRow>> {
    let ns: &[usize] = match scale {
        Scale::Full => &[4, 8, 16, 32],
        Scale::Quick => &[4, 8],
    };
    superconcentration_trend(2, ns, 2.0, dist(1, 2, 1, 2), scale.pick(2000, 200), seed)
}

pub fn trend_csv(rows: &[TrendRow]) -> String {
    let mut out = String::from("n,height,variance,stderr,scaled,scaled_stderr\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.height,
            num(r.estimate.variance),
            num(r.estimate.stderr_of_variance),
            num(r.scaled),
            num(r.scaled_stderr)
        ));
    }
    out
}

fn trend(scale: Scale, seed: u64) -> Outcome {
    let first = trend_csv(&trend_rows(scale, seed)?);
    let second = trend_csv(&trend_rows(scale, seed)?);
    let table: Vec<String> = first
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("n={} Var*ln n/n = {}", f[0], f[4])
        })
        .collect();
    Ok((
        first == second,
        format!(
            "{}; rerun {}",
            table.join("; "),
            if first == second { "byte-identical" } else { "differs" }
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_instance_list() {
        let list = tiny_instances(20);
        assert!(list.iter().all(|s| LatticeIndex::new(*s).unwrap().num_edges() <= 20));
        assert!(list.contains(&spec(2, 0, 20)) && list.contains(&spec(3, 1, 2)));
        assert!(!list.contains(&spec(2, 8, 1)));
    }

    #[test]
    fn quick_criteria_pass() {
        for id in [1u8, 3, 8, 10, 12] {
            let r = run_criterion(id, Scale::Quick, 1).unwrap();
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(14, Scale::Quick, 1).is_err());
    }
}
