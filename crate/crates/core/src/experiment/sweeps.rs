use log::info;

use crate::envelope::{envelope, envelope_hoelder_report, hoelder_synthesizer};
use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::regularization::{
    gkz_modulus_test, measure_c0, MollifierKernel, DEFAULT_QUAD_RESOLUTION,
};
use crate::solver::{
    check_sub_supersolution, comparison_audits, mass_lower_bound_audit, perturbation_subsolution,
    solve_exponential, solve_exponential_from, solve_normalized, MassCorpus, SolveResult,
};
use crate::spectral::{fit_exponent, hoelder_window, laplacian_mass, lp_norm, modulus_ladder};
use crate::torus::{curvature_constants, make_grid, make_metric, MetricFamily, MetricField};

use super::families::{perturb, perturbation_bump, DensityFamily, Member, PerturbationKind};
use super::report::{hash_hex, ExperimentReport, LabeledFit, ReportRow, RowVerdict, Verdict};
use super::{map_rows, Equation, ExperimentConfig};

const SLOPE_TOL: f64 = 0.1;
const HOELDER_TOL: f64 = 0.05;
const BOUND_FACTOR: f64 = 2.0;
const CF_CONTROL_TOL: f64 = 1e-8;
const MASS_IDENTITY_TOL: f64 = 1e-8;
const ENVELOPE_TOL: f64 = 1e-8;

fn row_hash(report: &ExperimentReport, seed: u64, level: f64, label: &str) -> String {
    hash_hex(&format!(
        "{}|{seed}|{level:e}|{label}",
        report.provenance.config_hash
    ))
}

fn solve(
    eq: Equation,
    f: &ScalarField,
    metric: &MetricField,
    cfg: &ExperimentConfig,
) -> Result<SolveResult> {
    match eq {
        Equation::Exponential => solve_exponential(f, metric, &cfg.solver),
        Equation::Normalized => solve_normalized(f, metric, &cfg.solver),
    }
}

/// Weight of `u ≡ 0` in the warm start `(1 − s) u_f`; it keeps the starting
/// form strictly positive where `u_f` is degenerate.
const WARM_START_SHRINK: f64 = 0.05;

/// Solves for a perturbation `g` of `f` given the solution `base` for `f`.
/// The exponential form starts from `(1 − s) u_f` and falls back to a cold
/// solve.
fn solve_near(
    eq: Equation,
    g: &ScalarField,
    base: &SolveResult,
    metric: &MetricField,
    cfg: &ExperimentConfig,
) -> Result<SolveResult> {
    if eq == Equation::Normalized {
        return solve_normalized(g, metric, &cfg.solver);
    }
    let mut warm = cfg.solver.clone();
    warm.continuation_steps = 1;
    let start = base.u.scale(1.0 - WARM_START_SHRINK);
    solve_exponential_from(g, metric, &warm, &start)
        .or_else(|_| solve_exponential(g, metric, &cfg.solver))
}

/// Relative defect of `c ∫ f ω^n = ∫ ω^n`, on Kähler (flat) metrics only.
fn mass_defect(c: f64, f: &ScalarField, metric: &MetricField) -> Result<Option<f64>> {
    if !metric.is_flat() {
        return Ok(None);
    }
    let mass = lp_norm(&f.map(f64::abs), 1.0, metric)?;
    Ok(Some((c * mass / metric.volume() - 1.0).abs()))
}

fn exclude(row: &mut ReportRow, err: &MageError) {
    row.converged = false;
    row.verdict = RowVerdict::Excluded;
    row.note = Some(err.to_string());
}

fn check_failures(rows: &[ReportRow]) -> Result<()> {
    let failed = rows.iter().filter(|r| !r.converged).count();
    if 2 * failed > rows.len() {
        return Err(MageError::SweepFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

/// Largest ratio on the second half of a ladder over the largest on the
/// first half.
fn out_of_sample_ratio(ratios: &[f64]) -> (f64, f64, f64) {
    let half = ratios.len() / 2;
    let c_in = ratios[..half].iter().copied().fold(0.0, f64::max);
    let c_out = ratios[half..].iter().copied().fold(0.0, f64::max);
    let value = if c_out == 0.0 { 0.0 } else { c_out / c_in };
    (c_in, c_out, value)
}

#[derive(Clone, Copy, PartialEq)]
enum Quantity {
    Solution,
    Constant,
}

/// `‖u−v‖_sup` against `‖f−g‖_p` over the perturbation ladder.
pub fn stability_sweep(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentReport> {
    perturbation_sweep(cfg, deterministic, Quantity::Solution)
}

/// `|c_f − c_g|` against `‖f−g‖_p` over the perturbation ladder.
pub fn cf_stability_sweep(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentReport> {
    perturbation_sweep(cfg, deterministic, Quantity::Constant)
}

struct Base {
    f: ScalarField,
    bump: ScalarField,
    sol: SolveResult,
}

fn perturbation_sweep(
    cfg: &ExperimentConfig,
    deterministic: bool,
    quantity: Quantity,
) -> Result<ExperimentReport> {
    let grid = cfg.grid_spec()?;
    let metric = make_metric(grid, &cfg.metric)?;
    let n = grid.n as f64;
    let equation = match quantity {
        Quantity::Solution => cfg.equation,
        Quantity::Constant => Equation::Normalized,
    };
    let member = cfg.density_family.members()[0];
    let mut report = ExperimentReport::new(cfg);
    let kind = cfg.experiment;

    let bases: Vec<Result<Base>> = map_rows(cfg.seeds.clone(), deterministic, |seed| {
        let f = cfg.density_family.sample(member, seed, cfg.p, &metric)?;
        let bump = perturbation_bump(&cfg.density_family, cfg.bump_width, seed, grid);
        let sol = solve(equation, &f, &metric, cfg)?;
        Ok(Base { f, bump, sol })
    });

    let mut tasks = Vec::new();
    for (si, &seed) in cfg.seeds.iter().enumerate() {
        tasks.push((si, seed, None));
        for &eps in &cfg.perturbation_levels {
            tasks.push((si, seed, Some(eps)));
        }
    }
    let rows: Vec<ReportRow> = map_rows(tasks, deterministic, |(si, seed, eps)| {
        let label = match eps {
            None => "control".to_string(),
            Some(_) => format!("{:?}", cfg.perturbation).to_lowercase(),
        };
        let mut row = ReportRow::new(kind, seed, eps.unwrap_or(0.0), label.clone());
        row.control = eps.is_none();
        row.inputs_hash = row_hash(&report, seed, row.level, &label);
        let base = match &bases[si] {
            Ok(b) => b,
            Err(e) => {
                exclude(&mut row, e);
                return row;
            }
        };
        let outcome = (|| -> Result<()> {
            let (g, sol) = match eps {
                None => (base.f.clone(), solve(equation, &base.f, &metric, cfg)?),
                Some(e) => {
                    let g = perturb(&base.f, &base.bump, e, cfg.perturbation)?;
                    let sol = solve_near(equation, &g, &base.sol, &metric, cfg)?;
                    (g, sol)
                }
            };
            row.lp_diff = Some(lp_norm(&base.f.sub(&g)?, cfg.p, &metric)?);
            row.sup_diff = Some(base.sol.u.sup_distance(&sol.u)?);
            row.g_norm = Some(lp_norm(&g, 1.0 / n, &metric)?);
            if equation == Equation::Normalized {
                row.c_diff = Some((base.sol.c - sol.c).abs());
                let df = mass_defect(base.sol.c, &base.f, &metric)?;
                let dg = mass_defect(sol.c, &g, &metric)?;
                row.mass_identity = df.zip(dg).map(|(a, b)| a.max(b));
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            exclude(&mut row, &e);
            return row;
        }
        if row.control {
            let passed = match quantity {
                Quantity::Solution => row.sup_diff.unwrap() <= 10.0 * cfg.solver.tol_residual,
                Quantity::Constant => row.c_diff.unwrap() <= CF_CONTROL_TOL,
            };
            row.verdict = RowVerdict::from_bool(passed);
        }
        row
    });
    check_failures(&rows)?;
    report.rows = rows;

    let flat_control = quantity == Quantity::Constant && metric.is_flat();
    let exponent = if flat_control { 1.0 } else { 1.0 / n };
    let slope_min = exponent - SLOPE_TOL;
    report.targets = vec![
        ("exponent".into(), exponent),
        ("slope_threshold".into(), slope_min),
        ("bound_factor".into(), BOUND_FACTOR),
    ];
    let control_threshold = match quantity {
        Quantity::Solution => 10.0 * cfg.solver.tol_residual,
        Quantity::Constant => CF_CONTROL_TOL,
    };
    for &seed in &cfg.seeds {
        let value = |r: &ReportRow| match quantity {
            Quantity::Solution => r.sup_diff,
            Quantity::Constant => r.c_diff,
        };
        if let Some(ctrl) = report.rows.iter().find(|r| r.seed == seed && r.control) {
            report.verdicts.push(Verdict::at_most(
                format!("CONTROL[seed={seed}]"),
                value(ctrl).unwrap_or(f64::NAN),
                control_threshold,
                "difference for g = f",
            ));
        }
        let data: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.seed == seed && !r.control && r.verdict == RowVerdict::Ok)
            .filter_map(|r| Some((r.lp_diff?, value(r)?)))
            .filter(|&(x, y)| x > 0.0 && y > 0.0)
            .collect();
        let fit = fit_exponent(&data).ok();
        if let Some(fit) = fit {
            report.fits.push(LabeledFit {
                label: format!("seed={seed}"),
                fit,
            });
            for r in report
                .rows
                .iter_mut()
                .filter(|r| r.seed == seed && !r.control)
            {
                r.fit_slope = Some(fit.slope);
            }
        }
        report.verdicts.push(Verdict::at_least(
            format!("SLOPE[seed={seed}]"),
            fit.map_or(f64::NAN, |f| f.slope),
            slope_min,
            "fitted log-log slope >= exponent - 0.1",
        ));
        let ratios: Vec<f64> = data.iter().map(|&(x, y)| y / x.powf(exponent)).collect();
        let (c_in, c_out, ratio) = if ratios.len() >= 4 {
            out_of_sample_ratio(&ratios)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        report.verdicts.push(Verdict::at_most(
            format!("BOUND[seed={seed}]"),
            ratio,
            BOUND_FACTOR,
            &format!(
                "C_out / C_in <= 2 with C = difference / lp_diff^{exponent}; C_in = {c_in:e} on the first half, C_out = {c_out:e} on the second"
            ),
        ));
    }
    info!("{} sweep: {} rows", kind.as_str(), report.rows.len());
    Ok(report)
}

/// The Hölder exponent target `p_n = 2/(nq + 1)` with `1/p + 1/q = 1`.
pub fn hoelder_target(n: usize, p: f64) -> f64 {
    let q = p / (p - 1.0);
    2.0 / (n as f64 * q + 1.0)
}

/// Solves the normalized equation for every family member (plus a smooth
/// control per seed) and fits the modulus exponent of each solution.
pub fn hoelder_sweep(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentReport> {
    let grid = cfg.grid_spec()?;
    let metric = make_metric(grid, &cfg.metric)?;
    let deltas = hoelder_window(grid);
    if deltas.len() < 3 {
        return Err(MageError::ConfigInvalid {
            field: "grid".into(),
            message: format!(
                "R = {} leaves fewer than 3 scales in [4/R, 1/4]",
                grid.resolution
            ),
        });
    }
    let target = hoelder_target(grid.n, cfg.p);
    let threshold = target - HOELDER_TOL;
    let mut report = ExperimentReport::new(cfg);
    report.targets = vec![("p_n".into(), target), ("threshold".into(), threshold)];
    let control_family = DensityFamily::Smooth {
        amplitude: 0.3,
        modes: 3,
    };
    let mut tasks: Vec<(u64, Option<Member>)> = Vec::new();
    for &seed in &cfg.seeds {
        tasks.push((seed, None));
        for m in cfg.density_family.members() {
            tasks.push((seed, Some(m)));
        }
    }
    let rows: Vec<ReportRow> = map_rows(tasks, deterministic, |(seed, member)| {
        let (family, member, label) = match member {
            None => (
                &control_family,
                control_family.members()[0],
                "control:smooth".to_string(),
            ),
            Some(m) => (
                &cfg.density_family,
                m,
                cfg.density_family.label().to_string(),
            ),
        };
        let mut row = ReportRow::new(cfg.experiment, seed, member.param, label.clone());
        row.control = label.starts_with("control");
        row.inputs_hash = row_hash(&report, seed, row.level, &label);
        let outcome = (|| -> Result<()> {
            let f = family.sample(member, seed, cfg.p, &metric)?;
            let sol = solve_normalized(&f, &metric, &cfg.solver)?;
            let taus = modulus_ladder(&sol.u, &deltas)?;
            let pts: Vec<(f64, f64)> = deltas.iter().copied().zip(taus).collect();
            row.lp_diff = Some(lp_norm(&f, cfg.p, &metric)?);
            row.sup_diff = Some(sol.u.sup() - sol.u.inf());
            row.c_diff = Some(sol.c);
            row.mass_identity = mass_defect(sol.c, &f, &metric)?;
            row.fit_slope = Some(fit_exponent(&pts)?.slope);
            Ok(())
        })();
        match outcome {
            Ok(()) => row.verdict = RowVerdict::from_bool(row.fit_slope.unwrap() >= threshold),
            Err(e) => exclude(&mut row, &e),
        }
        row
    });
    check_failures(&rows)?;
    for r in &rows {
        report.verdicts.push(Verdict::at_least(
            format!("HOELDER[seed={},{}={}]", r.seed, r.label, r.level),
            r.fit_slope.unwrap_or(f64::NAN),
            threshold,
            "measured exponent >= p_n - 0.05",
        ));
    }
    report.rows = rows;
    Ok(report)
}

/// Envelopes of synthesized `C^{0,α}` obstacles for each nominal exponent
/// and seed, plus a constant obstacle per seed.
pub fn envelope_hoelder_sweep(
    cfg: &ExperimentConfig,
    deterministic: bool,
) -> Result<ExperimentReport> {
    let grid = cfg.grid_spec()?;
    let metric = make_metric(grid, &cfg.metric)?;
    let deltas = hoelder_window(grid);
    let mut report = ExperimentReport::new(cfg);
    report.targets = vec![("exponent_tolerance".into(), HOELDER_TOL)];
    let mut tasks: Vec<(u64, Option<f64>)> = Vec::new();
    for &seed in &cfg.seeds {
        tasks.push((seed, None));
        for &a in &cfg.alphas {
            tasks.push((seed, Some(a)));
        }
    }
    let results: Vec<(ReportRow, Option<f64>)> = map_rows(tasks, deterministic, |(seed, alpha)| {
        let label = if alpha.is_some() {
            "synthesized"
        } else {
            "control:constant"
        };
        let mut row = ReportRow::new(cfg.experiment, seed, alpha.unwrap_or(0.0), label);
        row.control = alpha.is_none();
        row.inputs_hash = row_hash(&report, seed, row.level, label);
        let mut below = None;
        let outcome = (|| -> Result<()> {
            let f = match alpha {
                Some(a) => hoelder_synthesizer(a, seed, grid)?,
                None => ScalarField::constant(grid, 0.3),
            };
            let (rep, env) =
                envelope_hoelder_report(&f, alpha.unwrap_or(0.5), &metric, &deltas, &cfg.envelope)?;
            let gap = f.sub(&env.p)?;
            below = Some(-gap.inf());
            row.sup_diff = Some(gap.sup());
            row.fit_slope = rep.fit_p.map(|fit| fit.slope);
            row.lp_diff = rep.fit_f.map(|fit| fit.slope);
            let passed = match alpha {
                Some(a) => rep.passed && row.fit_slope.is_none_or(|s| s >= a - HOELDER_TOL),
                None => rep.tau_p.iter().all(|&t| t <= 1e-12),
            };
            row.verdict = RowVerdict::from_bool(passed);
            Ok(())
        })();
        if let Err(e) = outcome {
            exclude(&mut row, &e);
        }
        (row, below)
    });
    let rows: Vec<ReportRow> = results.iter().map(|(r, _)| r.clone()).collect();
    check_failures(&rows)?;
    for r in &rows {
        let (name, value, threshold, rule) = if r.control {
            (
                format!("CONTROL[seed={}]", r.seed),
                if r.verdict == RowVerdict::Pass {
                    0.0
                } else {
                    f64::NAN
                },
                0.0,
                "modulus of the envelope of a constant vanishes",
            )
        } else {
            (
                format!("ENVELOPE_HOELDER[seed={},alpha={}]", r.seed, r.level),
                match (r.verdict, r.fit_slope) {
                    (RowVerdict::Pass, None) => f64::INFINITY,
                    (RowVerdict::Pass | RowVerdict::Fail, Some(s)) => s,
                    _ => f64::NAN,
                },
                r.level - HOELDER_TOL,
                "envelope exponent >= alpha - 0.05 and >= obstacle exponent - 0.05",
            )
        };
        let mut v = Verdict::at_least(name, value, threshold, rule);
        v.passed = r.verdict == RowVerdict::Pass;
        report.verdicts.push(v);
    }
    let worst = results
        .iter()
        .filter_map(|(_, b)| *b)
        .fold(f64::NEG_INFINITY, f64::max);
    report.verdicts.push(Verdict::at_most(
        "P_BELOW_F",
        worst,
        ENVELOPE_TOL,
        "sup(P - f) <= 1e-8",
    ));
    report.rows = rows;
    Ok(report)
}

struct PairInstance {
    f: ScalarField,
    g: ScalarField,
}

fn pair_instance(
    cfg: &ExperimentConfig,
    seed: u64,
    eps: f64,
    metric: &MetricField,
) -> Result<PairInstance> {
    let member = cfg.density_family.members()[0];
    let f = cfg.density_family.sample(member, seed, cfg.p, metric)?;
    let bump = perturbation_bump(&cfg.density_family, cfg.bump_width, seed, metric.grid);
    let g = perturb(&f, &bump, eps, PerturbationKind::Additive)?;
    Ok(PairInstance { f, g })
}

fn instance_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    cfg.seeds[i % cfg.seeds.len()]
        .wrapping_mul(1000)
        .wrapping_add(i as u64)
}

/// Comparison-type audits over a generated corpus.
pub fn audit_suite(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentReport> {
    let grid = cfg.grid_spec()?;
    let flat = make_metric(grid, &MetricFamily::FlatKahler)?;
    let herm = if matches!(cfg.metric, MetricFamily::FlatKahler) {
        let hg = &cfg.audit.hermitian_grid;
        let hgrid = make_grid(hg.n, hg.r).map_err(|e| MageError::ConfigInvalid {
            field: "audit.hermitian_grid".into(),
            message: e.to_string(),
        })?;
        make_metric(hgrid, &cfg.audit.hermitian_metric)?
    } else {
        make_metric(grid, &cfg.metric)?
    };
    let kind = cfg.experiment;
    let mut report = ExperimentReport::new(cfg);
    let audit = &cfg.audit;

    // Kähler comparison, domination, sub/supersolution and mass audits.
    struct KahlerOutcome {
        row: ReportRow,
        violations: usize,
        domination: bool,
        subsuper: bool,
        mass: Option<(crate::solver::MassAudit, f64, f64)>,
    }
    let kahler: Vec<KahlerOutcome> = map_rows((0..audit.instances).collect(), deterministic, |i| {
        let seed = instance_seed(cfg, i);
        let mut row = ReportRow::new(kind, seed, i as f64, "kahler_comparison");
        row.inputs_hash = row_hash(&report, seed, row.level, "kahler_comparison");
        let mut out = KahlerOutcome {
            row: row.clone(),
            violations: 0,
            domination: true,
            subsuper: true,
            mass: None,
        };
        let res = (|| -> Result<()> {
            let inst = pair_instance(cfg, seed, audit.pair_eps, &flat)?;
            let u = solve_exponential(&inst.f, &flat, &cfg.solver)?.u;
            let v = solve_exponential(&inst.g, &flat, &cfg.solver)?.u;
            let constants = curvature_constants(&flat);
            let cmp = comparison_audits(&u, &v, &flat, &constants, &[], &audit.comparison_shifts)?;
            out.violations = cmp.violations;
            let dom = comparison_audits(&u, &u.shift(-0.1), &flat, &constants, &[], &[])?;
            out.domination = dom.domination_holds;
            // g ≥ f makes v a subsolution against u.
            let ss = check_sub_supersolution(&v, &u, 1.0, &flat)?;
            out.subsuper = ss.passed;
            let norm = solve_normalized(&inst.f, &flat, &cfg.solver)?;
            let cf = inst.f.scale(norm.c);
            let defect = mass_defect(norm.c, &inst.f, &flat)?.unwrap_or(0.0);
            out.mass = Some((
                mass_lower_bound_audit(&cf, &flat, cfg.p)?,
                laplacian_mass(&norm.u, &flat)?,
                defect,
            ));
            out.row.lp_diff = Some(lp_norm(&inst.f.sub(&inst.g)?, cfg.p, &flat)?);
            out.row.sup_diff = Some(v.sub(&u)?.sup());
            out.row.c_diff = Some(defect);
            Ok(())
        })();
        match res {
            Ok(()) => {
                out.row.verdict =
                    RowVerdict::from_bool(out.violations == 0 && out.domination && out.subsuper);
            }
            Err(e) => exclude(&mut out.row, &e),
        }
        out
    });

    // Perturbation construction `φ ≤ v`.
    let constructions: Vec<(ReportRow, Option<bool>)> =
        map_rows((0..audit.pairs).collect(), deterministic, |i| {
            let seed = instance_seed(cfg, 500 + i);
            let mut row = ReportRow::new(kind, seed, i as f64, "perturbation_construction");
            row.inputs_hash = row_hash(&report, seed, row.level, "perturbation_construction");
            let mut applicable = None;
            let res = (|| -> Result<()> {
                let inst = pair_instance(cfg, seed, audit.construction_eps, &flat)?;
                let pa = perturbation_subsolution(&inst.f, &inst.g, cfg.p, &flat, &cfg.solver)?;
                row.lp_diff = Some(pa.lp_diff);
                row.level = i as f64;
                row.fit_slope = None;
                row.c_diff = Some(pa.eps);
                if let Some(a) = &pa.audit {
                    row.sup_diff = Some(a.max_excess);
                    applicable = Some(a.passed);
                }
                Ok(())
            })();
            match res {
                Ok(()) => row.verdict = RowVerdict::from_bool(applicable.unwrap_or(false)),
                Err(e) => exclude(&mut row, &e),
            }
            (row, applicable)
        });

    // Modified comparison on the Hermitian metric.
    let modified: Vec<(ReportRow, f64)> = map_rows(
        (0..audit.hermitian_instances).collect(),
        deterministic,
        |i| {
            let seed = instance_seed(cfg, 900 + i);
            let mut row = ReportRow::new(kind, seed, i as f64, "modified_comparison");
            row.inputs_hash = row_hash(&report, seed, row.level, "modified_comparison");
            let mut ratio = f64::NAN;
            let res = (|| -> Result<()> {
                let inst = pair_instance(cfg, seed, audit.pair_eps, &herm)?;
                let u = solve_exponential(&inst.f, &herm, &cfg.solver)?.u;
                let v = solve_exponential(&inst.g, &herm, &cfg.solver)?.u;
                let constants = curvature_constants(&herm);
                let cmp = comparison_audits(&u, &v, &herm, &constants, &audit.comparison_eps, &[])?;
                let cs: Vec<f64> = cmp.rows.iter().map(|r| r.empirical_c).collect();
                row.c_diff = Some(cmp.empirical_c);
                ratio = if !cs.is_empty() && cs.iter().all(|&c| c == 0.0) {
                    0.0
                } else if cs.len() >= 2 {
                    out_of_sample_ratio(&cs).2
                } else {
                    f64::NAN
                };
                row.fit_slope = None;
                row.sup_diff = Some(ratio);
                row.verdict = RowVerdict::from_bool(cmp.passed && ratio <= BOUND_FACTOR);
                Ok(())
            })();
            if let Err(e) = res {
                exclude(&mut row, &e);
            }
            (row, ratio)
        },
    );

    // GKZ modulus propagation on envelope fixtures.
    let kernel = MollifierKernel::new(grid, DEFAULT_QUAD_RESOLUTION)?;
    let deltas = hoelder_window(grid);
    let gkz: Vec<ReportRow> = map_rows(cfg.alphas.clone(), deterministic, |alpha| {
        let seed = cfg.seeds[0];
        let mut row = ReportRow::new(kind, seed, alpha, "gkz_envelope");
        row.inputs_hash = row_hash(&report, seed, alpha, "gkz_envelope");
        let res = (|| -> Result<bool> {
            let f = hoelder_synthesizer(alpha, seed, grid)?;
            let p = envelope(&f, &flat, &cfg.envelope)?.p;
            let c0 = measure_c0(&p, alpha, &kernel)?;
            let a = gkz_modulus_test(&p, alpha, c0, &kernel, &deltas)?;
            row.c_diff = Some(a.c_prime);
            row.fit_slope = Some(a.trend_slope + alpha);
            Ok(a.passed)
        })();
        match res {
            Ok(passed) => row.verdict = RowVerdict::from_bool(passed),
            Err(e) => exclude(&mut row, &e),
        }
        row
    });

    let mut corpus = MassCorpus::default();
    let mut max_defect: f64 = 0.0;
    for k in &kahler {
        if let Some((m, lap, defect)) = &k.mass {
            corpus.record(m.clone(), *lap);
            max_defect = max_defect.max(*defect);
        }
    }
    let ok_kahler: Vec<&KahlerOutcome> = kahler.iter().filter(|k| k.row.converged).collect();
    let count = |n: usize| format!("{n} of {} instances", ok_kahler.len());
    let kv: usize = ok_kahler.iter().map(|k| k.violations).sum();
    let dom_fail = ok_kahler.iter().filter(|k| !k.domination).count();
    let ss_fail = ok_kahler.iter().filter(|k| !k.subsuper).count();
    let missing = |done: usize, want: usize| if done == want { 0.0 } else { f64::NAN };
    let kahler_missing = missing(ok_kahler.len(), audit.instances);
    report.verdicts.push(Verdict::at_most(
        "KAHLER_COMPARISON",
        kv as f64 + kahler_missing,
        0.0,
        &format!(
            "no violations of the sublevel-set mass comparison ({})",
            count(kv)
        ),
    ));
    report.verdicts.push(Verdict::at_most(
        "DOMINATION",
        dom_fail as f64 + kahler_missing,
        0.0,
        "{u < u - 0.1} is empty and the principle holds vacuously",
    ));
    report.verdicts.push(Verdict::at_most(
        "SUB_SUPERSOLUTION",
        ss_fail as f64 + kahler_missing,
        0.0,
        "hypothesis implies u <= v on every solved pair",
    ));
    let cons_fail = constructions
        .iter()
        .filter(|(r, a)| !r.converged || *a != Some(true))
        .count();
    report.verdicts.push(Verdict::at_most(
        "PERTURBATION_CONSTRUCTION",
        cons_fail as f64,
        0.0,
        "phi <= v for every constructed pair (construction applicable)",
    ));
    let mod_bad = modified
        .iter()
        .filter(|(r, ratio)| r.verdict != RowVerdict::Pass || !(*ratio <= BOUND_FACTOR))
        .count();
    report.verdicts.push(Verdict::at_most(
        "MODIFIED_COMPARISON",
        mod_bad as f64,
        0.0,
        "empirical C finite and C_out / C_in <= 2 across the eps ladder",
    ));
    let min_mass = corpus
        .records
        .iter()
        .map(|(a, _)| a.lp_norm)
        .fold(0.0, f64::max);
    let min_mass = corpus.min_mass(min_mass).unwrap_or(f64::NAN);
    report.verdicts.push(Verdict::at_least(
        "MASS_LOWER_BOUND",
        min_mass,
        f64::MIN_POSITIVE,
        "admissible densities in the corpus have positive mass",
    ));
    report.verdicts.push(Verdict::at_most(
        "MASS_IDENTITY",
        max_defect + kahler_missing,
        MASS_IDENTITY_TOL,
        "c * int f w^n = int w^n within 1e-8 relative",
    ));
    let gkz_fail = gkz.iter().filter(|r| r.verdict != RowVerdict::Pass).count();
    report.verdicts.push(Verdict::at_most(
        "GKZ",
        gkz_fail as f64,
        0.0,
        "modulus exponent propagates from the smoothing hypothesis",
    ));
    report.targets = vec![
        ("laplacian_band".into(), corpus.laplacian_band()),
        ("bound_factor".into(), BOUND_FACTOR),
    ];
    let mut rows: Vec<ReportRow> = kahler.into_iter().map(|k| k.row).collect();
    rows.extend(constructions.into_iter().map(|(r, _)| r));
    rows.extend(modified.into_iter().map(|(r, _)| r));
    rows.extend(gkz);
    check_failures(&rows)?;
    report.rows = rows;
    Ok(report)
}
