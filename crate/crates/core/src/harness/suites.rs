//! Registered verification suites: each runs a family of property checks at
//! the configured trial count and emits deterministic report rows.

use std::time::Instant;

use crate::exponent::ExponentFunction;
use crate::gphi::{check_triple, holder_pairing, sample_grid, GPhiFunction, NumericGPhi};
use crate::grid::{all_cubes, Domain, GridFunction};
use crate::operators::{apply_czo, commutator, CzKernel, MaximalOp, MaximalVariant, OperatorKind};
use crate::sparse::{
    augment_by_oscillation, cz_decompose, iterated_bound_constant, oscillation_bound_constant,
    sparse_avg, sparse_frac_norm, sparsity_report, SparseFamily,
};
use crate::weights::{
    muckenhoupt_constant, muckenhoupt_pq_constant, openness_search, oscillation_norm,
    symbol_power_bound, symbol_pointwise_bound, CubeFunctional, Weight,
};

use super::random::{random_exponent_step, random_positive_step, random_step, trial_rng};
use super::report::Report;
use super::{ExperimentConfig, HarnessError};

type SuiteFn = fn(&ExperimentConfig) -> Result<Report, HarnessError>;

const SUITES: &[(&str, SuiteFn)] = &[
    ("constant_exponent", suite_constant_exponent),
    ("unit_modular", suite_unit_modular),
    ("power_scaling", suite_power_scaling),
    ("holder_product", suite_holder_product),
    ("holder_orlicz", suite_holder_orlicz),
    ("holder_three", suite_holder_three),
    ("holder_split", suite_holder_split),
    ("young", suite_young),
    ("norm_product", suite_norm_product),
    ("norm_factorization", suite_norm_factorization),
    ("avg_embedding", suite_avg_embedding),
    ("log_holder", suite_log_holder),
    ("condition_f", suite_condition_f),
    ("weight_classes", suite_weight_classes),
    ("weight_factors", suite_weight_factors),
    ("openness", suite_openness),
    ("symbol_bounds", suite_symbol_bounds),
    ("sparsity", suite_sparsity),
    ("osc_bound", suite_osc_bound),
    ("sparse_iter_bound", suite_sparse_iter_bound),
    ("frac_sparse_embedding", suite_frac_sparse_embedding),
    ("maximal_embedding", suite_maximal_embedding),
    ("frac_maximal_embedding", suite_frac_maximal_embedding),
    ("commutator_identity", suite_commutator_identity),
    ("self_adjoint", suite_self_adjoint),
];

pub fn suite_ids() -> Vec<&'static str> {
    SUITES.iter().map(|(id, _)| *id).collect()
}

/// Run a registered suite; unknown ids list the registry.
pub fn run_suite(id: &str, cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let f = SUITES
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, f)| *f)
        .ok_or_else(|| HarnessError::UnknownId {
            id: id.to_string(),
            known: suite_ids().join(", "),
        })?;
    let start = Instant::now();
    let mut report = f(cfg)?;
    report.set_wall(start.elapsed());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Shared helpers

fn power_psi(p: &ExponentFunction<f64>) -> Result<GPhiFunction<f64>, HarnessError> {
    Ok(GPhiFunction::power(p.clone())?)
}

fn sequential_lp_norm(values: &[f64], p: f64, h: f64) -> f64 {
    // independent oracle: plain left-to-right sum, direct formula
    let mut acc = 0.0;
    for &v in values {
        acc += v.abs().powf(p) * h;
    }
    acc.powf(1.0 / p)
}

fn divergence_flag(values: &[f64], factor: f64) -> bool {
    values.windows(2).any(|w| w[1] / w[0] >= factor)
}

// ---------------------------------------------------------------------------
// Norm suites

/// Luxemburg norms against closed-form constant-exponent norms.
fn suite_constant_exponent(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("constant_exponent", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(100);
    for (pi, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
        let psi = power_psi(&ExponentFunction::constant(dom, p))?;
        let mut worst = 0.0f64;
        let mut witness = String::from("none");
        for t in 0..trials {
            let mut rng = trial_rng(cfg.seed, (pi * trials + t) as u64);
            let f = random_step(&mut rng, dom, 4, 0.01, 100.0, true);
            let lux = psi.luxemburg_norm(&f)?;
            let oracle = sequential_lp_norm(f.values(), p, dom.cell_measure());
            let rel = (lux - oracle).abs() / oracle;
            if rel > worst {
                worst = rel;
                witness = format!("p{p}-trial{t}");
            }
        }
        report.push_constant(
            &format!("max_rel_error_p{p}"),
            worst,
            worst <= 1e-8,
            witness,
            dom.res_exp(),
        );
    }
    Ok(report)
}

/// Families with `Psi(x, 1) = 1` give `||c|| = c` on a unit-measure box.
fn suite_unit_modular(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("unit_modular", cfg.seed);
    let dom = Domain::new(cfg.domain.n, -1, cfg.domain.j)?;
    let step: Vec<f64> = (0..dom.cell_count())
        .map(|i| if i % 2 == 0 { 1.7 } else { 2.6 })
        .collect();
    let p_step = ExponentFunction::from_grid(
        GridFunction::from_values(dom, step).unwrap(),
        Some(2.6),
    )?;
    let mut grid_t: Vec<f64> = sample_grid(1e-6, 1e6, 121);
    grid_t.push(1.0);
    grid_t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid_t.dedup();
    let tab: Vec<f64> = grid_t.iter().map(|t| t * t).collect();
    let families: Vec<(&str, GPhiFunction<f64>)> = vec![
        ("power_const", power_psi(&ExponentFunction::constant(dom, 2.7))?),
        ("power_step", power_psi(&p_step)?),
        (
            "scaled_power_unit",
            GPhiFunction::ScaledPower {
                p: ExponentFunction::constant(dom, 2.0),
                coeff: GridFunction::constant(dom, 1.0),
            },
        ),
        (
            "power_log_zero",
            GPhiFunction::power_log(
                ExponentFunction::constant(dom, 1.8),
                GridFunction::constant(dom, 0.0),
            )?,
        ),
        ("numeric_unit_node", GPhiFunction::Numeric(NumericGPhi::uniform(grid_t, tab))),
    ];
    for (name, psi) in &families {
        let mut worst = 0.0f64;
        for &c in &[0.037, 0.8, 1.0, 5.5, 420.0] {
            let f = GridFunction::constant(dom, c);
            let n = psi.luxemburg_norm(&f)?;
            worst = worst.max((n - c).abs() / c);
        }
        report.push_constant(
            &format!("unit_modular_defect_{name}"),
            worst,
            worst <= 1e-9,
            "constants".into(),
            dom.res_exp(),
        );
    }
    Ok(report)
}

/// `|| |f|^s ||_p = ||f||_{sp}^s` for `s >= 1/p-`.
fn suite_power_scaling(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("power_scaling", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(100);
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let p = random_exponent_step(&mut rng, dom, 3, 1.2, 2.8);
        let s = {
            use rand::Rng;
            rng.gen_range(1.0 / p.lower()..2.5)
        };
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let psi_p = power_psi(&p)?;
        let psi_sp = power_psi(&p.scale(s)?)?;
        let lhs = psi_p.luxemburg_norm(&f.map(|v| v.abs().powf(s)))?;
        let rhs = psi_sp.luxemburg_norm(&f)?.powf(s);
        let rel = (lhs - rhs).abs() / rhs.max(1e-300);
        if rel > worst {
            worst = rel;
            witness = format!("trial{t}");
        }
    }
    report.push_constant("max_rel_defect", worst, worst <= 1e-7, witness, dom.res_exp());
    Ok(report)
}

/// `int |fg| <= 2 ||f||_p ||g||_{p'}`, with the constant-2 exponent subset
/// pinned at the Cauchy-Schwarz edge.
fn suite_holder_product(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("holder_product", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(1000);
    let mut worst_any = 0.0f64;
    let mut worst_const2 = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let constant2 = t % 3 == 0;
        let p = if constant2 {
            ExponentFunction::constant(dom, 2.0)
        } else {
            random_exponent_step(&mut rng, dom, 3, 1.3, 3.5)
        };
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let g = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let nf = power_psi(&p)?.luxemburg_norm(&f)?;
        let ng = power_psi(&p.conjugate()?)?.luxemburg_norm(&g)?;
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        let ratio = holder_pairing(&f, &g) / (nf * ng);
        worst_any = worst_any.max(ratio);
        if constant2 {
            worst_const2 = worst_const2.max(ratio);
        }
    }
    report.push_constant(
        "max_ratio",
        worst_any,
        worst_any <= 2.0 + 1e-12,
        format!("{trials} trials"),
        dom.res_exp(),
    );
    report.push_constant(
        "max_ratio_constant_p2",
        worst_const2,
        worst_const2 <= 1.0 + 1e-12,
        "constant-exponent subset".into(),
        dom.res_exp(),
    );
    Ok(report)
}

/// `int |fg| <= 2 ||f||_Psi ||g||_{Psi*}` with exact power-family
/// conjugates.
fn suite_holder_orlicz(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("holder_orlicz", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(1000);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let p = random_exponent_step(&mut rng, dom, 3, 1.4, 3.0);
        let psi = power_psi(&p)?;
        let star = psi.conjugate(&dom)?;
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let g = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let nf = psi.luxemburg_norm(&f)?;
        let ng = star.luxemburg_norm(&g)?;
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        worst = worst.max(holder_pairing(&f, &g) / (nf * ng));
    }
    report.push_constant(
        "max_ratio",
        worst,
        worst <= 2.0 + 1e-12,
        format!("{trials} trials"),
        dom.res_exp(),
    );
    Ok(report)
}

/// `||fg||_Theta <= 2 ||f||_Psi ||g||_Lambda` once the inverse-product
/// condition holds.
fn suite_holder_three(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("holder_three", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(200);
    let p = cfg.exponent("p", "2.2 + 0.4*sin(2*x1)", Some(2.2), dom)?;
    let q = cfg.exponent("q", "3.1 + 0.3*cos(3*x1)", Some(3.1), dom)?;
    let psi = power_psi(&p)?;
    let lam = power_psi(&q)?;
    let theta_exp = ExponentFunction::from_grid(
        p.grid().zip(q.grid(), |a, b| 1.0 / (1.0 / a + 1.0 / b)),
        None,
    )?;
    let theta = power_psi(&theta_exp)?;
    // inverse-product condition on a (cell, t) grid
    let t_grid: Vec<f64> = sample_grid(1e-3, 1e3, 20);
    let mut inv_worst = 0.0f64;
    for cell in (0..dom.cell_count()).step_by(7) {
        for &t in &t_grid {
            let prod = psi.inverse(cell, t) * lam.inverse(cell, t);
            let ti = theta.inverse(cell, t);
            if ti > 0.0 {
                inv_worst = inv_worst.max(prod / ti);
            }
        }
    }
    report.push_constant(
        "inverse_product_ratio",
        inv_worst,
        inv_worst <= 1.0 + 1e-6,
        "cell-t grid".into(),
        dom.res_exp(),
    );
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let g = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let nf = psi.luxemburg_norm(&f)?;
        let ng = lam.luxemburg_norm(&g)?;
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        let nt = theta.luxemburg_norm(&f.mul(&g))?;
        worst = worst.max(nt / (nf * ng));
    }
    report.push_constant(
        "max_ratio",
        worst,
        worst <= 2.0 + 1e-12,
        format!("{trials} trials"),
        dom.res_exp(),
    );
    Ok(report)
}

/// `||fg||_s <= c ||f||_p ||g||_q` for the pointwise split `1/s = 1/p + 1/q`.
fn suite_holder_split(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("holder_split", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(300);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let p = random_exponent_step(&mut rng, dom, 3, 2.2, 4.0);
        let q = random_exponent_step(&mut rng, dom, 3, 2.2, 4.5);
        let s = ExponentFunction::from_grid(
            p.grid().zip(q.grid(), |a, b| 1.0 / (1.0 / a + 1.0 / b)),
            None,
        )?;
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let g = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let nf = power_psi(&p)?.luxemburg_norm(&f)?;
        let ng = power_psi(&q)?.luxemburg_norm(&g)?;
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        let ns = power_psi(&s)?.luxemburg_norm(&f.mul(&g))?;
        worst = worst.max(ns / (nf * ng));
    }
    report.push_constant(
        "max_ratio",
        worst,
        worst <= 2.0 + 1e-12,
        format!("{trials} trials"),
        dom.res_exp(),
    );
    Ok(report)
}

/// Young inequality for numerically conjugated families, evaluated on table
/// nodes.
fn suite_young(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("young", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(5))?;
    let t_nodes: Vec<f64> = sample_grid(1e-6, 1e6, 80);
    let families: Vec<(&str, GPhiFunction<f64>)> = vec![
        ("linear_log", GPhiFunction::LinearLog),
        (
            "power_log",
            GPhiFunction::power_log(
                ExponentFunction::constant(dom, 1.6),
                GridFunction::constant(dom, 0.8),
            )?,
        ),
    ];
    for (name, psi) in &families {
        let star = psi.conjugate(&dom)?;
        let u_nodes: Vec<f64> = match &star {
            GPhiFunction::Numeric(n) => n.u_grid().iter().copied().step_by(5).collect(),
            _ => sample_grid(1e-4, 1e4, 60),
        };
        let v = crate::gphi::young_violation(psi, &star, &[0], &t_nodes, &u_nodes);
        report.push_constant(
            &format!("young_violation_{name}"),
            v,
            v <= 1e-7,
            "node grid".into(),
            dom.res_exp(),
        );
    }
    Ok(report)
}

/// `||chi_Q||_p ||chi_Q||_{p'} / |Q|` across resolutions.
fn suite_norm_product(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("norm_product", cfg.seed);
    let sweep = cfg.sweep(&[6, 8, 10]);
    let mut extremes: Vec<(f64, f64)> = Vec::new();
    for &j in &sweep {
        let dom = cfg.domain_at(j)?;
        let p = cfg.exponent("p", "1/(0.5 + 0.25/log(e + abs(x1)))", Some(2.0), dom)?;
        let psi_p = power_psi(&p)?;
        let psi_pc = power_psi(&p.conjugate()?)?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for q in all_cubes(&dom) {
            let val = psi_p.indicator_norm(&dom, &q)? * psi_pc.indicator_norm(&dom, &q)?
                / q.measure(&dom);
            lo = lo.min(val);
            hi = hi.max(val);
        }
        extremes.push((lo, hi));
        report.push_constant(&format!("min_J{j}"), lo, lo.is_finite(), "cube scan".into(), j);
        report.push_constant(&format!("max_J{j}"), hi, hi.is_finite(), "cube scan".into(), j);
    }
    let max_hi = extremes.iter().map(|e| e.1).fold(0.0f64, f64::max);
    let min_hi = extremes.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let max_lo = extremes.iter().map(|e| e.0).fold(0.0f64, f64::max);
    let min_lo = extremes.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let spread = (max_hi / min_hi).max(max_lo / min_lo);
    report.push_constant("cross_resolution_spread", spread, spread <= 1.5, "sweep".into(), 0);

    // constant exponent: the product is |Q| exactly
    let dom = cfg.domain_at(sweep[0])?;
    let p2 = ExponentFunction::constant(dom, 2.0);
    let psi = power_psi(&p2)?;
    let psi_c = power_psi(&p2.conjugate()?)?;
    let mut defect = 0.0f64;
    for q in all_cubes(&dom) {
        let val =
            psi.indicator_norm(&dom, &q)? * psi_c.indicator_norm(&dom, &q)? / q.measure(&dom);
        defect = defect.max((val - 1.0).abs());
    }
    report.push_constant(
        "constant_exponent_defect",
        defect,
        defect <= 1e-10,
        "cube scan".into(),
        sweep[0],
    );
    Ok(report)
}

/// `||chi_Q||_p ~ ||chi_Q||_beta ||chi_Q||_q` for `1/p = 1/beta + 1/q`.
fn suite_norm_factorization(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("norm_factorization", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(7))?;
    let p = cfg.exponent("p", "2 + 0.3/log(e + abs(x1))", Some(2.0), dom)?;
    let q = cfg.exponent("q", "3.5 + 0.2/log(e + abs(x1))", Some(3.5), dom)?;
    let beta = ExponentFunction::reciprocal_subtract(&p, &q)?;
    let (psi_p, psi_q, psi_b) = (power_psi(&p)?, power_psi(&q)?, power_psi(&beta)?);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for cube in all_cubes(&dom) {
        let ratio = psi_p.indicator_norm(&dom, &cube)?
            / (psi_b.indicator_norm(&dom, &cube)? * psi_q.indicator_norm(&dom, &cube)?);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let c = hi.max(1.0 / lo);
    report.push_constant("equivalence_constant", c, c.is_finite() && c <= 4.0, "cube scan".into(), dom.res_exp());
    Ok(report)
}

/// Normalized averages embed upward: `||chi_Q f||_p / ||chi_Q||_p <= c
/// ||chi_Q f||_q / ||chi_Q||_q` for `p <= q`.
fn suite_avg_embedding(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("avg_embedding", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let p = cfg.exponent("p", "1.8 + 0.2*sin(x1)", Some(1.8), dom)?;
    let q = cfg.exponent("q", "3 + 0.3*cos(2*x1)", Some(3.0), dom)?;
    let (psi_p, psi_q) = (power_psi(&p)?, power_psi(&q)?);
    let trials = cfg.trials(20);
    let cubes = all_cubes(&dom);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 10.0, true);
        for cube in &cubes {
            let np = psi_p.weighted_indicator_norm(&f, cube)? / psi_p.indicator_norm(&dom, cube)?;
            let nq = psi_q.weighted_indicator_norm(&f, cube)? / psi_q.indicator_norm(&dom, cube)?;
            if nq > 0.0 {
                worst = worst.max(np / nq);
            }
        }
    }
    report.push_constant(
        "max_ratio",
        worst,
        worst.is_finite() && worst <= 4.0,
        format!("{trials} trials x cube scan"),
        dom.res_exp(),
    );
    Ok(report)
}

/// Exponent regularity diagnostics: smooth exponents have stable constants,
/// jump exponents are flagged by resolution growth.
fn suite_log_holder(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("log_holder", cfg.seed);
    let sweep = cfg.sweep(&[6, 8]);
    let mut smooth_locals = Vec::new();
    let mut step_locals = Vec::new();
    for &j in &sweep {
        let dom = Domain::new(1, 2, j)?;
        let smooth =
            cfg.exponent("p", "1/(0.5 + 1/(4*log(e + abs(x1))))", Some(2.0), dom)?;
        let rep = smooth.log_holder(200_000)?;
        smooth_locals.push(rep.local);
        report.push_constant(&format!("smooth_local_J{j}"), rep.local, true, "pair scan".into(), j);
        report.push_constant(
            &format!("smooth_global_J{j}"),
            rep.global,
            (rep.global - 0.25).abs() <= 1e-9,
            "center scan".into(),
            j,
        );
        let vals: Vec<f64> = (0..dom.cell_count())
            .map(|i| if dom.center(i)[0] < 0.0 { 2.0 } else { 3.0 })
            .collect();
        let step = ExponentFunction::from_grid(GridFunction::from_values(dom, vals)?, Some(3.0))?;
        let srep = step.log_holder(200_000)?;
        step_locals.push(srep.local);
        report.push_constant(&format!("step_local_J{j}"), srep.local, true, "pair scan".into(), j);
        let (ll, _) = step.loglog(100_000)?;
        report.push_constant(&format!("step_loglog_J{j}"), ll, true, "pair scan".into(), j);
    }
    let smooth_stable = smooth_locals[1] / smooth_locals[0] < cfg.tolerances.divergence_factor;
    report.push_flag("smooth_not_flagged", smooth_stable, "sweep".into(), 0);
    let step_grows = step_locals[1] > step_locals[0] + 0.05;
    report.push_flag("step_flagged_not_log_holder", step_grows, "sweep".into(), 0);
    Ok(report)
}

/// The two worked function triples satisfy all three compatibility
/// constants with finite, resolution-stable values.
fn suite_condition_f(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("condition_f", cfg.seed);
    let sweep = cfg.sweep(&[5, 6]);
    let t_grid: Vec<f64> = sample_grid(1e-4, 1e4, 40);
    let mut example1: Vec<(f64, f64, f64)> = Vec::new();
    for &j in &sweep {
        let dom = cfg.domain_at(j)?;
        let cubes = all_cubes(&dom);
        // first triple: sigma p' = 4 with p = 2, sigma = 2
        let a1 = GPhiFunction::power_log(
            ExponentFunction::constant(dom, 4.0),
            GridFunction::constant(dom, 4.0),
        )?;
        let b1 = power_psi(&ExponentFunction::constant(dom, 4.0 / 3.0))?;
        let d1 = GPhiFunction::LinearLog;
        let rep = check_triple(&a1, &b1, &d1, &dom, &cubes, &t_grid)?;
        example1.push((rep.c1, rep.c2, rep.c3));
        report.push_constant(&format!("triple1_c1_J{j}"), rep.c1, rep.c1.is_finite(), rep.c1_witness.to_string(), j);
        report.push_constant(&format!("triple1_c2_J{j}"), rep.c2, rep.c2.is_finite(), "cell-t grid".into(), j);
        report.push_constant(&format!("triple1_c3_J{j}"), rep.c3, rep.c3.is_finite(), rep.c3_witness.to_string(), j);

        // second triple: mu = 6, nu = 1, 1/alpha = 1/mu + 1/(sigma p')'
        let mu = 6.0;
        let spc = 4.0 / 3.0; // (sigma p')'
        let alpha = 1.0 / (1.0 / mu + 1.0 / spc);
        let a2 = GPhiFunction::power_log(
            ExponentFunction::constant(dom, mu),
            GridFunction::constant(dom, mu),
        )?;
        let b2 = power_psi(&ExponentFunction::constant(dom, spc))?;
        let d2 = GPhiFunction::power_log(
            ExponentFunction::constant(dom, alpha),
            GridFunction::constant(dom, alpha),
        )?;
        let rep2 = check_triple(&a2, &b2, &d2, &dom, &cubes, &t_grid)?;
        report.push_constant(&format!("triple2_c1_J{j}"), rep2.c1, rep2.c1.is_finite(), rep2.c1_witness.to_string(), j);
        report.push_constant(&format!("triple2_c2_J{j}"), rep2.c2, rep2.c2.is_finite(), "cell-t grid".into(), j);
        report.push_constant(&format!("triple2_c3_J{j}"), rep2.c3, rep2.c3.is_finite(), rep2.c3_witness.to_string(), j);
    }
    let stable = example1.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        b.0 / a.0 <= 2.0 && b.1 / a.1 <= 2.0 && b.2 / a.2 <= 2.0
    });
    report.push_flag("triple1_resolution_stable", stable, "sweep".into(), 0);
    Ok(report)
}

/// Two-exponent class constants control the one-exponent classes and the
/// reversed pair, with per-cube two-sided products.
fn suite_weight_classes(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("weight_classes", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let cubes = all_cubes(&dom);
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let q = cfg.exponent("q", "3", Some(3.0), dom)?;
    let qc = q.conjugate()?;
    let weights: Vec<(String, Weight<f64>)> = {
        let mut v: Vec<(String, Weight<f64>)> = vec![
            ("unit".into(), Weight::constant(dom, 1.0)?),
            ("power0.2".into(), Weight::new(cfg.grid_fn("w_pow", "abs(x1)^0.2", dom)?)?),
        ];
        for t in 0..cfg.trials(3) {
            let mut rng = trial_rng(cfg.seed, 1000 + t as u64);
            v.push((format!("step{t}"), random_positive_step(&mut rng, dom, 3, 0.5, 2.0)));
        }
        v
    };
    // fitted embedding constant from the averages comparison, reused as the
    // connecting constant for the class implications
    let mut embed_c = 0.0f64;
    {
        let (psi_p, psi_q) = (power_psi(&p)?, power_psi(&q)?);
        for (_, w) in &weights {
            for cube in cubes.iter().step_by(3) {
                let np = psi_p.weighted_indicator_norm(w.grid(), cube)?
                    / psi_p.indicator_norm(&dom, cube)?;
                let nq = psi_q.weighted_indicator_norm(w.grid(), cube)?
                    / psi_q.indicator_norm(&dom, cube)?;
                if nq > 0.0 {
                    embed_c = embed_c.max(np / nq);
                }
            }
        }
    }
    report.push_constant("embedding_constant", embed_c, embed_c.is_finite(), "weight suite".into(), dom.res_exp());
    for (name, w) in &weights {
        let cpq = muckenhoupt_pq_constant(w, &p, &q, &cubes)?.value;
        let cp = muckenhoupt_constant(w, &p, &cubes)?.value;
        let cq = muckenhoupt_constant(w, &q, &cubes)?.value;
        // normalized constants: divide the one-exponent constants by the
        // norm-product equivalence on the same cubes
        let pass_i = cp <= embed_c.max(1.0) * cpq * 4.0 && cq <= embed_c.max(1.0) * cpq * 4.0;
        report.push_constant(&format!("{name}_pq"), cpq, cpq.is_finite(), "cube scan".into(), dom.res_exp());
        report.push_constant(&format!("{name}_p"), cp, pass_i, "cube scan".into(), dom.res_exp());
        report.push_constant(&format!("{name}_q"), cq, pass_i, "cube scan".into(), dom.res_exp());
        // two-sided per-cube product for the reversed pair
        let (psi_p, psi_qc) = (power_psi(&p)?, power_psi(&qc)?);
        let winv = w.reciprocal();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for cube in cubes.iter().step_by(3) {
            let a = psi_p.weighted_indicator_norm(w.grid(), cube)?
                / psi_p.indicator_norm(&dom, cube)?;
            let b = psi_qc.weighted_indicator_norm(winv.grid(), cube)?
                / psi_qc.indicator_norm(&dom, cube)?;
            lo = lo.min(a * b);
            hi = hi.max(a * b);
        }
        let two_sided = lo >= 1.0 / (embed_c.max(1.0) * 4.0) && hi <= 4.0 * cpq * cq * embed_c.max(1.0);
        report.push_constant(&format!("{name}_reversed_min"), lo, two_sided, "cube scan".into(), dom.res_exp());
        report.push_constant(&format!("{name}_reversed_max"), hi, two_sided, "cube scan".into(), dom.res_exp());
    }
    Ok(report)
}

/// Interpolation of weight factors: `[lambda nu^{(m-h)/m}]` controlled by
/// `[lambda]^{h/m} [mu]^{(m-h)/m}`, with the norm-split steps checked
/// per cube.
fn suite_weight_factors(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("weight_factors", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let cubes = all_cubes(&dom);
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let q = cfg.exponent("q", "3", Some(3.0), dom)?;
    let mu = cfg.weight("mu", "1 + 0.5*abs(x1)", dom)?;
    let lambda = cfg.weight("lambda", "abs(x1)^0.15", dom)?;
    let nu = mu.div(&lambda);
    let c_mu = muckenhoupt_pq_constant(&mu, &p, &q, &cubes)?.value;
    let c_lambda = muckenhoupt_pq_constant(&lambda, &p, &q, &cubes)?.value;
    report.push_constant("mu_pq", c_mu, c_mu.is_finite(), "cube scan".into(), dom.res_exp());
    report.push_constant("lambda_pq", c_lambda, c_lambda.is_finite(), "cube scan".into(), dom.res_exp());
    let m = 2u32;
    for h in 0..=m {
        let e = (m - h) as f64 / m as f64;
        let factor = lambda.mul(&nu.powf(e));
        let c = muckenhoupt_pq_constant(&factor, &p, &q, &cubes)?.value;
        let bound = c_lambda.powf(h as f64 / m as f64) * c_mu.powf(e);
        // the fitted interpolation constant
        let fitted = c / bound;
        report.push_constant(
            &format!("interp_m{m}_h{h}"),
            fitted,
            fitted.is_finite() && fitted <= 8.0,
            "cube scan".into(),
            dom.res_exp(),
        );
    }
    // norm-split equality steps (power-scaling identity applied to the
    // factored weight), on a cube subsample
    let psi_q = power_psi(&q)?;
    let h = 1u32;
    let e = (m - h) as f64 / m as f64;
    let mqh = q.scale(m as f64 / h as f64)?;
    let psi_mqh = power_psi(&mqh)?;
    let lam_pow = Weight::new(lambda.grid().map(|v| v.powf(h as f64 / m as f64)))?;
    let mut worst = 0.0f64;
    for cube in cubes.iter().step_by(5) {
        let lhs = psi_mqh.weighted_indicator_norm(lam_pow.grid(), cube)?;
        let rhs = psi_q
            .weighted_indicator_norm(lambda.grid(), cube)?
            .powf(h as f64 / m as f64);
        let rel = (lhs - rhs).abs() / rhs.max(1e-300);
        worst = worst.max(rel);
    }
    let _ = e;
    report.push_constant("norm_split_defect", worst, worst <= 1e-7, "cube subsample".into(), dom.res_exp());
    Ok(report)
}

/// Openness search over the weight suite.
fn suite_openness(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("openness", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let cubes = all_cubes(&dom);
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let q = cfg.exponent("q", "3", Some(3.0), dom)?;
    let suite: Vec<(String, Weight<f64>)> = vec![
        ("unit".into(), Weight::constant(dom, 1.0)?),
        ("power0.2".into(), Weight::new(cfg.grid_fn("w", "abs(x1)^0.2", dom)?)?),
    ];
    for (name, w) in &suite {
        let rep = openness_search(w, &p, &q, &cubes, cfg.tolerances.openness_cap, 64)?;
        report.push_constant(&format!("{name}_s"), rep.s, rep.s < 1.0, "search".into(), dom.res_exp());
        report.push_constant(&format!("{name}_r"), rep.r, rep.r < 1.0, "search".into(), dom.res_exp());
        report.push_constant(
            &format!("{name}_p_over_u_gap"),
            rep.p_over_u_lower,
            rep.p_over_u_lower > 1.0,
            "cellwise".into(),
            dom.res_exp(),
        );
        report.push_constant(
            &format!("{name}_uv_constant"),
            rep.const_uv,
            rep.const_uv.is_finite(),
            "cube scan".into(),
            dom.res_exp(),
        );
    }
    Ok(report)
}

/// Symbol bounds: the pointwise 3Q comparison and the norm-ratio power
/// bound.
fn suite_symbol_bounds(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("symbol_bounds", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let cubes = all_cubes(&dom);
    let b = cfg.grid_fn("b", "abs(x1)^0.4", dom)?;
    let delta = cfg.exponent("delta", "0.4", Some(0.4), dom)?;
    let mut worst = 0.0f64;
    for q in cubes.iter().step_by(3) {
        worst = worst.max(symbol_pointwise_bound(&b, q, &delta)?);
    }
    report.push_constant(
        "pointwise_3q_constant",
        worst,
        worst.is_finite() && worst <= 8.0,
        "cube sweep".into(),
        dom.res_exp(),
    );
    let a = CubeFunctional::var_norm(&delta)?;
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let b_norm = oscillation_norm(&b, &a, &cubes)?.value;
    report.push_constant("symbol_class_norm", b_norm, b_norm.is_finite(), "cube scan".into(), dom.res_exp());
    for k in [1u32, 2] {
        let rep = symbol_power_bound(&b, b_norm, &a, &p, k, &cubes)?;
        report.push_constant(
            &format!("power_bound_k{k}"),
            rep.value,
            rep.value.is_finite() && rep.value <= 50.0,
            rep.witness.to_string(),
            dom.res_exp(),
        );
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Sparse suites

/// Mass sparsity test: decompositions and augmentations keep half of every
/// cube, by integer counting.
fn suite_sparsity(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("sparsity", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(7))?;
    let trials = cfg.trials(50);
    let mut all_cz = true;
    let mut all_aug = true;
    let mut min_ratio_cz = 1.0f64;
    let mut min_ratio_aug = 1.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 5, 0.05, 20.0, false);
        let b = random_step(&mut rng, dom, 4, 0.1, 5.0, true);
        let fam = cz_decompose(&f.map(|v| v + 1e-6), dom.box_root(), 2.0)?;
        let rep = sparsity_report(&fam, &dom)?;
        all_cz &= rep.half_sparse() && rep.disjoint;
        min_ratio_cz = min_ratio_cz.min(rep.min_ratio());
        // augmentation run: a 4-threshold decomposition plus 4-factor
        // oscillation stopping keeps the half bound by the counting argument
        let fam4 = cz_decompose(&f.map(|v| v + 1e-6), dom.box_root(), 4.0)?;
        let aug = augment_by_oscillation(&fam4, &b, 4.0)?;
        let rep = sparsity_report(&aug, &dom)?;
        all_aug &= rep.half_sparse() && rep.disjoint;
        min_ratio_aug = min_ratio_aug.min(rep.min_ratio());
    }
    report.push_constant("cz_min_portion", min_ratio_cz, all_cz, format!("{trials} trials"), dom.res_exp());
    report.push_constant("augment_min_portion", min_ratio_aug, all_aug, format!("{trials} trials"), dom.res_exp());
    Ok(report)
}

/// Pointwise oscillation bound over augmented families: fitted constants,
/// stable across resolutions.
fn suite_osc_bound(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("osc_bound", cfg.seed);
    let sweep = cfg.sweep(&[6, 8]);
    let mut linear_consts = Vec::new();
    for &j in &sweep {
        let dom = cfg.domain_at(j)?;
        let fam = SparseFamily::new(&dom, vec![dom.box_root()])
            .map_err(HarnessError::from)?;
        let b_lin = cfg.grid_fn("b", "x1", dom)?;
        let aug = augment_by_oscillation(&fam, &b_lin, 2.0)?;
        let c = oscillation_bound_constant(&aug, &b_lin)?;
        linear_consts.push(c);
        report.push_constant(&format!("linear_J{j}"), c, c.is_finite(), "augmented scan".into(), j);
        let mut rng = trial_rng(cfg.seed, j as u64);
        let b_step = random_step(&mut rng, dom, 4, 0.1, 5.0, true);
        let aug = augment_by_oscillation(&fam, &b_step, 2.0)?;
        let c = oscillation_bound_constant(&aug, &b_step)?;
        report.push_constant(&format!("step_J{j}"), c, c.is_finite(), "augmented scan".into(), j);
    }
    let stable = linear_consts.windows(2).all(|w| w[1] / w[0] <= 2.0 && w[0] / w[1] <= 2.0);
    report.push_flag("linear_resolution_stable", stable, "sweep".into(), 0);
    Ok(report)
}

/// Iterated weighted-average integral bound: fitted constants for k = 1, 2.
fn suite_sparse_iter_bound(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("sparse_iter_bound", cfg.seed);
    let sweep = cfg.sweep(&[5, 6]);
    let mut k1 = Vec::new();
    for &j in &sweep {
        let dom = cfg.domain_at(j)?;
        let scan = all_cubes(&dom);
        let fam = SparseFamily::new(&dom, vec![dom.box_root()]).map_err(HarnessError::from)?;
        let b = cfg.grid_fn("b", "x1", dom)?;
        let eta = cfg.weight("eta", "1", dom)?;
        let delta = cfg.exponent("delta", "0", Some(0.0), dom)?;
        let f = cfg.grid_fn("f", "1 + abs(x1)", dom)?;
        for k in [1u32, 2] {
            let rep = iterated_bound_constant(&fam, &b, &eta, &delta, &f, k, &scan)?;
            if k == 1 {
                k1.push(rep.constant);
            }
            report.push_constant(
                &format!("k{k}_J{j}"),
                rep.constant,
                rep.constant.is_finite(),
                format!("augmented/{}", rep.augmented.len()),
                j,
            );
        }
    }
    let stable = k1.windows(2).all(|w| w[1] / w[0] <= 2.0 && w[0] / w[1] <= 2.0);
    report.push_flag("k1_resolution_stable", stable, "sweep".into(), 0);
    Ok(report)
}

/// Fractional sparse operator between weighted spaces: bounded trial ratios
/// under a verified two-exponent weight.
fn suite_frac_sparse_embedding(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("frac_sparse_embedding", cfg.seed);
    let dom = cfg.domain()?;
    let trials = cfg.trials(100);
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let q = cfg.exponent("q", "4", Some(4.0), dom)?;
    let beta = ExponentFunction::reciprocal_subtract(&p, &q)?;
    let w = cfg.weight("w", "abs(x1)^0.2", dom)?;
    // class membership audit by resolution sweep
    let mut class_consts = Vec::new();
    for &j in &cfg.sweep(&[6, 8, 10]) {
        let dj = cfg.domain_at(j)?;
        let wj = cfg.weight("w", "abs(x1)^0.2", dj)?;
        let pj = cfg.exponent("p", "2", Some(2.0), dj)?;
        let qj = cfg.exponent("q", "4", Some(4.0), dj)?;
        let c = muckenhoupt_pq_constant(&wj, &pj, &qj, &all_cubes(&dj))?.value;
        class_consts.push(c);
        report.push_constant(&format!("class_constant_J{j}"), c, c.is_finite(), "cube scan".into(), j);
    }
    let in_class = !divergence_flag(&class_consts, cfg.tolerances.divergence_factor);
    report.push_flag("weight_in_class", in_class, "sweep".into(), 0);

    let (psi_p, psi_q) = (power_psi(&p)?, power_psi(&q)?);
    let mut ratios = Vec::new();
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, false);
        let fam = match cz_decompose(&f.map(|v| v + 1e-9), dom.box_root(), 2.0) {
            Ok(fam) => fam,
            Err(_) => continue,
        };
        let denom = psi_p.weighted_norm(&f, w.grid())?;
        if !(denom.is_finite() && denom > 0.0) {
            continue;
        }
        let out = sparse_frac_norm(&fam, &beta, &f)?;
        let num = psi_q.weighted_norm(&out, w.grid())?;
        ratios.push(num / denom);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = *ratios.last().unwrap_or(&f64::NAN);
    let median = ratios[ratios.len() / 2];
    report.push_constant("max_ratio", max, max.is_finite(), format!("{} trials", ratios.len()), dom.res_exp());
    report.push_constant(
        "max_over_median",
        max / median,
        max / median <= 10.0,
        "trial spread".into(),
        dom.res_exp(),
    );
    Ok(report)
}

/// Norm-average maximal operator boundedness probe on `L^{p}` with
/// `p = s l`, `l- > 1`.
fn suite_maximal_embedding(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("maximal_embedding", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let trials = cfg.trials(100);
    let s = cfg.exponent("s", "1.2 + 0.3/log(e + abs(x1))", Some(1.2), dom)?;
    let l = 1.6;
    let p = s.scale(l)?;
    let psi_p = power_psi(&p)?;
    let op = MaximalOp::new(dom, &cfg.shifts()?, MaximalVariant::norm_avg(s.clone())?)?;
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let denom = psi_p.luxemburg_norm(&f)?;
        if denom == 0.0 {
            continue;
        }
        let ratio = psi_p.luxemburg_norm(&op.apply(&f)?)? / denom;
        if ratio > worst {
            worst = ratio;
            witness = format!("trial{t}");
        }
    }
    report.push_constant(
        "max_norm_ratio",
        worst,
        worst.is_finite(),
        witness,
        dom.res_exp(),
    );
    Ok(report)
}

/// Fractional norm-average maximal operator probe `L^p -> L^q`.
fn suite_frac_maximal_embedding(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("frac_maximal_embedding", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(6))?;
    let trials = cfg.trials(100);
    let p = cfg.exponent("p", "2", Some(2.0), dom)?;
    let q = cfg.exponent("q", "3", Some(3.0), dom)?;
    let s = cfg.exponent("s", "1.3", Some(1.3), dom)?;
    let beta = ExponentFunction::reciprocal_subtract(&p, &q)?;
    let (psi_p, psi_q) = (power_psi(&p)?, power_psi(&q)?);
    let variant = MaximalVariant::Fractional { beta, psi: power_psi(&s)? };
    let op = MaximalOp::new(dom, &cfg.shifts()?, variant)?;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, true);
        let denom = psi_p.luxemburg_norm(&f)?;
        if denom == 0.0 {
            continue;
        }
        worst = worst.max(psi_q.luxemburg_norm(&op.apply(&f)?)? / denom);
    }
    report.push_constant("max_norm_ratio", worst, worst.is_finite(), format!("{trials} trials"), dom.res_exp());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Operator suites

/// Expanded first-order commutator equals `b T f - T(b f)`.
fn suite_commutator_identity(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("commutator_identity", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(7))?;
    let trials = cfg.trials(20);
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let b = random_step(&mut rng, dom, 4, 0.1, 1.5, true);
        let f = random_step(&mut rng, dom, 4, 0.1, 1.5, true);
        let expanded = commutator(OperatorKind::Cz(CzKernel::Hilbert), &b, &f, 1)?;
        let tf = apply_czo(CzKernel::Hilbert, &f)?;
        let tbf = apply_czo(CzKernel::Hilbert, &b.mul(&f))?;
        let via = b.mul(&tf).zip(&tbf, |x, y| x - y);
        for (a, c) in expanded.values().iter().zip(via.values()) {
            let d = (a - c).abs();
            if d > worst {
                worst = d;
                witness = format!("trial{t}");
            }
        }
    }
    report.push_constant("max_abs_difference", worst, worst <= 1e-10, witness, dom.res_exp());
    Ok(report)
}

/// Self-adjointness of the averaging operator against random pairs.
fn suite_self_adjoint(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let mut report = Report::new("self_adjoint", cfg.seed);
    let dom = cfg.domain_at(cfg.domain.j.min(7))?;
    let trials = cfg.trials(50);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let f = random_step(&mut rng, dom, 4, 0.05, 5.0, true);
        let g = random_step(&mut rng, dom, 4, 0.05, 5.0, true);
        let shape = random_step(&mut rng, dom, 4, 0.1, 5.0, false);
        let fam = cz_decompose(&shape.map(|v| v + 1e-6), dom.box_root(), 2.0)?;
        let lhs = g.mul(&sparse_avg(&fam, &f)?).integrate();
        let rhs = f.mul(&sparse_avg(&fam, &g)?).integrate();
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max(rel);
    }
    report.push_constant("max_rel_asymmetry", worst, worst <= 1e-12, format!("{trials} trials"), dom.res_exp());
    Ok(report)
}
