//! Study implementations: each command maps the typed config onto catalog
//! problems, runs the computation on a bounded worker pool, and produces
//! artifacts plus pass/fail verdicts.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use svi_core::averaging::{
    coupled_error, epsilon_sweep, AveragingRun, AveragingTemplate, Composition,
    OscillatingDiffusion, OscillatingDrift, OscillatingJump, TimeProfile,
};
use svi_core::catalog;
use svi_core::convex::properties::{catalog as potential_catalog, envelope_property_suite};
use svi_core::convex::{ConvexPotential, ConvexSetSpec};
use svi_core::drivers::{LevyConfig, RngStream, WienerSpec};
use svi_core::galerkin::{
    simulate_spde, CoefficientTriple, PointwiseMap, ReactionSpec, SpdeConfig,
};
use svi_core::integrator::{
    coefficients, picard_solve, simulate, simulate_with_noise, skorokhod_1d, DriftFn,
    NoiseRecord, OperatorA, ProblemSpec, Scheme, SolutionPair,
};
use svi_core::linalg::Mat;
use svi_core::paths::{CadlagPath, DelayFunction};
use svi_core::report::{ConvergenceReport, Fingerprint, Verdict};
use svi_core::{Result, SviError};

use crate::config::ExperimentConfig;

pub struct StudyResult {
    /// (file name, contents) pairs to be written into the output directory
    pub files: Vec<(String, String)>,
    pub verdicts: Vec<Verdict>,
}

fn delay_from_config(cfg: &ExperimentConfig) -> DelayFunction {
    match cfg.problem.delay_kind.as_str() {
        "constant" => DelayFunction::Constant { gamma0: cfg.problem.delay_gamma0 },
        "proportional" => DelayFunction::Proportional { iota: cfg.problem.delay_iota },
        "full_path" => DelayFunction::FullPath,
        _ => DelayFunction::Constant { gamma0: 0.0 },
    }
}

/// Builds the catalog problem named by [problem].
pub fn problem_from_config(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    let p = &cfg.problem;
    let n = &cfg.numerics;
    let mut spec = match p.kind.as_str() {
        "half_line_reflection" => {
            catalog::half_line_reflected_bm(p.sigma, p.x0.max(0.0), n.horizon)?
        }
        "free_brownian" => catalog::free_scalar_bm(p.sigma, p.x0, n.horizon)?,
        "quadratic_prox" => {
            let mut s = catalog::free_scalar_bm(p.sigma, p.x0, n.horizon)?;
            s.potential = Arc::new(ConvexPotential::half_norm_squared(1));
            s
        }
        "coulomb_particles" => {
            let d = p.particles as usize;
            let x0 = match &p.x0_vector {
                Some(v) => v.clone(),
                None => (0..d).map(|i| i as f64 - (d as f64 - 1.0) / 2.0).collect(),
            };
            if x0.len() != d {
                return Err(SviError::DimensionMismatch { expected: d, got: x0.len() });
            }
            catalog::coulomb_particles(d, p.lambda, p.sigma, x0, n.horizon)?
        }
        "supnorm_feedback" => {
            catalog::supnorm_feedback(p.kappa, p.sigma, p.x0.max(0.0), n.delay_horizon, n.horizon)?
        }
        "reflected_jump_diffusion" => catalog::reflected_jump_diffusion(
            p.sigma,
            p.jump_intensity.max(1e-12),
            p.jump_scale,
            p.x0.max(0.0),
            n.horizon,
        )?,
        other => return Err(SviError::InvalidSpec(format!("unknown problem kind {other}"))),
    };
    if cfg.problem.delay_kind != "none" {
        spec.delay = delay_from_config(cfg);
    }
    Ok(spec)
}

fn scheme_from_config(cfg: &ExperimentConfig) -> Scheme {
    match cfg.numerics.scheme.as_str() {
        "yosida" => Scheme::Yosida { eps: cfg.numerics.yosida_eps },
        _ => Scheme::ProxEuler,
    }
}

/// Trajectory CSV: `t,x_1..x_n,eta_1..eta_n,njumps`, one row per node of the
/// solution grid (eta and the jump counter are zero on the initial segment).
pub fn trajectory_csv(sol: &SolutionPair) -> String {
    let dim = sol.x.dim();
    let mut header = String::from("t");
    for i in 1..=dim {
        header.push_str(&format!(",x_{i}"));
    }
    for i in 1..=dim {
        header.push_str(&format!(",eta_{i}"));
    }
    header.push_str(",njumps\n");
    let mut out = header;
    let eta_start = sol.x.len() - sol.eta.len();
    for i in 0..sol.x.len() {
        let t = sol.x.grid()[i];
        let mut row = format!("{t}");
        for v in sol.x.node_value(i) {
            row.push_str(&format!(",{v}"));
        }
        if i >= eta_start {
            let k = i - eta_start;
            for v in sol.eta.node_value(k) {
                row.push_str(&format!(",{v}"));
            }
            row.push_str(&format!(",{}", sol.meta.jumps_per_node[k]));
        } else {
            for _ in 0..dim {
                row.push_str(",0");
            }
            row.push_str(",0");
        }
        row.push('\n');
        out.push_str(&row);
    }
    out
}

fn fingerprint(cfg: &ExperimentConfig, seed: u64) -> Fingerprint {
    Fingerprint::new(seed, cfg.numerics.dt)
}

fn report_files(cfg: &ExperimentConfig, report: &ConvergenceReport) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    if cfg.output.formats.iter().any(|f| f == "csv") {
        files.push(("report.csv".to_string(), report.csv_string()));
    }
    if cfg.output.formats.iter().any(|f| f == "json") {
        files.push(("report.json".to_string(), report.json_string()?));
    }
    Ok(files)
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let var: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    cov / var
}

pub fn run_simulate(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let spec = problem_from_config(cfg)?;
    let out = simulate(&spec, cfg.numerics.dt, scheme_from_config(cfg), RngStream::new(seed, 0))?;
    Ok(StudyResult {
        files: vec![("trajectory.csv".to_string(), trajectory_csv(&out.solution))],
        verdicts: Vec::new(),
    })
}

/// Refinement study of the proximal scheme against the exact discrete
/// Skorokhod reflection of a finer shared driver. Also certifies the
/// same-resolution algebraic identity between the two.
pub fn run_converge_dt(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let n = &cfg.numerics;
    if cfg.problem.kind != "half_line_reflection" {
        return Err(SviError::InvalidSpec(
            "converge-dt runs on problem.kind = half_line_reflection".into(),
        ));
    }
    let reflected = problem_from_config(cfg)?;
    let free = catalog::free_scalar_bm(cfg.problem.sigma, cfg.problem.x0.max(0.0), n.horizon)?;
    let dt_min = *n.dt_grid.last().unwrap();
    let dt_fine = dt_min / n.refinement_factor as f64;
    let fine_grid = NoiseRecord::uniform_grid(n.horizon, dt_fine)?;
    let paths = cfg.mc.paths as usize;

    struct PathErrors {
        per_dt: Vec<f64>,
        identity_gap: f64,
    }

    let dt_grid = n.dt_grid.clone();
    let results: Vec<Result<PathErrors>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let noise = NoiseRecord::sample(
                &free.wiener,
                &free.levy,
                &fine_grid,
                RngStream::new(seed, i as u64),
            )?;
            // reference: exact reflection of the fine driver
            let fine_driver = simulate_with_noise(&free, dt_fine, Scheme::ProxEuler, &noise)?;
            let reference = skorokhod_1d(&fine_driver.x)?;

            let mut per_dt = Vec::with_capacity(dt_grid.len());
            let mut identity_gap = 0.0f64;
            for &dt in &dt_grid {
                let coarse = aggregate_noise(&noise, n.horizon, dt)?;
                let sol = simulate_with_noise(&reflected, dt, Scheme::ProxEuler, &coarse)?;
                // same-resolution oracle: reflect the coarse driver
                let coarse_driver =
                    simulate_with_noise(&free, dt, Scheme::ProxEuler, &coarse)?;
                let oracle = skorokhod_1d(&coarse_driver.x)?;
                identity_gap =
                    identity_gap.max(SolutionPair::sup_node_distance(&sol, &oracle)?);
                // error against the fine reference at shared node times
                let mut err = 0.0f64;
                for (k, &t) in sol.x.grid().iter().enumerate() {
                    if t < 0.0 {
                        continue;
                    }
                    let r = reference.x.value_at(t);
                    err = err.max((sol.x.node_value(k)[0] - r[0]).abs());
                }
                per_dt.push(err);
            }
            Ok(PathErrors { per_dt, identity_gap })
        })
        .collect();

    let mut sums = vec![0.0; n.dt_grid.len()];
    let mut sums_sq = vec![0.0; n.dt_grid.len()];
    let mut worst_identity = 0.0f64;
    for r in results {
        let r = r?;
        for (k, e) in r.per_dt.iter().enumerate() {
            sums[k] += e;
            sums_sq[k] += e * e;
        }
        worst_identity = worst_identity.max(r.identity_gap);
    }

    let mut report = ConvergenceReport::new(
        "converge-dt",
        "dt",
        vec!["dt".into(), "error".into(), "std_error".into(), "n_paths".into()],
        fingerprint(cfg, seed),
    );
    let nf = paths as f64;
    let mut log_dt = Vec::new();
    let mut log_err = Vec::new();
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (k, &dt) in n.dt_grid.iter().enumerate() {
        let mean = sums[k] / nf;
        let se = ((sums_sq[k] / nf - mean * mean).max(0.0) / nf).sqrt();
        means.push(mean);
        ses.push(se);
        log_dt.push(dt.ln());
        log_err.push(mean.max(1e-300).ln());
        let mut row = BTreeMap::new();
        row.insert("dt".to_string(), dt);
        row.insert("error".to_string(), mean);
        row.insert("std_error".to_string(), se);
        row.insert("n_paths".to_string(), nf);
        report.push_row(row)?;
    }
    let slope = fit_slope(&log_dt, &log_err);
    report.push_verdict(
        "scheme-oracle-identity",
        worst_identity <= 1e-12,
        format!("max same-resolution gap {worst_identity:.3e} (tolerance 1e-12)"),
    );
    let mut monotone = true;
    for k in 1..means.len() {
        let allowance = 2.0 * (ses[k - 1].powi(2) + ses[k].powi(2)).sqrt();
        if means[k] >= means[k - 1] + allowance {
            monotone = false;
        }
    }
    report.push_verdict(
        "refinement-decay",
        monotone,
        format!("errors {means:?} non-increasing within 2 SE"),
    );
    report.push_verdict(
        "refinement-slope",
        slope >= n.slope_min && slope <= n.slope_max,
        format!("log-log slope {slope:.3} within [{}, {}]", n.slope_min, n.slope_max),
    );
    let verdicts = report.verdicts.clone();
    Ok(StudyResult { files: report_files(cfg, &report)?, verdicts })
}

/// Sums fine Wiener increments into a coarser uniform grid (diffusion-only
/// noise records).
fn aggregate_noise(fine: &NoiseRecord, horizon: f64, dt: f64) -> Result<NoiseRecord> {
    if !fine.events.is_empty() {
        return Err(SviError::InvalidSpec(
            "increment aggregation requires a jump-free record".into(),
        ));
    }
    let coarse_grid = NoiseRecord::uniform_grid(horizon, dt)?;
    let modes = fine.increments[0].len();
    let mut increments = Vec::with_capacity(coarse_grid.len() - 1);
    let mut acc = vec![0.0; modes];
    let mut next_coarse = 1usize;
    for (i, w) in fine.increments.iter().enumerate() {
        for m in 0..modes {
            acc[m] += w[m];
        }
        let t_end = fine.cuts[i + 1];
        if (t_end - coarse_grid[next_coarse]).abs() < 1e-12 {
            increments.push(std::mem::replace(&mut acc, vec![0.0; modes]));
            next_coarse += 1;
        }
    }
    if increments.len() != coarse_grid.len() - 1 {
        return Err(SviError::GridMismatch(format!(
            "coarse dt {dt} does not align with the fine grid"
        )));
    }
    Ok(NoiseRecord {
        base_grid: coarse_grid.clone(),
        cuts: coarse_grid,
        increments,
        events: Vec::new(),
        stream: fine.stream,
    })
}

/// Penalization error study: the explicitly penalized scheme against the
/// exact reflection of the same driver, swept over the penalty parameter.
pub fn run_converge_yosida(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let n = &cfg.numerics;
    if cfg.problem.kind != "half_line_reflection" {
        return Err(SviError::InvalidSpec(
            "converge-yosida runs on problem.kind = half_line_reflection".into(),
        ));
    }
    let eps_min = *n.eps_grid.last().unwrap();
    if n.dt > eps_min * (1.0 + 1e-12) {
        return Err(SviError::StiffStep { dt: n.dt, eps: eps_min });
    }
    let reflected = problem_from_config(cfg)?;
    let free = catalog::free_scalar_bm(cfg.problem.sigma, cfg.problem.x0.max(0.0), n.horizon)?;
    let grid = NoiseRecord::uniform_grid(n.horizon, n.dt)?;
    let paths = cfg.mc.paths as usize;
    let eps_grid = n.eps_grid.clone();

    let results: Vec<Result<Vec<f64>>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let noise = NoiseRecord::sample(
                &free.wiener,
                &free.levy,
                &grid,
                RngStream::new(seed, i as u64),
            )?;
            let driver = simulate_with_noise(&free, n.dt, Scheme::ProxEuler, &noise)?;
            let oracle = skorokhod_1d(&driver.x)?;
            let mut errs = Vec::with_capacity(eps_grid.len());
            for &eps in &eps_grid {
                let sol =
                    simulate_with_noise(&reflected, n.dt, Scheme::Yosida { eps }, &noise)?;
                errs.push(SolutionPair::sup_node_distance(&sol, &oracle)?);
            }
            Ok(errs)
        })
        .collect();

    let mut sums = vec![0.0; eps_grid.len()];
    let mut sums_sq = vec![0.0; eps_grid.len()];
    for r in results {
        let r = r?;
        for (k, e) in r.iter().enumerate() {
            sums[k] += e;
            sums_sq[k] += e * e;
        }
    }
    let nf = paths as f64;
    let mut report = ConvergenceReport::new(
        "converge-yosida",
        "epsilon",
        vec!["epsilon".into(), "error".into(), "std_error".into(), "n_paths".into()],
        fingerprint(cfg, seed),
    );
    let mut means = Vec::new();
    for (k, &eps) in eps_grid.iter().enumerate() {
        let mean = sums[k] / nf;
        means.push(mean);
        let se = ((sums_sq[k] / nf - mean * mean).max(0.0) / nf).sqrt();
        let mut row = BTreeMap::new();
        row.insert("epsilon".to_string(), eps);
        row.insert("error".to_string(), mean);
        row.insert("std_error".to_string(), se);
        row.insert("n_paths".to_string(), nf);
        report.push_row(row)?;
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    report.push_verdict(
        "penalization-monotone",
        monotone,
        format!("errors {means:?} decrease as eps shrinks"),
    );
    let log_eps: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let log_err: Vec<f64> = means.iter().map(|m| m.max(1e-300).ln()).collect();
    let slope = fit_slope(&log_eps, &log_err);
    report.push_verdict(
        "penalization-slope",
        slope >= n.slope_min && slope <= n.slope_max,
        format!("log-log slope {slope:.3} within [{}, {}]", n.slope_min, n.slope_max),
    );
    let verdicts = report.verdicts.clone();
    Ok(StudyResult { files: report_files(cfg, &report)?, verdicts })
}

pub fn run_picard(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let n = &cfg.numerics;
    let spec = problem_from_config(cfg)?;
    let seeds = cfg.mc.paths as usize;
    let tol = n.picard_tol;
    let max_iter = n.picard_max_iter as usize;

    let outcomes: Vec<Result<(usize, f64, bool, bool)>> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let out = picard_solve(&spec, n.dt, RngStream::new(seed, i as u64), tol, max_iter)?;
            let monotone_after_first = out
                .residuals
                .windows(2)
                .skip(1)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-9));
            Ok((
                out.residuals.len(),
                *out.residuals.last().unwrap(),
                out.converged,
                monotone_after_first,
            ))
        })
        .collect();

    let mut report = ConvergenceReport::new(
        "picard",
        "seed",
        vec![
            "seed".into(),
            "iterations".into(),
            "final_residual".into(),
            "converged".into(),
        ],
        fingerprint(cfg, seed),
    );
    let mut all_converged = true;
    let mut all_monotone = true;
    for (i, o) in outcomes.into_iter().enumerate() {
        let (iters, final_res, converged, monotone) = o?;
        all_converged &= converged;
        all_monotone &= monotone;
        let mut row = BTreeMap::new();
        row.insert("seed".to_string(), i as f64);
        row.insert("iterations".to_string(), iters as f64);
        row.insert("final_residual".to_string(), final_res);
        row.insert("converged".to_string(), f64::from(converged));
        report.push_row(row)?;
    }
    report.push_verdict(
        "picard-convergence",
        all_converged,
        format!("all {seeds} seeds reached tol {tol} within {max_iter} iterations"),
    );
    report.push_verdict(
        "picard-monotone",
        all_monotone,
        "residuals non-increasing after the first correction".into(),
    );

    // state-only coefficients: the converged iteration equals the one-pass
    // scheme on the same noise
    let mut state_only = catalog::half_line_reflected_bm(
        cfg.problem.sigma,
        cfg.problem.x0.max(0.0),
        n.horizon,
    )?;
    state_only.drift = coefficients::drift_linear_state(Mat::from_rows(vec![vec![-0.8]]));
    let pic = picard_solve(&state_only, n.dt, RngStream::new(seed, 0), 1e-14, 3 * max_iter)?;
    let direct = simulate_with_noise(&state_only, n.dt, Scheme::ProxEuler, &pic.noise)?;
    let gap = SolutionPair::sup_node_distance(&pic.solution, &direct)?;
    report.push_verdict(
        "picard-fixed-point",
        pic.converged && gap <= 1e-12,
        format!("state-only fixed point gap {gap:.3e} (tolerance 1e-12)"),
    );
    let verdicts = report.verdicts.clone();
    Ok(StudyResult { files: report_files(cfg, &report)?, verdicts })
}

/// Oscillating-coefficient template assembled from [problem] + [averaging].
pub fn averaging_template_from_config(cfg: &ExperimentConfig) -> Result<AveragingTemplate> {
    let a = &cfg.averaging;
    let p = &cfg.problem;
    let n = &cfg.numerics;
    let profile = match a.profile.as_str() {
        "decaying" => TimeProfile::DecayingExp { rate: a.rate },
        "periodic" => TimeProfile::PeriodicTable {
            values: vec![0.0, 1.0, 0.0, -1.0],
            period: 2.0 * std::f64::consts::PI / a.omega,
        },
        _ => TimeProfile::Sinusoid { omega: a.omega, phase: a.phase },
    };
    let composition = match a.composition.as_str() {
        "multiplicative" => Composition::Multiplicative,
        _ => Composition::Additive,
    };
    let coeff = a.base_coeff;
    let offset = a.base_offset;
    let base: DriftFn = Arc::new(move |_t, seg| {
        seg.current().iter().map(|x| offset + coeff * x).collect()
    });
    let potential: Arc<dyn svi_core::convex::Potential> = match p.kind.as_str() {
        "half_line_reflection" | "reflected_jump_diffusion" | "supnorm_feedback" => {
            Arc::new(ConvexPotential::indicator(ConvexSetSpec::Halfline { lower: vec![0.0] })?)
        }
        "quadratic_prox" => Arc::new(ConvexPotential::half_norm_squared(1)),
        _ => Arc::new(ConvexPotential::zero(1)),
    };
    let drift = OscillatingDrift {
        base: base.clone(),
        perturb: Some(base),
        profile: Some(profile),
        composition,
    };
    let (levy, jump) = if a.with_jumps {
        (
            catalog::symmetric_marks(a.jump_intensity)?,
            Some(OscillatingJump::constant(coefficients::jump_additive_mark(a.jump_scale, 1))),
        )
    } else {
        (LevyConfig::none(), None)
    };
    Ok(AveragingTemplate {
        dimension: 1,
        potential,
        operator_a: OperatorA::Zero,
        drift,
        diffusion: OscillatingDiffusion::constant(coefficients::diffusion_constant(
            Mat::from_rows(vec![vec![p.sigma]]),
        )),
        jump,
        delay: DelayFunction::Constant { gamma0: 0.0 },
        initial_segment: CadlagPath::constant(vec![0.0], vec![p.x0.max(0.0)], 0.0)?,
        horizon: n.horizon,
        wiener: WienerSpec::standard(1),
        levy,
    })
}

pub fn run_averaging_sweep(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let template = averaging_template_from_config(cfg)?;
    let run = AveragingRun {
        template: template.clone(),
        epsilons: cfg.averaging.eps_grid.clone(),
        samples: cfg.mc.paths as usize,
        master_seed: seed,
        dt: cfg.numerics.dt,
    };
    let mut report = epsilon_sweep(&run)?;
    // moment uniformity against the unscaled (eps = 1) baseline
    let baseline = coupled_error(&template, 1.0, cfg.mc.paths as usize, cfg.numerics.dt, seed)?;
    let max_sup4 = report
        .rows
        .iter()
        .map(|r| r["sup4_moment"])
        .fold(0.0f64, f64::max);
    report.push_verdict(
        "averaging-moment-uniformity",
        max_sup4.is_finite() && max_sup4 <= 2.0 * baseline.sup4_moment,
        format!(
            "max E sup|X|^4 over the grid {max_sup4:.4e} vs 2x baseline {:.4e}",
            2.0 * baseline.sup4_moment
        ),
    );
    let verdicts = report.verdicts.clone();
    Ok(StudyResult { files: report_files(cfg, &report)?, verdicts })
}

pub fn run_spde(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let s = &cfg.spde;
    let n = &cfg.numerics;
    let reaction = if s.reaction_coeffs.is_empty() {
        None
    } else {
        Some(ReactionSpec {
            coeffs: s.reaction_coeffs.clone(),
            one_sided_bound: s.reaction_bound,
            validation_range: s.reaction_range,
        })
    };
    let potential = match s.potential.as_str() {
        "halfline" => Some(ConvexPotential::indicator(ConvexSetSpec::Halfline {
            lower: vec![s.potential_lower],
        })?),
        "box" => Some(ConvexPotential::indicator(ConvexSetSpec::Box {
            lower: vec![s.potential_lower],
            upper: vec![s.potential_upper],
        })?),
        _ => None,
    };
    let b2 = s.b2_coeff;
    let b3 = s.b3_coeff;
    let drift = CoefficientTriple {
        instantaneous: None,
        discrete_delay: if b2 != 0.0 {
            Some(Arc::new(move |_t, _x, v| b2 * v) as PointwiseMap)
        } else {
            None
        },
        distributed: if b3 != 0.0 {
            Some(Arc::new(move |_t, _x, v| b3 * v) as PointwiseMap)
        } else {
            None
        },
    };
    let jump_scale = s.jump_scale;
    let jump = if s.jump_intensity > 0.0 && jump_scale != 0.0 {
        svi_core::galerkin::JumpTriple {
            instantaneous: Some(Arc::new(move |_t, _x, v, mark: &[f64]| {
                jump_scale * mark[0] * v
            })
                as svi_core::galerkin::PointwiseJumpMap),
            discrete_delay: None,
            distributed: None,
        }
    } else {
        svi_core::galerkin::JumpTriple::none()
    };
    let levy = if s.jump_intensity > 0.0 {
        catalog::symmetric_marks(s.jump_intensity)?
    } else {
        LevyConfig::none()
    };
    let mut initial = s.initial_modes.clone();
    initial.resize(s.modes as usize, 0.0);
    let spde_cfg = SpdeConfig {
        modes: s.modes as usize,
        viscosity: s.viscosity,
        reaction,
        drift,
        diffusion: CoefficientTriple::none(),
        jump,
        delay1: DelayFunction::Constant { gamma0: s.delay1 },
        delay2: DelayFunction::Constant { gamma0: s.delay2 },
        potential,
        noise_q: s.noise_q.clone(),
        levy,
        delay_horizon: s.delay_horizon.max(s.delay1).max(s.delay2),
        horizon: n.horizon,
        initial_modes: (vec![0.0], vec![initial]),
    };
    let (_problem, out) = simulate_spde(
        &spde_cfg,
        n.dt,
        RngStream::new(seed, 0),
        cfg.output.snapshot_every as usize,
        cfg.output.snapshot_points as usize,
    )?;
    let mut field_csv = String::from("t,x,u\n");
    for (t, field) in &out.snapshots {
        for (x, u) in out.snapshot_x.iter().zip(field) {
            field_csv.push_str(&format!("{t},{x},{u}\n"));
        }
    }
    Ok(StudyResult {
        files: vec![
            ("trajectory.csv".to_string(), trajectory_csv(&out.output.solution)),
            ("field.csv".to_string(), field_csv),
        ],
        verdicts: Vec::new(),
    })
}

pub fn run_particles(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    if cfg.problem.kind != "coulomb_particles" {
        return Err(SviError::InvalidSpec(
            "particles runs on problem.kind = coulomb_particles".into(),
        ));
    }
    let spec = problem_from_config(cfg)?;
    let paths = cfg.mc.paths as usize;
    let dt = cfg.numerics.dt;
    let outcomes: Vec<Result<(usize, f64)>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let out = simulate(&spec, dt, Scheme::ProxEuler, RngStream::new(seed, i as u64))?;
            let mut violations = 0usize;
            let mut min_gap = f64::INFINITY;
            for k in 0..out.solution.x.len() {
                let v = out.solution.x.node_value(k);
                for w in v.windows(2) {
                    let gap = w[1] - w[0];
                    min_gap = min_gap.min(gap);
                    if gap <= 0.0 {
                        violations += 1;
                    }
                }
            }
            Ok((violations, min_gap))
        })
        .collect();
    let mut total_violations = 0usize;
    let mut min_gap = f64::INFINITY;
    for o in outcomes {
        let (v, g) = o?;
        total_violations += v;
        min_gap = min_gap.min(g);
    }
    let mut report = ConvergenceReport::new(
        "particles",
        "n_paths",
        vec!["n_paths".into(), "violations".into(), "min_gap".into(), "dt".into()],
        fingerprint(cfg, seed),
    );
    let mut row = BTreeMap::new();
    row.insert("n_paths".to_string(), paths as f64);
    row.insert("violations".to_string(), total_violations as f64);
    row.insert("min_gap".to_string(), min_gap);
    row.insert("dt".to_string(), dt);
    report.push_row(row)?;
    report.push_verdict(
        "particle-ordering",
        total_violations == 0,
        format!("{total_violations} ordering violations over {paths} paths (min gap {min_gap:.3e})"),
    );
    let verdicts = report.verdicts.clone();
    Ok(StudyResult { files: report_files(cfg, &report)?, verdicts })
}

pub fn run_proptest(cfg: &ExperimentConfig, seed: u64) -> Result<StudyResult> {
    let samples = cfg.mc.property_samples as usize;
    let mut report = ConvergenceReport::new(
        "proptest",
        "potential_index",
        vec![
            "potential_index".into(),
            "check_index".into(),
            "worst_violation".into(),
            "tolerance".into(),
            "pass".into(),
        ],
        fingerprint(cfg, seed),
    );
    let mut details = Vec::new();
    for (pi, pot) in potential_catalog().into_iter().enumerate() {
        let mut rng = RngStream::new(seed, pi as u64).rng();
        let pr = envelope_property_suite(&pot, samples, &mut rng)?;
        for (ci, check) in pr.checks.iter().enumerate() {
            let mut row = BTreeMap::new();
            row.insert("potential_index".to_string(), pi as f64);
            row.insert("check_index".to_string(), ci as f64);
            row.insert(
                "worst_violation".to_string(),
                if check.worst_violation.is_finite() { check.worst_violation } else { -1.0 },
            );
            row.insert("tolerance".to_string(), check.tolerance);
            row.insert("pass".to_string(), f64::from(check.pass));
            report.push_row(row)?;
        }
        report.push_verdict(
            format!("envelope-properties[{}]", pr.potential),
            pr.pass(),
            format!(
                "failing checks: {:?}",
                pr.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect::<Vec<_>>()
            ),
        );
        details.push(pr);
    }
    let mut files = report_files(cfg, &report)?;
    files.push((
        "properties.json".to_string(),
        serde_json::to_string_pretty(&details)
            .map_err(|e| SviError::InvalidSpec(format!("serialization failed: {e}")))?,
    ));
    Ok(StudyResult { files, verdicts: report.verdicts.clone() })
}
