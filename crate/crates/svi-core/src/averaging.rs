//! Coupled study of fast time-oscillating coefficients against their
//! time-averaged limits: the same Wiener increments and jump events drive
//! both systems, so the sup-node gap isolates the averaging error. Includes
//! the time-rescaling identity that maps a run at scale eps onto the
//! slowed-down equation with sqrt(eps) noise and eps-scaled drift, operator,
//! constraint, and jump intensity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::Potential;
use crate::drivers::{LevyConfig, RngStream, WienerSpec};
use crate::error::{Result, SviError};
use crate::integrator::{
    simulate_with_noise, DiffusionFn, DriftFn, JumpFn, NoiseRecord, OperatorA, ProblemSpec,
    Scheme, SolutionPair,
};
use crate::paths::{segment, CadlagPath, DelayFunction, SegmentView};
use crate::report::{ConvergenceReport, Fingerprint};

/// Time profile m(t) with a closed-form long-run average
/// l0 = lim (1/T) int_0^T m(s) ds.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum TimeProfile {
    Sinusoid { omega: f64, phase: f64 },
    DecayingExp { rate: f64 },
    PeriodicTable { values: Vec<f64>, period: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Sinusoid { omega, phase } => (omega * t + phase).sin(),
            TimeProfile::DecayingExp { rate } => (-rate * t.max(0.0)).exp(),
            TimeProfile::PeriodicTable { values, period } => {
                let n = values.len();
                if n == 0 {
                    return 0.0;
                }
                let s = (t.rem_euclid(*period)) / period * n as f64;
                let i = (s as usize).min(n - 1);
                let frac = s - i as f64;
                let next = values[(i + 1) % n];
                values[i] + frac * (next - values[i])
            }
        }
    }

    /// Long-run time average of the profile.
    pub fn long_run_average(&self) -> f64 {
        match self {
            TimeProfile::Sinusoid { .. } => 0.0,
            TimeProfile::DecayingExp { .. } => 0.0,
            TimeProfile::PeriodicTable { values, .. } => {
                if values.is_empty() {
                    0.0
                } else {
                    // piecewise-linear periodic interpolant: trapezoid over one
                    // period with wrap-around equals the plain mean
                    values.iter().sum::<f64>() / values.len() as f64
                }
            }
        }
    }

    /// Characteristic time rate, used to verify that dt resolves t/eps.
    pub fn max_rate(&self) -> f64 {
        match self {
            TimeProfile::Sinusoid { omega, .. } => omega.abs(),
            TimeProfile::DecayingExp { rate } => rate.abs(),
            TimeProfile::PeriodicTable { period, .. } => {
                2.0 * std::f64::consts::PI / period.max(1e-12)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Composition {
    /// base + m(t) * perturbation
    Additive,
    /// m(t) * base
    Multiplicative,
}

fn combine_drift_add(
    base: DriftFn,
    perturb: DriftFn,
    m: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> DriftFn {
    Arc::new(move |t: f64, seg: &SegmentView| {
        let mut v = base(t, seg);
        let p = perturb(t, seg);
        let w = m(t);
        for (vi, pi) in v.iter_mut().zip(&p) {
            *vi += w * pi;
        }
        v
    })
}

fn combine_drift_mul(base: DriftFn, m: impl Fn(f64) -> f64 + Send + Sync + 'static) -> DriftFn {
    Arc::new(move |t: f64, seg: &SegmentView| {
        let w = m(t);
        base(t, seg).into_iter().map(|v| w * v).collect()
    })
}

fn combine_diffusion_add(
    base: DiffusionFn,
    perturb: DiffusionFn,
    m: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> DiffusionFn {
    Arc::new(move |t: f64, seg: &SegmentView| {
        let mut s = base(t, seg);
        let p = perturb(t, seg);
        let w = m(t);
        for (si, pi) in s.data.iter_mut().zip(&p.data) {
            *si += w * pi;
        }
        s
    })
}

fn combine_diffusion_mul(
    base: DiffusionFn,
    m: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> DiffusionFn {
    Arc::new(move |t: f64, seg: &SegmentView| {
        let mut s = base(t, seg);
        let w = m(t);
        for si in s.data.iter_mut() {
            *si *= w;
        }
        s
    })
}

fn combine_jump_add(
    base: JumpFn,
    perturb: JumpFn,
    m: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> JumpFn {
    Arc::new(move |t: f64, seg: &SegmentView, mark: &[f64]| {
        let mut v = base(t, seg, mark);
        let p = perturb(t, seg, mark);
        let w = m(t);
        for (vi, pi) in v.iter_mut().zip(&p) {
            *vi += w * pi;
        }
        v
    })
}

fn combine_jump_mul(base: JumpFn, m: impl Fn(f64) -> f64 + Send + Sync + 'static) -> JumpFn {
    Arc::new(move |t: f64, seg: &SegmentView, mark: &[f64]| {
        let w = m(t);
        base(t, seg, mark).into_iter().map(|v| w * v).collect()
    })
}

macro_rules! oscillating_coefficient {
    ($name:ident, $fnty:ty, $combine_add:path, $combine_mul:path) => {
        /// Coefficient with an explicit time modulation and a closed-form
        /// time average.
        #[derive(Clone)]
        pub struct $name {
            pub base: $fnty,
            pub perturb: Option<$fnty>,
            pub profile: Option<TimeProfile>,
            pub composition: Composition,
        }

        impl $name {
            pub fn constant(base: $fnty) -> Self {
                Self { base, perturb: None, profile: None, composition: Composition::Additive }
            }

            pub fn additive(base: $fnty, perturb: $fnty, profile: TimeProfile) -> Self {
                Self {
                    base,
                    perturb: Some(perturb),
                    profile: Some(profile),
                    composition: Composition::Additive,
                }
            }

            pub fn multiplicative(base: $fnty, profile: TimeProfile) -> Self {
                Self {
                    base,
                    perturb: None,
                    profile: Some(profile),
                    composition: Composition::Multiplicative,
                }
            }

            pub fn is_time_constant(&self) -> bool {
                self.profile.is_none()
            }

            pub fn max_rate(&self) -> f64 {
                self.profile.as_ref().map_or(0.0, |p| p.max_rate())
            }

            /// The coefficient at native time: t -> combine(m(t), ...).
            pub fn native(&self) -> $fnty {
                self.at_time_scale(1.0)
            }

            /// The coefficient with time compressed by eps: m(t / eps).
            pub fn at_time_scale(&self, eps: f64) -> $fnty {
                let base = self.base.clone();
                let perturb = self.perturb.clone();
                let profile = self.profile.clone();
                let composition = self.composition;
                match (profile, composition) {
                    (None, _) => base,
                    (Some(p), Composition::Additive) => {
                        let perturb = perturb.unwrap_or_else(|| base.clone());
                        $combine_add(base, perturb, move |t: f64| p.eval(t / eps))
                    }
                    (Some(p), Composition::Multiplicative) => {
                        $combine_mul(base, move |t: f64| p.eval(t / eps))
                    }
                }
            }

            /// Closed-form averaged coefficient: base + l0 * perturb, or
            /// l0 * base for multiplicative composition.
            pub fn averaged(&self) -> $fnty {
                let base = self.base.clone();
                match (&self.profile, self.composition) {
                    (None, _) => base,
                    (Some(p), Composition::Additive) => {
                        let l0 = p.long_run_average();
                        let perturb = self.perturb.clone().unwrap_or_else(|| base.clone());
                        $combine_add(base, perturb, move |_t: f64| l0)
                    }
                    (Some(p), Composition::Multiplicative) => {
                        let l0 = p.long_run_average();
                        $combine_mul(base, move |_t: f64| l0)
                    }
                }
            }
        }
    };
}

oscillating_coefficient!(OscillatingDrift, DriftFn, combine_drift_add, combine_drift_mul);
oscillating_coefficient!(
    OscillatingDiffusion,
    DiffusionFn,
    combine_diffusion_add,
    combine_diffusion_mul
);
oscillating_coefficient!(OscillatingJump, JumpFn, combine_jump_add, combine_jump_mul);

/// Problem template with oscillating coefficients: everything the fast and
/// averaged systems share, plus the modulated coefficient families.
#[derive(Clone)]
pub struct AveragingTemplate {
    pub dimension: usize,
    pub potential: Arc<dyn Potential>,
    pub operator_a: OperatorA,
    pub drift: OscillatingDrift,
    pub diffusion: OscillatingDiffusion,
    pub jump: Option<OscillatingJump>,
    pub delay: DelayFunction,
    pub initial_segment: CadlagPath,
    pub horizon: f64,
    pub wiener: WienerSpec,
    pub levy: LevyConfig,
}

impl AveragingTemplate {
    pub fn max_rate(&self) -> f64 {
        let mut r = self.drift.max_rate().max(self.diffusion.max_rate());
        if let Some(j) = &self.jump {
            r = r.max(j.max_rate());
        }
        r
    }

    /// Problem with coefficients evaluated at rescaled time t/eps.
    pub fn fast_problem(&self, eps: f64) -> Result<ProblemSpec> {
        if eps <= 0.0 {
            return Err(SviError::NonPositive { what: "eps", value: eps });
        }
        Ok(ProblemSpec {
            dimension: self.dimension,
            potential: self.potential.clone(),
            operator_a: self.operator_a.clone(),
            drift: self.drift.at_time_scale(eps),
            diffusion: self.diffusion.at_time_scale(eps),
            jump: self.jump.as_ref().map(|j| j.at_time_scale(eps)),
            delay: self.delay.clone(),
            initial_segment: self.initial_segment.clone(),
            horizon: self.horizon,
            wiener: self.wiener.clone(),
            levy: self.levy.clone(),
        })
    }

    /// Problem with the closed-form averaged coefficients.
    pub fn averaged_problem(&self) -> ProblemSpec {
        ProblemSpec {
            dimension: self.dimension,
            potential: self.potential.clone(),
            operator_a: self.operator_a.clone(),
            drift: self.drift.averaged(),
            diffusion: self.diffusion.averaged(),
            jump: self.jump.as_ref().map(|j| j.averaged()),
            delay: self.delay.clone(),
            initial_segment: self.initial_segment.clone(),
            horizon: self.horizon,
            wiener: self.wiener.clone(),
            levy: self.levy.clone(),
        }
    }
}

/// Numerical time average of an oscillating drift at a fixed probe segment,
/// its closed-form counterpart, and the mean-square deviation
/// (1/T1) int |coeff(s) - avg|^2 ds.
#[derive(Debug, Clone)]
pub struct TimeAverage {
    pub numerical: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub mean_square_deviation: f64,
}

pub fn time_average_drift(
    coeff: &OscillatingDrift,
    t1: f64,
    probe: &SegmentView,
) -> Result<TimeAverage> {
    if t1 <= 0.0 {
        return Err(SviError::NonPositive { what: "averaging window", value: t1 });
    }
    let native = coeff.native();
    let averaged = coeff.averaged();
    let closed_form = averaged(probe.time(), probe);

    // composite Simpson, resolving the fastest catalog rate
    let min_panels = (40.0 * coeff.max_rate().max(1.0) * t1).ceil() as usize;
    let panels = min_panels.clamp(2_000, 4_000_000) / 2 * 2;
    let h = t1 / panels as f64;
    let dim = closed_form.len();
    let mut acc = vec![0.0; dim];
    let mut dev = 0.0;
    let add = |s: f64, w: f64, acc: &mut Vec<f64>, dev: &mut f64| {
        let v = native(s, probe);
        for i in 0..dim {
            acc[i] += w * v[i];
        }
        let d2: f64 = v
            .iter()
            .zip(&closed_form)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        *dev += w * d2;
    };
    add(0.0, 1.0, &mut acc, &mut dev);
    add(t1, 1.0, &mut acc, &mut dev);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        add(k as f64 * h, w, &mut acc, &mut dev);
    }
    let scale = h / 3.0 / t1;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(TimeAverage { numerical: acc, closed_form, mean_square_deviation: dev * scale })
}

/// Numerical time average of an oscillating diffusion coefficient at a fixed
/// probe segment (entrywise over the matrix), with the closed-form average
/// and the mean-square deviation. The averaging convention acts on the
/// coefficient itself, not on its square.
pub fn time_average_diffusion(
    coeff: &OscillatingDiffusion,
    t1: f64,
    probe: &SegmentView,
) -> Result<TimeAverage> {
    if t1 <= 0.0 {
        return Err(SviError::NonPositive { what: "averaging window", value: t1 });
    }
    let native = coeff.native();
    let averaged = coeff.averaged();
    let closed_form = averaged(probe.time(), probe).data;

    let min_panels = (40.0 * coeff.max_rate().max(1.0) * t1).ceil() as usize;
    let panels = min_panels.clamp(2_000, 4_000_000) / 2 * 2;
    let h = t1 / panels as f64;
    let dim = closed_form.len();
    let mut acc = vec![0.0; dim];
    let mut dev = 0.0;
    let add = |s: f64, w: f64, acc: &mut Vec<f64>, dev: &mut f64| {
        let v = native(s, probe).data;
        for i in 0..dim {
            acc[i] += w * v[i];
        }
        let d2: f64 = v
            .iter()
            .zip(&closed_form)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        *dev += w * d2;
    };
    add(0.0, 1.0, &mut acc, &mut dev);
    add(t1, 1.0, &mut acc, &mut dev);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        add(k as f64 * h, w, &mut acc, &mut dev);
    }
    let scale = h / 3.0 / t1;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(TimeAverage { numerical: acc, closed_form, mean_square_deviation: dev * scale })
}

/// Simulates the fast system at scale eps; dt must resolve the oscillation
/// (dt * rate / eps <= 0.5).
pub fn simulate_fast(
    template: &AveragingTemplate,
    eps: f64,
    dt: f64,
    stream: RngStream,
) -> Result<crate::integrator::SimulationOutput> {
    let rate = template.max_rate();
    if rate > 0.0 && dt * rate / eps > 0.5 + 1e-12 {
        return Err(SviError::UnresolvedOscillation { dt, rate, eps });
    }
    let spec = template.fast_problem(eps)?;
    crate::integrator::simulate(&spec, dt, Scheme::ProxEuler, stream)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupledErrorEstimate {
    /// Monte Carlo mean of sup-node |X_eps - X_bar|^2
    pub mean: f64,
    pub std_error: f64,
    /// Monte Carlo mean of sup-node |X_eps|^4 (moment-uniformity diagnostic)
    pub sup4_moment: f64,
    pub n_paths: usize,
}

/// Shared-noise Monte Carlo estimate of E sup |X_eps - X_bar|^2: each path
/// samples one noise record and advances both systems on it.
pub fn coupled_error(
    template: &AveragingTemplate,
    eps: f64,
    n_paths: usize,
    dt: f64,
    master_seed: u64,
) -> Result<CoupledErrorEstimate> {
    let rate = template.max_rate();
    if rate > 0.0 && dt * rate / eps > 0.5 + 1e-12 {
        return Err(SviError::UnresolvedOscillation { dt, rate, eps });
    }
    let fast_spec = template.fast_problem(eps)?;
    let avg_spec = template.averaged_problem();
    let grid = NoiseRecord::uniform_grid(template.horizon, dt)?;

    let per_path: Vec<Result<(f64, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let stream = RngStream::new(master_seed, i as u64);
            let noise = NoiseRecord::sample(&template.wiener, &template.levy, &grid, stream)?;
            let fast = simulate_with_noise(&fast_spec, dt, Scheme::ProxEuler, &noise)?;
            let avg = simulate_with_noise(&avg_spec, dt, Scheme::ProxEuler, &noise)?;
            let gap = SolutionPair::sup_node_distance(&fast, &avg)?;
            let sup = fast.x.sup_norm((fast.x.start_time(), fast.x.end_time()))?;
            Ok((gap * gap, sup.powi(4)))
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sup4 = 0.0;
    for r in per_path {
        let (e2, s4) = r?;
        sum += e2;
        sum_sq += e2 * e2;
        sup4 += s4;
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(CoupledErrorEstimate {
        mean,
        std_error: (var / n).sqrt(),
        sup4_moment: sup4 / n,
        n_paths,
    })
}

/// Sweep configuration: descending eps grid in (0, 1), shared master seed,
/// fixed dt resolving the fastest cell.
pub struct AveragingRun {
    pub template: AveragingTemplate,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub master_seed: u64,
    pub dt: f64,
}

impl AveragingRun {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(SviError::InvalidSpec("empty eps grid".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SviError::InvalidSpec("eps grid must be strictly descending".into()));
        }
        if self.epsilons.iter().any(|e| *e <= 0.0 || *e >= 1.0) {
            return Err(SviError::InvalidSpec("eps values must lie in (0, 1)".into()));
        }
        let min_eps = *self.epsilons.last().unwrap();
        if self.dt > min_eps / 10.0 + 1e-15 {
            return Err(SviError::InvalidSpec(format!(
                "dt = {} too coarse for the smallest eps = {min_eps} (need dt <= eps/10)",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Runs coupled_error for every eps in the grid and tabulates
/// (epsilon, n_paths, dt, err_mean, err_se, sup4_moment, runtime_s), with the
/// monotone-decay verdict computed under a 2-standard-error allowance. A
/// failed cell marks its row with NaN and the sweep continues.
pub fn epsilon_sweep(run: &AveragingRun) -> Result<ConvergenceReport> {
    run.validate()?;
    let columns: Vec<String> = [
        "epsilon", "n_paths", "dt", "err_mean", "err_se", "sup4_moment", "runtime_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut report = ConvergenceReport::new(
        "averaging-sweep",
        "epsilon",
        columns,
        Fingerprint::new(run.master_seed, run.dt),
    );

    // cells evaluated in the given (descending) order
    let mut cells: Vec<(f64, Option<CoupledErrorEstimate>)> = Vec::new();
    for &eps in &run.epsilons {
        let start = std::time::Instant::now();
        let cell = coupled_error(&run.template, eps, run.samples, run.dt, run.master_seed);
        let runtime = start.elapsed().as_secs_f64();
        let mut row = std::collections::BTreeMap::new();
        row.insert("epsilon".to_string(), eps);
        row.insert("n_paths".to_string(), run.samples as f64);
        row.insert("dt".to_string(), run.dt);
        row.insert("runtime_s".to_string(), runtime);
        match cell {
            Ok(est) => {
                row.insert("err_mean".to_string(), est.mean);
                row.insert("err_se".to_string(), est.std_error);
                row.insert("sup4_moment".to_string(), est.sup4_moment);
                cells.push((eps, Some(est)));
            }
            Err(_) => {
                row.insert("err_mean".to_string(), f64::NAN);
                row.insert("err_se".to_string(), f64::NAN);
                row.insert("sup4_moment".to_string(), f64::NAN);
                cells.push((eps, None));
            }
        }
        report.push_row(row)?;
    }

    let ok: Vec<(f64, &CoupledErrorEstimate)> = cells
        .iter()
        .filter_map(|(e, c)| c.as_ref().map(|c| (*e, c)))
        .collect();
    if ok.len() == cells.len() && ok.len() >= 2 {
        let mut monotone = true;
        let mut detail = String::new();
        for w in ok.windows(2) {
            let (e0, c0) = &w[0];
            let (e1, c1) = &w[1];
            let allowance = 2.0 * (c0.std_error.powi(2) + c1.std_error.powi(2)).sqrt();
            // strict rise beyond the allowance fails; ties (e.g. exact zeros
            // for time-constant coefficients) pass
            if c1.mean > c0.mean + allowance {
                monotone = false;
                detail = format!(
                    "error rose from {:.3e} (eps={e0}) to {:.3e} (eps={e1}) beyond 2 SE",
                    c0.mean, c1.mean
                );
                break;
            }
        }
        report.push_verdict(
            "averaging-decay-monotone",
            monotone,
            if monotone { "non-increasing within 2 SE".to_string() } else { detail },
        );
        let first = ok.first().unwrap().1.mean;
        let last = ok.last().unwrap().1.mean;
        let ratio_ok = first == 0.0 || last < 0.2 * first;
        report.push_verdict(
            "averaging-decay-ratio",
            ratio_ok,
            format!("error({}) = {last:.3e} vs 0.2 * error({}) = {:.3e}",
                ok.last().unwrap().0, ok.first().unwrap().0, 0.2 * first),
        );
    } else {
        report.push_verdict("averaging-decay-monotone", false, "failed cells in sweep".into());
    }
    Ok(report)
}

/// Verifies the change-of-variables identity: the path X_eps simulated at
/// scale eps on the physical grid, read at times eps * t_k, must coincide
/// with the direct Euler recursion for the slowed-down system
///   dY = sqrt(eps) sigma dW~ + eps b dt + eps A dt + f dN~eps - dK,
/// driven by the same underlying samples (dW~ = dW / sqrt(eps), jump times
/// divided by eps, intensity multiplied by eps, constraint potential scaled
/// by eps). The two recursions are algebraically identical, so the
/// discrepancy is pure floating-point noise.
pub fn rescaling_identity_check(
    template: &AveragingTemplate,
    eps: f64,
    dt: f64,
    stream: RngStream,
) -> Result<f64> {
    let out = simulate_fast(template, eps, dt, stream)?;
    let sol_x = &out.solution;
    let noise = &out.noise;
    let fast_spec = template.fast_problem(eps)?;

    // shadow path in physical time carrying the Y values
    let init = &template.initial_segment;
    let values: Vec<Vec<f64>> = (0..init.len()).map(|i| init.node_value(i).to_vec()).collect();
    let mut shadow = CadlagPath::new(
        init.grid().to_vec(),
        values,
        init.delay_horizon(),
        sol_x.x.interpolation(),
    )?;
    let mut y = init.last_value().to_vec();
    let sqrt_eps = eps.sqrt();
    let mut worst = 0.0f64;
    let init_len = init.len();

    for i in 0..noise.n_intervals() {
        let s0 = noise.cuts[i];
        let s1 = noise.cuts[i + 1];
        // slowed-down clock: t = s / eps
        let dt_y = (s1 - s0) / eps;
        let dw_scaled: Vec<f64> = noise.increments[i].iter().map(|w| w / sqrt_eps).collect();

        let y_next = {
            let seg = segment(&shadow, s0, &template.delay)?;
            let mut acc = y.clone();
            let a_term = fast_spec.operator_a.apply(s0, &y);
            crate::linalg::axpy(eps * dt_y, &a_term, &mut acc);
            let b = (fast_spec.drift)(s0, &seg);
            crate::linalg::axpy(eps * dt_y, &b, &mut acc);
            let sigma = (fast_spec.diffusion)(s0, &seg);
            let mut noise_term = vec![0.0; y.len()];
            sigma.mul_add(&dw_scaled, &mut noise_term);
            crate::linalg::axpy(sqrt_eps, &noise_term, &mut acc);
            if let Some(jump) = &fast_spec.jump {
                if template.levy.is_active() {
                    for ev in noise.events_for_interval(i) {
                        // event at physical time ev.time maps to ev.time / eps
                        let f = jump(s0, &seg, &ev.mark);
                        crate::linalg::axpy(1.0, &f, &mut acc);
                    }
                    let comp = template
                        .levy
                        .mark_sampler
                        .expectation(&|mark: &[f64]| jump(s0, &seg, mark));
                    // intensity eps * nu over the slowed step dt_y
                    crate::linalg::axpy(
                        -(eps * template.levy.total_intensity) * dt_y,
                        &comp,
                        &mut acc,
                    );
                }
            }
            // constraint scaled by eps: resolvent parameter eps * dt_y
            template.potential.resolvent(eps * dt_y, &acc)?
        };

        shadow.append(s1, &y_next)?;
        y = y_next;
        let x_node = sol_x.x.node_value(init_len + i);
        worst = worst.max(crate::linalg::dist(&y, x_node));
    }
    Ok(worst)
}
