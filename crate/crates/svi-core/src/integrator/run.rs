use crate::drivers::{JumpEvent, RngStream};
use crate::error::{Result, SviError};
use crate::linalg::axpy;
use crate::paths::{segment, CadlagPath, Interpolation, SegmentView};

use super::noise::NoiseRecord;
use super::{ProblemSpec, Scheme, SchemeMeta, SolutionPair};

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub solution: SolutionPair,
    pub noise: NoiseRecord,
}

/// One explicit substep's predictor: x plus drift, operator, compensator,
/// diffusion, and raw jump contributions, before any constraint correction.
fn predictor(
    spec: &ProblemSpec,
    t: f64,
    x: &[f64],
    seg: &SegmentView,
    dt: f64,
    dw: &[f64],
    jumps: &[&JumpEvent],
) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    let a_term = spec.operator_a.apply(t, x);
    axpy(dt, &a_term, &mut y);
    let b = (spec.drift)(t, seg);
    if b.len() != spec.dimension {
        return Err(SviError::DimensionMismatch { expected: spec.dimension, got: b.len() });
    }
    axpy(dt, &b, &mut y);
    let sigma = (spec.diffusion)(t, seg);
    if sigma.rows != spec.dimension || sigma.cols != spec.wiener.modes {
        return Err(SviError::GridMismatch(format!(
            "diffusion output is {}x{}, expected {}x{}",
            sigma.rows, sigma.cols, spec.dimension, spec.wiener.modes
        )));
    }
    sigma.mul_add(dw, &mut y);
    if let Some(jump) = &spec.jump {
        if spec.levy.is_active() {
            for ev in jumps {
                let f = jump(t, seg, &ev.mark);
                axpy(1.0, &f, &mut y);
            }
            let comp = spec
                .levy
                .mark_sampler
                .expectation(&|mark: &[f64]| jump(t, seg, mark));
            axpy(-dt * spec.levy.total_intensity, &comp, &mut y);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SviError::NonFinite { what: "predictor", t });
    }
    Ok(y)
}

/// Proximal Euler substep: predictor followed by the resolvent with parameter
/// equal to the step length. Returns (x_next, d_eta) with
/// d_eta = predictor - x_next, the discrete constraining increment. For
/// indicator potentials the resolvent is the exact projection.
pub fn prox_euler_step(
    spec: &ProblemSpec,
    t: f64,
    x: &[f64],
    seg: &SegmentView,
    dt: f64,
    dw: &[f64],
    jumps: &[&JumpEvent],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if dt <= 0.0 {
        return Err(SviError::NonPositive { what: "dt", value: dt });
    }
    let y = predictor(spec, t, x, seg, dt, dw, jumps)?;
    let x_next = spec.potential.resolvent(dt, &y)?;
    let d_eta = crate::linalg::sub(&y, &x_next);
    Ok((x_next, d_eta))
}

/// Explicit Yosida-penalized substep: the subdifferential is replaced by the
/// Lipschitz map (1/eps) D phi_eps evaluated at the current state. Rejected
/// when dt > eps (the penalty has Lipschitz constant 1/eps, so larger steps
/// are unstable). Returns (x_next, d_eta) with d_eta the penalty increment
/// (dt/eps) D phi_eps(x).
pub fn yosida_penalized_step(
    spec: &ProblemSpec,
    t: f64,
    x: &[f64],
    seg: &SegmentView,
    dt: f64,
    dw: &[f64],
    jumps: &[&JumpEvent],
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if dt <= 0.0 {
        return Err(SviError::NonPositive { what: "dt", value: dt });
    }
    if eps <= 0.0 {
        return Err(SviError::NonPositive { what: "eps", value: eps });
    }
    if dt > eps * (1.0 + 1e-12) {
        return Err(SviError::StiffStep { dt, eps });
    }
    let y = predictor(spec, t, x, seg, dt, dw, jumps)?;
    let pen = spec.potential.yosida_gradient(eps, x)?;
    let factor = dt / eps;
    let mut x_next = y;
    let mut d_eta = vec![0.0; x.len()];
    for i in 0..x.len() {
        x_next[i] -= factor * pen[i];
        d_eta[i] = factor * pen[i];
    }
    Ok((x_next, d_eta))
}

fn working_path(spec: &ProblemSpec) -> Result<CadlagPath> {
    let interp = if spec.levy.is_active() {
        Interpolation::PiecewiseConstant
    } else {
        Interpolation::Linear
    };
    let init = &spec.initial_segment;
    let values: Vec<Vec<f64>> = (0..init.len()).map(|i| init.node_value(i).to_vec()).collect();
    CadlagPath::new(init.grid().to_vec(), values, init.delay_horizon(), interp)
}

/// Core loop shared by the direct scheme and the successive-approximation
/// refinement: when `frozen` is set, segments are taken from that path (the
/// previous iterate) instead of the path under construction. The operator A
/// always acts on the current state.
fn run(
    spec: &ProblemSpec,
    dt: f64,
    scheme: Scheme,
    noise: &NoiseRecord,
    frozen: Option<&CadlagPath>,
) -> Result<SolutionPair> {
    spec.validate()?;
    if let Scheme::Yosida { eps } = scheme {
        let max_step = noise
            .base_grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max);
        if max_step > eps * (1.0 + 1e-12) {
            return Err(SviError::StiffStep { dt: max_step, eps });
        }
    }
    let mut path = working_path(spec)?;
    let mut x = spec.initial_segment.last_value().to_vec();
    let dim = spec.dimension;

    let mut eta_grid = vec![noise.cuts[0]];
    let mut eta_values = vec![vec![0.0; dim]];
    let mut eta_acc = vec![0.0; dim];
    let mut jumps_per_node = vec![0usize];

    for i in 0..noise.n_intervals() {
        let t0 = noise.cuts[i];
        let t1 = noise.cuts[i + 1];
        let delta = t1 - t0;
        let dw = &noise.increments[i];
        let events = noise.events_for_interval(i);

        let step = {
            let seg_path = frozen.unwrap_or(&path);
            let seg = segment(seg_path, t0, &spec.delay)?;
            match scheme {
                Scheme::ProxEuler => prox_euler_step(spec, t0, &x, &seg, delta, dw, &events),
                Scheme::Yosida { eps } => {
                    yosida_penalized_step(spec, t0, &x, &seg, delta, dw, &events, eps)
                }
            }
        };
        let (x_next, d_eta) = step.map_err(|e| match e {
            SviError::NonFinite { what, t } => SviError::Aborted {
                t,
                reason: format!("non-finite value from {what}"),
                partial: Some(Box::new(path.clone())),
            },
            SviError::NewtonNoConvergence { residual, iters } => SviError::Aborted {
                t: t0,
                reason: format!(
                    "resolvent did not converge (residual {residual:.3e} after {iters} iterations)"
                ),
                partial: Some(Box::new(path.clone())),
            },
            other => other,
        })?;

        path.append(t1, &x_next)?;
        for k in 0..dim {
            eta_acc[k] += d_eta[k];
        }
        eta_grid.push(t1);
        eta_values.push(eta_acc.clone());
        jumps_per_node.push(events.len());
        x = x_next;
    }

    let eta = CadlagPath::new(eta_grid, eta_values, 0.0, path.interpolation())?;
    Ok(SolutionPair {
        x: path,
        eta,
        meta: SchemeMeta {
            scheme: scheme.name(),
            dt,
            stream: noise.stream,
            jumps_per_node,
        },
    })
}

/// Samples a noise record on the uniform grid T/dt and advances the scheme
/// on the jump-augmented cuts. Jumps are applied at their exact sampled
/// times by splitting the step; the constraint correction runs once at the
/// end of every substep, so a jump may momentarily leave the domain and is
/// pulled back by the following resolvent.
pub fn simulate(
    spec: &ProblemSpec,
    dt: f64,
    scheme: Scheme,
    stream: RngStream,
) -> Result<SimulationOutput> {
    let grid = NoiseRecord::uniform_grid(spec.horizon, dt)?;
    let noise = NoiseRecord::sample(&spec.wiener, &spec.levy, &grid, stream)?;
    let solution = run(spec, dt, scheme, &noise, None)?;
    Ok(SimulationOutput { solution, noise })
}

/// Advances the scheme on a pre-sampled noise record: the shared-noise entry
/// point for scheme comparisons and coupled runs.
pub fn simulate_with_noise(
    spec: &ProblemSpec,
    dt: f64,
    scheme: Scheme,
    noise: &NoiseRecord,
) -> Result<SolutionPair> {
    run(spec, dt, scheme, noise, None)
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: SolutionPair,
    /// sup-node distance between successive iterates, one entry per iteration
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub noise: NoiseRecord,
}

/// Successive approximation: the zeroth iterate freezes the initial value on
/// [0, T]; iterate n advances the proximal scheme with drift, diffusion, and
/// jump coefficients read along the segments of iterate n-1, on one fixed
/// noise realization. Stops when the sup-node distance between successive
/// iterates drops below `tol`.
pub fn picard_solve(
    spec: &ProblemSpec,
    dt: f64,
    stream: RngStream,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    if tol <= 0.0 {
        return Err(SviError::NonPositive { what: "tolerance", value: tol });
    }
    if max_iter == 0 {
        return Err(SviError::InvalidSpec("max_iter must be >= 1".into()));
    }
    let grid = NoiseRecord::uniform_grid(spec.horizon, dt)?;
    let noise = NoiseRecord::sample(&spec.wiener, &spec.levy, &grid, stream)?;

    // iterate 0: the initial segment, frozen at phi(0) on (0, T]
    let mut prev = working_path(spec)?;
    let frozen_value = spec.initial_segment.last_value().to_vec();
    for &t in &noise.cuts[1..] {
        prev.append(t, &frozen_value)?;
    }

    let mut residuals = Vec::new();
    let mut best: Option<SolutionPair> = None;
    for _ in 0..max_iter {
        let sol = run(spec, dt, Scheme::ProxEuler, &noise, Some(&prev))?;
        let mut residual = 0.0f64;
        for i in 0..sol.x.len() {
            residual = residual.max(crate::linalg::dist(sol.x.node_value(i), prev.node_value(i)));
        }
        residuals.push(residual);
        prev = sol.x.clone();
        best = Some(sol);
        if residual < tol {
            return Ok(PicardOutcome {
                solution: best.unwrap(),
                residuals,
                converged: true,
                noise,
            });
        }
    }
    Ok(PicardOutcome { solution: best.unwrap(), residuals, converged: false, noise })
}

/// Exact discrete Skorokhod reflection at zero of a scalar driver path:
/// eta(t) = max(0, max_{s <= t} (-Y(s))) over the stored nodes, X = Y + eta.
/// The driver must start nonnegative so that eta(0) = 0.
///
/// This regulator is the classical nondecreasing one; the scheme's
/// constraining process uses the X = driver - eta decomposition and therefore
/// carries the opposite sign (its increments align with the outward normal).
/// The X components agree; only the bookkeeping of the push differs.
pub fn skorokhod_1d(driver: &CadlagPath) -> Result<SolutionPair> {
    if driver.dim() != 1 {
        return Err(SviError::DimensionMismatch { expected: 1, got: driver.dim() });
    }
    let grid = driver.grid();
    let start = grid.iter().position(|&t| t >= 0.0).ok_or(SviError::EmptyGrid)?;
    if driver.node_value(start)[0] < 0.0 {
        return Err(SviError::InvalidSpec(
            "skorokhod driver must start nonnegative at t = 0".into(),
        ));
    }

    let mut x_values: Vec<Vec<f64>> = Vec::with_capacity(driver.len());
    let mut eta_grid = Vec::with_capacity(driver.len() - start);
    let mut eta_values = Vec::with_capacity(driver.len() - start);
    let mut running = 0.0f64;
    for i in 0..driver.len() {
        let y = driver.node_value(i)[0];
        if i < start {
            x_values.push(vec![y]);
            continue;
        }
        running = running.max(-y);
        x_values.push(vec![y + running]);
        eta_grid.push(grid[i]);
        eta_values.push(vec![running]);
    }
    let x = CadlagPath::new(
        grid.to_vec(),
        x_values,
        driver.delay_horizon(),
        driver.interpolation(),
    )?;
    let eta = CadlagPath::new(eta_grid, eta_values, 0.0, driver.interpolation())?;
    let n = eta.len();
    Ok(SolutionPair {
        x,
        eta,
        meta: SchemeMeta {
            scheme: "skorokhod_1d".into(),
            dt: f64::NAN,
            stream: None,
            jumps_per_node: vec![0; n],
        },
    })
}
