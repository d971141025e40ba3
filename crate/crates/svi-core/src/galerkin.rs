//! Spectral reduction of the scalar reaction-diffusion dynamics on (0, 1)
//! with Dirichlet boundary: project onto the sine eigenbasis of the Laplacian,
//! evaluate pointwise coefficients on a collocation grid, and hand the
//! resulting mode system to the time-stepping schemes. The pointwise convex
//! potential acts by mass lumping: scalar resolvent at the collocation nodes,
//! then projection back to modes.

use std::sync::Arc;

use crate::convex::{ConvexPotential, Potential};
use crate::drivers::{LevyConfig, RngStream, WienerSpec};
use crate::error::{Result, SviError};
use crate::integrator::{
    simulate, DiffusionFn, DriftFn, JumpFn, OperatorA, ProblemSpec, Scheme, SimulationOutput,
};
use crate::linalg::Mat;
use crate::paths::{CadlagPath, DelayFunction, Interpolation};

/// Pointwise coefficient map (t, x, v) -> value.
pub type PointwiseMap = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Pointwise jump coefficient (t, x, v, mark) -> value.
pub type PointwiseJumpMap = Arc<dyn Fn(f64, f64, f64, &[f64]) -> f64 + Send + Sync>;

/// Delayed coefficient triple: an undelayed term, a discrete-delay term fed
/// with the field at t - delay1(t), and a distributed term integrated over
/// [t - delay2(t), t].
#[derive(Clone, Default)]
pub struct CoefficientTriple {
    pub instantaneous: Option<PointwiseMap>,
    pub discrete_delay: Option<PointwiseMap>,
    pub distributed: Option<PointwiseMap>,
}

#[derive(Clone, Default)]
pub struct JumpTriple {
    pub instantaneous: Option<PointwiseJumpMap>,
    pub discrete_delay: Option<PointwiseJumpMap>,
    pub distributed: Option<PointwiseJumpMap>,
}

impl CoefficientTriple {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_none() && self.discrete_delay.is_none() && self.distributed.is_none()
    }
}

impl JumpTriple {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_none() && self.discrete_delay.is_none() && self.distributed.is_none()
    }
}

/// Reaction g as a polynomial in the field value, with a declared one-sided
/// bound beta: (u - u')(g(u) - g(u')) >= -beta |u - u'|^2, validated on a
/// sampled range.
#[derive(Debug, Clone)]
pub struct ReactionSpec {
    /// coefficients of g, lowest degree first
    pub coeffs: Vec<f64>,
    pub one_sided_bound: f64,
    pub validation_range: f64,
}

impl ReactionSpec {
    pub fn eval(&self, v: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
    }

    fn deriv(&self, v: f64) -> f64 {
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * v + (k as f64) * c;
        }
        acc
    }

    pub fn validate(&self) -> Result<()> {
        if self.one_sided_bound < 0.0 {
            return Err(SviError::NonPositive {
                what: "reaction one-sided bound",
                value: self.one_sided_bound,
            });
        }
        let r = self.validation_range.abs().max(1.0);
        let n = 2001;
        for i in 0..=n {
            let v = -r + 2.0 * r * (i as f64) / (n as f64);
            if self.deriv(v) < -self.one_sided_bound - 1e-9 {
                return Err(SviError::InvalidSpec(format!(
                    "reaction slope {:.4} at v = {v:.4} violates the declared one-sided bound {}",
                    self.deriv(v),
                    self.one_sided_bound
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct SpdeConfig {
    /// number of sine modes N
    pub modes: usize,
    /// diffusion coefficient m0 > 0 of the linear flux h(x, v) = m0 * v
    pub viscosity: f64,
    pub reaction: Option<ReactionSpec>,
    pub drift: CoefficientTriple,
    pub diffusion: CoefficientTriple,
    pub jump: JumpTriple,
    pub delay1: DelayFunction,
    pub delay2: DelayFunction,
    /// scalar potential applied pointwise in physical space; None disables
    /// the constraint
    pub potential: Option<ConvexPotential>,
    /// per-mode noise covariance q_k (length = modes; zero entries silent)
    pub noise_q: Vec<f64>,
    pub levy: LevyConfig,
    pub delay_horizon: f64,
    pub horizon: f64,
    /// initial mode trajectory on [-h, 0]: (times, mode vectors)
    pub initial_modes: (Vec<f64>, Vec<Vec<f64>>),
}

impl SpdeConfig {
    /// Plain linear heat block: N modes, viscosity m0, everything else off,
    /// constant initial mode vector.
    pub fn linear_heat(modes: usize, viscosity: f64, horizon: f64, initial: Vec<f64>) -> Self {
        SpdeConfig {
            modes,
            viscosity,
            reaction: None,
            drift: CoefficientTriple::none(),
            diffusion: CoefficientTriple::none(),
            jump: JumpTriple::none(),
            delay1: DelayFunction::Constant { gamma0: 0.0 },
            delay2: DelayFunction::Constant { gamma0: 0.0 },
            potential: None,
            noise_q: vec![0.0; modes],
            levy: LevyConfig::none(),
            delay_horizon: 0.0,
            horizon,
            initial_modes: (vec![0.0], vec![initial]),
        }
    }
}

/// Dirichlet Laplacian eigenvalue on (0, 1): lambda_k = (k pi)^2, k >= 1.
pub fn dirichlet_eigenvalue(k: usize) -> f64 {
    let kpi = k as f64 * std::f64::consts::PI;
    kpi * kpi
}

/// e_k(x) = sqrt(2) sin(k pi x)
pub fn sine_mode(k: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (k as f64 * std::f64::consts::PI * x).sin()
}

/// Field value at x from mode coefficients.
pub fn field_eval(modes: &[f64], x: f64) -> f64 {
    modes
        .iter()
        .enumerate()
        .map(|(i, c)| c * sine_mode(i + 1, x))
        .sum()
}

/// Collocation transform between N modes and the 2N+1 interior nodes
/// x_j = j / (2N + 2). The node count makes the discrete sine inner products
/// of the first N modes exact, so to_modes(to_field(v)) = v identically.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub n_modes: usize,
    pub nodes: Vec<f64>,
    /// (2N+1) x N matrix with entries e_k(x_j)
    basis: Mat,
}

impl Collocation {
    pub fn new(n_modes: usize) -> Self {
        let m = 2 * n_modes + 1;
        let nodes: Vec<f64> = (1..=m).map(|j| j as f64 / (m as f64 + 1.0)).collect();
        let mut basis = Mat::zeros(m, n_modes);
        for (j, x) in nodes.iter().enumerate() {
            for k in 1..=n_modes {
                basis.set(j, k - 1, sine_mode(k, *x));
            }
        }
        Collocation { n_modes, nodes, basis }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn to_field(&self, modes: &[f64]) -> Vec<f64> {
        self.basis.mul_vec(modes)
    }

    /// Quadrature projection: c_k = (1/(M+1)) sum_j F(x_j) e_k(x_j), the
    /// trapezoid rule of integral F e_k with vanishing boundary terms. Exact
    /// whenever F is a combination of the first N modes.
    pub fn to_modes(&self, field: &[f64]) -> Vec<f64> {
        let m = self.n_nodes();
        let w = 1.0 / (m as f64 + 1.0);
        let mut out = vec![0.0; self.n_modes];
        for (j, f) in field.iter().enumerate() {
            for k in 0..self.n_modes {
                out[k] += w * f * self.basis.get(j, k);
            }
        }
        out
    }
}

/// The pointwise potential under mass lumping: scalar resolvent applied at
/// every collocation node of the reconstructed field, projected back to
/// modes. This is the exact prox of the lumped quadrature functional
/// sum_j w phi(u(x_j)) up to the range constraint of the truncated basis.
pub struct LumpedSinePotential {
    scalar: ConvexPotential,
    grid: Collocation,
}

impl LumpedSinePotential {
    pub fn new(scalar: ConvexPotential, n_modes: usize) -> Result<Self> {
        if scalar.dimension() != 1 {
            return Err(SviError::DimensionMismatch { expected: 1, got: scalar.dimension() });
        }
        Ok(LumpedSinePotential { scalar, grid: Collocation::new(n_modes) })
    }
}

impl Potential for LumpedSinePotential {
    fn dimension(&self) -> usize {
        self.grid.n_modes
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let field = self.grid.to_field(x);
        let w = 1.0 / (self.grid.n_nodes() as f64 + 1.0);
        let mut acc = 0.0;
        for v in field {
            let p = self.scalar.evaluate(&[v])?;
            if !p.is_finite() {
                return Ok(f64::INFINITY);
            }
            acc += w * p;
        }
        Ok(acc)
    }

    fn resolvent(&self, eps: f64, u: &[f64]) -> Result<Vec<f64>> {
        let field = self.grid.to_field(u);
        let mut proxed = Vec::with_capacity(field.len());
        for v in field {
            proxed.push(self.scalar.resolvent(eps, &[v])?[0]);
        }
        Ok(self.grid.to_modes(&proxed))
    }

    fn project_domain(&self, u: &[f64]) -> Result<Vec<f64>> {
        let field = self.grid.to_field(u);
        let mut projected = Vec::with_capacity(field.len());
        for v in field {
            projected.push(self.scalar.project_domain(&[v])?[0]);
        }
        Ok(self.grid.to_modes(&projected))
    }

    fn is_indicator(&self) -> bool {
        self.scalar.is_indicator()
    }
}

/// The assembled mode problem plus the spectral metadata.
pub struct SpectralProblem {
    pub spec: ProblemSpec,
    pub lambdas: Vec<f64>,
    /// Sobolev weight per mode: |v|_V^2 = sum (1 + lambda_k) v_k^2
    pub v_weights: Vec<f64>,
    pub collocation: Collocation,
}

fn assemble_field(
    triple: &CoefficientTriple,
    grid: &Collocation,
    delay1: &DelayFunction,
    delay2: &DelayFunction,
    t: f64,
    seg: &crate::paths::SegmentView,
) -> Result<Vec<f64>> {
    let m = grid.n_nodes();
    let mut field = vec![0.0; m];
    if let Some(map) = &triple.instantaneous {
        let now = grid.to_field(&seg.current());
        for j in 0..m {
            field[j] += map(t, grid.nodes[j], now[j]);
        }
    }
    if let Some(map) = &triple.discrete_delay {
        let lag = delay1.eval(t)?;
        let past = grid.to_field(&seg.value_at(t - lag));
        for j in 0..m {
            field[j] += map(t, grid.nodes[j], past[j]);
        }
    }
    if let Some(map) = &triple.distributed {
        let grid_c = grid.clone();
        let map_c = map.clone();
        let contrib = seg.distributed_delay(delay2, &move |modes: &[f64]| {
            let vals = grid_c.to_field(modes);
            (0..grid_c.n_nodes())
                .map(|j| map_c(t, grid_c.nodes[j], vals[j]))
                .collect()
        })?;
        for j in 0..m {
            field[j] += contrib[j];
        }
    }
    Ok(field)
}

/// Builds the finite mode system: A = diag(-m0 lambda_k) minus the projected
/// reaction, coefficients assembled on the collocation grid and projected
/// back, the scalar potential lumped onto the nodes.
pub fn build_spectral_problem(cfg: &SpdeConfig) -> Result<SpectralProblem> {
    if cfg.modes == 0 {
        return Err(SviError::InvalidSpec("need at least one mode".into()));
    }
    if cfg.viscosity <= 0.0 {
        return Err(SviError::NonPositive { what: "viscosity m0", value: cfg.viscosity });
    }
    if cfg.noise_q.len() != cfg.modes {
        return Err(SviError::DimensionMismatch { expected: cfg.modes, got: cfg.noise_q.len() });
    }
    if let Some(r) = &cfg.reaction {
        r.validate()?;
    }
    let n = cfg.modes;
    let grid = Collocation::new(n);
    let lambdas: Vec<f64> = (1..=n).map(dirichlet_eigenvalue).collect();
    let v_weights: Vec<f64> = lambdas.iter().map(|l| 1.0 + l).collect();

    let operator_a = match &cfg.reaction {
        None => OperatorA::Linear {
            matrix: Mat::diag(&lambdas.iter().map(|l| -cfg.viscosity * l).collect::<Vec<_>>()),
        },
        Some(reaction) => {
            let r = reaction.clone();
            let g = grid.clone();
            let m0 = cfg.viscosity;
            let ls = lambdas.clone();
            OperatorA::Custom {
                map: Arc::new(move |_t, v: &[f64]| {
                    let field = g.to_field(v);
                    let reacted: Vec<f64> = field.iter().map(|u| r.eval(*u)).collect();
                    let mut out = g.to_modes(&reacted);
                    for k in 0..v.len() {
                        out[k] = -m0 * ls[k] * v[k] - out[k];
                    }
                    out
                }),
            }
        }
    };

    let drift: DriftFn = {
        let triple = cfg.drift.clone();
        let g = grid.clone();
        let d1 = cfg.delay1.clone();
        let d2 = cfg.delay2.clone();
        let n_modes = n;
        Arc::new(move |t, seg| {
            if triple.is_empty() {
                return vec![0.0; n_modes];
            }
            let field = assemble_field(&triple, &g, &d1, &d2, t, seg)
                .unwrap_or_else(|_| vec![f64::NAN; g.n_nodes()]);
            g.to_modes(&field)
        })
    };

    let diffusion: DiffusionFn = {
        let triple = cfg.diffusion.clone();
        let g = grid.clone();
        let d1 = cfg.delay1.clone();
        let d2 = cfg.delay2.clone();
        let n_modes = n;
        Arc::new(move |t, seg| {
            if triple.is_empty() {
                // additive noise: mode m responds to increment m alone
                return Mat::identity(n_modes);
            }
            // multiplicative pointwise field factor: S_mk = <sigma(u) e_k, e_m>
            let field = assemble_field(&triple, &g, &d1, &d2, t, seg)
                .unwrap_or_else(|_| vec![f64::NAN; g.n_nodes()]);
            let m_nodes = g.n_nodes();
            let w = 1.0 / (m_nodes as f64 + 1.0);
            let mut s = Mat::zeros(n_modes, n_modes);
            for m in 0..n_modes {
                for k in 0..n_modes {
                    let mut acc = 0.0;
                    for j in 0..m_nodes {
                        acc += w * field[j] * g.basis.get(j, k) * g.basis.get(j, m);
                    }
                    s.set(m, k, acc);
                }
            }
            s
        })
    };

    let jump: Option<JumpFn> = if cfg.jump.is_empty() || !cfg.levy.is_active() {
        None
    } else {
        let triple = cfg.jump.clone();
        let g = grid.clone();
        let d1 = cfg.delay1.clone();
        let d2 = cfg.delay2.clone();
        Some(Arc::new(move |t, seg, mark: &[f64]| {
            let m = g.n_nodes();
            let mut field = vec![0.0; m];
            if let Some(map) = &triple.instantaneous {
                let now = g.to_field(&seg.current());
                for j in 0..m {
                    field[j] += map(t, g.nodes[j], now[j], mark);
                }
            }
            if let Some(map) = &triple.discrete_delay {
                let lag = d1.eval(t).unwrap_or(0.0);
                let past = g.to_field(&seg.value_at(t - lag));
                for j in 0..m {
                    field[j] += map(t, g.nodes[j], past[j], mark);
                }
            }
            if let Some(map) = &triple.distributed {
                let g2 = g.clone();
                let map2 = map.clone();
                let mark_owned = mark.to_vec();
                if let Ok(contrib) = seg.distributed_delay(&d2, &move |modes: &[f64]| {
                    let vals = g2.to_field(modes);
                    (0..g2.n_nodes())
                        .map(|j| map2(t, g2.nodes[j], vals[j], &mark_owned))
                        .collect()
                }) {
                    for j in 0..m {
                        field[j] += contrib[j];
                    }
                }
            }
            g.to_modes(&field)
        }))
    };

    let potential: Arc<dyn Potential> = match &cfg.potential {
        None => Arc::new(ConvexPotential::zero(n)),
        Some(scalar) => Arc::new(LumpedSinePotential::new(scalar.clone(), n)?),
    };

    let (init_times, init_values) = &cfg.initial_modes;
    let initial_segment = if init_times.len() == 1 {
        let grid_t = if cfg.delay_horizon > 0.0 {
            vec![-cfg.delay_horizon, 0.0]
        } else {
            vec![0.0]
        };
        CadlagPath::constant(grid_t, init_values[0].clone(), cfg.delay_horizon)?
    } else {
        CadlagPath::new(
            init_times.clone(),
            init_values.clone(),
            cfg.delay_horizon,
            Interpolation::Linear,
        )?
    };

    let spec = ProblemSpec {
        dimension: n,
        potential,
        operator_a,
        drift,
        diffusion,
        jump,
        delay: DelayFunction::Constant { gamma0: cfg.delay_horizon },
        initial_segment,
        horizon: cfg.horizon,
        wiener: WienerSpec::new(cfg.noise_q.clone())?,
        levy: cfg.levy.clone(),
    };
    spec.validate()?;
    Ok(SpectralProblem { spec, lambdas, v_weights, collocation: grid })
}

pub struct SpdeOutput {
    pub output: SimulationOutput,
    /// (time, field values on the snapshot x-grid)
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub snapshot_x: Vec<f64>,
}

/// Runs the mode system and reconstructs physical-space snapshots
/// u(t, x) = sum_k X_k(t) e_k(x) every `snapshot_every` nodes on a uniform
/// x-grid with `snapshot_points` interior points.
pub fn simulate_spde(
    cfg: &SpdeConfig,
    dt: f64,
    stream: RngStream,
    snapshot_every: usize,
    snapshot_points: usize,
) -> Result<(SpectralProblem, SpdeOutput)> {
    let problem = build_spectral_problem(cfg)?;
    let output = simulate(&problem.spec, dt, Scheme::ProxEuler, stream)?;
    let snapshot_x: Vec<f64> = (1..=snapshot_points)
        .map(|j| j as f64 / (snapshot_points as f64 + 1.0))
        .collect();
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        let x_path = &output.solution.x;
        for i in 0..x_path.len() {
            let t = x_path.grid()[i];
            if t < 0.0 {
                continue;
            }
            let node_idx = i;
            if (node_idx % snapshot_every) == 0 {
                let modes = x_path.node_value(node_idx);
                let field: Vec<f64> = snapshot_x.iter().map(|x| field_eval(modes, *x)).collect();
                snapshots.push((t, field));
            }
        }
    }
    Ok((problem, SpdeOutput { output, snapshots, snapshot_x }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_and_modes() {
        assert!((dirichlet_eigenvalue(1) - std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((dirichlet_eigenvalue(3) - 88.82643960980423).abs() < 1e-10);
        // e_1 peaks at x = 1/2; e_2 vanishes there
        assert!((field_eval(&[1.0], 0.5) - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(field_eval(&[0.0, 1.0], 0.5).abs() < 1e-12);
        assert!(field_eval(&[0.3, -0.4], 1e-9).abs() < 1e-6);
    }

    #[test]
    fn collocation_round_trip_identity() {
        let c = Collocation::new(5);
        let modes = vec![0.7, -0.2, 0.1, 0.05, -0.9];
        let back = c.to_modes(&c.to_field(&modes));
        for (a, b) in modes.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn projection_of_constant_field() {
        // c_1 = integral of sqrt(2) sin(pi x) = 2 sqrt(2) / pi; trapezoid on
        // the collocation nodes converges at second order
        let target = 2.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI;
        let coarse = {
            let c = Collocation::new(16);
            c.to_modes(&vec![1.0; c.n_nodes()])[0]
        };
        let fine = {
            let c = Collocation::new(64);
            c.to_modes(&vec![1.0; c.n_nodes()])[0]
        };
        assert!((fine - target).abs() < 1e-4, "fine {fine} vs {target}");
        assert!((fine - target).abs() < (coarse - target).abs() / 4.0);
        assert!((target - 0.900316316157106).abs() < 1e-12);
    }

    #[test]
    fn linear_problem_first_eigenvalue() {
        let cfg = SpdeConfig::linear_heat(1, 1.0, 1.0, vec![1.0]);
        let p = build_spectral_problem(&cfg).unwrap();
        match &p.spec.operator_a {
            OperatorA::Linear { matrix } => {
                assert!((matrix.get(0, 0) + std::f64::consts::PI.powi(2)).abs() < 1e-12);
            }
            _ => panic!("expected linear operator"),
        }
        assert!((p.v_weights[0] - (1.0 + std::f64::consts::PI.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SpdeConfig::linear_heat(3, 1.0, 0.5, vec![0.0; 3]);
        let (_p, out) = simulate_spde(&cfg, 0.01, RngStream::new(1, 0), 10, 7).unwrap();
        for i in 0..out.output.solution.x.len() {
            assert!(out.output.solution.x.node_value(i).iter().all(|v| *v == 0.0));
        }
        for (_t, field) in &out.snapshots {
            assert!(field.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn heat_decay_single_mode() {
        let cfg = SpdeConfig::linear_heat(1, 1.0, 0.1, vec![1.0]);
        let dt = 1e-3;
        let (_p, out) = simulate_spde(&cfg, dt, RngStream::new(2, 0), 0, 3).unwrap();
        let end = out.output.solution.x.last_value()[0];
        let exact = (-std::f64::consts::PI.powi(2) * 0.1).exp();
        let rel = (end - exact).abs() / exact;
        assert!(
            rel <= 2.0 * dt * std::f64::consts::PI.powi(2),
            "relative error {rel}"
        );
    }

    #[test]
    fn reaction_validation() {
        // g(v) = -2v has slope -2, so a declared bound of 1 must be rejected
        let bad = ReactionSpec {
            coeffs: vec![0.0, -2.0],
            one_sided_bound: 1.0,
            validation_range: 5.0,
        };
        assert!(bad.validate().is_err());
        let ok = ReactionSpec {
            coeffs: vec![0.0, -2.0],
            one_sided_bound: 2.0,
            validation_range: 5.0,
        };
        assert!(ok.validate().is_ok());
        // cubic with positive leading coefficient is monotone increasing
        let cubic = ReactionSpec {
            coeffs: vec![0.0, 0.0, 0.0, 1.0],
            one_sided_bound: 0.0,
            validation_range: 5.0,
        };
        assert!(cubic.validate().is_ok());
    }
}
