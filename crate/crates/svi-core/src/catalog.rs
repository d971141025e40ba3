//! Ready-made problem builders used by the studies, the harness, and the
//! test suites.

use std::sync::Arc;

use crate::convex::{ConvexPotential, ConvexSetSpec};
use crate::drivers::{LevyConfig, MarkSampler, WienerSpec};
use crate::error::Result;
use crate::integrator::{coefficients, DriftFn, JumpFn, OperatorA, ProblemSpec};
use crate::linalg::Mat;
use crate::paths::{CadlagPath, DelayFunction};

/// Reflected driftless diffusion on [0, inf) started at x0 >= 0:
/// dX = sigma dW - dphi(X), phi the half-line indicator.
pub fn half_line_reflected_bm(sigma: f64, x0: f64, horizon: f64) -> Result<ProblemSpec> {
    let potential =
        Arc::new(ConvexPotential::indicator(ConvexSetSpec::Halfline { lower: vec![0.0] })?);
    Ok(ProblemSpec {
        dimension: 1,
        potential,
        operator_a: OperatorA::Zero,
        drift: coefficients::drift_zero(1),
        diffusion: coefficients::diffusion_constant(Mat::from_rows(vec![vec![sigma]])),
        jump: None,
        delay: DelayFunction::Constant { gamma0: 0.0 },
        initial_segment: CadlagPath::constant(vec![0.0], vec![x0], 0.0)?,
        horizon,
        wiener: WienerSpec::standard(1),
        levy: LevyConfig::none(),
    })
}

/// The same driver without the constraint: plain scalar Brownian path.
pub fn free_scalar_bm(sigma: f64, x0: f64, horizon: f64) -> Result<ProblemSpec> {
    let mut spec = half_line_reflected_bm(sigma, x0.max(0.0), horizon)?;
    spec.potential = Arc::new(ConvexPotential::zero(1));
    spec.initial_segment = CadlagPath::constant(vec![0.0], vec![x0], 0.0)?;
    Ok(spec)
}

/// Ordered interacting particles with electrostatic repulsion and additive
/// per-particle noise: dX^i = sigma dW^i + lambda sum_{j != i} dt/(X^i - X^j),
/// realized through the log-gap potential.
pub fn coulomb_particles(
    particles: usize,
    lambda: f64,
    sigma: f64,
    x0: Vec<f64>,
    horizon: f64,
) -> Result<ProblemSpec> {
    let potential = Arc::new(ConvexPotential::coulomb_log(lambda, particles)?);
    Ok(ProblemSpec {
        dimension: particles,
        potential,
        operator_a: OperatorA::Zero,
        drift: coefficients::drift_zero(particles),
        diffusion: coefficients::diffusion_constant(Mat::diag(&vec![sigma; particles])),
        jump: None,
        delay: DelayFunction::Constant { gamma0: 0.0 },
        initial_segment: CadlagPath::constant(vec![0.0], x0, 0.0)?,
        horizon,
        wiener: WienerSpec::standard(particles),
        levy: LevyConfig::none(),
    })
}

/// Contractive path-dependent test problem: scalar half-line reflection with
/// the running-sup feedback drift b(t, X_t) = -kappa * sup_{r <= t} |X(r)|
/// and additive noise. Lipschitz in the sup metric with constant kappa.
pub fn supnorm_feedback(
    kappa: f64,
    sigma: f64,
    x0: f64,
    delay_horizon: f64,
    horizon: f64,
) -> Result<ProblemSpec> {
    let drift: DriftFn = Arc::new(move |t, seg| {
        let sup = seg
            .sup_norm()
            .unwrap_or(f64::NAN);
        let _ = t;
        vec![-kappa * sup]
    });
    let potential =
        Arc::new(ConvexPotential::indicator(ConvexSetSpec::Halfline { lower: vec![0.0] })?);
    Ok(ProblemSpec {
        dimension: 1,
        potential,
        operator_a: OperatorA::Zero,
        drift,
        diffusion: coefficients::diffusion_constant(Mat::from_rows(vec![vec![sigma]])),
        jump: None,
        delay: DelayFunction::Constant { gamma0: delay_horizon },
        initial_segment: CadlagPath::constant(vec![-delay_horizon, 0.0], vec![x0], delay_horizon)?,
        horizon,
        wiener: WienerSpec::standard(1),
        levy: LevyConfig::none(),
    })
}

/// Symmetric two-atom mark distribution (+1, -1 with equal weight).
pub fn symmetric_marks(intensity: f64) -> Result<LevyConfig> {
    LevyConfig::new(
        intensity,
        MarkSampler::DiscreteAtoms {
            points: vec![vec![1.0], vec![-1.0]],
            weights: vec![0.5, 0.5],
        },
    )
}

/// Half-line reflection driven by Brownian noise plus compensated jumps with
/// amplitude `jump_scale` times the mark.
pub fn reflected_jump_diffusion(
    sigma: f64,
    intensity: f64,
    jump_scale: f64,
    x0: f64,
    horizon: f64,
) -> Result<ProblemSpec> {
    let mut spec = half_line_reflected_bm(sigma, x0, horizon)?;
    spec.levy = symmetric_marks(intensity)?;
    let jump: JumpFn = coefficients::jump_additive_mark(jump_scale, 1);
    spec.jump = Some(jump);
    Ok(spec)
}
