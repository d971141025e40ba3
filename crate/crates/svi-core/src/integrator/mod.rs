//! Time-stepping schemes for the constrained jump-diffusion dynamics
//!
//!   dX in A(t, X) dt + b(t, X_t) dt + sigma(t, X_t) dW
//!        + integral of f(t, X_t, u) against the compensated jump measure
//!        - dphi(X) dt,
//!
//! where X_t is the delay segment of the trajectory. The proximal Euler
//! scheme applies the resolvent of the potential after each explicit substep;
//! the penalized scheme replaces the subdifferential with the Lipschitz
//! Yosida term -(1/eps) D phi_eps.

mod diagnostics;
mod noise;
mod run;

pub use diagnostics::{check_variational_inequality, domain_excursion, energy_residual};
pub use noise::NoiseRecord;
pub use run::{
    picard_solve, prox_euler_step, simulate, simulate_with_noise, skorokhod_1d,
    yosida_penalized_step, PicardOutcome, SimulationOutput,
};

use std::sync::Arc;

use serde::Serialize;

use crate::convex::Potential;
use crate::drivers::{LevyConfig, RngStream, WienerSpec};
use crate::error::{Result, SviError};
use crate::linalg::{cholesky, Mat};
use crate::paths::{CadlagPath, DelayFunction, SegmentView};

pub type DriftFn = Arc<dyn Fn(f64, &SegmentView) -> Vec<f64> + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(f64, &SegmentView) -> Mat + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(f64, &SegmentView, &[f64]) -> Vec<f64> + Send + Sync>;

/// The unbounded-operator part A. Linear maps carry a computable one-sided
/// bound (the largest eigenvalue of the symmetric part); arbitrary monotone
/// maps are accepted as callbacks without stability guarantees.
#[derive(Clone)]
pub enum OperatorA {
    Zero,
    Linear { matrix: Mat },
    Custom { map: Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync> },
}

impl OperatorA {
    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match self {
            OperatorA::Zero => vec![0.0; x.len()],
            OperatorA::Linear { matrix } => matrix.mul_vec(x),
            OperatorA::Custom { map } => map(t, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, OperatorA::Zero)
    }

    /// Largest eigenvalue mu of the symmetric part of a linear map, so that
    /// 2<w, Aw> <= 2 mu |w|^2. Found by bisecting positive definiteness of
    /// mu I - sym(A). None for non-linear operators.
    pub fn one_sided_bound(&self) -> Option<f64> {
        let m = match self {
            OperatorA::Linear { matrix } => matrix,
            OperatorA::Zero => return Some(0.0),
            OperatorA::Custom { .. } => return None,
        };
        let n = m.rows;
        let mut sym = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                sym.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
            }
        }
        // Gershgorin bound
        let mut radius: f64 = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| sym.get(i, j).abs()).sum();
            radius = radius.max(row);
        }
        let shifted_psd = |s: f64| {
            let mut a = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let v = if i == j { s - sym.get(i, j) } else { -sym.get(i, j) };
                    a.set(i, j, v);
                }
            }
            cholesky(&a, -1e-12).is_some()
        };
        let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if shifted_psd(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

impl std::fmt::Debug for OperatorA {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorA::Zero => write!(f, "OperatorA::Zero"),
            OperatorA::Linear { matrix } => write!(f, "OperatorA::Linear({}x{})", matrix.rows, matrix.cols),
            OperatorA::Custom { .. } => write!(f, "OperatorA::Custom"),
        }
    }
}

/// Time-stepping scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scheme {
    /// Implicit subgradient step: resolvent with parameter equal to the step
    /// length. Reduces to exact projection for indicator potentials.
    ProxEuler,
    /// Explicit penalization with parameter eps; requires dt <= eps.
    Yosida { eps: f64 },
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::ProxEuler => "prox".to_string(),
            Scheme::Yosida { eps } => format!("yosida(eps={eps})"),
        }
    }
}

/// Full problem data: coefficients, constraint, delay structure, noise
/// drivers, initial segment, and horizon.
#[derive(Clone)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub potential: Arc<dyn Potential>,
    pub operator_a: OperatorA,
    pub drift: DriftFn,
    pub diffusion: DiffusionFn,
    /// None switches the jump coefficient off entirely (events, if any, then
    /// carry no state response and no compensator correction is applied)
    pub jump: Option<JumpFn>,
    pub delay: DelayFunction,
    pub initial_segment: CadlagPath,
    pub horizon: f64,
    pub wiener: WienerSpec,
    pub levy: LevyConfig,
}

impl ProblemSpec {
    /// Validates the coupled invariants: the initial segment must live on
    /// [-h, 0] with values in the closure of the potential's domain, the
    /// delay must map [0, T] into [0, h], and all dimensions must agree.
    pub fn validate(&self) -> Result<()> {
        if self.horizon <= 0.0 {
            return Err(SviError::NonPositive { what: "horizon", value: self.horizon });
        }
        if self.dimension == 0 {
            return Err(SviError::InvalidSpec("dimension must be >= 1".into()));
        }
        if self.potential.dimension() != self.dimension {
            return Err(SviError::DimensionMismatch {
                expected: self.dimension,
                got: self.potential.dimension(),
            });
        }
        if self.initial_segment.dim() != self.dimension {
            return Err(SviError::DimensionMismatch {
                expected: self.dimension,
                got: self.initial_segment.dim(),
            });
        }
        let end = self.initial_segment.end_time();
        if end.abs() > 1e-9 {
            return Err(SviError::GridMismatch(format!(
                "initial segment must end at t = 0, got {end}"
            )));
        }
        let h = self.initial_segment.delay_horizon();
        self.delay.validate(h, self.horizon)?;
        for i in 0..self.initial_segment.len() {
            let v = self.initial_segment.node_value(i);
            let d = self.potential.domain_distance(v)?;
            if d > 1e-9 * (1.0 + crate::linalg::norm(v)) {
                return Err(SviError::InvalidSpec(format!(
                    "initial segment leaves the constraint domain (distance {d:.3e} at node {i})"
                )));
            }
        }
        if self.wiener.modes == 0 {
            return Err(SviError::InvalidSpec("wiener driver needs at least one mode".into()));
        }
        Ok(())
    }

    pub fn delay_horizon(&self) -> f64 {
        self.initial_segment.delay_horizon()
    }
}

/// Coupled trajectory (X, eta): the constrained path on [-h, T] and the
/// finite-variation constraining process on [0, T] with eta(0) = 0.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    pub x: CadlagPath,
    pub eta: CadlagPath,
    pub meta: SchemeMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeMeta {
    pub scheme: String,
    pub dt: f64,
    pub stream: Option<RngStream>,
    /// jump events absorbed by the step ending at each node of the [0, T]
    /// part of the grid (first entry is the t = 0 node, always 0)
    pub jumps_per_node: Vec<usize>,
}

impl SolutionPair {
    pub fn total_jumps(&self) -> usize {
        self.meta.jumps_per_node.iter().sum()
    }

    /// sup over shared grid nodes of |X_a - X_b|; grids must agree.
    pub fn sup_node_distance(a: &SolutionPair, b: &SolutionPair) -> Result<f64> {
        let ga = a.x.grid();
        let gb = b.x.grid();
        if ga.len() != gb.len() || ga.iter().zip(gb).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(SviError::GridMismatch(
                "solution grids differ; compare runs driven by the same noise".into(),
            ));
        }
        let mut worst = 0.0f64;
        for i in 0..ga.len() {
            worst = worst.max(crate::linalg::dist(a.x.node_value(i), b.x.node_value(i)));
        }
        Ok(worst)
    }
}

/// Convenience constructors for the common coefficient shapes.
pub mod coefficients {
    use super::*;

    pub fn drift_zero(dim: usize) -> DriftFn {
        Arc::new(move |_t, _seg| vec![0.0; dim])
    }

    pub fn drift_constant(v: Vec<f64>) -> DriftFn {
        Arc::new(move |_t, _seg| v.clone())
    }

    /// b(t, seg) = matrix * X(t)
    pub fn drift_linear_state(matrix: Mat) -> DriftFn {
        Arc::new(move |_t, seg| matrix.mul_vec(&seg.current()))
    }

    /// b(t, seg) = coeff * X(t - lag)
    pub fn drift_delayed_linear(coeff: f64, lag: f64) -> DriftFn {
        Arc::new(move |t, seg| {
            seg.value_at(t - lag).iter().map(|v| coeff * v).collect()
        })
    }

    pub fn diffusion_zero(dim: usize, modes: usize) -> DiffusionFn {
        Arc::new(move |_t, _seg| Mat::zeros(dim, modes))
    }

    pub fn diffusion_constant(matrix: Mat) -> DiffusionFn {
        Arc::new(move |_t, _seg| matrix.clone())
    }

    /// sigma(t, seg) = diag-free multiplicative map: row i gets
    /// level * X_i(t) on mode i (requires modes == dim).
    pub fn diffusion_linear_state(level: f64, dim: usize) -> DiffusionFn {
        Arc::new(move |_t, seg| {
            let x = seg.current();
            let mut m = Mat::zeros(dim, dim);
            for i in 0..dim {
                m.set(i, i, level * x[i]);
            }
            m
        })
    }

    pub fn jump_zero(dim: usize) -> JumpFn {
        Arc::new(move |_t, _seg, _mark| vec![0.0; dim])
    }

    /// f(t, seg, u) = scale * u broadcast to the state dimension (mark must
    /// be scalar or match the dimension).
    pub fn jump_additive_mark(scale: f64, dim: usize) -> JumpFn {
        Arc::new(move |_t, _seg, mark| {
            if mark.len() == dim {
                mark.iter().map(|m| scale * m).collect()
            } else {
                vec![scale * mark[0]; dim]
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_bound_of_linear_operator() {
        // A = [[-2, 1], [0, -3]]: sym part [[-2, .5], [.5, -3]],
        // eigenvalues -2.5 +- sqrt(0.5); max = -2.5 + sqrt(0.5)
        let a = OperatorA::Linear {
            matrix: Mat::from_rows(vec![vec![-2.0, 1.0], vec![0.0, -3.0]]),
        };
        let mu = a.one_sided_bound().unwrap();
        let expect = -2.5 + 0.5f64.sqrt();
        assert!((mu - expect).abs() < 1e-9, "mu = {mu}, expect {expect}");
        assert_eq!(OperatorA::Zero.one_sided_bound(), Some(0.0));
    }
}
