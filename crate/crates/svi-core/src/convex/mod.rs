//! Convex potentials, subdifferential resolvents, and Moreau-Yosida envelopes.
//!
//! A potential is a proper lower-semicontinuous convex function
//! phi: R^n -> (-inf, +inf]. The resolvent J_eps = (I + eps * dphi)^{-1} is the
//! proximal map of eps*phi; the envelope phi_eps(u) = inf_v { |v-u|^2/2 + eps*phi(v) }
//! is smooth with gradient D phi_eps(u) = u - J_eps(u). Indicator potentials make
//! the resolvent an exact projection, which is how reflecting boundaries enter
//! the time-stepping schemes.

mod newton;
pub mod properties;
mod sets;

pub use newton::{NEWTON_MAX_ITERS, NEWTON_TOL};
pub use sets::{isotonic_projection, ConvexSetSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SviError};
use crate::linalg::{dist, norm, sub};

/// Pairwise interaction g applied to every ordered gap x^j - x^i (i < j).
/// g is convex and C^1 on (0, +inf), +inf on (-inf, 0], with g(0+) = +inf.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum PairwiseG {
    /// g(s) = -lambda * ln(s); the electrostatic-repulsion catalog entry.
    NegLog { lambda: f64 },
    /// g(s) = lambda * s^{-power}
    InversePower { lambda: f64, power: f64 },
}

/// Value / derivative access used by the damped Newton resolvent.
pub trait PairInteraction: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn deriv(&self, s: f64) -> f64;
    fn second_deriv(&self, s: f64) -> f64;
    /// Natural gap scale of the prox at parameter eps, used to seed iterates.
    fn gap_scale(&self, eps: f64) -> f64;
}

impl PairInteraction for PairwiseG {
    fn value(&self, s: f64) -> f64 {
        match self {
            PairwiseG::NegLog { lambda } => -lambda * s.ln(),
            PairwiseG::InversePower { lambda, power } => lambda * s.powf(-power),
        }
    }

    fn deriv(&self, s: f64) -> f64 {
        match self {
            PairwiseG::NegLog { lambda } => -lambda / s,
            PairwiseG::InversePower { lambda, power } => -lambda * power * s.powf(-power - 1.0),
        }
    }

    fn second_deriv(&self, s: f64) -> f64 {
        match self {
            PairwiseG::NegLog { lambda } => lambda / (s * s),
            PairwiseG::InversePower { lambda, power } => {
                lambda * power * (power + 1.0) * s.powf(-power - 2.0)
            }
        }
    }

    fn gap_scale(&self, eps: f64) -> f64 {
        match self {
            // d=2 closed form at zero driver gap: g = sqrt(2*eps*lambda)
            PairwiseG::NegLog { lambda } => (2.0 * eps * lambda).sqrt(),
            // balance s ~ eps * lambda * p * s^{-p-1}
            PairwiseG::InversePower { lambda, power } => {
                (eps * lambda * power).powf(1.0 / (power + 2.0))
            }
        }
    }
}

impl PairwiseG {
    fn validate(&self) -> Result<()> {
        match self {
            PairwiseG::NegLog { lambda } => {
                if *lambda <= 0.0 {
                    return Err(SviError::NonPositive { what: "lambda", value: *lambda });
                }
            }
            PairwiseG::InversePower { lambda, power } => {
                if *lambda <= 0.0 {
                    return Err(SviError::NonPositive { what: "lambda", value: *lambda });
                }
                if *power <= 0.0 {
                    return Err(SviError::NonPositive { what: "power", value: *power });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum PotentialKind {
    /// phi(x) = 0.5 * sum_i w_i x_i^2, w_i >= 0
    Quadratic { weights: Vec<f64> },
    /// phi = 0 on the set, +inf outside
    Indicator { set: ConvexSetSpec },
    /// phi(x) = -lambda * sum_{i<j} ln(x^j - x^i) on x^1 < ... < x^d
    CoulombLog { lambda: f64, particles: usize },
    /// phi(x) = sum_{i<j} g(x^j - x^i) on the open ordered cone
    Pairwise { g: PairwiseG, particles: usize },
    /// phi = 0
    Zero,
}

/// A catalog convex potential together with its dimension and an optional
/// positive multiplier (phi -> scale * phi, which maps the resolvent parameter
/// eps to scale * eps).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvexPotential {
    kind: PotentialKind,
    dimension: usize,
    scale: f64,
}

impl ConvexPotential {
    pub fn quadratic(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SviError::InvalidSpec("quadratic needs dimension >= 1".into()));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(SviError::InvalidSpec(
                "quadratic weights must be nonnegative so that phi >= 0 = phi(0)".into(),
            ));
        }
        let dimension = weights.len();
        Ok(ConvexPotential { kind: PotentialKind::Quadratic { weights }, dimension, scale: 1.0 })
    }

    /// 0.5 * |x|^2 in the given dimension.
    pub fn half_norm_squared(dimension: usize) -> Self {
        ConvexPotential::quadratic(vec![1.0; dimension]).unwrap()
    }

    pub fn indicator(set: ConvexSetSpec) -> Result<Self> {
        set.validate()?;
        if !set.origin_in_closure() {
            return Err(SviError::InvalidSpec(
                "indicator set must contain the origin so that phi(0) = 0".into(),
            ));
        }
        let dimension = set.dimension();
        Ok(ConvexPotential { kind: PotentialKind::Indicator { set }, dimension, scale: 1.0 })
    }

    pub fn coulomb_log(lambda: f64, particles: usize) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(SviError::NonPositive { what: "lambda", value: lambda });
        }
        if particles < 2 {
            return Err(SviError::InvalidSpec("coulomb_log needs at least 2 particles".into()));
        }
        Ok(ConvexPotential {
            kind: PotentialKind::CoulombLog { lambda, particles },
            dimension: particles,
            scale: 1.0,
        })
    }

    pub fn pairwise(g: PairwiseG, particles: usize) -> Result<Self> {
        g.validate()?;
        if particles < 2 {
            return Err(SviError::InvalidSpec("pairwise needs at least 2 particles".into()));
        }
        Ok(ConvexPotential {
            kind: PotentialKind::Pairwise { g, particles },
            dimension: particles,
            scale: 1.0,
        })
    }

    pub fn zero(dimension: usize) -> Self {
        ConvexPotential { kind: PotentialKind::Zero, dimension, scale: 1.0 }
    }

    /// scale * phi. The resolvent at parameter eps of the scaled potential is
    /// the resolvent of the base potential at parameter scale * eps.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if scale <= 0.0 {
            return Err(SviError::NonPositive { what: "potential scale", value: scale });
        }
        let mut out = self.clone();
        out.scale = self.scale * scale;
        Ok(out)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            PotentialKind::Quadratic { weights } => {
                if weights.iter().all(|w| *w == 1.0) {
                    format!("quadratic(d={})", self.dimension)
                } else {
                    format!("quadratic(w={weights:?})")
                }
            }
            PotentialKind::Indicator { set } => match set {
                ConvexSetSpec::Halfline { .. } => format!("indicator_halfline(d={})", self.dimension),
                ConvexSetSpec::Box { .. } => format!("indicator_box(d={})", self.dimension),
                ConvexSetSpec::Ball { .. } => format!("indicator_ball(d={})", self.dimension),
                ConvexSetSpec::OrderedCone { .. } => {
                    format!("indicator_ordered_cone(d={})", self.dimension)
                }
            },
            PotentialKind::CoulombLog { lambda, .. } => {
                format!("coulomb_log(lambda={lambda},d={})", self.dimension)
            }
            PotentialKind::Pairwise { g, .. } => match g {
                PairwiseG::NegLog { lambda } => {
                    format!("pairwise_neg_log(lambda={lambda},d={})", self.dimension)
                }
                PairwiseG::InversePower { lambda, power } => format!(
                    "pairwise_inverse_power(lambda={lambda},p={power},d={})",
                    self.dimension
                ),
            },
            PotentialKind::Zero => format!("zero(d={})", self.dimension),
        }
    }

    /// phi(0) = 0 <= phi everywhere, with quadratic growth. The pairwise kinds
    /// fail this (their domain is the ordered cone, which misses the origin,
    /// and the log form takes negative values); they are admitted to the
    /// catalog but carry this flag so growth-dependent diagnostics skip them.
    pub fn h4_compliant(&self) -> bool {
        match &self.kind {
            PotentialKind::Quadratic { .. } | PotentialKind::Zero => true,
            PotentialKind::Indicator { set } => set.origin_in_closure(),
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => false,
        }
    }

    /// Whether the origin lies in the interior of the domain of dphi.
    pub fn origin_interior(&self) -> bool {
        match &self.kind {
            PotentialKind::Quadratic { .. } | PotentialKind::Zero => true,
            PotentialKind::Indicator { set } => set.origin_in_interior(),
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => false,
        }
    }

    /// (gamma0, m0) with phi(gamma0 * h) <= m0 for all |h| <= 1, when the
    /// gamma0-ball around the origin sits inside the domain.
    pub fn origin_ball(&self) -> Option<(f64, f64)> {
        match &self.kind {
            PotentialKind::Zero => Some((1.0, 0.0)),
            PotentialKind::Quadratic { weights } => {
                let wmax = weights.iter().cloned().fold(0.0, f64::max);
                Some((1.0, 0.5 * wmax * self.scale))
            }
            PotentialKind::Indicator { set } => {
                if !set.origin_in_interior() {
                    return None;
                }
                let gamma0 = match set {
                    ConvexSetSpec::Halfline { lower } => {
                        lower.iter().fold(f64::INFINITY, |a, l| a.min(-l))
                    }
                    ConvexSetSpec::Box { lower, upper } => lower
                        .iter()
                        .zip(upper)
                        .fold(f64::INFINITY, |a, (l, u)| a.min(-l).min(*u)),
                    ConvexSetSpec::Ball { center, radius } => radius - norm(center),
                    ConvexSetSpec::OrderedCone { .. } => return None,
                };
                Some((gamma0, 0.0))
            }
            _ => None,
        }
    }

    pub fn is_pairwise_kind(&self) -> bool {
        matches!(
            self.kind,
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. }
        )
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(SviError::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        Ok(())
    }

    fn pair_interaction(&self) -> Option<PairwiseG> {
        match &self.kind {
            PotentialKind::CoulombLog { lambda, .. } => Some(PairwiseG::NegLog { lambda: *lambda }),
            PotentialKind::Pairwise { g, .. } => Some(g.clone()),
            _ => None,
        }
    }

    /// Gradient of phi at an interior point of its domain; None for indicator
    /// kinds (set-valued there) and for points outside the domain.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.check_dim(x).ok()?;
        match &self.kind {
            PotentialKind::Zero => Some(vec![0.0; self.dimension]),
            PotentialKind::Quadratic { weights } => {
                Some(x.iter().zip(weights).map(|(xi, wi)| self.scale * wi * xi).collect())
            }
            PotentialKind::Indicator { .. } => None,
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => {
                let g = self.pair_interaction().unwrap();
                if !x.windows(2).all(|w| w[1] > w[0]) {
                    return None;
                }
                let mut grad = vec![0.0; self.dimension];
                for i in 0..self.dimension {
                    for j in (i + 1)..self.dimension {
                        let d = g.deriv(x[j] - x[i]);
                        grad[i] -= self.scale * d;
                        grad[j] += self.scale * d;
                    }
                }
                Some(grad)
            }
        }
    }
}

/// Shared interface of the time-stepping schemes to the constraining term:
/// everything the integrator needs from a convex potential. Implemented by
/// `ConvexPotential` and by the collocation-lumped field potential of the
/// spectral module.
pub trait Potential: Send + Sync {
    fn dimension(&self) -> usize;

    /// phi(x); +inf outside the effective domain.
    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// J_eps(u) = (I + eps * dphi)^{-1}(u), eps > 0.
    fn resolvent(&self, eps: f64, u: &[f64]) -> Result<Vec<f64>>;

    /// Projection onto the closure of the domain of dphi (the eps -> 0 limit
    /// of the resolvent).
    fn project_domain(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Resolvents of indicator potentials are eps-independent exact projections.
    fn is_indicator(&self) -> bool {
        false
    }

    fn domain_distance(&self, x: &[f64]) -> Result<f64> {
        Ok(dist(x, &self.project_domain(x)?))
    }

    /// phi_eps(u) = |u - J_eps(u)|^2 / 2 + eps * phi(J_eps(u)).
    fn moreau_envelope(&self, eps: f64, u: &[f64]) -> Result<f64> {
        let j = self.resolvent(eps, u)?;
        let phi_j = self.evaluate(&j)?;
        Ok(0.5 * dist(u, &j).powi(2) + eps * phi_j)
    }

    /// D phi_eps(u) = u - J_eps(u); (1/eps) times this is a subgradient of phi
    /// at J_eps(u).
    fn yosida_gradient(&self, eps: f64, u: &[f64]) -> Result<Vec<f64>> {
        let j = self.resolvent(eps, u)?;
        Ok(sub(u, &j))
    }
}

impl Potential for ConvexPotential {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let raw = match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Quadratic { weights } => {
                0.5 * x.iter().zip(weights).map(|(xi, wi)| wi * xi * xi).sum::<f64>()
            }
            PotentialKind::Indicator { set } => {
                let tol = 1e-9 * (1.0 + norm(x));
                if set.contains(x, tol) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => {
                let g = self.pair_interaction().unwrap();
                let mut acc = 0.0;
                for i in 0..self.dimension {
                    for j in (i + 1)..self.dimension {
                        let s = x[j] - x[i];
                        if s <= 0.0 {
                            return Ok(f64::INFINITY);
                        }
                        acc += g.value(s);
                    }
                }
                acc
            }
        };
        Ok(self.scale * raw)
    }

    fn resolvent(&self, eps: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        if eps <= 0.0 {
            return Err(SviError::NonPositive { what: "resolvent parameter", value: eps });
        }
        let eps_eff = eps * self.scale;
        match &self.kind {
            PotentialKind::Zero => Ok(u.to_vec()),
            PotentialKind::Quadratic { weights } => Ok(u
                .iter()
                .zip(weights)
                .map(|(ui, wi)| ui / (1.0 + eps_eff * wi))
                .collect()),
            PotentialKind::Indicator { set } => Ok(set.project(u)),
            PotentialKind::CoulombLog { lambda, particles } if *particles == 2 => {
                // gap quadratic: g^2 - w g - 2 eps lambda = 0 with w = u2 - u1;
                // the center (u1 + u2)/2 is preserved.
                let w = u[1] - u[0];
                let gap = 0.5 * (w + (w * w + 8.0 * eps_eff * lambda).sqrt());
                let center = 0.5 * (u[0] + u[1]);
                Ok(vec![center - 0.5 * gap, center + 0.5 * gap])
            }
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => {
                let g = self.pair_interaction().unwrap();
                newton::pairwise_resolvent(&g, eps_eff, u)
            }
        }
    }

    fn project_domain(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        match &self.kind {
            PotentialKind::Zero | PotentialKind::Quadratic { .. } => Ok(u.to_vec()),
            PotentialKind::Indicator { set } => Ok(set.project(u)),
            PotentialKind::CoulombLog { .. } | PotentialKind::Pairwise { .. } => {
                Ok(isotonic_projection(u))
            }
        }
    }

    fn is_indicator(&self) -> bool {
        matches!(self.kind, PotentialKind::Indicator { .. })
    }
}

/// Stationarity residual |v + eps * grad(phi)(v) - u| of a claimed resolvent
/// value; available for the smooth catalog kinds.
pub fn resolvent_residual(pot: &ConvexPotential, eps: f64, u: &[f64], v: &[f64]) -> Option<f64> {
    let grad = pot.gradient(v)?;
    let mut r = 0.0;
    for i in 0..u.len() {
        let ri = v[i] + eps * grad[i] - u[i];
        r += ri * ri;
    }
    Some(r.sqrt())
}
