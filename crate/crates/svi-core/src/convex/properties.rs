//! Randomized structural checks of the envelope/resolvent calculus: the
//! inequalities every catalog potential must satisfy, run over batches of
//! random points and parameters. Backs the `proptest` study of the harness and
//! the acceptance suite.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{dist, dot, norm, sub};

use super::{ConvexPotential, Potential};

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub samples: usize,
    /// Worst signed violation seen; <= 0 means the inequality held with slack.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub potential: String,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn sample_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

struct Worst {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    samples: usize,
}

impl Worst {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Worst { name, tolerance, worst: f64::NEG_INFINITY, samples: 0 }
    }

    fn record(&mut self, violation: f64) {
        self.worst = self.worst.max(violation);
        self.samples += 1;
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            name: self.name.to_string(),
            samples: self.samples,
            worst_violation: if self.samples == 0 { f64::NEG_INFINITY } else { self.worst },
            tolerance: self.tolerance,
            pass: self.samples == 0 || self.worst <= self.tolerance,
        }
    }
}

/// Runs the full inequality battery on one potential with `samples` random
/// draws of (u, v, eps, delta), eps and delta log-uniform on [1e-3, 1].
pub fn envelope_property_suite(
    pot: &ConvexPotential,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<PropertyReport> {
    let dim = pot.dimension();
    let h4 = pot.h4_compliant();

    let mut nonexpansive = Worst::new("resolvent_nonexpansive", 1e-9);
    let mut envelope_identity = Worst::new("envelope_identity", 1e-8);
    let mut bound_chain = Worst::new("gradient_bound_chain", 1e-8);
    let mut monotone = Worst::new("yosida_monotonicity", 1e-9);
    let mut cross = Worst::new("cross_parameter_inequality", 1e-8);
    let mut origin = Worst::new("origin_normalization", 1e-12);
    let mut proj_limit = Worst::new("projection_limit", 1e-9);
    let mut subgrad = Worst::new("subgradient_membership", 0.0);
    let mut origin_ball_bound = Worst::new("origin_ball_bound", 1e-8);

    let gamma_m0 = pot.origin_ball();

    for _ in 0..samples {
        let u = sample_point(rng, dim);
        let v = sample_point(rng, dim);
        let eps = log_uniform(rng, 1e-3, 1.0);
        let delta = log_uniform(rng, 1e-3, 1.0);

        let ju = pot.resolvent(eps, &u)?;
        let jv = pot.resolvent(eps, &v)?;
        let du = sub(&u, &ju); // D phi_eps(u)
        let dv_same_eps = sub(&v, &jv);
        let phi_eps_u = pot.moreau_envelope(eps, &u)?;

        // |J(u) - J(v)| <= |u - v|
        nonexpansive.record(dist(&ju, &jv) - dist(&u, &v));

        // phi_eps(u) = |D|^2/2 + eps * phi(J u), assembled from the separate
        // accessors
        let phi_at_ju = pot.evaluate(&ju)?;
        if phi_at_ju.is_finite() {
            let assembled = 0.5 * dot(&du, &du) + eps * phi_at_ju;
            envelope_identity.record((phi_eps_u - assembled).abs());
        }

        // |D|^2/2 <= phi_eps(u) <= <D, u> <= |u|^2  (needs phi(0) = 0 <= phi)
        if h4 {
            let half_d2 = 0.5 * dot(&du, &du);
            let inner = dot(&du, &u);
            bound_chain.record(half_d2 - phi_eps_u);
            bound_chain.record(phi_eps_u - inner);
            bound_chain.record(inner - dot(&u, &u));

            // J(0) = 0, D phi_eps(0) = 0, phi_eps(0) = 0
            let z = vec![0.0; dim];
            let jz = pot.resolvent(eps, &z)?;
            origin.record(norm(&jz));
            origin.record(pot.moreau_envelope(eps, &z)?.abs());
        }

        // <(1/eps)(D(u) - D(v)), J(u) - J(v)> >= 0
        let diff_d = sub(&du, &dv_same_eps);
        let diff_j = sub(&ju, &jv);
        monotone.record(-dot(&diff_d, &diff_j) / eps);

        // <(1/delta) D_delta(v) - (1/eps) D_eps(u), v - u>
        //    >= -(1/delta + 1/eps) <D_eps(u), D_delta(v)>
        let dv_delta = pot.yosida_gradient(delta, &v)?;
        let lhs: f64 = (0..dim)
            .map(|i| (dv_delta[i] / delta - du[i] / eps) * (v[i] - u[i]))
            .sum();
        let rhs = -(1.0 / delta + 1.0 / eps) * dot(&du, &dv_delta);
        cross.record(rhs - lhs);

        // gamma0 |D phi_eps(u)| <= eps * m0 + <D phi_eps(u), u>
        if let Some((gamma0, m0)) = gamma_m0 {
            origin_ball_bound.record(gamma0 * norm(&du) - eps * m0 - dot(&du, &u));
        }

        if pot.is_indicator() {
            // the resolvent must equal the projection exactly, for every eps
            let proj = pot.project_domain(&u)?;
            proj_limit.record(dist(&ju, &proj));
        } else {
            // distance to the domain projection is non-increasing along eps -> 0
            let proj = pot.project_domain(&u)?;
            let mut prev = f64::INFINITY;
            for e in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
                let j = pot.resolvent(e, &u)?;
                let d = dist(&j, &proj);
                proj_limit.record(d - prev);
                prev = d;
            }
        }

        // (1/eps) D phi_eps(u) is the gradient of phi at J_eps(u) for the
        // smooth kinds, up to the Newton stationarity tolerance
        if let Some(grad_at_ju) = pot.gradient(&ju) {
            let mut err2 = 0.0;
            for i in 0..dim {
                let e = du[i] / eps - grad_at_ju[i];
                err2 += e * e;
            }
            let allowed = 10.0 * super::NEWTON_TOL * (1.0 + norm(&u)) / eps;
            subgrad.record(err2.sqrt() - allowed);
        }
    }

    Ok(PropertyReport {
        potential: pot.descriptor(),
        checks: vec![
            nonexpansive.finish(),
            envelope_identity.finish(),
            bound_chain.finish(),
            monotone.finish(),
            cross.finish(),
            origin.finish(),
            proj_limit.finish(),
            subgrad.finish(),
            origin_ball_bound.finish(),
        ],
    })
}

/// The potential catalog exercised by the property study.
pub fn catalog() -> Vec<ConvexPotential> {
    use super::{ConvexSetSpec, PairwiseG};
    vec![
        ConvexPotential::half_norm_squared(3),
        ConvexPotential::quadratic(vec![0.5, 2.0, 0.0]).unwrap(),
        ConvexPotential::indicator(ConvexSetSpec::Halfline { lower: vec![0.0, -1.0] }).unwrap(),
        ConvexPotential::indicator(ConvexSetSpec::Box {
            lower: vec![0.0, -1.0],
            upper: vec![1.0, 1.0],
        })
        .unwrap(),
        ConvexPotential::indicator(ConvexSetSpec::Ball { center: vec![0.0, 0.0], radius: 1.5 })
            .unwrap(),
        ConvexPotential::indicator(ConvexSetSpec::OrderedCone { dim: 3, min_gap: 0.0 }).unwrap(),
        ConvexPotential::zero(2),
        ConvexPotential::coulomb_log(1.0, 3).unwrap(),
        ConvexPotential::pairwise(PairwiseG::InversePower { lambda: 0.4, power: 1.0 }, 3).unwrap(),
    ]
}
