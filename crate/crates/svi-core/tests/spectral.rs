//! Mode-system behavior: stationary statistics of the linear problem,
//! invariance under basis enlargement, dissipativity transfer from the flux
//! and reaction bounds, and time-invariance of the delayed coupling.

use std::f64::consts::PI;

use svi_core::drivers::RngStream;
use svi_core::galerkin::{
    build_spectral_problem, simulate_spde, CoefficientTriple, PointwiseMap, ReactionSpec,
    SpdeConfig,
};
use svi_core::integrator::{simulate, NoiseRecord, Scheme};
use svi_core::paths::DelayFunction;

#[test]
fn ou_mode_variance_near_stationary_value() {
    // additive noise on mode 1 only: dX_1 = -pi^2 X_1 dt + dW, stationary
    // variance 1/(2 pi^2). Reduced-scale check; the acceptance suite runs the
    // full-size version.
    let mut cfg = SpdeConfig::linear_heat(1, 1.0, 10.0, vec![0.0]);
    cfg.noise_q = vec![1.0];
    let dt = 2e-3;
    let paths = 40;
    let burn_in = 2.0;
    let mut acc = 0.0;
    let mut count = 0usize;
    for p in 0..paths {
        let (_prob, out) = simulate_spde(&cfg, dt, RngStream::new(90, p), 0, 3).unwrap();
        let x = &out.output.solution.x;
        for i in 0..x.len() {
            if x.grid()[i] >= burn_in {
                acc += x.node_value(i)[0].powi(2);
                count += 1;
            }
        }
    }
    let var = acc / count as f64;
    let target = 1.0 / (2.0 * PI * PI);
    assert!(
        (var - target).abs() / target < 0.10,
        "variance {var} vs {target}"
    );
}

#[test]
fn doubling_modes_leaves_decoupled_mode_untouched() {
    // linear problem, noise only on mode 1: enlarging the basis must not
    // change mode 1 at all (same draws, decoupled dynamics)
    let run = |n: usize| {
        let mut cfg = SpdeConfig::linear_heat(n, 1.0, 1.0, {
            let mut v = vec![0.0; n];
            v[0] = 0.8;
            v
        });
        cfg.noise_q = {
            let mut q = vec![0.0; n];
            q[0] = 1.0;
            q
        };
        let (_p, out) = simulate_spde(&cfg, 1e-2, RngStream::new(7, 7), 0, 3).unwrap();
        let x = &out.output.solution.x;
        x.last_value()[0]
    };
    let small = run(2);
    let large = run(4);
    assert!(
        (small - large).abs() < 1e-10,
        "mode-1 terminal changed: {small} vs {large}"
    );
}

#[test]
fn dissipativity_transfer_contraction_rate() {
    // g(v) = -0.9 v (one-sided bound 0.9): two runs from ordered initial data
    // under shared noise contract at least at rate m0 pi^2 - 0.9
    let make_cfg = |amp: f64| {
        let mut cfg = SpdeConfig::linear_heat(2, 1.0, 1.0, vec![amp, 0.2 * amp]);
        cfg.reaction = Some(ReactionSpec {
            coeffs: vec![0.0, -0.9],
            one_sided_bound: 0.9,
            validation_range: 10.0,
        });
        cfg.noise_q = vec![1.0, 1.0];
        cfg
    };
    let dt = 1e-3;
    let pa = build_spectral_problem(&make_cfg(1.0)).unwrap();
    let pb = build_spectral_problem(&make_cfg(0.5)).unwrap();
    let grid = NoiseRecord::uniform_grid(1.0, dt).unwrap();
    let noise =
        NoiseRecord::sample(&pa.spec.wiener, &pa.spec.levy, &grid, RngStream::new(55, 0)).unwrap();
    let sa = svi_core::integrator::simulate_with_noise(&pa.spec, dt, Scheme::ProxEuler, &noise)
        .unwrap();
    let sb = svi_core::integrator::simulate_with_noise(&pb.spec, dt, Scheme::ProxEuler, &noise)
        .unwrap();
    // additive shared noise cancels in the difference: log-distance regression
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for i in 0..sa.x.len() {
        let t = sa.x.grid()[i];
        if t < 0.0 {
            continue;
        }
        let d = svi_core::linalg::dist(sa.x.node_value(i), sb.x.node_value(i));
        if d > 0.0 {
            ts.push(t);
            logs.push(d.ln());
        }
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let slope: f64 = ts
        .iter()
        .zip(&logs)
        .map(|(t, l)| (t - tm) * (l - lm))
        .sum::<f64>()
        / ts.iter().map(|t| (t - tm) * (t - tm)).sum::<f64>();
    let bound = 1.0 * PI * PI - 0.9;
    assert!(
        -slope >= bound * 0.95,
        "contraction rate {} below bound {bound}",
        -slope
    );
}

#[test]
fn delayed_coupling_is_time_invariant() {
    // dyadic grid so node lookups are exact: dt = 1/16, h = 1/2, lag = 1/4.
    // Restarting from the trajectory segment at s0 = 1/2 reproduces the tail.
    let dt = 1.0 / 16.0;
    let h = 0.5;
    let lag = 0.25;
    let horizon = 1.0;
    let b2: PointwiseMap = std::sync::Arc::new(|_t, x, v| 0.8 * v * (1.0 + 0.3 * x));
    let base_cfg = |initial: (Vec<f64>, Vec<Vec<f64>>), t_end: f64| SpdeConfig {
        modes: 2,
        viscosity: 1.0,
        reaction: None,
        drift: CoefficientTriple {
            instantaneous: None,
            discrete_delay: Some(b2.clone()),
            distributed: None,
        },
        diffusion: CoefficientTriple::none(),
        jump: svi_core::galerkin::JumpTriple::none(),
        delay1: DelayFunction::Constant { gamma0: lag },
        delay2: DelayFunction::Constant { gamma0: 0.0 },
        potential: None,
        noise_q: vec![0.0, 0.0],
        levy: svi_core::drivers::LevyConfig::none(),
        delay_horizon: h,
        horizon: t_end,
        initial_modes: initial,
    };

    // full run from a sloped initial segment
    let init_grid: Vec<f64> = (0..=8).map(|j| j as f64 * dt - h).collect();
    let init_vals: Vec<Vec<f64>> = init_grid.iter().map(|t| vec![1.0 + t, 0.5 - t]).collect();
    let prob_a = build_spectral_problem(&base_cfg((init_grid, init_vals), horizon)).unwrap();
    let sol_a = simulate(&prob_a.spec, dt, Scheme::ProxEuler, RngStream::new(1, 0)).unwrap();

    // restart from the segment of run A over [s0 - h, s0]
    let s0 = 0.5;
    let xa = &sol_a.solution.x;
    let mut grid_b = Vec::new();
    let mut vals_b = Vec::new();
    for i in 0..xa.len() {
        let t = xa.grid()[i];
        if t >= s0 - h - 1e-12 && t <= s0 + 1e-12 {
            grid_b.push(t - s0);
            vals_b.push(xa.node_value(i).to_vec());
        }
    }
    let prob_b =
        build_spectral_problem(&base_cfg((grid_b, vals_b), horizon - s0)).unwrap();
    let sol_b = simulate(&prob_b.spec, dt, Scheme::ProxEuler, RngStream::new(1, 0)).unwrap();

    let xb = &sol_b.solution.x;
    for i in 0..xb.len() {
        let t = xb.grid()[i];
        if t < 0.0 {
            continue;
        }
        let a_val = xa.value_at(t + s0);
        let d = svi_core::linalg::dist(&a_val, xb.node_value(i));
        assert!(d <= 1e-13, "time invariance broken at t = {t}: {d}");
    }
}
