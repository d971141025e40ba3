//! Reproducible noise sources: finite-mode Wiener increments with diagonal
//! covariance and finite-activity Poisson random measures with compensator
//! bookkeeping. All sampling is driven by counter-derived streams so that
//! ensembles parallelize without sharing generator state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SviError};

/// Identifies one independent random stream: a master seed plus a stream
/// index. Identical (seed, id) pairs reproduce identical samples bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream { master_seed, stream_id }
    }

    /// Counter-based derivation: the (seed, id) pair is hashed into a 256-bit
    /// ChaCha key, so distinct ids give statistically independent generators.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self
            .master_seed
            .wrapping_add(self.stream_id.wrapping_mul(0xA076_1D64_78BD_642F));
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        RngStream { master_seed: self.master_seed, stream_id }
    }
}

/// Finite-mode Wiener driver with diagonal covariance Q.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WienerSpec {
    pub modes: usize,
    pub covariance_diag: Vec<f64>,
}

impl WienerSpec {
    pub fn new(covariance_diag: Vec<f64>) -> Result<Self> {
        if covariance_diag.is_empty() {
            return Err(SviError::InvalidSpec("wiener driver needs at least one mode".into()));
        }
        if covariance_diag.iter().any(|q| *q < 0.0 || !q.is_finite()) {
            return Err(SviError::InvalidSpec("covariance diagonal must be nonnegative".into()));
        }
        Ok(WienerSpec { modes: covariance_diag.len(), covariance_diag })
    }

    pub fn standard(modes: usize) -> Self {
        WienerSpec { modes, covariance_diag: vec![1.0; modes] }
    }

    /// Increment over one interval of length `dt`: mode j gets
    /// Normal(0, q_j * dt). Zero-variance modes produce exact zeros without
    /// consuming draws, so padding a driver with silent modes does not shift
    /// the sample stream of the active ones.
    pub fn sample_increment(&self, dt: f64, rng: &mut impl Rng) -> Vec<f64> {
        let sqrt_dt = dt.sqrt();
        self.covariance_diag
            .iter()
            .map(|&q| {
                if q == 0.0 {
                    0.0
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    z * (q.sqrt() * sqrt_dt)
                }
            })
            .collect()
    }
}

/// Table of Wiener increments on a grid: entry [k][j] covers step k, mode j.
pub fn sample_wiener_increments(
    spec: &WienerSpec,
    grid: &[f64],
    stream: RngStream,
) -> Result<Vec<Vec<f64>>> {
    if grid.len() < 2 {
        return Err(SviError::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SviError::GridMismatch("grid must be strictly increasing".into()));
    }
    let mut rng = stream.rng();
    Ok(grid
        .windows(2)
        .map(|w| spec.sample_increment(w[1] - w[0], &mut rng))
        .collect())
}

/// Mark distribution of the jump noise. Sampling is exact; expectations are by
/// closed-form sums for atoms and by tensor Gauss-Legendre quadrature for the
/// continuous families.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum MarkSampler {
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    DiscreteAtoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl MarkSampler {
    pub fn dimension(&self) -> usize {
        match self {
            MarkSampler::UniformBox { lower, .. } => lower.len(),
            MarkSampler::Gaussian { mean, .. } => mean.len(),
            MarkSampler::DiscreteAtoms { points, .. } => points.first().map_or(0, |p| p.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MarkSampler::UniformBox { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return Err(SviError::InvalidSpec("uniform box bounds mismatch".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| l >= u) {
                    return Err(SviError::InvalidSpec("uniform box needs lower < upper".into()));
                }
            }
            MarkSampler::Gaussian { mean, std } => {
                if mean.len() != std.len() || mean.is_empty() {
                    return Err(SviError::InvalidSpec("gaussian mark spec mismatch".into()));
                }
                if std.iter().any(|s| *s <= 0.0) {
                    return Err(SviError::InvalidSpec("gaussian mark std must be positive".into()));
                }
            }
            MarkSampler::DiscreteAtoms { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(SviError::InvalidSpec("atom points/weights mismatch".into()));
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(SviError::InvalidSpec("atom weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Err(SviError::InvalidSpec("atom weights must not all vanish".into()));
                }
                let d = points[0].len();
                if points.iter().any(|p| p.len() != d) {
                    return Err(SviError::InvalidSpec("atom points have mixed dimensions".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            MarkSampler::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| rng.gen_range(*l..*u))
                .collect(),
            MarkSampler::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + s * z
                })
                .collect(),
            MarkSampler::DiscreteAtoms { points, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.gen_range(0.0..total);
                for (p, w) in points.iter().zip(weights) {
                    if u < *w {
                        return p.clone();
                    }
                    u -= w;
                }
                points.last().unwrap().clone()
            }
        }
    }

    /// E[f(mark)] under the normalized mark distribution.
    pub fn expectation(&self, f: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        match self {
            MarkSampler::DiscreteAtoms { points, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc: Option<Vec<f64>> = None;
                for (p, w) in points.iter().zip(weights) {
                    let val = f(p);
                    let acc = acc.get_or_insert_with(|| vec![0.0; val.len()]);
                    for (a, v) in acc.iter_mut().zip(&val) {
                        *a += (w / total) * v;
                    }
                }
                acc.unwrap_or_default()
            }
            MarkSampler::UniformBox { lower, upper } => {
                tensor_quadrature(lower.len(), &|i, order| {
                    let (nodes, weights) = gauss_legendre_scaled(lower[i], upper[i], order);
                    let width = upper[i] - lower[i];
                    (nodes, weights.iter().map(|w| w / width).collect())
                })
                .integrate(f)
            }
            MarkSampler::Gaussian { mean, std } => tensor_quadrature(mean.len(), &|i, order| {
                // integrate the density-weighted integrand over mean +- 10 std;
                // the tail mass beyond that is ~1e-23
                let lo = mean[i] - 10.0 * std[i];
                let hi = mean[i] + 10.0 * std[i];
                let (nodes, weights) = gauss_legendre_scaled(lo, hi, order);
                let w: Vec<f64> = weights
                    .iter()
                    .zip(&nodes)
                    .map(|(w, x)| {
                        let z = (x - mean[i]) / std[i];
                        w * (-0.5 * z * z).exp()
                            / (std[i] * (2.0 * std::f64::consts::PI).sqrt())
                    })
                    .collect();
                (nodes, w)
            })
            .integrate(f),
        }
    }
}

const GL_ORDER_1D: usize = 64;
const GL_ORDER_2D: usize = 24;
const GL_ORDER_3D: usize = 12;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gauss_legendre_scaled(lo: f64, hi: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (n, w) = gauss_legendre(order);
    let c = 0.5 * (hi - lo);
    let m = 0.5 * (hi + lo);
    (
        n.iter().map(|x| m + c * x).collect(),
        w.iter().map(|wi| c * wi).collect(),
    )
}

struct TensorRule {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TensorRule {
    fn integrate(&self, f: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut acc: Option<Vec<f64>> = None;
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            let val = f(node);
            let acc = acc.get_or_insert_with(|| vec![0.0; val.len()]);
            for (a, v) in acc.iter_mut().zip(&val) {
                *a += w * v;
            }
        }
        acc.unwrap_or_default()
    }
}

fn tensor_quadrature(
    dim: usize,
    rule_for_axis: &dyn Fn(usize, usize) -> (Vec<f64>, Vec<f64>),
) -> TensorRule {
    let order = match dim {
        1 => GL_ORDER_1D,
        2 => GL_ORDER_2D,
        _ => GL_ORDER_3D,
    };
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in 0..dim {
        let (axis_nodes, axis_weights) = rule_for_axis(axis, order);
        let mut next_nodes = Vec::with_capacity(nodes.len() * axis_nodes.len());
        let mut next_weights = Vec::with_capacity(weights.len() * axis_weights.len());
        for (node, w) in nodes.iter().zip(&weights) {
            for (an, aw) in axis_nodes.iter().zip(&axis_weights) {
                let mut n2 = node.clone();
                n2.push(*an);
                next_nodes.push(n2);
                next_weights.push(w * aw);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    TensorRule { nodes, weights }
}

/// Finite-activity jump noise: total intensity nu(U) < infinity with a
/// normalized mark distribution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LevyConfig {
    pub mark_dimension: usize,
    pub total_intensity: f64,
    pub mark_sampler: MarkSampler,
}

impl LevyConfig {
    pub fn new(total_intensity: f64, mark_sampler: MarkSampler) -> Result<Self> {
        if total_intensity <= 0.0 || !total_intensity.is_finite() {
            return Err(SviError::NonPositive { what: "jump intensity", value: total_intensity });
        }
        mark_sampler.validate()?;
        Ok(LevyConfig { mark_dimension: mark_sampler.dimension(), total_intensity, mark_sampler })
    }

    /// No jumps: intensity is kept at zero and sampling returns no events.
    pub fn none() -> Self {
        LevyConfig {
            mark_dimension: 1,
            total_intensity: 0.0,
            mark_sampler: MarkSampler::DiscreteAtoms { points: vec![vec![0.0]], weights: vec![1.0] },
        }
    }

    pub fn is_active(&self) -> bool {
        self.total_intensity > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

/// Events on [0, horizon]: count ~ Poisson(nu * horizon), times i.i.d. uniform
/// then sorted, marks i.i.d. from the mark sampler.
pub fn sample_jump_events(
    cfg: &LevyConfig,
    horizon: f64,
    stream: RngStream,
) -> Result<Vec<JumpEvent>> {
    if horizon <= 0.0 {
        return Err(SviError::NonPositive { what: "jump horizon", value: horizon });
    }
    if !cfg.is_active() {
        return Ok(Vec::new());
    }
    let mut rng = stream.rng();
    let count = Poisson::new(cfg.total_intensity * horizon)
        .expect("positive rate")
        .sample(&mut rng) as usize;
    let mut times: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..horizon)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let events = times
        .into_iter()
        .map(|time| JumpEvent { time, mark: cfg.mark_sampler.sample(&mut rng) })
        .collect();
    Ok(events)
}

/// Integral of the compensator nu(du) dt over [s, t]:
/// (t - s) * nu(U) * E[f(mark)]. Subtracting this from the raw event sum turns
/// the jump integral into a compensated (martingale) one.
pub fn compensator_integral(
    cfg: &LevyConfig,
    integrand: &dyn Fn(&[f64]) -> Vec<f64>,
    window: (f64, f64),
) -> Vec<f64> {
    let (s, t) = window;
    if !cfg.is_active() || t <= s {
        return Vec::new();
    }
    let mut v = cfg.mark_sampler.expectation(integrand);
    let factor = (t - s) * cfg.total_intensity;
    for vi in &mut v {
        *vi *= factor;
    }
    v
}
