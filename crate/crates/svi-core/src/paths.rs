//! Cadlag trajectory storage on a time grid over [-h, T], the three-branch
//! delay segment view, and the path functionals used by the coefficient
//! catalog.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SviError};
use crate::linalg::norm;

/// How continuous-time queries between grid nodes are answered. Diffusion
/// segments interpolate linearly; jump-bearing paths hold the left node value
/// until the next node (right-continuous steps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    Linear,
    PiecewiseConstant,
}

/// Right-continuous path with left limits, stored as one value per grid node.
/// The value at node t is the right limit X(t); the left limit at an interior
/// node is reconstructed from the preceding node.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    grid: Vec<f64>,
    /// flat row-major storage, one `dim` block per node
    values: Vec<f64>,
    dim: usize,
    delay_horizon: f64,
    interpolation: Interpolation,
}

impl CadlagPath {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<Vec<f64>>,
        delay_horizon: f64,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(SviError::GridMismatch(format!(
                "grid has {} nodes but {} values supplied",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SviError::GridMismatch("grid must be strictly increasing".into()));
        }
        if delay_horizon < 0.0 {
            return Err(SviError::NonPositive { what: "delay horizon", value: delay_horizon });
        }
        if (grid[0] + delay_horizon).abs() > 1e-9 * (1.0 + delay_horizon) {
            return Err(SviError::GridMismatch(format!(
                "grid must start at -h = {}, got {}",
                -delay_horizon, grid[0]
            )));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(SviError::GridMismatch("value dimension must be constant".into()));
        }
        let mut flat = Vec::with_capacity(grid.len() * dim);
        for v in &values {
            flat.extend_from_slice(v);
        }
        Ok(CadlagPath { grid, values: flat, dim, delay_horizon, interpolation })
    }

    /// Constant path on a two-node grid [-h, t1] (or a provided grid).
    pub fn constant(grid: Vec<f64>, value: Vec<f64>, delay_horizon: f64) -> Result<Self> {
        let values = vec![value; grid.len()];
        CadlagPath::new(grid, values, delay_horizon, Interpolation::Linear)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn delay_horizon(&self) -> f64 {
        self.delay_horizon
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn start_time(&self) -> f64 {
        self.grid[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node_value(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn last_value(&self) -> &[f64] {
        self.node_value(self.len() - 1)
    }

    /// Index of the last grid node <= t (clamped to the grid range).
    fn floor_index(&self, t: f64) -> usize {
        match self.grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// X(t): right-continuous evaluation with the path's interpolation rule
    /// between nodes. Queries are clamped to the stored range.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        if t <= self.grid[0] {
            return self.node_value(0).to_vec();
        }
        if t >= self.end_time() {
            return self.last_value().to_vec();
        }
        let i = self.floor_index(t);
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.node_value(i).to_vec(),
            Interpolation::Linear => {
                if self.grid[i] == t {
                    return self.node_value(i).to_vec();
                }
                let (t0, t1) = (self.grid[i], self.grid[i + 1]);
                let w = (t - t0) / (t1 - t0);
                self.node_value(i)
                    .iter()
                    .zip(self.node_value(i + 1))
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    }

    /// Left limit X(t-): the preceding node's value at grid nodes, the
    /// interpolant elsewhere.
    pub fn left_limit(&self, t: f64) -> Vec<f64> {
        if t <= self.grid[0] {
            return self.node_value(0).to_vec();
        }
        let i = self.floor_index(t);
        if self.grid[i] == t {
            match self.interpolation {
                Interpolation::PiecewiseConstant => self.node_value(i.saturating_sub(1)).to_vec(),
                Interpolation::Linear => self.node_value(i).to_vec(),
            }
        } else {
            self.value_at(t)
        }
    }

    /// Appends a node after the current end of the grid.
    pub fn append(&mut self, t: f64, x: &[f64]) -> Result<()> {
        let last = self.end_time();
        if t <= last {
            return Err(SviError::NonMonotoneTime { t, last });
        }
        if x.len() != self.dim {
            return Err(SviError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        self.grid.push(t);
        self.values.extend_from_slice(x);
        Ok(())
    }

    /// sup over [s, t] of the node norms, counting the window endpoints'
    /// right values and every interior left limit (so a downward jump inside
    /// the window still exposes its pre-jump level).
    pub fn sup_norm(&self, window: (f64, f64)) -> Result<f64> {
        let (s, t) = window;
        if t < s {
            return Err(SviError::BadWindow { s, t });
        }
        let lo = self.start_time();
        let hi = self.end_time();
        if s < lo - 1e-12 || t > hi + 1e-12 {
            return Err(SviError::BadWindow { s, t });
        }
        let mut m = norm(&self.value_at(s)).max(norm(&self.value_at(t)));
        for (i, &g) in self.grid.iter().enumerate() {
            if g > s && g < t {
                m = m.max(norm(self.node_value(i)));
            }
            if g > s && g <= t {
                m = m.max(norm(&self.left_limit(g)));
            }
        }
        Ok(m)
    }

    /// Trapezoidal quadrature of kernel(X(r)) dr over [t - delta(t), t], the
    /// distributed-delay functional. Window endpoints are snapped by the
    /// path's interpolation rule.
    pub fn distributed_delay(
        &self,
        t: f64,
        delta: &DelayFunction,
        kernel: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Vec<f64>> {
        let d = delta.eval(t)?;
        let lo = t - d;
        if lo < self.start_time() - 1e-9 {
            return Err(SviError::BadWindow { s: lo, t });
        }
        integrate_on_grid(self, lo, t, kernel)
    }
}

/// Trapezoid rule on the stored grid restricted to [lo, hi], endpoints snapped
/// by interpolation.
pub(crate) fn integrate_on_grid(
    path: &CadlagPath,
    lo: f64,
    hi: f64,
    kernel: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    if hi < lo {
        return Err(SviError::BadWindow { s: lo, t: hi });
    }
    let probe = kernel(&path.value_at(lo));
    let out_dim = probe.len();
    let mut acc = vec![0.0; out_dim];
    if hi == lo {
        return Ok(acc);
    }
    // knots: lo, grid nodes strictly inside, hi
    let mut prev_t = lo;
    let mut prev_v = probe;
    let push = |acc: &mut Vec<f64>, t0: f64, v0: &[f64], t1: f64, v1: &[f64]| {
        let w = 0.5 * (t1 - t0);
        for i in 0..out_dim {
            acc[i] += w * (v0[i] + v1[i]);
        }
    };
    for (i, &g) in path.grid.iter().enumerate() {
        if g > lo && g < hi {
            let v = kernel(path.node_value(i));
            push(&mut acc, prev_t, &prev_v, g, &v);
            prev_t = g;
            prev_v = v;
        }
    }
    let v_end = kernel(&path.value_at(hi));
    push(&mut acc, prev_t, &prev_v, hi, &v_end);
    Ok(acc)
}

/// Delay profile a: [0, T] -> [0, h].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum DelayFunction {
    /// a(t) = gamma0
    Constant { gamma0: f64 },
    /// a(t) = iota * t, 0 <= iota <= 1
    Proportional { iota: f64 },
    /// a(t) = t: the whole past up to t enters the segment
    FullPath,
    /// piecewise-linear table of (t, a(t)) pairs
    Table { knots: Vec<(f64, f64)> },
}

impl DelayFunction {
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            DelayFunction::Constant { gamma0 } => *gamma0,
            DelayFunction::Proportional { iota } => iota * t,
            DelayFunction::FullPath => t,
            DelayFunction::Table { knots } => {
                if knots.is_empty() {
                    return Err(SviError::InvalidSpec("empty delay table".into()));
                }
                if t <= knots[0].0 {
                    knots[0].1
                } else if t >= knots[knots.len() - 1].0 {
                    knots[knots.len() - 1].1
                } else {
                    let i = knots.partition_point(|(ti, _)| *ti <= t) - 1;
                    let (t0, a0) = knots[i];
                    let (t1, a1) = knots[i + 1];
                    a0 + (a1 - a0) * (t - t0) / (t1 - t0)
                }
            }
        };
        Ok(v)
    }

    /// Checks range [0, h] on a sampling of [0, horizon].
    pub fn validate(&self, h: f64, horizon: f64) -> Result<()> {
        match self {
            DelayFunction::Constant { gamma0 } => {
                if *gamma0 < 0.0 || *gamma0 > h + 1e-12 {
                    return Err(SviError::InvalidSpec(format!(
                        "constant delay {gamma0} outside [0, {h}]"
                    )));
                }
            }
            DelayFunction::Proportional { iota } => {
                if *iota < 0.0 || *iota > 1.0 {
                    return Err(SviError::InvalidSpec(format!("iota {iota} outside [0, 1]")));
                }
                if iota * horizon > h + 1e-12 {
                    return Err(SviError::InvalidSpec(format!(
                        "proportional delay exceeds h = {h} before t = {horizon}"
                    )));
                }
            }
            DelayFunction::FullPath => {
                if horizon > h + 1e-12 {
                    return Err(SviError::InvalidSpec(format!(
                        "full-path delay needs h >= T, got h = {h}, T = {horizon}"
                    )));
                }
            }
            DelayFunction::Table { knots } => {
                if knots.is_empty() {
                    return Err(SviError::InvalidSpec("empty delay table".into()));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(SviError::InvalidSpec("delay table times must increase".into()));
                }
                for (_, a) in knots {
                    if *a < 0.0 || *a > h + 1e-12 {
                        return Err(SviError::InvalidSpec(format!(
                            "delay table value {a} outside [0, {h}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The delay segment at time t: the three-branch reparametrization
///   r in [-h, t - a(t)]  ->  X(t - a(t))
///   r in [t - a(t), t]   ->  X(r)
///   r in [t, T]          ->  X(t)
/// Borrows the underlying path; no values are copied.
#[derive(Clone, Copy)]
pub struct SegmentView<'a> {
    path: &'a CadlagPath,
    t: f64,
    lag_time: f64, // t - a(t)
}

impl<'a> SegmentView<'a> {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    /// The left knot t - a(t) of the live branch.
    pub fn lag_time(&self) -> f64 {
        self.lag_time
    }

    pub fn value_at(&self, r: f64) -> Vec<f64> {
        let clamped = r.max(self.lag_time).min(self.t);
        self.path.value_at(clamped)
    }

    /// X(t), the segment's frozen future branch.
    pub fn current(&self) -> Vec<f64> {
        self.path.value_at(self.t)
    }

    /// sup over the whole segment domain [-h, T]; branches 1 and 3 are
    /// constant so this reduces to the live window plus the two frozen levels.
    pub fn sup_norm(&self) -> Result<f64> {
        let live = self.path.sup_norm((self.lag_time, self.t))?;
        let frozen_past = norm(&self.path.value_at(self.lag_time));
        let frozen_future = norm(&self.current());
        Ok(live.max(frozen_past).max(frozen_future))
    }

    /// Trapezoidal quadrature of kernel(X(t+s)) ds for s in [-delta(t), 0],
    /// evaluated along the live branch of the segment.
    pub fn distributed_delay(
        &self,
        delta: &DelayFunction,
        kernel: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Vec<f64>> {
        let d = delta.eval(self.t)?;
        let lo = self.t - d;
        if lo < self.path.start_time() - 1e-9 {
            return Err(SviError::BadWindow { s: lo, t: self.t });
        }
        if lo < self.lag_time - 1e-9 {
            // the window would reach past the segment's frozen branch
            return Err(SviError::BadWindow { s: lo, t: self.t });
        }
        integrate_on_grid(self.path, lo, self.t, kernel)
    }
}

/// Builds the segment view X_t for t in [0, T].
pub fn segment<'a>(path: &'a CadlagPath, t: f64, a: &DelayFunction) -> Result<SegmentView<'a>> {
    let lo = 0.0;
    let hi = path.end_time();
    if t < lo - 1e-12 || t > hi + 1e-12 {
        return Err(SviError::TimeOutOfRange { t, lo, hi });
    }
    let lag = a.eval(t)?;
    Ok(SegmentView { path, t, lag_time: t - lag })
}

/// Total variation sum over grid steps of |eta(t_{k+1}) - eta(t_k)| within the
/// window; additive over adjacent windows that split at grid nodes.
pub fn total_variation(eta: &CadlagPath, window: (f64, f64)) -> Result<f64> {
    let (s, t) = window;
    if t < s {
        return Err(SviError::BadWindow { s, t });
    }
    let mut acc = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    for (i, &g) in eta.grid().iter().enumerate() {
        if g < s - 1e-12 || g > t + 1e-12 {
            continue;
        }
        let v = eta.node_value(i).to_vec();
        if let Some(p) = prev {
            acc += crate::linalg::dist(&v, &p);
        }
        prev = Some(v);
    }
    if prev.is_none() {
        return Err(SviError::BadWindow { s, t });
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_path() -> CadlagPath {
        // X(s) = s on [0, 2] with initial segment X = 0 on [-1, 0]
        let mut grid = vec![-1.0];
        let mut values = vec![vec![0.0]];
        let n = 200;
        for i in 0..=n {
            let t = 2.0 * i as f64 / n as f64;
            if i > 0 {
                grid.push(t);
                values.push(vec![t]);
            } else {
                grid.push(0.0);
                values.push(vec![0.0]);
            }
        }
        CadlagPath::new(grid, values, 1.0, Interpolation::Linear).unwrap()
    }

    #[test]
    fn segment_three_branches() {
        let path = line_path();
        let a = DelayFunction::Constant { gamma0: 1.0 };
        let seg = segment(&path, 1.5, &a).unwrap();
        // branch 1: r <= t - a(t) = 0.5 freezes X(0.5)
        assert!((seg.value_at(-0.7)[0] - 0.5).abs() < 1e-12);
        // branch 2: the live path
        assert!((seg.value_at(1.0)[0] - 1.0).abs() < 1e-12);
        // branch 3: the frozen present
        assert!((seg.value_at(1.9)[0] - 1.5).abs() < 1e-12);
        // continuity at the two knots
        assert!((seg.value_at(0.5)[0] - seg.value_at(0.5 - 1e-9)[0]).abs() < 1e-6);
        assert!((seg.value_at(1.5)[0] - seg.value_at(1.5 + 1e-9)[0]).abs() < 1e-6);
    }

    #[test]
    fn zero_delay_erases_path_dependence() {
        let path = line_path();
        let a = DelayFunction::Constant { gamma0: 0.0 };
        let seg = segment(&path, 1.5, &a).unwrap();
        for r in [-1.0, 0.0, 0.7, 1.5, 2.0] {
            assert!((seg.value_at(r)[0] - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn full_path_delay_freezes_initial_value_before_zero() {
        let path = line_path();
        let seg = segment(&path, 1.5, &DelayFunction::FullPath).unwrap();
        assert!((seg.value_at(-0.5)[0] - 0.0).abs() < 1e-12);
        assert!((seg.value_at(1.0)[0] - 1.0).abs() < 1e-12);
        assert!((seg.value_at(1.9)[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn segment_never_sees_the_future() {
        let path = line_path();
        let a = DelayFunction::Constant { gamma0: 0.5 };
        for t in [0.0, 0.4, 1.1, 2.0] {
            let seg = segment(&path, t, &a).unwrap();
            let seg_sup = seg.sup_norm().unwrap();
            let past_sup = path.sup_norm((-1.0, t)).unwrap();
            assert!(seg_sup <= past_sup + 1e-12);
        }
    }

    #[test]
    fn distributed_delay_linear_exact() {
        let path = line_path();
        let delta = DelayFunction::Constant { gamma0: 1.0 };
        let v = path
            .distributed_delay(1.0, &delta, &|x| x.to_vec())
            .unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12, "got {}", v[0]);

        // constant kernel integrates to c * delta
        let c = path
            .distributed_delay(1.3, &delta, &|_x| vec![2.5])
            .unwrap();
        assert!((c[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn distributed_delay_quadratic_refines() {
        // X(s) = s^2 on [0, 2], dt = 1e-3: integral over [0,1] of r^2 dr = 1/3
        let n = 2000usize;
        let mut grid = vec![-1.0, 0.0];
        let mut values = vec![vec![0.0], vec![0.0]];
        for i in 1..=n {
            let t = 2.0 * i as f64 / n as f64;
            grid.push(t);
            values.push(vec![t * t]);
        }
        let path = CadlagPath::new(grid, values, 1.0, Interpolation::Linear).unwrap();
        let delta = DelayFunction::Constant { gamma0: 1.0 };
        let v = path.distributed_delay(1.0, &delta, &|x| x.to_vec()).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-5, "got {}", v[0]);
    }

    #[test]
    fn sup_norm_counts_left_limits() {
        let path = CadlagPath::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0], vec![5.0], vec![1.0]],
            0.0,
            Interpolation::PiecewiseConstant,
        )
        .unwrap();
        // window ending just after the downward jump at t = 2
        let sup = path.sup_norm((1.5, 2.0)).unwrap();
        assert_eq!(sup, 5.0);
        // plain max over nodes
        let path2 = CadlagPath::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0], vec![-3.0], vec![2.0]],
            0.0,
            Interpolation::Linear,
        )
        .unwrap();
        assert_eq!(path2.sup_norm((0.0, 2.0)).unwrap(), 3.0);
    }

    #[test]
    fn append_extends_and_respects_monotonicity() {
        let mut path = CadlagPath::constant(vec![-1.0, 0.0], vec![2.0], 1.0).unwrap();
        let before = path.sup_norm((-1.0, 0.0)).unwrap();
        path.append(0.5, &[4.0]).unwrap();
        assert_eq!(path.len(), 3);
        let after = path.sup_norm((-1.0, 0.5)).unwrap();
        assert!(before <= after);
        assert!(path.append(0.4, &[0.0]).is_err());

        let seg = segment(&path, 0.5, &DelayFunction::Constant { gamma0: 0.5 }).unwrap();
        assert_eq!(seg.value_at(0.9), vec![4.0]);
    }

    #[test]
    fn total_variation_cases() {
        let eta = CadlagPath::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0], vec![1.0], vec![0.5]],
            0.0,
            Interpolation::PiecewiseConstant,
        )
        .unwrap();
        assert!((total_variation(&eta, (0.0, 2.0)).unwrap() - 1.5).abs() < 1e-15);
        // additivity over adjacent windows
        let a = total_variation(&eta, (0.0, 1.0)).unwrap();
        let b = total_variation(&eta, (1.0, 2.0)).unwrap();
        assert!((a + b - 1.5).abs() < 1e-15);
    }

    #[test]
    fn segment_time_out_of_range_rejected() {
        let path = line_path();
        assert!(segment(&path, -0.5, &DelayFunction::FullPath).is_err());
        assert!(segment(&path, 2.5, &DelayFunction::FullPath).is_err());
    }

    #[test]
    fn delay_validation() {
        assert!(DelayFunction::Constant { gamma0: 0.5 }.validate(1.0, 2.0).is_ok());
        assert!(DelayFunction::Constant { gamma0: 1.5 }.validate(1.0, 2.0).is_err());
        assert!(DelayFunction::Proportional { iota: 0.6 }.validate(1.0, 2.0).is_err());
        assert!(DelayFunction::Proportional { iota: 1.2 }.validate(3.0, 2.0).is_err());
        assert!(DelayFunction::Proportional { iota: 0.5 }.validate(1.0, 2.0).is_ok());
        assert!(DelayFunction::FullPath.validate(1.0, 2.0).is_err());
        assert!(DelayFunction::FullPath.validate(2.0, 2.0).is_ok());
    }
}
