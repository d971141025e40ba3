//! Pre-sampled noise for one path: jump events first, then Wiener increments
//! on the jump-augmented grid. Keeping the record explicit makes shared-noise
//! couplings (scheme comparisons, fixed-noise iteration, time rescaling)
//! exact instead of relying on matched generator consumption.

use serde::Serialize;

use crate::drivers::{JumpEvent, LevyConfig, RngStream, WienerSpec};
use crate::error::{Result, SviError};

#[derive(Debug, Clone, Serialize)]
pub struct NoiseRecord {
    /// uniform time nodes 0 = t_0 < ... < t_n = T
    pub base_grid: Vec<f64>,
    /// base grid merged with the distinct jump times
    pub cuts: Vec<f64>,
    /// Wiener increment per cut interval, sampled at the interval's length
    pub increments: Vec<Vec<f64>>,
    /// events sorted by time; events at time exactly 0 attach to the first cut
    pub events: Vec<JumpEvent>,
    pub stream: Option<RngStream>,
}

impl NoiseRecord {
    pub fn sample(
        wiener: &WienerSpec,
        levy: &LevyConfig,
        base_grid: &[f64],
        stream: RngStream,
    ) -> Result<Self> {
        if base_grid.len() < 2 {
            return Err(SviError::EmptyGrid);
        }
        let horizon = *base_grid.last().unwrap() - base_grid[0];
        let mut rng = stream.rng();
        // jump block first, Wiener block second: one generator, fixed order
        let events: Vec<JumpEvent> = if levy.is_active() {
            use rand::Rng;
            use rand_distr::Distribution;
            let count = rand_distr::Poisson::new(levy.total_intensity * horizon)
                .expect("positive rate")
                .sample(&mut rng) as usize;
            let mut times: Vec<f64> =
                (0..count).map(|_| base_grid[0] + rng.gen_range(0.0..horizon)).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times
                .into_iter()
                .map(|time| JumpEvent { time, mark: levy.mark_sampler.sample(&mut rng) })
                .collect()
        } else {
            Vec::new()
        };
        let cuts = merge_cuts(base_grid, &events);
        let increments = cuts
            .windows(2)
            .map(|w| wiener.sample_increment(w[1] - w[0], &mut rng))
            .collect();
        Ok(NoiseRecord {
            base_grid: base_grid.to_vec(),
            cuts,
            increments,
            events,
            stream: Some(stream),
        })
    }

    /// Events absorbed at the cut ending interval i: times in
    /// (cuts[i], cuts[i+1]], with events at the very start attached to the
    /// first interval.
    pub fn events_for_interval(&self, i: usize) -> Vec<&JumpEvent> {
        let lo = self.cuts[i];
        let hi = self.cuts[i + 1];
        let first = i == 0;
        self.events
            .iter()
            .filter(|e| (e.time > lo && e.time <= hi) || (first && e.time <= lo))
            .collect()
    }

    pub fn n_intervals(&self) -> usize {
        self.cuts.len() - 1
    }

    /// Uniform time grid helper: k * dt for k = 0..=n with the endpoint
    /// pinned exactly to T.
    pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
        if dt <= 0.0 {
            return Err(SviError::NonPositive { what: "dt", value: dt });
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(SviError::InvalidSpec(format!(
                "horizon {horizon} is not an integer multiple of dt = {dt}"
            )));
        }
        let n = steps as usize;
        let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        grid[n] = horizon;
        Ok(grid)
    }
}

fn merge_cuts(base: &[f64], events: &[JumpEvent]) -> Vec<f64> {
    let mut cuts = base.to_vec();
    cuts.extend(events.iter().map(|e| e.time).filter(|t| *t > base[0]));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() == 0.0);
    cuts
}
