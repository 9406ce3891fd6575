//! Synthetic net-load day generator.
//!
//! Produces desk-scale stand-ins for aggregated net-load: a diurnal
//! sinusoid, a midday solar dip whose recovery gives the sharp evening ramp,
//! per-day jitter of the base level and dip depth, and pointwise noise.
//! Everything is seeded, so test suites regenerate identical data.

use crate::fleet::SampleDay;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Horizon length in hours.
    pub hours: usize,
    /// Sample spacing in minutes; must divide 60.
    pub step_minutes: u32,
    /// Mean load level, MW.
    pub base_mw: f64,
    /// Amplitude of the diurnal sinusoid, MW.
    pub swing_mw: f64,
    /// Depth of the solar dip, MW.
    pub dip_mw: f64,
    /// Center of the dip, hours from the window start.
    pub dip_center_h: f64,
    /// Width (standard deviation) of the dip, hours. Smaller widths make
    /// the evening recovery ramp steeper.
    pub dip_sigma_h: f64,
    /// Relative per-day jitter of base level and dip depth.
    pub day_jitter: f64,
    /// Pointwise noise amplitude, MW.
    pub noise_mw: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            hours: 24,
            step_minutes: 5,
            base_mw: 180.0,
            swing_mw: 40.0,
            dip_mw: 70.0,
            dip_center_h: 13.0,
            dip_sigma_h: 2.5,
            day_jitter: 0.05,
            noise_mw: 1.5,
        }
    }
}

impl SynthParams {
    /// Deterministic noise-free profile for one day's jitter draws.
    fn shape(&self, t: f64, base_scale: f64, dip_scale: f64) -> f64 {
        let diurnal = self.swing_mw
            * (std::f64::consts::TAU * (t - 0.3 * self.hours as f64) / self.hours.max(24) as f64)
                .sin();
        let z = (t - self.dip_center_h) / self.dip_sigma_h;
        let dip = self.dip_mw * dip_scale * (-0.5 * z * z).exp();
        self.base_mw * base_scale + diurnal - dip
    }
}

/// Generate `count` seeded days on the configured minute grid.
pub fn synth_days(count: usize, seed: u64, params: &SynthParams) -> Vec<SampleDay> {
    assert!(params.step_minutes > 0 && 60 % params.step_minutes == 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_day = params.hours as u32 * 60 / params.step_minutes;
    (0..count)
        .map(|d| {
            let base_scale = 1.0 + rng.gen_range(-params.day_jitter..=params.day_jitter);
            let dip_scale = 1.0 + rng.gen_range(-params.day_jitter..=params.day_jitter);
            let samples = (0..per_day)
                .map(|k| {
                    let minute = k * params.step_minutes;
                    let t = minute as f64 / 60.0;
                    let noise = rng.gen_range(-params.noise_mw..=params.noise_mw);
                    (minute, params.shape(t, base_scale, dip_scale) + noise)
                })
                .collect();
            SampleDay { id: format!("synth-{d:04}"), samples }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_complete() {
        let p = SynthParams { hours: 6, ..Default::default() };
        let a = synth_days(4, 7, &p);
        let b = synth_days(4, 7, &p);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for day in &a {
            assert_eq!(day.samples.len(), 6 * 12);
            assert_eq!(day.samples[0].0, 0);
            assert_eq!(day.samples.last().unwrap().0, 6 * 60 - 5);
        }
    }

    #[test]
    fn dip_shows_up() {
        let p = SynthParams {
            hours: 24,
            noise_mw: 0.0,
            day_jitter: 0.0,
            ..Default::default()
        };
        let day = &synth_days(1, 0, &p)[0];
        let at = |h: u32| day.samples[(h * 12) as usize].1;
        // Midday sits well below the evening recovery.
        assert!(at(13) < at(20) - 15.0);
    }
}
