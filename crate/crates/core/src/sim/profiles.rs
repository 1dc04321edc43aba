//! Disturbance and parameter realizations for closed-loop runs.
//!
//! Profiles always produce admissible sequences: the parameter respects
//! its magnitude and per-step rate bounds, the disturbance its
//! magnitude bound. The benchmark sinusoids violate both as written
//! (the parameter target swings far faster than the rate bound allows,
//! and the disturbance amplitude exceeds its bound), so they are
//! clipped to admissibility and the clips are counted for the log.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Named realization generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Rate-limited tracker of `0.1 sin(4t/pi)` and the magnitude-clipped
    /// `0.15 sin(t/pi)`.
    Sinusoid,
    /// Uniform random walk for the parameter, i.i.d. uniform disturbance.
    Random,
    /// Everything zero.
    Zero,
}

/// Admissibility limits a profile must respect.
#[derive(Clone, Copy, Debug)]
pub struct ProfileBounds {
    pub v_bound: f64,
    pub v_rate: f64,
    pub d_bound: f64,
}

/// Scalar realizations for a whole run: `v[t]` is the parameter current
/// at instant `t` (it drives the step arriving there), `d[t]` the raw
/// disturbance acting during the step leaving `t`. Both carry one extra
/// trailing element so every step of a `steps`-long run is covered.
#[derive(Clone, Debug)]
pub struct DisturbanceProfile {
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub v_rate_clips: usize,
    pub d_magnitude_clips: usize,
}

pub fn build_profile(
    kind: ProfileKind,
    steps: usize,
    seed: u64,
    bounds: &ProfileBounds,
) -> DisturbanceProfile {
    let len = steps + 1;
    match kind {
        ProfileKind::Zero => DisturbanceProfile {
            v: vec![0.0; len],
            d: vec![0.0; len],
            v_rate_clips: 0,
            d_magnitude_clips: 0,
        },
        ProfileKind::Sinusoid => {
            let mut v = Vec::with_capacity(len);
            let mut d = Vec::with_capacity(len);
            let mut v_rate_clips = 0;
            let mut d_magnitude_clips = 0;
            let mut prev = 0.0f64;
            for t in 0..len {
                let target = 0.1 * (4.0 * t as f64 / std::f64::consts::PI).sin();
                let value = if t == 0 {
                    target
                } else {
                    let step = target - prev;
                    if step.abs() > bounds.v_rate {
                        v_rate_clips += 1;
                    }
                    prev + step.clamp(-bounds.v_rate, bounds.v_rate)
                };
                prev = value.clamp(-bounds.v_bound, bounds.v_bound);
                v.push(prev);

                let raw = 0.15 * (t as f64 / std::f64::consts::PI).sin();
                if raw.abs() > bounds.d_bound {
                    d_magnitude_clips += 1;
                }
                d.push(raw.clamp(-bounds.d_bound, bounds.d_bound));
            }
            DisturbanceProfile {
                v,
                d,
                v_rate_clips,
                d_magnitude_clips,
            }
        }
        ProfileKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v = Vec::with_capacity(len);
            let mut d = Vec::with_capacity(len);
            let mut cur = rng.gen_range(-bounds.v_bound..=bounds.v_bound);
            for t in 0..len {
                if t > 0 {
                    cur = (cur + rng.gen_range(-bounds.v_rate..=bounds.v_rate))
                        .clamp(-bounds.v_bound, bounds.v_bound);
                }
                v.push(cur);
                d.push(rng.gen_range(-bounds.d_bound..=bounds.d_bound));
            }
            DisturbanceProfile {
                v,
                d,
                v_rate_clips: 0,
                d_magnitude_clips: 0,
            }
        }
    }
}
