//! Simulated vehicular wireless environment: seeded per-round transmission
//! rates, dwell times, and the transmission/computation time model.

use core::fmt;

use rand::distributions::{Distribution, Uniform};

use crate::rng::{stream_rng, STREAM_CHANNEL};

#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    NonPositiveRate(f64),
    NonPositiveCapacity(f64),
    BadProfile(&'static str),
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::NonPositiveRate(r) => write!(f, "transmission rate must be > 0, got {r}"),
            NetError::NonPositiveCapacity(c) => {
                write!(f, "compute capacity must be > 0, got {c}")
            }
            NetError::BadProfile(msg) => write!(f, "invalid profile: {msg}"),
        }
    }
}

impl core::error::Error for NetError {}

/// Per-vehicle compute capacity (FLOP/s), channel model (mean rate in bit/s
/// with a bounded jitter fraction), and dwell time inside the server's
/// communication range (`None` = stays forever).
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleProfile {
    pub id: usize,
    pub compute_capacity: f64,
    pub mean_rate: f64,
    pub jitter: f64,
    pub dwell_time: Option<f64>,
}

impl VehicleProfile {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.compute_capacity <= 0.0 {
            return Err(NetError::NonPositiveCapacity(self.compute_capacity));
        }
        if self.mean_rate <= 0.0 {
            return Err(NetError::NonPositiveRate(self.mean_rate));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(NetError::BadProfile("jitter must be in [0, 1)"));
        }
        if let Some(d) = self.dwell_time {
            if d <= 0.0 {
                return Err(NetError::BadProfile("dwell time must be > 0"));
            }
        }
        Ok(())
    }
}

/// The server profile: compute capacity (FLOP/s) and the downlink broadcast
/// rate cap (bit/s). Downstream messages to a vehicle travel at
/// `min(vehicle rate, broadcast_rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RsuProfile {
    pub compute_capacity: f64,
    pub broadcast_rate: f64,
}

impl RsuProfile {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.compute_capacity <= 0.0 {
            return Err(NetError::NonPositiveCapacity(self.compute_capacity));
        }
        if self.broadcast_rate <= 0.0 {
            return Err(NetError::NonPositiveRate(self.broadcast_rate));
        }
        Ok(())
    }
}

/// One vehicle's sampled transmission rate for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub vehicle: usize,
    pub round: u64,
    pub rate: f64,
}

/// Samples the round's rate: `mean_rate * u` with `u` uniform on
/// `[1 - jitter, 1 + jitter]`, keyed by `(seed, vehicle id, round)`.
pub fn sample_rate(profile: &VehicleProfile, round: u64, seed: u64) -> ChannelSample {
    let rate = if profile.jitter == 0.0 {
        profile.mean_rate
    } else {
        let mut rng = stream_rng(seed, &[STREAM_CHANNEL, profile.id as u64, round]);
        let u = Uniform::new_inclusive(1.0 - profile.jitter, 1.0 + profile.jitter).sample(&mut rng);
        profile.mean_rate * u
    };
    ChannelSample {
        vehicle: profile.id,
        round,
        rate,
    }
}

/// Transmission delay of a payload: `8 * bytes / rate` seconds.
pub fn comm_time(bytes: u64, rate: f64) -> Result<f64, NetError> {
    if rate <= 0.0 {
        return Err(NetError::NonPositiveRate(rate));
    }
    Ok(8.0 * bytes as f64 / rate)
}

/// Computation delay: `flops / capacity` seconds.
pub fn comp_time(flops: u64, capacity: f64) -> Result<f64, NetError> {
    if capacity <= 0.0 {
        return Err(NetError::NonPositiveCapacity(capacity));
    }
    Ok(flops as f64 / capacity)
}

/// True while the vehicle is still inside the communication range.
pub fn check_dwell(profile: &VehicleProfile, elapsed_seconds: f64) -> bool {
    match profile.dwell_time {
        None => true,
        Some(dwell) => elapsed_seconds < dwell,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(jitter: f64) -> VehicleProfile {
        VehicleProfile {
            id: 3,
            compute_capacity: 1e9,
            mean_rate: 8e6,
            jitter,
            dwell_time: None,
        }
    }

    #[test]
    fn zero_jitter_is_exact() {
        let s = sample_rate(&profile(0.0), 5, 42);
        assert_eq!(s.rate, 8e6);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = profile(0.4);
        let a = sample_rate(&p, 7, 42);
        let b = sample_rate(&p, 7, 42);
        assert_eq!(a.rate, b.rate);
        let c = sample_rate(&p, 8, 42);
        assert_ne!(a.rate, c.rate);
    }

    #[test]
    fn monte_carlo_mean_tracks_mean_rate() {
        let p = profile(0.5);
        let mean = (0..10_000)
            .map(|round| sample_rate(&p, round, 1).rate)
            .sum::<f64>()
            / 10_000.0;
        assert!(
            (mean - p.mean_rate).abs() / p.mean_rate < 0.02,
            "empirical mean {mean}"
        );
    }

    #[test]
    fn comm_time_examples() {
        assert_eq!(comm_time(0, 5.0).unwrap(), 0.0);
        // 1 MB at 8 Mbit/s is exactly one second
        assert_eq!(comm_time(1_000_000, 8e6).unwrap(), 1.0);
        let a = comm_time(123, 7e5).unwrap();
        let b = comm_time(321, 7e5).unwrap();
        let ab = comm_time(444, 7e5).unwrap();
        assert!((a + b - ab).abs() < 1e-12);
        assert!(comm_time(1, 0.0).is_err());
    }

    #[test]
    fn comp_time_examples() {
        assert_eq!(comp_time(0, 1e9).unwrap(), 0.0);
        assert_eq!(comp_time(1_000_000_000, 1e9).unwrap(), 1.0);
        assert!(comp_time(100, 2e9).unwrap() < comp_time(100, 1e9).unwrap());
        assert!(comp_time(1, -1.0).is_err());
    }

    #[test]
    fn dwell_checks() {
        assert!(check_dwell(&profile(0.0), 1e12));
        let mut p = profile(0.0);
        p.dwell_time = Some(10.0);
        assert!(check_dwell(&p, 9.9));
        assert!(!check_dwell(&p, 10.1));
    }
}
