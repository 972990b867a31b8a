//! Synthetic day-ahead price curves of graded volatility.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::domain::PriceSeries;

/// Mean of every generated series, EUR/kWh.
pub const MEAN_PRICE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Volatility {
    Low,
    Medium,
    High,
}

impl Volatility {
    pub const ALL: [Self; 3] = [Self::Low, Self::Medium, Self::High];

    /// Target standard deviation, EUR/kWh.
    pub fn std_dev(self) -> f64 {
        match self {
            Self::Low => 0.004,
            Self::Medium => 0.012,
            Self::High => 0.024,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

impl fmt::Display for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Volatility {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown volatility `{s}`, expected low, medium or high"))
    }
}

/// Standardized hourly shape: morning and evening peaks plus seeded noise,
/// scaled to zero mean and unit sample standard deviation.
fn standard_shape(seed: u64, steps: usize, step_hours: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump = |h: f64, centre: f64, width: f64| {
        let d = (h - centre).abs().min(24.0 - (h - centre).abs());
        (-0.5 * (d / width).powi(2)).exp()
    };
    let raw: Vec<f64> = (0..steps)
        .map(|t| {
            let h = (t as f64 * step_hours).rem_euclid(24.0);
            let noise: f64 = StandardNormal.sample(&mut rng);
            0.8 * bump(h, 8.0, 2.0) + 1.0 * bump(h, 19.0, 2.5) + 0.35 * noise
        })
        .collect();
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    raw.iter()
        .map(|x| (x - mean) / sd.max(f64::MIN_POSITIVE))
        .collect()
}

/// Hourly 24-step series with mean [`MEAN_PRICE`] and the volatility's
/// standard deviation. All three volatilities share one shape per seed.
pub fn generate_price_set(volatility: Volatility, seed: u64) -> PriceSeries {
    generate_price_series(volatility, seed, 24, 1.0)
}

pub fn generate_price_series(
    volatility: Volatility,
    seed: u64,
    steps: usize,
    step_hours: f64,
) -> PriceSeries {
    let z = standard_shape(seed, steps, step_hours);
    let prices = z
        .iter()
        .map(|z| MEAN_PRICE + volatility.std_dev() * z)
        .collect();
    PriceSeries::new(volatility.label(), prices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_targets() {
        for seed in [1, 7, 99] {
            for vol in Volatility::ALL {
                let p = generate_price_set(vol, seed);
                assert_eq!(p.len(), 24);
                assert!((p.mean() - MEAN_PRICE).abs() < 1e-12);
                assert!((p.std_dev() - vol.std_dev()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed_and_shared_shape() {
        assert_eq!(
            generate_price_set(Volatility::High, 3),
            generate_price_set(Volatility::High, 3)
        );
        assert_ne!(
            generate_price_set(Volatility::High, 3),
            generate_price_set(Volatility::High, 4)
        );
        let lo = generate_price_set(Volatility::Low, 5);
        let hi = generate_price_set(Volatility::High, 5);
        for (a, b) in lo.eur_per_kwh.iter().zip(&hi.eur_per_kwh) {
            assert!(((a - MEAN_PRICE) * 6.0 - (b - MEAN_PRICE)).abs() < 1e-12);
        }
    }

    #[test]
    fn evening_peak_above_night_on_average() {
        let mut evening = 0.0;
        let mut night = 0.0;
        for seed in 0..20 {
            let p = generate_price_set(Volatility::Medium, seed).eur_per_kwh;
            evening += p[19];
            night += p[3];
        }
        assert!(evening > night);
    }
}
