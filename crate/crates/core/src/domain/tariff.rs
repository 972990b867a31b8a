use serde::{Deserialize, Serialize};

use super::{ChargingPoint, Horizon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TariffBand {
    Low,
    High,
}

/// Two-band time-of-use calendar. The low band covers the night window
/// `[night_start_hour, night_end_hour)`, wrapping past midnight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TariffCalendar {
    pub night_start_hour: u32,
    pub night_end_hour: u32,
    bands: Vec<TariffBand>,
}

impl TariffCalendar {
    pub fn new(night_start_hour: u32, night_end_hour: u32, horizon: &Horizon) -> Self {
        let bands = (0..horizon.step_count)
            .map(|t| {
                let h = horizon.start_hour(t);
                let (s, e) = (night_start_hour as f64, night_end_hour as f64);
                let night = if s <= e {
                    h >= s && h < e
                } else {
                    h >= s || h < e
                };
                if night {
                    TariffBand::Low
                } else {
                    TariffBand::High
                }
            })
            .collect();
        Self {
            night_start_hour,
            night_end_hour,
            bands,
        }
    }

    /// Night band 22:00 to 06:00.
    pub fn default_for(horizon: &Horizon) -> Self {
        Self::new(22, 6, horizon)
    }

    pub fn band(&self, t: usize) -> TariffBand {
        self.bands[t]
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// Grid fee (EUR/kWh) charged at `cp` during step `t`.
pub fn grid_fee(cp: &ChargingPoint, t: usize, calendar: &TariffCalendar) -> f64 {
    match calendar.band(t) {
        TariffBand::Low => cp.grid_fee_low_eur_per_kwh,
        TariffBand::High => cp.grid_fee_high_eur_per_kwh,
    }
}
