//! The shipped three-vehicle example and a seeded random scenario generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::prices::{generate_price_series, Volatility};
use crate::domain::{scenario_from_json, ChargingPoint, Horizon, Scenario, Vehicle};

const EXAMPLE_JSON: &str = include_str!("../../data/example_3ev.json");

/// Three vehicles (20, 40 and 60 kWh), each with a home, work and leisure
/// session and trips in between. No prices are attached.
pub fn example_scenario() -> Scenario {
    scenario_from_json(EXAMPLE_JSON).expect("bundled example is valid")
}

pub fn example_json() -> &'static str {
    EXAMPLE_JSON
}

const HOME: usize = 0;
const WORK: usize = 1;
const LEISURE: usize = 2;
const FAST: usize = 3;

/// A valid hourly 24-step scenario with 1 to 4 vehicles and a price series
/// of random volatility attached. Every itinerary starts and ends at home
/// with at least five plugged-in steps at the end of the day; daytime stops
/// are at work, leisure or, occasionally, a single DC fast step.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fe7);
    let h = Horizon::default();
    let n = h.step_count;
    let nv = rng.random_range(1..=4);
    let vehicles: Vec<Vehicle> = (0..nv)
        .map(|i| {
            let cap = (rng.random_range(20.0..60.0_f64) * 2.0).round() / 2.0;
            let mut v = Vehicle::new(format!("EV{}", i + 1), cap, &h);
            let obc_kw = [7.4, 10.0, 11.0][rng.random_range(0..3)];
            v.obc_max_kwh_per_step = h.kw_to_kwh_per_step(obc_kw);
            v.obc_assumed = false;
            v
        })
        .collect();
    let cps = vec![
        ChargingPoint::home("home", &h),
        ChargingPoint::work("work", &h),
        ChargingPoint::leisure("leisure", &h),
        ChargingPoint::dc_fast("dc_fast", &h),
    ];
    let mut s = Scenario::new(h, vehicles, cps);

    for vi in 0..nv {
        let cap = s.vehicles[vi].capacity_kwh;
        let trip_step = |s: &mut Scenario, t: usize, rng: &mut ChaCha8Rng| {
            let e = cap * rng.random_range(0.02..0.10);
            s.trips.set(vi, t, (e * 100.0).round() / 100.0);
        };
        let first_depart = rng.random_range(5..=8);
        s.connect(vi, HOME, 0, first_depart);
        let mut t = first_depart + 1;
        let stops = rng.random_range(1..=2);
        for _ in 0..stops {
            let drive = rng.random_range(1..=2);
            let fast = rng.random_bool(0.15);
            let stay = if fast { 1 } else { rng.random_range(3..=6) };
            // Leave room for the final trip and home session.
            if t + drive + stay + 2 + 5 > n {
                break;
            }
            for k in 0..drive {
                trip_step(&mut s, t + k, &mut rng);
            }
            t += drive;
            let cp = if fast {
                FAST
            } else if rng.random_bool(0.6) {
                WORK
            } else {
                LEISURE
            };
            s.connect(vi, cp, t, t + stay - 1);
            t += stay;
        }
        let drive = rng.random_range(1..=2).min(n - 5 - t);
        for k in 0..drive {
            trip_step(&mut s, t + k, &mut rng);
        }
        t += drive;
        s.connect(vi, HOME, t, n - 1);
    }

    let vol = Volatility::ALL[rng.random_range(0..3)];
    let prices = generate_price_series(vol, seed, n, h.step_hours);
    s.with_prices(prices)
        .expect("series built for this horizon")
}
