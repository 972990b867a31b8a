//! Property tests over seeded random scenarios.

use evsched::analysis::{check_schedule, random_scenario};
use evsched::domain::{load_scenario, scenario_from_json, scenario_to_json, write_scenario};
use evsched::model::{solve_evba, CostToggles, FleetSchedule, PowerMode};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Field {
    Sch,
    Dch,
    Fch,
    Soe,
    Deg,
}

fn field() -> impl Strategy<Value = Field> {
    prop_oneof![
        Just(Field::Sch),
        Just(Field::Dch),
        Just(Field::Fch),
        Just(Field::Soe),
        Just(Field::Deg),
    ]
}

fn slot(fs: &mut FleetSchedule, v: usize, f: Field) -> &mut Vec<f64> {
    let vs = &mut fs.vehicles[v];
    match f {
        Field::Sch => &mut vs.e_sch,
        Field::Dch => &mut vs.e_dch,
        Field::Fch => &mut vs.e_fch,
        Field::Soe => &mut vs.soe,
        Field::Deg => &mut vs.c_deg,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn audit_flags_every_single_value_perturbation(
        seed in 0u64..40,
        v_pick in 0usize..4,
        t in 0usize..24,
        f in field(),
        magnitude in 1e-3f64..2.0,
        upward in any::<bool>(),
    ) {
        let s = random_scenario(seed);
        let mut fs = solve_evba(&s, CostToggles::ALL, PowerMode::Both).unwrap();
        prop_assert!(check_schedule(&s, &fs).unwrap().is_clean());

        // Raising c_deg keeps it above both planes, which is still feasible.
        let delta = match f {
            Field::Deg => -magnitude,
            _ if upward => magnitude,
            _ => -magnitude,
        };
        let v = v_pick % s.vehicles.len();
        slot(&mut fs, v, f)[t] += delta;
        let report = check_schedule(&s, &fs).unwrap();
        prop_assert!(!report.is_clean(), "{f:?} at vehicle {v} step {t} by {delta} went unnoticed");
        prop_assert!(report.violations.iter().all(|x| x.vehicle == s.vehicles[v].id));
    }

    #[test]
    fn scenario_json_round_trips(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let text = scenario_to_json(&s);
        prop_assert_eq!(&scenario_from_json(&text).unwrap(), &s);
        prop_assert_eq!(scenario_to_json(&scenario_from_json(&text).unwrap()), text);
    }
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    for seed in [3, 17, 256] {
        let s = random_scenario(seed);
        write_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }
}
