use mccst::generate::{demo_scenario, sweep_scenario};
use mccst::scenario_file::{load_scenario, serialize_scenario};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_scenarios_round_trip(seed in 0u64..1_000_000, n in 2usize..40, k in 1usize..=4, steps in 0usize..3000) {
        let s = sweep_scenario(seed, n, k, steps).unwrap();
        let text = serialize_scenario(&s).unwrap();
        let back = load_scenario(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_scenario(&back).unwrap(), text);
    }
}

#[test]
fn demo_document_round_trips() {
    let s = demo_scenario(3).unwrap();
    assert_eq!(load_scenario(&serialize_scenario(&s).unwrap()).unwrap(), s);
}
