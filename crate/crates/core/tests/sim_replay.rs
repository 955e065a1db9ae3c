use std::path::PathBuf;

use prstl::formula::parse;
use prstl::sim::{self, monitor, replay_monitored, run_mission, ExecutionTrace, Scenario};
use proptest::prelude::*;

fn bundled(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"));
    Scenario::load(&path).unwrap()
}

fn small(seed: u64) -> Scenario {
    let mut s = bundled("search");
    s.seed = seed;
    s.horizon = 12;
    s.beam_width = 3;
    s
}

#[test]
fn bundled_scenarios_prepare() {
    for name in ["surveillance", "search", "surveillance_full", "search_full"] {
        let s = bundled(name);
        let p = s.prepare().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(p.formula.check_synthesizable().is_empty(), "{name}");
        assert!(s.horizon as u64 >= p.formula.horizon(), "{name}");
        let text = s.to_toml();
        assert_eq!(Scenario::from_toml(&text).unwrap(), s, "{name}");
    }
}

#[test]
fn written_trace_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, files) = sim::run(&small(3), dir.path()).unwrap();
    let loaded = ExecutionTrace::load(&files.trace).unwrap();
    assert_eq!(loaded.to_ndjson(), trace.to_ndjson());
    let timings = std::fs::read_to_string(&files.timings).unwrap();
    assert_eq!(timings.lines().count(), trace.timings.len() + 1);
}

#[test]
fn monitor_rows_agree_with_live_values_at_the_end() {
    let s = small(4);
    let trace = run_mission(&s).unwrap();
    let formula = parse(&s.formula).unwrap();
    let report = monitor(&trace, &formula).unwrap();
    assert_eq!(report.rows.len(), trace.steps.len());
    assert_eq!(report.rows[0].value, Some(trace.summary.final_monitored));
}

#[test]
fn truncated_trace_is_rejected() {
    let text = run_mission(&small(5)).unwrap().to_ndjson();
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 1].join("\n");
    assert!(ExecutionTrace::from_ndjson(&cut).is_err());
    let garbled = text.replacen("\"kind\":\"step\"", "\"kind\":\"stp\"", 1);
    assert!(ExecutionTrace::from_ndjson(&garbled).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_reproducible_and_replayable(seed in any::<u64>()) {
        let s = small(seed);
        let a = run_mission(&s).unwrap();
        let b = run_mission(&s).unwrap();
        prop_assert_eq!(a.to_ndjson(), b.to_ndjson());

        let formula = parse(&s.formula).unwrap();
        let live: Vec<f64> = a.steps.iter().map(|st| st.monitored).collect();
        let replayed = replay_monitored(&ExecutionTrace::from_ndjson(&a.to_ndjson()).unwrap(), &formula).unwrap();
        prop_assert_eq!(live, replayed);
    }

    #[test]
    fn kinematics_and_bounds_hold_along_the_run(seed in any::<u64>()) {
        let s = small(seed);
        let trace = run_mission(&s).unwrap();
        let area = trace.header.area;
        for w in trace.steps.windows(2) {
            let (p, q) = (&w[0].agent, &w[1].agent);
            let moved = ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
            prop_assert!((moved - trace.header.airspeed).abs() < 1e-9);
            let control = w[0].plan.as_ref().unwrap().control;
            prop_assert!(trace.header.controls.contains(&control));
        }
        for st in &trace.steps {
            prop_assert!(st.truth.iter().all(|p| area.contains(*p)));
            prop_assert!((0.0..=1.0).contains(&st.monitored));
        }
        prop_assert!(trace.summary.within_complexity_bound);
        prop_assert!(trace.steps.last().unwrap().beliefs.is_some());
    }
}
