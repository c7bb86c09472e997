use a3cnp::engine::{run_a3cnp, run_a3cnp_traced, run_baseline_uniform, run_with_oracle, EngineContext, Policy, RunConfig};
use a3cnp::harness::default_fixture;
use a3cnp::model::{Instance, Partition};
use a3cnp::oracle::{RecordedOracle, Recording, SimulatedOracle};

fn instance(clusters: &[Vec<usize>], p: f64, q: f64) -> Instance {
    Instance::new(Partition::from_clusters(clusters).unwrap(), p, q).unwrap()
}

#[test]
fn noiseless_three_items_recovers_truth() {
    let inst = instance(&[vec![1, 2], vec![3]], 1.0, 0.0);
    let r = run_a3cnp(&inst, &RunConfig::default()).unwrap();
    assert!(r.correct);
    assert!(!r.truncated);
    assert_eq!(r.output_partition.to_string(), "{1,2}{3}");
}

#[test]
fn fixture_run_is_correct_and_reproducible() {
    let inst = default_fixture();
    let cfg = RunConfig { seed: 7, ..RunConfig::default() };
    let a = run_a3cnp(&inst, &cfg).unwrap();
    let b = run_a3cnp(&inst, &cfg).unwrap();
    assert!(a.correct);
    assert_eq!(a.stop_time, b.stop_time);
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.counts.iter().sum::<u64>(), a.stop_time);
    assert!(a.final_statistic > a.final_threshold);
}

#[test]
fn baseline_counts_stay_balanced() {
    let inst = instance(&[vec![1, 2], vec![3, 4]], 0.85, 0.15);
    let r = run_baseline_uniform(&inst, &RunConfig::default()).unwrap();
    let (lo, hi) = (r.counts.iter().min().unwrap(), r.counts.iter().max().unwrap());
    assert!(hi - lo <= 1, "round robin counts {:?}", r.counts);
    assert_eq!(r.sg_proxy_at_stop, 1.0);
}

#[test]
fn replaying_a_recording_reproduces_the_run() {
    let inst = instance(&[vec![1, 2, 3], vec![4]], 0.8, 0.2);
    let ctx = EngineContext::new(4).unwrap();
    let cfg = RunConfig { seed: 3, ..RunConfig::default() };
    let mut rec = Recording::new(SimulatedOracle::new(inst.clone(), 3));
    let live = run_with_oracle(&ctx, &cfg, Policy::Tracking, &mut rec, Some(inst.partition()), None).unwrap();

    let mut replay = RecordedOracle::new(4, rec.into_records());
    let again = run_with_oracle(&ctx, &cfg, Policy::Tracking, &mut replay, Some(inst.partition()), None).unwrap();
    assert_eq!(live.stop_time, again.stop_time);
    assert_eq!(live.counts, again.counts);
    assert_eq!(replay.remaining(), 0);
}

#[test]
fn trace_times_are_consecutive() {
    let inst = instance(&[vec![1], vec![2, 3]], 0.9, 0.1);
    let (r, trace) = run_a3cnp_traced(&inst, &RunConfig::default()).unwrap();
    assert_eq!(trace.len() as u64, r.stop_time);
    for (k, step) in trace.iter().enumerate() {
        assert_eq!(step.t, k as u64 + 1);
    }
    assert!(trace.last().unwrap().decision.unwrap().stop);
}

#[test]
fn tiny_budget_truncates() {
    let inst = default_fixture();
    let cfg = RunConfig { max_steps: 40, ..RunConfig::default() };
    let r = run_a3cnp(&inst, &cfg).unwrap();
    assert!(r.truncated);
    assert_eq!(r.stop_time, 40);
}
