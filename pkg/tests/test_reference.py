"""Event-driven consensus vs the straight-line baseline transcription."""

from sparsedag.reference import ReferenceBaseline
from sparsedag.runner import ExperimentConfig, run_experiment_full
from sparsedag.simnet import NetConfig


def replay_and_compare(seed, n=4, rounds=8, rb_mode="echo", gst_ms=0.0,
                       pre_gst_max_delay_ms=0.0):
    cfg = ExperimentConfig(
        variant="baseline", n=n, rounds=rounds, seed=seed, rb_mode=rb_mode,
        timeout_ms=1300.0,
        net=NetConfig(gst_ms=gst_ms, pre_gst_max_delay_ms=pre_gst_max_delay_ms))
    record, validators, shared, net = run_experiment_full(
        cfg, record_schedule=True)
    assert record.audit_ok
    for v in validators:
        schedule = [(t, origin, seq, vertex)
                    for (t, origin, seq, vertex) in shared.schedules[v.idx]
                    if origin != v.idx]
        ref = ReferenceBaseline(v.idx, cfg.n, cfg.f,
                                timeout_us=int(cfg.timeout_ms * 1000),
                                run_tag=shared.run_tag)
        ref.run(schedule, round_cap=v.current_round)
        assert ref.log == v.delivered_log(), \
            f"seed {seed}, validator {v.idx}: logs diverge"
        assert ref.current_round == v.current_round
        own_created = {u.vid for u in v.dag.by_id.values()
                       if u.source == v.idx and u.round >= 1}
        assert {w.vid for w in ref.created} == own_created


def test_reference_matches_on_honest_echo_runs():
    for seed in range(3):
        replay_and_compare(seed)


def test_reference_matches_on_ideal_mode():
    replay_and_compare(11, rb_mode="ideal")


def test_reference_matches_with_pre_gst_delays():
    replay_and_compare(23, gst_ms=1500.0, pre_gst_max_delay_ms=1200.0)
