"""Pool threshold arithmetic and the pause/refine/resume state machine."""
import pytest

from labelvote import (
    BackendRegistry,
    HardSample,
    IllegalState,
    InvalidInput,
    LabelSchema,
    RefineFailed,
    RefinementScheduler,
    Resolver,
    ScriptedBackend,
    SchedulerState,
)

SCHEMA = LabelSchema("sentiment", ("positive", "negative", "neutral"))


def hard(i: int) -> HardSample:
    return HardSample(
        sample_id=f"h{i}",
        text=f"hard text {i}",
        votes=(),
        expert_label="positive",
        resolver=Resolver.LLM,
    )


def registry(k=3):
    reg = BackendRegistry(SCHEMA)
    for i in range(k):
        reg.register(f"b{i}", ScriptedBackend(f"b{i}", SCHEMA.labels))
    return reg


def drive(scheduler, registry_, n):
    """Push n samples, running each triggered cycle inline like the runner."""
    for i in range(n):
        _, triggered = scheduler.push(hard(i))
        if triggered:
            scheduler.run_cycle(registry_)


class TestPush:
    def test_trigger_fires_exactly_at_threshold(self):
        s = RefinementScheduler(beta=5)
        flags = [s.push(hard(i))[1] for i in range(5)]
        assert flags == [False, False, False, False, True]
        assert s.state is SchedulerState.REFINE_PENDING

    def test_push_requires_annotating_state(self):
        s = RefinementScheduler(beta=2)
        s.push(hard(0))
        s.push(hard(1))  # triggers, state refine_pending
        with pytest.raises(IllegalState):
            s.push(hard(2))

    def test_unresolved_entry_rejected(self):
        s = RefinementScheduler(beta=2)
        bad = HardSample("x", "t", (), expert_label="", resolver=Resolver.LLM)
        with pytest.raises(InvalidInput):
            s.push(bad)

    def test_threshold_must_be_positive(self):
        with pytest.raises(InvalidInput):
            RefinementScheduler(beta=0)


class TestRunCycle:
    def test_cycle_drains_pool_and_bumps_versions(self):
        s = RefinementScheduler(beta=5)
        reg = registry()
        drive(s, reg, 5)
        assert s.pool_size() == 0
        assert s.archived_total() == 5
        assert len(s.cycles) == 1
        rec = s.cycles[0]
        assert rec.cycle_index == 1
        assert rec.snapshot_size == 5
        assert all(b.version_before == 0 and b.version_after == 1 for b in rec.backends)
        assert s.state is SchedulerState.ANNOTATING

    def test_run_cycle_needs_pending_state(self):
        s = RefinementScheduler(beta=5)
        with pytest.raises(IllegalState):
            s.run_cycle(registry())

    def test_175_samples_beta_50_gives_3_cycles_and_25_residual(self):
        s = RefinementScheduler(beta=50)
        reg = registry()
        drive(s, reg, 175)
        assert len(s.cycles) == 3
        assert [c.snapshot_size for c in s.cycles] == [50, 50, 50]
        assert [c.cycle_index for c in s.cycles] == [1, 2, 3]
        assert s.pool_size() == 25
        assert all(d.model_version == 3 for d in reg.backends())

    def test_no_sample_in_two_snapshots(self):
        s = RefinementScheduler(beta=10)
        reg = registry()
        drive(s, reg, 40)
        ids = [x.sample_id for x in s.archive]
        assert len(ids) == len(set(ids)) == 40

    def test_failed_cycle_is_retriable_with_one_bump(self):
        s = RefinementScheduler(beta=3)
        reg = BackendRegistry(SCHEMA)
        flaky = ScriptedBackend("flaky", SCHEMA.labels, fail_refines=1)
        reg.register("flaky", flaky)
        reg.register("ok", ScriptedBackend("ok", SCHEMA.labels))
        for i in range(3):
            s.push(hard(i))
        with pytest.raises(RefineFailed):
            s.run_cycle(reg)
        assert s.state is SchedulerState.REFINE_PENDING
        assert s.pool_size() == 3
        assert all(d.model_version == 0 for d in reg.backends())
        # retry succeeds: exactly one version bump in total
        rec = s.run_cycle(reg)
        assert all(b.version_after == 1 for b in rec.backends)
        assert s.pool_size() == 0

    def test_transition_log_word_is_legal(self):
        s = RefinementScheduler(beta=2)
        reg = registry(2)
        drive(s, reg, 7)  # 3 cycles + 1 residual
        word = s.transition_log
        assert word[0] == "annotating"
        assert word == ["annotating"] + ["refine_pending", "refining", "annotating"] * 3

    def test_failed_cycle_does_not_pollute_the_log(self):
        s = RefinementScheduler(beta=1)
        reg = BackendRegistry(SCHEMA)
        reg.register("f", ScriptedBackend("f", SCHEMA.labels, fail_refines=1))
        s.push(hard(0))
        with pytest.raises(RefineFailed):
            s.run_cycle(reg)
        assert s.transition_log == ["annotating"]
        s.run_cycle(reg)
        assert s.transition_log == ["annotating", "refine_pending", "refining", "annotating"]


class TestSerialization:
    def test_round_trip_preserves_pool_and_cycles(self):
        s = RefinementScheduler(beta=4)
        reg = registry()
        drive(s, reg, 10)  # 2 cycles, 2 residual
        data = s.to_dict()

        s2 = RefinementScheduler(beta=4)
        s2.restore(data)
        assert s2.pool_size() == 2
        assert [c.snapshot_size for c in s2.cycles] == [4, 4]
        assert s2.transition_log == s.transition_log
        assert [p.sample_id for p in s2.pool] == [p.sample_id for p in s.pool]

    def test_restore_rejects_mismatched_threshold(self):
        s = RefinementScheduler(beta=4)
        with pytest.raises(InvalidInput):
            RefinementScheduler(beta=5).restore(s.to_dict())
