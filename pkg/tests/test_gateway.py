"""Backend registry, fan-out merging, and all-or-nothing refinement."""
import pytest

from labelvote import (
    BackendRegistry,
    BackendUnavailable,
    DuplicateBackend,
    FanoutFailed,
    HttpBackend,
    InvalidInput,
    LabelMapError,
    LabelSchema,
    RefineFailed,
    RefineHparams,
    Sample,
    ScriptedBackend,
    predict_fanout,
    refine_all,
)

from helpers import serve_backend

SCHEMA = LabelSchema("sentiment", ("positive", "negative", "neutral"))
LABELS = SCHEMA.labels


def samples(*texts):
    return [Sample(str(i), t) for i, t in enumerate(texts)]


def registry_with(*backends):
    reg = BackendRegistry(SCHEMA)
    for b in backends:
        reg.register(b.backend_id, b)
    return reg


class TestRegistry:
    def test_duplicate_id_rejected(self):
        reg = BackendRegistry(SCHEMA)
        reg.register("a", ScriptedBackend("a", LABELS))
        with pytest.raises(DuplicateBackend):
            reg.register("a", ScriptedBackend("a", LABELS))

    def test_identity_label_mapping(self):
        reg = registry_with(ScriptedBackend("a", ("Positive", "NEGATIVE", "neutral")))
        desc = reg.get("a")
        assert desc.label_map == {"Positive": 0, "NEGATIVE": 1, "neutral": 2}

    def test_explicit_label_map(self):
        backend = ScriptedBackend("a", ("pos", "neg", "neu"))
        reg = BackendRegistry(SCHEMA)
        reg.register("a", backend, label_map={"pos": "positive", "neg": "negative", "neu": "neutral"})
        assert reg.get("a").schema_label_for("neg") == 1

    def test_unmappable_labels_are_listed(self):
        backend = ScriptedBackend("a", ("pos", "negative", "meh"))
        reg = BackendRegistry(SCHEMA)
        with pytest.raises(LabelMapError) as err:
            reg.register("a", backend, label_map={"pos": "positive"})
        assert err.value.offending == ["meh"]
        assert err.value.backend_id == "a"

    def test_registration_order_is_stable(self):
        reg = registry_with(
            ScriptedBackend("z", LABELS), ScriptedBackend("a", LABELS), ScriptedBackend("m", LABELS)
        )
        assert [b.backend_id for b in reg.backends()] == ["z", "a", "m"]


class TestFanout:
    def test_merges_by_registry_order(self):
        reg = registry_with(
            ScriptedBackend("b0", LABELS, default_label="positive"),
            ScriptedBackend("b1", LABELS, default_label="negative"),
            ScriptedBackend("b2", LABELS, default_label="positive"),
        )
        results = predict_fanout(samples("x", "y"), reg)
        assert len(results) == 2
        for res in results:
            assert [p.backend_id for p in res.predictions] == ["b0", "b1", "b2"]
            assert [p.label for p in res.predictions] == [0, 1, 0]
            assert res.failures == ()

    def test_single_failure_becomes_marker(self):
        reg = registry_with(
            ScriptedBackend("ok1", LABELS),
            ScriptedBackend("down", LABELS, fail_predicts=99),
            ScriptedBackend("ok2", LABELS),
        )
        results = predict_fanout(samples("x"), reg, retries=1)
        res = results[0]
        assert [p.backend_id for p in res.predictions] == ["ok1", "ok2"]
        assert [f.backend_id for f in res.failures] == ["down"]

    def test_retry_recovers_a_flaky_backend(self):
        reg = registry_with(ScriptedBackend("flaky", LABELS, fail_predicts=1))
        results = predict_fanout(samples("x"), reg, retries=1)
        assert results[0].failures == ()

    def test_all_backends_down(self):
        reg = registry_with(
            ScriptedBackend("d1", LABELS, fail_predicts=99),
            ScriptedBackend("d2", LABELS, fail_predicts=99),
        )
        with pytest.raises(FanoutFailed):
            predict_fanout(samples("x"), reg, retries=0)

    def test_empty_batch_is_empty(self):
        reg = registry_with(ScriptedBackend("a", LABELS))
        assert predict_fanout([], reg) == []

    def test_undeclared_response_label_is_a_failure(self):
        bad = ScriptedBackend("bad", LABELS, script={"x": "sarcastic"})
        reg = registry_with(bad, ScriptedBackend("good", LABELS))
        res = predict_fanout(samples("x"), reg)[0]
        assert [f.backend_id for f in res.failures] == ["bad"]
        assert "sarcastic" in res.failures[0].reason


class TestRefineAll:
    POOL = [{"text": "t1", "label": "positive"}, {"text": "t2", "label": "negative"}]

    def test_all_versions_bump_exactly_once(self):
        b = [ScriptedBackend(f"b{i}", LABELS) for i in range(3)]
        reg = registry_with(*b)
        responses = refine_all(self.POOL, RefineHparams(), reg)
        assert [r.model_version for r in responses] == [1, 1, 1]
        assert all(d.model_version == 1 for d in reg.backends())
        # every backend saw the identical snapshot
        assert b[0].refine_calls == b[1].refine_calls == b[2].refine_calls

    def test_empty_snapshot_rejected(self):
        reg = registry_with(ScriptedBackend("a", LABELS))
        with pytest.raises(InvalidInput):
            refine_all([], RefineHparams(), reg)

    def test_failure_aborts_without_version_changes(self):
        good = ScriptedBackend("good", LABELS)
        bad = ScriptedBackend("bad", LABELS, fail_refines=1)
        reg = registry_with(bad, good)  # failing backend first: nothing mutates
        with pytest.raises(RefineFailed):
            refine_all(self.POOL, RefineHparams(), reg)
        assert all(d.model_version == 0 for d in reg.backends())
        assert good.refine_calls == []
        # retriable: second attempt succeeds with exactly one bump
        refine_all(self.POOL, RefineHparams(), reg)
        assert all(d.model_version == 1 for d in reg.backends())

    def test_labels_translate_to_backend_vocabulary(self):
        backend = ScriptedBackend("a", ("pos", "neg", "neu"))
        reg = BackendRegistry(SCHEMA)
        reg.register("a", backend, label_map={"pos": "positive", "neg": "negative", "neu": "neutral"})
        refine_all(self.POOL, RefineHparams(), reg)
        sent = backend.refine_calls[0]
        assert sent == [{"text": "t1", "label": "pos"}, {"text": "t2", "label": "neg"}]

    def test_snapshot_label_outside_schema(self):
        reg = registry_with(ScriptedBackend("a", LABELS))
        with pytest.raises(InvalidInput):
            refine_all([{"text": "t", "label": "sideways"}], RefineHparams(), reg)


class TestHttpBackend:
    def test_health_predict_refine_over_the_wire(self):
        inner = ScriptedBackend("inner", LABELS, script={"x": "negative"})
        with serve_backend(inner) as url:
            remote = HttpBackend(url, timeout=3.0)
            info = remote.health()
            assert info.labels == LABELS
            assert info.model_version == 0

            resp = remote.predict(["x", "y"])
            assert [p.label for p in resp.predictions] == ["negative", "positive"]

            ref = remote.refine([{"text": "x", "label": "negative"}], RefineHparams())
            assert ref.model_version == 1
            assert ref.train_loss_after < ref.train_loss_before

    def test_wire_failure_maps_to_backend_unavailable(self):
        remote = HttpBackend("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(BackendUnavailable):
            remote.health()
        with pytest.raises(BackendUnavailable):
            remote.predict(["x"])

    def test_registry_over_http_end_to_end(self):
        inner = ScriptedBackend("inner", LABELS)
        with serve_backend(inner) as url:
            reg = BackendRegistry(SCHEMA)
            reg.register("remote", HttpBackend(url, timeout=3.0))
            res = predict_fanout(samples("a", "b"), reg)
            assert all(r.predictions[0].backend_id == "remote" for r in res)
            refine_all(self.POOL_OK, RefineHparams(), reg)
            assert reg.get("remote").model_version == 1

    POOL_OK = [{"text": "t", "label": "neutral"}]
