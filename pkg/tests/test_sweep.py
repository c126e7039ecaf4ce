"""Grid sweeps over committee size and refinement threshold."""
import json
import random

import pytest

from labelvote import (
    InvalidInput,
    LabelSchema,
    PriceEntry,
    PriceTable,
    Sample,
    stub_world,
)
from labelvote.sweep import render_sweep_json, render_sweep_text, run_sweep

SCHEMA = LabelSchema("sentiment", ("positive", "negative", "neutral"))


def make_samples(n, seed=3):
    rng = random.Random(seed)
    return [
        Sample(f"s{i}", f"sweep document {i}", gold_label=rng.randrange(3)) for i in range(n)
    ]


def factory(samples, **kw):
    def build(k, beta, out_path):
        run = stub_world(samples, SCHEMA, out_path, k=k, beta=beta, **kw)
        return run, samples

    return build


class TestRunSweep:
    def test_rows_cover_the_grid(self, tmp_path):
        samples = make_samples(60)
        rows = run_sweep([2, 3], [10, 30], factory(samples, batch_size=20), tmp_path)
        assert [(r["k"], r["beta"]) for r in rows] == [(2, 10), (2, 30), (3, 10), (3, 30)]
        for r in rows:
            assert set(r) == {"k", "beta", "accuracy", "llm_calls", "reviews", "cycles"}
            assert 0.0 <= r["accuracy"] <= 1.0
            assert r["llm_calls"] >= r["reviews"] >= 0
        # a lower pool threshold can only mean at least as many cycles
        assert rows[0]["cycles"] >= rows[1]["cycles"]

    def test_each_cell_gets_its_own_output_file(self, tmp_path):
        samples = make_samples(30)
        run_sweep([2], [10, 20], factory(samples, batch_size=30), tmp_path)
        assert (tmp_path / "sweep_k2_b10.jsonl").exists()
        assert (tmp_path / "sweep_k2_b20.jsonl").exists()

    def test_prices_add_cost_column(self, tmp_path):
        samples = make_samples(30)
        prices = PriceTable({"scripted": PriceEntry(15.0, 60.0)})
        rows = run_sweep([3], [50], factory(samples, batch_size=30), tmp_path, prices=prices)
        assert "cost_usd" in rows[0]
        float(rows[0]["cost_usd"])  # parses as money

    def test_empty_grid_rejected(self, tmp_path):
        with pytest.raises(InvalidInput):
            run_sweep([], [10], factory(make_samples(5)), tmp_path)


class TestRendering:
    ROWS_BOTH = [
        {"k": 2, "beta": 500, "accuracy": 0.911, "llm_calls": 40, "reviews": 40, "cycles": 1},
        {"k": 2, "beta": 1000, "accuracy": 0.905, "llm_calls": 38, "reviews": 38, "cycles": 0},
        {"k": 3, "beta": 500, "accuracy": 0.942, "llm_calls": 31, "reviews": 31, "cycles": 1},
        {"k": 3, "beta": 1000, "accuracy": 0.94, "llm_calls": 30, "reviews": 30, "cycles": 0},
    ]

    def test_matrix_layout_when_both_vary(self):
        text = render_sweep_text(self.ROWS_BOTH)
        lines = text.splitlines()
        assert lines[0] == "accuracy by committee size and refinement threshold"
        assert lines[1].split() == ["k\\beta", "500", "1000"]
        assert lines[2].split() == ["2", "91.1", "90.5"]
        assert lines[3].split() == ["3", "94.2", "94.0"]

    def test_single_k_layout(self):
        rows = [r for r in self.ROWS_BOTH if r["k"] == 3]
        lines = render_sweep_text(rows).splitlines()
        assert lines[0] == "accuracy by refinement threshold (k=3)"
        assert lines[1].split() == ["beta", "500", "1000"]
        assert lines[2].split() == ["Acc", "94.2", "94.0"]

    def test_single_beta_layout(self):
        rows = [r for r in self.ROWS_BOTH if r["beta"] == 500]
        lines = render_sweep_text(rows).splitlines()
        assert lines[0] == "accuracy by committee size (beta=500)"
        assert lines[1].split() == ["k", "2", "3"]
        assert lines[2].split() == ["Acc", "91.1", "94.2"]

    def test_detail_table_lists_every_cell(self):
        lines = render_sweep_text(self.ROWS_BOTH).splitlines()
        header_at = next(i for i, l in enumerate(lines) if l.split()[:2] == ["k", "beta"])
        assert lines[header_at].split() == ["k", "beta", "acc%", "reviews", "llm_calls", "cycles"]
        assert len(lines) - header_at - 1 == len(self.ROWS_BOTH)

    def test_cost_column_appears_when_present(self):
        rows = [dict(r, cost_usd="1.23") for r in self.ROWS_BOTH]
        text = render_sweep_text(rows)
        assert "cost_usd" in text
        assert "1.23" in text

    def test_json_rendering_round_trips(self):
        parsed = json.loads(render_sweep_json(self.ROWS_BOTH))
        assert parsed == self.ROWS_BOTH


class TestOracleWorld:
    def test_stub_world_reviews_resolve_to_gold(self, tmp_path):
        samples = make_samples(80)
        run = stub_world(
            samples, SCHEMA, tmp_path / "o.jsonl", k=3, beta=1000, backend_accuracy=0.7,
            batch_size=40,
        )
        run.run(samples)
        from labelvote import read_output

        gold = {s.id: s.gold_label for s in samples}
        for rec in read_output(run.out_path):
            if rec["source"] == "llm_review":
                assert rec["label_index"] == gold[rec["sample_id"]]
        assert run.counters.reviewed_llm > 0
