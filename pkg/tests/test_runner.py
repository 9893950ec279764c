"""Grid runner: config round-trip, resume, determinism, emitted reports."""

import numpy as np
import pytest

from simplexvqc.data import write_synthetic_idx
from simplexvqc.runner import (RESULT_COLUMNS, grid_cells, main,
                               parse_config, run_grid, serialize_config)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return write_synthetic_idx(root, 24, 8, seed=13)


def config_text(corpus, out_dir, seeds="0,1"):
    return f"""
[dataset.digits]
train_images = {corpus['train_images']}
train_labels = {corpus['train_labels']}
test_images = {corpus['test_images']}
test_labels = {corpus['test_labels']}

[grid]
k = 3
blocks = SO4
methods = edge,vertex
seeds = {seeds}

[circuit]
layers = 1

[optimizer]
epochs = 1
batch_size = 16

[sampling]
shots = 20

[data]
train_per_class = 24
test_per_class = 8

[output]
directory = {out_dir}
"""


class TestConfig:
    def test_round_trip_is_canonical(self, corpus, tmp_path):
        text = config_text(corpus, tmp_path / "out")
        cfg = parse_config(text)
        canonical = serialize_config(cfg)
        again = parse_config(canonical)
        assert serialize_config(again) == canonical
        assert again == cfg

    def test_grid_arithmetic(self, corpus, tmp_path):
        cfg = parse_config(config_text(corpus, tmp_path / "out"))
        assert len(grid_cells(cfg)) == 4   # 1 dataset x 1 K x 1 block x 2 x 2

    def test_invalid_values_reported_with_field(self, corpus, tmp_path):
        text = config_text(corpus, tmp_path / "out").replace(
            "blocks = SO4", "blocks = SO5")
        with pytest.raises(ValueError, match="grid.blocks"):
            parse_config(text)
        text = config_text(corpus, tmp_path / "out").replace(
            "seeds = 0,1", "seeds =")
        with pytest.raises(ValueError, match="grid.seeds"):
            parse_config(text)

    def test_missing_dataset_section(self):
        with pytest.raises(ValueError, match="dataset"):
            parse_config("[grid]\nseeds = 0\n")


class TestRunGrid:
    def test_rows_resume_and_determinism(self, corpus, tmp_path):
        out = tmp_path / "out"
        cfg = parse_config(config_text(corpus, out))
        result = run_grid(cfg, log=lambda *_: None)
        assert result.all_ok
        assert len(result.rows) == 4
        first = (out / "results.csv").read_bytes()

        # journaled cells are reused byte-for-byte on resume
        journals = sorted((out / "cells").glob("*.json"))
        stamps = {p: p.stat().st_mtime_ns for p in journals}
        result2 = run_grid(cfg, log=lambda *_: None)
        assert result2.all_ok
        assert (out / "results.csv").read_bytes() == first
        assert {p: p.stat().st_mtime_ns for p in journals} == stamps

        # a fresh directory reproduces the csv byte-identically
        out2 = tmp_path / "out2"
        cfg2 = parse_config(config_text(corpus, out2))
        run_grid(cfg2, log=lambda *_: None)
        assert (out2 / "results.csv").read_bytes() == first

    def test_aggregate_means_match_rows(self, corpus, tmp_path):
        out = tmp_path / "agg"
        cfg = parse_config(config_text(corpus, out))
        result = run_grid(cfg, log=lambda *_: None)
        rows = [r for r in result.rows if r["method"] == "edge"]
        want = float(np.mean([r["c_m"] for r in rows]))
        lines = (out / "aggregate.csv").read_text().splitlines()
        header = lines[1].split(",")
        edge_line = next(l for l in lines[2:] if ",edge," in l).split(",")
        got = float(edge_line[header.index("c_m_mean")])
        assert got == pytest.approx(want, abs=1e-12)

    def test_cell_filter(self, corpus, tmp_path):
        out = tmp_path / "filtered"
        cfg = parse_config(config_text(corpus, out))
        result = run_grid(cfg, cell_filter={"method": {"edge"}, "seed": {"0"}},
                          log=lambda *_: None)
        assert len(result.rows) == 1
        assert result.rows[0]["method"] == "edge"

    def test_partial_then_full(self, corpus, tmp_path):
        out = tmp_path / "partial"
        cfg = parse_config(config_text(corpus, out))
        run_grid(cfg, cell_filter={"seed": {"0"}}, log=lambda *_: None)
        result = run_grid(cfg, log=lambda *_: None)   # completes the rest
        assert len(result.rows) == 4
        text = (out / "results.csv").read_text().splitlines()
        assert text[1] == ",".join(RESULT_COLUMNS)
        assert len(text) == 6   # comment, header, 4 rows

    def test_emitted_artifacts(self, corpus, tmp_path):
        out = tmp_path / "plots"
        cfg = parse_config(config_text(corpus, out, seeds="0"))
        result = run_grid(cfg, log=lambda *_: None)
        rid = result.rows[0]["run_id"]
        grads = np.loadtxt(out / "grads" / f"{rid}.csv", delimiter=",",
                           skiprows=1)
        assert grads.shape == (result.rows[0]["n_params"], 2)
        plurality = np.loadtxt(out / "conf" / f"{rid}_plurality.csv",
                               delimiter=",", ndmin=2)
        assert plurality.shape == (3, 4)
        series = sorted((out / "plots").glob("grads_*.csv"))
        assert len(series) == 2
        data = np.loadtxt(series[0], delimiter=",", skiprows=1)
        assert data.shape[0] == result.rows[0]["n_params"]
        heat = np.loadtxt(out / "plots" / "confusion_digits_k3_edge.csv",
                          delimiter=",", skiprows=1)
        assert heat.shape == (3 * 4, 4)
        curves = (out / "plots" / "tempering_curves.csv").read_text().splitlines()
        header = curves[0].split(",")
        first = [float(v) for v in curves[1].split(",")]
        last = [float(v) for v in curves[-1].split(",")]
        for col in (1, 2, 3):   # logistic, erf, gudermannian at x = +-1
            assert first[col] == pytest.approx(cfg.min_grad, abs=1e-6)
            assert last[col] == pytest.approx(cfg.min_grad, abs=1e-6)


class TestCli:
    def test_exit_codes_and_output_override(self, corpus, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(config_text(corpus, tmp_path / "ignored",
                                        seeds="0"))
        out = tmp_path / "cli_out"
        code = main([str(cfg_path), "--output", str(out),
                     "--filter", "method=edge"])
        assert code == 0
        assert (out / "results.csv").exists()

    def test_missing_dataset_fails_nonzero(self, corpus, tmp_path):
        text = config_text(corpus, tmp_path / "bad").replace(
            str(corpus["train_images"]), str(tmp_path / "nope"))
        cfg_path = tmp_path / "broken.cfg"
        cfg_path.write_text(text)
        assert main([str(cfg_path)]) == 1

    def test_bad_filter_key(self, corpus, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(config_text(corpus, tmp_path / "x", seeds="0"))
        with pytest.raises(SystemExit):
            main([str(cfg_path), "--filter", "flavor=spicy"])
