import json

import numpy as np
import pytest
from click.testing import CliRunner

from alrbench import cli, selectors
from alrbench.dataset import Dataset
from alrbench.harness import (ExperimentConfig, ResultRecord, _run_cell,
                              derive_seed, emit, read_results_csv,
                              run_and_emit, run_experiment, summarize)


def small_config(tmp_path, **kw):
    base = dict(datasets=("synthetic-mixture",), methods=("RS",),
                models=("Ridge",), m_grid=(5, 6), runs=2, master_seed=7,
                output_dir=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


def make_records(spec):
    """spec: {(method, run, M): rmse}; cc mirrors 1 - rmse/10."""
    return [ResultRecord(dataset="d", method=meth, model="Ridge", param=0.5,
                         run=run, M=m, rmse=v, cc=1.0 - v / 10.0)
            for (meth, run, m), v in spec.items()]


class TestRunExperiment:
    def test_cartesian_record_count(self, tmp_path):
        config = small_config(tmp_path)
        records, failures = run_experiment(config)
        assert len(records) == 4  # 1 dataset x 1 method x 1 model x 2 runs x 2 Ms
        assert failures == []
        keys = {(r.dataset, r.method, r.model, r.param, r.run, r.M)
                for r in records}
        assert len(keys) == 4

    def test_all_methods_and_models_run(self, tmp_path):
        config = small_config(
            tmp_path, methods=("RS", "P-ALICE", "GSx", "RD", "IRD", "ID"),
            models=("Ridge", "LASSO", "LinearSVR", "OLS"), runs=1,
            m_grid=(5,))
        records, failures = run_experiment(config)
        assert failures == []
        assert len(records) == 6 * 4
        assert all(np.isfinite(r.rmse) and np.isfinite(r.cc) for r in records)

    def test_method_set_does_not_perturb_others(self, tmp_path):
        solo = run_experiment(small_config(tmp_path))[0]
        both = run_experiment(small_config(tmp_path,
                                           methods=("RS", "GSx")))[0]
        both_rs = [r for r in both if r.method == "RS"]
        assert [(r.run, r.M, r.rmse, r.cc) for r in solo] == \
            [(r.run, r.M, r.rmse, r.cc) for r in both_rs]

    def test_selection_shared_across_models(self, tmp_path):
        # identical selections feed all models: the IRD diagnostics embedded
        # in extra must match across model rows of the same (run, M)
        config = small_config(tmp_path, methods=("IRD",),
                              models=("Ridge", "LASSO"), runs=1, m_grid=(6,))
        records, _ = run_experiment(config)
        extras = [{k: v for k, v in r.extra.items()
                   if k in ("case", "sweeps", "cycle_detected")}
                  for r in records]
        assert extras[0] == extras[1]

    def test_parallel_equals_serial(self, tmp_path):
        serial = run_experiment(small_config(tmp_path, runs=3))[0]
        parallel = run_experiment(small_config(tmp_path, runs=3, jobs=2))[0]
        assert [(r.run, r.M, r.rmse) for r in serial] == \
            [(r.run, r.M, r.rmse) for r in parallel]

    def test_unknown_dataset_logged_not_raised(self, tmp_path):
        config = small_config(tmp_path,
                              datasets=("synthetic-mixture", "Yacht"))
        records, failures = run_experiment(config)
        assert len(records) == 4
        assert any(f.get("dataset") == "Yacht" and f.get("stage") == "load"
                   for f in failures)

    def test_seed_derivation_is_pure(self):
        a = derive_seed(3, "ds", 0, "RS", 5)
        b = derive_seed(3, "ds", 0, "RS", 5)
        c = derive_seed(3, "ds", 0, "RS", 6)
        assert a == b and a != c

    def test_config_validation(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, runs=0)
        with pytest.raises(ValueError):
            small_config(tmp_path, m_grid=(6, 5))
        with pytest.raises(ValueError):
            small_config(tmp_path, m_grid=(1, 5))
        with pytest.raises(ValueError):
            small_config(tmp_path, methods=("RS", "BOGUS"))
        with pytest.raises(ValueError):
            small_config(tmp_path, models=("Ridge", "QDA"))
        with pytest.raises(ValueError):
            small_config(tmp_path, normalize_on="test")

    def test_pool_only_normalization_runs(self, tmp_path):
        records, failures = run_experiment(
            small_config(tmp_path, normalize_on="pool"))
        assert failures == [] and len(records) == 4

    def test_palice_weighted_ridge_flag_changes_palice_only(self, tmp_path):
        base = run_experiment(small_config(
            tmp_path, methods=("RS", "P-ALICE"), runs=1, m_grid=(8, 9)))[0]
        weighted = run_experiment(small_config(
            tmp_path, methods=("RS", "P-ALICE"), runs=1, m_grid=(8, 9),
            palice_weighted_ridge=True))[0]
        pick = lambda rs, m: [(r.M, r.rmse) for r in rs if r.method == m]
        assert pick(base, "RS") == pick(weighted, "RS")
        assert pick(base, "P-ALICE") != pick(weighted, "P-ALICE")

    def test_gsx_prefix_consistency_on_harness_pools(self):
        # cross-check on the exact pools the runner builds
        from alrbench.dataset import load_dataset, normalize, split_pool_test
        ds = load_dataset("synthetic-mixture")
        split = split_pool_test(ds.X.shape[0], 0.5,
                                derive_seed(7, ds.name, 0, "split"))
        pool = normalize(ds.X)[0][split.pool_indices]
        prev = selectors.select_gsx(pool, 5).indices
        for m in range(6, 16):
            cur = selectors.select_gsx(pool, m).indices
            assert cur[:m - 1] == prev
            prev = cur

    def test_m_beyond_pool_logged_not_fatal(self):
        ds = Dataset(name="tiny", X=np.random.default_rng(1).normal(size=(8, 2)),
                     y=np.random.default_rng(2).normal(size=8),
                     feature_names=["a", "b"])
        config = ExperimentConfig(datasets=("tiny",), methods=("RS",),
                                  models=("Ridge",), m_grid=(3, 9), runs=1)
        records, failures = _run_cell(ds, config, run=0)  # pool has 4 rows
        assert [r.M for r in records] == [3]
        assert len(failures) == 1 and "exceeds pool size" in failures[0]["error"]

    def test_degenerate_cc_flagged(self):
        ds = Dataset(name="flat", X=np.random.default_rng(0).normal(size=(30, 2)),
                     y=np.full(30, 4.2), feature_names=["a", "b"])
        config = ExperimentConfig(datasets=("flat",), methods=("RS",),
                                  models=("LinearSVR",), m_grid=(5, 6), runs=1)
        records, failures = _run_cell(ds, config, run=0)
        assert failures == []
        # constant targets give constant predictions: cc = 0 by convention
        assert all(r.cc == 0.0 and r.extra.get("cc_degenerate") for r in records)


class TestDeterminism:
    def test_byte_identical_output_files(self, tmp_path):
        cfg_a = small_config(tmp_path / "a", methods=("RS", "IRD"), runs=2,
                             output_dir=str(tmp_path / "a"))
        cfg_b = small_config(tmp_path / "b", methods=("RS", "IRD"), runs=2,
                             output_dir=str(tmp_path / "b"))
        paths_a = run_and_emit(cfg_a)
        paths_b = run_and_emit(cfg_b)
        for name in ("results", "curves", "summary", "improvements",
                     "pvalues", "ratios"):
            assert paths_a[name].read_bytes() == paths_b[name].read_bytes()


class TestSummarize:
    def test_single_method_normalizes_to_one(self):
        spec = {("RS", r, m): 1.0 + 0.1 * r + 0.01 * m
                for r in range(3) for m in (5, 6, 7)}
        summary = summarize(make_records(spec))
        for row in summary.auc_rows:
            if row["dataset"] == "d":
                assert row["norm_auc_mrmse"] == pytest.approx(1.0)

    def test_dominated_method_improves(self):
        spec = {}
        for r in range(3):
            for m in (5, 6, 7):
                spec[("RS", r, m)] = 2.0 + 0.1 * m
                spec[("X", r, m)] = 1.0 + 0.1 * m  # uniformly better
        summary = summarize(make_records(spec))
        imp = {(row["method"], row["measure"], row["stat"]): row["value_pct"]
               for row in summary.improvements}
        assert imp[("X", "RMSE", "mean")] > 0.0

    def test_spreadsheet_oracle_for_auc_and_std(self):
        # two runs with hand-computable per-run AUCs over M in {5, 7}
        spec = {("RS", 0, 5): 1.0, ("RS", 0, 7): 2.0,   # AUC = 3
                ("RS", 1, 5): 3.0, ("RS", 1, 7): 5.0,   # AUC = 8
                ("X", 0, 5): 1.0, ("X", 0, 7): 1.0,     # AUC = 2
                ("X", 1, 5): 2.0, ("X", 1, 7): 2.0}     # AUC = 4
        summary = summarize(make_records(spec))
        rows = {(r["method"]): r for r in summary.auc_rows
                if r["dataset"] == "d"}
        assert rows["RS"]["mean_run_auc_rmse"] == pytest.approx(5.5)
        assert rows["RS"]["std_run_auc_rmse"] == pytest.approx(
            np.std([3.0, 8.0], ddof=1))
        assert rows["X"]["mean_run_auc_rmse"] == pytest.approx(3.0)
        # mean-curve AUC: RS mean curve is (2, 3.5) -> 5.5; X is (1.5, 1.5) -> 3
        assert rows["RS"]["auc_mrmse"] == pytest.approx(5.5)
        assert rows["X"]["auc_mrmse"] == pytest.approx(3.0)
        imp = {(r["method"], r["measure"], r["stat"]): r["value_pct"]
               for r in summary.improvements}
        expect_std = 100.0 * (np.std([3.0, 8.0], ddof=1)
                              - np.std([2.0, 4.0], ddof=1)) / np.std([3.0, 8.0], ddof=1)
        assert imp[("X", "RMSE", "std")] == pytest.approx(expect_std)
        assert imp[("X", "RMSE", "mean")] == pytest.approx(100.0 * 2.5 / 5.5)

    def test_incomplete_grid_warns_and_uses_complete_subset(self):
        spec = {("RS", 0, 5): 1.0, ("RS", 0, 6): 1.0,
                ("RS", 1, 5): 9.0}  # run 1 lacks M=6
        summary = summarize(make_records(spec))
        assert any("lack the full M grid" in w for w in summary.warnings)
        row = next(r for r in summary.auc_rows if r["dataset"] == "d")
        assert row["auc_mrmse"] == pytest.approx(1.0)  # run 0 only

    def test_missing_baseline_warns(self):
        spec = {("X", r, m): 1.0 for r in range(2) for m in (5, 6)}
        summary = summarize(make_records(spec))
        assert any("baseline" in w for w in summary.warnings)
        assert summary.improvements == [] and summary.pvalues == []

    def test_ratio_rows_pair_by_run(self):
        spec = {("RS", 0, 5): 2.0, ("RS", 1, 5): 4.0,
                ("X", 0, 5): 1.0, ("X", 1, 5): 1.0}
        spec = {k + (): v for k, v in spec.items()}
        records = [ResultRecord(dataset="d", method=meth, model="Ridge",
                                param=0.5, run=run, M=m, rmse=v, cc=0.5)
                   for (meth, run, m), v in spec.items()]
        # two curve points keep auc computable but ratios checked at M=5
        records += [ResultRecord(dataset="d", method=meth, model="Ridge",
                                 param=0.5, run=run, M=6, rmse=1.0, cc=0.5)
                    for meth in ("RS", "X") for run in (0, 1)]
        summary = summarize(records)
        row = next(r for r in summary.ratios if r["M"] == 5)
        assert row["rmse_ratio"] == pytest.approx((1 / 2 + 1 / 4) / 2)


class TestEmitAndRoundTrip:
    def test_empty_records_writes_headers(self, tmp_path):
        paths = emit([], None, tmp_path)
        text = paths["results"].read_text()
        assert text.splitlines() == [
            "dataset,method,model,param,run,M,rmse,cc,extra"]
        assert json.loads(paths["manifest"].read_text())["record_count"] == 0

    def test_single_record_row(self, tmp_path):
        rec = ResultRecord(dataset="d", method="RS", model="Ridge", param=0.5,
                           run=0, M=5, rmse=1.25, cc=0.5,
                           extra={"sweeps": 2})
        paths = emit([rec], None, tmp_path)
        lines = paths["results"].read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("d,RS,Ridge,0.5,0,5,1.25,0.5,")

    def test_round_trip_exact(self, tmp_path):
        gen = np.random.default_rng(1)
        records = [ResultRecord(dataset="d", method="RS", model="OLS",
                                param=None, run=i, M=5 + i,
                                rmse=float(gen.normal()) ** 2,
                                cc=float(np.tanh(gen.normal())),
                                extra={"case": "equal", "flag": True})
                   for i in range(20)]
        paths = emit(records, None, tmp_path)
        back = read_results_csv(paths["results"])
        assert back == records

    def test_output_sorted(self, tmp_path):
        config = small_config(tmp_path, methods=("RS", "GSx"), runs=2)
        paths = run_and_emit(config)
        rows = paths["results"].read_text().splitlines()[1:]
        keys = [tuple(r.split(",")[:6]) for r in rows]
        assert keys == sorted(keys)


class TestCli:
    def test_run_with_flag_overrides(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({
            "datasets": ["synthetic-mixture"], "methods": ["RS"],
            "models": ["Ridge"], "runs": 5, "m_grid": [5, 6]}))
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(cli.main, [
            "run", "--config", str(cfg_file), "--runs", "1",
            "--m-min", "5", "--m-max", "5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = (out / "results.csv").read_text().splitlines()
        assert len(lines) == 2  # 1 run x 1 M x 1 method x 1 model

    def test_summarize_command(self, tmp_path):
        out = tmp_path / "out"
        config = small_config(tmp_path, output_dir=str(out))
        run_and_emit(config)
        out2 = tmp_path / "out2"
        runner = CliRunner()
        result = runner.invoke(cli.main, [
            "summarize", "--results", str(out / "results.csv"),
            "--out", str(out2)])
        assert result.exit_code == 0, result.output
        assert (out2 / "summary.csv").read_bytes() == \
            (out / "summary.csv").read_bytes()

    def test_list_datasets(self):
        runner = CliRunner()
        result = runner.invoke(cli.main, ["list-datasets"])
        assert result.exit_code == 0, result.output
        assert "synthetic-mixture" in result.output
        assert "Yacht" in result.output

    def test_run_requires_datasets(self):
        runner = CliRunner()
        result = runner.invoke(cli.main, ["run"])
        assert result.exit_code != 0
        assert "no datasets" in result.output
