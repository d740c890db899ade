"""Experiment runner reproducing the evaluation protocol end to end.

For every (dataset, run): split the rows 50/50 into pool and test, let each
selection method pick M pool samples per budget in the M grid, reveal those
labels, fit every configured linear model on them, and score RMSE/CC on the
test set.  One selection is computed per (method, run, M) and shared by all
models.  Seeds derive deterministically from the master seed, so reruns are
byte-identical and adding/removing methods never perturbs the others.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, backend, metrics, regressors, selectors
from .dataset import Dataset, load_dataset, load_registry, normalize, split_pool_test
from .metrics import CurvePoint

log = logging.getLogger("alrbench")

DEFAULT_M_GRID = tuple(range(5, 16))
DEFAULT_METHODS = (selectors.RS, selectors.PALICE, selectors.GSX,
                   selectors.RD, selectors.IRD)
DEFAULT_MODELS = (regressors.RIDGE, regressors.LASSO, regressors.LINEAR_SVR)

RESULT_COLUMNS = ("dataset", "method", "model", "param", "run", "M",
                  "rmse", "cc", "extra")


@dataclass
class ExperimentConfig:
    datasets: tuple[str, ...]
    methods: tuple[str, ...] = DEFAULT_METHODS
    models: tuple[str, ...] = DEFAULT_MODELS
    m_grid: tuple[int, ...] = DEFAULT_M_GRID
    runs: int = 100
    master_seed: int = 0
    c_max: int = 5
    ird_init: str = selectors.RD
    lambda_grid: tuple[float, ...] = (0.5,)
    svr_c_grid: tuple[float, ...] = (1.0,)
    svr_epsilon_factor: float = 0.1
    split_fraction: float = 0.5
    normalize_on: str = "full"  # or "pool" for leakage-free statistics
    palice_weighted_ridge: bool = False
    registry: str | None = None
    output_dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        self.datasets = tuple(self.datasets)
        self.methods = tuple(self.methods)
        self.models = tuple(self.models)
        self.m_grid = tuple(int(m) for m in self.m_grid)
        self.lambda_grid = tuple(float(v) for v in self.lambda_grid)
        self.svr_c_grid = tuple(float(v) for v in self.svr_c_grid)
        if not self.datasets:
            raise ValueError("need at least one dataset")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not self.m_grid or list(self.m_grid) != sorted(set(self.m_grid)):
            raise ValueError("m_grid must be non-empty, sorted, and unique")
        if min(self.m_grid) < 2:
            raise ValueError("every M must be >= 2")
        unknown = set(self.methods) - set(selectors.METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        unknown = set(self.models) - set(regressors.MODEL_KINDS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        if self.normalize_on not in ("full", "pool"):
            raise ValueError("normalize_on must be 'full' or 'pool'")
        if self.c_max < 0:
            raise ValueError("c_max must be >= 0")

    def model_variants(self) -> list[tuple[str, float | None]]:
        """Cross product of model kinds with their hyperparameter grids."""
        variants: list[tuple[str, float | None]] = []
        for kind in self.models:
            if kind in (regressors.RIDGE, regressors.LASSO):
                variants.extend((kind, lam) for lam in self.lambda_grid)
            elif kind == regressors.LINEAR_SVR:
                variants.extend((kind, c) for c in self.svr_c_grid)
            else:
                variants.append((kind, None))
        return variants


@dataclass
class ResultRecord:
    dataset: str
    method: str
    model: str
    param: float | None
    run: int
    M: int
    rmse: float
    cc: float
    extra: dict = field(default_factory=dict)

    def key(self):
        return (self.dataset, self.method, self.model,
                -1.0 if self.param is None else self.param, self.run, self.M)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from the given parts (order matters)."""
    key = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def run_experiment(config: ExperimentConfig, on_cell_done=None
                   ) -> tuple[list[ResultRecord], list[dict]]:
    """Execute the full protocol; returns (sorted records, failure log).

    ``on_cell_done(records)`` is invoked as each (dataset, run) cell
    completes, enabling incremental persistence.
    """
    registry = load_registry(config.registry)
    prepared: dict[str, Dataset] = {}
    failures: list[dict] = []
    for name in config.datasets:
        try:
            prepared[name] = load_dataset(name, registry)
        except Exception as exc:
            log.error("skipping dataset %s: %s", name, exc)
            failures.append({"dataset": name, "stage": "load", "error": str(exc)})
    cells = [(name, run) for name in prepared for run in range(config.runs)]
    records: list[ResultRecord] = []

    if config.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_run_cell, prepared[name], config, run)
                       for name, run in cells]
            for fut in futures:
                cell_records, cell_failures = fut.result()
                records.extend(cell_records)
                failures.extend(cell_failures)
                if on_cell_done:
                    on_cell_done(cell_records)
    else:
        for name, run in cells:
            cell_records, cell_failures = _run_cell(prepared[name], config, run)
            records.extend(cell_records)
            failures.extend(cell_failures)
            if on_cell_done:
                on_cell_done(cell_records)

    records.sort(key=ResultRecord.key)
    return records, failures


def _run_cell(ds: Dataset, config: ExperimentConfig, run: int
              ) -> tuple[list[ResultRecord], list[dict]]:
    """All selections, fits, and evaluations for one (dataset, run) pair."""
    n = ds.X.shape[0]
    split_seed = derive_seed(config.master_seed, ds.name, run, "split")
    split = split_pool_test(n, config.split_fraction, split_seed)
    if config.normalize_on == "full":
        Xn, _ = normalize(ds.X)
        pool_X = Xn[split.pool_indices]
        test_X = Xn[split.test_indices]
    else:
        pool_X, stats = normalize(ds.X[split.pool_indices])
        test_X, _ = normalize(ds.X[split.test_indices], stats)
    pool_y = ds.y[split.pool_indices]
    test_y = ds.y[split.test_indices]

    records: list[ResultRecord] = []
    failures: list[dict] = []
    variants = config.model_variants()
    for method in config.methods:
        for M in config.m_grid:
            if M > pool_X.shape[0]:
                failures.append({"dataset": ds.name, "method": method,
                                 "run": run, "M": M,
                                 "error": f"M={M} exceeds pool size {pool_X.shape[0]}"})
                continue
            sel_seed = derive_seed(config.master_seed, ds.name, run, method, M)
            rng = np.random.default_rng(sel_seed)
            ird_config = selectors.IRDConfig(c_max=config.c_max,
                                             init=config.ird_init)
            try:
                sel = selectors.select(method, pool_X, M, rng, ird_config)
            except Exception as exc:
                failures.append({"dataset": ds.name, "method": method,
                                 "run": run, "M": M, "stage": "select",
                                 "error": str(exc)})
                continue
            sel_extra = _selection_extra(sel)
            X_train = pool_X[sel.indices]
            y_train = pool_y[sel.indices]
            for kind, param in variants:
                weights = None
                if (kind == regressors.RIDGE and config.palice_weighted_ridge
                        and sel.weights is not None):
                    weights = np.asarray(sel.weights)
                reg_cfg = _reg_config(kind, param, config, weights)
                try:
                    model = regressors.fit(reg_cfg, X_train, y_train)
                    pred = regressors.predict(model, test_X)
                    if not np.isfinite(pred).all():
                        raise FloatingPointError("non-finite predictions")
                    r = metrics.rmse(pred, test_y)
                    c = metrics.cc(pred, test_y)
                    if not (np.isfinite(r) and np.isfinite(c)):
                        raise FloatingPointError("non-finite metrics")
                except Exception as exc:
                    failures.append({"dataset": ds.name, "method": method,
                                     "model": kind, "run": run, "M": M,
                                     "stage": "fit", "error": str(exc)})
                    continue
                extra = dict(sel_extra)
                extra.update({f"fit_{k}": v for k, v in
                              model.diagnostics.items()})
                if metrics.cc_degenerate(pred, test_y):
                    extra["cc_degenerate"] = True
                records.append(ResultRecord(
                    dataset=ds.name, method=method, model=kind, param=param,
                    run=run, M=M, rmse=r, cc=c, extra=extra))
    return records, failures


def _reg_config(kind, param, config, weights):
    if kind in (regressors.RIDGE, regressors.LASSO):
        return regressors.RegConfig(kind=kind, lambda_=param,
                                    sample_weights=weights)
    if kind == regressors.LINEAR_SVR:
        return regressors.RegConfig(kind=kind, C=param,
                                    epsilon_factor=config.svr_epsilon_factor)
    return regressors.RegConfig(kind=kind, sample_weights=weights)


def _selection_extra(sel: selectors.Selection) -> dict:
    """Compact, serializable subset of selection diagnostics."""
    keep = ("case", "sweeps", "cycle_detected", "effective_dim",
            "lambda_star", "q_star", "u_pinv", "q_pinv", "degenerate_pool",
            "core_sweeps", "core_cycle_detected")
    return {k: sel.diagnostics[k] for k in keep if k in sel.diagnostics}


# --- summaries ----------------------------------------------------------------

AVERAGE_KEY = "(average)"


@dataclass
class Summary:
    curves: list[dict]
    auc_rows: list[dict]
    improvements: list[dict]
    ratios: list[dict]
    pvalues: list[dict]
    warnings: list[str] = field(default_factory=list)


def summarize(records: list[ResultRecord], alpha: float = 0.05,
              baseline: str = selectors.RS) -> Summary:
    """Mean curves, AUC tables, improvement percentages, per-M ratios, and
    pairwise significance tests, all relative to the baseline method."""
    warnings: list[str] = []
    groups: dict[tuple, dict[int, dict[int, ResultRecord]]] = {}
    for rec in records:
        gkey = (rec.dataset, rec.method, rec.model, rec.param)
        groups.setdefault(gkey, {}).setdefault(rec.run, {})[rec.M] = rec

    m_grid = sorted({rec.M for rec in records})
    curves = []
    auc_stats: dict[tuple, dict] = {}
    per_run_auc: dict[tuple, dict[str, np.ndarray]] = {}
    want_auc = len(m_grid) >= 2
    if records and not want_auc:
        warnings.append("single-M grid: AUC tables, improvements, ratios, "
                        "and p-values need at least two budgets")

    for gkey in sorted(groups, key=_group_sort_key):
        dataset, method, model, param = gkey
        by_run = groups[gkey]
        complete_runs = sorted(r for r, ms in by_run.items()
                               if set(ms) >= set(m_grid))
        if len(complete_runs) < len(by_run):
            warnings.append(
                f"{gkey}: {len(by_run) - len(complete_runs)} runs lack the "
                f"full M grid; summarizing the complete subset")
        if not complete_runs:
            continue
        mean_rmse, mean_cc = [], []
        for m in m_grid:
            mean_rmse.append(float(np.mean([by_run[r][m].rmse for r in complete_runs])))
            mean_cc.append(float(np.mean([by_run[r][m].cc for r in complete_runs])))
        for m, mr, mc in zip(m_grid, mean_rmse, mean_cc):
            curves.append({"dataset": dataset, "method": method, "model": model,
                           "param": param, "M": m, "mean_rmse": mr, "mean_cc": mc})
        if not want_auc:
            continue
        curve_r = [CurvePoint(m, v) for m, v in zip(m_grid, mean_rmse)]
        curve_c = [CurvePoint(m, v) for m, v in zip(m_grid, mean_cc)]
        run_auc_r = np.array([metrics.auc([CurvePoint(m, by_run[r][m].rmse)
                                           for m in m_grid]) for r in complete_runs])
        run_auc_c = np.array([metrics.auc([CurvePoint(m, by_run[r][m].cc)
                                           for m in m_grid]) for r in complete_runs])
        auc_stats[gkey] = {
            "auc_mrmse": metrics.auc(curve_r),
            "auc_mcc": metrics.auc(curve_c),
            "mean_run_auc_rmse": float(run_auc_r.mean()),
            "std_run_auc_rmse": float(run_auc_r.std(ddof=1)) if len(run_auc_r) > 1 else 0.0,
            "mean_run_auc_cc": float(run_auc_c.mean()),
            "std_run_auc_cc": float(run_auc_c.std(ddof=1)) if len(run_auc_c) > 1 else 0.0,
        }
        per_run_auc[gkey] = {"rmse": run_auc_r, "cc": run_auc_c,
                             "runs": complete_runs}

    datasets = sorted({k[0] for k in auc_stats})
    variants = sorted({(k[2], k[3]) for k in auc_stats},
                      key=lambda v: (v[0], -1.0 if v[1] is None else v[1]))
    methods = sorted({k[1] for k in auc_stats})
    have_baseline = baseline in methods
    if not have_baseline:
        warnings.append(f"baseline {baseline!r} absent; normalized AUCs, "
                        "improvements, ratios, and p-values are skipped")

    auc_rows = []
    norm_acc: dict[tuple, dict[str, list[float]]] = {}
    for gkey in sorted(auc_stats, key=_group_sort_key):
        dataset, method, model, param = gkey
        row = {"dataset": dataset, "method": method, "model": model,
               "param": param}
        row.update(auc_stats[gkey])
        base_key = (dataset, baseline, model, param)
        if have_baseline and base_key in auc_stats:
            base = auc_stats[base_key]
            if base["auc_mrmse"] != 0.0:
                row["norm_auc_mrmse"] = row["auc_mrmse"] / base["auc_mrmse"]
            if base["auc_mcc"] != 0.0:
                row["norm_auc_mcc"] = row["auc_mcc"] / base["auc_mcc"]
            acc = norm_acc.setdefault((method, model, param),
                                      {"rmse": [], "cc": []})
            if "norm_auc_mrmse" in row:
                acc["rmse"].append(row["norm_auc_mrmse"])
            if "norm_auc_mcc" in row:
                acc["cc"].append(row["norm_auc_mcc"])
        auc_rows.append(row)
    # cross-dataset averages of the normalized AUCs (the bar-chart summary)
    for (method, model, param) in sorted(norm_acc, key=_variant_sort_key):
        acc = norm_acc[(method, model, param)]
        auc_rows.append({
            "dataset": AVERAGE_KEY, "method": method, "model": model,
            "param": param,
            "norm_auc_mrmse": float(np.mean(acc["rmse"])) if acc["rmse"] else None,
            "norm_auc_mcc": float(np.mean(acc["cc"])) if acc["cc"] else None,
        })

    improvements = _improvement_rows(auc_stats, datasets, variants, methods,
                                     baseline) if have_baseline else []
    ratios = _ratio_rows(groups, m_grid, variants, methods,
                         baseline) if have_baseline else []
    pvalues = _pvalue_rows(per_run_auc, datasets, variants, methods, baseline,
                           alpha, warnings) if have_baseline else []
    return Summary(curves=curves, auc_rows=auc_rows, improvements=improvements,
                   ratios=ratios, pvalues=pvalues, warnings=warnings)


def _group_sort_key(gkey):
    dataset, method, model, param = gkey
    return (dataset, method, model, -1.0 if param is None else param)


def _variant_sort_key(key):
    method, model, param = key
    return (model, -1.0 if param is None else param, method)


def _improvement_rows(auc_stats, datasets, variants, methods, baseline):
    """Cross-dataset mean percentage improvements of AUC means and stds."""
    rows = []
    specs = [("RMSE", "auc_mrmse", "std_run_auc_rmse", True),
             ("CC", "auc_mcc", "std_run_auc_cc", False)]
    for model, param in variants:
        for measure, mean_key, std_key, smaller in specs:
            for method in methods:
                if method == baseline:
                    continue
                mean_imps, std_imps = [], []
                for ds in datasets:
                    key = (ds, method, model, param)
                    bkey = (ds, baseline, model, param)
                    if key not in auc_stats or bkey not in auc_stats:
                        continue
                    val = auc_stats[key]
                    base = auc_stats[bkey]
                    if base[mean_key] != 0.0:
                        mean_imps.append(metrics.percentage_improvement(
                            val[mean_key], base[mean_key], smaller))
                    if base[std_key] != 0.0:
                        std_imps.append(metrics.percentage_improvement(
                            val[std_key], base[std_key], True))
                if mean_imps:
                    rows.append({"model": model, "param": param,
                                 "method": method, "measure": measure,
                                 "stat": "mean",
                                 "value_pct": float(np.mean(mean_imps))})
                if std_imps:
                    rows.append({"model": model, "param": param,
                                 "method": method, "measure": measure,
                                 "stat": "std",
                                 "value_pct": float(np.mean(std_imps))})
    return rows


def _ratio_rows(groups, m_grid, variants, methods, baseline):
    """Per-M mean ratios of RMSE/CC against the baseline, paired by run."""
    rows = []
    for model, param in variants:
        for method in methods:
            if method == baseline:
                continue
            for m in m_grid:
                r_ratios, c_ratios = [], []
                for (ds, meth, mod, par), by_run in groups.items():
                    if (meth, mod, par) != (method, model, param):
                        continue
                    base_runs = groups.get((ds, baseline, model, param), {})
                    for run, ms in by_run.items():
                        if m not in ms or m not in base_runs.get(run, {}):
                            continue
                        base = base_runs[run][m]
                        rec = ms[m]
                        if base.rmse > 0.0:
                            r_ratios.append(rec.rmse / base.rmse)
                        if abs(base.cc) > 1e-12:
                            c_ratios.append(rec.cc / base.cc)
                if r_ratios:
                    rows.append({"model": model, "param": param,
                                 "method": method, "M": m,
                                 "rmse_ratio": float(np.mean(r_ratios)),
                                 "cc_ratio": (float(np.mean(c_ratios))
                                              if c_ratios else None)})
    return rows


def _pvalue_rows(per_run_auc, datasets, variants, methods, baseline, alpha,
                 warnings):
    """Pairwise rank tests on per-run AUCs, normalized per dataset by the
    baseline's mean per-run AUC and concatenated across datasets."""
    rows = []
    for model, param in variants:
        for measure in ("rmse", "cc"):
            samples: dict[str, list[float]] = {}
            for method in methods:
                obs: list[float] = []
                for ds in datasets:
                    key = (ds, method, model, param)
                    bkey = (ds, baseline, model, param)
                    if key not in per_run_auc or bkey not in per_run_auc:
                        continue
                    ref = float(np.mean(per_run_auc[bkey][measure]))
                    if ref == 0.0:
                        continue
                    obs.extend((per_run_auc[key][measure] / ref).tolist())
                if len(obs) >= 2:
                    samples[method] = obs
            if len(samples) < 2:
                continue
            try:
                results = metrics.dunn_fdr(samples, alpha)
            except ValueError as exc:
                warnings.append(f"significance test skipped for "
                                f"({model}, {param}, {measure}): {exc}")
                continue
            for res in results:
                rows.append({"model": model, "param": param,
                             "measure": measure.upper(),
                             "method_a": res.method_a, "method_b": res.method_b,
                             "z": res.z, "p_raw": res.p_raw,
                             "p_adjusted": res.p_adjusted,
                             "significant": res.significant})
    return rows


# --- persistence ---------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")  # RFC 4180
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row.get(c) if isinstance(row, dict)
                                      else getattr(row, c)) for c in columns])
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def record_to_row(rec: ResultRecord) -> dict:
    row = {c: getattr(rec, c) for c in RESULT_COLUMNS[:-1]}
    row["extra"] = json.dumps(rec.extra, sort_keys=True, separators=(",", ":"))
    return row


def emit(records: list[ResultRecord], summary: Summary | None, output_dir,
         config: ExperimentConfig | None = None,
         failures: list[dict] | None = None) -> dict[str, Path]:
    """Write results/curves/summary/improvements/pvalues/ratios CSVs and the
    run manifest into ``output_dir``; returns the file map."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv"}
    _write_csv(paths["results"], RESULT_COLUMNS,
               [record_to_row(r) for r in records])
    if summary is not None:
        paths["curves"] = out / "curves.csv"
        _write_csv(paths["curves"],
                   ("dataset", "method", "model", "param", "M",
                    "mean_rmse", "mean_cc"), summary.curves)
        paths["summary"] = out / "summary.csv"
        _write_csv(paths["summary"],
                   ("dataset", "method", "model", "param", "auc_mrmse",
                    "auc_mcc", "norm_auc_mrmse", "norm_auc_mcc",
                    "mean_run_auc_rmse", "std_run_auc_rmse",
                    "mean_run_auc_cc", "std_run_auc_cc"), summary.auc_rows)
        paths["improvements"] = out / "improvements.csv"
        _write_csv(paths["improvements"],
                   ("model", "param", "method", "measure", "stat",
                    "value_pct"), summary.improvements)
        paths["pvalues"] = out / "pvalues.csv"
        _write_csv(paths["pvalues"],
                   ("model", "param", "measure", "method_a", "method_b",
                    "z", "p_raw", "p_adjusted", "significant"),
                   summary.pvalues)
        paths["ratios"] = out / "ratios.csv"
        _write_csv(paths["ratios"],
                   ("model", "param", "method", "M", "rmse_ratio",
                    "cc_ratio"), summary.ratios)
    manifest = {
        "tool": "alrbench",
        "version": __version__,
        "backend": backend.BACKEND,
        "record_count": len(records),
        "seed_scheme": "sha256(master_seed|dataset|run|{'split'|method,M})[:8]",
        "config": None if config is None else _config_dict(config),
        "resolved_split_seeds": _resolved_split_seeds(config),
        "failures": failures or [],
        "summary_warnings": [] if summary is None else summary.warnings,
    }
    paths["manifest"] = out / "manifest.json"
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def _resolved_split_seeds(config: ExperimentConfig | None) -> dict:
    if config is None:
        return {}
    return {name: [derive_seed(config.master_seed, name, run, "split")
                   for run in range(config.runs)]
            for name in config.datasets}


def _config_dict(config: ExperimentConfig) -> dict:
    doc = asdict(config)
    for key, value in doc.items():
        if isinstance(value, tuple):
            doc[key] = list(value)
    return doc


def read_results_csv(path) -> list[ResultRecord]:
    """Inverse of emit()'s results.csv writer; floats round-trip exactly."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(ResultRecord(
                dataset=row["dataset"], method=row["method"],
                model=row["model"],
                param=None if row["param"] == "" else float(row["param"]),
                run=int(row["run"]), M=int(row["M"]),
                rmse=float(row["rmse"]), cc=float(row["cc"]),
                extra=json.loads(row["extra"]) if row["extra"] else {}))
    return records


def run_and_emit(config: ExperimentConfig) -> dict[str, Path]:
    """CLI entry: run with incremental persistence, then emit final tables."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "results.partial.csv"
    with open(partial, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(RESULT_COLUMNS)

        def on_cell_done(cell_records):
            for rec in cell_records:
                row = record_to_row(rec)
                writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
            fh.flush()

        records, failures = run_experiment(config, on_cell_done)
    summary = summarize(records)
    paths = emit(records, summary, out, config, failures)
    partial.unlink(missing_ok=True)
    return paths
