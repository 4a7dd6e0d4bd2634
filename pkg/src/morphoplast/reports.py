"""CSV report tables assembled from result files.

Every report reads one or more JSONL results files (see
:mod:`morphoplast.pipelines` for what each pipeline writes), reduces them
with the analysis layer, and writes a provenance-stamped CSV into the
report run's output directory.  An empty records set yields a header-only
table rather than an error.

Report kinds and their expected ``records`` inputs:

* ``strata`` — pool networks file, pool records file.
* ``table1`` — sweep records file; optionally a second, non-stationary
  sweep records file to fill the "% helped under change" column.
* ``heatmap`` — sweep records file (mean delta reward per grid cell).
* ``premium`` — static sweep records file, non-stationary records file.
* ``survival`` — sweep-family records file (baseline curve plus the
  best-fixed-parameters curve).
* ``dose`` — dose-response records file (one spec per switch time).
* ``eta_trajectory`` — one or more GA run logs.
* ``control_comparison`` — pool networks, pool records, control records.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .analysis import SweepGrid, GRID_NAMES, build_grid, collect_delta_matrix, dose_response, oracle_and_regret, hebbian_split, adaptation_premium, unsolved_fraction
from .envs import EnvSpec
from .evaluation import BASELINE, STRATUM_NAMES, EvalResult, strata_for, stratify
from .evolution import read_ga_log
from .records import make_header, read_records, write_csv
from .runconfig import RunConfig, config_hash
from .stats import cohens_d

__all__ = ["emit_report"]


def _fmt(value) -> object:
    """Numbers pass through; None/NaN render as empty CSV cells."""
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    return value


def _load_eval_records(path) -> tuple[dict, list[EvalResult]]:
    header, raw = read_records(path)
    return header, [EvalResult.from_dict(r) for r in raw]


def _split(results: list[EvalResult]) -> tuple[dict[str, EvalResult], list[EvalResult]]:
    baselines = {r.network_id: r for r in results if r.mode == BASELINE}
    plastic = [r for r in results if r.mode != BASELINE]
    return baselines, plastic


def _single_env(results: list[EvalResult]) -> str:
    descriptors = {r.env for r in results}
    if len(descriptors) > 1:
        raise ValueError(f"records mix environments: {sorted(descriptors)}")
    return descriptors.pop()


def _infer_grid(plastic: list[EvalResult], name: str | None) -> SweepGrid:
    if name:
        return build_grid(name)
    points = {(r.eta, r.lam) for r in plastic}
    for candidate in GRID_NAMES:
        grid = build_grid(candidate)
        if {(p.eta, p.decay) for p in grid.points} == points:
            return grid
    raise ValueError(
        f"records' {len(points)} grid points match no known grid {GRID_NAMES}; "
        "pass grid= in the report config"
    )


def _genome_strata(networks_file, records_file) -> tuple[dict[str, int], int]:
    """Per-genome stratum counts for a pool (duplicates counted per genome)."""
    _, entries = read_records(networks_file)
    _, results = _load_eval_records(records_file)
    if not entries:
        return {name: 0 for name in STRATUM_NAMES}, 0
    mean_by_id = {r.network_id: r.mean_reward for r in results if r.mode == BASELINE}
    boundaries = strata_for(EnvSpec.from_descriptor(_single_env(results)))
    counts = {name: 0 for name in STRATUM_NAMES}
    for entry in entries:
        counts[stratify(mean_by_id[entry["network_id"]], boundaries)] += 1
    return counts, len(entries)


# --- individual reports ---------------------------------------------------


def _report_strata(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 2:
        raise ValueError("strata report needs (networks file, records file)")
    counts, total = _genome_strata(config.records[0], config.records[1])
    rows = [
        {
            "stratum": name,
            "n": counts[name],
            "fraction": counts[name] / total if total else "",
        }
        for name in STRATUM_NAMES
    ]
    return ("stratum", "n", "fraction"), rows


def _oracle_by_id(records_file, grid_name: str | None):
    """(ids, deltas, grid, baselines) for one sweep records file."""
    _, results = _load_eval_records(records_file)
    if not results:
        return (), None, None, {}
    _single_env(results)
    baselines, plastic = _split(results)
    grid = _infer_grid(plastic, grid_name)
    ids, deltas, _ = collect_delta_matrix(baselines, plastic, grid)
    return ids, deltas, grid, baselines


_TABLE1_COLUMNS = (
    "stratum",
    "n",
    "oracle_delta",
    "pct_improved",
    "best_eta",
    "best_lambda",
    "best_fixed_delta",
    "regret",
    "cohens_d_anti_vs_hebb",
    "ns_pct_helped",
)


def _report_table1(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if not 1 <= len(config.records) <= 2:
        raise ValueError("table1 report needs a sweep records file (+ optional NS file)")
    ids, deltas, grid, baselines = _oracle_by_id(config.records[0], config.grid)
    if not ids:
        return _TABLE1_COLUMNS, []
    boundaries = strata_for(EnvSpec.from_descriptor(_single_env(list(baselines.values()))))
    stratum_of = {nid: stratify(baselines[nid].mean_reward, boundaries) for nid in ids}

    ns_helped: dict[str, bool] = {}
    if len(config.records) == 2:
        ns_ids, ns_deltas, ns_grid, _ = _oracle_by_id(config.records[1], config.grid)
        if ns_ids:
            ns_oracle = oracle_and_regret(ns_deltas, ns_grid, ns_ids)
            ns_helped = {
                nid: delta > 0 for nid, delta in zip(ns_ids, ns_oracle.oracle_deltas)
            }

    rows = []
    for name in STRATUM_NAMES:
        members = [i for i, nid in enumerate(ids) if stratum_of[nid] == name]
        row = {"stratum": name, "n": len(members)}
        if members:
            sub = deltas[members]
            result = oracle_and_regret(sub, grid, [ids[i] for i in members])
            best = grid.points[result.best_fixed_index]
            anti, hebb = hebbian_split(sub, grid)
            d = cohens_d(anti, hebb) if len(anti) >= 2 and len(hebb) >= 2 else float("nan")
            helped = [ns_helped[ids[i]] for i in members if ids[i] in ns_helped]
            row.update(
                oracle_delta=_fmt(result.oracle_mean),
                pct_improved=_fmt(float(np.mean(np.asarray(result.oracle_deltas) > 0))),
                best_eta=best.eta,
                best_lambda=best.decay,
                best_fixed_delta=_fmt(result.best_fixed_mean),
                regret=_fmt(result.regret),
                cohens_d_anti_vs_hebb=_fmt(d),
                ns_pct_helped=_fmt(float(np.mean(helped)) if helped else None),
            )
        else:
            row.update({k: "" for k in _TABLE1_COLUMNS[2:]})
        rows.append(row)
    return _TABLE1_COLUMNS, rows


def _report_heatmap(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 1:
        raise ValueError("heatmap report needs one sweep records file")
    columns = ("eta", "lambda", "mean_delta", "n")
    ids, deltas, grid, _ = _oracle_by_id(config.records[0], config.grid)
    if not ids:
        return columns, []
    rows = [
        {
            "eta": point.eta,
            "lambda": point.decay,
            "mean_delta": float(np.mean(deltas[:, k])),
            "n": len(ids),
        }
        for k, point in enumerate(grid.points)
    ]
    return columns, rows


def _report_premium(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 2:
        raise ValueError("premium report needs (static records, nonstationary records)")
    columns = ("network_id", "stratum", "ns_oracle_delta", "premium")
    st_ids, st_deltas, grid, st_base = _oracle_by_id(config.records[0], config.grid)
    ns_ids, ns_deltas, ns_grid, _ = _oracle_by_id(config.records[1], config.grid)
    if not st_ids or not ns_ids:
        return columns, []
    if ns_grid.name != grid.name:
        raise ValueError(f"grids differ: {grid.name} vs {ns_grid.name}")
    common = [nid for nid in st_ids if nid in set(ns_ids)]
    st_index = {nid: i for i, nid in enumerate(st_ids)}
    ns_index = {nid: i for i, nid in enumerate(ns_ids)}
    static = st_deltas[[st_index[n] for n in common]]
    ns = ns_deltas[[ns_index[n] for n in common]]
    premiums = adaptation_premium(ns, static, grid)
    ns_oracle = oracle_and_regret(ns, grid, common)
    boundaries = strata_for(EnvSpec.from_descriptor(_single_env(list(st_base.values()))))
    rows = [
        {
            "network_id": nid,
            "stratum": stratify(st_base[nid].mean_reward, boundaries),
            "ns_oracle_delta": _fmt(float(ns_oracle.oracle_deltas[i])),
            "premium": _fmt(float(premiums[i])),
        }
        for i, nid in enumerate(common)
    ]
    return columns, rows


def _report_survival(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 1:
        raise ValueError("survival report needs one sweep-family records file")
    columns = ("t", "baseline_unsolved", "best_fixed_unsolved")
    _, results = _load_eval_records(config.records[0])
    if not results:
        return columns, []
    spec = EnvSpec.from_descriptor(_single_env(results))
    ids, deltas, grid, baselines = _oracle_by_id(config.records[0], config.grid)
    best_index = oracle_and_regret(deltas, grid, ids).best_fixed_index
    best = grid.points[best_index]
    base_steps = [s for r in baselines.values() for s in r.solved_steps]
    best_steps = [
        s
        for r in results
        if r.mode != BASELINE and (r.eta, r.lam) == (best.eta, best.decay)
        for s in r.solved_steps
    ]
    t_grid = list(range(0, spec.max_steps + 1, 25))
    base_curve = unsolved_fraction(base_steps, t_grid)
    best_curve = unsolved_fraction(best_steps, t_grid)
    rows = [
        {"t": t, "baseline_unsolved": b, "best_fixed_unsolved": p}
        for t, b, p in zip(t_grid, base_curve, best_curve)
    ]
    return columns, rows


def _report_dose(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 1:
        raise ValueError("dose report needs one dose-response records file")
    columns = ("switch_step", "duration", "mean_oracle_delta", "n", "spearman_rho")
    _, results = _load_eval_records(config.records[0])
    if not results:
        return columns, []
    by_env: dict[str, list[EvalResult]] = {}
    for r in results:
        by_env.setdefault(r.env, []).append(r)
    horizon = None
    per_switch: dict[int, list[float]] = {}
    counts: dict[int, int] = {}
    grid_name = config.grid
    for descriptor, group in by_env.items():
        spec = EnvSpec.from_descriptor(descriptor)
        if spec.perturbation is None:
            raise ValueError(f"dose records contain an unperturbed spec {descriptor!r}")
        horizon = spec.max_steps
        baselines, plastic = _split(group)
        grid = _infer_grid(plastic, grid_name)
        grid_name = grid.name
        ids, deltas, _ = collect_delta_matrix(baselines, plastic, grid)
        oracle = oracle_and_regret(deltas, grid, ids)
        per_switch[spec.perturbation.switch_step] = [float(x) for x in oracle.oracle_deltas]
        counts[spec.perturbation.switch_step] = len(ids)
    response = dose_response(per_switch, horizon=horizon)
    rows = [
        {
            "switch_step": s,
            "duration": horizon - s,
            "mean_oracle_delta": m,
            "n": counts[s],
            "spearman_rho": _fmt(response.spearman),
        }
        for s, m in zip(response.switch_steps, response.mean_oracle_deltas)
    ]
    return columns, rows


def _report_eta_trajectory(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if not config.records:
        raise ValueError("eta_trajectory report needs GA log files")
    columns = (
        "run_seed",
        "condition",
        "generation",
        "best_fitness",
        "mean_fitness",
        "best_eta",
        "mean_eta",
    )
    rows = []
    for path in config.records:
        header, entries = read_ga_log(path)
        for entry in entries:
            rows.append(
                {
                    "run_seed": header["seed"],
                    "condition": header.get("condition", ""),
                    "generation": entry.generation,
                    "best_fitness": entry.best_fitness,
                    "mean_fitness": entry.mean_fitness,
                    "best_eta": _fmt(entry.best_eta),
                    "mean_eta": _fmt(entry.mean_eta),
                }
            )
    return columns, rows


def _report_control_comparison(config: RunConfig) -> tuple[tuple[str, ...], list[dict]]:
    if len(config.records) != 3:
        raise ValueError(
            "control_comparison needs (pool networks, pool records, control records)"
        )
    columns = ("group", "n", "n_competent", "competence_rate", "ratio_vs_other")
    dev_counts, dev_total = _genome_strata(config.records[0], config.records[1])
    _, control_results = _load_eval_records(config.records[2])
    if not dev_total and not control_results:
        return columns, []
    dev_competent = dev_total - dev_counts["Weak"]
    boundaries = strata_for(EnvSpec.from_descriptor(_single_env(control_results)))
    ctl_total = len(control_results)
    ctl_competent = sum(
        1 for r in control_results if stratify(r.mean_reward, boundaries) != "Weak"
    )
    dev_rate = dev_competent / dev_total if dev_total else float("nan")
    ctl_rate = ctl_competent / ctl_total if ctl_total else float("nan")
    rows = [
        {
            "group": "developed",
            "n": dev_total,
            "n_competent": dev_competent,
            "competence_rate": _fmt(dev_rate),
            "ratio_vs_other": _fmt(dev_rate / ctl_rate if ctl_rate > 0 else None),
        },
        {
            "group": "random_control",
            "n": ctl_total,
            "n_competent": ctl_competent,
            "competence_rate": _fmt(ctl_rate),
            "ratio_vs_other": _fmt(ctl_rate / dev_rate if dev_rate > 0 else None),
        },
    ]
    return columns, rows


_REPORTS = {
    "strata": _report_strata,
    "table1": _report_table1,
    "heatmap": _report_heatmap,
    "premium": _report_premium,
    "survival": _report_survival,
    "dose": _report_dose,
    "eta_trajectory": _report_eta_trajectory,
    "control_comparison": _report_control_comparison,
}


def emit_report(config: RunConfig, out: Path) -> dict:
    """Write the requested report table; returns a summary dict."""
    builder = _REPORTS[config.report]
    columns, rows = builder(config)
    path = Path(out) / f"{config.report}.csv"
    write_csv(path, columns, rows, make_header("report", config_hash(config), config.seed))
    return {
        "out_dir": str(out),
        "report": config.report,
        "rows": len(rows),
        "degenerate_records": 0,
        "files": [str(path)],
    }
