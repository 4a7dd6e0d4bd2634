"""Experiment pipelines: pools, parameter sweeps, GA batches, controls.

Each pipeline reads a validated :class:`~morphoplast.runconfig.RunConfig`,
writes keyed JSONL files under the run's output directory, and returns a
small summary dict.  All record files are append-only and keyed, so an
interrupted run resumes by rerunning the same config: work whose keys are
already on disk is skipped, and a completed run reruns as a no-op.

File layout per kind (within the output directory):

* ``pool`` — ``genomes.txt``, ``networks.jsonl`` (one line per genome,
  keyed by index), ``records.jsonl`` (one baseline evaluation per distinct
  network), ``strata.csv`` (per-genome stratum counts).
* sweep family — ``records.jsonl``: one baseline record per (network,
  environment) plus one plastic record per (network, environment, grid
  point).
* ``coevolve`` — ``ga_run_<seed>.jsonl`` per run plus ``summary.csv``.
* ``random_control`` — ``controls.jsonl`` (keyed by source and replicate)
  and ``records.jsonl`` (baseline evaluation per control).

The output directory defaults to ``$MORPHOPLAST_OUT`` (or ``./runs``) plus
a config-hash suffix, so distinct configs never collide.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .controls import generate_matched_rnn
from .envs import EnvSpec, Perturbation
from .evaluation import (
    BASELINE,
    OFF_ON,
    STRATUM_NAMES,
    EvalResult,
    evaluate_network,
    strata_for,
    stratify,
)
from .evolution import (
    GA_SUMMARY_FIELDS,
    GAConfig,
    ga_summary_row,
    read_ga_log,
    run_ga,
    write_ga_log,
)
from .genome import (
    Genome,
    PlasticityParams,
    genome_hash,
    read_genome_file,
    sample_random,
    write_genome_file,
)
from .morphogenesis import DevelopmentConfig, develop
from .network import DevelopedNetwork
from .records import RecordWriter, make_header, read_records, write_csv
from .runconfig import RunConfig, config_hash, validate

__all__ = [
    "OUTPUT_ROOT_ENV",
    "resolve_out_dir",
    "run_experiment",
    "load_networks",
    "load_pool_index",
    "write_network_subset",
    "sweep_specs",
    "sweep_mode",
]

OUTPUT_ROOT_ENV = "MORPHOPLAST_OUT"

_SWEEP_KINDS = ("sweep", "nonstationary", "off_on", "dose_response")


def resolve_out_dir(config: RunConfig) -> Path:
    if config.out_dir:
        return Path(config.out_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{config.kind}_{config_hash(config)[:8]}"


def _network_key(entry: dict) -> int:
    return int(entry["index"])


def _control_key(entry: dict) -> tuple[str, int]:
    return (str(entry["source_id"]), int(entry["replicate"]))


def load_networks(pool_file) -> list[tuple[str, DevelopedNetwork]]:
    """Distinct networks from a pool/controls JSONL, in first-seen order."""
    _, entries = read_records(pool_file)
    seen: dict[str, DevelopedNetwork] = {}
    for entry in entries:
        nid = entry["network_id"]
        if nid not in seen:
            seen[nid] = DevelopedNetwork.from_dict(entry["network"])
    return list(seen.items())


def load_pool_index(pool_file) -> list[tuple[int, str]]:
    """(genome index, network id) pairs, one per pool genome."""
    _, entries = read_records(pool_file)
    return sorted((int(e["index"]), str(e["network_id"])) for e in entries)


def write_network_subset(pool_file, records_file, dest, keep_strata) -> int:
    """Filter a pool's networks file by baseline stratum; returns the count.

    Picks the first pool entry per distinct network whose baseline stratum
    (from the pool's records file) is in ``keep_strata``, and writes them to
    ``dest`` in the same keyed format, so downstream sweep / control configs
    can point their ``pool_file`` at a competent subset.
    """
    header, entries = read_records(pool_file)
    _, raw_records = read_records(records_file)
    results = [EvalResult.from_dict(r) for r in raw_records]
    spec = EnvSpec.from_descriptor(results[0].env)
    boundaries = strata_for(spec)
    wanted = {
        r.network_id
        for r in results
        if r.mode == BASELINE and stratify(r.mean_reward, boundaries) in keep_strata
    }
    dest = Path(dest)
    if dest.exists():
        dest.unlink()
    seen: set[str] = set()
    with RecordWriter(dest, header, _network_key) as writer:
        for entry in entries:
            if entry["network_id"] in wanted and entry["network_id"] not in seen:
                seen.add(entry["network_id"])
                writer.append(entry)
        return len(writer)


# --- worker functions (top-level so they pickle for the process pool) ----


def _develop_task(args) -> tuple[int, str, dict]:
    index, genome, dev_config = args
    net = develop(genome, dev_config)
    return index, genome_hash(genome), net.to_dict()


def _eval_task(args) -> dict:
    net, descriptor, eta, lam, mode, seeds = args
    spec = EnvSpec.from_descriptor(descriptor)
    params = None if mode == BASELINE else PlasticityParams(eta=eta, decay=lam)
    return evaluate_network(net, spec, params, mode, seeds).to_dict()


def _map_tasks(fn, tasks, workers: int):
    if workers <= 1:
        yield from map(fn, tasks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(fn, tasks, chunksize=4)


# --- pool -----------------------------------------------------------------


def _pool_genomes(config: RunConfig, path: Path) -> list[Genome]:
    if path.exists():
        genomes = read_genome_file(path)
        if len(genomes) != config.count:
            raise ValueError(
                f"{path} holds {len(genomes)} genomes but config.count is {config.count}"
            )
        return genomes
    genomes = [
        sample_random(int(np.random.SeedSequence([config.seed, i]).generate_state(1)[0]))
        for i in range(config.count or 0)
    ]
    write_genome_file(path, genomes)
    return genomes


def _snapshot_hook(directory: Path):
    """CSV dump of every development iteration, long format."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "development.csv"
    fh = path.open("w", encoding="utf-8")
    fh.write("iteration,field,row,col,value\n")

    def hook(iteration: int, conc: np.ndarray, occupancy: np.ndarray) -> None:
        for m in range(conc.shape[0]):
            for r in range(conc.shape[1]):
                for c in range(conc.shape[2]):
                    fh.write(f"{iteration},m{m},{r},{c},{conc[m, r, c]!r}\n")
        for r in range(occupancy.shape[0]):
            for c in range(occupancy.shape[1]):
                fh.write(f"{iteration},occupancy,{r},{c},{int(occupancy[r, c])}\n")

    return hook, fh


def _run_pool(config: RunConfig, out: Path, workers: int, snapshot: bool) -> dict:
    chash = config_hash(config)
    genomes = _pool_genomes(config, out / "genomes.txt")
    dev_config = DevelopmentConfig(config.width, config.height, config.iterations)
    spec = EnvSpec(config.env)

    networks = RecordWriter(
        out / "networks.jsonl", make_header("pool_networks", chash, config.seed), _network_key
    )
    todo = [
        (i, g, dev_config) for i, g in enumerate(genomes) if i not in networks.keys
    ]
    if snapshot and genomes:
        # debugging aid: dump the first genome's development, grid by grid
        hook, fh = _snapshot_hook(out / "snapshots")
        try:
            develop(genomes[0], dev_config, hook)
        finally:
            fh.close()
    by_id: dict[str, DevelopedNetwork] = {}
    with networks:
        for index, ghash, net_dict in _map_tasks(_develop_task, todo, workers):
            net = DevelopedNetwork.from_dict(net_dict)
            networks.append(
                {
                    "index": index,
                    "genome_hash": ghash,
                    "network_id": net.canonical_hash(),
                    "network": net_dict,
                }
            )
    _, entries = read_records(out / "networks.jsonl")
    index_to_id: dict[int, str] = {}
    for entry in entries:
        index_to_id[int(entry["index"])] = entry["network_id"]
        if entry["network_id"] not in by_id:
            by_id[entry["network_id"]] = DevelopedNetwork.from_dict(entry["network"])

    records = RecordWriter(
        out / "records.jsonl", make_header("pool_records", chash, config.seed)
    )
    degenerate = 0
    new_records = 0
    with records:
        tasks = [
            (net, spec.descriptor(), 0.0, 0.0, BASELINE, config.seeds)
            for nid, net in by_id.items()
            if (nid, spec.descriptor(), 0.0, 0.0, BASELINE) not in records.keys
        ]
        for record in _map_tasks(_eval_task, tasks, workers):
            new_records += records.append(record)
            degenerate += bool(record["degenerate"])

    _, recs = read_records(out / "records.jsonl")
    mean_by_id = {
        r["network_id"]: sum(r["rewards"]) / len(r["rewards"]) for r in recs
    }
    boundaries = strata_for(spec)
    counts = {name: 0 for name in STRATUM_NAMES}
    for i in range(len(genomes)):
        counts[stratify(mean_by_id[index_to_id[i]], boundaries)] += 1
    total = max(len(genomes), 1)
    write_csv(
        out / "strata.csv",
        ("stratum", "n", "fraction"),
        [
            {"stratum": name, "n": counts[name], "fraction": counts[name] / total}
            for name in STRATUM_NAMES
        ],
        records.header,
    )
    weak_fraction = counts["Weak"] / total if genomes else 0.0
    return {
        "out_dir": str(out),
        "n_genomes": len(genomes),
        "n_networks": len(by_id),
        "new_records": new_records,
        "degenerate_records": degenerate,
        "weak_fraction": weak_fraction,
        "files": [str(out / f) for f in ("genomes.txt", "networks.jsonl", "records.jsonl", "strata.csv")],
    }


# --- sweep family ---------------------------------------------------------


def sweep_specs(config: RunConfig) -> list[EnvSpec]:
    """The environment spec(s) a sweep-family config evaluates on."""
    if config.kind == "sweep":
        return [EnvSpec(config.env)]
    if config.kind in ("nonstationary", "off_on"):
        return [EnvSpec(config.env, Perturbation(config.change, config.switch_step))]
    if config.kind == "dose_response":
        return [
            EnvSpec(config.env, Perturbation(config.change, s)) for s in config.switch_steps
        ]
    raise ValueError(f"{config.kind} is not a sweep kind")


def sweep_mode(config: RunConfig) -> str:
    # plasticity gated by the switch is the whole point of these two kinds
    if config.kind in ("off_on", "dose_response"):
        return OFF_ON
    return config.mode


def _run_sweep(config: RunConfig, out: Path, workers: int) -> dict:
    from .analysis import build_grid

    chash = config_hash(config)
    networks = load_networks(config.pool_file)
    grid = build_grid(config.grid)
    specs = sweep_specs(config)
    mode = sweep_mode(config)

    writer = RecordWriter(out / "records.jsonl", make_header(config.kind, chash, config.seed))
    tasks = []
    for spec in specs:
        desc = spec.descriptor()
        for nid, net in networks:
            if (nid, desc, 0.0, 0.0, BASELINE) not in writer.keys:
                tasks.append((net, desc, 0.0, 0.0, BASELINE, config.seeds))
            for point in grid.points:
                if (nid, desc, point.eta, point.decay, mode) not in writer.keys:
                    tasks.append((net, desc, point.eta, point.decay, mode, config.seeds))

    degenerate = 0
    new_records = 0
    with writer:
        for record in _map_tasks(_eval_task, tasks, workers):
            new_records += writer.append(record)
            degenerate += bool(record["degenerate"])
        expected = len(networks) * len(specs) * (len(grid.points) + 1)
        if len(writer) != expected:
            raise AssertionError(
                f"sweep record count {len(writer)} != expected {expected}"
            )
    return {
        "out_dir": str(out),
        "n_networks": len(networks),
        "n_specs": len(specs),
        "grid": grid.name,
        "mode": mode,
        "new_records": new_records,
        "total_records": len(writer),
        "degenerate_records": degenerate,
        "files": [str(out / "records.jsonl")],
    }


# --- co-evolution ---------------------------------------------------------


def _ga_complete(path: Path, generations: int) -> bool:
    if not path.exists():
        return False
    try:
        _, entries = read_ga_log(path)
    except (ValueError, KeyError):
        return False
    return len(entries) == generations + 1


def _run_coevolve(config: RunConfig, out: Path) -> dict:
    chash = config_hash(config)
    rows = []
    for r in range(config.runs):
        run_seed = config.seed + r
        path = out / f"ga_run_{run_seed}.jsonl"
        if _ga_complete(path, config.generations):
            header, entries = read_ga_log(path)
            rows.append(_summary_from_log(header, entries))
            continue
        ga_config = GAConfig(
            condition=config.condition,
            env=config.env,
            width=config.width,
            height=config.height,
            iterations=config.iterations,
            generations=config.generations,
            run_seed=run_seed,
            seeds=config.seeds,
        )
        log = run_ga(ga_config)
        write_ga_log(path, log)
        rows.append(ga_summary_row(log))
    write_csv(
        out / "summary.csv",
        GA_SUMMARY_FIELDS,
        rows,
        make_header("coevolve", chash, config.seed),
    )
    return {
        "out_dir": str(out),
        "runs": config.runs,
        "condition": config.condition,
        "degenerate_records": 0,
        "final_best_fitness": [row["final_best_fitness"] for row in rows],
        "files": [str(out / "summary.csv")],
    }


def _summary_from_log(header: dict, entries) -> dict:
    final = entries[-1]
    converged = next(
        (e.generation for e in entries if e.best_fitness >= 0.75), None
    )
    return {
        "run_seed": header["seed"],
        "condition": header["condition"],
        "env": header["env"],
        "final_best_fitness": final.best_fitness,
        "final_mean_fitness": final.mean_fitness,
        "final_eta": "" if final.best_eta is None else final.best_eta,
        "final_lambda": "" if final.best_lambda is None else final.best_lambda,
        "best_neurons": final.best_neurons,
        "best_connections": final.best_connections,
        "convergence_generation": "" if converged is None else converged,
        "evaluations_counted": header["evaluations_counted"],
        "evaluations_computed": header["evaluations_computed"],
    }


# --- random controls ------------------------------------------------------


def _run_controls(config: RunConfig, out: Path, workers: int) -> dict:
    chash = config_hash(config)
    all_sources = load_networks(config.pool_file)
    # the generator requires at least one neuron; empty developed networks
    # (degenerate genomes) have nothing to match
    sources = [(nid, net) for nid, net in all_sources if net.n_neurons >= 1]
    spec = EnvSpec(config.env)

    controls_writer = RecordWriter(
        out / "controls.jsonl", make_header("control_networks", chash, config.seed), _control_key
    )
    generated: list[tuple[str, DevelopedNetwork]] = []
    with controls_writer:
        for source_id, source in sources:
            for replicate in range(config.replicates):
                control = generate_matched_rnn(
                    source, replicate, config.seed, match_roles=config.strict_roles
                )
                generated.append((control.canonical_hash(), control))
                controls_writer.append(
                    {
                        "source_id": source_id,
                        "replicate": replicate,
                        "network_id": control.canonical_hash(),
                        "network": control.to_dict(),
                    }
                )
    if len(controls_writer) != len(sources) * config.replicates:
        raise AssertionError("control count does not match sources x replicates")

    records = RecordWriter(
        out / "records.jsonl", make_header("random_control", chash, config.seed)
    )
    degenerate = 0
    new_records = 0
    with records:
        desc = spec.descriptor()
        tasks = [
            (net, desc, 0.0, 0.0, BASELINE, config.seeds)
            for nid, net in generated
            if (nid, desc, 0.0, 0.0, BASELINE) not in records.keys
        ]
        for record in _map_tasks(_eval_task, tasks, workers):
            new_records += records.append(record)
            degenerate += bool(record["degenerate"])
    return {
        "out_dir": str(out),
        "n_sources": len(sources),
        "n_skipped_sources": len(all_sources) - len(sources),
        "n_controls": len(controls_writer),
        "new_records": new_records,
        "degenerate_records": degenerate,
        "files": [str(out / "controls.jsonl"), str(out / "records.jsonl")],
    }


# --- entry point ----------------------------------------------------------


def run_experiment(
    config: RunConfig,
    workers: int = 1,
    resume: bool = True,
    snapshot: bool = False,
) -> dict:
    """Execute the pipeline named by ``config.kind``; returns a summary.

    With ``resume`` (the default) existing keyed records are kept and only
    missing work runs; ``resume=False`` deletes the kind's record files
    first so everything recomputes.
    """
    c = validate(config)
    out = resolve_out_dir(c)
    out.mkdir(parents=True, exist_ok=True)
    if not resume:
        stale = [out / name for name in ("records.jsonl", "networks.jsonl", "controls.jsonl")]
        stale.extend(out.glob("ga_run_*.jsonl"))
        for path in stale:
            if path.exists():
                path.unlink()
    if c.kind == "pool":
        return _run_pool(c, out, workers, snapshot)
    if c.kind in _SWEEP_KINDS:
        return _run_sweep(c, out, workers)
    if c.kind == "coevolve":
        return _run_coevolve(c, out)
    if c.kind == "random_control":
        return _run_controls(c, out, workers)
    if c.kind == "report":
        from .reports import emit_report

        return emit_report(c, out)
    raise ValueError(f"unhandled experiment kind {c.kind!r}")
