"""Multi-seed runs: training, census, reports and the manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from . import __version__
from .census import (
    default_distance_bins,
    edge_interior_split,
    evaluate_seed,
    seed_distance_success,
    successor_maps,
    summarize_distance,
)
from .diagnostics import (
    BANDS,
    per_seed_ranking,
    regime_crosstab,
    stratify,
    taxonomy_summary,
    threshold_sweep,
)
from .env import GridSpec, State
from .metrics import GoalRecord, read_records, write_records
from .policy_graph import build_successor_map, decompose
from .render import map_filename, render_policy_map
from .trainer import TrainConfig, TrainLog, train_seed
from .valuenet import load_checkpoint, save_checkpoint

log = logging.getLogger(__name__)

CANONICAL_CONDITIONS = (
    "open8_td_uniform",
    "open8_mc_uniform",
    "open8_td_edge",
    "open12_td_uniform",
    "bottleneck8_td_uniform",
)

MANIFEST = "manifest.json"


class MissingInputError(FileNotFoundError):
    pass


@dataclass
class RunConfig:
    condition: str
    train: TrainConfig
    seeds: list[int]
    out_dir: Path = Path("runs")
    jobs: int = 1
    map_seeds: list[int] = field(default_factory=list)
    map_goals: list[State] | None = None  # None means every valid goal
    experiment_id: str = ""

    @property
    def grid(self) -> GridSpec:
        return self.train.grid

    @property
    def artifact_dir(self) -> Path:
        return Path(self.out_dir) / self.condition

    def to_dict(self) -> dict:
        t = self.train.to_dict()
        grid = t.pop("grid")
        t.pop("seed")
        return {
            "condition": self.condition,
            "experiment_id": self.experiment_id,
            "grid": grid,
            "train": t,
            "seeds": list(self.seeds),
            "maps": {
                "seeds": list(self.map_seeds),
                "goals": "all" if self.map_goals is None else [list(g) for g in self.map_goals],
            },
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def seed_config(self, seed: int) -> TrainConfig:
        d = self.train.to_dict()
        d["seed"] = seed
        return TrainConfig.from_dict(d)


def parse_run_config(doc: dict, out_dir: str | Path = "runs", jobs: int = 1) -> RunConfig:
    grid = GridSpec.from_dict(doc["grid"])
    train = TrainConfig(grid=grid, **doc.get("train", {}))
    maps = doc.get("maps") or {}
    goals = maps.get("goals", "all")
    return RunConfig(
        condition=str(doc["condition"]),
        train=train,
        seeds=[int(s) for s in doc["seeds"]],
        out_dir=Path(out_dir),
        jobs=jobs,
        map_seeds=[int(s) for s in maps.get("seeds", [])],
        map_goals=None if goals == "all" else [State(int(x), int(y)) for x, y in goals],
        experiment_id=str(doc.get("experiment_id", "")),
    )


def load_run_config(path_or_name: str | Path, out_dir: str | Path = "runs", jobs: int = 1) -> RunConfig:
    """Load a YAML run config, or one of the bundled canonical conditions by name."""
    p = Path(path_or_name)
    if p.exists():
        text = p.read_text()
    elif str(path_or_name) in CANONICAL_CONDITIONS:
        text = resources.files("policygraph.configs").joinpath(f"{path_or_name}.yaml").read_text()
    else:
        raise MissingInputError(f"no config file or canonical condition named {path_or_name!r}")
    return parse_run_config(yaml.safe_load(text), out_dir=out_dir, jobs=jobs)


# -- per-seed work ------------------------------------------------------


@dataclass
class SeedResult:
    seed: int
    records: list[GoalRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    distance: list = field(default_factory=list)
    svgs: dict[str, str] = field(default_factory=dict)
    error: str | None = None


def _seed_worker(args: tuple[RunConfig, int, bool]) -> SeedResult:
    cfg, seed, do_train = args
    try:
        out = cfg.artifact_dir
        ckpt = out / "checkpoints" / f"seed_{seed}.ckpt"
        log_path = out / "train_logs" / f"seed_{seed}.csv"
        if do_train:
            p, tlog = train_seed(cfg.seed_config(seed))
            save_checkpoint(ckpt, p)
            tlog.write_csv(log_path)
        else:
            if not ckpt.exists():
                raise MissingInputError(f"missing checkpoint {ckpt}")
            p, _ = load_checkpoint(ckpt)
            tlog = TrainLog.read_csv(log_path) if log_path.exists() else TrainLog()
        return census_seed(cfg, seed, p, tlog)
    except Exception as exc:  # recorded in the manifest; other seeds carry on
        log.error("seed %d failed: %s", seed, exc)
        return SeedResult(seed=seed, error="".join(traceback.format_exception_only(type(exc), exc)).strip())


def census_seed(cfg: RunConfig, seed: int, p, tlog: TrainLog) -> SeedResult:
    grid = cfg.grid
    H = grid.horizon
    maps = successor_maps(p, grid)
    records = evaluate_seed(p, grid, H, cfg.condition, seed, maps=maps)
    edge, interior = edge_interior_split(records, grid)
    summary = {
        "condition": cfg.condition,
        "seed": seed,
        "train_success": tlog.train_success if tlog.success else None,
        "last100_success": tlog.last100_success if tlog.success else None,
        "eval_success": float(np.mean([r.succ_H for r in records])),
        "edge_success": edge,
        "interior_success": interior,
    }
    distance = seed_distance_success(maps, grid, H, default_distance_bins(grid))
    svgs = {}
    if seed in cfg.map_seeds:
        goals = grid.states if cfg.map_goals is None else cfg.map_goals
        by_goal = {r.goal: r for r in records}
        for g in goals:
            m = maps[grid.index[State(*g)]]
            svgs[map_filename(cfg.condition, seed, g)] = render_policy_map(
                m, decompose(m), by_goal[State(*g)], grid,
                title=f"{cfg.condition} seed {seed} goal ({g[0]},{g[1]})",
            )
    return SeedResult(seed, records, summary, distance, svgs)


# -- CSV writers --------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v))
    return str(v)


def write_table(path: str | Path, columns: Sequence[str], rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                w.writerow([_cell(row.get(c)) for c in columns])
            else:
                vals = row._asdict() if hasattr(row, "_asdict") else dict(zip(columns, row))
                w.writerow([_cell(vals[c]) for c in columns])


def read_table(path: str | Path) -> list[dict]:
    if not Path(path).exists():
        raise MissingInputError(f"missing input file {path}")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


SEED_SUMMARY_COLUMNS = ["condition", "seed", "train_success", "last100_success", "eval_success",
                        "edge_success", "interior_success"]
SWEEP_COLUMNS = ["condition", "tau", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy",
                 "no_predicted_positives"]
RANKING_COLUMNS = ["condition", "seed", "auc", "spearman", "n_fail", "n_ok"]
STRATA_COLUMNS = ["condition", "band", "n", "mean_succ", "failure_pct", "mean_goal_basin",
                  "mean_comp_basin", "mean_frag"]
TAXONOMY_COLUMNS = ["condition", "regime", "n", "pct", "mean_succ", "mean_lgs", "mean_goal_basin",
                    "mean_comp_basin", "mean_frag"]
CROSSTAB_COLUMNS = ["regime", "zero_pct", "low_pct", "partial_pct", "high_pct", "perfect_pct"]
DISTANCE_COLUMNS = ["condition", "bin", "mean", "std"]


def write_diagnostics(out: Path, records: list[GoalRecord]) -> None:
    write_table(out / "sweep.csv", SWEEP_COLUMNS, threshold_sweep(records))
    write_table(out / "ranking.csv", RANKING_COLUMNS, per_seed_ranking(records))
    write_table(out / "strata.csv", STRATA_COLUMNS, stratify(records))
    write_table(out / "taxonomy.csv", TAXONOMY_COLUMNS, taxonomy_summary(records))
    write_table(out / "crosstab.csv", CROSSTAB_COLUMNS, regime_crosstab(records))


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, failures: dict[int, str]) -> dict:
    out = cfg.artifact_dir
    files = {
        str(p.relative_to(out)): _file_digest(p)
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != MANIFEST
    }
    manifest = {
        "condition": cfg.condition,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "code_version": __version__,
        "seeds": list(cfg.seeds),
        "failed_seeds": {str(k): v for k, v in sorted(failures.items())},
        "files": files,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _limit_blas_threads() -> None:
    from threadpoolctl import threadpool_limits

    threadpool_limits(1)


def _map_seeds(cfg: RunConfig, do_train: bool) -> list[SeedResult]:
    tasks = [(cfg, s, do_train) for s in cfg.seeds]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_limit_blas_threads) as pool:
            results = list(pool.map(_seed_worker, tasks))
    else:
        results = [_seed_worker(t) for t in tasks]
    return sorted(results, key=lambda r: r.seed)


def run_condition(cfg: RunConfig, train: bool = True) -> Path:
    """Train (or reload) every seed, run the census and write all artifacts."""
    out = cfg.artifact_dir
    for sub in ("checkpoints", "train_logs", "maps"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    results = _map_seeds(cfg, do_train=train)
    ok = [r for r in results if r.error is None]
    failures = {r.seed: r.error for r in results if r.error is not None}

    records = [rec for r in ok for rec in r.records]
    write_records(out / "per_goal.csv", records)
    write_table(out / "seed_summary.csv", SEED_SUMMARY_COLUMNS, [r.summary for r in ok])
    bins = default_distance_bins(cfg.grid)
    dist = summarize_distance([r.distance for r in ok], bins)
    write_table(out / "distance.csv", DISTANCE_COLUMNS,
                [{"condition": cfg.condition, "bin": b, "mean": m, "std": s} for b, m, s in dist])
    if records:
        write_diagnostics(out, records)
    for r in ok:
        for name, svg in sorted(r.svgs.items()):
            (out / "maps" / name).write_text(svg, encoding="utf-8")
    write_manifest(cfg, failures)
    log.info("%s: %d/%d seeds ok -> %s", cfg.condition, len(ok), len(results), out)
    return out


def train_condition(cfg: RunConfig) -> dict[int, str]:
    """Train every seed and write checkpoints and logs only; returns failures."""
    out = cfg.artifact_dir
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "train_logs").mkdir(parents=True, exist_ok=True)
    failures = {}
    for seed in cfg.seeds:
        try:
            p, tlog = train_seed(cfg.seed_config(seed))
        except Exception as exc:
            failures[seed] = str(exc)
            continue
        save_checkpoint(out / "checkpoints" / f"seed_{seed}.ckpt", p)
        tlog.write_csv(out / "train_logs" / f"seed_{seed}.csv")
    return failures


def render_maps(cfg: RunConfig, seed: int, goals: Sequence[State] | None = None) -> list[Path]:
    out = cfg.artifact_dir
    ckpt = out / "checkpoints" / f"seed_{seed}.ckpt"
    if not ckpt.exists():
        raise MissingInputError(f"missing checkpoint {ckpt}")
    p, _ = load_checkpoint(ckpt)
    grid = cfg.grid
    (out / "maps").mkdir(parents=True, exist_ok=True)
    from .census import goal_record

    paths = []
    for g in (grid.states if goals is None else goals):
        m = build_successor_map(p, grid, g)
        rec = goal_record(m, grid, grid.horizon, cfg.condition, seed)
        path = out / "maps" / map_filename(cfg.condition, seed, g)
        path.write_text(render_policy_map(m, decompose(m), rec, grid,
                                          title=f"{cfg.condition} seed {seed} goal ({g[0]},{g[1]})"),
                        encoding="utf-8")
        paths.append(path)
    return paths


# -- cross-condition report ---------------------------------------------


MAIN_PERF_COLUMNS = ["condition", "n_seeds", "train_mean", "train_std", "last100_mean", "last100_std",
                     "eval_mean", "eval_std", "eval_min", "eval_max"]
EDGE_INTERIOR_COLUMNS = ["condition", "edge_success", "interior_success"]
RANKING_SUMMARY_COLUMNS = ["condition", "mean_auc", "min_auc", "n_auc", "mean_rho", "min_rho", "n_rho"]
STRATA_RANGE_COLUMNS = ["band", "succ_min", "succ_max", "fail_min", "fail_max", "goal_min", "goal_max",
                        "comp_min", "comp_max"]


def _floats(rows: list[dict], key: str) -> list[float]:
    return [float(r[key]) for r in rows if r.get(key) not in (None, "")]


def _stats(vals: list[float]) -> tuple:
    if not vals:
        return None, None
    return float(np.mean(vals)), float(np.std(vals))


def aggregate_report(artifact_dirs: Sequence[str | Path], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_records: list[GoalRecord] = []
    perf, edge_rows = [], []
    for d in map(Path, artifact_dirs):
        if not (d / "per_goal.csv").exists():
            raise MissingInputError(f"missing input file {d / 'per_goal.csv'}")
        records = read_records(d / "per_goal.csv")
        all_records.extend(records)
        summary = read_table(d / "seed_summary.csv")
        cond = records[0].condition if records else d.name
        tr, l100, ev = _floats(summary, "train_success"), _floats(summary, "last100_success"), _floats(summary, "eval_success")
        perf.append({
            "condition": cond, "n_seeds": len(summary),
            "train_mean": _stats(tr)[0], "train_std": _stats(tr)[1],
            "last100_mean": _stats(l100)[0], "last100_std": _stats(l100)[1],
            "eval_mean": _stats(ev)[0], "eval_std": _stats(ev)[1],
            "eval_min": min(ev) if ev else None, "eval_max": max(ev) if ev else None,
        })
        edge_rows.append({
            "condition": cond,
            "edge_success": _stats(_floats(summary, "edge_success"))[0],
            "interior_success": _stats(_floats(summary, "interior_success"))[0],
        })

    write_table(out / "main_performance.csv", MAIN_PERF_COLUMNS, perf)
    write_table(out / "edge_interior.csv", EDGE_INTERIOR_COLUMNS, edge_rows)
    if not all_records:
        return out
    write_table(out / "sweep.csv", SWEEP_COLUMNS, threshold_sweep(all_records))

    ranking = per_seed_ranking(all_records)
    write_table(out / "ranking.csv", RANKING_COLUMNS, ranking)
    summary_rows = []
    for cond in dict.fromkeys(r.condition for r in ranking):
        aucs = [r.auc for r in ranking if r.condition == cond and r.auc is not None]
        rhos = [r.spearman for r in ranking if r.condition == cond and r.spearman is not None]
        summary_rows.append({
            "condition": cond,
            "mean_auc": _stats(aucs)[0], "min_auc": min(aucs) if aucs else None, "n_auc": len(aucs),
            "mean_rho": _stats(rhos)[0], "min_rho": min(rhos) if rhos else None, "n_rho": len(rhos),
        })
    write_table(out / "ranking_summary.csv", RANKING_SUMMARY_COLUMNS, summary_rows)

    strata = stratify(all_records)
    write_table(out / "strata.csv", STRATA_COLUMNS, strata)
    ranges = []
    for band in BANDS:
        rows = [s for s in strata if s.band == band and s.n > 0]

        def rng(attr):
            vals = [getattr(s, attr) for s in rows]
            return (min(vals), max(vals)) if vals else (None, None)

        (smin, smax), (fmin, fmax) = rng("mean_succ"), rng("failure_pct")
        (gmin, gmax), (cmin, cmax) = rng("mean_goal_basin"), rng("mean_comp_basin")
        ranges.append({"band": band, "succ_min": smin, "succ_max": smax, "fail_min": fmin, "fail_max": fmax,
                       "goal_min": gmin, "goal_max": gmax, "comp_min": cmin, "comp_max": cmax})
    write_table(out / "strata_ranges.csv", STRATA_RANGE_COLUMNS, ranges)

    taxonomy = taxonomy_summary(all_records, pooled_label="ALL") + taxonomy_summary(all_records)
    write_table(out / "taxonomy.csv", TAXONOMY_COLUMNS, taxonomy)
    write_table(out / "crosstab.csv", CROSSTAB_COLUMNS, regime_crosstab(all_records))
    return out
