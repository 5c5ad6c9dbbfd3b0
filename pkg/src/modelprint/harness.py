"""Benchmark construction, scheme evaluation, metrics, and reports.

A benchmark is a triplet: victim models, per-victim stolen models (each
carrying the tag of the stealing/obfuscation method that produced it),
and per-victim unrelated models.  Evaluation scores every pair, sweeps
thresholds into a ROC, and reports TPR at a capped FPR, averaged over
runs with independent seeds.

True/false positive rates weight victims equally: the per-victim flag
fraction is computed first and then averaged across victims, which is
not the same as pooling all pairs when pair counts differ.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import Classifier, LabeledDataset, pair_stats
from .errors import (
    EmptyPairSet,
    EmptyTaskList,
    ManifestError,
    ModelprintError,
)
from .schemes import FingerprintScheme, SchemeSpec, assemble_scheme
from .fingerprints import fingerprint_distance
from .tinylearn import (
    MLPClassifier,
    MLPSpec,
    SyntheticTaskSpec,
    TrainConfig,
    generate_task,
    load_weights,
    save_weights,
    train,
)
from .variants import (
    TaskTag,
    extract,
    finetune,
    prune,
    quantize,
    same_copy,
    transfer,
    unrelated,
)

log = logging.getLogger(__name__)

# Seed-stream codes for the documented splitting scheme: every random
# choice is keyed by SeedSequence((root, stream, indices...)).
STREAM_VICTIM_TASK = 0
STREAM_VICTIM_MODEL = 1
STREAM_UNRELATED_TASK = 2
STREAM_UNRELATED_MODEL = 3
STREAM_STOLEN = 4
STREAM_QUERY = 5
STREAM_TRANSFER = 6
STREAM_POOL = 7


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts (root, stream, indices)."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(
        1, np.uint64
    )
    return int(state[0])


# ---------------------------------------------------------------------------
# Benchmark configuration and construction
# ---------------------------------------------------------------------------

DESK_TASK = SyntheticTaskSpec(
    family="blobs",
    num_classes=4,
    dim=8,
    n_train=400,
    n_test=1000,
    label_noise=0.1,
    noise_scale=1.2,
)
DESK_ARCH = MLPSpec(layer_widths=(8, 48, 24, 4), activation="relu")
DESK_TRAIN = TrainConfig(epochs=80, learning_rate=0.05, batch_size=32)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Recipe for a benchmark triplet.

    ``stolen`` lists one tag per stolen model to build for every victim;
    tag params carry the method knobs (prune fraction, quantize bits,
    extraction pool size, ...).  Per-model seeds are derived from
    ``seed`` through the documented stream codes.
    """

    task: SyntheticTaskSpec = DESK_TASK
    arch: MLPSpec = DESK_ARCH
    train: TrainConfig = DESK_TRAIN
    n_victims: int = 5
    stolen: tuple[TaskTag, ...] = ()
    n_unrelated: int = 10
    seed: int = 0

    def to_record(self) -> dict:
        return {
            "task": dataclasses.asdict(self.task),
            "arch": dataclasses.asdict(self.arch) | {
                "layer_widths": list(self.arch.layer_widths)
            },
            "train": dataclasses.asdict(self.train),
            "n_victims": self.n_victims,
            "stolen": [t.to_record() for t in self.stolen],
            "n_unrelated": self.n_unrelated,
            "seed": self.seed,
        }

    @staticmethod
    def from_record(rec: dict) -> "BenchmarkConfig":
        try:
            arch = dict(rec["arch"])
            arch["layer_widths"] = tuple(arch["layer_widths"])
            return BenchmarkConfig(
                task=SyntheticTaskSpec(**rec["task"]),
                arch=MLPSpec(**arch),
                train=TrainConfig(**rec["train"]),
                n_victims=int(rec["n_victims"]),
                stolen=tuple(TaskTag.from_record(t) for t in rec["stolen"]),
                n_unrelated=int(rec["n_unrelated"]),
                seed=int(rec["seed"]),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ManifestError(f"invalid benchmark config: {err}") from err


def default_stolen_tags() -> tuple[TaskTag, ...]:
    """The desk ladder: five stolen models per stealing/obfuscation task."""
    tags: list[TaskTag] = []
    tags += [TaskTag("same", {"index": i}) for i in range(5)]
    tags += [TaskTag("prune", {"fraction": f}) for f in (0.05, 0.15, 0.25, 0.35, 0.45)]
    tags += [TaskTag("quantize", {"bits": b}) for b in (6, 7, 8, 9, 10)]
    tags += [TaskTag("finetune", {"epochs": 5, "index": i}) for i in range(5)]
    tags += [
        TaskTag("probit_extraction", {"pool_size": p})
        for p in (60, 100, 160, 250, 400)
    ]
    tags += [
        TaskTag("label_extraction", {"pool_size": p})
        for p in (60, 100, 160, 250, 400)
    ]
    return tuple(tags)


def default_benchmark_config(seed: int = 0, **overrides) -> BenchmarkConfig:
    """The desk benchmark: 5 victims, 5 stolen per task, 10 unrelated each."""
    return BenchmarkConfig(stolen=default_stolen_tags(), seed=seed, **overrides)


@dataclass
class Victim:
    model: MLPClassifier
    train_data: LabeledDataset
    test_data: LabeledDataset
    task: SyntheticTaskSpec

    def data(self, split: str) -> LabeledDataset:
        return self.train_data if split == "train" else self.test_data


@dataclass
class BenchmarkTriplet:
    """Victims with their per-victim stolen and unrelated model sets."""

    victims: tuple[Victim, ...]
    stolen: dict[str, tuple[tuple[Classifier, TaskTag], ...]]
    unrelated: dict[str, tuple[tuple[Classifier, TaskTag], ...]]
    config: BenchmarkConfig | None = None

    def __post_init__(self):
        for v in self.victims:
            vid = v.model.identity
            if not self.stolen.get(vid) or not self.unrelated.get(vid):
                raise ValueError(f"victim {vid} needs nonempty stolen and unrelated sets")
            for _, tag in self.stolen[vid]:
                if not tag.is_positive:
                    raise ValueError(f"stolen set of {vid} carries an 'unrelated' tag")
            for _, tag in self.unrelated[vid]:
                if tag.is_positive:
                    raise ValueError(f"unrelated set of {vid} carries a positive tag")

    @property
    def tasks(self) -> tuple[str, ...]:
        seen: list[str] = []
        for v in self.victims:
            for _, tag in self.stolen[v.model.identity]:
                if tag.method not in seen:
                    seen.append(tag.method)
        return tuple(seen)

    def victim_by_id(self, vid: str) -> Victim:
        for v in self.victims:
            if v.model.identity == vid:
                return v
        raise KeyError(vid)


def _build_stolen(
    victim: Victim, tag: TaskTag, config: BenchmarkConfig, seed: int
) -> tuple[Classifier, TaskTag]:
    params = tag.params
    model = victim.model
    if tag.method == "same":
        out = same_copy(model, identity=f"{model.identity}#same{params.get('index', 0)}")
    elif tag.method == "prune":
        out = prune(model, params["fraction"], seed=seed)
    elif tag.method == "quantize":
        out = quantize(model, params["bits"])
    elif tag.method == "finetune":
        cfg = TrainConfig(
            epochs=params.get("epochs", 5),
            learning_rate=params.get("learning_rate", 0.01),
        )
        out = finetune(model, victim.train_data, cfg, seed=seed)
    elif tag.method == "transfer":
        new_task = replace(
            config.task,
            seed=derive_seed(config.seed, STREAM_TRANSFER, seed),
            concept_seed=derive_seed(config.seed, STREAM_TRANSFER, seed, 1),
        )
        new_train, _ = generate_task(new_task)
        cfg = TrainConfig(
            epochs=params.get("epochs", 20),
            learning_rate=params.get("learning_rate", 0.02),
        )
        out = transfer(model, new_train, cfg, seed=seed)
    elif tag.method in ("label_extraction", "probit_extraction",
                        "adversarial_label_extraction"):
        pool = victim.train_data
        pool_size = params.get("pool_size")
        if pool_size and pool_size < len(pool):
            rng = np.random.default_rng(derive_seed(seed, STREAM_POOL))
            pool = pool.take(rng.choice(len(pool), pool_size, replace=False))
        mode = {
            "label_extraction": "labels",
            "probit_extraction": "probits",
            "adversarial_label_extraction": "adversarial_labels",
        }[tag.method]
        out = extract(
            model, pool, config.arch, config.train, mode=mode, seed=seed,
            n_adversarial=params.get("n_adversarial"),
        )
    else:
        raise ValueError(f"cannot build stolen model for method {tag.method!r}")
    return out, out.tag


def build_benchmark(config: BenchmarkConfig) -> BenchmarkTriplet:
    """Train victims, derive their stolen sets, and train unrelated models.

    Fully reproducible from the config: every task draw and training run
    is keyed by seeds derived from ``config.seed``.
    """
    if not config.stolen:
        raise EmptyTaskList("benchmark config lists no stolen-model tags")
    victims: list[Victim] = []
    stolen: dict[str, tuple] = {}
    unrelated_map: dict[str, tuple] = {}
    for i in range(config.n_victims):
        task = replace(config.task, seed=derive_seed(config.seed, STREAM_VICTIM_TASK, i))
        train_data, test_data = generate_task(task)
        arch = replace(config.arch, seed=derive_seed(config.seed, STREAM_VICTIM_MODEL, i))
        model = train(train_data, arch, config.train, identity=f"victim-{i}")
        victim = Victim(model, train_data, test_data, task)
        victims.append(victim)

        entries = []
        for k, tag in enumerate(config.stolen):
            entries.append(
                _build_stolen(victim, tag, config, derive_seed(config.seed, STREAM_STOLEN, i, k))
            )
        stolen[model.identity] = tuple(entries)

        negatives = []
        for j in range(config.n_unrelated):
            utask = replace(
                config.task, seed=derive_seed(config.seed, STREAM_UNRELATED_TASK, i, j)
            )
            utrain, _ = generate_task(utask)
            neg = unrelated(
                utrain,
                config.arch,
                config.train,
                seed=derive_seed(config.seed, STREAM_UNRELATED_MODEL, i, j),
                identity=f"victim-{i}/unrelated-{j}",
            )
            negatives.append((neg, neg.tag))
        unrelated_map[model.identity] = tuple(negatives)
    return BenchmarkTriplet(tuple(victims), stolen, unrelated_map, config)


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------


def save_benchmark(bench: BenchmarkTriplet, out_dir) -> Path:
    """Write weight files and a JSON manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"version": 1, "victims": []}
    if bench.config is not None:
        manifest["config"] = bench.config.to_record()
    for i, victim in enumerate(bench.victims):
        vid = victim.model.identity
        vfile = f"victim-{i}.mpw"
        save_weights(victim.model, out_dir / vfile)
        ventry = {
            "id": vid,
            "file": vfile,
            "task": dataclasses.asdict(victim.task),
            "stolen": [],
            "unrelated": [],
        }
        for k, (model, tag) in enumerate(bench.stolen[vid]):
            fname = f"victim-{i}_stolen-{k}.mpw"
            save_weights(model, out_dir / fname)
            ventry["stolen"].append(
                {"id": model.identity, "file": fname, "tag": tag.to_record()}
            )
        for j, (model, tag) in enumerate(bench.unrelated[vid]):
            fname = f"victim-{i}_unrelated-{j}.mpw"
            save_weights(model, out_dir / fname)
            ventry["unrelated"].append(
                {"id": model.identity, "file": fname, "tag": tag.to_record()}
            )
        manifest["victims"].append(ventry)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return path


def load_benchmark(bench_dir) -> BenchmarkTriplet:
    """Rebuild a benchmark from its manifest: datasets from task specs, weights from files."""
    bench_dir = Path(bench_dir)
    path = bench_dir / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except FileNotFoundError as err:
        raise ManifestError(f"no manifest at {path}") from err
    except json.JSONDecodeError as err:
        raise ManifestError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    try:
        victims, stolen, unrelated_map = [], {}, {}
        for ventry in manifest["victims"]:
            task = SyntheticTaskSpec(**ventry["task"])
            train_data, test_data = generate_task(task)
            model = load_weights(bench_dir / ventry["file"], identity=ventry["id"])
            victims.append(Victim(model, train_data, test_data, task))
            stolen[ventry["id"]] = tuple(
                (
                    load_weights(
                        bench_dir / e["file"],
                        identity=e["id"],
                        tag=TaskTag.from_record(e["tag"]),
                    ),
                    TaskTag.from_record(e["tag"]),
                )
                for e in ventry["stolen"]
            )
            unrelated_map[ventry["id"]] = tuple(
                (
                    load_weights(
                        bench_dir / e["file"],
                        identity=e["id"],
                        tag=TaskTag.from_record(e["tag"]),
                    ),
                    TaskTag.from_record(e["tag"]),
                )
                for e in ventry["unrelated"]
            )
        config = (
            BenchmarkConfig.from_record(manifest["config"])
            if "config" in manifest
            else None
        )
        return BenchmarkTriplet(tuple(victims), stolen, unrelated_map, config)
    except (KeyError, TypeError, ValueError, FileNotFoundError) as err:
        if isinstance(err, ManifestError):
            raise
        raise ManifestError(f"{path}: {err}") from err


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairScore:
    """Oriented score for one (victim, suspect) pair: larger = more suspicious."""

    run: int
    victim: str
    suspect: str
    task: str
    positive: bool
    score: float


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points from a sweep over all observed score thresholds."""

    points: tuple[tuple[float, float], ...]
    auc: float


def tpr_fpr_at_threshold(
    scores, threshold: float, victims=None
) -> tuple[float, float]:
    """Per-victim-averaged TPR and FPR of the rule ``score >= threshold``.

    Every victim contributes its own flag fraction, and victims are then
    averaged with equal weight regardless of how many pairs each has.
    ``victims`` may be a list of victim ids or a benchmark triplet;
    victims missing positive or negative pairs raise ``EmptyPairSet``.
    """
    scores = list(scores)
    if isinstance(victims, BenchmarkTriplet):
        victims = [v.model.identity for v in victims.victims]
    if victims is None:
        victims = sorted({s.victim for s in scores})
    if not victims:
        raise EmptyPairSet("no victims to evaluate")
    tprs, fprs = [], []
    for vid in victims:
        pos = [s.score >= threshold for s in scores if s.victim == vid and s.positive]
        neg = [s.score >= threshold for s in scores if s.victim == vid and not s.positive]
        if not pos or not neg:
            raise EmptyPairSet(f"victim {vid} has no scored positive or negative pairs")
        tprs.append(np.mean(pos))
        fprs.append(np.mean(neg))
    return float(np.mean(tprs)), float(np.mean(fprs))


def roc_curve(scores, victims=None) -> RocCurve:
    """Exhaustive threshold sweep over the observed scores.

    Starts at (0, 0) (threshold above every score) and ends at (1, 1)
    (threshold at the minimum score); both rates are non-decreasing along
    the sweep.
    """
    scores = list(scores)
    if not scores:
        raise EmptyPairSet("cannot build a ROC from no scores")
    thresholds = sorted({s.score for s in scores}, reverse=True)
    points = [(0.0, 0.0)]
    for t in thresholds:
        tpr, fpr = tpr_fpr_at_threshold(scores, t, victims)
        points.append((fpr, tpr))
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.trapezoid(ys, xs)) if hasattr(np, "trapezoid") else float(np.trapz(ys, xs))
    return RocCurve(tuple(points), auc)


def tpr_at_fpr(curve: RocCurve, fpr_cap: float = 0.05) -> float:
    """Best TPR among curve points with FPR at most the cap; 0 if none."""
    feasible = [tpr for fpr, tpr in curve.points if fpr <= fpr_cap]
    return max(feasible) if feasible else 0.0


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _mean_std(values) -> dict:
    arr = np.asarray(list(values), dtype=np.float64)
    return {
        "mean": float(arr.mean()) if arr.size else None,
        "std": float(arr.std()) if arr.size else None,
        "runs": [float(v) for v in arr],
    }


@dataclass
class EvalReport:
    """Per-task and aggregate TPR@cap with per-pair scores and statistics."""

    scheme: dict
    budget: int
    n_runs: int
    run_seeds: tuple[int, ...]
    fpr_cap: float
    per_task: dict
    aggregate: dict
    scores: tuple[PairScore, ...]
    pair_statistics: dict
    skipped: tuple[dict, ...]
    model_scale: dict
    run_config: dict

    def to_record(self) -> dict:
        return {
            "version": __version__,
            "scheme": self.scheme,
            "budget": self.budget,
            "n_runs": self.n_runs,
            "run_seeds": list(self.run_seeds),
            "fpr_cap": self.fpr_cap,
            "per_task": self.per_task,
            "aggregate": self.aggregate,
            "scores": [dataclasses.asdict(s) for s in self.scores],
            "pair_statistics": self.pair_statistics,
            "skipped": list(self.skipped),
            "model_scale": self.model_scale,
            "run_config": self.run_config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))

    def csv_rows(self) -> list[tuple]:
        rows = []
        for task in sorted(self.per_task):
            entry = self.per_task[task]
            for run, (tpr, seed) in enumerate(zip(entry["runs"], self.run_seeds)):
                rows.append((task, self.budget, run, seed, tpr))
        for name in ("mean_over_tasks", "pooled_pairs"):
            entry = self.aggregate[name]
            for run, (tpr, seed) in enumerate(zip(entry["runs"], self.run_seeds)):
                rows.append((f"aggregate:{name}", self.budget, run, seed, tpr))
        return rows

    def save(self, out_dir, stem: str = "report") -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        jpath = out_dir / f"{stem}.json"
        jpath.write_text(self.to_json() + "\n")
        cpath = out_dir / f"{stem}.csv"
        with cpath.open("w") as fh:
            fh.write("task,budget,run,seed,tpr_at_cap\n")
            for row in self.csv_rows():
                fh.write(",".join(str(v) for v in row) + "\n")
        return jpath, cpath


def _score_cell(scheme_rec: dict, victim: Victim, suspects, run: int, qseed: int):
    """Score one (run, victim) cell; returns PairScores or a skip record."""
    scheme = assemble_scheme(SchemeSpec.from_record(scheme_rec))
    seed_set = victim.data(scheme.spec.seed_split)
    vid = victim.model.identity
    try:
        qs = scheme.query_set(victim.model, seed_set, qseed)
        fp_v = scheme.fingerprint(victim.model, qs)
    except ModelprintError as err:
        return None, {"run": run, "victim": vid, "error": err.code, "detail": str(err)}
    out = []
    for model, tag in suspects:
        dist = fingerprint_distance(fp_v, scheme.fingerprint(model, qs))
        out.append(
            PairScore(run, vid, model.identity, tag.method, tag.is_positive, -dist)
        )
    return out, None


def _eval_cell_star(args):
    return _score_cell(*args)


def evaluate(
    scheme,
    benchmark: BenchmarkTriplet,
    budget: int | None = None,
    n_runs: int = 5,
    seed: int = 0,
    fpr_cap: float = 0.05,
    workers: int = 1,
    compute_pair_stats: bool = True,
) -> EvalReport:
    """Score every pair over ``n_runs`` seeded runs and report TPR@cap.

    ``scheme`` is a SchemeSpec or an assembled scheme.  Run r uses root
    seed ``seed + r``; query seeds are derived per victim.  Victims whose
    sampler is infeasible at this budget are skipped (logged, not fatal).
    Two aggregates are reported per run and labeled explicitly: the mean
    of per-task TPRs and the TPR of all pairs pooled across tasks.
    """
    spec = scheme.spec if isinstance(scheme, FingerprintScheme) else scheme
    if budget is not None and budget != spec.budget:
        spec = replace(spec, budget=int(budget))
    budget = spec.budget
    spec_rec = spec.to_record()
    run_seeds = tuple(seed + r for r in range(n_runs))

    cells = []
    for run, rseed in enumerate(run_seeds):
        for vi, victim in enumerate(benchmark.victims):
            vid = victim.model.identity
            suspects = benchmark.stolen[vid] + benchmark.unrelated[vid]
            cells.append((spec_rec, victim, suspects, run, derive_seed(rseed, STREAM_QUERY, vi)))

    results = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_cell_star, cells))
    else:
        results = [_score_cell(*cell) for cell in cells]

    scores: list[PairScore] = []
    skipped: list[dict] = []
    for cell_scores, skip in results:
        if skip is not None:
            log.warning("skipping victim %s in run %d: %s", skip["victim"], skip["run"], skip["error"])
            skipped.append(skip)
        else:
            scores.extend(cell_scores)
    scores.sort(key=lambda s: (s.run, s.victim, s.suspect))

    tasks = benchmark.tasks
    per_task = {t: [] for t in tasks}
    pooled = []
    for run in range(n_runs):
        run_scores = [s for s in scores if s.run == run]
        negatives = [s for s in run_scores if not s.positive]
        run_victims = sorted({s.victim for s in run_scores})
        if not run_victims or not negatives:
            for t in tasks:
                per_task[t].append(0.0)
            pooled.append(0.0)
            continue
        for t in tasks:
            subset = [s for s in run_scores if s.positive and s.task == t] + negatives
            per_task[t].append(tpr_at_fpr(roc_curve(subset, run_victims), fpr_cap))
        pooled.append(tpr_at_fpr(roc_curve(run_scores, run_victims), fpr_cap))

    per_task_summary = {t: _mean_std(vals) for t, vals in per_task.items()}
    mean_over_tasks = [
        float(np.mean([per_task[t][run] for t in tasks])) for run in range(n_runs)
    ]
    aggregate = {
        "mean_over_tasks": _mean_std(mean_over_tasks),
        "pooled_pairs": _mean_std(pooled),
    }

    pair_statistics = {}
    if compute_pair_stats:
        for victim in benchmark.victims:
            vid = victim.model.identity
            data = victim.data(spec.seed_split)
            for model, tag in benchmark.stolen[vid] + benchmark.unrelated[vid]:
                st = pair_stats(victim.model, model, data)
                pair_statistics[f"{vid}|{model.identity}"] = {
                    "task": tag.method,
                    "positive": tag.is_positive,
                    "alpha": st.alpha,
                    "alpha_prime": st.alpha_prime,
                    "delta": st.delta,
                    "delta_c": st.delta_c,
                    "n_eval": st.n_eval,
                }

    sample_victim = benchmark.victims[0]
    model_scale = {
        "layer_widths": list(sample_victim.model.spec.layer_widths),
        "n_params": sample_victim.model.n_params,
        "n_victims": len(benchmark.victims),
        "n_train": len(sample_victim.train_data),
        "n_test": len(sample_victim.test_data),
    }
    run_config = {
        "scheme": spec_rec,
        "budget": budget,
        "n_runs": n_runs,
        "seed": seed,
        "fpr_cap": fpr_cap,
    }
    return EvalReport(
        scheme=spec_rec,
        budget=budget,
        n_runs=n_runs,
        run_seeds=run_seeds,
        fpr_cap=fpr_cap,
        per_task=per_task_summary,
        aggregate=aggregate,
        scores=tuple(scores),
        pair_statistics=pair_statistics,
        skipped=tuple(skipped),
        model_scale=model_scale,
        run_config=run_config,
    )


# ---------------------------------------------------------------------------
# Budget sweeps and distance reports
# ---------------------------------------------------------------------------


@dataclass
class SweepReport:
    """TPR@cap per budget; the data behind budget-vs-performance plots."""

    budgets: tuple[int, ...]
    reports: dict

    def csv_rows(self) -> list[tuple]:
        rows = []
        for budget in self.budgets:
            rows.extend(self.reports[budget].csv_rows())
        return rows

    def save_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            fh.write("task,budget,run,seed,tpr_at_cap\n")
            for row in self.csv_rows():
                fh.write(",".join(str(v) for v in row) + "\n")
        return path


def budget_sweep(
    scheme,
    benchmark: BenchmarkTriplet,
    budgets,
    n_runs: int = 5,
    seed: int = 0,
    fpr_cap: float = 0.05,
    workers: int = 1,
    cell_callback=None,
) -> SweepReport:
    """Evaluate the scheme at each budget (ascending); shared run seeds.

    ``cell_callback(budget, report)`` fires after each completed budget so
    callers can stream partial grids to disk.
    """
    budgets = [int(b) for b in budgets]
    if budgets != sorted(budgets):
        raise ValueError("budgets must be ascending")
    reports = {}
    for budget in budgets:
        report = evaluate(
            scheme,
            benchmark,
            budget=budget,
            n_runs=n_runs,
            seed=seed,
            fpr_cap=fpr_cap,
            workers=workers,
            compute_pair_stats=False,
        )
        if report.skipped:
            log.warning(
                "budget %d: %d victim-run cells skipped", budget, len(report.skipped)
            )
        reports[budget] = report
        if cell_callback is not None:
            cell_callback(budget, report)
    return SweepReport(tuple(budgets), reports)


@dataclass
class DistanceReport:
    """Conditioned-Hamming distances per pair, grouped by task and polarity.

    ``overlap`` is the fraction of positive-pair values exceeding the 5th
    percentile of the negative-pair values; 0 means the benchmark's
    positives and negatives are perfectly separated below that quantile.
    """

    rows: tuple[dict, ...]
    groups: dict
    overlap: float | None
    n_undefined: int

    def csv_rows(self) -> list[tuple]:
        return [
            (
                r["victim"],
                r["suspect"],
                r["task"],
                r["positive"],
                "" if r["delta_c"] is None else r["delta_c"],
            )
            for r in self.rows
        ]

    def save_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            fh.write("victim,suspect,task,positive,delta_c\n")
            for row in self.csv_rows():
                fh.write(",".join(str(v) for v in row) + "\n")
        return path


def pair_distance_report(
    benchmark: BenchmarkTriplet, split: str = "test"
) -> DistanceReport:
    """Distribution of conditioned Hamming distances across benchmark pairs."""
    rows: list[dict] = []
    for victim in benchmark.victims:
        vid = victim.model.identity
        data = victim.data(split)
        for model, tag in benchmark.stolen[vid] + benchmark.unrelated[vid]:
            st = pair_stats(victim.model, model, data)
            rows.append(
                {
                    "victim": vid,
                    "suspect": model.identity,
                    "task": tag.method,
                    "positive": tag.is_positive,
                    "delta_c": st.delta_c,
                }
            )
    defined = [r for r in rows if r["delta_c"] is not None]
    pos = [r["delta_c"] for r in defined if r["positive"]]
    neg = [r["delta_c"] for r in defined if not r["positive"]]
    overlap = None
    if pos and neg:
        cutoff = float(np.percentile(neg, 5.0))
        overlap = float(np.mean([v > cutoff for v in pos]))
    groups: dict = {}
    for r in defined:
        key = r["task"] if r["positive"] else "unrelated"
        groups.setdefault(key, []).append(r["delta_c"])
    group_summary = {
        k: {"mean": float(np.mean(v)), "std": float(np.std(v)), "n": len(v)}
        for k, v in sorted(groups.items())
    }
    return DistanceReport(
        rows=tuple(rows),
        groups=group_summary,
        overlap=overlap,
        n_undefined=len(rows) - len(defined),
    )
