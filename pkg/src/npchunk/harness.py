"""Experiment orchestration: resample scheduling, training, report emission.

An experiment trains every configured system on the same training view of
every resample (pairing by resample_id is thereby guaranteed), evaluates
each trained model on every test corpus, and aggregates recall
distributions. Output is a set of TSV files; given a fixed config (seed
included) they are byte-identical across runs and across worker counts.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import evalstats, mbsl, winnow
from .corpus import BUILTIN_GRAMMARS, Corpus, generate_corpus, read_corpus, write_corpus
from .evalstats import PairedComparison, RecallSamples, RunMetrics
from .resample import (
    BootstrapPlan,
    CvPlan,
    derive_stream,
    fnv1a64,
    plan_bootstrap,
    plan_cv,
    training_view,
)


class ConfigError(ValueError):
    pass


_MBSL_ALIASES = {"c": "context_size"}
_WINNOW_ALIASES = {"alpha": "promotion", "beta": "demotion", "theta": "threshold"}


@dataclass(frozen=True)
class SystemSpec:
    """One configured learner: kind plus canonicalized parameter overrides."""

    label: str
    kind: str  # "mbsl" | "winnow"
    params: tuple[tuple[str, str], ...]

    def build(self):
        fields = {k: v for k, v in self.params}
        if self.kind == "mbsl":
            return mbsl.MbslConfig(
                context_size=int(fields.pop("context_size", 1)),
                max_tile_len=int(fields.pop("max_tile_len", 6)),
                tile_threshold=float(fields.pop("tile_threshold", 0.5)),
                min_positive_count=int(fields.pop("min_positive_count", 1)),
            )
        if self.kind == "winnow":
            return winnow.WinnowConfig(
                promotion=float(fields.pop("promotion", 1.5)),
                demotion=float(fields.pop("demotion", 0.5)),
                threshold=float(fields.pop("threshold", 6.0)),
                epochs=int(fields.pop("epochs", 2)),
            )
        raise ConfigError(f"unknown system kind {self.kind!r}")

    def spec_string(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v}" for k, v in self.params)


def parse_system(spec: str) -> SystemSpec:
    """Parse e.g. ``mbsl:c=1`` or ``winnow:alpha=1.5,epochs=2``."""
    kind, _, rest = spec.strip().partition(":")
    kind = kind.strip()
    if kind not in ("mbsl", "winnow"):
        raise ConfigError(f"unknown system kind {kind!r} in {spec!r}")
    aliases = _MBSL_ALIASES if kind == "mbsl" else _WINNOW_ALIASES
    params = {}
    label = None
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            value = value.strip()
            if not value:
                raise ConfigError(f"malformed system parameter {item!r}")
            if key == "label":
                label = value
                continue
            params[aliases.get(key, key)] = value
    canonical = tuple(sorted(params.items()))
    if label is None:
        suffix = "".join(
            f"-{_SHORT.get(k, k)}{v}" for k, v in canonical
        )
        label = f"{kind}{suffix}"
    spec_obj = SystemSpec(label, kind, canonical)
    spec_obj.build()  # validate eagerly
    return spec_obj


_SHORT = {
    "context_size": "c",
    "promotion": "alpha",
    "demotion": "beta",
    "threshold": "theta",
}


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    training_corpus: str
    test_corpora: tuple[tuple[str, str], ...]  # (label, path)
    method: str  # "bootstrap" | "cv"
    b: int = 0
    k: int = 0
    repetitions: int = 1
    systems: tuple[SystemSpec, ...] = ()
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.method == "bootstrap":
            if self.b < 1:
                raise ConfigError("bootstrap needs B >= 1")
        elif self.method == "cv":
            if self.k < 2:
                raise ConfigError("cv needs k >= 2")
            if self.repetitions < 1:
                raise ConfigError("cv needs repetitions >= 1")
        else:
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.test_corpora:
            raise ConfigError("at least one test corpus is required")
        if not self.systems:
            raise ConfigError("at least one system is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        labels = [s.label for s in self.systems]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate system labels: {labels}")

    def method_string(self) -> str:
        if self.method == "bootstrap":
            return f"bootstrap-B{self.b}"
        return f"cv-k{self.k}x{self.repetitions}"

    def canonical_text(self) -> str:
        lines = [
            f"master_seed={self.master_seed}",
            f"method={self.method}",
            f"B={self.b}",
            f"k={self.k}",
            f"repetitions={self.repetitions}",
            f"train={self.training_corpus}",
            f"systems={';'.join(s.spec_string() for s in self.systems)}",
        ]
        for label, path in self.test_corpora:
            lines.append(f"test.{label}={path}")
        return "\n".join(sorted(lines)) + "\n"

    def config_hash(self) -> str:
        return f"{fnv1a64(self.canonical_text()):016x}"


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Flat key=value config file plus command-line overrides."""
    entries: dict[str, str] = {}
    tests: list[tuple[str, str]] = []

    def absorb(key: str, value: str) -> None:
        if key.startswith("test."):
            label = key[len("test."):]
            if not label:
                raise ConfigError("test corpus label must be non-empty")
            tests[:] = [(l, p) for l, p in tests if l != label]
            tests.append((label, value))
        else:
            entries[key] = value

    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            absorb(key.strip(), value.strip())
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        absorb(key.strip(), value.strip())

    try:
        systems = tuple(
            parse_system(s) for s in entries.get("systems", "").split(";") if s.strip()
        )
        return ExperimentConfig(
            master_seed=int(entries["master_seed"]),
            training_corpus=entries["train"],
            test_corpora=tuple(tests),
            method=entries.get("method", "bootstrap"),
            b=int(entries.get("B", 0)),
            k=int(entries.get("k", 0)),
            repetitions=int(entries.get("repetitions", 1)),
            systems=systems,
            output_dir=entries.get("output_dir", "out"),
            workers=int(entries.get("workers", 1)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}") from exc


# ---------------------------------------------------------------------------
# Per-resample execution. Worker state is installed once per process.

_STATE: dict = {}


def _pool_init(train: Corpus, tests, systems, master_seed: int) -> None:
    _STATE["train"] = train
    _STATE["tests"] = tests
    _STATE["systems"] = systems
    _STATE["seed"] = master_seed


def _train_one(spec: SystemSpec, view: Corpus, master_seed: int, stream_index: int,
               purpose_prefix: str):
    cfg = spec.build()
    if spec.kind == "mbsl":
        return mbsl.mbsl_train(view, cfg)
    rng = derive_stream(master_seed, f"{purpose_prefix}:{spec.label}", stream_index)
    return winnow.winnow_train(view, cfg, rng)


def _predict_one(spec: SystemSpec, model, sentence):
    if spec.kind == "mbsl":
        return mbsl.mbsl_predict(model, sentence)
    return winnow.winnow_predict(model, sentence)


def _evaluate_model(spec: SystemSpec, model, tests) -> dict[str, RunMetrics]:
    out = {}
    for label, corpus in tests:
        predictions = [_predict_one(spec, model, s) for s in corpus.sentences]
        out[label] = evalstats.score_run(corpus, predictions)
    return out


def _run_resample(task):
    resample_id, plan, held_out = task
    view = training_view(_STATE["train"], plan, held_out)
    results = {}
    for spec in _STATE["systems"]:
        model = _train_one(spec, view, _STATE["seed"], resample_id, "train")
        for test_label, metrics in _evaluate_model(spec, model, _STATE["tests"]).items():
            results[(spec.label, test_label)] = metrics
    return resample_id, results


def build_plans(config: ExperimentConfig, train: Corpus
                ) -> list[tuple[int, BootstrapPlan | CvPlan, int | None]]:
    """(resample_id, plan, held_out_fold) tasks, in resample_id order."""
    tasks: list[tuple[int, BootstrapPlan | CvPlan, int | None]] = []
    if config.method == "bootstrap":
        n0 = train.instance_count()
        for b in range(config.b):
            rng = derive_stream(config.master_seed, "bootstrap", b)
            tasks.append((b, plan_bootstrap(train, n0, rng, resample_id=b), None))
    else:
        for rep in range(config.repetitions):
            rng = derive_stream(config.master_seed, "cv", rep)
            plan = plan_cv(train, config.k, rng)
            for fold in range(config.k):
                tasks.append((rep * config.k + fold, plan, fold))
    return tasks


@dataclass
class ExperimentReport:
    config_hash: str
    method: str
    samples: dict[tuple[str, str], RecallSamples]
    summaries: dict[tuple[str, str], evalstats.DistributionSummary]
    e_full: dict[tuple[str, str], float]
    pairs: dict[tuple[str, str, str], PairedComparison]
    xcorr: dict[tuple[str, str, str], float | None]
    plan_digests: tuple[str, ...]


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    train = read_corpus(config.training_corpus)
    tests = tuple(
        (label, read_corpus(path)) for label, path in config.test_corpora
    )
    tasks = build_plans(config, train)
    plan_digests = tuple(
        f"{fnv1a64(plan.to_line() + (f'/{held}' if held is not None else '')):016x}"
        for _, plan, held in tasks
    )

    _pool_init(train, tests, config.systems, config.master_seed)
    if config.workers == 1 or len(tasks) <= 1:
        raw = [_run_resample(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_pool_init,
            initargs=(train, tests, config.systems, config.master_seed),
        ) as pool:
            raw = list(pool.map(_run_resample, tasks, chunksize=1))
    raw.sort(key=lambda item: item[0])  # deterministic merge order

    run_metrics: dict[tuple[str, str], list[RunMetrics]] = defaultdict(list)
    for _, results in raw:
        for key, metrics in results.items():
            run_metrics[key].append(metrics)

    samples: dict[tuple[str, str], RecallSamples] = {}
    summaries = {}
    for spec in config.systems:
        for test_label, _ in tests:
            key = (spec.label, test_label)
            values = tuple(m.recall for m in run_metrics[key])
            samples[key] = RecallSamples(f"{spec.label}/{test_label}", values)
            summaries[key] = evalstats.summarize(samples[key]) if values else None

    # full-training point estimate E(.)
    e_full: dict[tuple[str, str], float] = {}
    for spec in config.systems:
        model = _train_one(spec, train, config.master_seed, 0, "train-full")
        for test_label, metrics in _evaluate_model(spec, model, tests).items():
            e_full[(spec.label, test_label)] = metrics.recall

    # paired system comparisons per test corpus
    pairs: dict[tuple[str, str, str], PairedComparison] = {}
    if len(samples[(config.systems[0].label, tests[0][0])].values) >= 2:
        for i, spec_a in enumerate(config.systems):
            for spec_b in config.systems[i + 1:]:
                for test_label, _ in tests:
                    pairs[(spec_a.label, spec_b.label, test_label)] = (
                        evalstats.compare_paired(
                            samples[(spec_a.label, test_label)],
                            samples[(spec_b.label, test_label)],
                        )
                    )

    # cross-dataset correlations per system
    xcorr: dict[tuple[str, str, str], float | None] = {}
    if len(samples[(config.systems[0].label, tests[0][0])].values) >= 2:
        for spec in config.systems:
            for i, (label_a, _) in enumerate(tests):
                for label_b, _ in tests[i + 1:]:
                    comparison = evalstats.compare_paired(
                        samples[(spec.label, label_a)],
                        samples[(spec.label, label_b)],
                    )
                    xcorr[(spec.label, label_a, label_b)] = comparison.rho

    report = ExperimentReport(
        config_hash=config.config_hash(),
        method=config.method_string(),
        samples=samples,
        summaries=summaries,
        e_full=e_full,
        pairs=pairs,
        xcorr=xcorr,
        plan_digests=plan_digests,
    )
    _write_report(config, report, tasks, run_metrics)
    return report


def _write_report(config: ExperimentConfig, report: ExperimentReport, tasks,
                  run_metrics) -> None:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "samples").mkdir(exist_ok=True)
    stamp = f"# config_hash={report.config_hash}\n"

    def write(path: Path, header: str, rows: Iterable[Iterable]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(stamp)
            handle.write(header + "\n")
            for row in rows:
                handle.write("\t".join(_fmt(v) for v in row) + "\n")

    method = report.method
    write(
        out_dir / "summary.tsv",
        "system\ttest\tmethod\tn\tmean\tstd\te_full",
        (
            (
                system,
                test,
                method,
                summary.n,
                summary.mean,
                summary.std,
                report.e_full[(system, test)],
            )
            for (system, test), summary in sorted(report.summaries.items())
        ),
    )
    write(
        out_dir / "pairs.tsv",
        "system_a\tsystem_b\ttest\trho\tp_a_gt_b\tp_tie\tsigma_diff",
        (
            (a, b, test, c.rho, c.p_a_gt_b, c.p_tie, c.sigma_diff)
            for (a, b, test), c in sorted(report.pairs.items())
        ),
    )
    write(
        out_dir / "xcorr.tsv",
        "system\ttest_a\ttest_b\trho",
        (
            (system, ta, tb, rho)
            for (system, ta, tb), rho in sorted(report.xcorr.items())
        ),
    )
    write(
        out_dir / "plans.tsv",
        "resample_id\theld_out\tdigest\tplan",
        (
            (rid, held, digest, plan.to_line().replace("\t", " "))
            for (rid, plan, held), digest in zip(tasks, report.plan_digests)
        ),
    )
    write(
        out_dir / "runs.tsv",
        "system\ttest\tresample_id\trecall\tprecision\tn_gold\tn_predicted\tn_correct",
        (
            (
                system,
                test,
                rid,
                m.recall,
                m.precision,
                m.n_gold,
                m.n_predicted,
                m.n_correct,
            )
            for (system, test), metrics in sorted(run_metrics.items())
            for rid, m in enumerate(metrics)
        ),
    )
    for (system, test), sample in sorted(report.samples.items()):
        write(
            out_dir / "samples" / f"{system}_{test}.tsv",
            "resample_id\trecall",
            ((rid, value) for rid, value in enumerate(sample.values)),
        )


def replay_resample(config: ExperimentConfig, resample_id: int) -> list[tuple[str, str, RunMetrics]]:
    """Re-run one resample from its deterministic plan; returns run metrics.

    When the experiment's plans.tsv exists, the recomputed plan digest is
    checked against the recorded one.
    """
    train = read_corpus(config.training_corpus)
    tests = tuple((label, read_corpus(path)) for label, path in config.test_corpora)
    tasks = build_plans(config, train)
    matching = [t for t in tasks if t[0] == resample_id]
    if not matching:
        raise ConfigError(f"resample_id {resample_id} outside this experiment")
    task = matching[0]
    digest = f"{fnv1a64(task[1].to_line() + (f'/{task[2]}' if task[2] is not None else '')):016x}"
    plans_path = Path(config.output_dir) / "plans.tsv"
    if plans_path.exists():
        for line in plans_path.read_text(encoding="utf-8").splitlines():
            if line.startswith("#") or line.startswith("resample_id"):
                continue
            rid, _, recorded, _ = line.split("\t")
            if int(rid) == resample_id and recorded != digest:
                raise ConfigError(
                    f"plan digest mismatch for resample {resample_id}: "
                    f"{digest} vs recorded {recorded}"
                )
    _pool_init(train, tests, config.systems, config.master_seed)
    _, results = _run_resample(task)
    return [
        (system, test, metrics)
        for (system, test), metrics in sorted(results.items())
    ]


def gen_corpus_cmd(grammar_name: str, n_sentences: int, seed: int,
                   out_path: str | Path) -> Corpus:
    """Deterministically generate and write a built-in genre corpus."""
    try:
        grammar = BUILTIN_GRAMMARS[grammar_name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_GRAMMARS))
        raise ConfigError(f"unknown grammar {grammar_name!r} (known: {known})")
    rng = derive_stream(seed, f"gen:{grammar_name}", 0)
    corpus = generate_corpus(grammar, n_sentences, rng)
    write_corpus(corpus, out_path)
    return corpus


def read_sample_file(path: str | Path) -> RecallSamples:
    values = []
    expected = 0
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or line.startswith("resample_id"):
            continue
        rid, value = line.split("\t")
        if int(rid) != expected:
            raise ConfigError(f"{path}: non-contiguous resample ids")
        expected += 1
        values.append(float(value))
    return RecallSamples(Path(path).stem, tuple(values))


def stats_cmd(paths: Sequence[str | Path]) -> str:
    """Summary/comparison/correlation TSV for previously saved sample files."""
    samples = [read_sample_file(p) for p in paths]
    lengths = {len(s.values) for s in samples}
    if len(samples) > 1 and len(lengths) != 1:
        raise ConfigError(f"sample files disagree on length: {sorted(lengths)}")
    lines = []
    for sample in samples:
        summary = evalstats.summarize(sample)
        lines.append(
            "\t".join(
                ("summary", sample.label, str(summary.n), _fmt(summary.mean), _fmt(summary.std))
            )
        )
    for i, sample_a in enumerate(samples):
        for sample_b in samples[i + 1:]:
            c = evalstats.compare_paired(sample_a, sample_b)
            lines.append(
                "\t".join(
                    (
                        "pair",
                        sample_a.label,
                        sample_b.label,
                        _fmt(c.rho),
                        _fmt(c.p_a_gt_b),
                        _fmt(c.p_tie),
                        _fmt(c.sigma_diff),
                    )
                )
            )
    if len(samples) >= 3:
        matrix = evalstats.correlation_matrix(samples)
        for sample, row in zip(samples, matrix):
            lines.append(
                "\t".join(["xcorr", sample.label] + [_fmt(v) for v in row])
            )
    return "\n".join(lines) + "\n"
