"""Synthetic episode suites and the accuracy/compute evaluation harness.

Episodes plant evidence atoms under four regimes:

  localized     1-3 atoms, each in a single frame: sharply peaked maps.
  redundant     one atom duplicated across >= K frames spanning most rows
                and columns: high-importance mass, left-skewed maps.
  holistic      atoms spread one-per-frame across the pool: near-uniform
                maps that fall back to full coverage.
  uniform-noise no atoms at all: flat posteriors everywhere.

Regime knobs live in suite JSON files, not in code, so map shapes can be
recalibrated without touching the generator.
"""

from __future__ import annotations

import csv
import json
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

from gridscout import cost as costmod
from gridscout import pipeline as pl
from gridscout.posterior import AnswerSpace
from gridscout.synthetic import SyntheticBackend, SyntheticEpisode

SUITE_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

REGIMES = ("localized", "redundant", "holistic", "uniform-noise")
DEFAULT_SKEW_EDGES = (-0.3, -0.05, 0.05, 0.3)


@dataclass(frozen=True)
class RegimeSpec:
    regime: str
    atoms_min: int = 1
    atoms_max: int = 1
    frames_per_atom: int = 1
    weight_low: float = 1.0
    weight_high: float = 1.0
    n_labels: int = 8
    eta: float = 0.0
    row_coverage: int | None = None  # redundant: rows the duplicated atom must span
    col_coverage: int | None = None
    fill_fraction: float = 1.0  # holistic: fraction of frames carrying an atom

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.atoms_min > self.atoms_max:
            raise ValueError("atoms_min > atoms_max")
        if self.weight_low > self.weight_high or self.weight_low <= 0:
            raise ValueError("weight range must be positive and ordered")
        if self.regime == "localized" and not (1 <= self.atoms_min and self.atoms_max <= 3 and self.frames_per_atom == 1):
            raise ValueError("localized regime: 1-3 atoms, each in exactly 1 frame")
        if self.regime == "redundant" and (self.atoms_min != 1 or self.atoms_max != 1):
            raise ValueError("redundant regime duplicates exactly one atom")
        if self.regime == "uniform-noise" and self.atoms_max != 0:
            raise ValueError("uniform-noise regime plants no atoms (set atoms_min=atoms_max=0)")
        if not 0.0 < self.fill_fraction <= 1.0:
            raise ValueError("fill_fraction must be in (0, 1]")


_QUESTION_HINTS = (
    "Focus on what the footage shows directly.",
    "The evidence may appear in more than one scene.",
    "Some frames are decoys; weigh the consistent ones.",
    "Answer from visual content only.",
    "Earlier and later segments may disagree; prefer the majority.",
)


def generate_episode(spec: RegimeSpec, k: int, seed: int) -> SyntheticEpisode:
    """Deterministic episode for (spec, k, seed)."""
    n = k * k
    rng = random.Random(f"{spec.regime}:{seed}")
    space = AnswerSpace.letters(spec.n_labels)
    truth = space.labels[rng.randrange(spec.n_labels)]
    # Question length varies across episodes so prompt overhead, and with it
    # per-question cost, is not artificially constant.
    hints = rng.sample(_QUESTION_HINTS, rng.randint(0, len(_QUESTION_HINTS)))
    question = " ".join(
        [f"Which answer does the evidence planted in {spec.regime} episode {seed} support?"] + hints
    )
    frames: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    atoms: dict[int, float] = {}

    if spec.regime == "localized":
        n_atoms = rng.randint(spec.atoms_min, spec.atoms_max)
        for atom, frame in enumerate(rng.sample(range(n), n_atoms)):
            w = rng.uniform(spec.weight_low, spec.weight_high)
            atoms[atom] = w
            frames[frame].append((atom, w))
    elif spec.regime == "redundant":
        m = spec.frames_per_atom
        if m < k:
            raise ValueError(f"redundant regime needs frames_per_atom >= K ({k}), got {m}")
        rows = rng.sample(range(k), spec.row_coverage if spec.row_coverage is not None else k - 1)
        cols = rng.sample(range(k), spec.col_coverage if spec.col_coverage is not None else k - 1)
        if m < max(len(rows), len(cols)):
            raise ValueError("frames_per_atom too small to span the requested coverage")
        cells = []
        for i in range(max(len(rows), len(cols))):
            cells.append((rows[i % len(rows)], cols[i % len(cols)]))
        spare = [(r, c) for r in rows for c in cols if (r, c) not in set(cells)]
        cells.extend(rng.sample(spare, m - len(cells)))
        w = rng.uniform(spec.weight_low, spec.weight_high)
        atoms[0] = w
        for r, c in cells:
            frames[r * k + c].append((0, w))
    elif spec.regime == "holistic":
        n_fill = math.ceil(spec.fill_fraction * n)
        if n_fill < n // 2:
            raise ValueError("holistic regime needs atoms on at least half the pool")
        filled = sorted(rng.sample(range(n), n_fill)) if n_fill < n else range(n)
        for atom, frame in enumerate(filled):
            w = rng.uniform(spec.weight_low, spec.weight_high)
            atoms[atom] = w
            frames[frame].append((atom, w))
    # uniform-noise: no atoms

    return SyntheticEpisode(
        k=k,
        frames=frames,
        atoms=atoms,
        truth_label=truth,
        question=question,
        regime=spec.regime,
        eta=spec.eta,
        seed=seed,
    )


# -- suites --------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteGroup:
    spec: RegimeSpec
    count: int
    seed_base: int


@dataclass(frozen=True)
class Suite:
    name: str
    k: int
    groups: tuple[SuiteGroup, ...]

    def items(self) -> list[pl.QuestionItem]:
        out = []
        for g in self.groups:
            space = AnswerSpace.letters(g.spec.n_labels)
            for i in range(g.count):
                seed = g.seed_base + i
                ep = generate_episode(g.spec, self.k, seed)
                out.append(pl.QuestionItem.from_episode(f"{g.spec.regime}-{seed}", ep, space))
        return out


_SPEC_FIELDS = (
    "regime atoms_min atoms_max frames_per_atom weight_low weight_high "
    "n_labels eta row_coverage col_coverage fill_fraction".split()
)


def load_suite(path: str | Path) -> Suite:
    raw = json.loads(Path(path).read_text())
    if raw.get("schema_version") != SUITE_SCHEMA_VERSION:
        raise ValueError(f"unsupported suite schema {raw.get('schema_version')}")
    groups = []
    for g in raw["groups"]:
        spec = RegimeSpec(**{key: g[key] for key in _SPEC_FIELDS if key in g})
        groups.append(SuiteGroup(spec=spec, count=int(g["count"]), seed_base=int(g["seed_base"])))
    if not groups or all(g.count == 0 for g in groups):
        raise ValueError(f"suite {path} defines no episodes")
    return Suite(name=raw.get("name", Path(path).stem), k=int(raw["k"]), groups=tuple(groups))


def shipped_suite_path(name: str) -> Path:
    from importlib import resources

    res = resources.files("gridscout").joinpath(f"data/suites/{name}.json")
    if not res.is_file():
        raise FileNotFoundError(f"no shipped suite named {name!r}")
    return Path(str(res))


# -- evaluation ----------------------------------------------------------------


def parse_strategy(label: str) -> tuple[str, int | None]:
    """"auto" | "fixed:M" | "monolithic" | "uniform" -> (mode, fixed_m)."""
    if label.startswith("fixed:"):
        return pl.MODE_FIXED, int(label.split(":", 1)[1])
    if label in (pl.MODE_AUTO, pl.MODE_MONOLITHIC, pl.MODE_UNIFORM):
        return label, None
    raise ValueError(f"unknown strategy {label!r}")


def _nearest_rank(sorted_vals: list, q: float):
    idx = max(0, math.ceil(q * len(sorted_vals)) - 1)
    return sorted_vals[idx]


@dataclass
class BenchReport:
    suite: str
    k: int
    strategies: dict = field(default_factory=dict)
    pareto: list = field(default_factory=list)
    skew_buckets: dict = field(default_factory=dict)
    regimes: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "suite": self.suite,
            "k": self.k,
            "config": self.config,
            "strategies": self.strategies,
            "pareto": self.pareto,
            "skew_buckets": self.skew_buckets,
            "regimes": self.regimes,
        }


def evaluate(
    strategies: list[str],
    items: list[pl.QuestionItem],
    cfg: pl.PipelineConfig,
    preset: costmod.CostPreset,
    selector=None,
    qa=None,
    suite_name: str = "adhoc",
    skew_edges: tuple[float, ...] = DEFAULT_SKEW_EDGES,
) -> tuple[BenchReport, dict[str, list[pl.Trace]]]:
    """Run every strategy on every item and aggregate the report.

    The report reduction is a deterministic fold over traces sorted by
    item id; per-item failures land in failure counts, not in aggregates.
    """
    if not strategies:
        raise ValueError("no strategies requested")
    if not items:
        raise ValueError("no items to evaluate")
    selector = selector or SyntheticBackend("selector")
    qa = qa or SyntheticBackend("qa")

    report = BenchReport(
        suite=suite_name,
        k=cfg.k,
        config={
            "gamma0": cfg.gamma0,
            "variance_threshold": cfg.variance_threshold,
            "probe_resolution": list(cfg.probe_resolution),
            "focused_resolution": list(cfg.focused_resolution),
            "probe_input_mode": cfg.probe_input_mode,
            "ordering": cfg.ordering,
            "collate": cfg.collate,
            "cost_preset": preset.name,
            "seed": cfg.seed,
            "strategies": list(strategies),
        },
    )
    all_traces: dict[str, list[pl.Trace]] = {}
    regime_rows: dict[str, dict[str, dict]] = {}
    regime_of = {item.item_id: (item.episode.regime if item.episode else "external") for item in items}

    for label in strategies:
        mode, fixed_m = parse_strategy(label)
        run_cfg = replace(cfg, mode=mode, fixed_m=fixed_m)
        traces = [pl.run_question(run_cfg, item, selector, qa, preset) for item in items]
        all_traces[label] = traces
        by_id = sorted(traces, key=lambda t: t.item_id)
        ok = [t for t in by_id if t.status == "ok"]
        scored = [t for t in ok if t.correct is not None]
        flops = sorted(t.cost.total_flops for t in ok)
        summary = {
            "n_items": len(traces),
            "n_failed": len(traces) - len(ok),
            "accuracy": (sum(t.correct for t in scored) / len(scored)) if scored else None,
            "mean_flops": statistics.fmean(flops) if flops else None,
            "p50_flops": _nearest_rank(flops, 0.50) if flops else None,
            "p90_flops": _nearest_rank(flops, 0.90) if flops else None,
            "cv_flops": costmod.compute_cv(flops) if len(flops) >= 2 else None,
            "mean_m_eff": statistics.fmean(t.m_eff for t in ok) if ok else None,
            "mean_m_eff_by_regime": {},
        }

        per_regime: dict[str, list[pl.Trace]] = {}
        for t in ok:
            per_regime.setdefault(regime_of[t.item_id], []).append(t)
        for regime in sorted(per_regime):
            group = per_regime[regime]
            scored_g = [t for t in group if t.correct is not None]
            summary["mean_m_eff_by_regime"][regime] = statistics.fmean(t.m_eff for t in group)
            regime_rows.setdefault(regime, {})[label] = {
                "n": len(group),
                "accuracy": (sum(t.correct for t in scored_g) / len(scored_g)) if scored_g else None,
                "mean_m_eff": statistics.fmean(t.m_eff for t in group),
                "mean_flops": statistics.fmean(t.cost.total_flops for t in group),
            }
        report.strategies[label] = summary
        probed = [t for t in ok if t.stats is not None]
        if probed:
            report.skew_buckets[label] = _skew_bucket_table(probed, skew_edges)

    report.pareto = sorted(
        (
            [label, report.strategies[label]["accuracy"], report.strategies[label]["mean_flops"]]
            for label in strategies
        ),
        key=lambda row: (row[2] is None, row[2]),
    )
    report.regimes = regime_rows
    return report, all_traces


def _skew_bucket_table(traces: list[pl.Trace], edges: tuple[float, ...]) -> list[dict]:
    bounds = [(-math.inf, edges[0])]
    bounds += [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    bounds += [(edges[-1], math.inf)]
    rows = []
    for lo, hi in bounds:
        members = [t for t in traces if lo <= t.stats.skew < hi]
        scored = [t for t in members if t.correct is not None]
        rows.append(
            {
                "lo": None if lo == -math.inf else lo,
                "hi": None if hi == math.inf else hi,
                "count": len(members),
                "mean_m_eff": statistics.fmean(t.m_eff for t in members) if members else None,
                "mean_correct": (sum(t.correct for t in scored) / len(scored)) if scored else None,
            }
        )
    return rows


# -- report files ----------------------------------------------------------------


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_report_files(report: BenchReport, traces: dict[str, list[pl.Trace]], outdir: str | Path) -> dict[str, Path]:
    """Emit report.json, pareto.csv, skew_buckets.csv, per-regime CSVs, and
    traces.jsonl.  All outputs are byte-deterministic for a fixed seed."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["report"] = out / "report.json"
    _dump_json(paths["report"], report.to_dict())

    paths["pareto"] = out / "pareto.csv"
    with paths["pareto"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "accuracy", "mean_flops"])
        for row in report.pareto:
            w.writerow(row)

    paths["skew_buckets"] = out / "skew_buckets.csv"
    with paths["skew_buckets"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "lo", "hi", "count", "mean_m_eff", "mean_correct"])
        for label in sorted(report.skew_buckets):
            for row in report.skew_buckets[label]:
                w.writerow([label, row["lo"], row["hi"], row["count"], row["mean_m_eff"], row["mean_correct"]])

    for regime in sorted(report.regimes):
        p = out / f"regime_{regime}.csv"
        paths[f"regime_{regime}"] = p
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strategy", "n", "accuracy", "mean_m_eff", "mean_flops"])
            for label in sorted(report.regimes[regime]):
                row = report.regimes[regime][label]
                w.writerow([label, row["n"], row["accuracy"], row["mean_m_eff"], row["mean_flops"]])

    paths["traces"] = out / "traces.jsonl"
    with paths["traces"].open("w") as fh:
        for label in report.config["strategies"]:
            for t in traces[label]:
                fh.write(json.dumps(t.to_dict(include_timing=False), sort_keys=True) + "\n")
    return paths
