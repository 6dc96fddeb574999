"""Two-stage orchestration: probe the grid, size the budget, answer once.

Stage 1 issues exactly 2K probe requests (K rows, K columns, K frames each)
against the selector backend.  Stage 2 issues one focused request for the
selected frames against the QA backend.  Selector and QA are independent
handles, so cross-model composition is a configuration change.  Baseline
strategies (monolithic, fixed budget, uniform control) share the same
plumbing and Trace format.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from gridscout import cost as costmod
from gridscout import grid as gridmod
from gridscout import importance, selection
from gridscout.errors import BackendError
from gridscout.posterior import AnswerSpace, Posterior, ProbeRequest, probe_confidence
from gridscout.synthetic import SyntheticEpisode

TRACE_SCHEMA_VERSION = 1

MODE_AUTO = "auto"
MODE_FIXED = "fixed"
MODE_MONOLITHIC = "monolithic"
MODE_UNIFORM = "uniform"


@dataclass
class PipelineConfig:
    k: int = 12
    gamma0: float = importance.DEFAULT_GAMMA0
    variance_threshold: float = importance.DEFAULT_VARIANCE_THRESHOLD
    probe_resolution: tuple[int, int] = (224, 224)
    probe_input_mode: str = "per-frame-sequence"
    focused_resolution: tuple[int, int] = (512, 512)
    ordering: str = selection.ORDER_TEMPORAL
    collate: bool = False
    collage_canvas: tuple[int, int] = selection.DEFAULT_COLLAGE_CANVAS
    mode: str = MODE_AUTO
    fixed_m: int | None = None
    parallelism: int = 1
    seed: int = 0
    record_timing: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"grid size K must be >= 2, got {self.k}")
        if self.mode not in (MODE_AUTO, MODE_FIXED, MODE_MONOLITHIC, MODE_UNIFORM):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_FIXED:
            n = self.k * self.k
            if self.fixed_m is None or not 1 <= self.fixed_m <= n:
                raise ValueError(f"fixed mode needs M in [1, {n}], got {self.fixed_m}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def budget_rule(self) -> importance.BudgetRule:
        return importance.BudgetRule(self.gamma0, self.variance_threshold)

    def strategy_label(self) -> str:
        return f"fixed:{self.fixed_m}" if self.mode == MODE_FIXED else self.mode


@dataclass
class QuestionItem:
    item_id: str
    question: str
    answer_space: AnswerSpace
    truth_label: str | None = None
    episode: SyntheticEpisode | None = None
    frame_files: list[str] | None = None

    @classmethod
    def from_episode(cls, item_id: str, episode: SyntheticEpisode, space: AnswerSpace) -> "QuestionItem":
        return cls(
            item_id=item_id,
            question=episode.question,
            answer_space=space,
            truth_label=episode.truth_label,
            episode=episode,
        )


@dataclass
class ProbeRecord:
    axis: str
    index: int
    confidence: float
    retries: int


@dataclass
class Trace:
    item_id: str
    strategy: str
    k: int
    status: str = "ok"
    error: dict | None = None
    probes: list[ProbeRecord] = field(default_factory=list)
    row_conf: list[float] | None = None
    col_conf: list[float] | None = None
    map_values: list[list[float]] | None = None
    stats: importance.ShapeStats | None = None
    m_eff: int | None = None
    plan: selection.SelectionPlan | None = None
    focused_frames: list[int] | None = None
    final_posterior: Posterior | None = None
    answer: str | None = None
    truth_label: str | None = None
    correct: bool | None = None
    cost: costmod.CostBreakdown | None = None
    retry_total: int = 0
    backends: dict | None = None
    pool_source_indices: list[int] | None = None
    timing: dict | None = None

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": TRACE_SCHEMA_VERSION,
            "item_id": self.item_id,
            "strategy": self.strategy,
            "k": self.k,
            "status": self.status,
            "error": self.error,
            "probes": [
                {"axis": p.axis, "index": p.index, "confidence": p.confidence, "retries": p.retries}
                for p in self.probes
            ],
            "row_conf": self.row_conf,
            "col_conf": self.col_conf,
            "map": self.map_values,
            "stats": None
            if self.stats is None
            else {
                "skew": self.stats.skew,
                "kurt_ex": self.stats.kurt_ex,
                "sigma": self.stats.sigma,
                "degenerate": self.stats.degenerate,
            },
            "m_eff": self.m_eff,
            "selection": None
            if self.plan is None
            else {
                "ordering": self.plan.ordering,
                "cells": [[c.r, c.c, c.pool_index, c.value] for c in self.plan.cells],
                "collation": None
                if self.plan.collation is None
                else {
                    "side": self.plan.collation.side,
                    "canvas": list(self.plan.collation.canvas),
                    "slot_size": list(self.plan.collation.slot_size),
                },
            },
            "focused_frames": self.focused_frames,
            "final_posterior": None if self.final_posterior is None else list(self.final_posterior.probabilities),
            "answer": self.answer,
            "truth_label": self.truth_label,
            "correct": self.correct,
            "cost": None if self.cost is None else self.cost.to_dict(),
            "retry_total": self.retry_total,
            "backends": self.backends,
            "pool_source_indices": self.pool_source_indices,
        }
        if include_timing:
            d["timing"] = self.timing
        return d


def _build_pool(cfg: PipelineConfig, item: QuestionItem) -> list[gridmod.FrameRef]:
    n = cfg.k * cfg.k
    if item.episode is not None:
        if item.episode.k != cfg.k:
            raise ValueError(f"episode grid K={item.episode.k} does not match config K={cfg.k}")
        indices = gridmod.sample_uniform(n, n)  # identity
        return [gridmod.FrameRef(i, idx, f"synthetic:{idx}") for i, idx in enumerate(indices)]
    if item.frame_files:
        indices = gridmod.sample_uniform(len(item.frame_files), n)
        return [gridmod.FrameRef(i, idx, item.frame_files[idx]) for i, idx in enumerate(indices)]
    raise ValueError(f"item {item.item_id} has neither an episode nor frame files")


def _probe_stage(cfg: PipelineConfig, item: QuestionItem, grid: gridmod.Grid, backend):
    """Run the 2K axis probes.  Results are keyed by (axis, index), so
    concurrent completion order never affects the map."""
    subsets = [gridmod.row_subset(grid, r) for r in range(cfg.k)]
    subsets += [gridmod.col_subset(grid, c) for c in range(cfg.k)]
    resolution = cfg.collage_canvas if cfg.probe_input_mode == "tiled-collage" else cfg.probe_resolution

    def one(subset: gridmod.FrameSubset):
        req = ProbeRequest(
            frames=subset.frames,
            question=item.question,
            answer_space=item.answer_space,
            resolution=resolution,
            input_mode=cfg.probe_input_mode,
        )
        posterior, retries = backend.posterior(req, item)
        return probe_confidence(posterior), retries

    results: dict[tuple[str, int], tuple[float, int]] = {}
    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = [(s, pool.submit(one, s)) for s in subsets]
            errors = {}
            for s, fut in futures:
                try:
                    results[(s.axis, s.axis_index)] = fut.result()
                except BackendError as exc:
                    errors[(s.axis, s.axis_index)] = exc
            if errors:
                raise errors[min(errors, key=lambda k: (k[0] != "row", k[1]))]
    else:
        for s in subsets:
            results[(s.axis, s.axis_index)] = one(s)

    records = [
        ProbeRecord(axis=axis, index=i, confidence=results[(axis, i)][0], retries=results[(axis, i)][1])
        for axis in ("row", "column")
        for i in range(cfg.k)
    ]
    row_conf = [results[("row", r)][0] for r in range(cfg.k)]
    col_conf = [results[("column", c)][0] for c in range(cfg.k)]
    return records, row_conf, col_conf


def _focused_pass(cfg: PipelineConfig, item: QuestionItem, grid: gridmod.Grid, ordered: list[int], backend):
    frames = tuple(grid.cells[i] for i in ordered)
    if cfg.collate:
        resolution, mode = cfg.collage_canvas, "tiled-collage"
    else:
        resolution, mode = cfg.focused_resolution, "per-frame-sequence"
    req = ProbeRequest(
        frames=frames,
        question=item.question,
        answer_space=item.answer_space,
        resolution=resolution,
        input_mode=mode,
    )
    return backend.posterior(req, item)


def _pass_overhead(item: QuestionItem, preset: costmod.CostPreset) -> int:
    return preset.model.prompt_tokens + costmod.question_token_estimate(item.question)


def _schedule(cfg: PipelineConfig, item: QuestionItem, preset: costmod.CostPreset, m_eff: int, probed: bool) -> costmod.PassSchedule:
    overhead = _pass_overhead(item, preset)
    probe_tokens: tuple[int, ...] = ()
    if probed:
        if cfg.probe_input_mode == "tiled-collage":
            per_pass = costmod.tokens_per_frame(cfg.collage_canvas, preset.vision) + overhead
        else:
            per_pass = cfg.k * costmod.tokens_per_frame(cfg.probe_resolution, preset.vision) + overhead
        probe_tokens = (per_pass,) * (2 * cfg.k)
    if cfg.collate and probed:
        focused = costmod.tokens_per_frame(cfg.collage_canvas, preset.vision) + overhead
    else:
        focused = m_eff * costmod.tokens_per_frame(cfg.focused_resolution, preset.vision) + overhead
    return costmod.PassSchedule(probe_pass_tokens=probe_tokens, focused_tokens=focused, m_eff=m_eff)


def _finish(trace: Trace, cfg: PipelineConfig, item: QuestionItem, posterior: Posterior, retries: int):
    trace.final_posterior = posterior
    trace.answer = posterior.argmax_label(item.answer_space)
    trace.truth_label = item.truth_label
    if item.truth_label is not None:
        trace.correct = trace.answer == item.truth_label
    trace.retry_total += retries


def run_question(cfg: PipelineConfig, item: QuestionItem, selector, qa, preset: costmod.CostPreset) -> Trace:
    """Run one item under the configured strategy, returning a full Trace.

    Backend failures produce a structured failure Trace instead of raising;
    a degenerate (near-uniform) map is not a failure, it falls back to the
    full pool.
    """
    trace = Trace(
        item_id=item.item_id,
        strategy=cfg.strategy_label(),
        k=cfg.k,
        backends={"selector": selector.describe(), "qa": qa.describe()},
    )
    t0 = time.perf_counter()
    try:
        pool = _build_pool(cfg, item)
        grid = gridmod.build_grid(pool, cfg.k)
        trace.pool_source_indices = [f.source_index for f in pool]
        n = cfg.k * cfg.k

        if cfg.mode == MODE_MONOLITHIC:
            ordered = list(range(n))
            trace.m_eff = n
            trace.focused_frames = ordered
            posterior, retries = _focused_pass(cfg, item, grid, ordered, qa)
            _finish(trace, cfg, item, posterior, retries)
            trace.cost = costmod.pipeline_cost(_schedule(cfg, item, preset, n, probed=False), preset.model)
        else:
            t_probe0 = time.perf_counter()
            records, row_conf, col_conf = _probe_stage(cfg, item, grid, selector)
            t_probe1 = time.perf_counter()
            trace.probes = records
            trace.retry_total = sum(p.retries for p in records)
            trace.row_conf = row_conf
            trace.col_conf = col_conf

            imap = importance.build_map(row_conf, col_conf)
            trace.map_values = imap.matrix()
            rule = cfg.budget_rule()
            stats = importance.shape_statistic(imap, rule)
            trace.stats = stats

            if cfg.mode == MODE_FIXED:
                m_eff = cfg.fixed_m
            else:
                m_eff = importance.effective_budget(stats, cfg.k, rule)
            trace.m_eff = m_eff

            if cfg.mode == MODE_UNIFORM:
                picks = gridmod.sample_uniform(n, m_eff)
                cells = tuple(
                    selection.SelectedCell(r=i // cfg.k, c=i % cfg.k, pool_index=i, value=imap.values[i])
                    for i in picks
                )
            else:
                cells = tuple(selection.select_top(imap, m_eff))
            plan = selection.SelectionPlan(
                m_eff=m_eff,
                cells=cells,
                ordering=cfg.ordering,
                collation=selection.collate_layout(m_eff, cfg.collage_canvas) if cfg.collate else None,
            )
            trace.plan = plan
            ordered = list(plan.ordered_pool_indices)
            trace.focused_frames = ordered

            posterior, retries = _focused_pass(cfg, item, grid, ordered, qa)
            _finish(trace, cfg, item, posterior, retries)
            trace.cost = costmod.pipeline_cost(_schedule(cfg, item, preset, m_eff, probed=True), preset.model)
            if cfg.record_timing:
                trace.timing = {"probe_s": t_probe1 - t_probe0}
    except BackendError as exc:
        trace.status = "failed"
        trace.error = {"type": type(exc).__name__, "message": str(exc)}
    if cfg.record_timing:
        trace.timing = dict(trace.timing or {}, total_s=time.perf_counter() - t0)
    return trace


def run_monolithic(cfg: PipelineConfig, item: QuestionItem, qa, preset: costmod.CostPreset) -> Trace:
    """Single QA pass over the whole pool, no probe stage."""
    mono = _with_mode(cfg, MODE_MONOLITHIC)
    return run_question(mono, item, qa, qa, preset)


def run_fixed_m(cfg: PipelineConfig, item: QuestionItem, m: int, selector, qa, preset: costmod.CostPreset) -> Trace:
    """Full probe stage, budget overridden to a fixed M."""
    fixed = _with_mode(cfg, MODE_FIXED, fixed_m=m)
    return run_question(fixed, item, selector, qa, preset)


def run_uniform_control(cfg: PipelineConfig, item: QuestionItem, selector, qa, preset: costmod.CostPreset) -> Trace:
    """Probe for the budget, then draw that many frames evenly (no ranking)."""
    uni = _with_mode(cfg, MODE_UNIFORM)
    return run_question(uni, item, selector, qa, preset)


def _with_mode(cfg: PipelineConfig, mode: str, fixed_m: int | None = None) -> PipelineConfig:
    return replace(cfg, mode=mode, fixed_m=fixed_m if mode == MODE_FIXED else None)
