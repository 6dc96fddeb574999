"""Token and FLOP accounting for probe and focused passes.

A single parameterized transformer formula stands in for any concrete
backbone: per-pass flops = L * (8*T*d^2 + 4*T^2*d + 4*T*d*d_ff), where the
quadratic term isolates attention and the linear terms cover projections
and the FFN.  All arithmetic is integer, so cost reports are exact.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

PRESET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class VisionTokenizerConfig:
    patch_pixels: int
    spatial_merge: int

    def __post_init__(self):
        if self.patch_pixels < 1 or self.spatial_merge < 1:
            raise ValueError("tokenizer parameters must be positive")


@dataclass(frozen=True)
class ModelCostConfig:
    layers: int
    hidden: int
    ffn: int
    prompt_tokens: int

    def __post_init__(self):
        if min(self.layers, self.hidden, self.ffn) < 1 or self.prompt_tokens < 0:
            raise ValueError("model cost parameters must be positive")


@dataclass(frozen=True)
class CostPreset:
    name: str
    vision: VisionTokenizerConfig
    model: ModelCostConfig


@dataclass(frozen=True)
class PassSchedule:
    """Token counts of one pipeline run: 2K probe passes plus one focused pass."""

    probe_pass_tokens: tuple[int, ...]
    focused_tokens: int
    m_eff: int


@dataclass(frozen=True)
class CostBreakdown:
    probe_flops: int
    focused_flops: int
    total_flops: int
    probe_tokens: int
    focused_tokens: int
    m_eff: int

    def to_dict(self) -> dict:
        return {
            "probe_flops": self.probe_flops,
            "focused_flops": self.focused_flops,
            "total_flops": self.total_flops,
            "probe_tokens": self.probe_tokens,
            "focused_tokens": self.focused_tokens,
            "m_eff": self.m_eff,
        }


def tokens_per_frame(resolution: tuple[int, int], cfg: VisionTokenizerConfig) -> int:
    w, h = resolution
    if w < 1 or h < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    cell = cfg.patch_pixels * cfg.spatial_merge
    return -(-w // cell) * -(-h // cell)


def pass_cost_parts(total_tokens: int, cfg: ModelCostConfig) -> tuple[int, int]:
    """(linear flops, attention flops) of one forward pass over T tokens."""
    if total_tokens < 1:
        raise ValueError(f"pass needs at least 1 token, got {total_tokens}")
    t, d = total_tokens, cfg.hidden
    linear = cfg.layers * (8 * t * d * d + 4 * t * d * cfg.ffn)
    attention = cfg.layers * (4 * t * t * d)
    return linear, attention


def pass_cost(total_tokens: int, cfg: ModelCostConfig) -> int:
    linear, attention = pass_cost_parts(total_tokens, cfg)
    return linear + attention


def attention_flops(total_tokens: int, cfg: ModelCostConfig) -> int:
    return pass_cost_parts(total_tokens, cfg)[1]


def question_token_estimate(question: str) -> int:
    """Crude 4-characters-per-token stand-in for a text tokenizer."""
    return max(1, (len(question) + 3) // 4)


def pipeline_cost(schedule: PassSchedule, cfg: ModelCostConfig) -> CostBreakdown:
    probe_flops = 0
    probe_tokens = 0
    for t in schedule.probe_pass_tokens:
        probe_flops += pass_cost(t, cfg)
        probe_tokens += t
    focused_flops = pass_cost(schedule.focused_tokens, cfg)
    return CostBreakdown(
        probe_flops=probe_flops,
        focused_flops=focused_flops,
        total_flops=probe_flops + focused_flops,
        probe_tokens=probe_tokens,
        focused_tokens=schedule.focused_tokens,
        m_eff=schedule.m_eff,
    )


def compute_cv(costs) -> float:
    """Coefficient of variation: population standard deviation over mean."""
    vals = [float(c) for c in costs]
    if len(vals) < 2:
        raise ValueError(f"CV needs at least 2 cost samples, got {len(vals)}")
    mean = statistics.fmean(vals)
    if mean == 0.0:
        raise ValueError("CV undefined for zero mean cost")
    return statistics.pstdev(vals, mu=mean) / mean


def load_cost_preset(name_or_path: str) -> CostPreset:
    """Load a cost preset: a file path, or a shipped preset name like vlm_2b."""
    path = Path(name_or_path)
    if path.exists():
        raw = json.loads(path.read_text())
    else:
        res = resources.files("gridscout").joinpath(f"data/presets/{name_or_path}.json")
        if not res.is_file():
            raise FileNotFoundError(f"no cost preset {name_or_path!r} (shipped: {', '.join(shipped_presets())})")
        raw = json.loads(res.read_text())
    if raw.get("schema_version") != PRESET_SCHEMA_VERSION:
        raise ValueError(f"unsupported cost preset schema {raw.get('schema_version')}")
    return CostPreset(
        name=raw.get("name", path.stem if path.exists() else name_or_path),
        vision=VisionTokenizerConfig(raw["patch_pixels"], raw["spatial_merge"]),
        model=ModelCostConfig(raw["layers"], raw["hidden"], raw["ffn"], raw["prompt_tokens"]),
    )


def shipped_presets() -> list[str]:
    root = resources.files("gridscout").joinpath("data/presets")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))
