"""Frame-pool sampling and K x K grid indexing.

The candidate pool of N = K^2 frames is laid out row-major on a conceptual
grid.  Rows are contiguous runs of the timeline (local coverage); columns
stride through it at interval K (periodic coverage).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FrameRef:
    """One candidate frame: position in the pool plus its provenance."""

    pool_index: int
    source_index: int
    source: str


@dataclass(frozen=True)
class Grid:
    k: int
    cells: tuple[FrameRef, ...]

    def cell(self, r: int, c: int) -> FrameRef:
        return self.cells[r * self.k + c]


@dataclass(frozen=True)
class FrameSubset:
    axis: str  # "row" | "column"
    axis_index: int
    frames: tuple[FrameRef, ...]

    @property
    def pool_indices(self) -> tuple[int, ...]:
        return tuple(f.pool_index for f in self.frames)


def sample_uniform(n_source_frames: int, n: int) -> list[int]:
    """Center-of-bin uniform sampling: floor((i + 0.5) * n_source / n).

    Indices are clamped, so a source shorter than ``n`` yields repeats
    rather than an error (short clips still fill the pool).
    """
    if n_source_frames < 1:
        raise ValueError(f"n_source_frames must be >= 1, got {n_source_frames}")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    out = []
    for i in range(n):
        idx = int((i + 0.5) * n_source_frames / n)
        out.append(min(idx, n_source_frames - 1))
    return out


def build_grid(pool: list[FrameRef], k: int) -> Grid:
    if k < 2:
        raise ValueError(f"grid size K must be >= 2, got {k}")
    if len(pool) != k * k:
        raise ValueError(f"pool size mismatch: expected {k * k} frames for K={k}, got {len(pool)}")
    return Grid(k=k, cells=tuple(pool))


def row_subset(grid: Grid, r: int) -> FrameSubset:
    """Row r: the K contiguous frames {rK + j, j = 0..K-1}."""
    if not 0 <= r < grid.k:
        raise ValueError(f"row index {r} out of range [0, {grid.k})")
    frames = grid.cells[r * grid.k : (r + 1) * grid.k]
    return FrameSubset(axis="row", axis_index=r, frames=tuple(frames))


def col_subset(grid: Grid, c: int) -> FrameSubset:
    """Column c: the K stride-K frames {c + jK, j = 0..K-1}."""
    if not 0 <= c < grid.k:
        raise ValueError(f"column index {c} out of range [0, {grid.k})")
    frames = grid.cells[c :: grid.k]
    return FrameSubset(axis="column", axis_index=c, frames=tuple(frames))
