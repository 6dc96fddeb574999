"""Top-budget cell selection, focused-pass ordering, and collage tiling."""

from __future__ import annotations

import math
from dataclasses import dataclass

from gridscout.importance import ImportanceMap

DEFAULT_COLLAGE_CANVAS = (2048, 2048)

ORDER_TEMPORAL = "temporal"
ORDER_IMPORTANCE = "importance"


@dataclass(frozen=True)
class SelectedCell:
    r: int
    c: int
    pool_index: int
    value: float


@dataclass(frozen=True)
class TilingPlan:
    """ceil(sqrt(M)) x ceil(sqrt(M)) tiling; trailing slots stay empty (black)."""

    side: int
    canvas: tuple[int, int]
    slot_size: tuple[int, int]
    slots: tuple  # slot i -> ordered-frame position, or None for empty

    def slot_origin(self, i: int) -> tuple[int, int]:
        return (i % self.side) * self.slot_size[0], (i // self.side) * self.slot_size[1]


@dataclass(frozen=True)
class SelectionPlan:
    m_eff: int
    cells: tuple[SelectedCell, ...]  # descending map value
    ordering: str
    collation: TilingPlan | None = None

    @property
    def ordered_pool_indices(self) -> tuple[int, ...]:
        return tuple(order_frames(self.cells, self.ordering))


def select_top(imap: ImportanceMap, m_eff: int) -> list[SelectedCell]:
    """The m_eff highest-value cells, listed in descending map value.

    Ties break toward the earlier frame (ascending pool index), so an
    all-equal map degenerates to plain timeline truncation.
    """
    n = imap.k * imap.k
    if not 1 <= m_eff <= n:
        raise ValueError(f"budget {m_eff} out of range [1, {n}]")
    ranked = sorted(range(n), key=lambda i: (-imap.values[i], i))
    return [
        SelectedCell(r=i // imap.k, c=i % imap.k, pool_index=i, value=imap.values[i])
        for i in ranked[:m_eff]
    ]


def order_frames(cells, mode: str) -> list[int]:
    """Pool indices for the focused pass.

    temporal: ascending timeline order (keeps the positional encoding the
    answering model was trained on).  importance: descending map value.
    """
    if mode == ORDER_TEMPORAL:
        return sorted(c.pool_index for c in cells)
    if mode == ORDER_IMPORTANCE:
        return [c.pool_index for c in cells]
    raise ValueError(f"unknown ordering mode {mode!r}")


def collate_layout(m_eff: int, canvas: tuple[int, int] = DEFAULT_COLLAGE_CANVAS) -> TilingPlan:
    """Square tiling plan for compositing m_eff frames into one image."""
    if m_eff < 1:
        raise ValueError(f"cannot collate {m_eff} frames")
    side = math.isqrt(m_eff)
    if side * side < m_eff:
        side += 1
    slot_size = (canvas[0] // side, canvas[1] // side)
    slots = tuple(i if i < m_eff else None for i in range(side * side))
    return TilingPlan(side=side, canvas=canvas, slot_size=slot_size, slots=slots)


def render_collage(images, plan: TilingPlan):
    """Composite PIL images into the plan's canvas; empty slots stay black."""
    from PIL import Image

    canvas = Image.new("RGB", plan.canvas, (0, 0, 0))
    for i, pos in enumerate(plan.slots):
        if pos is None:
            continue
        tile = images[pos].convert("RGB").resize(plan.slot_size)
        canvas.paste(tile, plan.slot_origin(i))
    return canvas
