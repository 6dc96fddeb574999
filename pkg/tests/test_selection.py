import random

import pytest
from helpers import random_map_marginals

from gridscout.importance import build_map
from gridscout.selection import (
    ORDER_IMPORTANCE,
    ORDER_TEMPORAL,
    SelectionPlan,
    collate_layout,
    order_frames,
    render_collage,
    select_top,
)


class TestSelectTop:
    def test_direct_ordering(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))  # [[0.45, 0.9], [0.125, 0.25]]
        cells = select_top(m, 2)
        assert [(c.r, c.c) for c in cells] == [(0, 1), (0, 0)]

    def test_tie_break_ascending_pool_index(self):
        m = build_map((0.5, 0.5), (0.5, 0.5))
        cells = select_top(m, 3)
        assert [c.pool_index for c in cells] == [0, 1, 2]

    def test_full_pool(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))
        cells = select_top(m, 4)
        assert sorted(c.pool_index for c in cells) == [0, 1, 2, 3]

    def test_out_of_range(self):
        m = build_map((0.5, 0.5), (0.5, 0.5))
        with pytest.raises(ValueError):
            select_top(m, 0)
        with pytest.raises(ValueError):
            select_top(m, 5)

    def test_prefix_property(self):
        rng = random.Random(9)
        for _ in range(50):
            k = rng.randint(2, 8)
            row, col = random_map_marginals(rng, k)
            m = build_map(row, col)
            full = select_top(m, k * k)
            for cut in (1, k, k * k // 2):
                assert select_top(m, cut) == full[:cut]

    def test_deterministic(self):
        m = build_map((0.9, 0.25, 0.9), (0.5, 1.0, 0.5))
        assert select_top(m, 5) == select_top(m, 5)

    def test_full_pool_temporal_is_identity(self):
        rng = random.Random(19)
        for _ in range(30):
            k = rng.randint(2, 8)
            row, col = random_map_marginals(rng, k)
            m = build_map(row, col)
            ordered = order_frames(select_top(m, k * k), ORDER_TEMPORAL)
            assert ordered == list(range(k * k))


class TestOrderFrames:
    def test_temporal(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))
        cells = select_top(m, 2)  # pool 1 (0.9) then pool 0 (0.45)
        assert order_frames(cells, ORDER_TEMPORAL) == [0, 1]

    def test_importance(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))
        cells = select_top(m, 2)
        assert order_frames(cells, ORDER_IMPORTANCE) == [1, 0]

    def test_single_cell(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))
        cells = select_top(m, 1)
        assert order_frames(cells, ORDER_TEMPORAL) == order_frames(cells, ORDER_IMPORTANCE) == [1]

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            order_frames([], "shuffled")


class TestCollation:
    def test_non_square(self):
        plan = collate_layout(5, (2048, 2048))
        assert plan.side == 3
        assert plan.slots.count(None) == 4
        assert plan.slot_size == (682, 682)

    def test_perfect_square(self):
        plan = collate_layout(4, (2048, 2048))
        assert plan.side == 2
        assert plan.slots.count(None) == 0

    def test_single(self):
        plan = collate_layout(1, (640, 480))
        assert plan.side == 1
        assert plan.slot_size == (640, 480)

    def test_slot_origins_row_major(self):
        plan = collate_layout(4, (100, 100))
        assert [plan.slot_origin(i) for i in range(4)] == [(0, 0), (50, 0), (0, 50), (50, 50)]

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            collate_layout(0)

    def test_render_fills_black_elsewhere(self):
        from PIL import Image

        imgs = [Image.new("RGB", (8, 8), (255, 0, 0)) for _ in range(3)]
        plan = collate_layout(3, (64, 64))
        canvas = render_collage(imgs, plan)
        assert canvas.size == (64, 64)
        assert canvas.getpixel((5, 5)) == (255, 0, 0)  # slot 0
        assert canvas.getpixel((40, 40)) == (0, 0, 0)  # empty slot 3


class TestSelectionPlan:
    def test_ordered_pool_indices(self):
        m = build_map((0.9, 0.25), (0.5, 1.0))
        cells = tuple(select_top(m, 3))
        plan = SelectionPlan(m_eff=3, cells=cells, ordering=ORDER_TEMPORAL)
        assert plan.ordered_pool_indices == (0, 1, 3)
