import itertools

import numpy as np
import pytest

from walkref.cfi import build_cfi, default_twist, grid_base
from walkref.game import (
    PebblePlacement,
    duplicator_bijection,
    is_wall,
    opening_scenario,
    strategy_scenario,
    twisted_components,
    verify_component_bound,
    verify_round_safe,
    wall_adjacent_scenario,
    wall_nonadjacent_scenario,
)


@pytest.fixture(scope="module")
def g4():
    b = grid_base(4)
    t = default_twist(b)
    return b, t, build_cfi(b), build_cfi(b, t)


class TestComponents:
    def test_no_pebbles_single_twisted_component(self):
        for n in (3, 4, 6):
            b = grid_base(n)
            cs = twisted_components(b, set(), default_twist(b))
            assert len(cs.components) == 1
            only = cs.components[0]
            assert only.twisted and only.size == 2 * n + 1

    def test_vertical_wall_splits(self):
        n = 6
        b = grid_base(n)
        for c in range(1, n - 1):
            pebbled = {c, n + c}
            assert is_wall(b, pebbled)
            cs = twisted_components(b, pebbled, default_twist(b))
            nontrivial = [x for x in cs.components if x.nontrivial]
            assert len(nontrivial) == 2
            sizes = sorted(x.size for x in nontrivial)
            assert sizes == sorted([2 * c, 2 * (n - 1 - c) + 1])
            # the twist sits left of every wall, so the left side is twisted
            left = next(x for x in nontrivial if 0 in x.contained)
            assert left.twisted

    def test_exactly_one_twisted_component(self):
        b = grid_base(5)
        t = default_twist(b)
        for pebbled in itertools.combinations(range(b.n), 2):
            cs = twisted_components(b, set(pebbled), t)
            assert sum(c.twisted for c in cs.components) == 1

    def test_pebbled_endpoints_make_trivial_component(self):
        b = grid_base(4)
        # pebble both endpoints of an interior vertical edge's neighbors
        cs = twisted_components(b, {1, 5}, default_twist(b))
        trivial = [c for c in cs.components if not c.nontrivial]
        assert any(c.edges == {(1, 5)} for c in trivial)

    def test_invalid_twist_rejected(self):
        with pytest.raises(ValueError):
            twisted_components(grid_base(3), set(), (0, 4))


class TestSeparatorSizeLemma:
    @pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
    def test_component_bound_under_strategy(self, n):
        """Dropping to any consecutive pair after the wall strategies keeps
        the twisted component at least min{l, 2n-l-2} large."""
        b = grid_base(n)
        t = default_twist(b)
        gp, gt = build_cfi(b), build_cfi(b, t)
        for column in range(2, n - 1):
            scen = wall_adjacent_scenario(b, t, column, k=3)
            bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
            assert verify_component_bound(bij, scen.ell)


class TestDuplicatorBijection:
    def test_case1_only_is_phi(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, k=4)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        away = [x for x in range(gp.n) if gp.vertex_origin[x][0] != scen.v]
        walk = tuple(away[:3])
        assert bij.map_tuple(walk) == tuple(int(bij.phi[x]) for x in walk)

    def test_stationary_run_uses_case_2b(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, k=4)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        vv = gp.gadget(scen.v)[0]
        _, edges = bij.map_tuple_with_edges((vv, vv, vv))
        # whole interior stationary at v: at most one incident edge is used
        chosen = {e for e in edges if e != scen.e1}
        assert chosen <= {scen.e1, scen.e2}

    def test_bijective_on_full_tuple_space(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, k=4)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        images = set()
        for walk in itertools.product(range(gp.n), repeat=3):
            images.add(bij.map_tuple(walk))
        assert len(images) == gp.n ** 3

    def test_precondition_errors(self, g4):
        b, t, gp, gt = g4
        pebbles = PebblePlacement(2, 6, 4)
        with pytest.raises(ValueError):  # pendant vertex has degree 1
            duplicator_bijection(gp, gt, pebbles, 8, (3, 8), (3, 7))
        with pytest.raises(ValueError):  # e2 not incident to v
            duplicator_bijection(gp, gt, pebbles, 1, (0, 1), (2, 6))
        with pytest.raises(ValueError):  # v right of the wall is untwisted
            duplicator_bijection(gp, gt, pebbles, 3, (2, 3), (3, 7))
        with pytest.raises(ValueError):  # second graph carries no twist
            duplicator_bijection(gp, gp, pebbles, 1, (0, 1), (1, 5))


class TestRoundSafety:
    @pytest.mark.parametrize("maker,col", [
        (wall_adjacent_scenario, 2),
        (wall_nonadjacent_scenario, 1),
    ])
    def test_wall_scenarios_safe_k4(self, g4, maker, col):
        b, t, gp, gt = g4
        scen = maker(b, t, col, 4)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        assert verify_round_safe(bij, gp, gt, scen.pebbles)

    def test_opening_scenario_safe(self, g4):
        b, t, gp, gt = g4
        scen = opening_scenario(b, t, 3)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        assert verify_round_safe(bij, gp, gt, scen.pebbles)

    def test_k2_degenerate(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, 2)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        assert verify_round_safe(bij, gp, gt, scen.pebbles)

    def test_corrupted_map_detected(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, 3)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        a, c = (0, 0), (1, 2)
        swapped = {a: bij.map_tuple(c), c: bij.map_tuple(a)}
        original = bij.map_tuple

        class Corrupted:
            def __getattr__(self, name):
                return getattr(bij, name)

            def map_tuple(self, walk):
                return swapped.get(walk, original(walk))

        assert not verify_round_safe(Corrupted(), gp, gt, scen.pebbles)

    def test_budget_guard(self, g4):
        b, t, gp, gt = g4
        scen = wall_adjacent_scenario(b, t, 2, 8)
        bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
        with pytest.raises(ValueError):
            verify_round_safe(bij, gp, gt, scen.pebbles, budget=10**4)

    def test_grid5_both_shapes_safe(self):
        b = grid_base(5)
        t = default_twist(b)
        gp, gt = build_cfi(b), build_cfi(b, t)
        for maker, col in ((wall_adjacent_scenario, 2), (wall_nonadjacent_scenario, 1)):
            scen = maker(b, t, col, 3)
            bij = duplicator_bijection(gp, gt, scen.pebbles, scen.v, scen.e1, scen.e2)
            assert verify_round_safe(bij, gp, gt, scen.pebbles)


class TestStrategyScenario:
    def test_nonadjacent_orientation_swapped_for_separator(self, g4):
        b, t, _, _ = g4
        scen = wall_nonadjacent_scenario(b, t, 1, 4)
        assert is_wall(b, set(scen.e2))
        assert scen.v in scen.e1 and scen.v in scen.e2

    def test_ell_matches_separator_side(self, g4):
        b, t, _, _ = g4
        scen = wall_adjacent_scenario(b, t, 2, 4)
        # e2 = column-1 vertical edge: the far side is column 0
        assert scen.ell == 2
