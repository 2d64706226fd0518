import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_codes, rational_gauss_code

from knotsim.gauss import (
    DegenerateProjection,
    GaussCode,
    GaussEntry,
    ParseError,
    ValidationError,
    codes_equal,
    compute_gauss_code,
    count_possible_codes,
    crossing_count,
    find_crossings,
    format_code,
    parse_code,
)
from knotsim.geometry import KnotConfiguration, circle_configuration

# Hand-built 12-bead loop with exactly one crossing: the strand from
# bead 2 to 3 passes at z=+0.1 above the strand from bead 8 to 9 at
# z=-0.1, projections crossing at right angles at the origin.
SINGLE_CROSSING_POINTS = np.array(
    [
        [-0.18, -0.20, 0.05],
        [-0.20, -0.05, 0.08],
        [-0.075, 0.00, 0.10],
        [0.075, 0.00, 0.10],
        [0.20, 0.05, 0.06],
        [0.25, 0.18, 0.00],
        [0.15, 0.28, -0.05],
        [0.05, 0.20, -0.08],
        [0.00, 0.075, -0.10],
        [0.00, -0.075, -0.10],
        [0.05, -0.20, -0.06],
        [-0.05, -0.28, 0.00],
    ]
)


def entries(code: GaussCode):
    return [(l, 1 if o else -1) for l, o in code.entries]


@pytest.fixture
def single_crossing():
    return KnotConfiguration(SINGLE_CROSSING_POINTS)


class TestFindCrossings:
    def test_planar_circle_has_none(self):
        assert find_crossings(circle_configuration(40)) == []

    def test_single_crossing_fixture(self, single_crossing):
        # Pinned against the exact rational oracle.
        oracle = rational_gauss_code(SINGLE_CROSSING_POINTS)
        assert oracle == [(1, True), (1, False)]

        found = find_crossings(single_crossing)
        assert len(found) == 1
        c = found[0]
        assert (c.seg_a, c.seg_b) == (2, 8)
        assert c.over_seg == 2
        assert np.allclose(c.uv, (0.0, 0.0), atol=1e-12)
        assert 0.0 < c.param_a < 1.0 and 0.0 < c.param_b < 1.0

    def test_z_negation_flips_over(self, single_crossing):
        mirrored = KnotConfiguration(SINGLE_CROSSING_POINTS * [1.0, 1.0, -1.0])
        c = find_crossings(mirrored)[0]
        assert c.over_seg == 8

    def test_z_ambiguity_raises(self):
        pts = SINGLE_CROSSING_POINTS.copy()
        pts[:, 2] = 0.0  # planar projection with a crossing
        with pytest.raises(DegenerateProjection):
            find_crossings(KnotConfiguration(pts))

    def test_endpoint_hit_raises(self):
        pts = SINGLE_CROSSING_POINTS.copy()
        # Park bead 3 exactly on the 8-9 strand's projection.
        pts[3] = [0.0, 0.0, 0.10]
        pts[4] = [0.18, 0.05, 0.06]
        with pytest.raises(DegenerateProjection):
            find_crossings(KnotConfiguration(pts))


class TestComputeGaussCode:
    def test_planar_circle_empty(self):
        code = compute_gauss_code(circle_configuration(40))
        assert entries(code) == []
        assert crossing_count(code) == 0

    def test_single_crossing_code(self, single_crossing):
        code = compute_gauss_code(single_crossing)
        assert entries(code) == [(1, 1), (1, -1)]
        assert format_code(code) in ("[1+,1-]", "[1-,1+]")  # Table-2 pair
        assert format_code(code) == "[1+,1-]"  # over-strand met first

    def test_agrees_with_rational_oracle(self, loop_factory):
        checked = 0
        for seed in range(40):
            cfg = loop_factory(seed)
            try:
                expected = rational_gauss_code(cfg.points)
            except ValueError:
                continue
            code = compute_gauss_code(cfg)
            assert [(l, o) for l, o in code.entries] == [
                (l, o) for l, o in expected
            ], f"seed {seed}"
            checked += 1
        assert checked >= 35  # degenerate draws should be rare

    def test_mirror_property(self, loop_factory):
        for seed in range(25):
            cfg = loop_factory(seed)
            code = compute_gauss_code(cfg)
            flipped = compute_gauss_code(
                KnotConfiguration(cfg.points * [1.0, 1.0, -1.0])
            )
            assert [(l, not o) for l, o in code.entries] == list(flipped.entries)

    def test_rigid_invariance(self, loop_factory):
        rng = np.random.default_rng(99)
        for seed in range(25):
            cfg = loop_factory(seed)
            code = compute_gauss_code(cfg)

            shift = rng.uniform(-2, 2, size=3) * [1, 1, 0]
            assert codes_equal(
                code, compute_gauss_code(KnotConfiguration(cfg.points + shift))
            )

            angle = rng.uniform(0, 2 * np.pi)
            rot = np.array(
                [
                    [np.cos(angle), -np.sin(angle), 0],
                    [np.sin(angle), np.cos(angle), 0],
                    [0, 0, 1],
                ]
            )
            assert codes_equal(
                code, compute_gauss_code(KnotConfiguration(cfg.points @ rot.T))
            )

            # Scale range keeps the edge-length validity bounds intact.
            scale = rng.uniform(0.9, 1.1)
            assert codes_equal(
                code, compute_gauss_code(KnotConfiguration(cfg.points * scale))
            )

    def test_count_matches_find_crossings(self, loop_factory):
        for seed in range(10):
            cfg = loop_factory(seed)
            assert crossing_count(compute_gauss_code(cfg)) == len(find_crossings(cfg))

    def test_invariants_hold_on_random_configs(self, loop_factory):
        # GaussCode's constructor enforces the invariants; it must never
        # reject what compute_gauss_code builds.
        for seed in range(50, 90):
            try:
                compute_gauss_code(loop_factory(seed))
            except DegenerateProjection:
                pass


class TestCodesEqual:
    def test_empty_equal(self):
        assert codes_equal(GaussCode(()), GaussCode(()))

    def test_table2_distinct_single(self):
        a = parse_code("[1+,1-]")
        b = parse_code("[1-,1+]")
        assert not codes_equal(a, b)

    def test_table2_distinct_double(self):
        a = parse_code("[1+,1-,2+,2-]")
        b = parse_code("[1+,1-,2-,2+]")
        assert not codes_equal(a, b)


class TestCountPossibleCodes:
    def test_paper_values(self):
        assert [count_possible_codes(n) for n in (0, 1, 2)] == [1, 2, 12]

    def test_matches_enumeration_up_to_four(self):
        for n in range(5):
            assert count_possible_codes(n) == len(enumerate_codes(n))

    def test_enumeration_members_are_valid_codes(self):
        for enc in sorted(enumerate_codes(2)):
            GaussCode(tuple(GaussEntry(l, s > 0) for l, s in enc))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            count_possible_codes(-1)

    def test_large_n_exact(self):
        # Arbitrary-precision integers: no silent wraparound ever.
        assert count_possible_codes(30) % 2 == 0
        assert count_possible_codes(30) == count_possible_codes(29) * 59 * 2


class TestParseFormat:
    def test_empty(self):
        assert entries(parse_code("[]")) == []
        assert format_code(parse_code("[]")) == "[]"

    def test_table1_code(self):
        code = parse_code("[1+,1-,2+,2-]")
        assert crossing_count(code) == 2
        assert format_code(code) == "[1+,1-,2+,2-]"

    def test_whitespace_tolerated(self):
        assert format_code(parse_code(" [ 1+ , 1- ] ")) == "[1+,1-]"

    def test_single_occurrence_rejected(self):
        with pytest.raises(ValidationError):
            parse_code("[1+,2+,1-]")

    def test_same_sign_twice_rejected(self):
        with pytest.raises(ValidationError):
            parse_code("[1+,1+]")

    def test_noncanonical_label_order_rejected(self):
        with pytest.raises(ValidationError):
            parse_code("[2+,1+,2-,1-]")

    def test_parse_error_carries_offset(self):
        with pytest.raises(ParseError) as exc:
            parse_code("[1*]")
        assert exc.value.offset == 2

    def test_garbage_rejected(self):
        for bad in ("", "1+,1-", "[1+,1-", "[1+,1-]x", "[+]"):
            with pytest.raises(ParseError):
                parse_code(bad)

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_roundtrip_generated_codes(self, data):
        n = data.draw(st.integers(min_value=0, max_value=6))
        # Build a random valid code: random interleaving with canonical
        # relabeling, random sign for each first visit.
        order = data.draw(st.permutations(sorted(list(range(n)) * 2)))
        relabel, seen, items = {}, {}, []
        for sym in order:
            if sym not in relabel:
                relabel[sym] = len(relabel) + 1
                seen[sym] = data.draw(st.booleans())
                items.append(GaussEntry(relabel[sym], seen[sym]))
            else:
                items.append(GaussEntry(relabel[sym], not seen[sym]))
        code = GaussCode(tuple(items))
        assert codes_equal(parse_code(format_code(code)), code)
