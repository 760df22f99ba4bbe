"""Patterns, serialization, and the built-in shift specifications."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlab.core import (
    BINARY,
    BWR,
    Occurrence,
    Pattern,
    PatternError,
    contains_forbidden,
    enumerate_forbidden,
    generic_scan,
    get_spec,
    hard_square_spec,
    invert,
    iter_rect_patterns,
    make_pattern,
    mirror_spec,
    red_black_index_offset,
    red_black_spec,
    red_black_square_count,
    run_mask,
    spec_from_patterns,
    subpattern,
)


def bits_pattern(rows):
    return make_pattern(rows, BINARY)


# ---------------------------------------------------------------------------
# Pattern basics
# ---------------------------------------------------------------------------


def test_make_pattern_all_zero():
    p = make_pattern(["00", "00"])
    assert len(p) == 4
    assert p.is_rectangular
    assert all(v == "0" for _, v in p.items())


def test_make_pattern_ragged_rows_rejected():
    with pytest.raises(PatternError):
        make_pattern(["000", "00"])


def test_make_pattern_infers_three_letter_alphabet():
    p = make_pattern(["BW", "RR"])
    assert p.alphabet.letters == BWR.letters


def test_pattern_is_immutable():
    p = make_pattern(["01"])
    with pytest.raises(AttributeError):
        p.alphabet = BWR


def test_rows_requires_rectangular():
    sparse = Pattern(BINARY, {(0, 0): "1", (2, 2): "0"})
    assert not sparse.is_rectangular
    with pytest.raises(PatternError):
        sparse.rows()


def test_translate_and_reanchor():
    p = make_pattern(["10", "01"])
    q = p.translate(3, -2)
    assert q.bbox == (3, -2, 4, -1)
    assert q.reanchored() == p


def test_union_conflict_raises():
    a = Pattern(BINARY, {(0, 0): "0"})
    b = Pattern(BINARY, {(0, 0): "1"})
    with pytest.raises(PatternError):
        a.union(b)


def test_text_round_trip_rectangular():
    p = make_pattern(["BWR", "RWB"])
    assert Pattern.from_text(p.to_text()) == p


def test_text_round_trip_sparse_reanchors():
    p = Pattern(BINARY, {(5, 7): "1", (6, 8): "0"})
    q = Pattern.from_text(p.to_text())
    assert q == p.reanchored()
    assert "." in p.to_text()


def test_from_text_truncated_body():
    with pytest.raises(PatternError):
        Pattern.from_text("2 2 2\n01\n")


def test_render_is_body_of_to_text():
    p = make_pattern(["00", "00"])
    assert p.render() == "00\n00\n"


def test_subpattern_identity_and_single_cell():
    p = make_pattern(["00", "00"])
    assert subpattern(p, (0, 0, 2, 2)) == p
    s = subpattern(p, (0, 0, 1, 1))
    assert s.cells == {(0, 0): "0"}


def test_subpattern_outside_support_rejected():
    p = make_pattern(["00", "00"])
    with pytest.raises(PatternError):
        subpattern(p, (1, 1, 2, 2))


def test_invert_involution_and_constants():
    p = make_pattern(["000", "000", "000"])
    assert invert(p) == make_pattern(["111", "111", "111"])
    q = make_pattern(["0110", "1001"])
    assert invert(invert(q)) == q


def test_invert_commutes_with_subpattern():
    p = make_pattern(["0110", "1001", "0011"])
    rect = (1, 1, 2, 3)
    assert invert(subpattern(p, rect)) == subpattern(invert(p), rect)


def test_invert_requires_binary():
    with pytest.raises(PatternError):
        invert(make_pattern(["BW"]))


def test_iter_rect_patterns_order_and_count():
    pats = list(iter_rect_patterns(BINARY, 1, 2))
    assert [p.rows() for p in pats] == [["00"], ["01"], ["10"], ["11"]]
    assert sum(1 for _ in iter_rect_patterns(BWR, 2, 1)) == 9


def test_lex_key_row_major():
    p = make_pattern(["BW", "RB"])
    assert p.lex_key() == (0, 1, 2, 0)


# ---------------------------------------------------------------------------
# run_mask
# ---------------------------------------------------------------------------


def test_run_mask_examples():
    # bits 0..5 of 0b0111101 set at 0,2,3,4,5
    mask = 0b111101
    assert run_mask(mask, 1) == mask
    assert run_mask(mask, 2) == 0b011100
    assert run_mask(mask, 4) == 0b000100


@given(st.integers(min_value=0, max_value=(1 << 16) - 1), st.integers(min_value=1, max_value=6))
def test_run_mask_matches_naive(mask, length):
    out = run_mask(mask, length)
    for i in range(16):
        expect = all((mask >> (i + k)) & 1 for k in range(length))
        assert bool((out >> i) & 1) == expect


# ---------------------------------------------------------------------------
# Built-in specs: enumerators
# ---------------------------------------------------------------------------


def test_hard_square_forbidden_is_two_dominoes():
    hs = hard_square_spec()
    for extent in (2, 3, 7):
        forb = enumerate_forbidden(hs, extent)
        assert len(forb) == 2
        assert forb[0].cells == {(0, 0): "1", (0, 1): "1"}
        assert forb[1].cells == {(0, 0): "1", (1, 0): "1"}


def test_red_black_counts_per_size():
    assert [red_black_square_count(s) for s in (2, 3, 4)] == [1, 27, 6561]
    rb = red_black_spec()
    assert len(enumerate_forbidden(rb, 2)) == 1
    assert len(enumerate_forbidden(rb, 3)) == 28
    assert len(enumerate_forbidden(rb, 4)) == 6589


def test_red_black_size2_square():
    rb = red_black_spec()
    (sq,) = enumerate_forbidden(rb, 2)
    assert sq.rows() == ["RR", "BB"]


def test_red_black_interior_free_all_letters():
    rb = red_black_spec()
    forb = enumerate_forbidden(rb, 3)
    threes = [f for f in forb if f.extent == 3]
    assert len(threes) == 27
    interiors = {f.at(1, 1) for f in threes}
    assert interiors == {"B", "W", "R"}
    for f in threes:
        assert f.rows()[0] == "RRR"
        assert f.rows()[2] == "BBB"


def test_red_black_index_offset_prefix_sums():
    assert red_black_index_offset(2) == 0
    assert red_black_index_offset(3) == 1
    assert red_black_index_offset(4) == 28


def test_enumerators_prefix_closed_and_deterministic():
    # red-black forbidden squares multiply as 3^(s(s-2)) per size, so cap
    # that family at extent 4 (6589 patterns); extent 5 alone would
    # materialize 3^15 of them
    for spec, big_extent in (
        (hard_square_spec(), 5),
        (red_black_spec(), 4),
        (mirror_spec(), 5),
    ):
        small = enumerate_forbidden(spec, 3)
        big = enumerate_forbidden(spec, big_extent)
        assert list(big[: len(small)]) == list(small)
        assert [f.to_text() for f in enumerate_forbidden(spec, 4)] == [
            f.to_text() for f in enumerate_forbidden(spec, 4)
        ]
        for f in big:
            assert f.extent <= big_extent


def test_mirror_enumerator_counts():
    mi = mirror_spec()
    assert len(enumerate_forbidden(mi, 2)) == 5
    assert len(enumerate_forbidden(mi, 3)) == 12
    # extent 4 adds only the {R, R} column at distance 3
    assert len(enumerate_forbidden(mi, 4)) == 13


# ---------------------------------------------------------------------------
# contains_forbidden
# ---------------------------------------------------------------------------


def test_all_white_red_black_admissible():
    rb = red_black_spec()
    p = make_pattern(["WWW", "WWW", "WWW"])
    assert contains_forbidden(p, rb) is None


def test_red_black_square_found_at_origin():
    rb = red_black_spec()
    p = make_pattern(["RR", "BB"])
    occ = contains_forbidden(p, rb)
    assert occ == Occurrence(0, (0, 0))


def test_hard_square_occurrence_positions():
    hs = hard_square_spec()
    p = make_pattern(["010", "011"])
    occ = contains_forbidden(p, hs)
    # row-major anchors: the vertical pair at (0,1) comes before the
    # horizontal pair at (1,1)
    assert occ == Occurrence(1, (0, 1))


def test_alphabet_mismatch_rejected():
    rb = red_black_spec()
    with pytest.raises(PatternError):
        contains_forbidden(make_pattern(["01"]), rb)


def _independent_embed_scan(p, forbidden):
    """Brute-force double loop, written without the library's scan."""
    hits = []
    support = p.cells
    for idx, f in enumerate(forbidden):
        fc = f.cells
        for ar in range(p.bbox[0] - 5, p.bbox[2] + 6):
            for ac in range(p.bbox[1] - 5, p.bbox[3] + 6):
                if all(
                    support.get((ar + dr, ac + dc)) == letter
                    for (dr, dc), letter in fc.items()
                ):
                    hits.append((ar, ac, idx))
    return hits


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=511), min_size=1, max_size=1))
def test_red_black_finder_agrees_with_independent_scan(seeds):
    # 3x3 BWR patterns indexed by the seed
    v = seeds[0]
    letters = "BWR"
    digits = []
    x = v
    for _ in range(9):
        digits.append(letters[x % 3])
        x //= 3
    p = make_pattern(
    ["".join(digits[0:3]), "".join(digits[3:6]), "".join(digits[6:9])], BWR
    )
    rb = red_black_spec()
    occ = contains_forbidden(p, rb)
    hits = _independent_embed_scan(p, enumerate_forbidden(rb, 3))
    if occ is None:
        assert hits == []
    else:
        assert hits
        first = min(hits, key=lambda h: (h[0], h[1], h[2]))
        assert (occ.anchor[0], occ.anchor[1], occ.forbidden_index) == first


def test_finder_matches_generic_scan_on_window():
    rb = red_black_spec()
    p = make_pattern(["WRRW", "WBBW", "WWWW", "RRRW"])
    occ_fast = contains_forbidden(p, rb)
    occ_slow = generic_scan(p, enumerate_forbidden(rb, p.extent))
    assert occ_fast == occ_slow


def test_mirror_constraints():
    mi = mirror_spec()
    # red beside non-red
    assert contains_forbidden(make_pattern(["RB"], BWR), mi) is not None
    # two reds in one column
    assert contains_forbidden(make_pattern(["R", "W", "R"], BWR), mi) is not None
    # asymmetric letters around a red centre
    p = make_pattern(["B", "R", "W"], BWR)
    assert contains_forbidden(p, mi) is not None
    q = make_pattern(["B", "R", "B"], BWR)
    assert contains_forbidden(q, mi) is None


# ---------------------------------------------------------------------------
# User-defined specs
# ---------------------------------------------------------------------------


def test_spec_from_patterns_orders_by_extent():
    big = Pattern(BINARY, {(0, 0): "1", (2, 2): "1"})
    small = Pattern(BINARY, {(0, 0): "1", (0, 1): "0"})
    spec = spec_from_patterns("user", BINARY, [big, small])
    assert [f.extent for f in enumerate_forbidden(spec, 3)] == [2, 3]
    assert enumerate_forbidden(spec, 2) == (small,)


def test_get_spec_names():
    assert get_spec("hard-square").name == "hard-square"
    assert get_spec("red-black").name == "red-black"
    assert get_spec("mirror").name == "mirror"
    with pytest.raises(PatternError):
        get_spec("no-such-spec")


def test_get_spec_from_file(tmp_path):
    f = tmp_path / "pat.txt"
    f.write_text(Pattern(BINARY, {(0, 0): "1", (0, 1): "1"}).to_text())
    spec = get_spec(f"file:{f}")
    assert len(enumerate_forbidden(spec, 2)) == 1


@given(
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=1, max_value=3),
    st.data(),
)
@settings(max_examples=40, deadline=None)
def test_generic_scan_none_iff_no_embedding(h, w, data):
    rows = [
        "".join(data.draw(st.sampled_from("01")) for _ in range(w)) for _ in range(h)
    ]
    p = make_pattern(rows, BINARY)
    hs = hard_square_spec()
    occ = contains_forbidden(p, hs)
    brute = any(
        "11" in row for row in rows
    ) or any(
        rows[r][c] == "1" and rows[r + 1][c] == "1"
        for r in range(h - 1)
        for c in range(w)
    )
    assert (occ is not None) == brute
