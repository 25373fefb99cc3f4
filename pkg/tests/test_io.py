import warnings
from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discrete_barycenter import FLOAT, DataError, DiscreteMeasure, exact_barycenter, transport_cost
from discrete_barycenter.io import (
    GridImage,
    format_scalar,
    grid_to_measure,
    parse_measure,
    parse_pgm,
    parse_transport,
    read_pgm,
    render_measure,
    serialize_measure,
    serialize_pgm,
    serialize_transport,
)
from instances import HALF, QUARTER, grid_pair

DATA = Path(__file__).parent / "data"


def test_parse_example_measure():
    text = "d 2\n1/4 0 1\n1/2 1 0\n1/4 2 1\n"
    assert parse_measure(text) == grid_pair()[0][0]


def test_parse_with_comments_and_decimals():
    m = parse_measure("# origin\nd 1\n1.0 0   # the only atom\n")
    assert m == DiscreteMeasure([(0,)], [1])


@pytest.mark.parametrize(
    "text, message",
    [
        ("d 2\n0.5 0 0\n0.49 1 1\n", "sum"),
        ("d 2\n1 0\n", "line 2"),
        ("d 1\n-1 0\n2 1\n", "line 2"),
        ("d 1\n1 x\n", "line 2"),
        ("dim 1\n1 0\n", "line 1"),
        ("", "empty"),
        ("d 1\n", "no atoms"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(DataError, match=message):
        parse_measure(text)


def test_float_parse_renormalises():
    m = parse_measure("d 1\n0.5 0\n0.4999999 1\n", FLOAT)
    assert sum(m.masses) == pytest.approx(1, abs=1e-15)


def test_format_scalar():
    assert format_scalar(F(3, 4)) == "3/4"
    assert format_scalar(F(2)) == "2"
    assert format_scalar(0.1) == "0.1"


@st.composite
def measures(draw):
    d = draw(st.integers(1, 3))
    pts = draw(st.lists(st.tuples(*[st.fractions(-9, 9, max_denominator=7)] * d), min_size=1, max_size=6, unique=True))
    raw = draw(st.lists(st.integers(1, 20), min_size=len(pts), max_size=len(pts)))
    return DiscreteMeasure(pts, [F(r, sum(raw)) for r in raw])


@settings(max_examples=80, deadline=None)
@given(measures())
def test_measure_round_trip(m):
    assert parse_measure(serialize_measure(m)) == m


def test_transport_round_trip():
    measures, w = grid_pair()
    bary = exact_barycenter(measures, w)
    text = serialize_transport(bary.plan)
    assert text.splitlines()[0] == "N 2"
    plan = parse_transport(text, bary.measure, measures)
    assert plan.flows == bary.plan.flows


def test_transport_rejects_bad_marginals():
    measures, w = grid_pair()
    bary = exact_barycenter(measures, w)
    with pytest.raises(DataError, match="marginals"):
        parse_transport("N 2\n0 0 0 1/4\n", bary.measure, measures)
    with pytest.raises(DataError, match="out of range"):
        parse_transport("N 2\n0 9 0 1/4\n", bary.measure, measures)
    with pytest.raises(DataError, match="2 given"):
        parse_transport("N 3\n", bary.measure, measures)


# -- PGM ---------------------------------------------------------------------


def test_grid_to_measure_examples():
    assert grid_to_measure(GridImage(2, 1, 1, ((1, 1),))) == DiscreteMeasure([(0, 0), (1, 0)], [HALF, HALF])
    img = GridImage(2, 2, 3, ((1, 0), (0, 3)))
    assert grid_to_measure(img) == DiscreteMeasure([(0, 0), (1, 1)], [QUARTER, 3 * QUARTER])


def test_grid_to_measure_pixel_convention():
    # a single pixel in row 0, column 2 becomes the point (2, 0)
    img = GridImage(3, 2, 9, ((0, 0, 5), (0, 0, 0)))
    assert grid_to_measure(img).points == ((2, 0),)


def test_all_zero_image_rejected():
    with pytest.raises(DataError):
        grid_to_measure(GridImage(2, 2, 1, ((0, 0), (0, 0))))


def test_digit_files():
    for path in sorted(DATA.glob("six*.pgm")):
        img = read_pgm(path)
        assert (img.width, img.height) == (16, 16)
        m = grid_to_measure(img)
        assert sum(m.masses) == 1 and len(m) <= 256


@pytest.mark.parametrize("binary", [False, True])
@pytest.mark.parametrize("max_value", [4, 255, 1000])
def test_pgm_round_trip(binary, max_value):
    img = GridImage(3, 2, max_value, ((0, 1, max_value), (max_value // 2, 0, 3)))
    assert parse_pgm(serialize_pgm(img, binary)) == img


def test_pgm_bytes_exact():
    img = GridImage(2, 1, 255, ((7, 200),))
    assert serialize_pgm(img) == b"P2\n2 1\n255\n7 200\n"
    assert serialize_pgm(img, binary=True) == b"P5\n2 1\n255\n\x07\xc8"


def test_pgm_header_comments():
    data = b"P2\n# made by hand\n2 1 # size\n# depth next\n9\n1 2\n"
    assert parse_pgm(data) == GridImage(2, 1, 9, ((1, 2),))
    raw = b"P5 # c\n2 1\n255\n" + bytes([35, 10])
    assert parse_pgm(raw).pixels == ((35, 10),)


@pytest.mark.parametrize("data", [b"P3\n1 1\n1\n1\n", b"P2\n2 2\n9\n1 2 3\n", b"P5\n2 1\n255\n\x01", b"P2\n1"])
def test_bad_pgm(data):
    with pytest.raises(DataError):
        parse_pgm(data)


# -- rendering ---------------------------------------------------------------


def test_render_grid_pair_barycenter():
    measures, w = grid_pair()
    img = render_measure(exact_barycenter(measures, w).measure, 2, (3, 2))
    assert (img.width, img.height) == (5, 3)
    assert img.pixels[1] == (128, 0, 255, 0, 128)
    assert img.pixels[0] == img.pixels[2] == (0,) * 5


def test_render_sizes():
    m = DiscreteMeasure([(0, 0), (15, 15)], [HALF, HALF])
    img = render_measure(m, 4, (16, 16))
    assert (img.width, img.height) == (61, 61)
    assert img.pixels[0][0] == img.pixels[60][60] == 255
    img = render_measure(m, 1, (16, 16))
    assert (img.width, img.height) == (16, 16)


def test_render_snaps_off_lattice_atoms():
    m = DiscreteMeasure([(F(1, 3), 0)], [1])
    with pytest.warns(UserWarning, match="snapped"):
        img = render_measure(m, 2, (2, 1))
    assert img.pixels == ((0, 255, 0),)


def test_render_on_lattice_is_silent():
    m = DiscreteMeasure([(HALF, 0)], [1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        render_measure(m, 2, (2, 1))


def test_render_rejects_outside_atoms():
    with pytest.raises(DataError, match="outside"):
        render_measure(DiscreteMeasure([(3, 0)], [1]), 1, (2, 2))


def test_rendered_digit_measures_round_trip():
    m = grid_to_measure(read_pgm(DATA / "six1.pgm"))
    img = render_measure(m, 1, (16, 16), max_value=4)
    back = grid_to_measure(img)
    assert back.points == m.points
    # intensities are proportional to mass up to rounding
    phi, _ = transport_cost(back, [m], [1])
    assert phi == 0
