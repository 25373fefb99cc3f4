"""Text formats for measures and transports, PGM images, and rendering.

Measure file::

    d 2
    # mass  x  y
    1/4 0 1
    1/2 1 0

Transport file::

    N 2
    0 0 0 1/4
    1 0 0 1/4

with 0-based ``i j k`` indices into the measure index, the source atom and
the target atom (atoms in the sorted order of the measures). Pixel
``(row r, column c)`` of an image is the point ``(c, r)``: origin at the top
left, y growing downwards.
"""

import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .arith import get_arithmetic
from .exceptions import DataError
from .measures import DiscreteMeasure, TransportPlan

__all__ = [
    "format_scalar",
    "parse_measure",
    "serialize_measure",
    "read_measure",
    "write_measure",
    "parse_transport",
    "serialize_transport",
    "GridImage",
    "parse_pgm",
    "serialize_pgm",
    "read_pgm",
    "write_pgm",
    "grid_to_measure",
    "render_measure",
]


def format_scalar(v):
    """``p/q`` (or ``p``) for rationals, shortest round-trip decimal for floats."""
    if isinstance(v, float):
        return repr(v)
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _parse_number(tok, arith, lineno):
    try:
        return arith.scalar(tok)
    except (ValueError, ZeroDivisionError):
        raise DataError(f"line {lineno}: cannot parse number {tok!r}") from None


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_measure(text, arith=None, kind="full"):
    """Parse the measure text format.

    Masses within 1e-6 of summing to one are renormalised; anything else is
    an error, as are non-positive masses and rows of the wrong length.
    """
    arith = get_arithmetic(arith)
    lines = _content_lines(text)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise DataError("empty measure file") from None
    if len(head) != 2 or head[0] != "d" or not head[1].isdigit() or int(head[1]) < 1:
        raise DataError(f"line {lineno}: expected header 'd <dim>'")
    dim = int(head[1])
    points, masses = [], []
    for lineno, toks in lines:
        if len(toks) != dim + 1:
            raise DataError(f"line {lineno}: expected mass and {dim} coordinates, got {len(toks)} fields")
        m = _parse_number(toks[0], arith, lineno)
        if not m > 0:
            raise DataError(f"line {lineno}: mass must be positive")
        masses.append(m)
        points.append(tuple(_parse_number(t, arith, lineno) for t in toks[1:]))
    if not points:
        raise DataError("measure file has no atoms")
    return DiscreteMeasure(points, masses, kind=kind, arith=arith)


def serialize_measure(measure):
    lines = [f"d {measure.dim}"]
    for p, m in measure:
        lines.append(" ".join([format_scalar(m)] + [format_scalar(c) for c in p]))
    return "\n".join(lines) + "\n"


def read_measure(path, arith=None, kind="full"):
    with open(path, encoding="utf-8") as fh:
        try:
            return parse_measure(fh.read(), arith, kind)
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None


def write_measure(path, measure):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_measure(measure))


def serialize_transport(plan):
    lines = [f"N {len(plan.targets)}"]
    for (i, j, k) in sorted(plan.flows):
        lines.append(f"{i} {j} {k} {format_scalar(plan.flows[(i, j, k)])}")
    return "\n".join(lines) + "\n"


def parse_transport(text, source, targets, arith=None):
    """Parse a transport file against a known source measure and targets."""
    arith = get_arithmetic(arith)
    lines = _content_lines(text)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise DataError("empty transport file") from None
    if len(head) != 2 or head[0] != "N" or not head[1].isdigit():
        raise DataError(f"line {lineno}: expected header 'N <n>'")
    n = int(head[1])
    if n != len(targets):
        raise DataError(f"transport is for {n} measures, {len(targets)} given")
    flows = {}
    for lineno, toks in lines:
        if len(toks) != 4 or not all(t.isdigit() for t in toks[:3]):
            raise DataError(f"line {lineno}: expected 'i j k mass'")
        i, j, k = (int(t) for t in toks[:3])
        if i >= n or j >= len(source) or k >= len(targets[i]):
            raise DataError(f"line {lineno}: index out of range")
        y = _parse_number(toks[3], arith, lineno)
        if not y > 0:
            raise DataError(f"line {lineno}: flow must be positive")
        flows[(i, j, k)] = flows.get((i, j, k), 0) + y
    plan = TransportPlan(source, tuple(targets), flows)
    if not plan.is_valid(arith):
        raise DataError("transport marginals do not match the measures")
    return plan


# -- PGM ---------------------------------------------------------------------


@dataclass(frozen=True)
class GridImage:
    """Grayscale image; ``pixels[r][c]`` is the intensity at row ``r``, column ``c``."""

    width: int
    height: int
    max_value: int
    pixels: tuple

    def __post_init__(self):
        if len(self.pixels) != self.height or any(len(row) != self.width for row in self.pixels):
            raise DataError("pixel array does not match width and height")
        if not 0 < self.max_value < 65536:
            raise DataError("max_value must be in 1..65535")
        if any(not 0 <= v <= self.max_value for row in self.pixels for v in row):
            raise DataError("pixel value out of range")


_PGM_TOKEN = re.compile(rb"(#[^\n\r]*[\n\r]?)|(\S+)")


def _pgm_header(data):
    """Return ``(magic, width, height, maxval, offset of the raster)``."""
    fields = []
    pos = 0
    while len(fields) < 4:
        m = _PGM_TOKEN.search(data, pos)
        if m is None:
            raise DataError("truncated PGM header")
        pos = m.end()
        if m.group(2) is not None:
            fields.append(m.group(2))
    magic = fields[0]
    if magic not in (b"P2", b"P5"):
        raise DataError("not a P2 or P5 PGM file")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise DataError("malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DataError("malformed PGM header")
    # exactly one whitespace byte separates the header from a binary raster
    return magic, width, height, maxval, pos + 1


def parse_pgm(data):
    """Decode P2 (ASCII) or P5 (binary) PGM bytes."""
    if isinstance(data, str):
        data = data.encode("ascii")
    magic, width, height, maxval, offset = _pgm_header(data)
    count = width * height
    if magic == b"P5":
        size = 1 if maxval < 256 else 2
        raster = data[offset : offset + count * size]
        if len(raster) != count * size:
            raise DataError("truncated PGM raster")
        if size == 1:
            values = list(raster)
        else:
            values = [int.from_bytes(raster[t : t + 2], "big") for t in range(0, len(raster), 2)]
    else:
        toks = re.sub(rb"#[^\n\r]*", b" ", data[offset - 1 :]).split()
        if len(toks) < count:
            raise DataError("truncated PGM raster")
        try:
            values = [int(t) for t in toks[:count]]
        except ValueError:
            raise DataError("non-integer PGM pixel") from None
    rows = tuple(tuple(values[r * width : (r + 1) * width]) for r in range(height))
    return GridImage(width, height, maxval, rows)


def serialize_pgm(img, binary=False):
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{img.max_value}\n".encode("ascii")
    if binary:
        size = 1 if img.max_value < 256 else 2
        return header + b"".join(v.to_bytes(size, "big") for row in img.pixels for v in row)
    body = "\n".join(" ".join(str(v) for v in row) for row in img.pixels)
    return header + body.encode("ascii") + b"\n"


def read_pgm(path):
    with open(path, "rb") as fh:
        try:
            return parse_pgm(fh.read())
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None


def write_pgm(path, img, binary=False):
    with open(path, "wb") as fh:
        fh.write(serialize_pgm(img, binary))


def grid_to_measure(img, arith=None):
    """Each positive pixel ``(r, c)`` becomes an atom at ``(c, r)`` with mass ``v / sum(v)``."""
    arith = get_arithmetic(arith)
    total = sum(v for row in img.pixels for v in row)
    if total == 0:
        raise DataError("image has no positive pixel")
    points, masses = [], []
    for r, row in enumerate(img.pixels):
        for c, v in enumerate(row):
            if v > 0:
                points.append((c, r))
                masses.append(Fraction(v, total) if arith.exact else v / total)
    return DiscreteMeasure(points, masses, arith=arith)


def _round_half_up(x):
    return math.floor(x + Fraction(1, 2)) if isinstance(x, Fraction) else math.floor(x + 0.5)


def render_measure(measure, q=1, canvas=None, max_value=255):
    """Draw a two-dimensional measure on a ``q`` times finer grid.

    Parameters
    ----------
    measure : DiscreteMeasure
        Points are ``(x, y)`` pixel coordinates of the original grid.
    q : int
        Refinement; an ``n`` pixel side becomes ``q * n - (q - 1)`` pixels,
        so original pixel centres stay on the grid.
    canvas : (width, height), optional
        Original grid size; defaults to the smallest one holding every atom.
    max_value : int
        Intensity of the heaviest cell. Intensities are proportional to
        mass, rounded half up.

    Atoms off the refined lattice are snapped to the nearest node with a
    warning. Atoms outside the canvas raise :class:`DataError`.
    """
    if q < 1:
        raise DataError("refinement must be at least 1")
    if measure.dim != 2:
        raise DataError("only two-dimensional measures can be rendered")
    if canvas is None:
        canvas = (
            max(math.floor(p[0]) for p in measure.points) + 1,
            max(math.floor(p[1]) for p in measure.points) + 1,
        )
    W, H = canvas
    if W < 1 or H < 1:
        raise DataError("canvas must be at least 1x1")
    out_w, out_h = q * W - (q - 1), q * H - (q - 1)
    cells = {}
    snapped = 0
    for (x, y), m in measure:
        if not (0 <= x <= W - 1 and 0 <= y <= H - 1):
            raise DataError(f"atom ({x}, {y}) lies outside the {W}x{H} canvas")
        fx, fy = Fraction(x) * q, Fraction(y) * q
        cx, cy = _round_half_up(fx), _round_half_up(fy)
        if cx != fx or cy != fy:
            snapped += 1
        cells[(cx, cy)] = cells.get((cx, cy), 0) + m
    if snapped:
        warnings.warn(f"{snapped} atoms snapped to the refined lattice", stacklevel=2)
    top = max(cells.values())
    pixels = [[0] * out_w for _ in range(out_h)]
    for (cx, cy), m in cells.items():
        pixels[cy][cx] = int(_round_half_up(Fraction(m) / Fraction(top) * max_value))
    return GridImage(out_w, out_h, max_value, tuple(tuple(row) for row in pixels))
