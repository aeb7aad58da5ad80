"""Batch rendering of parameter-plane classification maps and
dynamical-plane pole-escape images.

Both renderers decompose work by image row.  A row's pixels depend only on
the row index and the scan inputs, so serial and multi-process runs fill
the same buffer with the same bytes; tests compare them byte for byte.
"""

from __future__ import annotations

import colorsys
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .dynamics import AllCriticalPrepole, AttractingCycles, classify
from .lattice import LatticeKind, ToleranceConfig, ZeroParameter, make_lattice, wp
from .lattice import PoleHit as PoleError

CSV_HEADER = "px,py,lambda_re,lambda_im,verdict,count,period,mult_re,mult_im,abs_mult"

# color map for parameter-plane verdicts; the CSV row is the authoritative
# record, the colors are a fixed presentation table
PREPOLE_COLOR = (255, 255, 255)
INDETERMINATE_COLOR = (0, 0, 0)
RESERVED_COLOR = (128, 128, 128)
ATTRACTING_SATURATION = 0.85
# golden-ratio hue stride decorrelates consecutive periods
HUE_STRIDE = 0.381966011250105
DIM_VALUE = 0.55

# cyclic 12-color palette for pole-hit steps in the dynamical plane
HIT_PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 190),
    (0, 128, 128),
    (170, 110, 40),
)
EXHAUSTED_COLOR = (0, 0, 0)


class IoFailure(OSError):
    """Image file could not be written; no partial output is left behind."""


@dataclass(frozen=True)
class ScanGrid:
    """Affine pixel-to-plane map: pixel (0, 0) sits at origin, the last
    pixel in each direction sits at origin + extent, endpoints inclusive."""

    origin: complex
    extent: complex
    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("grid must be at least 1x1")

    def pixel_to_plane(self, px: int, py: int) -> complex:
        sre = self.extent.real / (self.width_px - 1) if self.width_px > 1 else 0.0
        sim = self.extent.imag / (self.height_px - 1) if self.height_px > 1 else 0.0
        return self.origin + complex(px * sre, py * sim)


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    # row-major RGB triples, row 0 first
    pixels: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if len(self.pixels) != self.width * self.height:
            raise ValueError("pixel count does not match dimensions")


def _attracting_color(kind: LatticeKind, period: int, count: int) -> tuple[int, int, int]:
    hue = (period * HUE_STRIDE) % 1.0
    value = 1.0 if (kind is not LatticeKind.TRIANGULAR or count == 3) else DIM_VALUE
    r, g, b = colorsys.hsv_to_rgb(hue, ATTRACTING_SATURATION, value)
    return (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))


def _param_row(
    kind: LatticeKind, grid: ScanGrid, budget: int, cfg: ToleranceConfig, py: int
) -> tuple[int, list[tuple[int, int, int]], list[str]]:
    pixels: list[tuple[int, int, int]] = []
    rows: list[str] = []
    for px in range(grid.width_px):
        lam = grid.pixel_to_plane(px, py)
        count, period = 0, 0
        mult = 0j
        try:
            verdict = classify(kind, lam, budget, cfg)
        except ZeroParameter:
            verdict = None
        if verdict is None:
            tag = "excluded"
            color = RESERVED_COLOR
        elif isinstance(verdict, AttractingCycles):
            tag = "attracting"
            count = verdict.count
            period = verdict.cycle.period
            mult = verdict.cycle.multiplier
            color = _attracting_color(kind, period, count)
        elif isinstance(verdict, AllCriticalPrepole):
            tag = "prepole"
            count = 3 if kind is LatticeKind.TRIANGULAR else 1
            color = PREPOLE_COLOR
        else:
            tag = "indeterminate"
            color = INDETERMINATE_COLOR
        pixels.append(color)
        rows.append(
            f"{px},{py},{lam.real!r},{lam.imag!r},{tag},{count},{period},"
            f"{mult.real!r},{mult.imag!r},{abs(mult)!r}"
        )
    return py, pixels, rows


def _dyn_row(
    kind: LatticeKind,
    lam: complex,
    grid: ScanGrid,
    budget: int,
    cfg: ToleranceConfig,
    py: int,
) -> tuple[int, list[tuple[int, int, int]]]:
    lat = make_lattice(kind, lam, cfg)
    pixels: list[tuple[int, int, int]] = []
    for px in range(grid.width_px):
        z = grid.pixel_to_plane(px, py)
        color = EXHAUSTED_COLOR
        for step in range(budget):
            try:
                z = wp(z, lat, cfg)
            except PoleError:
                color = HIT_PALETTE[step % len(HIT_PALETTE)]
                break
        pixels.append(color)
    return py, pixels


def _run_rows(fn, args: tuple, height: int, threads: int) -> list:
    """Evaluate fn(*args, py) for each row, serially or in a process pool;
    results come back indexed by row so worker count cannot reorder them."""
    if threads <= 1:
        return [fn(*args, py) for py in range(height)]
    out: list = [None] * height
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for res in pool.map(fn, *[[a] * height for a in args], range(height)):
            out[res[0]] = res
    return out


def render_parameter_plane(
    kind: LatticeKind,
    grid: ScanGrid,
    budget: int,
    cfg: ToleranceConfig,
    threads: int = 1,
) -> tuple[Image, str]:
    """Classify every pixel's lambda and color it by verdict.

    Returns the image together with a CSV report; the CSV carries the cycle
    data (count, period, multiplier) and is the color-free record of the
    scan.
    """
    results = _run_rows(_param_row, (kind, grid, budget, cfg), grid.height_px, threads)
    pixels: list[tuple[int, int, int]] = []
    lines = [CSV_HEADER]
    for py, row_pixels, row_lines in results:
        pixels.extend(row_pixels)
        lines.extend(row_lines)
    image = Image(width=grid.width_px, height=grid.height_px, pixels=tuple(pixels))
    return image, "\n".join(lines) + "\n"


def render_dynamical_plane(
    kind: LatticeKind,
    lam: complex,
    grid: ScanGrid,
    budget: int,
    cfg: ToleranceConfig,
    threads: int = 1,
) -> Image:
    """Color every pixel by the step at which its forward orbit first hits a
    pole, cycling a fixed palette; budget exhaustion paints black."""
    if lam == 0:
        raise ZeroParameter("lambda must be nonzero")
    results = _run_rows(
        _dyn_row, (kind, lam, grid, budget, cfg), grid.height_px, threads
    )
    pixels: list[tuple[int, int, int]] = []
    for py, row_pixels in results:
        pixels.extend(row_pixels)
    return Image(width=grid.width_px, height=grid.height_px, pixels=tuple(pixels))


def write_ppm(image: Image, path: str) -> None:
    """Binary PPM (P6, 8-bit), written to a temp file then renamed so a
    failed write never leaves a partial file at the target path."""
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    body = bytes(c for pixel in image.pixels for c in pixel)
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path: Optional[str] = None
    try:
        fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".ppm.part")
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(body)
        os.replace(tmp_path, path)
        tmp_path = None
    except OSError as exc:
        raise IoFailure(f"cannot write image to {path}: {exc}") from exc
    finally:
        if tmp_path is not None:
            try:
                os.unlink(tmp_path)
            except OSError:
                pass
