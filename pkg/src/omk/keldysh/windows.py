"""Uniform frequency windows on a shared lattice ``omega = j * spacing``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import WindowError
from ..model import MINUS, PLUS

MIN_POINTS = 2 ** 12
MAX_POINTS = 2 ** 21
POINTS_PER_LINEWIDTH = 20
HALF_WIDTH_FACTOR = 40.0


@dataclass(frozen=True)
class FrequencyWindow:
    """``n_points`` lattice sites starting at lattice index ``start``.

    Windows built for the same solve share ``spacing``, so a frequency in
    one window maps to an exact integer index in any other.
    """

    spacing: float
    start: int
    n_points: int

    @property
    def omega(self) -> np.ndarray:
        return (self.start + np.arange(self.n_points)) * self.spacing

    @property
    def indices(self) -> np.ndarray:
        return self.start + np.arange(self.n_points)

    @property
    def center(self) -> float:
        return (self.start + self.n_points // 2) * self.spacing

    @property
    def half_width(self) -> float:
        return 0.5 * self.n_points * self.spacing

    @property
    def stop(self) -> int:
        return self.start + self.n_points

    def contains(self, omega: float) -> bool:
        lo = self.start * self.spacing
        hi = (self.stop - 1) * self.spacing
        return lo <= omega <= hi

    def shifted(self, start: int) -> "FrequencyWindow":
        return FrequencyWindow(self.spacing, start, self.n_points)


def narrowest_linewidth(kappa, c_plus: float = 0.0, c_minus: float = 0.0) -> float:
    """Smallest resolved feature width: the bare widths and the leading-order
    widths of the interaction-induced occupancy bumps."""
    kappa = np.asarray(kappa, dtype=float)
    widths = [kappa[MINUS], kappa[PLUS], kappa[MINUS] * math.sqrt(1.0 + max(c_plus, 0.0))]
    if c_minus > -1.0:
        widths.append(0.5 * (kappa[MINUS] + kappa[PLUS]) * math.sqrt(1.0 + c_minus))
    return float(min(widths))


def _next_pow2(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(n, 1))))


def make_windows(energies, kappa, *, c_plus: float = 0.0, c_minus: float = 0.0,
                 spacing: float | None = None, half_width: float | None = None,
                 min_points: int = MIN_POINTS, max_points: int = MAX_POINTS
                 ) -> tuple[FrequencyWindow, FrequencyWindow]:
    """Two windows centred on ``E-`` and ``E+`` with a common spacing.

    Defaults: spacing = narrowest linewidth / 20, half-width =
    40 (kappa- + kappa+), point count rounded up to a power of two.
    """
    kappa = np.asarray(kappa, dtype=float)
    if spacing is None:
        spacing = narrowest_linewidth(kappa, c_plus, c_minus) / POINTS_PER_LINEWIDTH
    if half_width is None:
        half_width = HALF_WIDTH_FACTOR * float(kappa.sum())
    if spacing <= 0 or half_width <= 0:
        raise WindowError("spacing and half_width must be positive")
    n = max(_next_pow2(math.ceil(2.0 * half_width / spacing)), _next_pow2(min_points))
    if n > max_points:
        raise WindowError(
            f"window needs {n} points (spacing {spacing:.3g}, half-width {half_width:.3g}); "
            f"limit is {max_points}. Override spacing or half_width.")
    out = []
    for e in energies:
        centre = int(round(e / spacing))
        out.append(FrequencyWindow(float(spacing), centre - n // 2, n))
    return out[MINUS], out[PLUS]
