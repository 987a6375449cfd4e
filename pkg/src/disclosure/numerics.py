"""Small numerical kernels shared by tactics and signals."""

from __future__ import annotations

import math
from collections import deque
from typing import Sequence

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def quantile_sorted(xs: Sequence[float], p: float) -> float | None:
    """Linear interpolation at rank ``p * (n - 1)`` of an ascending sequence."""
    n = len(xs)
    if n == 0:
        return None
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"quantile level {p} outside [0, 1]")
    r = p * (n - 1)
    lo = int(math.floor(r))
    hi = min(lo + 1, n - 1)
    frac = r - lo
    if frac == 0.0:
        return float(xs[lo])
    return float(xs[lo] + (xs[hi] - xs[lo]) * frac)


def quantile(values: Sequence[float], p: float) -> float | None:
    return quantile_sorted(sorted(values), p)


def sample_sd(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def silverman_bandwidth(values: Sequence[float]) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n ** (-1/5)`` with sd fallback when IQR is 0."""
    n = len(values)
    if n < 2:
        raise ValueError("automatic bandwidth needs at least 2 values")
    xs = sorted(values)
    sd = sample_sd(xs)
    iqr = quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        # sd == 0 means range == 0 too, so there is nothing left to fall back on
        raise ValueError("zero-variance axis: give an explicit positive bandwidth")
    return 0.9 * spread * n ** -0.2


def gaussian_kernel_matrix(points: np.ndarray, coords: np.ndarray, h: float) -> np.ndarray:
    """``phi((coord - point) / h)`` with points on rows and grid coords on columns."""
    z = (coords[None, :] - points[:, None]) / h
    with np.errstate(over="ignore"):  # far cells square to inf and weigh exactly 0
        return np.exp(-0.5 * z * z) / _SQRT_2PI


def phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / _SQRT_2PI


def normalized_masses(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(weights < 0):
        raise ValueError("cell weights must be non-negative")
    total = math.fsum(weights.tolist())
    if total <= 0:
        raise ValueError("grid carries no mass")
    return weights / total


def hdr_cells(weights: np.ndarray, level: float) -> tuple[list[int], float]:
    """Highest-density region: fewest cells, densest first, holding ``level`` of the mass.

    Ties in density are broken by flat index.  Returns the cells in inclusion
    order and their total (normalized) mass.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"mass level {level} outside (0, 1)")
    mass = normalized_masses(weights)
    order = np.lexsort((np.arange(mass.size), -mass))
    csum = np.cumsum(mass[order])
    m = int(np.searchsorted(csum, level, side="left")) + 1
    m = min(max(m, 1), mass.size)
    ordered = mass[order].tolist()
    # cumsum rounding can disagree with an exact sum at the boundary
    while m < mass.size and math.fsum(ordered[:m]) < level:
        m += 1
    while m > 1 and math.fsum(ordered[:m - 1]) >= level:
        m -= 1
    cells = [int(i) for i in order[:m]]
    return cells, math.fsum(ordered[:m])


def connected_components(cells, shape: Sequence[int], connectivity: int = 4) -> list[list[int]]:
    """Components of a set of flat cell indices on a 1-D or 2-D grid.

    Components are returned sorted by their smallest flat index, cells sorted.
    """
    cells = set(int(c) for c in cells)
    if len(shape) == 1:
        offsets = [(-1,), (1,)]
    elif len(shape) == 2:
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
        if connectivity == 8:
            offsets += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        elif connectivity != 4:
            raise ValueError("connectivity must be 4 or 8")
    else:
        raise ValueError("components are defined on 1-D and 2-D grids only")
    seen: set[int] = set()
    comps = []
    for start in sorted(cells):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            c = queue.popleft()
            pos = np.unravel_index(c, shape)
            for off in offsets:
                nb = tuple(p + o for p, o in zip(pos, off))
                if any(q < 0 or q >= s for q, s in zip(nb, shape)):
                    continue
                flat = int(np.ravel_multi_index(nb, shape))
                if flat in cells and flat not in seen:
                    seen.add(flat)
                    comp.append(flat)
                    queue.append(flat)
        comps.append(sorted(comp))
    return comps


def peaks(profile: Sequence[float]) -> list[tuple[int, int]]:
    """Strict local maxima as ``(first, last)`` index runs; plateaus count once.

    Positions beyond either end are treated as lower than anything.
    """
    vals = list(profile)
    n = len(vals)
    out = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and vals[j + 1] == vals[i]:
            j += 1
        left_lower = i == 0 or vals[i - 1] < vals[i]
        right_lower = j == n - 1 or vals[j + 1] < vals[i]
        if left_lower and right_lower:
            out.append((i, j))
        i = j + 1
    return out


def prominence(profile: Sequence[float], run: tuple[int, int]) -> float:
    vals = list(profile)
    i, j = run
    h = vals[i]
    left = vals[i]
    k = i - 1
    while k >= 0 and vals[k] <= h:
        left = min(left, vals[k])
        k -= 1
    if k < 0:
        left = min(vals[: i + 1])
    right = vals[j]
    k = j + 1
    while k < len(vals) and vals[k] <= h:
        right = min(right, vals[k])
        k += 1
    if k >= len(vals):
        right = min(vals[j:])
    return h - max(left, right)


def count_modes(profile: Sequence[float], min_prominence: float) -> int:
    """Peaks whose prominence is at least ``min_prominence`` times the profile maximum.

    The profile is a non-negative mass or density; it is zero-padded on both
    ends so a peak in the first or last cell is measured against zero.
    """
    vals = [0.0] + [float(v) for v in profile] + [0.0]
    top = max(vals)
    if top <= 0:
        return 0
    return sum(1 for run in peaks(vals) if prominence(vals, run) >= min_prominence * top)
