"""Problem instance, piecewise-constant PSDs and exact capacity evaluation.

Users are indexed 0 and 1 internally.  ``gain[i][j]`` is the gain from the
sender of user ``i`` to the receiver of user ``j``; the interference seen by
receiver ``i`` on a band is therefore ``p_j * gain[j][i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import GainTableMismatchError, ValidationError

__all__ = [
    "GainBand",
    "Scenario",
    "PiecewisePsd",
    "Objective",
    "capacity_of",
    "total_power",
    "objective_value",
    "log_factor",
]

Matrix2 = Tuple[Tuple[float, float], Tuple[float, float]]

# relative tolerance used when matching band edges and checking power budgets
EDGE_RTOL = 1e-12
POWER_RTOL = 1e-9


def _as_matrix(gain, name="gain") -> Matrix2:
    arr = np.asarray(gain, dtype=float)
    if arr.shape != (2, 2):
        raise ValidationError(f"gain matrix must be 2x2, got shape {arr.shape}", field=name)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError("gains must be finite and nonnegative", field=name)
    if arr[0, 0] <= 0 or arr[1, 1] <= 0:
        raise ValidationError("direct gains h11, h22 must be positive", field=name)
    return ((float(arr[0, 0]), float(arr[0, 1])), (float(arr[1, 0]), float(arr[1, 1])))


def _as_pair(values, name) -> Tuple[float, float]:
    try:
        a, b = (float(v) for v in values)
    except (TypeError, ValueError):
        raise ValidationError("expected two numbers, one per user", field=name) from None
    for v in (a, b):
        if not math.isfinite(v) or v <= 0:
            raise ValidationError(f"must be finite and > 0, got {v!r}", field=name)
    return a, b


@dataclass(frozen=True)
class GainBand:
    """Gain matrix in force on the frequency interval ``[start, end)``."""

    start: float
    end: float
    gain: Matrix2

    def __post_init__(self):
        object.__setattr__(self, "gain", _as_matrix(self.gain, "gain_bands.gain"))
        if not self.end > self.start:
            raise ValidationError("gain band must have end > start", field="gain_bands")


@dataclass(frozen=True)
class Scenario:
    """A two-user spectrum allocation instance.

    Parameters
    ----------
    bandwidth : float
        Width ``W`` of the band ``[0, W]`` in Hz.
    power : pair of float
        Maximum total power per user (W).
    noise : pair of float
        White noise density at each receiver (W/Hz).
    gain : 2x2 array_like
        Flat gain matrix; ``gain[i][j]`` couples sender ``i`` to receiver ``j``.
    weights : pair of float, default (1, 1)
        Objective weights.
    gain_bands : sequence of GainBand, optional
        Frequency-selective gain table.  When given it must tile ``[0, W]``
        exactly and takes precedence over ``gain``.
    """

    bandwidth: float
    power: Tuple[float, float]
    noise: Tuple[float, float]
    gain: Matrix2
    weights: Tuple[float, float] = (1.0, 1.0)
    gain_bands: Optional[Tuple[GainBand, ...]] = None

    def __post_init__(self):
        W = float(self.bandwidth)
        if not math.isfinite(W) or W <= 0:
            raise ValidationError(f"bandwidth must be finite and > 0, got {self.bandwidth!r}",
                                  field="bandwidth")
        object.__setattr__(self, "bandwidth", W)
        object.__setattr__(self, "power", _as_pair(self.power, "power"))
        object.__setattr__(self, "noise", _as_pair(self.noise, "noise"))
        object.__setattr__(self, "weights", _as_pair(self.weights, "weight"))
        object.__setattr__(self, "gain", _as_matrix(self.gain))
        if self.gain_bands is not None:
            bands = tuple(b if isinstance(b, GainBand) else GainBand(*b) for b in self.gain_bands)
            bands = tuple(sorted(bands, key=lambda b: b.start))
            if not bands:
                raise ValidationError("gain_bands must not be empty", field="gain_bands")
            tol = EDGE_RTOL * W
            if abs(bands[0].start) > tol or abs(bands[-1].end - W) > tol:
                raise ValidationError("gain bands must cover [0, W] exactly", field="gain_bands")
            for left, right in zip(bands, bands[1:]):
                if abs(left.end - right.start) > tol:
                    raise ValidationError("gain bands must be contiguous and non-overlapping",
                                          field="gain_bands")
            object.__setattr__(self, "gain_bands", bands)

    @property
    def is_flat(self) -> bool:
        return self.gain_bands is None

    def h(self, i: int, j: int) -> float:
        """Flat gain from sender ``i`` to receiver ``j`` (0-based)."""
        return self.gain[i][j]

    @property
    def params(self):
        """``(W, P1, P2, N1, N2, h11, h12, h21, h22)`` for flat formulas."""
        (h11, h12), (h21, h22) = self.gain
        return (self.bandwidth, self.power[0], self.power[1], self.noise[0], self.noise[1],
                h11, h12, h21, h22)

    def swapped(self) -> "Scenario":
        """The same instance with the user labels exchanged."""

        def flip(g):
            return ((g[1][1], g[1][0]), (g[0][1], g[0][0]))

        bands = None
        if self.gain_bands is not None:
            bands = tuple(GainBand(b.start, b.end, flip(b.gain)) for b in self.gain_bands)
        return Scenario(self.bandwidth, self.power[::-1], self.noise[::-1], flip(self.gain),
                        self.weights[::-1], bands)

    def band_gains(self, edges: np.ndarray) -> np.ndarray:
        """Gain matrices for each band of a partition, shape ``(n, 2, 2)``.

        Raises :class:`GainTableMismatchError` when a gain-table boundary falls
        strictly inside one of the bands.
        """
        edges = np.asarray(edges, dtype=float)
        n = edges.size - 1
        if self.gain_bands is None:
            return np.broadcast_to(np.asarray(self.gain), (n, 2, 2)).copy()
        tol = EDGE_RTOL * self.bandwidth
        inner = [b.end for b in self.gain_bands[:-1]]
        for x in inner:
            if np.min(np.abs(edges - x)) > tol:
                raise GainTableMismatchError(
                    f"gain-table boundary {x!r} is not a band edge of the partition",
                    field="gain_bands")
        out = np.empty((n, 2, 2))
        mids = 0.5 * (edges[:-1] + edges[1:])
        starts = np.array([b.start for b in self.gain_bands])
        idx = np.clip(np.searchsorted(starts, mids, side="right") - 1, 0, len(starts) - 1)
        for m, i in enumerate(idx):
            out[m] = self.gain_bands[i].gain
        return out


@dataclass(frozen=True)
class PiecewisePsd:
    """Per-user power densities, constant on each band of a partition of ``[0, W]``.

    ``edges`` has ``n + 1`` increasing entries starting at 0; ``density`` has
    shape ``(n, 2)`` with one column per user.
    """

    edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        dens = np.array(self.density, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValidationError("edges must be a 1-D array with at least two entries",
                                  field="edges")
        if dens.shape != (edges.size - 1, 2):
            raise ValidationError(f"density must have shape ({edges.size - 1}, 2), got "
                                  f"{dens.shape}", field="density")
        if not np.all(np.isfinite(edges)) or not np.all(np.isfinite(dens)):
            raise ValidationError("edges and densities must be finite")
        if np.any(np.diff(edges) <= 0):
            raise ValidationError("band edges must be strictly increasing", field="edges")
        if abs(edges[0]) > 0:
            raise ValidationError("first band must start at 0", field="edges")
        if np.any(dens < 0):
            raise ValidationError("densities must be nonnegative", field="density")
        edges.flags.writeable = False
        dens.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "density", dens)

    @classmethod
    def from_bands(cls, widths: Sequence[float], densities, drop_empty: bool = True):
        """Build from consecutive band widths.

        With ``drop_empty`` bands narrower than ``EDGE_RTOL`` times the total
        width are dropped, since they would not produce increasing edges.
        """
        widths = np.asarray(widths, dtype=float)
        dens = np.asarray(densities, dtype=float).reshape(-1, 2)
        if drop_empty:
            keep = widths > EDGE_RTOL * np.sum(np.abs(widths))
            widths, dens = widths[keep], dens[keep]
        return cls(np.concatenate([[0.0], np.cumsum(widths)]), dens)

    @classmethod
    def uniform(cls, width: float, d1: float, d2: float):
        return cls(np.array([0.0, width]), np.array([[d1, d2]]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def bandwidth(self) -> float:
        return float(self.edges[-1])

    def refine(self, points: Sequence[float]) -> "PiecewisePsd":
        """Insert extra edges, keeping every density value."""
        new = np.union1d(self.edges, np.asarray(points, dtype=float))
        new = new[(new >= 0) & (new <= self.edges[-1])]
        mids = 0.5 * (new[:-1] + new[1:])
        idx = np.searchsorted(self.edges, mids, side="right") - 1
        return PiecewisePsd(new, self.density[idx])

    def at(self, x) -> np.ndarray:
        """Densities at frequencies ``x``; shape ``x.shape + (2,)``."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.density) - 1)
        out = self.density[idx].copy()
        out[(x < 0) | (x > self.edges[-1])] = 0.0
        return out

    def check(self, scenario: Scenario, rtol: float = POWER_RTOL) -> None:
        """Raise :class:`ValidationError` if this PSD is not valid for ``scenario``."""
        W = scenario.bandwidth
        if abs(self.edges[-1] - W) > EDGE_RTOL * W:
            raise ValidationError(f"PSD covers [0, {self.edges[-1]!r}] but W = {W!r}",
                                  field="edges")
        for i in range(2):
            used = total_power(self, i)
            if used > scenario.power[i] * (1 + rtol):
                raise ValidationError(
                    f"user {i + 1} uses {used!r} W, budget {scenario.power[i]!r} W",
                    field="density")
        scenario.band_gains(self.edges)


@dataclass(frozen=True)
class Objective:
    """What is being maximised: ``sum`` of weighted capacities or their weighted ``product``."""

    kind: str = "sum"
    base: float = 2.0

    def __post_init__(self):
        if self.kind not in ("sum", "product"):
            raise ValidationError(f"objective must be 'sum' or 'product', got {self.kind!r}",
                                  field="objective")
        base = self.base
        if isinstance(base, str):
            base = math.e if base == "e" else float(base)
        if not (base > 1):
            raise ValidationError(f"log base must be > 1, got {self.base!r}", field="log_base")
        object.__setattr__(self, "base", float(base))

    @property
    def base_label(self) -> str:
        return "e" if self.base == math.e else format(self.base, "g")


def log_factor(base: float) -> float:
    """Multiplier turning natural logs into logs of ``base``."""
    return 1.0 / math.log(base)


def capacity_of(scenario: Scenario, psd: PiecewisePsd, base: float = 2.0) -> np.ndarray:
    """Per-user Shannon capacities treating interference as noise.

    Exact for piecewise-constant PSDs: each band contributes
    ``width * log(1 + p_i h_ii / (p_j h_ji + N_i))``.

    Returns
    -------
    numpy.ndarray of shape (2,)
        Capacities in units of ``log base`` per second (bits/s for base 2).
    """
    if abs(psd.bandwidth - scenario.bandwidth) > EDGE_RTOL * scenario.bandwidth:
        raise ValidationError("PSD does not span the scenario band", field="edges")
    gains = scenario.band_gains(psd.edges)
    widths = psd.widths
    p1, p2 = psd.density[:, 0], psd.density[:, 1]
    n1, n2 = scenario.noise
    sinr1 = p1 * gains[:, 0, 0] / (p2 * gains[:, 1, 0] + n1)
    sinr2 = p2 * gains[:, 1, 1] / (p1 * gains[:, 0, 1] + n2)
    scale = log_factor(base)
    return np.array([np.sum(widths * np.log1p(sinr1)), np.sum(widths * np.log1p(sinr2))]) * scale


def total_power(psd: PiecewisePsd, user: int) -> float:
    """Total power ``sum(width * density)`` of ``user`` (0 or 1)."""
    return float(np.dot(psd.widths, psd.density[:, user]))


def objective_value(capacities, weights, objective: Objective = Objective()) -> float:
    """Weighted sum ``sum w_i C_i`` or weighted product ``prod C_i ** w_i``.

    The product is evaluated as ``exp(sum w_i ln C_i)`` and is 0 as soon as
    one capacity is 0.
    """
    c = np.asarray(capacities, dtype=float)
    w = np.asarray(weights, dtype=float)
    if objective.kind == "sum":
        return float(np.dot(w, c))
    if np.any(c <= 0):
        return 0.0
    return float(np.exp(np.dot(w, np.log(c))))
