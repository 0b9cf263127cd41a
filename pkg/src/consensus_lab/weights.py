"""State-dependent interaction weights alpha(s), s = squared inter-agent distance.

Every family is nonincreasing on [0, inf).  Families with compact support
vanish for s >= R**2 and are strictly positive below it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, ClassVar

import numpy as np
from scipy import integrate


class WeightFunction:
    """Base class for the weight families.

    Subclasses implement ``__call__`` (vectorised over ``s``) and
    ``integral``.  ``support`` is R**2 for compact families and ``inf``
    otherwise.
    """

    family: ClassVar[str] = ""
    continuous: ClassVar[bool] = True

    def __call__(self, s):
        raise NotImplementedError

    @property
    def alpha0(self) -> float:
        return float(self(np.array(0.0)))

    @property
    def support(self) -> float:
        return math.inf

    @property
    def compact(self) -> bool:
        return math.isfinite(self.support)

    def integral(self, z):
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        d = {"family": self.family}
        d.update({f.name: getattr(self, f.name) for f in fields(self)})  # type: ignore[arg-type]
        return d


@dataclass(frozen=True)
class CuckerSmale(WeightFunction):
    """alpha(s) = H / (1 + s)**beta."""

    H: float = 1.0
    beta: float = 1.0
    family: ClassVar[str] = "cucker-smale"

    def __post_init__(self):
        if not self.H > 0 or not self.beta >= 0:
            raise ValueError(f"need H > 0 and beta >= 0, got H={self.H}, beta={self.beta}")

    def __call__(self, s):
        return self.H / np.power(1.0 + np.asarray(s, dtype=float), self.beta)

    def integral(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            if self.beta == 1.0:
                out = self.H * np.log1p(z)
            else:
                out = self.H / (1.0 - self.beta) * (np.power(1.0 + z, 1.0 - self.beta) - 1.0)
        return np.where(np.isinf(z), self.H / (self.beta - 1.0) if self.beta > 1 else math.inf, out)


@dataclass(frozen=True)
class SmoothedConfidence(WeightFunction):
    """Bounded confidence with a Lipschitz roll-off on [(R-eps)**2, R**2).

    The roll-off is f(s) = (c/eps) * (R - sqrt(s)), which meets c at the
    inner radius and 0 at R.
    """

    c: float = 1.0
    R: float = 1.0
    eps: float = 0.1
    family: ClassVar[str] = "smoothed-confidence"

    def __post_init__(self):
        if not (self.c > 0 and self.R > 0 and 0 < self.eps < self.R):
            raise ValueError(f"need c > 0, R > 0, 0 < eps < R; got {self}")

    @property
    def support(self) -> float:
        return self.R * self.R

    @property
    def inner(self) -> float:
        return (self.R - self.eps) ** 2

    def rolloff(self, s):
        return self.c / self.eps * (self.R - np.sqrt(s))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        band = (s >= self.inner) & (s < self.support)
        out = np.where(s < self.inner, self.c, 0.0)
        return np.where(band, self.rolloff(np.where(band, s, self.inner)), out)

    def _band_integral(self, z: float) -> float:
        if z <= self.inner:
            return 0.0
        val, _ = integrate.quad(self.rolloff, self.inner, min(z, self.support), epsabs=1e-10, epsrel=1e-12)
        return val

    def integral(self, z):
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        out = self.c * np.minimum(flat, self.inner)
        for i in np.flatnonzero(flat > self.inner):
            out[i] += self._band_integral(float(flat[i]))
        return out.reshape(z.shape)


@dataclass(frozen=True)
class StepConfidence(WeightFunction):
    """alpha(s) = c for s < R**2, else 0 (discontinuous at R**2)."""

    R: float = 1.0
    c: float = 1.0
    family: ClassVar[str] = "step-confidence"
    continuous: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.R > 0 and self.c > 0):
            raise ValueError(f"need R > 0 and c > 0, got {self}")

    @property
    def support(self) -> float:
        return self.R * self.R

    def __call__(self, s):
        return np.where(np.asarray(s, dtype=float) < self.support, self.c, 0.0)

    def integral(self, z):
        return self.c * np.minimum(np.asarray(z, dtype=float), self.support)


@dataclass(frozen=True)
class LinearDecay(WeightFunction):
    """alpha(s) = intercept - slope*s, clipped to zero.

    Support ends at intercept/slope, or earlier at ``cutoff**2`` when a
    cutoff radius is given (which makes the weight jump to zero there).
    """

    intercept: float = 1.0
    slope: float = 1.0
    cutoff: float | None = None
    family: ClassVar[str] = "linear-decay"

    def __post_init__(self):
        if not (self.intercept > 0 and self.slope > 0):
            raise ValueError(f"need intercept > 0 and slope > 0, got {self}")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError("cutoff radius must be positive")

    @property
    def root(self) -> float:
        return self.intercept / self.slope

    @property
    def support(self) -> float:
        if self.cutoff is None:
            return self.root
        return min(self.cutoff**2, self.root)

    @property
    def continuous(self) -> bool:  # type: ignore[override]
        return self.support == self.root

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.support, np.maximum(self.intercept - self.slope * s, 0.0), 0.0)

    def integral(self, z):
        t = np.minimum(np.asarray(z, dtype=float), self.support)
        return self.intercept * t - 0.5 * self.slope * t * t


@dataclass(frozen=True)
class Constant(WeightFunction):
    c: float = 1.0
    family: ClassVar[str] = "constant"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"need c > 0, got {self.c}")

    def __call__(self, s):
        return np.full(np.shape(s), self.c, dtype=float)

    def integral(self, z):
        return self.c * np.asarray(z, dtype=float)


FAMILIES: dict[str, type[WeightFunction]] = {
    cls.family: cls for cls in (CuckerSmale, SmoothedConfidence, StepConfidence, LinearDecay, Constant)
}


def weight_from_dict(d: dict[str, Any]) -> WeightFunction:
    d = dict(d)
    family = d.pop("family")
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown weight family {family!r}; known: {sorted(FAMILIES)}") from None
    return cls(**d)


def evaluate_weight(weight: WeightFunction, s):
    """alpha(s); rejects negative arguments."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ValueError("weight argument must be nonnegative")
    out = weight(arr)
    return float(out) if out.ndim == 0 else out


def integral_weight(weight: WeightFunction, z):
    """Definite integral of alpha over [0, z]; ``z`` may be ``math.inf``."""
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0):
        raise ValueError("upper limit must be nonnegative")
    out = np.asarray(weight.integral(arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def _grid_index(z: np.ndarray, r: float) -> np.ndarray:
    """floor(z/r), snapping quotients within rounding of an integer."""
    q = z / r
    near = np.rint(q)
    snap = np.abs(q - near) <= 1e-9 * np.maximum(1.0, q)
    return np.where(snap, near, np.floor(q)).astype(np.int64)


def staircase_w(weight: WeightFunction, r: float, z):
    """Staircase under-approximation of the weight integral on a grid of width r.

    ``w(z) = alpha(r) z`` below r; beyond it, the sum of alpha(s r) r over the
    full cells plus alpha(ceil(z/r) r) times the leftover.  ``r = 0`` means
    the exact integral.
    """
    if r < 0:
        raise ValueError("staircase width must be nonnegative")
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0):
        raise ValueError("staircase argument must be nonnegative")
    if r == 0:
        return integral_weight(weight, z)
    flat = arr.ravel()
    k = _grid_index(flat, r)
    kmax = int(k.max()) if k.size else 0
    cells = weight(r * np.arange(1, kmax + 2, dtype=float)) * r
    cum = np.concatenate(([0.0], np.cumsum(cells)))
    frac = np.where(k * r >= flat, 0.0, flat - k * r)
    # alpha at the right end of the partial cell; that cell is index k+1
    tail = weight(r * (k + 1).astype(float)) * frac
    out = np.where(flat < r, weight(np.array(r)) * flat, cum[k] + tail)
    out = np.where(k == 0, weight(np.array(r)) * flat, out)
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out
