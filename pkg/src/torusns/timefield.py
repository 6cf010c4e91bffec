"""Closed-form time dependence: finite sums of decaying exponentials.

Every field in the construction evolves as a finite sum
``sum_r f_r(x) exp(-r t)`` with nonnegative rates ``r`` and spatial
fields ``f_r`` (scalar, vector, or matrix).  Holding the terms keyed by
rate keeps time derivatives, heat flow factors, products, and time
mollification exact — no time discretization enters until the forced
Navier-Stokes solver.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


def _key(rate: float) -> float:
    """Canonical dict key for a rate (collapses -0.0 and fp dust)."""
    r = float(rate)
    return 0.0 if r == 0.0 else r


class ExpSeries:
    """Finite sum of ``field * exp(-rate * t)`` terms.

    The spatial fields may be any of the spectral container types
    (scalar, vector, matrix) as long as all terms of one series share a
    type; the series only requires them to support ``+``, scalar ``*``,
    and whatever spatial operations are mapped over the terms.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {}
        if terms:
            for r, f in terms.items():
                self._accumulate(_key(r), f)

    def _accumulate(self, r: float, f) -> None:
        if r in self.terms:
            g = self.terms[r]
            if hasattr(f, "grid") and hasattr(g, "grid") \
                    and f.grid.n != g.grid.n:
                from .spectral import Grid
                big = Grid(max(f.grid.n, g.grid.n))
                f = f.regrid(big)
                g = g.regrid(big)
            self.terms[r] = g + f
        else:
            self.terms[r] = f

    @property
    def rates(self) -> tuple:
        return tuple(sorted(self.terms))

    def at(self, t: float):
        """Evaluate the series at time ``t``."""
        if not self.terms:
            raise ValueError("empty series has no value")
        acc = None
        for r, f in self.terms.items():
            term = math.exp(-r * t) * f
            if acc is None:
                acc = term
            else:
                if hasattr(acc, "grid") and hasattr(term, "grid") \
                        and acc.grid.n != term.grid.n:
                    from .spectral import Grid
                    big = Grid(max(acc.grid.n, term.grid.n))
                    acc = acc.regrid(big)
                    term = term.regrid(big)
                acc = acc + term
        return acc

    def dt(self) -> "ExpSeries":
        """Exact time derivative."""
        return ExpSeries({r: (-r) * f for r, f in self.terms.items()})

    def map(self, op) -> "ExpSeries":
        """Apply a spatial operation to every term."""
        return ExpSeries({r: op(f) for r, f in self.terms.items()})

    def combine(self, other: "ExpSeries", op) -> "ExpSeries":
        """Bilinear combination; rates add term by term."""
        out = ExpSeries()
        for r1, f1 in self.terms.items():
            for r2, f2 in other.terms.items():
                out._accumulate(_key(r1 + r2), op(f1, f2))
        return out

    def scale_rates(self, extra: float) -> "ExpSeries":
        """Multiply the whole series by exp(-extra * t)."""
        return ExpSeries({_key(r + extra): f for r, f in self.terms.items()})

    def __add__(self, other: "ExpSeries") -> "ExpSeries":
        out = ExpSeries(dict(self.terms))
        for r, f in other.terms.items():
            out._accumulate(r, f)
        return out

    def __sub__(self, other: "ExpSeries") -> "ExpSeries":
        return self + (-1.0) * other

    def __rmul__(self, a: float) -> "ExpSeries":
        return ExpSeries({r: a * f for r, f in self.terms.items()})

    def __neg__(self) -> "ExpSeries":
        return (-1.0) * self


@lru_cache(maxsize=4)
def _bump_nodes(order: int = 8, panels: int = 32):
    """Composite Gauss-Legendre rule on (0,1) for the normalized time bump.

    The bump is exp(-1/(u(1-u))) on (0,1).  A composite 8-node rule over
    32 panels integrates bump-weighted exponentials to machine precision,
    and normalizing the mass with the same rule makes constants mollify
    to themselves exactly.
    """
    xs, ws = roots_legendre(order)
    u = np.concatenate([(i + 0.5 * (xs + 1.0)) / panels for i in range(panels)])
    w = np.tile(0.5 * ws / panels, panels)
    vals = w * np.exp(-1.0 / (u * (1.0 - u)))
    return u, vals / float(np.sum(vals))


def time_kernel_factor(rate: float, ell: float, order: int = 8) -> float:
    """Mollification factor of ``exp(-rate t)`` for window length ``ell``.

    The time kernel averages over the future window (t, t + ell), so
    ``exp(-rate t)`` maps to ``factor * exp(-rate t)`` with
    ``factor = int_0^1 exp(-rate ell u) bump(u) du``.
    """
    if ell < 0:
        raise ValueError("window length must be nonnegative")
    u, w = _bump_nodes(order)
    return float(np.sum(w * np.exp(-rate * ell * u)))


def mollify_time(series: ExpSeries, ell: float, order: int = 8) -> ExpSeries:
    """Exact time mollification of an exponential series."""
    return ExpSeries(
        {r: time_kernel_factor(r, ell, order) * f for r, f in series.terms.items()}
    )
