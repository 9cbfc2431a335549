"""Smooth cutoff functions with exact 0/1 plateaus.

The base profile rises from 0 to 1 across [-1, 1], is non-decreasing, and its
shift by -1/2 is odd.  ``Cutoff(a, b)`` rescales it so the transition sits in
the middle third of [a, b]: the value is exactly 0 near a and exactly 1 near
b, and Cutoff(a, b) + Cutoff(b, a) == 1 pointwise.  First and second
derivatives are available in closed form, which the helicoid module needs to
evaluate substitute-kernel images without differencing across the band.
"""

from dataclasses import dataclass

import numpy as np


def _bump(x):
    """exp(-1/x) extended by 0 for x <= 0; smooth on all of R."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _bump_d1(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.exp(-1.0 / xp) / xp ** 2
    return out


def _bump_d2(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.exp(-1.0 / xp) * (1.0 - 2.0 * xp) / xp ** 4
    return out


def base_profile(t):
    """The unit transition: 0 on (-inf, -1], 1 on [1, inf), odd around (0, 1/2)."""
    t = np.asarray(t, dtype=float)
    p = _bump(1.0 + t)
    q = _bump(1.0 - t)
    return p / (p + q)


def base_profile_d1(t):
    t = np.asarray(t, dtype=float)
    p, q = _bump(1.0 + t), _bump(1.0 - t)
    pp, qp = _bump_d1(1.0 + t), -_bump_d1(1.0 - t)
    d = p + q
    return (pp * d - p * (pp + qp)) / d ** 2


def base_profile_d2(t):
    t = np.asarray(t, dtype=float)
    p, q = _bump(1.0 + t), _bump(1.0 - t)
    pp, qp = _bump_d1(1.0 + t), -_bump_d1(1.0 - t)
    ppp, qpp = _bump_d2(1.0 + t), _bump_d2(1.0 - t)
    d = p + q
    dp = pp + qp
    dpp = ppp + qpp
    return ppp / d - (2.0 * pp * dp + p * dpp) / d ** 2 + 2.0 * p * dp ** 2 / d ** 3


@dataclass(frozen=True)
class Cutoff:
    """Smooth transition that is 0 near a and 1 near b (a != b, either order)."""

    a: float
    b: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("cutoff endpoints must differ")

    def _arg(self, t):
        # Affine map sending a -> -3, b -> 3; |arg| <= 1 is the transition band.
        return -3.0 + 6.0 * (np.asarray(t, dtype=float) - self.a) / (self.b - self.a)

    def __call__(self, t):
        return base_profile(self._arg(t))

    def d1(self, t):
        return base_profile_d1(self._arg(t)) * 6.0 / (self.b - self.a)

    def d2(self, t):
        return base_profile_d2(self._arg(t)) * 36.0 / (self.b - self.a) ** 2


def even_cutoff(a, b, s):
    """Cutoff(a, b) evaluated at |s|, with full s-derivatives.

    Returns (value, d/ds, d2/ds2).  Used for radial cutoffs psi(|s|); the
    chain rule through |s| is safe because every such cutoff is constant in a
    neighbourhood of s = 0.
    """
    c = Cutoff(a, b)
    s = np.asarray(s, dtype=float)
    r = np.abs(s)
    sign = np.sign(s)
    return c(r), sign * c.d1(r), c.d2(r)
