"""Finite-difference and quadrature helpers used throughout the package.

Everything here operates on uniform 1-D grids or on (s, theta) tensor grids
with a periodic theta direction.  Derivatives in s are banded stencil
applications (one-sided near the edges); derivatives in theta are exact
mode-wise differentiation through the FFT.
"""

import numpy as np
from scipy import sparse


def fd_weights(nodes, x0, max_order):
    """Fornberg weights for derivatives 0..max_order at x0 from the given nodes.

    Returns an array w of shape (len(nodes), max_order + 1); column k holds
    the weights of the k-th derivative.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    w = np.zeros((n, max_order + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, max_order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[i, k] = c1 * (k * w[i - 1, k - 1] - c5 * w[i - 1, k]) / c2
                w[i, 0] = -c1 * c5 * w[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[j, k] = (c4 * w[j, k] - k * w[j, k - 1]) / c3
            w[j, 0] = c4 * w[j, 0] / c3
        c1 = c2
    return w


def derivative_matrix(n_pts, h, order, acc=4):
    """Sparse n x n matrix applying the `order`-th s-derivative at accuracy `acc`.

    Central stencils in the interior, one-sided stencils of the same order of
    accuracy near the edges.  The grid is uniform with spacing h.
    """
    width = order + acc            # nodes per one-sided stencil
    half = (order + acc - 1) // 2  # central half-width
    rows, cols, vals = [], [], []
    offsets = np.arange(-half, half + 1)
    w_central = fd_weights(offsets * h, 0.0, order)[:, order]
    for i in range(n_pts):
        if half <= i < n_pts - half:
            idx = i + offsets
            wts = w_central
        else:
            start = 0 if i < half else n_pts - width
            idx = np.arange(start, start + width)
            wts = fd_weights((idx - i) * h, 0.0, order)[:, order]
        rows.extend([i] * len(idx))
        cols.extend(idx.tolist())
        vals.extend(wts.tolist())
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_pts, n_pts))


def theta_modes(n_theta):
    """Wavenumbers matching numpy's rfft layout for a 2*pi-periodic grid."""
    return np.arange(n_theta // 2 + 1)


def theta_derivative(u, order=1):
    """Exact mode-wise theta derivative of u with shape (..., n_theta)."""
    n = u.shape[-1]
    m = theta_modes(n)
    uh = np.fft.rfft(u, axis=-1)
    if order % 2 == 0:
        uh *= (1j * m) ** order
    else:
        fac = (1j * m) ** order
        if n % 2 == 0:
            fac = fac.copy()
            fac[-1] = 0.0  # odd derivative of the Nyquist mode is ambiguous
        uh *= fac
    return np.fft.irfft(uh, n=n, axis=-1)


def trig_interpolate(values, t_new):
    """Evaluate the band-limited interpolant of periodic samples at new angles.

    values has shape (..., n) sampled on theta_j = -pi + 2 pi j / n; t_new is
    a 1-D array of angles (any reals).  Returns shape (..., len(t_new)).
    Exact on the trigonometric polynomial the samples determine.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    c = np.fft.rfft(values, axis=-1)
    modes = np.arange(c.shape[-1])
    weights = np.full(c.shape[-1], 2.0 / n)
    weights[0] = 1.0 / n
    if n % 2 == 0:
        weights[-1] = 1.0 / n
    ang = np.multiply.outer(np.asarray(t_new, dtype=float) + np.pi, modes)
    re = np.cos(ang) * weights
    im = np.sin(ang) * weights
    return (np.einsum("...m,pm->...p", c.real, re)
            - np.einsum("...m,pm->...p", c.imag, im))


def simpson_weights(n_pts, h):
    """Composite Simpson weights; n_pts must be odd."""
    if n_pts % 2 == 0:
        raise ValueError("Simpson weights need an odd number of points")
    w = np.ones(n_pts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def cumulative_from_zero(y, h, i_zero, d1_matrix=None):
    """Cumulative integral of grid samples y from the grid point at index i_zero.

    Endpoint-corrected trapezoid rule.  The Euler-Maclaurin correction uses a
    fourth-order first derivative so the quadrature error is O(h^4) and, more
    importantly, smooth in the grid index (no parity sawtooth that a second
    difference would amplify).
    """
    y = np.asarray(y, dtype=float)
    t = np.concatenate([[0.0], np.cumsum(0.5 * h * (y[1:] + y[:-1]))])
    if d1_matrix is None:
        d1_matrix = derivative_matrix(len(y), h, 1, acc=4)
    yp = d1_matrix @ y
    c = t - (h * h / 12.0) * (yp - yp[0])
    return c - c[i_zero]


class Grid:
    """Uniform tensor grid on the cylinder section |s| <= arccosh(ell).

    s has n_s intervals (n_s + 1 points, n_s even so s = 0 is a grid point);
    theta has n_theta uniform points on [-pi, pi) with periodic wrap.
    """

    def __init__(self, ell, n_s, n_theta):
        if ell <= 1.0:
            raise ValueError("ell must exceed 1 so arccosh(ell) is defined")
        if n_s % 2 != 0:
            raise ValueError("n_s must be even so that s = 0 is a grid point")
        if n_theta % 2 != 0:
            raise ValueError("n_theta must be even")
        self.ell = float(ell)
        self.n_s = int(n_s)
        self.n_theta = int(n_theta)
        self.s_max = float(np.arccosh(ell))
        self.s = np.linspace(-self.s_max, self.s_max, n_s + 1)
        self.h = self.s[1] - self.s[0]
        self.i_zero = n_s // 2
        self.theta = -np.pi + 2.0 * np.pi * np.arange(n_theta) / n_theta
        self.w_theta = 2.0 * np.pi / n_theta
        self.w_s = simpson_weights(n_s + 1, self.h)
        self.d1 = derivative_matrix(n_s + 1, self.h, 1, acc=4)
        self.d2 = derivative_matrix(n_s + 1, self.h, 2, acc=4)

    def ds(self, u, order=1):
        """s-derivative of a grid function u of shape (n_s + 1, ...)."""
        mat = self.d1 if order == 1 else self.d2
        if u.ndim == 1:
            return mat @ u
        return (mat @ u.reshape(len(self.s), -1)).reshape(u.shape)

    def dtheta(self, u, order=1):
        return theta_derivative(u, order=order)

    def integrate(self, u):
        """Quadrature of u(s, theta) against ds dtheta on the whole grid."""
        return float(self.w_theta * np.sum(self.w_s @ u))

    def interior_mask(self):
        """Points with cosh(s) <= ell / 4 where minimality is certified."""
        return np.cosh(self.s) <= self.ell / 4.0
