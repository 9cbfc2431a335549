"""The conformal helicoid, its stability operator, kernel, and substitutes.

The immersion is F(s, theta) = (sinh s sin theta, sinh s cos theta, theta)
on the cylinder theta ~ theta + 2 pi.  Its metric is cosh^2(s)(ds^2 +
dtheta^2), and cosh^2(s) L = Laplacian + 2 / cosh^2(s) is the conformally
flattened stability operator.  Bounded elements of its kernel are the three
components of the unit normal; the substitute functions u_x, u_y, u_z are
explicit growing functions whose images w = cosh^2 L u pair against the
kernel like a (near-)identity matrix, which is what lets the solver
prescribe the kernel content of an inhomogeneous term.

The vertical substitute profile is the odd function psi(|s|) * s / (4 pi):
the even |s|-profile would pair to zero against the odd kernel element
tanh(s), while the odd one integrates to exactly 1 by the divergence
identity.
"""

import numpy as np
from scipy.integrate import quad

from .cutoffs import Cutoff, even_cutoff
from .jets import jet_from_arrays
from .numerics import derivative_matrix, theta_derivative

_CUT_BREAKPOINTS = (-2.0, -5.0 / 3.0, -4.0 / 3.0, -1.0, 1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0)


def helicoid_jet(s, theta, order=2):
    """Analytic jet of the helicoid; slot order (theta, s), order <= 3."""
    s, theta = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float))
    sh, ch = np.sinh(s), np.cosh(s)
    sn, cs = np.sin(theta), np.cos(theta)
    one, zero = np.ones_like(s), np.zeros_like(s)

    f_t = np.stack([sh * cs, -sh * sn, one], axis=-1)
    f_s = np.stack([ch * sn, ch * cs, zero], axis=-1)
    f_tt = np.stack([-sh * sn, -sh * cs, zero], axis=-1)
    f_ss = np.stack([sh * sn, sh * cs, zero], axis=-1)
    f_ts = np.stack([ch * cs, -ch * sn, zero], axis=-1)
    third = None
    if order >= 3:
        f_ttt = np.stack([-sh * cs, sh * sn, zero], axis=-1)
        f_tts = np.stack([-ch * sn, -ch * cs, zero], axis=-1)
        f_tss = np.stack([sh * cs, -sh * sn, zero], axis=-1)
        f_sss = np.stack([ch * sn, ch * cs, zero], axis=-1)
        third = (f_ttt, f_tts, f_tss, f_sss)
    return jet_from_arrays(f_t, f_s, f_tt, f_ss, f_ts, third=third)


def helicoid_point(s, theta):
    s, theta = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float))
    return np.stack([np.sinh(s) * np.sin(theta), np.sinh(s) * np.cos(theta),
                     theta], axis=-1)


def gauss_map(s, theta):
    """Unit normal of F and the conformal factor of its Gauss map.

    Returns (nu, factor) with factor = 1 / cosh^4(s); the pullback of the
    round metric under nu equals factor times the metric of F.
    """
    s, theta = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float))
    sech = 1.0 / np.cosh(s)
    nu = np.stack([-np.cos(theta) * sech, np.sin(theta) * sech, np.tanh(s)], axis=-1)
    return nu, sech ** 4


def kernel_fn(which, s, theta):
    """Bounded kernel elements of the stability operator."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if which == "x":
        return np.cos(theta) / np.cosh(s)
    if which == "y":
        return np.sin(theta) / np.cosh(s)
    if which == "z":
        return np.tanh(s) * np.ones_like(theta)
    raise ValueError(f"which must be one of x, y, z, not {which!r}")


def substitute_fn(which, s, theta):
    """Growing substitute functions; psi is the radial cutoff vanishing on |s| <= 1."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    psi, _, _ = even_cutoff(1.0, 2.0, s)
    if which == "x":
        return psi * np.cos(theta) * np.cosh(s) / (4.0 * np.pi)
    if which == "y":
        return psi * np.sin(theta) * np.cosh(s) / (4.0 * np.pi)
    if which == "z":
        return psi * s / (4.0 * np.pi) * np.ones_like(theta)
    raise ValueError(f"which must be one of x, y, z, not {which!r}")


def substitute_graph_derivatives(which, s, theta):
    """Substitute function with all first/second grid derivatives, closed form.

    Returns (u, u_t, u_s, u_tt, u_ss, u_ts).  Grid stencils must never touch
    these: the cutoff's high derivatives alias badly on solver grids.
    """
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    psi, dpsi, ddpsi = even_cutoff(1.0, 2.0, s)
    if which in ("x", "y"):
        r = psi * np.cosh(s) / (4.0 * np.pi)
        r1 = (dpsi * np.cosh(s) + psi * np.sinh(s)) / (4.0 * np.pi)
        r2 = (ddpsi * np.cosh(s) + 2.0 * dpsi * np.sinh(s)
              + psi * np.cosh(s)) / (4.0 * np.pi)
        cs, sn = np.cos(theta), np.sin(theta)
        if which == "x":
            return (r * cs, -r * sn, r1 * cs, -r * cs, r2 * cs, -r1 * sn)
        return (r * sn, r * cs, r1 * sn, -r * sn, r2 * sn, r1 * cs)
    if which == "z":
        one = np.ones_like(theta)
        r = psi * s / (4.0 * np.pi)
        r1 = (dpsi * s + psi) / (4.0 * np.pi)
        r2 = (ddpsi * s + 2.0 * dpsi) / (4.0 * np.pi)
        zero = np.zeros_like(r * one)
        return (r * one, zero, r1 * one, zero, r2 * one, zero)
    raise ValueError(f"which must be one of x, y, z, not {which!r}")


def substitute_image(which, s, theta):
    """w = cosh^2(s) L u for the substitute functions, in closed form.

    Writing u_x = psi f cos(theta) with f = cosh(s)/(4 pi), the operator gives
    cos(theta) (psi'' f + 2 psi' f' + psi (f'' - f) + 2 psi f / cosh^2); the
    cosh profile satisfies f'' = f so only the cutoff band and the 2/cosh^2
    potential survive.
    """
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    psi, dpsi, ddpsi = even_cutoff(1.0, 2.0, s)
    if which in ("x", "y"):
        radial = (ddpsi * np.cosh(s) + 2.0 * dpsi * np.sinh(s)
                  + 2.0 * psi / np.cosh(s)) / (4.0 * np.pi)
        trig = np.cos(theta) if which == "x" else np.sin(theta)
        return radial * trig
    if which == "z":
        radial = (ddpsi * s + 2.0 * dpsi + 2.0 * psi * s / np.cosh(s) ** 2) / (4.0 * np.pi)
        return radial * np.ones_like(theta)
    raise ValueError(f"which must be one of x, y, z, not {which!r}")


def stability_apply(u, s):
    """cosh^2(s) L u on a tensor grid: u has shape (len(s), n_theta).

    Second-order central differences in s (one-sided of the same order at
    the edges), exact mode-wise differentiation in theta.
    """
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    if u.ndim != 2 or u.shape[0] != len(s):
        raise ValueError("u must have shape (len(s), n_theta)")
    h = s[1] - s[0]
    d2 = derivative_matrix(len(s), h, 2, acc=2)
    u_ss = d2 @ u
    u_tt = theta_derivative(u, order=2)
    return u_ss + u_tt + 2.0 * u / np.cosh(s)[:, None] ** 2


def kernel_pairing(which, s_max):
    """Quadrature of the kernel/substitute pairing over |s| <= s_max.

    Converges to 1 as s_max grows (the deficit is set by the boundary flux,
    of size 1 - tanh(s_max)).
    """
    if s_max < 3.0:
        raise ValueError("s_max must cover the cutoff band, s_max >= 3")
    cut = Cutoff(1.0, 2.0)

    if which in ("x", "y"):
        def integrand(s):
            r = abs(s)
            psi, dpsi, ddpsi = cut(r), np.sign(s) * cut.d1(r), cut.d2(r)
            return 0.25 * (ddpsi + 2.0 * dpsi * np.tanh(s)
                           + 2.0 * psi / np.cosh(s) ** 2)
    elif which == "z":
        def integrand(s):
            r = abs(s)
            psi, dpsi, ddpsi = cut(r), np.sign(s) * cut.d1(r), cut.d2(r)
            return 0.5 * np.tanh(s) * (ddpsi * s + 2.0 * dpsi
                                       + 2.0 * psi * s / np.cosh(s) ** 2)
    else:
        raise ValueError(f"which must be one of x, y, z, not {which!r}")

    pts = [p for p in _CUT_BREAKPOINTS if abs(p) < s_max]
    val, _ = quad(integrand, -s_max, s_max, points=pts, limit=200)
    return val


def pairing_matrix(s_max):
    """3x3 matrix of pairings; off-diagonal entries vanish by theta parity."""
    m = np.zeros((3, 3))
    for i, which in enumerate("xyz"):
        m[i, i] = kernel_pairing(which, s_max)
    return m
