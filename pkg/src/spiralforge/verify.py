"""Verification of solved surfaces and mesh/CSV export.

Three independent audits of a solve: the discrete dilation defect (the
solved graph must inherit the spiral's one-period similarity), a sampled
self-intersection search with a parameter-space exclusion radius, and
weighted sup norms reproducing the solve's size bounds.  Export writes an
ASCII OBJ in full double precision with a CSV sidecar carrying the scalar
fields a mesh file cannot.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import bent, jets
from .numerics import derivative_matrix, theta_derivative, trig_interpolate


@dataclass
class SolveReport:
    residual_history: list
    final_interior_residual: float
    b_x: float
    b_y: float
    norm_v: float
    embed_verdict: str
    self_similarity_defect: float
    runtime: float
    converged: bool = True
    zeta: float = float("nan")
    iterations: int = 0
    u0_c_hat: float = float("nan")
    config: dict = field(default_factory=dict)


@dataclass
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray
    scalars: dict


def weighted_norm(u, grid, rho=0.75, k=0):
    """Weighted grid sup norm: sup cosh(s)^-rho (|u| + |first derivs| + ...).

    Derivatives in s are fourth-order stencils, in theta exact mode-wise
    differentiation; the Hoelder seminorm of the continuous counterpart is
    deliberately omitted.
    """
    u = np.asarray(u, dtype=float)
    terms = [np.abs(u)]
    if k >= 1:
        terms += [np.abs(grid.ds(u)), np.abs(theta_derivative(u))]
    if k >= 2:
        terms += [np.abs(grid.ds(u, order=2)), np.abs(theta_derivative(u, order=2)),
                  np.abs(grid.ds(theta_derivative(u)))]
    total = sum(terms)
    weight = np.cosh(grid.s) ** (-rho)
    return float(np.max(weight[:, None] * total))


# ---------------------------------------------------------------------------
# graph-surface evaluation in the lab frame
# ---------------------------------------------------------------------------

def _lab_graph_points(spec, u_plus_u0, s_col, t_row):
    """Points of the normal graph by e^{lam theta}(u + u0) in the lab frame."""
    base = bent.bent_point(spec, s_col, t_row)
    nb = bent._gauged_normal_bundle(spec, s_col, t_row)
    frame = spec.frame(np.broadcast_arrays(s_col, t_row)[1])
    nu_lab = np.einsum("...ij,...j->...i", frame, nb["nu"])
    w = np.exp(spec.lam * t_row) * u_plus_u0
    return base + w[..., None] * nu_lab


def check_self_similarity(surface, u):
    """Relative defect of G_w(s, theta + 2 pi) = scale * rot * G_w(s, theta).

    Zero to roundoff for periodic u over a correctly anchored curve; the
    similarity is centered at the origin, so any mis-anchoring (a translated
    copy of the same surface) shows up as an O(|offset|) defect.
    """
    spec, g = surface.spec, surface.grid
    s_col, t_row = g.s[:, None], g.theta[None, :]
    utot = u + surface.u0[:, None]
    x1 = _lab_graph_points(spec, utot, s_col, t_row)
    x2 = _lab_graph_points(spec, utot, s_col, t_row + 2.0 * np.pi)
    scale, rot = spec.similarity()
    image = scale * np.einsum("ij,...j->...i", rot, x1)
    gauge = np.exp(-spec.lam * g.theta)[None, :, None]
    defect = np.abs(x2 - image) * gauge
    denom = np.abs(x1 * gauge).max()
    return float(defect.max() / denom)


def sampled_min_separation(points, params, exclusion, k=16):
    """Minimum distance among sample pairs that are far apart in parameters.

    points: (n, 3) samples of a surface; params: (n, d) their parameters;
    pairs closer than `exclusion` in parameter space are skipped (they are
    neighbours on the same sheet).  Returns (min_distance, (i, j)).
    """
    from scipy.spatial import cKDTree

    tree = cKDTree(points)
    k_eff = min(k + 1, len(points))
    dists, idx = tree.query(points, k=k_eff)
    best = np.inf
    pair = (-1, -1)
    for col in range(1, k_eff):
        d = dists[:, col]
        j = idx[:, col]
        p_dist = np.linalg.norm(params - params[j], axis=1)
        ok = p_dist >= exclusion
        if np.any(ok):
            m = np.argmin(np.where(ok, d, np.inf))
            if d[m] < best and ok[m]:
                best = float(d[m])
                pair = (int(m), int(j[m]))
    return best, pair


def check_embedded(surface, u, n_samples=10000, seed=0, exclusion_cells=3,
                   collision_margin=0.1, converged=True, force_sample=False):
    """Two-stage embeddedness audit.

    Stage one checks the closed-form bound ell <= max_embed_ell; with a
    converged solve that certifies embeddedness outright.  Stage two (always
    run when the bound fails, or on request) samples the graph surface over
    two theta-periods and searches for image points that are close despite
    being more than `exclusion_cells` grid cells apart in parameter space.

    Returns (verdict, info) with verdict in {"certified", "sampled-ok",
    "not-certified"}.
    """
    from .tube import max_embed_ell

    spec, g = surface.spec, surface.grid
    try:
        bound = max_embed_ell(spec)
        certified = bool(g.ell <= bound) and converged
    except ValueError:
        bound = float("nan")
        certified = False
    info = {"ell_bound": bound}
    if certified and not force_sample:
        return "certified", info

    rng = np.random.default_rng(seed)
    s_samp = rng.uniform(-g.s_max, g.s_max, n_samples)
    t_samp = rng.uniform(-np.pi, 3.0 * np.pi, n_samples)

    # u is band-limited in theta and smooth in s: spline in s first, then
    # evaluate each row's trigonometric interpolant at its own angle.
    utot = u + surface.u0[:, None]
    rows = CubicSpline(g.s, utot, axis=0)(s_samp)
    coeff = np.fft.rfft(rows, axis=1)
    n = g.n_theta
    weights = np.full(coeff.shape[1], 2.0 / n)
    weights[0] = 1.0 / n
    if n % 2 == 0:
        weights[-1] = 1.0 / n
    ang = np.multiply.outer(t_samp + np.pi, np.arange(coeff.shape[1]))
    u_vals = ((coeff.real * np.cos(ang) - coeff.imag * np.sin(ang)) * weights).sum(axis=1)

    pts = _lab_graph_points(spec, u_vals[:, None], s_samp[:, None],
                            t_samp[:, None])[:, 0, :]
    cell = max(g.h, 2.0 * np.pi / g.n_theta)
    min_d, pair = sampled_min_separation(
        pts, np.column_stack([s_samp, t_samp]), exclusion_cells * cell)
    local = float(np.exp(-abs(spec.lam) * 3.0 * np.pi))
    info.update({"min_separation": min_d, "pair": pair,
                 "threshold": collision_margin * local})
    if min_d < collision_margin * local:
        return "not-certified", info
    return ("certified" if certified else "sampled-ok"), info


# ---------------------------------------------------------------------------
# mesh export
# ---------------------------------------------------------------------------

def build_mesh(surface, u, resolution=(64, 64), periods=1):
    """Triangulated graph surface, optionally extended by the similarity.

    resolution = (n_s, n_theta) vertices per period in each direction; the
    theta samples are uniform without the wrap point, so one period of an
    (n, m) mesh has exactly n * m vertices.  Additional periods are images
    of the first under the discrete dilation, so the seams are exact.
    """
    spec, g = surface.spec, surface.grid
    n_sm, n_tm = resolution
    s_m = np.linspace(-g.s_max, g.s_max, n_sm)
    t_m = -np.pi + 2.0 * np.pi * np.arange(n_tm) / n_tm

    # resample u: exact trigonometric interpolation in theta, spline in s
    u_theta = trig_interpolate(u + surface.u0[:, None], t_m)
    u_mesh = CubicSpline(g.s, u_theta, axis=0)(s_m)

    # mean curvature at mesh resolution: assemble the graph jet on the mesh
    # grid with its own stencils, then undo the gauge factors
    h_m = s_m[1] - s_m[0]
    d1_m = derivative_matrix(n_sm, h_m, 1, acc=4)
    d2_m = derivative_matrix(n_sm, h_m, 2, acc=4)
    mesh_surf = _MeshGeometry(spec, s_m, t_m, d1_m, d2_m)
    q_mesh = mesh_surf.q_of(u_mesh)
    h_abs = np.abs(q_mesh) / (np.exp(spec.lam * t_m)[None, :] * np.cosh(s_m)[:, None] ** 2)

    x = _lab_graph_points(spec, u_mesh, s_m[:, None], t_m[None, :])
    scale, rot = spec.similarity()
    blocks, scal_s, scal_t, scal_h, scal_u = [], [], [], [], []
    for p in range(periods):
        xp = x if p == 0 else (scale ** p) * np.einsum(
            "ij,...j->...i", np.linalg.matrix_power(rot, p), x)
        blocks.append(xp)
        scal_s.append(np.broadcast_to(s_m[:, None], xp.shape[:2]))
        scal_t.append(np.broadcast_to(t_m[None, :] + 2.0 * np.pi * p, xp.shape[:2]))
        scal_h.append(h_abs / scale ** p)
        scal_u.append(u_mesh)
    pts = np.concatenate(blocks, axis=1)
    n_cols = pts.shape[1]
    vertices = pts.reshape(-1, 3)

    faces = []
    for i in range(n_sm - 1):
        for j in range(n_cols - 1):
            a = i * n_cols + j
            b = (i + 1) * n_cols + j
            faces.append((a, b, b + 1))
            faces.append((a, b + 1, a + 1))
    scalars = {
        "s": np.concatenate(scal_s, axis=1).reshape(-1),
        "theta": np.concatenate(scal_t, axis=1).reshape(-1),
        "H_abs": np.concatenate(scal_h, axis=1).reshape(-1),
        "u": np.concatenate(scal_u, axis=1).reshape(-1),
    }
    return Mesh(vertices, np.array(faces, dtype=int), scalars)


class _MeshGeometry:
    """Just enough of the bent-surface machinery to evaluate Q on a mesh grid."""

    def __init__(self, spec, s, theta, d1_mat, d2_mat):
        self.spec = spec
        self.s, self.theta = s, theta
        self.d1_mat, self.d2_mat = d1_mat, d2_mat
        self.jet = bent.normalized_jet(spec, s[:, None], theta[None, :], order=2)
        self.normals = bent._gauged_normal_bundle(spec, s[:, None], theta[None, :])

    def q_of(self, u):
        u_t = theta_derivative(u)
        variation = bent.variation_from_derivatives(
            self.spec, self.normals, u, u_t, self.d1_mat @ u,
            theta_derivative(u, order=2), self.d2_mat @ u, self.d1_mat @ u_t)
        total = self.jet + variation
        return np.cosh(self.s)[:, None] ** 2 * jets.mean_curvature(total)


def write_obj(mesh, path):
    """ASCII OBJ, vertices in full double precision, 1-indexed faces."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_obj(path):
    vertices, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(vertices), np.array(faces, dtype=int)


def write_csv(mesh, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "theta", "H_abs", "u"])
        cols = [mesh.scalars[k] for k in ("s", "theta", "H_abs", "u")]
        for row in zip(*cols):
            writer.writerow([f"{x:.17g}" for x in row])


def export_mesh(surface, u, obj_path, resolution=(64, 64), periods=1,
                csv_path=None):
    """Write the OBJ (and CSV sidecar) for the solved graph surface."""
    mesh = build_mesh(surface, u, resolution=resolution, periods=periods)
    try:
        write_obj(mesh, obj_path)
        if csv_path is not None:
            write_csv(mesh, csv_path)
    except OSError as exc:
        raise OSError(f"mesh export to {obj_path} failed: {exc}") from exc
    return mesh


def report_text(report):
    """Deterministic key = value rendering of a solve report.

    Volatile fields (wall-clock runtime) are excluded on purpose so that
    identical configurations produce byte-identical files.
    """
    lines = ["[report]"]
    lines.append(f"converged = {str(report.converged).lower()}")
    lines.append(f"iterations = {report.iterations}")
    lines.append(f"final_interior_residual = {report.final_interior_residual:.17g}")
    lines.append(f"b_x = {report.b_x:.17g}")
    lines.append(f"b_y = {report.b_y:.17g}")
    lines.append(f"norm_v = {report.norm_v:.17g}")
    lines.append(f"zeta = {report.zeta:.17g}")
    lines.append(f"u0_c_hat = {report.u0_c_hat:.17g}")
    lines.append(f"embed_verdict = {report.embed_verdict}")
    lines.append(f"self_similarity_defect = {report.self_similarity_defect:.17g}")
    lines.append("residual_history = " + ",".join(f"{x:.17g}" for x in report.residual_history))
    if report.config:
        lines.append("")
        lines.append("[config]")
        for key in sorted(report.config):
            lines.append(f"{key} = {report.config[key]}")
    return "\n".join(lines) + "\n"
