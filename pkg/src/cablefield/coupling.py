"""
Surface coupling operators between line quantities and field traces.

P_el maps per-cell samples of the voltage gradient (k lines, n cells) to
tangential 3-vector samples at the lateral-surface quadrature points of
each cable chart.  At a quadrature point with surface Jacobian
A = [d Phi/d eta, d Phi/d theta] (3x2) the column is

    A (A^T A)^{-1} (f, 0)^T,

the unique tangential field whose eta-component matches f by the chain
rule; on a straight cylinder of length l this is (f / l) * z_hat.

P_mag comes in two flavours:

  adjoint     M_line^{-1} P_el^T M_surf  -- the exact quadrature-mass
              adjoint, used in assembly so the coupled block structure
              stays symmetric;
  quadrature  an independent discretization of the ring integral
              closing around the cable,  sum_m  g . (nu x ds),  built
              from finite-difference tangents and geometric normals
              (domain-outward, i.e. pointing at the cable axis).  Used
              only as a cross check; it agrees with the adjoint mode to
              second order in the angular step.

The voltage lift evaluates chi * V'(eta) * grad(eta) at edge midpoints
inside the tube collar, reproducing the coupled tangential trace on the
lateral surface and vanishing outside the cutoff support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CouplingError
from .geometry import TubeChart
from .maxwell import YeeGrid
from .tline import LineGrid


@dataclass
class CouplingMatrices:
    """Discrete port operators for all cables on a shared line grid."""

    charts: Sequence[TubeChart]
    cable_lines: np.ndarray       # line index per cable
    line_grid: LineGrid
    Pel: sp.csr_matrix            # (3*nq_total) x (n*k)
    Pmag: sp.csr_matrix           # (n*k) x (3*nq_total), adjoint mode
    M_line: sp.csr_matrix         # cell quadrature mass
    M_surf: sp.csr_matrix         # surface quadrature mass (3-vector samples)
    quad_offsets: np.ndarray      # start of each cable's quad block

    @property
    def n_quad_total(self):
        return self.quad_offsets[-1]


def _pel_columns(chart: TubeChart) -> np.ndarray:
    """Tangential direction A (A^T A)^{-1} e_1 at every quadrature point."""
    je = chart.jac_eta.reshape(-1, 3)
    jt = chart.jac_theta.reshape(-1, 3)
    g11 = (je * je).sum(axis=1)
    g12 = (je * jt).sum(axis=1)
    g22 = (jt * jt).sum(axis=1)
    det = g11 * g22 - g12 ** 2
    if det.min() <= 0:
        raise CouplingError("rank-deficient surface Jacobian")
    # first column of A (A^T A)^{-1}
    return (je * (g22 / det)[:, None] - jt * (g12 / det)[:, None])


def assemble_P_el(charts: Sequence[TubeChart], line_grid: LineGrid,
                  cable_lines=None) -> CouplingMatrices:
    """Assemble P_el for all cables and derive the adjoint-mode P_mag.

    Every chart must sample eta at the line grid's cell midpoints (same
    count); cable_lines[i] names the line component fed by cable i.
    """
    n, k = line_grid.n, line_grid.k
    if cable_lines is None:
        cable_lines = np.array([ch.curve.line for ch in charts], dtype=int)
    cable_lines = np.asarray(cable_lines, dtype=int)
    if cable_lines.size != len(charts):
        raise CouplingError("need one line index per cable")
    if len(set(cable_lines.tolist())) != cable_lines.size:
        raise CouplingError("two cables feed the same line component")
    if cable_lines.size and (cable_lines.min() < 0 or cable_lines.max() >= k):
        raise CouplingError(f"cable line indices must lie in [0, {k})")

    rows, cols, vals = [], [], []
    weights = []
    offsets = [0]
    for ci, chart in enumerate(charts):
        if chart.n_eta != n:
            raise CouplingError(
                f"chart eta sampling ({chart.n_eta}) must match the line grid cells ({n})")
        if np.abs(chart.eta - line_grid.cells).max() > 1e-12:
            raise CouplingError("chart eta samples are not the line cell midpoints")
        direction = _pel_columns(chart)            # (nq, 3)
        nq = chart.n_quad
        q_eta = np.repeat(np.arange(n), chart.n_theta)   # ring index per quad point
        line = cable_lines[ci]
        base = offsets[-1]
        for comp in range(3):
            rows.append(3 * (base + np.arange(nq)) + comp)
            cols.append(q_eta * k + line)
            vals.append(direction[:, comp])
        weights.append(chart.quad_weights())
        offsets.append(base + nq)

    nq_total = offsets[-1]
    Pel = sp.csr_matrix(
        (np.concatenate(vals) if vals else np.zeros(0),
         (np.concatenate(rows) if rows else np.zeros(0, dtype=int),
          np.concatenate(cols) if cols else np.zeros(0, dtype=int))),
        shape=(3 * nq_total, n * k),
    )
    M_surf = sp.diags(np.repeat(np.concatenate(weights) if weights else np.zeros(0), 3)).tocsr()
    M_line_inv = sp.diags(1.0 / line_grid.Mc.diagonal())
    Pmag = (M_line_inv @ Pel.T @ M_surf).tocsr()
    return CouplingMatrices(
        charts=list(charts), cable_lines=cable_lines, line_grid=line_grid,
        Pel=Pel, Pmag=Pmag, M_line=line_grid.Mc.tocsr(), M_surf=M_surf,
        quad_offsets=np.asarray(offsets),
    )


def assemble_P_mag(cp: CouplingMatrices, mode: str = "adjoint") -> sp.csr_matrix:
    """P_mag in the requested mode; 'quadrature' is the independent oracle."""
    if mode == "adjoint":
        return cp.Pmag
    if mode != "quadrature":
        raise CouplingError(f"unknown P_mag mode {mode!r}")

    n, k = cp.line_grid.n, cp.line_grid.k
    rows, cols, vals = [], [], []
    for ci, chart in enumerate(cp.charts):
        m = chart.n_theta
        pts = chart.points                       # (n_eta, m, 3)
        axis = chart.curve.alpha(chart.eta)      # (n_eta, 3)
        # finite-difference tangent along the ring (periodic, theta increasing)
        t_fd = 0.5 * (np.roll(pts, -1, axis=1) - np.roll(pts, 1, axis=1))
        nu = axis[:, None, :] - pts              # domain-outward: toward the axis
        nu = nu / np.linalg.norm(nu, axis=2, keepdims=True)
        coeff = np.cross(nu, t_fd)               # g . (nu x t) = (g x nu) . t
        line = cp.cable_lines[ci]
        base = cp.quad_offsets[ci]
        q_eta = np.repeat(np.arange(n), m)
        for comp in range(3):
            rows.append(q_eta * k + line)
            cols.append(3 * (base + np.arange(chart.n_quad)) + comp)
            vals.append(coeff[:, :, comp].reshape(-1))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * k, 3 * cp.n_quad_total),
    )


# ---------------------------------------------------------------------------
# voltage lifting
# ---------------------------------------------------------------------------

@dataclass
class LiftField:
    """Edge samples (one tangential value per grid edge) of the lifted
    voltage field, supported in one cable's collar."""

    cable: int
    values: np.ndarray        # (n_edges_total,) over global edge ids
    support: np.ndarray       # global edge ids with nonzero values


def lift_voltage(chart: TubeChart, grid: YeeGrid, V: np.ndarray,
                 line_grid: LineGrid, cable: int = 0) -> LiftField:
    """Evaluate chi * grad(V o Psi_hat) on grid edges.

    V holds nodal samples of one line component; its cell-wise discrete
    derivative drives the tangential field.  Raises if the collar is
    thinner than two grid cells (the cutoff cannot be represented).
    """
    eps = chart.collar_halfwidth
    r = chart.curve.radius
    if eps * r < 2.0 * grid.h:
        raise CouplingError(
            f"collar halfwidth {eps * r:.4g} m is thinner than two grid cells (h={grid.h:.4g})")
    V = np.asarray(V)
    if V.shape != (line_grid.n + 1,):
        raise CouplingError(f"V must have {line_grid.n + 1} nodal samples")
    dV = (V[1:] - V[:-1]) * line_grid.n   # per-cell derivative, k=1 layout

    mids = grid.edge_midpoints()
    # prefilter: collar band around the cable
    probe = chart.curve.alpha(np.linspace(-0.2, 1.2, 256))
    d2 = ((mids[:, None, :] - probe[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    band = np.nonzero((d2 < (r * (1 + 1.5 * eps)) ** 2) & (d2 > (r * (1 - 1.5 * eps)) ** 2))[0]

    values = np.zeros(mids.shape[0])
    if band.size:
        coords = np.atleast_2d(chart.psi_hat(mids[band]))
        chi = chart.chi(coords[:, 2], coords[:, 0])
        live = chi > 0
        if live.any():
            sel = band[live]
            grad = chart.grad_eta(mids[sel])
            grad = np.atleast_2d(grad)
            cell = np.clip((coords[live, 0] * line_grid.n).astype(int), 0, line_grid.n - 1)
            dirs = grid.edge_direction(sel)
            tangential = grad[np.arange(sel.size), dirs]
            values[sel] = chi[live] * dV[cell] * tangential
    support = np.nonzero(values)[0]
    return LiftField(cable=cable, values=values, support=support)
