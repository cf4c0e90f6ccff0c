"""
Staggered-grid field discretization on a box with staircased cable tubes.

Layout (uniform spacing h, standard staggering):

    E, D  on edges:   x-edges (nx, ny+1, nz+1), midpoint ((i+.5)h, jh, kh)
    B, H  on faces:   x-faces (nx+1, ny, nz),   center (ih, (j+.5)h, (k+.5)h)

with y/z lattices cyclic.  The full-grid curl C maps edges to faces with
entries +-1/h; the face->edge curl is its transpose with the same scale,
so with the uniform masses M_E = M_H = h^3 the pair is exactly adjoint.

Unknown selection around the staircased tubes:

    cell    "tube" if its center lies inside a cable, else "field"
    edge    EXCLUDED  all adjacent cells tube
            PEC       lies in an outer box face, or on a tube end cap
            BAND      touches a tube cell, near the lateral surface
                      (tangential E prescribed by the line coupling)
            FREE      otherwise (these are the E/D unknowns)
    face    dropped if on the outer box or buried between tube cells,
            else a B/H unknown

Restricting the full curl to (dof faces) x (free edges) keeps the exact
transpose identity; the discarded columns at BAND edges are exposed
separately (``C_band``) because they carry the lateral coupling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import GridError, MaterialsError
from .geometry import GeometrySpec, TubeChart, is_inside_tube

EDGE_FREE, EDGE_PEC, EDGE_BAND, EDGE_EXCLUDED = 0, 1, 2, 3

_CAP_MARGIN_CELLS = 0.95   # surface edges within this many cells of a tube
                           # end (in eta arclength) are end-cap PEC


# ---------------------------------------------------------------------------
# materials
# ---------------------------------------------------------------------------

def _as_axis_func(value) -> Callable[[np.ndarray], np.ndarray]:
    """Promote scalar / length-3 / callable to pts -> (m,3) per-axis samples."""
    if callable(value):
        def func(pts):
            out = np.asarray(value(pts))
            if out.ndim == 1:
                out = np.repeat(out[:, None], 3, axis=1)
            return out
        return func
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(3, float(arr))
    if arr.shape != (3,):
        raise MaterialsError("field material must be a scalar, length-3 diagonal, or callable")

    def const(pts):
        return np.broadcast_to(arr, (pts.shape[0], 3)).copy()
    return const


@dataclass
class FieldMaterials:
    """Permittivity, permeability, conductivity as scalars, per-axis
    diagonals, or callables of position (diagonal anisotropy only)."""

    eps: object = 1.0
    mu: object = 1.0
    sigma: object = 0.0

    def __post_init__(self):
        self._eps = _as_axis_func(self.eps)
        self._mu = _as_axis_func(self.mu)
        self._sigma = _as_axis_func(self.sigma)

    def sample(self, name: str, pts: np.ndarray) -> np.ndarray:
        return getattr(self, "_" + name)(np.atleast_2d(pts))


def validate_field_materials(m: FieldMaterials, pts: np.ndarray) -> dict:
    eps = m.sample("eps", pts)
    mu = m.sample("mu", pts)
    sig = m.sample("sigma", pts)
    report = {
        "eps_min": float(eps.min()),
        "mu_min": float(mu.min()),
        "sigma_min": float(sig.min()),
    }
    report["passed"] = eps.min() > 0 and mu.min() > 0 and sig.min() >= -1e-12
    return report


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def _edge_shapes(n):
    nx, ny, nz = n
    return [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]


def _face_shapes(n):
    nx, ny, nz = n
    return [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]


def _lattice_midpoints(origin, h, shape, half_axes):
    """Midpoints of a lattice; coordinates in half_axes are offset by h/2."""
    axes = []
    for d in range(3):
        idx = np.arange(shape[d], dtype=float)
        if d in half_axes:
            idx = idx + 0.5
        axes.append(origin[d] + idx * h)
    g = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.reshape(-1) for a in g], axis=1)


@dataclass
class YeeGrid:
    """Masked staggered grid over a geometry's box."""

    spec: GeometrySpec
    n: tuple                     # (nx, ny, nz) cells
    h: float
    origin: np.ndarray
    cell_cable: np.ndarray       # (ncells,) -1 for field cells, else cable id
    edge_status: np.ndarray      # (n_edges_total,) EDGE_* codes
    edge_cable: np.ndarray       # cable id for BAND edges, else -1
    free_edges: np.ndarray       # global edge ids with a D unknown
    band_edges: np.ndarray
    dof_faces: np.ndarray        # global face ids with a B unknown
    edge_offsets: np.ndarray     # lattice start offsets into global edge ids
    face_offsets: np.ndarray

    @property
    def n_free_edges(self):
        return self.free_edges.size

    @property
    def n_band_edges(self):
        return self.band_edges.size

    @property
    def n_dof_faces(self):
        return self.dof_faces.size

    # -- global id helpers ---------------------------------------------------

    def edge_midpoints(self, ids=None):
        pts = np.concatenate([
            _lattice_midpoints(self.origin, self.h, shp, {d})
            for d, shp in enumerate(_edge_shapes(self.n))
        ])
        return pts if ids is None else pts[ids]

    def face_midpoints(self, ids=None):
        pts = np.concatenate([
            _lattice_midpoints(self.origin, self.h, shp, {0, 1, 2} - {d})
            for d, shp in enumerate(_face_shapes(self.n))
        ])
        return pts if ids is None else pts[ids]

    def edge_direction(self, ids):
        """Lattice axis (0/1/2) of each global edge id."""
        return np.searchsorted(self.edge_offsets[1:], ids, side="right")

    def face_normal_axis(self, ids):
        return np.searchsorted(self.face_offsets[1:], ids, side="right")

    def cell_centers(self):
        return _lattice_midpoints(self.origin, self.h, self.n, {0, 1, 2})

    def excluded_volume_fraction(self):
        return float((self.cell_cable >= 0).sum()) / self.cell_cable.size


def build_grid(spec: GeometrySpec, n: Sequence[int]) -> YeeGrid:
    """Classify cells, edges and faces of an (nx, ny, nz) grid on spec.box."""
    n = tuple(int(v) for v in n)
    lengths = spec.box[:, 1] - spec.box[:, 0]
    hs = lengths / np.asarray(n, dtype=float)
    if np.abs(hs - hs[0]).max() > 1e-9 * hs[0]:
        raise GridError(f"box/resolution give unequal spacings {hs.tolist()}; use a uniform h")
    h = float(hs[0])
    origin = spec.box[:, 0].copy()

    for c in spec.cables:
        if 2.0 * c.radius < 4.0 * h - 1e-12:
            raise GridError(f"tube radius {c.radius} needs >= 4 cells across the diameter (h={h})")

    # cells ------------------------------------------------------------------
    centers = _lattice_midpoints(origin, h, n, {0, 1, 2})
    cell_cable = np.full(centers.shape[0], -1, dtype=np.int32)
    for ci in range(len(spec.cables)):
        inside = is_inside_tube(spec, centers, ci)
        cell_cable[inside] = ci
    cells3 = cell_cable.reshape(n)

    # edges --------------------------------------------------------------------
    eshapes = _edge_shapes(n)
    edge_offsets = np.r_[0, np.cumsum([int(np.prod(s)) for s in eshapes])]
    n_edges = edge_offsets[-1]
    edge_status = np.full(n_edges, EDGE_FREE, dtype=np.int8)
    edge_cable = np.full(n_edges, -1, dtype=np.int32)

    pad = np.full((n[0] + 2, n[1] + 2, n[2] + 2), -2, dtype=np.int32)  # -2: outside grid
    pad[1:-1, 1:-1, 1:-1] = cells3

    for d, shp in enumerate(eshapes):
        a, b = [(1, 2), (0, 2), (0, 1)][d]   # transverse axes
        idx = np.indices(shp)
        # outer-boundary test on the transverse node indices
        on_bnd = (idx[a] == 0) | (idx[a] == n[a]) | (idx[b] == 0) | (idx[b] == n[b])
        # adjacent cells: offsets -1/0 on each transverse axis
        adj = []
        for da in (-1, 0):
            for db in (-1, 0):
                off = [0, 0, 0]
                off[d] = idx[d]
                off[a] = idx[a] + da
                off[b] = idx[b] + db
                adj.append(pad[off[0] + 1, off[1] + 1, off[2] + 1])
        adj = np.stack(adj)
        valid = adj != -2
        tube_any = ((adj >= 0) & valid).any(axis=0)
        field_any = ((adj == -1) & valid).any(axis=0)
        cable_id = np.where(tube_any, np.max(np.where(adj >= 0, adj, -1), axis=0), -1)

        status = np.full(shp, EDGE_FREE, dtype=np.int8)
        status[tube_any & ~field_any] = EDGE_EXCLUDED
        status[tube_any & field_any] = EDGE_BAND     # refined to PEC caps below
        status[on_bnd & (status == EDGE_FREE)] = EDGE_PEC
        status[on_bnd & (status == EDGE_BAND)] = EDGE_PEC

        sl = slice(edge_offsets[d], edge_offsets[d + 1])
        edge_status[sl] = status.reshape(-1)
        edge_cable[sl] = np.where(status.reshape(-1) == EDGE_BAND, cable_id.reshape(-1), -1)

    # split surface edges into lateral band and end caps via the curve parameter
    band_ids = np.nonzero(edge_status == EDGE_BAND)[0]
    if band_ids.size:
        mids = _all_edge_midpoints(origin, h, n)[band_ids]
        for ci, curve in enumerate(spec.cables):
            sel = edge_cable[band_ids] == ci
            if not sel.any():
                continue
            eta, _, _ = curve.nearest_parameter_batch(mids[sel])
            margin = _CAP_MARGIN_CELLS * h / curve.length
            cap = (eta < margin) | (eta > 1.0 - margin)
            ids = band_ids[sel][cap]
            edge_status[ids] = EDGE_PEC
            edge_cable[ids] = -1

    # faces --------------------------------------------------------------------
    fshapes = _face_shapes(n)
    face_offsets = np.r_[0, np.cumsum([int(np.prod(s)) for s in fshapes])]
    face_dof = np.zeros(face_offsets[-1], dtype=bool)
    for d, shp in enumerate(fshapes):
        idx = np.indices(shp)
        on_bnd = (idx[d] == 0) | (idx[d] == n[d])
        c_lo = [idx[0], idx[1], idx[2]]
        c_lo[d] = c_lo[d] - 1
        lo = pad[c_lo[0] + 1, c_lo[1] + 1, c_lo[2] + 1]
        hi = pad[idx[0] + 1, idx[1] + 1, idx[2] + 1]
        buried = (lo >= 0) & (hi >= 0)
        dof = ~on_bnd & ~buried
        sl = slice(face_offsets[d], face_offsets[d + 1])
        face_dof[sl] = dof.reshape(-1)

    return YeeGrid(
        spec=spec, n=n, h=h, origin=origin,
        cell_cable=cell_cable,
        edge_status=edge_status, edge_cable=edge_cable,
        free_edges=np.nonzero(edge_status == EDGE_FREE)[0],
        band_edges=np.nonzero(edge_status == EDGE_BAND)[0],
        dof_faces=np.nonzero(face_dof)[0],
        edge_offsets=edge_offsets, face_offsets=face_offsets,
    )


def _all_edge_midpoints(origin, h, n):
    return np.concatenate([
        _lattice_midpoints(origin, h, shp, {d})
        for d, shp in enumerate(_edge_shapes(n))
    ])


# ---------------------------------------------------------------------------
# curls and Hodge blocks
# ---------------------------------------------------------------------------

def _full_curl(n, h) -> sp.csr_matrix:
    """Full-grid edge->face curl with entries +-1/h (no masking)."""
    eshapes = _edge_shapes(n)
    fshapes = _face_shapes(n)
    eoff = np.r_[0, np.cumsum([int(np.prod(s)) for s in eshapes])]
    foff = np.r_[0, np.cumsum([int(np.prod(s)) for s in fshapes])]

    def eid(d, i, j, k):
        return eoff[d] + np.ravel_multi_index((i, j, k), eshapes[d])

    rows, cols, vals = [], [], []
    for d in range(3):
        a, b = (d + 1) % 3, (d + 2) % 3   # (curl E)_d = dE_b/da - dE_a/db
        shp = fshapes[d]
        I, J, K = np.indices(shp)
        fids = (foff[d] + np.ravel_multi_index((I, J, K), shp)).reshape(-1)

        def ijk(axis_idx):
            return [I, J, K][axis_idx]

        # + d/da of E_b: E_b at face index with a-index raised by 0/1
        for shift, sign in ((1, +1.0), (0, -1.0)):
            comp = [None, None, None]
            comp[d] = ijk(d)
            comp[a] = ijk(a) + shift
            comp[b] = ijk(b)
            cols.append(eid(b, comp[0], comp[1], comp[2]).reshape(-1))
            rows.append(fids)
            vals.append(np.full(fids.size, sign / h))
        # - d/db of E_a
        for shift, sign in ((1, -1.0), (0, +1.0)):
            comp = [None, None, None]
            comp[d] = ijk(d)
            comp[a] = ijk(a)
            comp[b] = ijk(b) + shift
            cols.append(eid(a, comp[0], comp[1], comp[2]).reshape(-1))
            rows.append(fids)
            vals.append(np.full(fids.size, sign / h))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(foff[-1], eoff[-1]))


def _harmonic_mean(samples):
    return samples.shape[0] / (1.0 / samples).sum(axis=0)


@dataclass
class CurlPair:
    """Masked curls and diagonal material Hodge blocks.

    C_E maps free edges to dof faces; C_H is exactly its transpose (uniform
    masses M_E = M_H = h^3), so the discrete curl adjointness
    <C_E e, h>_MH - <e, C_H h>_ME = 0 holds for the retained unknowns;
    the boundary functional of the full-grid identity lives entirely on
    the BAND columns exposed as C_band.
    """

    grid: YeeGrid
    C_E: sp.csr_matrix
    C_H: sp.csr_matrix
    C_band: sp.csr_matrix
    eps_edge: np.ndarray
    mu_face: np.ndarray
    sigma_edge: np.ndarray

    @property
    def M_E(self):
        return self.grid.h ** 3

    @property
    def M_H(self):
        return self.grid.h ** 3

    def eps_inv(self):
        return 1.0 / self.eps_edge

    def mu_inv(self):
        return 1.0 / self.mu_face


def assemble_curls(grid: YeeGrid, m: FieldMaterials) -> CurlPair:
    rep = validate_field_materials(m, grid.cell_centers())
    if not rep["passed"]:
        raise MaterialsError(f"field material assumptions violated: {rep}")

    C = _full_curl(grid.n, grid.h)
    C_dof = C[grid.dof_faces, :]
    C_E = C_dof[:, grid.free_edges].tocsr()
    C_band = C_dof[:, grid.band_edges].tocsr()
    C_H = C_E.T.tocsr()

    # material averaging onto edges / faces (harmonic across edges for eps,
    # arithmetic on faces for mu, arithmetic for sigma)
    eps_e = _average_to_edges(grid, m, "eps", harmonic=True)[grid.free_edges]
    sig_e = _average_to_edges(grid, m, "sigma", harmonic=False)[grid.free_edges]
    mu_f = _average_to_faces(grid, m, "mu")[grid.dof_faces]
    return CurlPair(grid=grid, C_E=C_E, C_H=C_H, C_band=C_band,
                    eps_edge=eps_e, mu_face=mu_f, sigma_edge=sig_e)


def _cell_samples(grid, m, name):
    return m.sample(name, grid.cell_centers()).reshape(grid.n + (3,))


def _average_to_edges(grid, m, name, harmonic):
    vals = _cell_samples(grid, m, name)
    n = grid.n
    out = np.empty(grid.edge_offsets[-1])
    pad = np.full((n[0] + 2, n[1] + 2, n[2] + 2, 3), np.nan)
    pad[1:-1, 1:-1, 1:-1, :] = vals
    for d, shp in enumerate(_edge_shapes(n)):
        a, b = [(1, 2), (0, 2), (0, 1)][d]
        idx = np.indices(shp)
        stack = []
        for da in (-1, 0):
            for db in (-1, 0):
                off = [idx[0], idx[1], idx[2]]
                off[a] = off[a] + da
                off[b] = off[b] + db
                stack.append(pad[off[0] + 1, off[1] + 1, off[2] + 1, d])
        stack = np.stack(stack)
        with np.errstate(invalid="ignore", divide="ignore"):
            if harmonic:
                avg = np.nansum(np.ones_like(stack), axis=0) / np.nansum(1.0 / stack, axis=0)
            else:
                avg = np.nanmean(stack, axis=0)
        sl = slice(grid.edge_offsets[d], grid.edge_offsets[d + 1])
        out[sl] = avg.reshape(-1)
    return np.nan_to_num(out, nan=1.0)


def _average_to_faces(grid, m, name):
    vals = _cell_samples(grid, m, name)
    n = grid.n
    out = np.empty(grid.face_offsets[-1])
    pad = np.full((n[0] + 2, n[1] + 2, n[2] + 2, 3), np.nan)
    pad[1:-1, 1:-1, 1:-1, :] = vals
    for d, shp in enumerate(_face_shapes(n)):
        idx = np.indices(shp)
        lo = [idx[0], idx[1], idx[2]]
        lo[d] = lo[d] - 1
        stack = np.stack([
            pad[lo[0] + 1, lo[1] + 1, lo[2] + 1, d],
            pad[idx[0] + 1, idx[1] + 1, idx[2] + 1, d],
        ])
        avg = np.nanmean(stack, axis=0)
        sl = slice(grid.face_offsets[d], grid.face_offsets[d + 1])
        out[sl] = avg.reshape(-1)
    return np.nan_to_num(out, nan=1.0)


# ---------------------------------------------------------------------------
# divergence (verification only)
# ---------------------------------------------------------------------------

def divergence_matrix(grid: YeeGrid) -> sp.csr_matrix:
    """Cell divergence of the face field, restricted to field cells whose
    six faces are all unknowns (the staircase-free subgrid)."""
    n, h = grid.n, grid.h
    fshapes = _face_shapes(n)
    foff = grid.face_offsets

    def fid(d, i, j, k):
        return foff[d] + np.ravel_multi_index((i, j, k), fshapes[d])

    I, J, K = np.indices(n)
    cid = np.arange(int(np.prod(n))).reshape(n)
    rows, cols, vals = [], [], []
    for d in range(3):
        lo = [I, J, K]
        up = [I.copy(), J.copy(), K.copy()]
        up[d] = up[d] + 1
        for ids, sign in ((fid(d, lo[0], lo[1], lo[2]), -1.0),
                          (fid(d, up[0], up[1], up[2]), +1.0)):
            rows.append(cid.reshape(-1))
            cols.append(ids.reshape(-1))
            vals.append(np.full(cid.size, sign / h))
    D = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(int(np.prod(n)), foff[-1]))

    dof_mask = np.zeros(foff[-1], dtype=bool)
    dof_mask[grid.dof_faces] = True
    complete = np.asarray((np.abs(D) > 0).astype(float) @ (~dof_mask).astype(float) == 0).reshape(-1)
    complete &= grid.cell_cable == -1
    Dr = D[np.nonzero(complete)[0], :][:, grid.dof_faces]
    return Dr.tocsr()


# ---------------------------------------------------------------------------
# surface trace / injection
# ---------------------------------------------------------------------------

def _interp_rows(points, values_pts, h, radius_factor=2.25, rank_tol=1e-7):
    """Moving-least-squares linear interpolation weights.

    For each target point, weights over source points within
    radius_factor*h.  The local basis (1, dx, dy, dz) is reduced by a
    pivoted QR so near-coplanar stencils drop the unresolvable gradient
    directions instead of going singular; the constant mode is always
    kept, so constants are reproduced exactly and linear fields exactly
    wherever the stencil spans them.  Returns (rows, cols, vals).
    """
    tree = cKDTree(values_pts)
    groups = tree.query_ball_point(points, radius_factor * h)
    rows, cols, vals = [], [], []
    for qi, grp in enumerate(groups):
        if len(grp) == 0:
            raise GridError("surface quadrature point has no nearby field unknowns; refine the grid")
        grp = np.asarray(grp)
        d = values_pts[grp] - points[qi]
        w = np.maximum(1e-3, 1.0 - np.linalg.norm(d, axis=1) / (radius_factor * h)) ** 2
        phi = np.column_stack([np.ones(len(grp)), d / h])
        b = np.sqrt(w)[:, None] * phi
        # greedy basis selection: keep gradient columns only while the
        # weighted design stays numerically full rank
        keep = [0]
        for c in (1, 2, 3):
            trial = keep + [c]
            sv = np.linalg.svd(b[:, trial], compute_uv=False)
            if sv[-1] > rank_tol * sv[0]:
                keep = trial
        phi_s = phi[:, keep]
        G = (phi_s * w[:, None]).T @ phi_s
        coeff = np.linalg.solve(G, np.eye(len(keep))[:, 0])
        a = w * (phi_s @ coeff)
        rows.extend([qi] * len(grp))
        cols.extend(grp.tolist())
        vals.extend(np.asarray(a).tolist())
    return rows, cols, vals


def _component_interp(grid, source_pts, quad_pts):
    """Sparse (n_quad x n_source) interpolation for one vector component."""
    rows, cols, vals = _interp_rows(quad_pts, source_pts, grid.h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(quad_pts.shape[0], source_pts.shape[0]))


def surface_trace(grid: YeeGrid, charts: Sequence[TubeChart]):
    """Trace operators from grid unknowns to chart quadrature samples.

    Returns (R_tan, R_nu, M_surf):
      R_tan : free edges -> tangential 3-vector samples pi_tau(E) at the
              quadrature points (component-major: row 3*q+c)
      R_nu  : dof faces  -> samples of nu x H with nu the domain-outward
              normal (i.e. minus the chart normal, which points out of
              the tube)
      M_surf: diagonal quadrature mass on 3-vector samples
    """
    quad_pts = np.concatenate([ch.quad_points() for ch in charts])
    weights = np.concatenate([ch.quad_weights() for ch in charts])
    normals = np.concatenate([ch.normal.reshape(-1, 3) for ch in charts])
    nq = quad_pts.shape[0]

    edge_mids = grid.edge_midpoints()
    face_mids = grid.face_midpoints()
    edge_dirs = grid.edge_direction(grid.free_edges)
    face_axes = grid.face_normal_axis(grid.dof_faces)

    # per-component interpolation matrices
    interp_e = []
    interp_f = []
    for c in range(3):
        esel = np.nonzero(edge_dirs == c)[0]
        fsel = np.nonzero(face_axes == c)[0]
        if esel.size == 0 or fsel.size == 0:
            raise GridError("grid has no unknowns of some component near the surface")
        ie = _component_interp(grid, edge_mids[grid.free_edges[esel]], quad_pts)
        iff = _component_interp(grid, face_mids[grid.dof_faces[fsel]], quad_pts)
        # scatter back to full free-edge / dof-face column spaces
        ie = ie @ _scatter(esel, grid.n_free_edges).T
        iff = iff @ _scatter(fsel, grid.n_dof_faces).T
        interp_e.append(ie)
        interp_f.append(iff)

    # interleave components row-wise: row 3*q + c
    E_interp = _interleave(interp_e, nq)
    H_interp = _interleave(interp_f, nq)

    P_tan = _pointwise_matrix(np.eye(3)[None] - normals[:, :, None] * normals[:, None, :])
    nu_cross = _pointwise_matrix(_cross_matrices(-normals))

    R_tan = (P_tan @ E_interp).tocsr()
    R_nu = (nu_cross @ H_interp).tocsr()
    M_surf = sp.diags(np.repeat(weights, 3)).tocsr()
    return R_tan, R_nu, M_surf


def _scatter(sel, n_total):
    return sp.csr_matrix((np.ones(sel.size), (sel, np.arange(sel.size))),
                         shape=(n_total, sel.size))


def _interleave(mats, nq):
    rows, cols, vals = [], [], []
    for c, mat in enumerate(mats):
        coo = mat.tocoo()
        rows.append(3 * coo.row + c)
        cols.append(coo.col)
        vals.append(coo.data)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(3 * nq, mats[0].shape[1]))


def _cross_matrices(v):
    m = np.zeros((v.shape[0], 3, 3))
    m[:, 0, 1] = -v[:, 2]; m[:, 0, 2] = v[:, 1]
    m[:, 1, 0] = v[:, 2];  m[:, 1, 2] = -v[:, 0]
    m[:, 2, 0] = -v[:, 1]; m[:, 2, 1] = v[:, 0]
    return m


def _pointwise_matrix(blocks):
    return sp.block_diag(blocks, format="csr")


# ---------------------------------------------------------------------------
# periodic reference operators (dispersion oracle)
# ---------------------------------------------------------------------------

def periodic_curl_pair(n: int, h: float):
    """Curl pair on a fully periodic n^3 grid (no boundaries, no masks).

    Reference for the staggered-scheme dispersion relation
    omega^2 = (4/h^2) * sum_i sin^2(kappa_i h / 2).
    """
    shape = (n, n, n)
    size = n ** 3

    def rid(d, i, j, k):
        return d * size + np.ravel_multi_index((i % n, j % n, k % n), shape)

    I, J, K = np.indices(shape)
    rows, cols, vals = [], [], []
    for d in range(3):
        a, b = (d + 1) % 3, (d + 2) % 3
        fids = rid(d, I, J, K).reshape(-1)
        for comp, axis, sign in ((b, a, +1.0), (a, b, -1.0)):
            for shift, s2 in ((1, +1.0), (0, -1.0)):
                ijk = [I.copy(), J.copy(), K.copy()]
                ijk[axis] = ijk[axis] + shift
                rows.append(fids)
                cols.append(rid(comp, *ijk).reshape(-1))
                vals.append(np.full(size, sign * s2 / h))
    C = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(3 * size, 3 * size))
    return C, C.T.tocsr()
