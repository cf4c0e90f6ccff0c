"""
Global coupled operator bundle over the state x = (psi, B, q, D).

Efforts e = (I, H, V, E) = Hd x share the block layout.  The coupled
skew part acts as

    d/dt psi = -D V                                (line cells)
    d/dt B   = -C_E E - K_V V                      (faces)
    d/dt q   = -Dt (I - Pm_T H)                    (line nodes)
    d/dt D   =  C_H H                              (edges)

where K_V injects the lifted tangential voltage field into the Faraday
row through the mass-weighted adjoint of the surface trace, and
Pm_T = -sign * Pmag . R_nu corrects the total line current by the ring
functional of nu x H.  The relative sign of the two insertions is forced
by the exact discrete Green identity

    M J + J^T M  =  B1^T B2 + B2^T B1           (matrix identity)

with boundary maps B1 e = (I_tot(0), I_tot(1)) and B2 e = (V(0), -V(1));
the overall orientation (COUPLING_SIGN) is pinned by requiring the
adjoint-injection route to agree with the literal staircase Faraday
update driven by the lifted edge field (see tests).

Port convention
---------------
All boundary-condition matrices act on the stacked port vector

    z = (B1 e, B2 e) = (I_tot(0), I_tot(1), V(0), -V(1))  in C^{4k}

paired with Sigma = [[0, I_2k], [I_2k, 0]]: z^H Sigma z / 2 is the power
flowing in through the cable ends.  Inputs enter through the constraint
rows (u, 0) = [W_B_inp; W_B_0] z; realizing them replaces the extrapolated
endpoint currents by ghost values solved from the port law, which needs
the current-side block W1 = W_B[:, :2k] to be invertible (true for every
strictly dissipative port law and for the skew laws used here).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .coupling import CouplingMatrices
from .errors import AssemblyError, CertificateError, DomainError
from .maxwell import CurlPair
from .tline import LineBlocks

COUPLING_SIGN = -1.0   # orientation of the lateral coupling insertions;
                       # pinned against the staircase-lift Faraday route


def sigma_matrix(two_k: int) -> np.ndarray:
    """The indefinite port pairing [[0, I], [I, 0]] on C^{2*two_k}."""
    z = np.zeros((two_k, two_k))
    eye = np.eye(two_k)
    return np.block([[z, eye], [eye, z]])


@dataclass(frozen=True)
class BlockLayout:
    """Index bookkeeping for the four state/effort blocks."""

    n_cells: int
    n_faces: int
    n_nodes: int
    n_edges: int

    @property
    def total(self):
        return self.n_cells + self.n_faces + self.n_nodes + self.n_edges

    @property
    def sl_I(self):
        return slice(0, self.n_cells)

    @property
    def sl_H(self):
        return slice(self.n_cells, self.n_cells + self.n_faces)

    @property
    def sl_V(self):
        a = self.n_cells + self.n_faces
        return slice(a, a + self.n_nodes)

    @property
    def sl_E(self):
        return slice(self.total - self.n_edges, self.total)

    def pack(self, I, H, V, E):
        return np.concatenate([I, H, V, E])

    def unpack(self, x):
        return x[self.sl_I], x[self.sl_H], x[self.sl_V], x[self.sl_E]


@dataclass
class OperatorBundle:
    """Assembled (J, R, H) triple with masses and boundary extraction."""

    layout: BlockLayout
    k: int
    J: sp.csr_matrix          # skew core + coupling insertions (real)
    Rd: sp.csr_matrix         # damping on efforts (Hermitian part PSD)
    Hd: sp.csr_matrix         # material Hodge (Hermitian positive definite)
    M: sp.csr_matrix          # weighted inner product (diagonal, positive)
    B1: sp.csr_matrix         # efforts -> C^{2k}: (I_tot(0), I_tot(1))
    B2: sp.csr_matrix         # efforts -> C^{2k}: (V(0), -V(1))
    Pm_T: Optional[sp.csr_matrix]
    K_V: Optional[sp.csr_matrix]
    Lg_state: sp.csr_matrix   # ghost endpoint currents -> q-block rows
    green_residual: float
    line: LineBlocks = None
    curls: CurlPair = None

    @property
    def n(self):
        return self.layout.total

    def ports(self, e: np.ndarray) -> np.ndarray:
        return np.concatenate([self.B1 @ e, self.B2 @ e])

    def effort(self, x: np.ndarray) -> np.ndarray:
        return self.Hd @ x

    def energy(self, x: np.ndarray) -> float:
        return 0.5 * float(np.real(np.vdot(x, self.M @ (self.Hd @ x))))

    def energy_metric(self) -> sp.csr_matrix:
        return (self.M @ self.Hd).tocsr()

    def dissipation_rate(self, e: np.ndarray) -> float:
        return float(np.real(np.vdot(e, self.M @ (self.Rd @ e))))


def assemble_system(line: LineBlocks, curls: CurlPair,
                    coupling: Optional[CouplingMatrices] = None,
                    traces=None, green_tol: float = 1e-12) -> OperatorBundle:
    """Build the coupled bundle; verifies the Green identity exactly.

    With coupling=None the line and field blocks are independent (used
    for reduction tests and pure-field runs).  traces = (R_tan, R_nu,
    M_surf) from maxwell.surface_trace is required when coupling is given.
    """
    g = line.grid
    grid = curls.grid
    lay = BlockLayout(n_cells=g.n_cells, n_faces=grid.n_dof_faces,
                      n_nodes=g.n_nodes, n_edges=grid.n_free_edges)
    N = lay.total
    h3 = grid.h ** 3

    if coupling is not None:
        if traces is None:
            raise AssemblyError("coupled assembly needs the surface trace operators")
        _, R_nu, M_surf = traces
        Pm_T = (-COUPLING_SIGN) * (coupling.Pmag @ R_nu)
        K_V = (COUPLING_SIGN / h3) * (R_nu.T @ (M_surf @ (coupling.Pel @ g.D)))
    else:
        Pm_T = None
        K_V = None

    J = sp.bmat([
        [None, None, -g.D, None],
        [None, None, -K_V if K_V is not None else None, -curls.C_E],
        [-g.Dt, (g.Dt @ Pm_T) if Pm_T is not None else None, None, None],
        [None, curls.C_H, None, None],
    ], format="csr")

    Rd = sp.block_diag([
        line.Rm,
        sp.csr_matrix((lay.n_faces, lay.n_faces)),
        line.Gm,
        sp.diags(curls.sigma_edge),
    ], format="csr")
    Hd = sp.block_diag([
        line.Linv,
        sp.diags(curls.mu_inv()),
        line.Cinv,
        sp.diags(curls.eps_inv()),
    ], format="csr")
    M = sp.block_diag([
        g.Mc,
        sp.identity(lay.n_faces) * h3,
        g.Mn,
        sp.identity(lay.n_edges) * h3,
    ], format="csr")

    Rex = sp.vstack([g.R0, g.R1]).tocsr()
    two_k = 2 * g.k

    def zeros(r, c):
        return sp.csr_matrix((r, c))

    B1 = sp.hstack([
        Rex,
        -(Rex @ Pm_T) if Pm_T is not None else zeros(two_k, lay.n_faces),
        zeros(two_k, lay.n_nodes),
        zeros(two_k, lay.n_edges),
    ]).tocsr()
    B2 = sp.hstack([
        zeros(two_k, lay.n_cells),
        zeros(two_k, lay.n_faces),
        sp.vstack([g.E0, -g.E1]),
        zeros(two_k, lay.n_edges),
    ]).tocsr()

    Lg_state = sp.vstack([
        zeros(lay.n_cells, two_k),
        zeros(lay.n_faces, two_k),
        g.Lg,
        zeros(lay.n_edges, two_k),
    ]).tocsr()

    lhs = (M @ J + J.T @ M).tocsr()
    rhs = (B1.T @ B2 + B2.T @ B1).tocsr()
    scale = max(abs(lhs).max(), 1e-30)
    green_residual = float(abs(lhs - rhs).max() / scale)
    if green_residual > green_tol:
        raise AssemblyError(f"discrete Green identity violated: residual {green_residual:.3e}")

    return OperatorBundle(layout=lay, k=g.k, J=J, Rd=Rd, Hd=Hd, M=M,
                          B1=B1, B2=B2, Pm_T=Pm_T, K_V=K_V,
                          Lg_state=Lg_state, green_residual=green_residual,
                          line=line, curls=curls)


# ---------------------------------------------------------------------------
# system node: boundary inputs / outputs
# ---------------------------------------------------------------------------

def _check_port_matrix(W_B: np.ndarray, k: int):
    if W_B.shape != (2 * k, 4 * k):
        raise CertificateError(f"W_B must be {2 * k}x{4 * k}, got {W_B.shape}")
    sv = np.linalg.svd(W_B, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise CertificateError("W_B is rank deficient")
    sig = sigma_matrix(2 * k)
    K = W_B @ sig @ W_B.conj().T
    lam = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    if lam.min() < -1e-10 * max(1.0, lam.max()):
        raise CertificateError(f"W_B Sigma W_B^H has negative eigenvalue {lam.min():.3e}")


@dataclass
class SystemNode:
    """Boundary input/output configuration acting on the stacked port."""

    W_B_inp: np.ndarray      # (m, 4k)
    W_B_0: np.ndarray        # (2k - m, 4k)
    W_C_out: np.ndarray      # (p, 4k)
    k: int
    bc_tol: float = 1e-8

    def __post_init__(self):
        self.W_B_inp = np.atleast_2d(np.asarray(self.W_B_inp, dtype=complex))
        self.W_B_0 = np.asarray(self.W_B_0, dtype=complex).reshape(-1, 4 * self.k)
        self.W_C_out = np.atleast_2d(np.asarray(self.W_C_out, dtype=complex))
        _check_port_matrix(self.W_B, self.k)

    @property
    def W_B(self):
        return np.vstack([self.W_B_inp, self.W_B_0])

    @property
    def m(self):
        return self.W_B_inp.shape[0]

    @property
    def p(self):
        return self.W_C_out.shape[0]

    def u_hat(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u))
        if u.size != self.m:
            raise DomainError(f"input has {u.size} ports, node expects {self.m}")
        return np.concatenate([u, np.zeros(2 * self.k - self.m)])


def apply_FG(bundle: OperatorBundle, node: SystemNode, e: np.ndarray, u) -> np.ndarray:
    """(J - R) e with the boundary-compatibility check of the node domain."""
    z = bundle.ports(e)
    defect = node.W_B @ z - node.u_hat(u)
    if np.abs(defect).max() > node.bc_tol:
        raise DomainError(
            f"(e, u) violates the boundary constraint by {np.abs(defect).max():.3e} "
            f"(tolerance {node.bc_tol:.1e}); the pair is outside the node domain")
    return (bundle.J - bundle.Rd) @ e


def apply_KL(bundle: OperatorBundle, node: SystemNode, e: np.ndarray) -> np.ndarray:
    return node.W_C_out @ bundle.ports(e)


# ---------------------------------------------------------------------------
# boundary-controlled closed loop
# ---------------------------------------------------------------------------

@dataclass
class ClosedLoop:
    """State-space realization with the port law folded into the flow.

    x' = A x + Bu (u, 0),  boundary values used in the flux rows satisfy
    W1 g + W2 (B2 e) = (u, 0) exactly, so the discrete energy balance
    carries over verbatim.
    """

    bundle: OperatorBundle
    node: SystemNode
    A: sp.csr_matrix          # N x N generator (J_cl - Rd) Hd
    Bu: sp.csr_matrix         # N x 2k input injection (takes u_hat)
    G_fb: np.ndarray          # 2k x N: effort -> ghost currents, u = 0 part
    W1_inv: np.ndarray

    def ghost_currents(self, e: np.ndarray, u) -> np.ndarray:
        return self.G_fb @ e + self.W1_inv @ self.node.u_hat(u)

    def used_ports(self, e: np.ndarray, u) -> np.ndarray:
        """Port vector with the enforced (not extrapolated) currents."""
        return np.concatenate([self.ghost_currents(e, u), self.bundle.B2 @ e])

    def output(self, e: np.ndarray, u) -> np.ndarray:
        return self.node.W_C_out @ self.used_ports(e, u)


def build_closed_loop(bundle: OperatorBundle, node: SystemNode) -> ClosedLoop:
    k = bundle.k
    W1 = node.W_B[:, :2 * k]
    W2 = node.W_B[:, 2 * k:]
    sv = np.linalg.svd(W1, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise CertificateError(
            "current-side block W1 of W_B is singular; the boundary law cannot "
            "be solved for the endpoint currents (strictly dissipative and "
            "current-injecting skew laws avoid this)")
    W1_inv = np.linalg.inv(W1)
    G_fb = -W1_inv @ W2 @ bundle.B2.toarray()      # ghost currents for u = 0

    delta = sp.csr_matrix(G_fb) - bundle.B1        # replace extrapolation by law
    J_cl = bundle.J + bundle.Lg_state @ delta
    A = ((J_cl - bundle.Rd) @ bundle.Hd).tocsr()
    Bu = (bundle.Lg_state @ sp.csr_matrix(W1_inv)).tocsr()
    return ClosedLoop(bundle=bundle, node=node, A=A, Bu=Bu,
                      G_fb=np.asarray(G_fb), W1_inv=W1_inv)


def constrained_generator(bundle: OperatorBundle, W_B: np.ndarray,
                          bc_tol: float = 1e-8) -> ClosedLoop:
    """Homogeneous-constraint generator for spectral studies.

    Wraps the closed loop with all ports homogeneous (u = 0); dense
    eigendecompositions are practical at reduced sizes.
    """
    W_B = np.asarray(W_B, dtype=complex)
    k = bundle.k
    _check_port_matrix(W_B, k)
    node = SystemNode(W_B_inp=W_B[:0], W_B_0=W_B, W_C_out=np.zeros((1, 4 * k)),
                      k=k, bc_tol=bc_tol)
    return build_closed_loop(bundle, node)


def generator_spectrum(loop: ClosedLoop) -> np.ndarray:
    return np.linalg.eigvals(loop.A.toarray())


def hodge_extremes(bundle: OperatorBundle):
    """Eigenvalue extremes of the material Hodge in the weighted metric.

    The masses are scalar within each material block, so these are the
    plain eigenvalue extremes of Hd: diagonal on the field blocks, small
    Hermitian blocks on the line blocks.
    """
    lay = bundle.layout
    d = bundle.Hd.diagonal()
    lo = min(d[lay.sl_H].min(), d[lay.sl_E].min())
    hi = max(d[lay.sl_H].max(), d[lay.sl_E].max())
    for sl in (lay.sl_I, lay.sl_V):
        block = bundle.Hd[sl, sl].toarray()
        lam = np.linalg.eigvalsh(0.5 * (block + block.conj().T))
        lo = min(lo, lam.min())
        hi = max(hi, lam.max())
    return float(lo), float(hi)


def hermitian_part_bound(loop: ClosedLoop, n_probe: int = 12, seed: int = 0) -> float:
    """Upper bound estimate of the numerical-range real part of the
    closed-loop generator in the energy inner product, via power
    iteration on the symmetrized operator."""
    bundle = loop.bundle
    ME = bundle.energy_metric()
    S = (ME @ loop.A).tocsr()
    Sh = 0.5 * (S + S.conj().T)
    rng = np.random.default_rng(seed)
    bound = -np.inf
    MEd = ME.diagonal()
    for _ in range(n_probe):
        x = rng.standard_normal(bundle.n) + 1j * rng.standard_normal(bundle.n)
        num = float(np.real(np.vdot(x, Sh @ x)))
        den = float(np.real(np.vdot(x, MEd * x)))
        bound = max(bound, num / den)
    return bound
