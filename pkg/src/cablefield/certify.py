"""
Finite-dimensional certification of boundary-condition matrices.

All matrices act on the stacked port z = (I_tot(0), I_tot(1), V(0), -V(1))
with the pairing Sigma = [[0, I], [I, 0]]; see assembly.  W_B = [W1, W2]
is admissible when it has full row rank and K = W1 W2^H + W2 W1^H >= 0,
which makes the kernel relation {(x, y) : W1 x + W2 y = 0} maximally
dissipative (Re <x, y> <= 0 on an l-dimensional relation).  Strict
positivity of K gives the well-posedness constants

    delta = lambda_min( W2^-1 K W2^-H )
    gamma = || W_C_out [W_B; Wtilde_C]^-1 ||_2,   Wtilde_C = [W2^-H, 0]
    c_t   = max(1, c) max(1, gamma) (1 + gamma)

with c the energy-norm equivalence factor sqrt(hodge_max / hodge_min).

Co-located outputs complete W_B to [W_B; W_C] with

    Sigma - [W_B; W_C]^H Sigma [W_B; W_C] <= 0;

the builder solves W_B Sigma W_C^H = I, W_C Sigma W_C^H = 0, which always
satisfies the inequality (the defect is diag(0, K)) and achieves equality
exactly when W_B is skew (K = 0).  A true Sigma-unitary completion cannot
exist otherwise: [W_B; W_C] Sigma-unitary forces W_B Sigma W_B^H = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CertificateError

_EIG_TOL = 1e-10


def sigma_matrix(two_k: int) -> np.ndarray:
    z = np.zeros((two_k, two_k))
    eye = np.eye(two_k)
    return np.block([[z, eye], [eye, z]])


def _split(W_B: np.ndarray):
    two_k = W_B.shape[0]
    if W_B.shape[1] != 2 * two_k:
        raise CertificateError(f"W_B must be l x 2l, got {W_B.shape}")
    return W_B[:, :two_k], W_B[:, two_k:]


@dataclass
class BoundaryConditionSpec:
    """Input/zero/output port matrices for a k-cable system."""

    W_B_inp: np.ndarray
    W_B_0: np.ndarray
    W_C_out: np.ndarray
    k: int

    def __post_init__(self):
        four_k = 4 * self.k
        self.W_B_inp = np.asarray(self.W_B_inp, dtype=complex).reshape(-1, four_k)
        self.W_B_0 = np.asarray(self.W_B_0, dtype=complex).reshape(-1, four_k)
        self.W_C_out = np.asarray(self.W_C_out, dtype=complex).reshape(-1, four_k)
        if self.W_B_inp.shape[0] + self.W_B_0.shape[0] != 2 * self.k:
            raise CertificateError("W_B_inp and W_B_0 must stack to 2k rows")

    @property
    def W_B(self):
        return np.vstack([self.W_B_inp, self.W_B_0])

    @property
    def m(self):
        return self.W_B_inp.shape[0]

    @property
    def p(self):
        return self.W_C_out.shape[0]


@dataclass
class Certificate:
    admissible: bool
    strict: bool
    skew: bool
    max_dissipative: bool
    colocated: Optional[bool]
    delta: Optional[float]
    gamma: Optional[float]
    c: Optional[float]
    c_t: Optional[float]
    margins: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "admissible": self.admissible,
            "strict": self.strict,
            "skew": self.skew,
            "max_dissipative": self.max_dissipative,
            "colocated": self.colocated,
            "delta": self.delta,
            "gamma": self.gamma,
            "c": self.c,
            "c_t": self.c_t,
        }
        out.update({f"margin_{k}": v for k, v in self.margins.items()})
        return out


# ---------------------------------------------------------------------------
# admissibility / dissipativity
# ---------------------------------------------------------------------------

def check_admissible(W_B: np.ndarray) -> dict:
    """Full row rank and positivity of W1 W2^H + W2 W1^H, with margins."""
    W_B = np.asarray(W_B, dtype=complex)
    W1, W2 = _split(W_B)
    sv = np.linalg.svd(W_B, compute_uv=False)
    full_rank = sv[-1] > 1e-10 * sv[0]
    K = W1 @ W2.conj().T + W2 @ W1.conj().T
    lam = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    scale = max(np.abs(lam).max(), 1.0)
    psd = lam.min() >= -_EIG_TOL * scale
    return {
        "admissible": bool(full_rank and psd),
        "strict": bool(full_rank and lam.min() > _EIG_TOL * scale),
        "skew": bool(full_rank and np.abs(lam).max() <= _EIG_TOL * scale),
        "sigma_min_WB": float(sv[-1]),
        "K_eig_min": float(lam.min()),
        "K_eig_max": float(lam.max()),
    }


def check_max_dissipative(W1: np.ndarray, W2: np.ndarray) -> bool:
    """Sufficient criterion: [W1 W2] full row rank and K >= 0."""
    W1 = np.asarray(W1, dtype=complex)
    W2 = np.asarray(W2, dtype=complex)
    if W1.shape != W2.shape or W1.shape[0] != W1.shape[1]:
        raise CertificateError("W1, W2 must be square and of equal size")
    return check_admissible(np.hstack([W1, W2]))["admissible"]


def kernel_relation_oracle(W1: np.ndarray, W2: np.ndarray) -> dict:
    """Relation-level check: the kernel of [W1 W2] as a set of (x, y) pairs.

    Reports whether Re<x, y> <= 0 on the kernel (dissipative) and whether
    its dimension is l (which, for a dissipative relation, is maximal:
    the form Re<x,y> has exactly l nonpositive directions).
    """
    W1 = np.asarray(W1, dtype=complex)
    W2 = np.asarray(W2, dtype=complex)
    l = W1.shape[0]
    W = np.hstack([W1, W2])
    # orthonormal kernel basis
    _, s, vh = np.linalg.svd(W)
    rank = int((s > 1e-12 * max(s[0], 1.0)).sum())
    Z = vh[rank:].conj().T
    X, Y = Z[:l], Z[l:]
    form = X.conj().T @ Y + Y.conj().T @ X
    lam = np.linalg.eigvalsh(0.5 * (form + form.conj().T))
    dissip = lam.max() <= _EIG_TOL * max(1.0, np.abs(lam).max())
    return {
        "dimension": Z.shape[1],
        "dissipative": bool(dissip),
        "maximally_dissipative": bool(dissip and Z.shape[1] == l),
        "form_eig_max": float(lam.max()) if lam.size else 0.0,
    }


# ---------------------------------------------------------------------------
# co-located outputs
# ---------------------------------------------------------------------------

def colocation_defect(W_B: np.ndarray, W_C: np.ndarray) -> np.ndarray:
    """Eigenvalues of Sigma - [W_B; W_C]^H Sigma [W_B; W_C] (want <= 0)."""
    M = np.vstack([W_B, W_C])
    sig = sigma_matrix(W_B.shape[0])
    D = sig - M.conj().T @ sig @ M
    return np.linalg.eigvalsh(0.5 * (D + D.conj().T))


def build_colocated_output(W_B: np.ndarray, newton_iters: int = 100) -> np.ndarray:
    """Completion W_C with W_B Sigma W_C^H = I and W_C Sigma W_C^H = 0.

    Strict laws use the closed form [W2^-H, 0]; skew laws the hyperbolic
    completion in the coordinates diagonalizing Sigma (then [W_B; W_C] is
    exactly Sigma-unitary); mixed laws fall back to a Gauss-Newton search
    seeded by the minimum-norm dual.
    """
    W_B = np.asarray(W_B, dtype=complex)
    adm = check_admissible(W_B)
    if not adm["admissible"]:
        raise CertificateError(f"W_B is not admissible: {adm}")
    two_k = W_B.shape[0]
    W1, W2 = _split(W_B)
    sig = sigma_matrix(two_k)

    if adm["strict"]:
        W_C = np.hstack([np.linalg.inv(W2).conj().T, np.zeros((two_k, two_k))])
    elif adm["skew"]:
        # Sigma = P Q P with P the normalized Hadamard-like involution
        P = np.block([[np.eye(two_k), np.eye(two_k)],
                      [np.eye(two_k), -np.eye(two_k)]]) / np.sqrt(2.0)
        G = W_B @ P
        Gp, Gm = G[:, :two_k], G[:, two_k:]
        for name, blk in (("G+", Gp), ("G-", Gm)):
            if np.linalg.svd(blk, compute_uv=False)[-1] < 1e-12:
                raise CertificateError(f"skew completion failed: {name} block singular")
        H = np.hstack([0.5 * np.linalg.inv(Gp).conj().T,
                       -0.5 * np.linalg.inv(Gm).conj().T])
        W_C = H @ P
    else:
        W_C = _gauss_newton_completion(W_B, sig, newton_iters)

    M = np.vstack([W_B, W_C])
    defect = colocation_defect(W_B, W_C)
    if defect.max() > _EIG_TOL * max(1.0, np.abs(defect).max()):
        raise CertificateError(
            f"completion violates the output inequality: max eig {defect.max():.3e}")
    if np.linalg.cond(M) > 1e12:
        raise CertificateError("completion is numerically singular")
    return W_C


def _gauss_newton_completion(W_B, sig, iters):
    two_k = W_B.shape[0]
    A = W_B @ sig
    C = (np.linalg.pinv(A)).conj().T          # min-norm solution of A C^H = I
    for _ in range(iters):
        r1 = W_B @ sig @ C.conj().T - np.eye(two_k)
        r2 = C @ sig @ C.conj().T
        res = max(np.abs(r1).max(), np.abs(r2).max())
        if res < 1e-13:
            return C
        # linearize: dC from stacked least squares in vectorized form
        n_unk = C.size
        Jr = np.zeros((r1.size + r2.size, 2 * n_unk))
        rhs = -np.concatenate([r1.reshape(-1), r2.reshape(-1)])

        def pack(dr):
            return np.concatenate([dr.real.reshape(-1), dr.imag.reshape(-1)])

        basis = np.eye(n_unk)
        rows1 = []
        rows2 = []
        for t in range(n_unk):
            dC = basis[t].reshape(C.shape)
            d1 = W_B @ sig @ dC.conj().T
            d2 = dC @ sig @ C.conj().T + C @ sig @ dC.conj().T
            rows1.append((d1, d2))
            dCi = 1j * dC
            d1i = W_B @ sig @ dCi.conj().T
            d2i = dCi @ sig @ C.conj().T + C @ sig @ dCi.conj().T
            rows2.append((d1i, d2i))
        cols = []
        for d1, d2 in rows1 + rows2:
            cols.append(np.concatenate([d1.reshape(-1), d2.reshape(-1)]))
        Jc = np.stack(cols, axis=1)
        J_real = np.vstack([Jc.real, Jc.imag])
        rhs_real = np.concatenate([rhs.real, rhs.imag])
        step, *_ = np.linalg.lstsq(J_real, rhs_real, rcond=None)
        dC = (step[:n_unk] + 1j * step[n_unk:]).reshape(C.shape)
        C = C + dC
    raise CertificateError("co-location search did not converge; margins: "
                           f"residual {res:.3e}")


# ---------------------------------------------------------------------------
# well-posedness constants
# ---------------------------------------------------------------------------

def find_full_colocated(W_B: np.ndarray, W_C_out: np.ndarray):
    """Completion W_C whose first rows equal W_C_out, if one exists.

    Tries the builder's completion directly, then the builder's trailing
    rows under the supplied leading rows.  Returns None when W_C_out is
    not a co-located output for W_B (or has the wrong row count).
    """
    W_B = np.asarray(W_B, dtype=complex)
    W_C_out = np.atleast_2d(np.asarray(W_C_out, dtype=complex))
    m = W_C_out.shape[0]
    if m > W_B.shape[0]:
        return None
    try:
        W_C = build_colocated_output(W_B)
    except CertificateError:
        return None
    for candidate in (W_C, np.vstack([W_C_out, W_C[m:]])):
        if np.allclose(candidate[:m], W_C_out, atol=1e-9):
            defect = colocation_defect(W_B, candidate)
            M = np.vstack([W_B, candidate])
            if defect.max() <= _EIG_TOL * max(1.0, np.abs(defect).max()) \
                    and np.linalg.cond(M) < 1e12:
                return candidate
    return None


def wellposedness_constants(spec: BoundaryConditionSpec,
                            hodge_min: float, hodge_max: float) -> Certificate:
    """Certificate with delta, gamma, c, c_t for a strict port law;
    admissibility flags are reported for any law."""
    W_B = spec.W_B
    adm = check_admissible(W_B)
    delta = gamma = c = c_t = None

    max_diss = adm["admissible"]
    if adm["strict"]:
        W1, W2 = _split(W_B)
        K = W1 @ W2.conj().T + W2 @ W1.conj().T
        W2_inv = np.linalg.inv(W2)
        Wmat = W2_inv @ K @ W2_inv.conj().T
        delta = float(np.linalg.eigvalsh(0.5 * (Wmat + Wmat.conj().T)).min())
        Wtilde = np.hstack([W2_inv.conj().T, np.zeros_like(W2)])
        big = np.vstack([W_B, Wtilde])
        gamma = float(np.linalg.norm(spec.W_C_out @ np.linalg.inv(big), 2))
        c = float(np.sqrt(hodge_max / hodge_min))
        c_t = max(1.0, c) * max(1.0, gamma) * (1.0 + gamma)

    colocated = None
    if adm["admissible"] and spec.p == spec.m:
        colocated = find_full_colocated(W_B, spec.W_C_out) is not None

    return Certificate(
        admissible=adm["admissible"],
        strict=adm["strict"],
        skew=adm["skew"],
        max_dissipative=max_diss,
        colocated=colocated,
        delta=delta, gamma=gamma, c=c, c_t=c_t,
        margins={
            "sigma_min_WB": adm["sigma_min_WB"],
            "K_eig_min": adm["K_eig_min"],
            "K_eig_max": adm["K_eig_max"],
        },
    )


def require_strict(spec_or_WB) -> None:
    W_B = spec_or_WB.W_B if isinstance(spec_or_WB, BoundaryConditionSpec) else spec_or_WB
    adm = check_admissible(W_B)
    if not adm["strict"]:
        raise CertificateError(
            "well-posedness constants need a strictly positive port law "
            f"(K eig min = {adm['K_eig_min']:.3e})")
