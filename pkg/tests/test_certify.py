import numpy as np
import pytest

from cablefield.certify import (
    BoundaryConditionSpec,
    build_colocated_output,
    check_admissible,
    check_max_dissipative,
    colocation_defect,
    find_full_colocated,
    kernel_relation_oracle,
    require_strict,
    sigma_matrix,
    wellposedness_constants,
)
from cablefield.errors import CertificateError


def random_admissible(rng, l, kind="strict"):
    """Port laws [W1, W2] with K = W1 W2^H + W2 W1^H of the requested type."""
    W2 = rng.standard_normal((l, l)) + 1j * rng.standard_normal((l, l))
    W2 += 3.0 * np.eye(l)
    N = rng.standard_normal((l, l)) + 1j * rng.standard_normal((l, l))
    N = 0.5 * (N - N.conj().T)
    if kind == "strict":
        K0 = rng.standard_normal((l, l)) + 1j * rng.standard_normal((l, l))
        K0 = K0 @ K0.conj().T + 0.3 * np.eye(l)
    elif kind == "skew":
        K0 = np.zeros((l, l))
    else:
        v = rng.standard_normal((l, max(1, l // 2)))
        K0 = v @ v.T
    W1 = 0.5 * (K0 + N) @ np.linalg.inv(W2.conj().T)
    return np.hstack([W1, W2])


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

def test_admissible_examples():
    # resistive law [I, I]: strict with K = 2 I
    W = np.hstack([np.eye(2), np.eye(2)])
    rep = check_admissible(W)
    assert rep["admissible"] and rep["strict"] and not rep["skew"]
    assert abs(rep["K_eig_min"] - 2.0) < 1e-12 and abs(rep["K_eig_max"] - 2.0) < 1e-12

    # open-circuit law [I, 0]: admissible with equality (skew)
    rep = check_admissible(np.hstack([np.eye(2), np.zeros((2, 2))]))
    assert rep["admissible"] and rep["skew"] and not rep["strict"]

    # duplicated row: rank deficient
    W = np.vstack([np.ones((1, 4)), np.ones((1, 4))])
    assert not check_admissible(W)["admissible"]


def test_lemma_counterexample_rejected():
    assert not check_max_dissipative(np.eye(2), -np.eye(2))


def test_lemma_agrees_with_kernel_oracle():
    rng = np.random.default_rng(0)
    for i in range(100):
        kind = ("strict", "skew", "mixed")[i % 3]
        l = 2 + (i % 2) * 2
        W = random_admissible(rng, l, kind)
        W1, W2 = W[:, :l], W[:, l:]
        assert check_max_dissipative(W1, W2)
        oracle = kernel_relation_oracle(W1, W2)
        assert oracle["maximally_dissipative"]
        assert oracle["dimension"] == l

    # and the criterion failing matches the oracle failing on the
    # canonical counterexample
    oracle = kernel_relation_oracle(np.eye(2), -np.eye(2))
    assert not oracle["dissipative"]


def test_admissibility_invariant_under_row_scaling():
    rng = np.random.default_rng(1)
    W = random_admissible(rng, 2, "strict")
    T = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) + 2 * np.eye(2)
    for probe in (W, T @ W):
        rep = check_admissible(probe)
        assert rep["admissible"] and rep["strict"]
    assert kernel_relation_oracle((T @ W)[:, :2], (T @ W)[:, 2:])["maximally_dissipative"]


# ---------------------------------------------------------------------------
# co-located outputs
# ---------------------------------------------------------------------------

def test_colocation_block_swap_seed():
    W_B = np.hstack([np.eye(2), np.zeros((2, 2))])
    W_C = build_colocated_output(W_B)
    # Sigma-unitary completion: equality in the output inequality
    assert np.abs(colocation_defect(W_B, W_C)).max() <= 1e-10
    assert np.allclose(W_C, np.hstack([np.zeros((2, 2)), np.eye(2)]), atol=1e-12)


def test_colocation_strict_seed_inequality():
    W_B = np.hstack([np.eye(2), np.eye(2)]) / np.sqrt(2.0)
    W_C = build_colocated_output(W_B)
    lam = colocation_defect(W_B, W_C)
    assert lam.max() <= 1e-10
    # no Sigma-unitary completion exists for a non-skew law: the defect
    # carries exactly the eigenvalues of -W2^-1 K W2^-H (here -2, -2)
    assert np.allclose(sorted(lam)[:2], [-2.0, -2.0], atol=1e-10)


def test_colocation_random_laws():
    rng = np.random.default_rng(2)
    for i in range(50):
        kind = ("strict", "skew")[i % 2]
        l = (2, 4)[i % 2 == 0 and i % 4 == 0]
        W_B = random_admissible(rng, 2, kind)
        W_C = build_colocated_output(W_B)
        lam = colocation_defect(W_B, W_C)
        assert lam.max() <= 1e-10
        M = np.vstack([W_B, W_C])
        assert np.linalg.cond(M) <= 1e6
        if kind == "skew":
            assert np.abs(lam).max() <= 1e-10


def test_colocation_mixed_law_search():
    rng = np.random.default_rng(3)
    W_B = random_admissible(rng, 2, "mixed")
    rep = check_admissible(W_B)
    assert rep["admissible"] and not rep["strict"] and not rep["skew"]
    W_C = build_colocated_output(W_B)
    assert colocation_defect(W_B, W_C).max() <= 1e-10


def test_find_full_colocated_roundtrip():
    W_B = np.hstack([np.eye(2), np.eye(2)])
    W_C = build_colocated_output(W_B)
    out = find_full_colocated(W_B, W_C[:1])
    assert out is not None
    assert find_full_colocated(W_B, np.ones((1, 4))) is None


# ---------------------------------------------------------------------------
# well-posedness constants
# ---------------------------------------------------------------------------

def test_delta_oracle():
    # W1 = W2 = I: W = W2^-1 (2 I) W2^-H = 2 I, delta = 2
    spec = BoundaryConditionSpec(
        W_B_inp=np.hstack([np.eye(2), np.eye(2)]),
        W_B_0=np.zeros((0, 4)),
        W_C_out=np.hstack([np.eye(2), np.zeros((2, 2))]),
        k=1,
    )
    cert = wellposedness_constants(spec, hodge_min=1.0, hodge_max=1.0)
    assert cert.strict and abs(cert.delta - 2.0) <= 1e-12


def test_gamma_oracle_explicit_inverse():
    # W_C_out = Wtilde_C rows: gamma = || [0, I] block of the identity || = 1
    W_B = np.hstack([np.eye(2), np.eye(2)])
    Wtilde = np.hstack([np.eye(2), np.zeros((2, 2))])
    spec = BoundaryConditionSpec(W_B_inp=W_B, W_B_0=np.zeros((0, 4)),
                                 W_C_out=Wtilde, k=1)
    cert = wellposedness_constants(spec, 1.0, 1.0)
    big = np.vstack([W_B, Wtilde])
    expected = np.linalg.norm(Wtilde @ np.linalg.inv(big), 2)
    assert abs(cert.gamma - expected) <= 1e-12
    assert abs(cert.gamma - 1.0) <= 1e-12
    assert abs(cert.c_t - max(1, cert.gamma) * (1 + cert.gamma)) <= 1e-12


def test_skew_law_has_no_constants():
    spec = BoundaryConditionSpec(
        W_B_inp=np.hstack([np.eye(2), np.zeros((2, 2))]),
        W_B_0=np.zeros((0, 4)),
        W_C_out=np.hstack([np.zeros((2, 2)), np.eye(2)]),
        k=1,
    )
    cert = wellposedness_constants(spec, 1.0, 1.0)
    assert cert.skew and cert.delta is None
    with pytest.raises(CertificateError):
        require_strict(spec.W_B)


def test_c_t_scales_with_hodge_conditioning():
    spec = BoundaryConditionSpec(
        W_B_inp=np.hstack([np.eye(2), np.eye(2)]),
        W_B_0=np.zeros((0, 4)),
        W_C_out=np.hstack([np.eye(2), np.zeros((2, 2))]),
        k=1,
    )
    flat = wellposedness_constants(spec, 1.0, 1.0)
    steep = wellposedness_constants(spec, 0.25, 4.0)
    assert steep.c == pytest.approx(4.0)
    assert steep.c_t == pytest.approx(4.0 * flat.c_t)
