import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln
from scipy.stats import unitary_group

from fineq.errors import InputError, ResolutionError
from fineq.linalg import (
    commutator,
    expi_hermitian,
    op_norm,
    projective_distance,
    projective_distance_2,
    schatten_norm,
    singular_values,
)
from fineq.quantization import (
    QuantizationLevel,
    bracket_defect,
    gram_matrix,
    hilbert_dim,
    op_fine,
    quantize,
    toeplitz,
)
from fineq.sphere import SphereFunction, n_coeffs, named_function


def toeplitz_oracle(k, f, n_u=None, n_phi=None):
    """<s_i, f s_j> by 2D quadrature with s_j ~ t^{j/2} (1-t)^{(m-j)/2} e^{i j phi}, t = (1-u)/2."""
    m = k - 1
    n_u = n_u or (m + f.l_max) // 2 + 4
    n_phi = n_phi or 2 * m + 2 * f.l_max + 4
    x, w = np.polynomial.legendre.leggauss(n_u)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    t = (1 - x) / 2
    j = np.arange(k)
    logc = 0.5 * (math.log(k / (2 * np.pi)) + gammaln(k) - gammaln(j + 1) - gammaln(k - j))
    mod = np.exp(logc[:, None] + 0.5 * (j[:, None] * np.log(t) + (m - j)[:, None] * np.log1p(-t)))
    S = mod[:, :, None] * np.exp(1j * j[:, None, None] * phi[None, None, :])
    uu, pp = np.meshgrid(x, phi, indexing="ij")
    s = np.sqrt(1 - uu**2)
    F = f.evaluate(np.stack([s * np.cos(pp), s * np.sin(pp), uu], axis=-1))
    W = (w / 2)[:, None] * (2 * np.pi / n_phi) * F
    return np.einsum("iab,jab,ab->ij", S.conj(), S, W)


def random_function(l_max, seed):
    return SphereFunction(np.random.default_rng(seed).normal(size=n_coeffs(l_max)))


def test_level_basics():
    lv = QuantizationLevel(5)
    assert (lv.dim, lv.m, lv.hbar) == (5, 4, 0.2)
    assert hilbert_dim(17) == 17
    for bad in (0, -1, 1.5):
        with pytest.raises(InputError):
            QuantizationLevel(bad)


@pytest.mark.parametrize("k", [1, 2, 7, 64])
def test_gram_is_identity(k):
    assert np.max(np.abs(gram_matrix(k) - np.eye(k))) < 1e-12


@pytest.mark.parametrize("k", [1, 2, 5, 16])
@pytest.mark.parametrize("name", ["1", "u", "x", "xy", "u2", "Y3m2", "lincomb(1*Y4p3, 0.5*yz)"])
def test_toeplitz_matches_2d_quadrature(k, name):
    f = named_function(name)
    assert np.max(np.abs(toeplitz(k, f) - toeplitz_oracle(k, f))) < 1e-12


@pytest.mark.parametrize("k", [1, 4, 33])
def test_identity(k):
    one = named_function("1")
    for scheme in ("toeplitz", "fine"):
        assert np.max(np.abs(quantize(k, one, scheme) - np.eye(k))) < 1e-13


@pytest.mark.parametrize("k", [2, 3, 16, 128])
def test_toeplitz_u_spectrum(k):
    # the monomial basis diagonalises T(u) with Beta-moment eigenvalues (m - 2j)/(m + 2)
    m = k - 1
    T = toeplitz(k, named_function("u"))
    expect = np.sort((m - 2 * np.arange(k)) / (m + 2))
    assert np.allclose(np.sort(np.linalg.eigvalsh(T)), expect, rtol=0, atol=1e-11)
    assert op_norm(T) == pytest.approx((k - 1) / (k + 1), abs=1e-11)


@pytest.mark.parametrize("k", [2, 9, 64])
def test_fine_linear_is_spin(k):
    Qx, Qy, Qu = (op_fine(k, named_function(n)) for n in "xyu")
    expect = (k - 1 - 2 * np.arange(k)) / k
    for Q in (Qx, Qy, Qu):
        assert np.allclose(np.sort(np.linalg.eigvalsh(Q)), np.sort(expect), rtol=0, atol=1e-12)
    casimir = Qx @ Qx + Qy @ Qy + Qu @ Qu
    assert np.allclose(casimir, (k * k - 1) / k**2 * np.eye(k), rtol=0, atol=1e-12)
    # linear functions: the fine correspondence is exact
    assert bracket_defect(k, named_function("x"), named_function("y")) < 1e-12


@pytest.mark.parametrize("name", ["u2", "xy", "lincomb(1*x, 1*Y3p1)"])
def test_fine_is_rotation_covariant_in_spectrum(name):
    # rotating f about the x-axis by pi/2 must not change the spectrum of Op_k(f)
    from fineq.flows import RotationFlow, pullback

    f = named_function(name)
    g = pullback(f, RotationFlow([1, 0, 0], math.pi / 2), 1.0)
    for k in (5, 12):
        a = np.linalg.eigvalsh(op_fine(k, f))
        b = np.linalg.eigvalsh(op_fine(k, g))
        assert np.allclose(a, b, rtol=0, atol=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_hermitian_and_norm_bound(seed, k):
    f = random_function(3, seed)
    T = toeplitz(k, f)
    assert np.array_equal(T, T.conj().T)
    assert op_norm(T) <= f.sup_bound() + 1e-12


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_positive_symbol_gives_psd(seed, k):
    f = random_function(2, seed)
    g = f * f  # g >= 0
    assert np.linalg.eigvalsh(toeplitz(k, g)).min() >= -1e-12 * (1 + g.sup_bound())


def test_too_few_nodes_raises():
    with pytest.raises(ResolutionError):
        toeplitz(16, named_function("u2"), n_t=4)


def test_unknown_scheme():
    with pytest.raises(InputError):
        quantize(4, named_function("u"), "weyl")


# ---------------------------------------------------------------- norms


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


def test_schatten_identity_and_errors():
    I = np.eye(6)
    for p in (1, 2, 5):
        assert schatten_norm(I, p) == pytest.approx(6 ** (1 / p))
    assert schatten_norm(I, math.inf) == 1.0
    assert schatten_norm(np.zeros((3, 3)), 2) == 0.0
    with pytest.raises(InputError):
        schatten_norm(I, 0.5)


def test_schatten_matches_eigenvalues_for_hermitian():
    rng = np.random.default_rng(3)
    A = random_hermitian(8, rng)
    ev = np.abs(np.linalg.eigvalsh(A))
    assert schatten_norm(A, 1) == pytest.approx(ev.sum(), rel=1e-13)
    assert schatten_norm(A, 2) == pytest.approx(np.linalg.norm(A, "fro"), rel=1e-13)
    assert np.allclose(singular_values(A), np.sort(ev)[::-1])


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.5, 5.0]), st.integers(1, 12))
def test_schatten_sandwich(seed, p, d):
    A = random_hermitian(d, np.random.default_rng(seed))
    top = op_norm(A)
    sp = schatten_norm(A, p)
    assert top <= sp * (1 + 1e-12) and sp <= d ** (1 / p) * top * (1 + 1e-12)


def test_expi_is_unitary_and_exact_on_diagonal():
    H = np.diag([0.0, 1.0, -2.0])
    U = expi_hermitian(H, 0.3)
    assert np.allclose(U, np.diag(np.exp(-0.3j * np.diag(H))), atol=1e-15)
    rng = np.random.default_rng(1)
    V = expi_hermitian(random_hermitian(10, rng), 2.0)
    assert np.allclose(V.conj().T @ V, np.eye(10), atol=1e-13)


def test_commutator_antisymmetric():
    rng = np.random.default_rng(2)
    A, B = random_hermitian(5, rng), random_hermitian(5, rng)
    assert np.allclose(commutator(A, B), -commutator(B, A))


@pytest.mark.parametrize("seed", range(5))
def test_projective_distance_properties(seed):
    U = unitary_group.rvs(6, random_state=seed)
    V = unitary_group.rvs(6, random_state=seed + 100)
    assert projective_distance(U, np.exp(0.7j) * U) < 1e-9
    d = projective_distance(U, V)
    assert d <= op_norm(U - V) + 1e-12
    assert d == pytest.approx(projective_distance(V, U), abs=1e-8)
    # closed form for p = 2 agrees with the scan
    assert projective_distance(U, V, p=2) == pytest.approx(projective_distance_2(U, V), abs=1e-8)
    # refinement never does worse than the coarse scan
    coarse = min(op_norm(U - np.exp(1j * th) * V) for th in 2 * np.pi * np.arange(256) / 256)
    assert d <= coarse + 1e-15


def test_projective_distance_shape_mismatch():
    with pytest.raises(InputError):
        projective_distance(np.eye(2), np.eye(3))
