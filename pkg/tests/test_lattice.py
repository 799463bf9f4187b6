import itertools
from math import gcd
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fineq.errors import InputError
from fineq.lattice import (
    CohomologyData,
    _ext_gcd,
    _primitive_integer_row,
    check_condition_c,
    kernel_basis,
    odd_witness,
)


def brute_force_odd(omega, c1, bound=10):
    """Some v in [-bound, bound]^n with <omega, v> = 0 and <c1, v> odd, or None."""
    n = len(omega)
    for v in itertools.product(range(-bound, bound + 1), repeat=n):
        if sum(Fraction(w) * x for w, x in zip(omega, v)) == 0 and sum(c * x for c, x in zip(c1, v)) % 2:
            return v
    return None


def det(M):
    M = [list(map(Fraction, r)) for r in M]
    n, d = len(M), Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if M[r][i] != 0), None)
        if piv is None:
            return 0
        if piv != i:
            M[i], M[piv] = M[piv], M[i]
            d = -d
        d *= M[i][i]
        for r in range(i + 1, n):
            f = M[r][i] / M[i][i]
            M[r] = [a - f * b for a, b in zip(M[r], M[i])]
    return d


def test_blowup_examples():
    assert check_condition_c(CohomologyData(2, (3, 1), (3, -1)))
    assert not check_condition_c(CohomologyData(2, (2, 1), (3, -1)))


def test_blowup_kernel_vector():
    (v,) = kernel_basis([3, 1])
    assert tuple(abs(x) for x in v) == (1, 3)
    assert 3 * v[0] - v[1] in (6, -6)


def test_witness_reports_odd_value():
    w = odd_witness(CohomologyData(2, (2, 1), (3, -1)))
    assert w is not None
    assert 2 * w[0] + w[1] == 0
    assert (3 * w[0] - w[1]) % 2 == 1


def test_rank_one_kernel_is_trivial():
    assert check_condition_c(CohomologyData(1, (1,), (2,)))
    assert check_condition_c(CohomologyData(1, (Fraction(1, 3),), (1,)))


def test_rank_zero_is_vacuous():
    assert check_condition_c(CohomologyData(0, (), ()))


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 8) for n in range(-6, 7) if gcd(m, n) == 1])
def test_blowup_family_parity_rule(m, n):
    # CP^2 blown up at a point with primitive (m, n): the kernel is spanned by
    # nL - mE and (C) holds iff m = n mod 2
    data = CohomologyData(2, (m, n), (3, -1))
    assert check_condition_c(data) == ((m - n) % 2 == 0)


def test_rational_entries_accepted():
    data = CohomologyData(2, ("3/2", Fraction(1, 2)), (3, -1))
    assert data.omega == (Fraction(3, 2), Fraction(1, 2))
    assert check_condition_c(data)


@pytest.mark.parametrize("bad", [(0.5, 1), (True, 1)])
def test_floats_and_bools_rejected(bad):
    with pytest.raises(InputError):
        CohomologyData(2, bad, (1, 1))


def test_length_mismatch():
    with pytest.raises(InputError):
        CohomologyData(2, (1, 2, 3), (1, 1))
    with pytest.raises(InputError):
        CohomologyData(2, (1, 2), (1,))


def test_zero_omega_rejected():
    with pytest.raises(InputError):
        CohomologyData(2, (0, 0), (1, 1))


def test_c1_must_be_integral():
    with pytest.raises(InputError):
        CohomologyData(1, (1,), (0.5,))


omega_entry = st.fractions(min_value=-6, max_value=6, max_denominator=4)
small_int = st.integers(-5, 5)


@st.composite
def cohomology(draw, max_rank=3):
    n = draw(st.integers(1, max_rank))
    omega = draw(st.lists(omega_entry, min_size=n, max_size=n).filter(lambda w: any(w)))
    c1 = draw(st.lists(small_int, min_size=n, max_size=n))
    return omega, c1


def unit_vector(row):
    """Integer u with <row, u> = gcd(row), built by chaining extended gcds."""
    acc, coeffs = 0, [0] * len(row)
    for i, a in enumerate(row):
        g, p, q = _ext_gcd(acc, a)
        coeffs = [p * c for c in coeffs]
        coeffs[i] += q
        acc = g
    return acc, coeffs


@given(cohomology(4))
def test_kernel_basis_is_saturated_basis(data):
    omega, _ = data
    row = _primitive_integer_row([Fraction(w) for w in omega])
    basis = kernel_basis(row)
    assert len(basis) == len(row) - 1
    for v in basis:
        assert sum(a * b for a, b in zip(row, v)) == 0
    # adding u with <row, u> = 1 gives a unimodular matrix exactly when the
    # basis spans the whole kernel lattice
    g, u = unit_vector(row)
    assert g == 1
    assert abs(det([u] + [list(v) for v in basis])) == 1


@given(cohomology(), st.fractions(min_value=Fraction(1, 5), max_value=7, max_denominator=5))
def test_scaling_invariance(data, scale):
    omega, c1 = data
    a = check_condition_c(CohomologyData.from_vectors(omega, c1))
    b = check_condition_c(CohomologyData.from_vectors([scale * w for w in omega], c1))
    assert a == b


@given(cohomology(), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_even_shift_of_c1_invariance(data, shift):
    omega, c1 = data
    shifted = [c + 2 * s for c, s in zip(c1, shift)]
    assert check_condition_c(CohomologyData.from_vectors(omega, c1)) == \
        check_condition_c(CohomologyData.from_vectors(omega, shifted))


@given(cohomology(3))
def test_agrees_with_brute_force(data):
    omega, c1 = data
    verdict = check_condition_c(CohomologyData.from_vectors(omega, c1))
    found = brute_force_odd(omega, c1, bound=6)
    if found is not None:
        assert not verdict
    witness = odd_witness(CohomologyData.from_vectors(omega, c1))
    if witness is not None:
        assert sum(Fraction(w) * x for w, x in zip(omega, witness)) == 0
        assert sum(c * x for c, x in zip(c1, witness)) % 2 == 1
