import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionsynth.dualquat import (
    DQPolynomial,
    DualNumber,
    DualQuaternion,
    dq_conj,
    dq_inverse,
    dq_mul,
    dq_norm,
    dqpoly_div_linear,
    dqpoly_div_real,
    dqpoly_eval,
    dqpoly_eval_right,
    dqpoly_mul,
    dqpoly_norm,
    projective_distance,
    real_poly_to_dq,
)
from motionsynth.errors import NotInvertible, NotRealNorm
from motionsynth.motioncurve import expand

from conftest import random_curve

ONE = DualQuaternion.real(1.0)
I = DualQuaternion([0, 1, 0, 0, 0, 0, 0, 0])
J = DualQuaternion([0, 0, 1, 0, 0, 0, 0, 0])
K = DualQuaternion([0, 0, 0, 1, 0, 0, 0, 0])
EPS = DualQuaternion([0, 0, 0, 0, 1, 0, 0, 0])

finite = st.floats(-10, 10, allow_nan=False)
dq_strategy = st.lists(finite, min_size=8, max_size=8).map(DualQuaternion)


def test_unit_products():
    assert dq_mul(I, J) == K
    assert dq_mul(J, I) == -K
    assert dq_mul(I, I) == -ONE
    assert dq_mul(dq_mul(I, J), K) == -ONE
    assert dq_mul(EPS * I, EPS * J) == DualQuaternion.zero()


def test_eps_commutes_with_units():
    for u in (I, J, K):
        assert dq_mul(EPS, u) == dq_mul(u, EPS)


@given(dq_strategy)
def test_identity_is_neutral(q):
    assert dq_mul(ONE, q).allclose(q)
    assert dq_mul(q, ONE).allclose(q)


def test_conjugate_examples():
    assert dq_conj(I) == -I
    assert dq_conj(ONE + EPS * K) == ONE - EPS * K


def test_times_conjugate_is_dual_number(rng):
    for _ in range(100):
        q = DualQuaternion(rng.normal(size=8))
        c = dq_mul(q, dq_conj(q)).coeffs
        assert np.max(np.abs(c[[1, 2, 3, 5, 6, 7]])) <= 1e-12 * max(1.0, c[0])


def test_norm_examples():
    assert dq_norm(ONE) == DualNumber(1.0, 0.0)
    assert dq_norm(I + EPS * J) == DualNumber(1.0, 0.0)
    assert dq_norm(2.0 * ONE + 3.0 * (EPS * I)) == DualNumber(4.0, 0.0)
    assert dq_norm(ONE + 5.0 * EPS) == DualNumber(1.0, 10.0)


@settings(max_examples=50)
@given(dq_strategy, dq_strategy)
def test_norm_matches_product(a, b):
    n = dq_mul(a, dq_conj(a)).coeffs
    assert dq_norm(a).real == pytest.approx(n[0], abs=1e-9)
    assert dq_norm(a).eps == pytest.approx(n[4], abs=1e-9)
    # the primal norm is multiplicative
    assert dq_norm(dq_mul(a, b)).real == pytest.approx(dq_norm(a).real * dq_norm(b).real, rel=1e-10, abs=1e-9)


def test_inverse_examples(rng):
    assert dq_inverse(ONE) == ONE
    assert dq_inverse(I).allclose(-I)
    for _ in range(100):
        c = rng.normal(size=8)
        c[:4] /= np.linalg.norm(c[:4])
        q = DualQuaternion(c)
        assert np.linalg.norm(dq_mul(q, dq_inverse(q)).coeffs - ONE.coeffs) <= 1e-10
        assert np.linalg.norm(dq_mul(dq_inverse(q), q).coeffs - ONE.coeffs) <= 1e-10


def test_inverse_of_pure_dual_fails():
    with pytest.raises(NotInvertible):
        dq_inverse(EPS * I)
    with pytest.raises(ZeroDivisionError):
        dq_inverse(DualQuaternion.zero())


def test_algebra_laws(rng):
    for _ in range(100):
        a, b, c = (DualQuaternion(rng.normal(size=8)) for _ in range(3))
        scale = np.prod([np.linalg.norm(x.coeffs) for x in (a, b, c)])
        lhs = dq_mul(dq_mul(a, b), c).coeffs
        rhs = dq_mul(a, dq_mul(b, c)).coeffs
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale
        dist = dq_mul(a, b + c).coeffs - (dq_mul(a, b) + dq_mul(a, c)).coeffs
        assert np.linalg.norm(dist) <= 1e-12 * scale
        cc = dq_conj(dq_mul(a, b)).coeffs - dq_mul(dq_conj(b), dq_conj(a)).coeffs
        assert np.linalg.norm(cc) <= 1e-12 * np.linalg.norm(a.coeffs) * np.linalg.norm(b.coeffs)


def test_immutable():
    q = DualQuaternion(range(8))
    with pytest.raises(ValueError):
        q.coeffs[0] = 5.0


def test_projective_distance_scale_invariant(rng):
    q = DualQuaternion(rng.normal(size=8))
    assert projective_distance(q, -3.5 * q) <= 1e-15
    assert projective_distance(q, q + 0.1 * I) > 1e-3


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

def lin(h: DualQuaternion) -> DQPolynomial:
    return DQPolynomial.linear(h)


def test_poly_product_by_hand():
    P = dqpoly_mul(lin(I), lin(J))
    expected = DQPolynomial([ONE, -(I + J), K])
    assert P.allclose(expected)
    assert dqpoly_mul(P, DQPolynomial([ONE])).allclose(P)


def test_poly_degrees_add(rng):
    for _ in range(20):
        P = DQPolynomial(rng.normal(size=(rng.integers(1, 5), 8)))
        Q = DQPolynomial(rng.normal(size=(rng.integers(1, 5), 8)))
        assert dqpoly_mul(P, Q).degree == P.degree + Q.degree


def test_leading_zeros_stripped():
    P = DQPolynomial([DualQuaternion.zero(), ONE, I])
    assert P.degree == 1


def test_eval_examples(rng):
    assert dqpoly_eval(lin(I), 0.0) == -I
    assert dqpoly_eval(real_poly_to_dq([1.0, 0.0, 1.0]), 2.0) == 5.0 * ONE
    for _ in range(100):
        c = rng.normal(size=(rng.integers(1, 7), 8))
        t = rng.uniform(-3, 3)
        naive = sum(c[k] * t ** (len(c) - 1 - k) for k in range(len(c)))
        got = dqpoly_eval(DQPolynomial(c), t).coeffs
        assert np.linalg.norm(got - naive) <= 1e-12 * max(1.0, np.linalg.norm(naive))


def test_norm_polynomial_examples(rng):
    assert np.allclose(dqpoly_norm(lin(I)), [1.0, 0.0, 1.0])
    for _ in range(20):
        dqpoly_norm(expand(random_curve(rng)), tau_real=1e-12)
    with pytest.raises(NotRealNorm):
        dqpoly_norm(DQPolynomial([ONE, ONE + EPS]))  # constant 1 + eps has 2<x,y> != 0


def test_norm_is_multiplicative(rng):
    for _ in range(20):
        P = expand(random_curve(rng, n=2))
        Q = expand(random_curve(rng, n=1))
        lhs = dqpoly_norm(dqpoly_mul(P, Q))
        rhs = np.polymul(dqpoly_norm(P), dqpoly_norm(Q))
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_division_by_real_round_trip(rng):
    for _ in range(20):
        P = expand(random_curve(rng))
        M = np.polymul([1.0, rng.normal(), 3.0], [1.0, 0.0, 1.0])[:3]
        Q, R = dqpoly_div_real(P, M)
        assert R.degree < 2
        back = dqpoly_mul(Q, real_poly_to_dq(M)) + R
        assert back.allclose(P, 1e-10)
    Q, R = dqpoly_div_real(P, [2.0])
    assert (Q.coeffs * 2.0 == P.coeffs).all() and not R.coeffs.any()


def test_division_by_own_norm_factor(rng):
    P = expand(random_curve(rng))
    N = dqpoly_norm(P)
    roots = np.roots(N)
    z = roots[np.argmax(roots.imag)]
    M = [1.0, -2 * z.real, abs(z) ** 2]
    Q, R = dqpoly_div_real(P, M)
    assert (dqpoly_mul(Q, real_poly_to_dq(M)) + R).allclose(P, 1e-10)


def test_linear_division(rng):
    for _ in range(50):
        h = DualQuaternion(rng.normal(size=8))
        Q, r = dqpoly_div_linear(lin(h), h)
        assert Q.allclose(DQPolynomial([ONE])) and np.allclose(r.coeffs, 0.0)
        h1, h2 = DualQuaternion(rng.normal(size=8)), DualQuaternion(rng.normal(size=8))
        Q, r = dqpoly_div_linear(dqpoly_mul(lin(h1), lin(h2)), h2)
        assert np.max(np.abs(r.coeffs)) <= 1e-12 * 10
        assert Q.allclose(lin(h1), 1e-12)


def test_remainder_is_right_substitution(rng):
    for _ in range(50):
        P = DQPolynomial(rng.normal(size=(4, 8)))
        h = DualQuaternion(rng.normal(size=8))
        Q, r = dqpoly_div_linear(P, h)
        assert r.allclose(dqpoly_eval_right(P, h), 1e-10, 1e-10)
        back = dqpoly_mul(Q, lin(h)) + DQPolynomial([r])
        assert back.allclose(P, 1e-10)
