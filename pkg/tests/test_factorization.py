import itertools

import numpy as np
import pytest

from motionsynth.dualquat import DQPolynomial, DualQuaternion, dqpoly_norm
from motionsynth.errors import IdenticalChains, NonGeneric, NotInvertible
from motionsynth.factorization import (
    OpenChain,
    QuadraticFactor,
    _remainder_zero,
    all_factorizations,
    axis_point,
    chain_axes,
    extract_rightmost,
    factorize,
    make_linkage,
    quadratic_factors,
    verify_chain,
)
from motionsynth.motioncurve import expand, factor_to_dq

from conftest import random_curve


def test_quadratic_factors_of_known_product():
    N = np.polymul(np.polymul([1, -2, 5], [1, 4, 13]), [1, 0, 1])
    qs = quadratic_factors(N)
    assert [v for q in qs for v in (q.b, q.c)] == pytest.approx([-2, 5, 0, 1, 4, 13])
    assert qs[0].vertex == pytest.approx(1.0)


def test_real_roots_are_not_generic():
    with pytest.raises(NonGeneric):
        quadratic_factors(np.polymul([1, -3, 2], [1, 0, 1]))
    with pytest.raises(NonGeneric):
        QuadraticFactor(-2.0, 1.0)
    with pytest.raises(NonGeneric):
        quadratic_factors([1.0, 2.0])


def test_own_factorization_is_found(rng):
    c = random_curve(rng)
    P = expand(c)
    chains = all_factorizations(P)
    assert len(chains) == 6
    own = [factor_to_dq(f)[0] for f in c.factors]
    matches = [
        ch for ch in chains
        if all(np.allclose(a.coeffs, b.coeffs, atol=1e-8) for a, b in zip(ch.joints, own))
    ]
    assert len(matches) == 1


def test_chains_reconstruct_polynomial(rng):
    P = expand(random_curve(rng))
    for ch in all_factorizations(P):
        assert verify_chain(ch, P) < 1e-9
        Q = ch.polynomial()
        assert np.allclose(Q.coeffs, P.coeffs, atol=1e-9 * P.scale())


def test_joint_zero_is_rightmost_root(rng):
    P = expand(random_curve(rng))
    q = quadratic_factors(dqpoly_norm(P))[0]
    h, Q = extract_rightmost(P, q)
    # t - h is a right factor and its norm is the chosen quadratic
    n = np.array([1.0, -2 * h.primal[0], h.primal @ h.primal])
    assert n == pytest.approx(q.coeffs)
    assert Q.degree == 2


def test_constant_remainder_has_no_zero():
    with pytest.raises(NotInvertible):
        _remainder_zero(DQPolynomial([DualQuaternion.real(1.0)]))


def test_factorize_rejects_bad_order(rng):
    P = expand(random_curve(rng))
    with pytest.raises(ValueError):
        factorize(P, order=(0, 0, 1))


def test_linkage_closes(rng):
    P = expand(random_curve(rng))
    chains = all_factorizations(P)
    for a, b in itertools.combinations(chains, 2):
        link = make_linkage(a, b)
        assert link.closure_residual < 1e-9
        assert len(link.joints) == 6
    with pytest.raises(IdenticalChains):
        make_linkage(chains[0], chains[0])


def test_axes_match_factor_axes(rng):
    c = random_curve(rng)
    chain = factorize(expand(c), quadratics=None, order=None)
    for d, m in chain_axes(chain):
        assert np.linalg.norm(d) == pytest.approx(1.0)
        assert d @ m == pytest.approx(0.0, abs=1e-9)
        q = axis_point(d, m)
        assert np.cross(d, q) == pytest.approx(m)
    own = [factor_to_dq(f)[0] for f in c.factors]
    ch = next(ch for ch in all_factorizations(expand(c))
              if np.allclose(ch.joints[0].coeffs, own[0].coeffs, atol=1e-8))
    d0, m0 = chain_axes(ch)[0]
    f0 = c.factors[0]
    assert abs(d0 @ f0.direction) == pytest.approx(np.linalg.norm(f0.direction))
    # the factor's point lies on the recovered axis
    assert np.cross(d0, f0.point) == pytest.approx(m0, abs=1e-8)


def test_chain_json_roundtrip(rng):
    ch = all_factorizations(expand(random_curve(rng)))[2]
    back = OpenChain.from_json(ch.to_json())
    assert back.order == ch.order
    assert back(0.3).allclose(ch(0.3))
