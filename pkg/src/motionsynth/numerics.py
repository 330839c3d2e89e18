"""Univariate polynomial roots and minimum-norm least squares.

Polynomials are 1-D coefficient arrays, highest degree first (numpy's
``polyval`` convention).
"""
from __future__ import annotations

import math

import numpy as np

from motionsynth.errors import ConditioningFailure


def trim(p, rel: float = 0.0) -> np.ndarray:
    """Drop leading coefficients that are zero (or below ``rel`` * max)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    scale = np.max(np.abs(p)) if p.size else 0.0
    k = 0
    while k < p.size - 1 and abs(p[k]) <= rel * scale:
        k += 1
    return p[k:]


def _scale_factor(p: np.ndarray) -> float:
    """Variable scaling sigma such that roots of p(sigma*s) are O(1)."""
    n = p.size - 1
    nz = np.flatnonzero(p)
    last = nz[-1]
    if last == 0:
        return 1.0
    # geometric mean of root magnitudes of the nonzero-root part
    sigma = abs(p[last] / p[0]) ** (1.0 / (last)) if last else 1.0
    if not math.isfinite(sigma) or sigma == 0.0:
        return 1.0
    return sigma if n else 1.0


def _scaled_roots(p: np.ndarray) -> np.ndarray:
    sigma = _scale_factor(p)
    n = p.size - 1
    q = p * sigma ** np.arange(n, -1, -1)
    q = q / np.max(np.abs(q))
    return np.roots(q) * sigma


def _horner(coeffs: list[float], x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _newton_real(p: np.ndarray, dp: np.ndarray, r: float, iters: int = 8) -> float:
    pl, dpl = p.tolist(), dp.tolist()
    for _ in range(iters):
        f = _horner(pl, r)
        df = _horner(dpl, r)
        if df == 0.0:
            break
        step = f / df
        r_new = r - step
        if not math.isfinite(r_new):
            break
        if abs(step) <= 1e-15 * max(1.0, abs(r)):
            r = r_new
            break
        r = r_new
    return r


def _newton_complex(p: np.ndarray, dp: np.ndarray, z: complex, iters: int = 8) -> complex:
    for _ in range(iters):
        f = np.polyval(p, z)
        df = np.polyval(dp, z)
        if df == 0:
            break
        step = f / df
        z = z - step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return complex(z)


def root_residual_ok(p: np.ndarray, r: float, tol: float) -> bool:
    deg = p.size - 1
    bound = tol * float(np.max(np.abs(p))) * max(1.0, abs(r)) ** deg
    return abs(_horner(p.tolist(), r)) <= bound


def real_roots(p, lo: float = -math.inf, hi: float = math.inf, tol: float = 1e-9) -> list[float]:
    """Sorted real roots of ``p`` inside ``[lo, hi]``.

    Roots come from the companion matrix of the max-normalized, variable-scaled
    polynomial and are polished by Newton steps on the original coefficients.
    A candidate is kept only if it passes the residual bound
    ``|p(r)| <= tol * max|coeff| * max(1, |r|)**deg``.
    """
    p = trim(p)
    if p.size < 2:
        if p.size == 1 and p[0] == 0.0:
            raise ConditioningFailure("zero polynomial has no isolated roots")
        return []
    if not np.all(np.isfinite(p)):
        raise ConditioningFailure(f"non-finite coefficients: {p}")
    dp = np.polyder(p)
    roots = _scaled_roots(p)
    out = []
    for z in roots:
        # near-real eigenvalues only; clustered real roots may pick up
        # imaginary parts of order sqrt(eps)
        if abs(z.imag) > 1e-5 * max(1.0, abs(z.real)):
            continue
        r = _newton_real(p, dp, float(z.real))
        if not root_residual_ok(p, r, tol):
            continue
        if lo <= r <= hi:
            out.append(r)
    out.sort()
    merged: list[float] = []
    for r in out:
        if merged and abs(r - merged[-1]) <= 1e3 * tol * max(1.0, abs(r)):
            continue
        merged.append(r)
    return merged


def complex_roots(p) -> tuple[list[complex], list[float]]:
    """Roots of a real polynomial, split into conjugate pairs and real roots.

    Returns ``(pairs, reals)`` where each pair is represented by its member
    with positive imaginary part.
    """
    p = trim(p)
    if p.size < 2:
        return [], []
    dp = np.polyder(p)
    roots = [_newton_complex(p, dp, complex(z)) for z in _scaled_roots(p)]
    upper = sorted((z for z in roots if z.imag > 0), key=lambda z: (z.real, z.imag))
    lower = [z for z in roots if z.imag < 0]
    reals = sorted(z.real for z in roots if z.imag == 0)
    pairs = []
    for z in upper:
        if not lower:
            reals.append(z.real)
            continue
        k = min(range(len(lower)), key=lambda i: abs(lower[i] - z.conjugate()))
        w = lower.pop(k)
        pairs.append(complex(0.5 * (z.real + w.real), 0.5 * (z.imag - w.imag)))
    reals.extend(z.real for z in lower)
    return pairs, sorted(reals)


def lstsq_min_norm(A, b, rcond: float = 1e-10) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares solution of ``A x = b`` and the numerical rank.

    Singular values below ``rcond`` times the largest one are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=rcond)
    return x, int(rank)
