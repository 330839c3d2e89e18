"""Curve evolution towards target poses.

Each iteration computes foot points of the targets on the curve (closest
points in the feature-point metric), linearizes the curve point at each foot
parameter with respect to the shape vector and solves the stacked system
``J dSp = TP - FP`` in Gram-orthonormal coordinates by least squares.

The squared distance from a fixed target to the curve point at ``t`` is a
rational function ``G(t) / nu(t)`` where ``nu = |primal(C(t))|^2``; its
critical points are the real roots of ``G' nu - G nu'`` (degree <= 4n - 2).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from motionsynth.dualquat import DQPolynomial, DualQuaternion, dqpoly_mul, norm_residual
from motionsynth.errors import (
    ConditioningFailure,
    DegenerateCurve,
    DegenerateDirection,
    NoCandidate,
    OffQuadric,
)
from motionsynth.kinematics import FeatureCloud, dq_to_embedding, dq_to_pose
from motionsynth.motioncurve import (
    TAU_DIR,
    FactorizedCurve,
    curve_embedding,
    curve_embedding_ext,
    embedding_t_derivative,
    expand,
    factor_to_dq,
    shape_jacobian,
)
from motionsynth.numerics import lstsq_min_norm, real_roots

logger = logging.getLogger(__name__)

# raw Study residual accepted for input targets before projection onto the quadric
TAU_STUDY_INPUT = 1e-2
MAX_HALVINGS = 8


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------

def project_to_quadric(q: DualQuaternion) -> DualQuaternion:
    """Remove the dual component along the primal part; the pose is unchanged."""
    p, d = q.primal, q.dual
    return DualQuaternion.from_parts(p, d - (p @ d) / (p @ p) * p)


@dataclass(frozen=True)
class TargetSet:
    """Target poses in visiting order, with cached embeddings."""

    poses: tuple[DualQuaternion, ...]
    embeddings: np.ndarray = field(repr=False)

    @classmethod
    def from_dual_quaternions(cls, qs: Sequence[DualQuaternion], tau_study: float = TAU_STUDY_INPUT) -> TargetSet:
        projected = []
        for k, q in enumerate(qs):
            p, d = q.primal, q.dual
            pn = np.linalg.norm(p)
            if abs(p @ d) > tau_study * (pn * np.linalg.norm(d) + pn * pn):
                raise OffQuadric(f"target {k + 1} violates the Study condition")
            projected.append(project_to_quadric(q))
        emb = np.array([dq_to_embedding(q) for q in projected]).reshape(-1, 12)
        emb.setflags(write=False)
        return cls(tuple(projected), emb)

    def __len__(self):
        return len(self.poses)

    def pose(self, m: int):
        return dq_to_pose(self.poses[m])


# ---------------------------------------------------------------------------
# polynomial pieces of the embedded curve
# ---------------------------------------------------------------------------

_HAMILTON = [
    # (out, i, j, sign): out += sign * a_i * b_j
    (0, 0, 0, 1), (0, 1, 1, -1), (0, 2, 2, -1), (0, 3, 3, -1),
    (1, 0, 1, 1), (1, 1, 0, 1), (1, 2, 3, 1), (1, 3, 2, -1),
    (2, 0, 2, 1), (2, 1, 3, -1), (2, 2, 0, 1), (2, 3, 1, 1),
    (3, 0, 3, 1), (3, 1, 2, 1), (3, 2, 1, -1), (3, 3, 0, 1),
]


def _qpoly_mul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of quaternion-valued polynomials given as (4, k) coefficient rows."""
    out = np.zeros((4, A.shape[1] + B.shape[1] - 1))
    for o, i, j, s in _HAMILTON:
        out[o] += s * np.convolve(A[i], B[j])
    return out


def _pad(p: np.ndarray, size: int) -> np.ndarray:
    return np.concatenate([np.zeros(size - p.size), p]) if p.size < size else p


@dataclass(frozen=True)
class CurvePolynomials:
    """``nu``, the 12 embedding numerators ``N = nu * E`` and ``H = <N, N>_G / nu``."""

    nu: np.ndarray
    numer: np.ndarray
    self_term: np.ndarray
    shift: float = 0.0
    scale: float = 1.0

    @classmethod
    def from_curve(cls, c: FactorizedCurve, cloud: FeatureCloud, local: bool = True) -> CurvePolynomials:
        """Polynomials in ``s = (t - shift) / scale``.

        With ``local`` the variable is centred on the factors' vertices and
        scaled by their widths, which keeps the monomial coefficients well
        conditioned near the interesting parameter range.
        """
        shift, scale = (_local_frame(c) if local else (0.0, 1.0))
        P = _expand_local(c, shift, scale)
        p = P.primal_poly()
        d = P.dual_poly()
        conv = np.convolve
        nu = sum(conv(p[i], p[i]) for i in range(4))
        w, x, y, z = p
        rot = [
            conv(w, w) + conv(x, x) - conv(y, y) - conv(z, z),
            2 * (conv(x, y) - conv(w, z)),
            2 * (conv(x, z) + conv(w, y)),
            2 * (conv(x, y) + conv(w, z)),
            conv(w, w) - conv(x, x) + conv(y, y) - conv(z, z),
            2 * (conv(y, z) - conv(w, x)),
            2 * (conv(x, z) - conv(w, y)),
            2 * (conv(y, z) + conv(w, x)),
            conv(w, w) - conv(x, x) - conv(y, y) + conv(z, z),
        ]
        pbar = p * np.array([1.0, -1.0, -1.0, -1.0])[:, None]
        trans = 2.0 * _qpoly_mul(d, pbar)[1:]
        size = nu.size
        numer = np.array([_pad(r, size) for r in rot] + [_pad(r, size) for r in trans])
        s = np.concatenate([[0.0], cloud.first_moment])[:, None]
        ds_pbar = _qpoly_mul(_qpoly_mul(d, s), pbar)[0]
        dnorm = sum(conv(d[i], d[i]) for i in range(4))
        H = np.trace(cloud.second_moment) * nu - 4.0 * _pad(ds_pbar, size) + 4.0 * cloud.n * _pad(dnorm, size)
        return cls(nu, numer, H, shift, scale)

    def embedding(self, t: float) -> np.ndarray:
        """R^12 curve point at global parameter ``t`` (``inf`` gives the limit pose)."""
        if math.isinf(t):
            return self.numer[:, 0] / self.nu[0]
        s = self.to_local(t)
        return np.polyval(self.numer.T, s) / np.polyval(self.nu, s)

    def to_local(self, t: float) -> float:
        return (t - self.shift) / self.scale

    def to_global(self, s: float) -> float:
        return self.shift + self.scale * s


def _local_frame(c: FactorizedCurve) -> tuple[float, float]:
    if not c.factors:
        return 0.0, 1.0
    h0 = np.array([f.h0 for f in c.factors])
    w = np.array([f.scale for f in c.factors])
    return float(np.mean(h0)), float(max(np.sqrt(np.mean(w**2)), np.ptp(h0), 1e-12))


def _expand_local(c: FactorizedCurve, shift: float, scale: float) -> DQPolynomial:
    """Expanded curve as a polynomial in ``s`` where ``t = shift + scale * s``."""
    P = DQPolynomial([DualQuaternion.real(1.0)])
    for f in c.factors:
        h, norm = factor_to_dq(f)
        lin = np.zeros((2, 8))
        lin[0, 0] = scale
        lin[1] = -h.coeffs
        lin[1, 0] += shift
        P = dqpoly_mul(P, DQPolynomial(lin / norm))
    return P


def footnormal_polynomial(
    c: FactorizedCurve, target, cloud: FeatureCloud, polys: CurvePolynomials | None = None
) -> np.ndarray:
    """Polynomial whose real roots are the critical parameters of the target distance.

    ``target`` is an R^12 embedding. The returned polynomial is
    ``G' nu - G nu'`` with ``G = nu * |target - C(t)|_G^2``; the common factor
    ``nu`` of the cleared foot-normal equation is already cancelled.
    Without ``polys`` the polynomial is in ``t`` itself; otherwise it is in
    the local variable of ``polys``.
    """
    if polys is None:
        polys = CurvePolynomials.from_curve(c, cloud, local=False)
    e = np.asarray(target, dtype=float)
    Ge = cloud.gram @ e
    G = (e @ Ge) * polys.nu - 2.0 * (Ge @ polys.numer) + polys.self_term
    S = np.convolve(np.polyder(G), polys.nu) - np.convolve(G, np.polyder(polys.nu))
    # G and nu share their degree, so the top coefficient cancels analytically
    if S.size == 2 * polys.nu.size - 2 and S.size > 1:
        S = S[1:]
    return S


def distance_polynomial(c: FactorizedCurve, target, cloud: FeatureCloud, polys: CurvePolynomials | None = None):
    """``(G, nu)`` with squared distance ``G(t) / nu(t)``."""
    if polys is None:
        polys = CurvePolynomials.from_curve(c, cloud, local=False)
    e = np.asarray(target, dtype=float)
    Ge = cloud.gram @ e
    return (e @ Ge) * polys.nu - 2.0 * (Ge @ polys.numer) + polys.self_term, polys.nu


# ---------------------------------------------------------------------------
# foot points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FootpointResult:
    t: float
    embedding: np.ndarray = field(repr=False)
    distance: float
    clamped: bool = False


def _sq_distance(cloud: FeatureCloud, target: np.ndarray, emb: np.ndarray) -> float:
    diff = target - emb
    return max(0.0, float(diff @ cloud.gram @ diff))


def _foot_distance(c: FactorizedCurve, cloud: FeatureCloud, target: np.ndarray, t: float) -> tuple[np.ndarray, float]:
    """Embedding at ``t`` and its metric distance to ``target``.

    The difference is formed in extended precision: translations can be
    hundreds of units while the distances shrink towards the rounding level
    near convergence, and the line search compares such distances.
    """
    ext = curve_embedding_ext(c, t)
    diff = np.asarray(target, dtype=np.longdouble) - ext
    d2 = diff @ (cloud.gram.astype(np.longdouble) @ diff)
    return ext.astype(float), math.sqrt(max(0.0, float(d2)))


def default_window(c: FactorizedCurve, pad: float = 5.0) -> tuple[float, float]:
    """Span of the factors' vertex abscissas ``x0`` padded by ``pad`` factor widths."""
    h0 = np.array([f.h0 for f in c.factors])
    w = max(f.scale for f in c.factors) if c.factors else 1.0
    return float(h0.min() - pad * max(w, 1.0)), float(h0.max() + pad * max(w, 1.0))


def footpoint(
    c: FactorizedCurve,
    target,
    cloud: FeatureCloud,
    interval: tuple[float, float] | None = None,
    polys: CurvePolynomials | None = None,
    allow_infinity: bool | None = None,
) -> FootpointResult:
    """Closest curve point to ``target`` (an embedding), optionally within ``interval``.

    Candidates are the real critical parameters inside the interval plus its
    finite end points; the point at infinity (the limit pose of the curve) is
    a candidate when the interval is unbounded above. The result is flagged
    ``clamped`` when an interval end point wins.
    """
    target = np.asarray(target, dtype=float)
    lo, hi = (-math.inf, math.inf) if interval is None else (float(interval[0]), float(interval[1]))
    if allow_infinity is None:
        allow_infinity = math.isinf(hi)
    if polys is None:
        polys = CurvePolynomials.from_curve(c, cloud)
    cands: list[tuple[float, bool]] = []
    try:
        S = footnormal_polynomial(c, target, cloud, polys)
        scale = np.max(np.abs(S))
        if scale == 0.0:
            raise ConditioningFailure("foot-normal polynomial vanishes identically")
        roots = real_roots(S / scale, polys.to_local(lo), polys.to_local(hi))
        cands.extend((polys.to_global(r), False) for r in roots)
    except ConditioningFailure:
        wlo, whi = default_window(c)
        wlo, whi = max(wlo, lo), min(whi, hi)
        if wlo < whi:
            cands.extend((r, False) for r in _sampled_minima(c, target, cloud, wlo, whi))
    if interval is not None:
        cands.extend((b, True) for b in (lo, hi) if math.isfinite(b))
    if allow_infinity:
        cands.append((math.inf, interval is not None))
    if not cands:
        raise NoCandidate("no critical point or boundary available")
    best = None
    for t, clamped in cands:
        emb = polys.embedding(t)
        d2 = _sq_distance(cloud, target, emb)
        if best is None or d2 < best[0]:
            best = (d2, t, emb, clamped)
    _, t, _, clamped = best
    # re-evaluate through the factor product, which is more accurate than the expanded form
    emb, dist = _foot_distance(c, cloud, target, t)
    return FootpointResult(t, emb, dist, clamped)


def _sampled_minima(c, target, cloud, lo, hi, samples: int = 2048) -> list[float]:
    from scipy.optimize import minimize_scalar

    ts = np.linspace(lo, hi, samples)
    vals = np.array([_sq_distance(cloud, target, curve_embedding(c, t)) for t in ts])
    out = []
    for k in range(1, samples - 1):
        if vals[k] <= vals[k - 1] and vals[k] <= vals[k + 1]:
            r = minimize_scalar(
                lambda t: _sq_distance(cloud, target, curve_embedding(c, t)),
                bounds=(ts[k - 1], ts[k + 1]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            out.append(float(r.x))
    return out


def foot_normal_residual(c: FactorizedCurve, target, t: float, cloud: FeatureCloud) -> float:
    """``|<TP - C(t), C'(t)>_G|`` normalized by ``|TP - C(t)|_G |C'(t)|_G``."""
    diff = np.asarray(target) - curve_embedding(c, t)
    tan = embedding_t_derivative(c, t)
    G = cloud.gram
    denom = math.sqrt(max(diff @ G @ diff, 0.0) * max(tan @ G @ tan, 0.0))
    return abs(float(diff @ G @ tan)) / denom if denom > 0 else 0.0


def _shrink(lo: float, hi: float) -> tuple[float, float]:
    """Open interval ``(lo, hi)`` as a slightly smaller closed one."""
    if math.isfinite(lo):
        lo = lo + 1e-9 * max(1.0, abs(lo))
    if math.isfinite(hi):
        hi = hi - 1e-9 * max(1.0, abs(hi))
    return lo, hi


def ordered_footpoints(
    c: FactorizedCurve,
    targets: TargetSet,
    cloud: FeatureCloud,
    polys: CurvePolynomials | None = None,
    free: Sequence[FootpointResult] | None = None,
) -> list[FootpointResult]:
    """Foot points constrained to visit the targets in list order.

    The two best approximated targets are kept as anchors and fix the
    direction of travel (increasing or decreasing parameter). The others are
    swept outwards from the anchors, each restricted to the parameter range
    between its already placed neighbour and the next anchor or the end of
    the curve.

    The parameter line closes up at infinity, so an anchor at ``t = inf``
    can serve as either end. In that case both directions are tried and the
    one with the smaller objective wins.
    """
    if polys is None:
        polys = CurvePolynomials.from_curve(c, cloud)
    if free is None:
        free = [footpoint(c, e, cloud, polys=polys) for e in targets.embeddings]
    m = len(free)
    if m < 2:
        return list(free)
    ts = [f.t for f in free]
    by_dist = sorted(range(m), key=lambda k: (free[k].distance, k))
    a, b = sorted(by_dist[:2])
    if ts[a] == ts[b]:
        a, b = sorted((int(np.argmin(ts)), int(np.argmax(ts))))
        if ts[a] == ts[b]:
            return list(free)
    if math.isinf(ts[a]) or math.isinf(ts[b]):
        options = [_sweep(c, targets, cloud, polys, free, a, b, s) for s in (1.0, -1.0)]
        return min(options, key=lambda feet: (sum(f.distance**2 for f in feet)))
    return _sweep(c, targets, cloud, polys, free, a, b, 1.0 if ts[b] > ts[a] else -1.0)


def _sweep(c, targets, cloud, polys, free, a: int, b: int, sign: float) -> list[FootpointResult]:
    """Place all non-anchor targets for one direction of travel.

    Work in the key ``sign * t`` so that the required order is increasing.
    An infinite parameter is the start of the curve for targets up to the
    first anchor and its end afterwards.
    """
    m = len(free)
    out: list[FootpointResult | None] = [None] * m
    out[a], out[b] = free[a], free[b]

    def key(k: int) -> float:
        t = out[k].t
        if math.isinf(t):
            return -math.inf if k <= a else math.inf
        return sign * t

    def place(k: int, key_lo: float, key_hi: float) -> None:
        lo, hi = (key_lo, key_hi) if sign > 0 else (-key_hi, -key_lo)
        if key_lo >= key_hi:
            # empty interval: pin to the neighbour
            t = hi if sign > 0 else lo
            emb, dist = _foot_distance(c, cloud, targets.embeddings[k], t)
            out[k] = FootpointResult(t, emb, dist, True)
            return
        if lo < free[k].t < hi:
            out[k] = free[k]
            return
        lo, hi = _shrink(lo, hi)
        out[k] = footpoint(c, targets.embeddings[k], cloud, (lo, hi), polys)

    for k in range(a + 1, b):
        place(k, key(k - 1), key(b))
    for k in range(b + 1, m):
        place(k, key(k - 1), math.inf)
    for k in range(a - 1, -1, -1):
        place(k, -math.inf, key(k + 1))
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

@dataclass
class EvolutionConfig:
    max_iters: int = 500
    stop_tol: float = 1e-6
    lambda_rule: Literal["paper", "clamped"] = "clamped"
    lambda_cap: float = 1.0
    ordering: Literal["none", "successive"] = "successive"
    step_rule: Literal["projected", "plain"] = "projected"
    seed: int = 0
    provisional_iters: int = 25
    rcond: float = 1e-10
    cloud: list | None = None
    init_ranges: dict | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol <= 0 or self.lambda_cap <= 0:
            raise ValueError("tolerances must be positive")
        if self.lambda_rule not in ("paper", "clamped"):
            raise ValueError(f"unknown lambda_rule {self.lambda_rule!r}")
        if self.ordering not in ("none", "successive"):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.step_rule not in ("projected", "plain"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")

    @classmethod
    def from_json(cls, doc: dict) -> EvolutionConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> EvolutionConfig:
        return cls.from_json(json.loads(Path(path).read_text()))

    def feature_cloud(self) -> FeatureCloud:
        return FeatureCloud(self.cloud) if self.cloud is not None else FeatureCloud.default()


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    step_inf: float
    lam: float
    distances: list[float]
    accepted: bool
    rank: int
    ordered: bool
    study_residual: float
    params: list[float] = field(default_factory=list, repr=False)


@dataclass
class EvolutionTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "running"

    def __len__(self):
        return len(self.records)

    def to_csv(self, path) -> None:
        m = len(self.records[0].distances) if self.records else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["iteration", "objective", "step_inf", "lambda", "accepted", "rank", "ordered", "study_residual"]
                + [f"dist_{k + 1}" for k in range(m)]
            )
            for r in self.records:
                w.writerow(
                    [r.iteration, repr(r.objective), repr(r.step_inf), repr(r.lam), int(r.accepted), r.rank,
                     int(r.ordered), repr(r.study_residual)]
                    + [repr(d) for d in r.distances]
                )


def compute_footpoints(c, targets: TargetSet, cloud: FeatureCloud, ordered: bool) -> list[FootpointResult]:
    polys = CurvePolynomials.from_curve(c, cloud)
    free = [footpoint(c, e, cloud, polys=polys) for e in targets.embeddings]
    if not ordered:
        return free
    return ordered_footpoints(c, targets, cloud, polys, free)


def objective(c: FactorizedCurve, targets: TargetSet, cloud: FeatureCloud, ordered: bool = False) -> float:
    """Sum of squared metric distances from targets to their foot points."""
    return float(sum(f.distance**2 for f in compute_footpoints(c, targets, cloud, ordered)))


def literal_lambda(step_inf: float) -> float:
    return max(10.0 / step_inf, 1.0) if step_inf > 0 else 1.0


def step_lambda(step_inf: float, config: EvolutionConfig) -> float:
    if config.lambda_rule == "paper":
        return literal_lambda(step_inf)
    # literal rule with min instead of max: steps limited to 10 in the max norm
    return min(10.0 / step_inf, config.lambda_cap) if step_inf > 0 else config.lambda_cap


def solve_shape_velocity(
    c: FactorizedCurve,
    targets: TargetSet,
    feet: Sequence[FootpointResult],
    cloud: FeatureCloud,
    project_tangent: bool = True,
    rcond: float = 1e-10,
) -> tuple[np.ndarray, int, float]:
    """Least-squares shape velocity, numerical rank and residual norm.

    With ``project_tangent`` each unclamped block loses its component along
    the curve tangent at the foot point. The foot parameter is re-optimized
    on the next iteration anyway, so that component only moves the foot point
    along the curve; dropping it turns the reparametrizations ``t -> a t + b``
    into exact null directions that the min-norm solution ignores.
    """
    U = cloud.orthonormalizer()
    rows, rhs = [], []
    for e, f in zip(targets.embeddings, feet):
        if math.isinf(f.t):
            continue
        A = U @ shape_jacobian(c, f.t)
        if project_tangent and not f.clamped:
            tau = U @ embedding_t_derivative(c, f.t)
            tt = float(tau @ tau)
            if tt > 0.0:
                A = A - np.outer(tau, tau @ A) / tt
        rows.append(A)
        rhs.append(U @ (e - f.embedding))
    if not rows:
        return np.zeros(c.shape.size), 0, 0.0
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    x, rank = lstsq_min_norm(A, b, rcond)
    return x, rank, float(np.linalg.norm(A @ x - b))


def _try_curve(shape: np.ndarray) -> FactorizedCurve | None:
    try:
        c = FactorizedCurve.from_shape(shape)
    except DegenerateDirection:
        return None
    if min(f.scale for f in c.factors) < TAU_DIR * 1e3:
        return None
    return c


def evolution_step(
    c: FactorizedCurve,
    targets: TargetSet,
    config: EvolutionConfig,
    cloud: FeatureCloud,
    ordered: bool = False,
    feet: Sequence[FootpointResult] | None = None,
    iteration: int = 0,
) -> tuple[FactorizedCurve, IterationRecord, bool]:
    """One safeguarded update ``Sp <- Sp + lambda * dSp``.

    Returns the new curve, the record, and whether the line search failed.
    Halves lambda up to eight times while the objective would increase.
    """
    if feet is None:
        feet = compute_footpoints(c, targets, cloud, ordered)
    obj = float(sum(f.distance**2 for f in feet))
    dsp, rank, _ = solve_shape_velocity(
        c, targets, feet, cloud, config.step_rule == "projected", config.rcond
    )
    step_inf = float(np.max(np.abs(dsp))) if dsp.size else 0.0
    lam = step_lambda(step_inf, config)
    _, study = norm_residual(expand(c))
    record = IterationRecord(
        iteration, obj, step_inf, lam, [f.distance for f in feet], False, rank, ordered, study, c.shape.tolist()
    )
    if step_inf < config.stop_tol:
        return c, record, False
    shape = c.shape
    for _ in range(MAX_HALVINGS + 1):
        cand = _try_curve(shape + lam * dsp)
        if cand is not None:
            try:
                new_obj = objective(cand, targets, cloud, ordered)
            except (DegenerateCurve, NoCandidate, ConditioningFailure):
                new_obj = math.inf
            if new_obj <= obj:
                record.lam = lam
                record.accepted = True
                return cand, record, False
        lam *= 0.5
    record.lam = lam * 2.0
    return c, record, True


def evolve(
    c0: FactorizedCurve, targets: TargetSet, config: EvolutionConfig, cloud: FeatureCloud | None = None
) -> tuple[FactorizedCurve, EvolutionTrace]:
    """Iterate ``evolution_step`` until the step is below ``stop_tol``.

    Ordering constraints switch on after ``provisional_iters`` iterations.
    The trace status is ``converged``, ``max_iters`` or ``line_search_failed``;
    the returned curve is the iterate with the smallest recorded objective.
    """
    if cloud is None:
        cloud = config.feature_cloud()
    trace = EvolutionTrace()
    c = c0
    best = (math.inf, c0)
    phase_ordered = False
    wants_order = config.ordering == "successive"
    for it in range(config.max_iters):
        if wants_order and not phase_ordered and it >= config.provisional_iters:
            phase_ordered = True
            # objective definition changes here; restart the best-iterate bookkeeping
            best = (math.inf, c)
        c_new, rec, failed = evolution_step(c, targets, config, cloud, phase_ordered, iteration=it)
        trace.records.append(rec)
        if rec.objective < best[0]:
            best = (rec.objective, c)
        if wants_order and not phase_ordered and (failed or rec.step_inf < config.stop_tol):
            # the provisional curve has settled early; continue with ordering
            logger.info("provisional phase ended at iteration %d", it)
            phase_ordered = True
            best = (math.inf, c)
            continue
        if rec.step_inf < config.stop_tol:
            trace.status = "converged"
            break
        if failed:
            trace.status = "line_search_failed"
            logger.info("line search failed at iteration %d", it)
            break
        c = c_new
    else:
        trace.status = "max_iters"
    if trace.status == "max_iters":
        feet = compute_footpoints(c, targets, cloud, phase_ordered)
        obj = float(sum(f.distance**2 for f in feet))
        if obj < best[0]:
            best = (obj, c)
    return best[1], trace


def default_ranges(targets: TargetSet | None = None) -> dict:
    reach = 1.0
    if targets is not None and len(targets):
        reach = max(1.0, float(np.max(np.linalg.norm(targets.embeddings[:, 9:], axis=1))))
    return {"h0": (-1.0, 1.0), "d": (-1.0, 1.0), "p": (-reach, reach)}


def random_init(seed: int, ranges: dict | None = None, n: int = 3) -> np.ndarray:
    """Deterministic random shape vector; directions are redrawn until not too short."""
    ranges = {**default_ranges(), **(ranges or {})}
    rng = np.random.default_rng(seed)
    out = []
    dmin = 1e-3 * max(abs(v) for v in ranges["d"])
    for _ in range(n):
        h0 = rng.uniform(*ranges["h0"])
        d = rng.uniform(*ranges["d"], size=3)
        while np.linalg.norm(d) < dmin:
            d = rng.uniform(*ranges["d"], size=3)
        p = rng.uniform(*ranges["p"], size=3)
        out.append(np.concatenate([[h0], d, p]))
    return np.concatenate(out)
