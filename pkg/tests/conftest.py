from __future__ import annotations

import sys

import numpy as np
import pytest

from motionsynth.dualquat import DualQuaternion, qmul
from motionsynth.motioncurve import AxisFactor, FactorizedCurve


def random_factor(rng, h0_scale=3.0, p_scale=5.0) -> AxisFactor:
    d = rng.normal(size=3)
    while np.linalg.norm(d) < 0.2:
        d = rng.normal(size=3)
    return AxisFactor(rng.uniform(-h0_scale, h0_scale), d, rng.uniform(-p_scale, p_scale, size=3))


def random_curve(rng, n=3, **kw) -> FactorizedCurve:
    return FactorizedCurve(tuple(random_factor(rng, **kw) for _ in range(n)))


def random_rigid_dq(rng, trans_scale=3.0) -> DualQuaternion:
    """Unit dual quaternion of a random pose (on the Study quadric)."""
    p = rng.normal(size=4)
    p /= np.linalg.norm(p)
    a = rng.uniform(-trans_scale, trans_scale, size=3)
    d = 0.5 * qmul(np.r_[0.0, a], p)
    return DualQuaternion.from_parts(p, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
