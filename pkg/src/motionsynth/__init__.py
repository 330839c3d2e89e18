"""Synthesis of overconstrained 6R linkages from target poses.

A factorized cubic motion curve on Study's quadric is evolved towards a set of
target poses and then factorized into revolute chains.
"""

from motionsynth.dualquat import DualNumber, DualQuaternion, DQPolynomial
from motionsynth.kinematics import FeatureCloud, Pose, PoseError
from motionsynth.motioncurve import AxisFactor, FactorizedCurve

__version__ = "0.1.0"

__all__ = [
    "AxisFactor",
    "DQPolynomial",
    "DualNumber",
    "DualQuaternion",
    "FactorizedCurve",
    "FeatureCloud",
    "Pose",
    "PoseError",
    "__version__",
]
