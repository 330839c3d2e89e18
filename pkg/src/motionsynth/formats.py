"""File formats: pose lists, shape vectors, chains and CSV reports."""
from __future__ import annotations

import csv
import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from motionsynth.dualquat import DualQuaternion
from motionsynth.evolution import TargetSet
from motionsynth.motioncurve import FactorizedCurve


def parse_number(value) -> float:
    """Decimal number or ``"p/q"`` fraction string."""
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    raise ValueError(f"not a number: {value!r}")


def parse_poses(doc) -> list[DualQuaternion]:
    """List of 8-element ``[x0, x1, x2, x3, y0, y1, y2, y3]`` entries."""
    if not isinstance(doc, list):
        raise ValueError("pose document must be a JSON list")
    out = []
    for k, row in enumerate(doc):
        if not isinstance(row, list) or len(row) != 8:
            raise ValueError(f"pose {k + 1} must have 8 Study parameters")
        out.append(DualQuaternion([parse_number(v) for v in row]))
    return out


def load_poses(path) -> list[DualQuaternion]:
    return parse_poses(json.loads(Path(path).read_text()))


def load_targets(path) -> TargetSet:
    return TargetSet.from_dual_quaternions(load_poses(path))


def reference_targets() -> TargetSet:
    """Eleven target poses bundled with the package (the first is the identity)."""
    text = resources.files("motionsynth.data").joinpath("reference_targets.json").read_text()
    return TargetSet.from_dual_quaternions(parse_poses(json.loads(text)))


def reference_curve() -> FactorizedCurve:
    """Cubic curve fitted to ``reference_targets`` (shape parameters to three decimals)."""
    text = resources.files("motionsynth.data").joinpath("reference_curve.json").read_text()
    return FactorizedCurve.from_json(json.loads(text))


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def shape_table(c: FactorizedCurve) -> dict:
    """Shape parameters keyed like ``x0 .. x3, x5 .. x7`` per factor, plus the JSON form."""
    names = ["0", "1", "2", "3", "5", "6", "7"]
    letters = "xyzuvw"
    table = {}
    for k, f in enumerate(c.factors):
        label = letters[k] if k < len(letters) else f"f{k}_"
        table.update({f"{label}{n}": float(v) for n, v in zip(names, f.params)})
    doc = c.to_json()
    doc["table"] = table
    return doc


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
