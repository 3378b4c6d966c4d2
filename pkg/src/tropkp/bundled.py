"""Worked configurations shipped with the package and a loader for combined documents.

A combined document holds ``curve``, ``components`` and optionally ``alpha``,
``c`` (the tau base point, vertex blocks first) and ``z`` (a theta argument
for limit checks).  Complex entries are ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Mapping

import numpy as np

from .component_data import ComponentData, _parse_complex, build_component_data, parse_components
from .degeneration import DegenerationFamily, assemble_family
from .graph_core import CycleBasis, TropicalCurve, cycle_basis, parse_tropical_curve
from .tau_kp import TauSpec
from .tropical_period import SymbolicPeriodMatrix, TropicalPeriodMatrix, period_matrix, symbolic_period_matrix

__all__ = ["Example", "EXAMPLES", "example_from_document", "load_example"]

EXAMPLES = ("single_loop", "two_loop", "theta_graph", "elliptic_loop")


@dataclass
class Example:
    name: str
    curve: TropicalCurve
    basis: CycleBasis
    B_C: TropicalPeriodMatrix
    B_sym: SymbolicPeriodMatrix
    data: ComponentData
    family: DegenerationFamily
    alpha: tuple[Fraction, ...]
    c: np.ndarray
    z: np.ndarray

    def spec(self, kind: str = "limit", **kw) -> TauSpec:
        return TauSpec(self.data, self.family, kw.pop("alpha", self.alpha), kw.pop("c", self.c), kind=kind, **kw)


def _vector(doc, key: str, n: int) -> np.ndarray:
    if key not in doc:
        return np.zeros(n, dtype=complex)
    vals = doc[key]
    if not isinstance(vals, list) or len(vals) != n:
        raise ValueError(f"{key}: expected a list of length {n}")
    return np.array([_parse_complex(v, f"{key}[{i}]") for i, v in enumerate(vals)], dtype=complex)


def example_from_document(doc: Mapping, name: str = "custom", order: int = 4) -> Example:
    curve = parse_tropical_curve(dict(doc["curve"]))
    basis = cycle_basis(curve)
    marked, base = parse_components(doc["components"])
    data = build_component_data(curve, basis, marked, base, order=order)
    B_C = period_matrix(curve, basis)
    alpha = tuple(Fraction(str(a)) for a in doc.get("alpha", [0] * basis.rank))
    return Example(name, curve, basis, B_C, symbolic_period_matrix(basis), data,
                   assemble_family(B_C, data), alpha,
                   _vector(doc, "c", data.genus), _vector(doc, "z", data.genus))


def load_example(name: str, order: int = 4) -> Example:
    if name not in EXAMPLES:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    text = resources.files("tropkp").joinpath("data").joinpath(f"{name}.json").read_text()
    return example_from_document(json.loads(text), name, order)
