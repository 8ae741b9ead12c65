"""Declarative N-electron models: sums of products of exponential-polynomial orbitals.

An orbital is a finite sum of primitives

    c * d_1**a * d_2**b * d_3**c * |d|**n * exp(-zeta |d|),   d = x - R_center,

and a model is ``psi(x_1..x_N) = sum_t c_t prod_j phi_{t,j}(x_j)``.  Values
and gradients are exact, which keeps the density engine's gradient handles
free of differencing error.  Descriptions are plain JSON::

    {"nuclei": [{"position": [0, 0, 0], "charge": 1}],
     "electrons": 2, "energy": -0.5, "symmetry": "even",
     "orbitals": {"a": [{"coefficient": 1, "exponent": 0.5}]},
     "terms": [{"coefficient": 1, "orbitals": ["a", "a"]}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import NuclearFrame, WavefunctionModel, make_frame
from .errors import DomainError


@dataclass(frozen=True)
class Primitive:
    coefficient: float = 1.0
    exponent: float = 0.0
    powers: tuple = (0, 0, 0)
    radial_power: int = 0
    center: int = 0


class Orbital:
    def __init__(self, primitives, frame: NuclearFrame):
        self.primitives = [p if isinstance(p, Primitive) else Primitive(**_prim_kw(p)) for p in primitives]
        for p in self.primitives:
            if not 0 <= p.center < len(frame):
                raise DomainError(f"orbital centre {p.center} not in frame")
            if p.exponent < 0 or min(p.powers) < 0 or p.radial_power < 0:
                raise DomainError("orbital exponents and powers must be non-negative")
        self.frame = frame

    def evaluate(self, x: np.ndarray):
        """Value ``(...)`` and gradient ``(..., 3)`` at points ``(..., 3)``."""
        val = np.zeros(x.shape[:-1])
        grad = np.zeros(x.shape)
        for p in self.primitives:
            d = x - self.frame.positions[p.center]
            r = np.linalg.norm(d, axis=-1)
            safe = np.where(r == 0, 1.0, r)
            unit = np.where((r == 0)[..., None], 0.0, d / safe[..., None])
            ex = np.exp(-p.exponent * r)
            rad = r ** p.radial_power * ex
            drad = (p.radial_power * safe ** (p.radial_power - 1) * (r > 0) if p.radial_power else 0.0) * ex
            drad = drad - p.exponent * rad
            mono = np.ones(r.shape)
            dmono = np.zeros(x.shape)
            for k, a in enumerate(p.powers):
                mono = mono * d[..., k] ** a
            for k, a in enumerate(p.powers):
                if a:
                    part = a * d[..., k] ** (a - 1)
                    for m, b in enumerate(p.powers):
                        if m != k:
                            part = part * d[..., m] ** b
                    dmono[..., k] = part
            val += p.coefficient * mono * rad
            grad += p.coefficient * (dmono * rad[..., None] + (mono * drad)[..., None] * unit)
        return val, grad


def _prim_kw(doc: dict) -> dict:
    return {
        "coefficient": float(doc.get("coefficient", 1.0)),
        "exponent": float(doc.get("exponent", 0.0)),
        "powers": tuple(int(a) for a in doc.get("powers", (0, 0, 0))),
        "radial_power": int(doc.get("radial_power", 0)),
        "center": int(doc.get("center", 0)),
    }


def build_model(frame, orbitals: dict, terms: list, energy: float, symmetry="none", name="model"):
    """Assemble a :class:`WavefunctionModel` from named orbitals and product terms."""
    orbs = {k: v if isinstance(v, Orbital) else Orbital(v, frame) for k, v in orbitals.items()}
    terms = [(float(t.get("coefficient", 1.0)), list(t["orbitals"])) for t in terms]
    if not terms:
        raise DomainError("model needs at least one product term")
    n = len(terms[0][1])
    if any(len(o) != n for _, o in terms):
        raise DomainError("all product terms must have one orbital per electron")
    for _, names in terms:
        for o in names:
            if o not in orbs:
                raise DomainError(f"unknown orbital {o!r}")

    def tables(c):
        c = np.asarray(c, dtype=float)
        cache = {}
        for j in range(n):
            for key in {names[j] for _, names in terms}:
                cache[key, j] = orbs[key].evaluate(c[..., j, :])
        return c, cache

    def value(c):
        c, cache = tables(c)
        out = np.zeros(c.shape[:-2])
        for coef, names in terms:
            prod = np.full(c.shape[:-2], coef)
            for j, key in enumerate(names):
                prod = prod * cache[key, j][0]
            out += prod
        return out

    def gradient(c):
        c, cache = tables(c)
        out = np.zeros(c.shape)
        for coef, names in terms:
            vals = [cache[key, j][0] for j, key in enumerate(names)]
            for j, key in enumerate(names):
                others = np.full(c.shape[:-2], coef)
                for i, v in enumerate(vals):
                    if i != j:
                        others = others * v
                out[..., j, :] += others[..., None] * cache[key, j][1]
        return out

    return WavefunctionModel(n, frame, float(energy), value, gradient, symmetry=symmetry, name=name)


def model_from_dict(doc: dict) -> WavefunctionModel:
    frame = NuclearFrame.from_dict(doc)
    model = build_model(
        frame,
        {k: [_prim_kw(p) for p in v] for k, v in doc["orbitals"].items()},
        doc["terms"],
        doc["energy"],
        symmetry=doc.get("symmetry", "none"),
        name=doc.get("name", "model"),
    )
    if "electrons" in doc and int(doc["electrons"]) != model.n_electrons:
        raise DomainError("declared electron count does not match the product terms")
    return model


def load_model(path) -> WavefunctionModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def hydrogenic_primitives(kind: str, Z: float) -> list:
    """The closed-form hydrogenic states written as orbital primitives."""
    s1 = [Primitive(1.0, Z / 2)]
    s2 = [Primitive(1.0, Z / 4), Primitive(-Z / 4, Z / 4, radial_power=1)]
    p2 = [Primitive(1.0, Z / 4, powers=(1, 0, 0))]
    return {"1s": s1, "2s": s2, "2p": p2, "mixed": s2 + p2}[kind]


def _product_symmetry(kind, n):
    if kind in ("1s", "2s"):
        return "even"
    if kind == "2p":
        return "odd" if n % 2 else "even"
    return "none"


def product_model(Z=1.0, n_electrons=2, kind="1s", energy=None) -> WavefunctionModel:
    """``psi = phi(x_1) ... phi(x_N)`` with a hydrogenic orbital ``phi``.

    The default energy is the non-interacting sum of orbital energies; the
    state is not an eigenfunction once electron repulsion is included.
    """
    frame = make_frame([(0, Z)])
    e_orb = -Z ** 2 / 4 if kind == "1s" else -Z ** 2 / 16
    return build_model(
        frame,
        {"phi": Orbital(hydrogenic_primitives(kind, Z), frame)},
        [{"coefficient": 1.0, "orbitals": ["phi"] * n_electrons}],
        n_electrons * e_orb if energy is None else energy,
        symmetry=_product_symmetry(kind, n_electrons),
        name=f"product({kind}:Z={Z})^{n_electrons}",
    )
