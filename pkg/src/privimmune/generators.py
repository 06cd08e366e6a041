"""Seeded synthetic graphs, addressed by compact ``KIND:key=value,...`` strings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .graph import Graph

_BLOCK = 256

_KINDS = {
    "erdos-renyi": {"n": int, "p": float, "seed": int},
    "chung-lu-powerlaw": {"n": int, "gamma": float, "dmin": float, "dmax": float, "seed": int},
    "star": {"n": int},
    "cycle": {"n": int},
    "complete": {"n": int},
}
_ALIASES = {"er": "erdos-renyi", "gnp": "erdos-renyi", "chung-lu": "chung-lu-powerlaw", "powerlaw": "chung-lu-powerlaw"}
_DEFAULTS = {
    "erdos-renyi": {"seed": 0},
    "chung-lu-powerlaw": {"gamma": 2.5, "dmin": 2.0, "dmax": None, "seed": 0},
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {', '.join(_KINDS)}")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        unknown = set(self.params) - set(_KINDS[self.kind]) - {"n"}
        if unknown:
            raise ValueError(f"{self.kind} does not take {', '.join(sorted(unknown))}")
        p = self.param
        if self.kind == "erdos-renyi" and not 0.0 <= p("p") <= 1.0:
            raise ValueError("edge probability p must lie in [0, 1]")
        if self.kind == "chung-lu-powerlaw":
            if not p("gamma") > 2.0:
                raise ValueError("power-law exponent gamma must exceed 2")
            if not 0 < p("dmin") <= p("dmax") < max(self.n, 1):
                raise ValueError("need 0 < dmin <= dmax < n")
        if self.kind in ("star", "cycle") and 0 < self.n < (2 if self.kind == "star" else 3):
            raise ValueError(f"{self.kind} needs more nodes")

    def param(self, key: str):
        if key in self.params:
            return self.params[key]
        default = _DEFAULTS.get(self.kind, {}).get(key)
        if key == "dmax" and default is None:
            return max(np.sqrt(self.n), self.param("dmin"))
        if default is None and key != "seed":
            raise ValueError(f"{self.kind} requires parameter {key!r}")
        return default

    @property
    def label(self) -> str:
        items = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}:n={self.n}" + (f",{items}" if items else "")


def parse_generator(text: str) -> GeneratorSpec:
    """``chung-lu:n=1000,gamma=2.5,dmin=3,dmax=120,seed=7`` and the like."""
    kind, _, rest = text.strip().partition(":")
    kind = _ALIASES.get(kind.strip().lower(), kind.strip().lower())
    if kind not in _KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; choose from {', '.join(_KINDS)}")
    schema = _KINDS[kind]
    values = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, raw = item.partition("=")
        key = key.strip()
        if not eq or key not in schema:
            raise ValueError(f"bad generator parameter {item!r} for {kind}")
        try:
            values[key] = schema[key](raw)
        except ValueError:
            raise ValueError(f"parameter {key} expects {schema[key].__name__}, got {raw!r}") from None
    if "n" not in values:
        raise ValueError(f"{kind} requires n")
    n = values.pop("n")
    return GeneratorSpec(kind, n, values)


def _upper_blocks(n: int, prob, rng: np.random.Generator):
    """Edges ``(i, j), i < j`` kept with probability ``prob(rows, cols)``, drawn block by block."""
    out = []
    for a in range(0, n, _BLOCK):
        rows = np.arange(a, min(a + _BLOCK, n))
        cols = np.arange(a + 1, n)
        if cols.size == 0:
            break
        u = rng.random((rows.size, cols.size))
        keep = (u < prob(rows[:, None], cols[None, :])) & (cols[None, :] > rows[:, None])
        i, j = np.nonzero(keep)
        out.append(np.column_stack([rows[i], cols[j]]))
    return np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)


def chung_lu_weights(n: int, gamma: float, dmin: float, dmax: float) -> np.ndarray:
    """Expected degrees ``dmax * (i+1)^(-1/(gamma-1))`` clipped below at ``dmin``."""
    w = dmax * np.arange(1, n + 1, dtype=np.float64) ** (-1.0 / (gamma - 1.0))
    return np.maximum(w, dmin)


def generate(spec: GeneratorSpec) -> Graph:
    n = spec.n
    if spec.kind == "star":
        return Graph.from_edges(n, [(0, i) for i in range(1, n)])
    if spec.kind == "cycle":
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)] if n >= 3 else [])
    if spec.kind == "complete":
        iu = np.triu_indices(n, 1)
        return Graph.from_edges(n, np.column_stack(iu))
    rng = np.random.default_rng(spec.param("seed"))
    if spec.kind == "erdos-renyi":
        p = spec.param("p")
        return Graph.from_edges(n, _upper_blocks(n, lambda r, c: p, rng))
    w = chung_lu_weights(n, spec.param("gamma"), spec.param("dmin"), spec.param("dmax"))
    total = w.sum()
    return Graph.from_edges(n, _upper_blocks(n, lambda r, c: np.minimum(1.0, w[r] * w[c] / total), rng))
