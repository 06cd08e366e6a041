"""Edge lists in, experiment records and node lists out."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, List, NamedTuple, Union

import numpy as np

from .graph import Graph

PathLike = Union[str, Path]


class EdgeListError(ValueError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class LoadedGraph(NamedTuple):
    graph: Graph
    labels: np.ndarray  # labels[i] is the file's id for dense node i
    self_loops: int
    duplicates: int


def parse_edge_list(lines: Iterable[str], source="<edges>") -> LoadedGraph:
    pairs = []
    for line_no, line in enumerate(lines, start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        parts = body.split()
        if len(parts) < 2:
            raise EdgeListError(source, line_no, f"expected 'u v', got {body!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(source, line_no, f"node ids must be integers, got {body!r}") from None
        if u < 0 or v < 0:
            raise EdgeListError(source, line_no, "node ids must be non-negative")
        pairs.append((u, v))
    raw = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    labels, dense = np.unique(raw, return_inverse=True)
    dense = dense.reshape(-1, 2)
    loops = dense[:, 0] == dense[:, 1]
    edges = np.sort(dense[~loops], axis=1)
    distinct = np.unique(edges, axis=0) if edges.size else edges
    graph = Graph.from_edges(labels.size, distinct)
    return LoadedGraph(graph, labels, int(loops.sum()), int(edges.shape[0] - distinct.shape[0]))


def load_edge_list(path: PathLike) -> LoadedGraph:
    """Read whitespace-separated ``u v`` pairs; ``#`` lines are comments.

    Ids are remapped densely in increasing order. Self-loops and repeated
    edges are dropped and counted.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh, path)


def save_edge_list(g: Graph, path: PathLike, labels=None) -> None:
    e = g.edges()
    if labels is not None:
        e = np.asarray(labels)[e]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.num_edges}\n")
        fh.writelines(f"{u} {v}\n" for u, v in e.tolist())


def read_node_list(path: PathLike) -> List[int]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            try:
                out.append(int(body))
            except ValueError:
                raise EdgeListError(path, line_no, f"expected one node id, got {body!r}") from None
    return out


def write_node_list(nodes: Iterable[int], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in nodes)


@dataclass(frozen=True)
class ExperimentRecord:
    graph: str
    algorithm: str
    epsilon: float
    delta: float
    epsilon1: float
    target: float
    budget: int
    residual_max_degree: int
    residual_spectral_radius: float
    mean_sir_spread: float
    seed: int
    wall_time_ms: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")


HEADER = [f.name for f in fields(ExperimentRecord)]
_FLOATS = {f.name for f in fields(ExperimentRecord) if f.type in (float, "float")}


def _fmt(name, value) -> str:
    if name in _FLOATS:
        return f"{float(value):.6g}"
    return str(value)


def format_records(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([_fmt(k, v) for k, v in zip(HEADER, astuple(r))])
    return buf.getvalue()


def write_records(records: Iterable[ExperimentRecord], path: PathLike) -> None:
    """CSV with a fixed header; floats at 6 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_records(records))


def read_records(path: PathLike) -> List[ExperimentRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        vals = {}
        for f in fields(ExperimentRecord):
            raw = row[f.name]
            vals[f.name] = float(raw) if f.name in _FLOATS else int(raw) if f.type in (int, "int") else raw
        out.append(ExperimentRecord(**vals))
    return out
