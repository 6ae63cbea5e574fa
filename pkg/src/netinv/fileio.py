"""JSON network documents and complex matrix files for the CLI."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .elastic import ElasticNetwork, spring_conductivity
from .graph import Graph, MatrixEdgeField, MatrixNodeField, build_graph

__all__ = [
    "SchemaError",
    "NetworkModel",
    "load_network",
    "save_matrix",
    "load_matrix",
    "parse_complex",
    "complex_to_json",
]


class SchemaError(ValueError):
    """Malformed network or matrix document."""


def parse_complex(value) -> complex:
    """A JSON complex number: either a plain number or an [re, im] pair."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 \
            and all(isinstance(x, (int, float)) for x in value):
        return complex(value[0], value[1])
    raise SchemaError(f"expected a number or [re, im] pair, got {value!r}")


def complex_to_json(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _parse_complex_matrix(data, d: int, what: str) -> np.ndarray:
    try:
        m = np.array([[parse_complex(x) for x in row] for row in data])
    except (TypeError, SchemaError) as exc:
        raise SchemaError(f"bad {what}: {exc}") from exc
    if m.shape != (d, d):
        raise SchemaError(f"{what} must be {d}x{d}")
    return m


@dataclass(frozen=True)
class NetworkModel:
    """Parsed network document.

    Either ``sigma`` (explicit conductivity blocks) or ``network`` (spring
    geometry) is present; ``q`` and ``omega`` are optional extras.
    """

    graph: Graph
    d: int
    sigma: MatrixEdgeField | None
    q: MatrixNodeField | None
    network: ElasticNetwork | None
    omega: float | None
    vertex_ids: tuple[int, ...]

    def conductivity(self) -> MatrixEdgeField:
        if self.sigma is not None:
            return self.sigma
        assert self.network is not None
        return spring_conductivity(self.network)


def load_network(path: str | Path) -> NetworkModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("network document must be a JSON object")
    for key in ("d", "vertices", "edges"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")
    d = doc["d"]
    if not isinstance(d, int) or d < 1:
        raise SchemaError("d must be a positive integer")

    vertices = doc["vertices"]
    if not isinstance(vertices, list) or not vertices:
        raise SchemaError("vertices must be a nonempty list")
    ids = []
    for v in vertices:
        if not isinstance(v, dict) or "id" not in v:
            raise SchemaError("each vertex needs an 'id'")
        ids.append(v["id"])
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate vertex ids")
    index = {vid: k for k, vid in enumerate(ids)}
    boundary = [index[v["id"]] for v in vertices if v.get("boundary", False)]
    if not boundary:
        raise SchemaError("at least one vertex must be marked boundary")

    edges_doc = doc["edges"]
    if not isinstance(edges_doc, list) or not edges_doc:
        raise SchemaError("edges must be a nonempty list")
    pairs = []
    for e in edges_doc:
        if not isinstance(e, dict) or "i" not in e or "j" not in e:
            raise SchemaError("each edge needs 'i' and 'j'")
        if e["i"] not in index or e["j"] not in index:
            raise SchemaError(f"edge ({e['i']},{e['j']}) references unknown vertex")
        pairs.append((index[e["i"]], index[e["j"]]))
    try:
        g = build_graph(len(vertices), boundary, pairs)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    has_sigma = ["sigma" in e for e in edges_doc]
    has_k = ["k" in e for e in edges_doc]
    if all(has_sigma) and not any(has_k):
        blocks = np.stack([
            _parse_complex_matrix(e["sigma"], d, f"sigma of edge ({e['i']},{e['j']})")
            for e in edges_doc
        ])
        # reorder to match the canonical edge list
        order = _edge_order(g, pairs)
        sigma = MatrixEdgeField.from_blocks(blocks[order])
        network = None
    elif all(has_k) and not any(has_sigma):
        if any("position" not in v for v in vertices):
            raise SchemaError("spring edges need a 'position' on every vertex")
        pos = np.array([[float(x) for x in v["position"]] for v in vertices])
        if pos.shape[1] != d:
            raise SchemaError(f"positions must have dimension d={d}")
        order = _edge_order(g, pairs)
        k = np.array([float(e["k"]) for e in edges_doc])[order]
        c_e = np.array([float(e.get("c_e", 0.0)) for e in edges_doc])[order]
        mass = np.array([float(v.get("mass", 1.0)) for v in vertices])
        c_v = np.array([float(v.get("c_v", 0.0)) for v in vertices])
        try:
            network = ElasticNetwork(
                graph=g, positions=pos, k=k, c_e=c_e, mass=mass, c_v=c_v,
                omega=float(doc.get("omega", 1.0)),
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        sigma = None
    else:
        raise SchemaError("edges must all carry 'sigma' blocks or all carry 'k'")

    q = None
    if "q" in doc:
        q_doc = doc["q"]
        if not isinstance(q_doc, list) or len(q_doc) != len(vertices):
            raise SchemaError("q must list one d x d block per vertex")
        q = MatrixNodeField.from_blocks(np.stack([
            _parse_complex_matrix(block, d, f"q of vertex {ids[k]}")
            for k, block in enumerate(q_doc)
        ]))

    omega = float(doc["omega"]) if "omega" in doc else None
    return NetworkModel(
        graph=g, d=d, sigma=sigma, q=q, network=network, omega=omega,
        vertex_ids=tuple(ids),
    )


def _edge_order(g: Graph, pairs: list[tuple[int, int]]) -> list[int]:
    """Input edge index for each canonical edge (build_graph keeps order, so
    this is the identity; kept explicit for safety)."""
    canon = {tuple(sorted(p)): k for k, p in enumerate(pairs)}
    return [canon[e] for e in g.edges]


def save_matrix(m: np.ndarray, path: str | Path, extra: dict | None = None) -> None:
    """Write a complex matrix; JSON round-trips exactly, CSV is 17-digit."""
    m = np.asarray(m, dtype=complex)
    path = Path(path)
    if path.suffix == ".csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rows", m.shape[0], "cols", m.shape[1]])
            for row in m:
                out = []
                for z in row:
                    out.append(f"{z.real:.17g}")
                    out.append(f"{z.imag:.17g}")
                writer.writerow(out)
        return
    doc = {
        "shape": [int(m.shape[0]), int(m.shape[1])],
        "data": [[complex_to_json(z) for z in row] for row in m],
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=1))


def load_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".csv":
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "rows":
            raise SchemaError("csv matrix needs a 'rows,r,cols,c' header")
        r, c = int(rows[0][1]), int(rows[0][3])
        m = np.empty((r, c), dtype=complex)
        for a, row in enumerate(rows[1:]):
            vals = [float(x) for x in row]
            m[a] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        return m
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    if "shape" not in doc or "data" not in doc:
        raise SchemaError("matrix document needs 'shape' and 'data'")
    r, c = doc["shape"]
    m = np.array([[parse_complex(z) for z in row] for row in doc["data"]])
    if m.shape != (r, c):
        raise SchemaError("matrix data does not match declared shape")
    return m
