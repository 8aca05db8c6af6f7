"""Cosine-similarity flow graphs and their one-/two-hop operators."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DegenerateInput(ValueError):
    pass


@dataclass
class FlowGraph:
    features: np.ndarray          # (N, F)
    labels: np.ndarray            # (N,) 0 = normal, 1 = attack
    adjacency: np.ndarray         # (N, N) int, symmetric
    node_ids: list

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def n_edges(self) -> int:
        """Undirected edges, each counted once; self-loops count once too."""
        A = self.adjacency
        return int((np.triu(A, 1) != 0).sum() + (np.diag(A) != 0).sum())

    def permuted(self, perm: Sequence[int]) -> "FlowGraph":
        perm = np.asarray(perm)
        return FlowGraph(self.features[perm], self.labels[perm],
                         self.adjacency[np.ix_(perm, perm)], [self.node_ids[i] for i in perm])


@dataclass
class HopOperators:
    a1: np.ndarray
    a2: np.ndarray


def cosine_similarity(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise DegenerateInput("cosine similarity is undefined for a zero vector")
    return float(np.clip(x @ y / (nx * ny), -1.0, 1.0))


def similarity_matrix(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise cosine similarities and a mask of zero-norm rows.

    Rows with zero norm get similarity ``-inf`` to everything.
    """
    X = np.asarray(features, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    zero = norms == 0
    U = X / np.where(zero, 1.0, norms)[:, None]
    S = np.clip(U @ U.T, -1.0, 1.0)
    S[zero, :] = -np.inf
    S[:, zero] = -np.inf
    return S, zero


def build_graph(features, labels, node_ids=None, threshold: float = 0.9,
                self_loops: bool = False) -> FlowGraph:
    """Connect every pair of nodes whose cosine similarity is ``>= threshold``."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("features must be a non-empty (N, F) matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if not -1.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (-1, 1], got {threshold}")
    y = np.asarray(labels).astype(int)
    if y.shape != (X.shape[0],):
        raise ValueError("labels must have one entry per node")
    N = X.shape[0]
    ids = list(node_ids) if node_ids is not None else [str(i) for i in range(N)]
    S, zero = similarity_matrix(X)
    if zero.any():
        warnings.warn(f"{int(zero.sum())} zero-norm node(s) left without edges", stacklevel=2)
    A = (S >= threshold).astype(np.int64)
    if self_loops:
        A[np.diag_indices(N)] = (~zero).astype(np.int64)
    else:
        np.fill_diagonal(A, 0)
    return FlowGraph(X, y, A, ids)


def hop_operators(graph: FlowGraph, mask_two_hop_diagonal: bool = False) -> HopOperators:
    a1 = np.asarray(graph.adjacency, dtype=np.int64)
    a2 = a1 @ a1
    if mask_two_hop_diagonal:
        np.fill_diagonal(a2, 0)
    return HopOperators(a1, a2)


def graph_stats(graphs: dict) -> dict:
    """Node/edge counts per split, edges counted once per undirected pair."""
    out = {"edge_convention": "undirected, each edge counted once"}
    for name, g in graphs.items():
        out[name] = {"nodes": g.n_nodes, "edges": g.n_edges,
                     "attack_nodes": int(g.labels.sum())}
    return out


# ---------------------------------------------------------------------------
# export / import

def save_graph(graph: FlowGraph, edges_path, nodes_path) -> None:
    """Edge list (``node_id,node_id`` per undirected edge) plus node table CSV."""
    ids = graph.node_ids
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "target"])
        for i, j in zip(*np.nonzero(np.triu(graph.adjacency))):
            w.writerow([ids[i], ids[j]])
    write_node_table(nodes_path, ids, graph.features, graph.labels)


def write_node_table(path, node_ids, features, labels) -> None:
    F = features.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id"] + [f"f{k}" for k in range(F)] + ["label"])
        for nid, row, lab in zip(node_ids, features, labels):
            w.writerow([nid] + [repr(float(v)) for v in row] + [int(lab)])


def read_node_table(path) -> tuple[list, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[0] != "node_id" or header[-1] != "label":
        raise ValueError(f"{path}: expected node_id,f0..,label header")
    ids = [r[0] for r in body]
    X = np.array([[float(v) for v in r[1:-1]] for r in body], dtype=float).reshape(len(body), len(header) - 2)
    y = np.array([int(r[-1]) for r in body], dtype=int)
    return ids, X, y


def load_graph(edges_path, nodes_path) -> FlowGraph:
    ids, X, y = read_node_table(nodes_path)
    pos = {nid: i for i, nid in enumerate(ids)}
    A = np.zeros((len(ids), len(ids)), dtype=np.int64)
    with open(edges_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for a, b in reader:
            A[pos[a], pos[b]] = A[pos[b], pos[a]] = 1
    return FlowGraph(X, y, A, ids)


def write_stats(path, stats: dict) -> None:
    Path(path).write_text(json.dumps(stats, indent=2) + "\n")
