"""Two-cluster synthetic flow data, so the pipeline runs without external datasets."""
from __future__ import annotations

import csv

import numpy as np

# Directions chosen so that any two points within the acceptance cone of the
# same centre have cosine > 0.95 while points of different clusters stay < 0.5.
NORMAL_CENTRE = np.array([0.80, 0.60, 0.10, 0.05])
ATTACK_CENTRE = np.array([0.05, 0.10, 0.60, 0.80])


def _unit(v):
    return v / np.linalg.norm(v)


def _centres(n_features: int) -> tuple[np.ndarray, np.ndarray]:
    if n_features == 4:
        return NORMAL_CENTRE, ATTACK_CENTRE
    half = n_features // 2
    a = np.full(n_features, 0.1)
    b = np.full(n_features, 0.1)
    a[:half] = 0.8
    b[half:] = 0.8
    return a, b


def make_clusters(n_nodes: int = 150, n_features: int = 4, attack_fraction: float = 0.5,
                  spread: float = 0.04, min_centre_cosine: float = 0.988,
                  label_noise: float = 0.0, seed: int = 0):
    """Nodes scattered around a normal and an attack direction in the positive orthant.

    Points are drawn as ``scale * (centre + N(0, spread^2))`` and rejected unless
    their cosine to the centre is at least ``min_centre_cosine``; the default
    0.988 keeps every intra-cluster pair above cosine 0.95. ``label_noise``
    flips that fraction of labels afterwards.

    Returns ``(node_ids, X, y)``.
    """
    rng = np.random.default_rng(seed)
    n_attack = int(round(n_nodes * attack_fraction))
    labels = np.array([0] * (n_nodes - n_attack) + [1] * n_attack)
    rng.shuffle(labels)
    centres = _centres(n_features)
    X = np.empty((n_nodes, n_features))
    for i, lab in enumerate(labels):
        c = centres[lab]
        while True:
            p = c + rng.normal(0.0, spread, n_features)
            if np.all(p > 0) and _unit(p) @ _unit(c) >= min_centre_cosine:
                break
        X[i] = rng.uniform(0.6, 1.0) * p
    if label_noise > 0:
        flip = rng.random(n_nodes) < label_noise
        labels = np.where(flip, 1 - labels, labels)
    ids = [f"10.{lab}.{i // 250}.{i % 250 + 1}-10.9.0.1" for i, lab in enumerate(labels)]
    return ids, X, labels


def write_flow_csv(path, n_nodes: int = 150, n_features: int = 4, flows_per_pair: int = 1,
                   seed: int = 0, **kwargs) -> None:
    """Raw flow table (``src_ip,dst_ip,f0..,proto,label``) built from :func:`make_clusters`.

    Each IP pair yields ``flows_per_pair`` rows whose features average to the
    cluster point, so aggregation recovers it exactly. ``proto`` is a
    categorical column constant within each pair and unrelated to the label.
    """
    ids, X, y = make_clusters(n_nodes, n_features, seed=seed, **kwargs)
    rng = np.random.default_rng(seed + 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src_ip", "dst_ip"] + [f"f{k}" for k in range(n_features)] + ["proto", "label"])
        for nid, x, lab in zip(ids, X, y):
            src, dst = nid.split("-")
            jitter = rng.normal(0.0, 0.01, (flows_per_pair, n_features))
            jitter -= jitter.mean(axis=0)
            proto = str(rng.choice(["tcp", "udp", "icmp"]))
            for row in x + jitter:
                w.writerow([src, dst] + [repr(float(v)) for v in row] + [proto, int(lab)])
