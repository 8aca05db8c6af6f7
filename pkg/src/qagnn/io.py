"""On-disk formats: model files, embedding CSVs, kernel matrices, spectra.

Model file (JSON, ``format = "qagnn-model"``, ``version = 1``)::

    {"format": "qagnn-model", "version": 1,
     "config": {"n_qubits", "n_layers", "n_features", "hidden", "variant", "activation"},
     "arrays": [{"name", "shape", "values"}, ...]}

``arrays`` appear in this fixed order, skipping groups the variant lacks:
``theta``; ``encoder.W1, encoder.b1, encoder.W2, encoder.b2``;
``attn.w1, attn.b1, attn.w2, attn.b2``; ``mlp.W_h, mlp.b_h, mlp.w_o, mlp.b_o``.
Matrices are flattened row-major. Floats are written with full repr precision,
so a save/load round trip is exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .feature_map import EncoderConfig, Spectrum
from .model import AttentionParams, EncoderParams, MlpParams, ModelParams

MODEL_FORMAT = "qagnn-model"
MODEL_VERSION = 1


def model_to_json(params: ModelParams, cfg: EncoderConfig, n_features: int) -> dict:
    arrays = [{"name": k, "shape": list(v.shape), "values": v.ravel().tolist()}
              for k, v in params.to_dict().items()]
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": {"n_qubits": cfg.n_qubits, "n_layers": cfg.n_layers, "n_features": n_features,
                   "hidden": params.hidden, "variant": params.variant,
                   "activation": params.activation},
        "arrays": arrays,
    }


def model_from_json(doc: dict) -> tuple[ModelParams, dict]:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a qagnn model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model file version {doc.get('version')}")
    conf = doc["config"]
    a = {e["name"]: np.asarray(e["values"], dtype=float).reshape(e["shape"]) for e in doc["arrays"]}
    enc = None
    if "encoder.W1" in a:
        enc = EncoderParams(a["encoder.W1"], a["encoder.b1"], a["encoder.W2"], a["encoder.b2"])
    params = ModelParams(
        attn=AttentionParams(a["attn.w1"], float(a["attn.b1"][0]), a["attn.w2"], float(a["attn.b2"][0])),
        mlp=MlpParams(a["mlp.W_h"], a["mlp.b_h"], a["mlp.w_o"], float(a["mlp.b_o"][0])),
        variant=conf["variant"], theta=a.get("theta"), encoder=enc,
        activation=conf.get("activation", "relu"),
    )
    return params, conf


def save_model(path, params: ModelParams, cfg: EncoderConfig, n_features: int) -> None:
    Path(path).write_text(json.dumps(model_to_json(params, cfg, n_features)) + "\n")


def load_model(path) -> tuple[ModelParams, dict]:
    return model_from_json(json.loads(Path(path).read_text()))


def write_embeddings(path, node_ids, Z: np.ndarray, labels) -> None:
    """``node_id, z_1..z_n, label`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id"] + [f"z_{k + 1}" for k in range(Z.shape[1])] + ["label"])
        for nid, z, lab in zip(node_ids, Z, labels):
            w.writerow([nid] + [repr(float(v)) for v in z] + [int(lab)])


def write_matrix(path, node_ids, M: np.ndarray) -> None:
    """Square matrix with node ids as the header row and first column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id"] + list(node_ids))
        for nid, row in zip(node_ids, M):
            w.writerow([nid] + [repr(float(v)) for v in row])


def read_matrix(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    ids = rows[0][1:]
    return ids, np.array([[float(v) for v in r[1:]] for r in rows[1:]])


def write_spectra(path, spectra: dict) -> None:
    """One row per (feature, frequency) plus each feature's energy summary."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "frequency", "magnitude", "total_energy",
                    "out_of_set_energy", "relative_out_of_set"])
        for feat, sp in spectra.items():
            sp: Spectrum
            for f, m in zip(sp.frequencies, sp.magnitudes):
                w.writerow([feat, int(f), repr(float(m)), repr(sp.total_energy),
                            repr(sp.out_of_set_energy), repr(sp.relative_out_of_set)])
