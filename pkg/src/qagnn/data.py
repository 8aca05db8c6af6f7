"""Flow-table preprocessing: cleaning, IP-pair aggregation, scaling, PCA, splitting.

Default order: drop columns with missing cells -> label-encode categoricals ->
aggregate by (src, dst) -> split -> fit min-max and PCA on the training split
-> transform every split -> second min-max so encoding angles stay in [0, 1].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "nan", "NaN", "NAN", "NA", "N/A", "null", "NULL", "None"})


class PipelineError(ValueError):
    pass


@dataclass
class RawDataset:
    frame: pd.DataFrame           # every cell kept as a string
    src_column: str
    dst_column: str
    label_column: str

    def __post_init__(self):
        for col in (self.src_column, self.dst_column, self.label_column):
            if col not in self.frame.columns:
                raise PipelineError(f"declared column {col!r} not found in dataset")

    @property
    def feature_columns(self) -> list[str]:
        roles = {self.src_column, self.dst_column, self.label_column}
        return [c for c in self.frame.columns if c not in roles]


def read_csv(path, src_column: str, dst_column: str, label_column: str) -> RawDataset:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise PipelineError(f"{path}: {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]
    return RawDataset(frame, src_column, dst_column, label_column)


# ---------------------------------------------------------------------------
# column cleaning

def _numeric(col: pd.Series) -> pd.Series:
    return pd.to_numeric(col.str.strip(), errors="coerce")


def _is_missing(col: pd.Series) -> pd.Series:
    return col.str.strip().isin(MISSING_TOKENS)


def drop_nan_features(ds: RawDataset) -> tuple[RawDataset, list[str]]:
    """Remove every feature column with a missing or unusable cell.

    A column survives if it is fully numeric and finite, or fully non-numeric
    (categorical, label-encoded later). Mixed columns count as unparseable.
    """
    dropped = []
    for c in ds.feature_columns:
        col = ds.frame[c].astype(str)
        if _is_missing(col).any():
            dropped.append(c)
            continue
        num = _numeric(col)
        parsed = num.notna()
        if parsed.all():
            if not np.isfinite(num.to_numpy(dtype=float)).all():
                dropped.append(c)
        elif parsed.any():
            dropped.append(c)
    kept = [c for c in ds.feature_columns if c not in dropped]
    if not kept:
        raise PipelineError("every feature column contains missing values; nothing left")
    if dropped:
        log.info("dropping %d feature column(s) with missing values: %s", len(dropped), dropped)
    frame = ds.frame.drop(columns=dropped)
    return RawDataset(frame, ds.src_column, ds.dst_column, ds.label_column), dropped


def label_encode(values: Sequence[str]) -> tuple[np.ndarray, dict]:
    """Map distinct strings to ``0..k-1`` in lexicographic order."""
    arr = np.asarray([str(v) for v in values])
    if arr.size == 0:
        raise ValueError("cannot label-encode an empty column")
    classes, codes = np.unique(arr, return_inverse=True)
    return codes.astype(int), {str(c): i for i, c in enumerate(classes)}


def binary_labels(values: Sequence[str], normal_value: str = "0") -> np.ndarray:
    """0 for cells equal to ``normal_value`` (numerically, if both parse), else 1."""
    out = np.empty(len(values), dtype=int)
    try:
        normal_num = float(normal_value)
    except ValueError:
        normal_num = None
    for i, v in enumerate(values):
        v = str(v).strip()
        if v in MISSING_TOKENS:
            raise PipelineError(f"missing label in row {i}")
        same = v == normal_value
        if not same and normal_num is not None:
            try:
                same = float(v) == normal_num
            except ValueError:
                pass
        out[i] = 0 if same else 1
    return out


def encode_features(ds: RawDataset) -> tuple[pd.DataFrame, dict]:
    """Numeric feature frame; categorical columns replaced by their codes."""
    out, mappings = {}, {}
    for c in ds.feature_columns:
        col = ds.frame[c].astype(str)
        num = _numeric(col)
        if num.notna().all():
            out[c] = num.astype(float).to_numpy()
        else:
            codes, mapping = label_encode(col.str.strip())
            out[c] = codes.astype(float)
            mappings[c] = mapping
    return pd.DataFrame(out, index=ds.frame.index), mappings


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class FlowTable:
    node_ids: list
    features: np.ndarray
    labels: np.ndarray
    feature_names: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.node_ids)

    def take(self, idx) -> "FlowTable":
        idx = np.asarray(idx, dtype=int)
        return FlowTable([self.node_ids[i] for i in idx], self.features[idx],
                         self.labels[idx], list(self.feature_names))


def group_flows(features: pd.DataFrame, src: Sequence, dst: Sequence, labels: Sequence) -> FlowTable:
    """One row per ordered (src, dst) pair: mean features, modal label.

    Label ties go to attack (1). Rows are ordered by (src, dst).
    """
    frame = features.copy()
    frame["__src"] = [str(s).strip() for s in src]
    frame["__dst"] = [str(d).strip() for d in dst]
    frame["__label"] = np.asarray(labels, dtype=int)
    grouped = frame.groupby(["__src", "__dst"], sort=True)
    means = grouped[list(features.columns)].mean()
    attack_share = grouped["__label"].mean()
    y = (attack_share.to_numpy() >= 0.5).astype(int)
    ids = [f"{s}-{d}" for s, d in means.index]
    return FlowTable(ids, means.to_numpy(dtype=float), y, list(features.columns))


# ---------------------------------------------------------------------------
# scaling and PCA

@dataclass
class ScalerStats:
    minimum: np.ndarray
    maximum: np.ndarray

    def to_json(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}


def minmax_fit(X) -> ScalerStats:
    X = np.asarray(X, dtype=float)
    return ScalerStats(X.min(axis=0), X.max(axis=0))


def minmax_transform(X, stats: ScalerStats) -> np.ndarray:
    """Scale to [0, 1] with the fitted range; constant features map to 0."""
    X = np.asarray(X, dtype=float)
    span = stats.maximum - stats.minimum
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - stats.minimum) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


def minmax_fit_transform(X, stats: Optional[ScalerStats] = None) -> tuple[np.ndarray, ScalerStats]:
    stats = stats or minmax_fit(X)
    return minmax_transform(X, stats), stats


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # (F_in, k), orthonormal columns
    explained_variance: np.ndarray  # (k,), descending, ddof = 1
    total_variance: float

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    def to_json(self) -> dict:
        return {"explained_variance": self.explained_variance.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio.tolist()}


def pca_fit(X, k: int = 4) -> PcaModel:
    """Top-``k`` principal directions of ``X`` via SVD of the centred data.

    Each component's sign is chosen so its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=float)
    n, f = X.shape
    if f < k:
        raise ValueError(f"cannot keep {k} components from {f} features")
    if n < k:
        raise ValueError(f"need at least {k} rows for {k} components, got {n}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:k].T.copy()
    pivots = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[pivots, np.arange(k)])
    comps *= np.where(signs == 0, 1.0, signs)
    dof = max(n - 1, 1)
    var = s ** 2 / dof
    return PcaModel(mean, comps, var[:k].copy(), float(var.sum()))


def pca_transform(X, model: PcaModel) -> np.ndarray:
    return (np.asarray(X, dtype=float) - model.mean) @ model.components


def pca_reconstruct(Y, model: PcaModel) -> np.ndarray:
    return np.asarray(Y, dtype=float) @ model.components.T + model.mean


# ---------------------------------------------------------------------------
# splitting

def split_sizes(n: int, ratios=(0.70, 0.15, 0.15)) -> tuple[int, int, int]:
    """Floor each share; the remainder goes to training."""
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3:
        raise ValueError("ratios must be three shares summing to 1")
    if n < 3:
        raise ValueError(f"need at least 3 rows to split, got {n}")
    val = int(np.floor(n * ratios[1] + 1e-9))
    test = int(np.floor(n * ratios[2] + 1e-9))
    return n - val - test, val, test


def split(table: FlowTable, ratios=(0.70, 0.15, 0.15), seed: int = 0) -> tuple[FlowTable, FlowTable, FlowTable]:
    """Seeded shuffle, then contiguous train/val/test slices."""
    n_train, n_val, _ = split_sizes(len(table), ratios)
    perm = np.random.default_rng(seed).permutation(len(table))
    return (table.take(perm[:n_train]), table.take(perm[n_train:n_train + n_val]),
            table.take(perm[n_train + n_val:]))


# ---------------------------------------------------------------------------
# full pipeline

@dataclass
class PipelineConfig:
    src_column: str = "src_ip"
    dst_column: str = "dst_ip"
    label_column: str = "label"
    normal_label: str = "0"
    n_components: int = 4
    seed: int = 0
    ratios: tuple = (0.70, 0.15, 0.15)
    fit_scope: str = "train"        # "train" | "all"
    rescale_after_pca: bool = True

    def __post_init__(self):
        if self.fit_scope not in ("train", "all"):
            raise ValueError("fit_scope must be 'train' or 'all'")


@dataclass
class PreprocessResult:
    splits: dict          # name -> FlowTable with reduced features
    manifest: dict


def preprocess(ds: RawDataset, cfg: PipelineConfig) -> PreprocessResult:
    n_rows = len(ds.frame)
    ds, dropped = drop_nan_features(ds)
    feats, mappings = encode_features(ds)
    y = binary_labels(ds.frame[ds.label_column].tolist(), cfg.normal_label)
    table = group_flows(feats, ds.frame[ds.src_column], ds.frame[ds.dst_column], y)
    parts = dict(zip(("train", "val", "test"), split(table, cfg.ratios, cfg.seed)))

    fit_rows = parts["train"].features if cfg.fit_scope == "train" else table.features
    scaler = minmax_fit(fit_rows)
    pca = pca_fit(minmax_transform(fit_rows, scaler), cfg.n_components)
    reduced = {k: pca_transform(minmax_transform(t.features, scaler), pca) for k, t in parts.items()}
    post = None
    if cfg.rescale_after_pca:
        fit_reduced = reduced["train"] if cfg.fit_scope == "train" else \
            pca_transform(minmax_transform(table.features, scaler), pca)
        post = minmax_fit(fit_reduced)
        reduced = {k: minmax_transform(v, post) for k, v in reduced.items()}

    names = [f"pc{i}" for i in range(cfg.n_components)]
    splits = {k: FlowTable(t.node_ids, reduced[k], t.labels, names) for k, t in parts.items()}
    manifest = {
        "raw_rows": n_rows,
        "aggregated_rows": len(table),
        "dropped_columns": dropped,
        "feature_columns": table.feature_names,
        "categorical_mappings": mappings,
        "label_rule": {"column": ds.label_column, "normal_value": cfg.normal_label},
        "scaler": scaler.to_json(),
        "pca": pca.to_json(),
        "post_pca_scaler": post.to_json() if post else None,
        "fit_scope": cfg.fit_scope,
        "seed": cfg.seed,
        "split_sizes": {k: len(t) for k, t in splits.items()},
        "split_attack_counts": {k: int(t.labels.sum()) for k, t in splits.items()},
    }
    return PreprocessResult(splits, manifest)
