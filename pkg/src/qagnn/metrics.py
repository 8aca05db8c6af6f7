"""Binary IDS metrics with attack (label 1) as the positive class."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("empty label vectors")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("labels must be binary 0/1")
    return ConfusionMatrix(
        tp=int(((t == 1) & (p == 1)).sum()),
        fp=int(((t == 0) & (p == 1)).sum()),
        tn=int(((t == 0) & (p == 0)).sum()),
        fn=int(((t == 1) & (p == 0)).sum()),
    )


def _ratio(num, den, what, notes):
    if den == 0:
        notes.append(f"{what} undefined (0/0), reported as 0")
        return 0.0
    return num / den


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float          # macro over {normal, attack}
    recall: float
    f1: float
    fpr: float                # attack as positive
    fnr: float
    specificity: float
    per_class: dict
    confusion: ConfusionMatrix
    warnings: list

    def to_json(self) -> dict:
        d = asdict(self)
        d["confusion"] = asdict(self.confusion)
        return d

    def row(self) -> list[float]:
        return [self.accuracy, self.precision, self.recall, self.f1,
                self.fpr, self.fnr, self.specificity]


def report(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, macro precision/recall/F1 and error rates from a confusion matrix.

    Macro F1 is the mean of the per-class F1 scores. Any 0/0 ratio is reported
    as 0 and noted in ``warnings``.
    """
    if cm.n < 1:
        raise ValueError("confusion matrix is empty")
    notes: list[str] = []
    # class 1 = attack, class 0 = normal (its "positives" are predicted-normal)
    prec1 = _ratio(cm.tp, cm.tp + cm.fp, "attack precision", notes)
    rec1 = _ratio(cm.tp, cm.tp + cm.fn, "attack recall", notes)
    prec0 = _ratio(cm.tn, cm.tn + cm.fn, "normal precision", notes)
    rec0 = _ratio(cm.tn, cm.tn + cm.fp, "normal recall", notes)
    f1_1, f1_0 = _f1(prec1, rec1), _f1(prec0, rec0)
    fpr = _ratio(cm.fp, cm.fp + cm.tn, "FPR", notes)
    fnr = _ratio(cm.fn, cm.fn + cm.tp, "FNR", notes)
    spec = _ratio(cm.tn, cm.tn + cm.fp, "specificity", notes)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    per_class = {
        "normal": {"precision": prec0, "recall": rec0, "f1": f1_0,
                   "fpr": _safe(cm.fn, cm.fn + cm.tp), "fnr": _safe(cm.fp, cm.fp + cm.tn),
                   "specificity": _safe(cm.tp, cm.tp + cm.fn)},
        "attack": {"precision": prec1, "recall": rec1, "f1": f1_1,
                   "fpr": fpr, "fnr": fnr, "specificity": spec},
    }
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / cm.n,
        precision=(prec0 + prec1) / 2,
        recall=(rec0 + rec1) / 2,
        f1=(f1_0 + f1_1) / 2,
        fpr=fpr, fnr=fnr, specificity=spec,
        per_class=per_class, confusion=cm, warnings=notes,
    )


def _safe(num, den):
    return num / den if den else 0.0


def evaluate(y_true, y_pred) -> MetricsReport:
    return report(confusion(y_true, y_pred))


COLUMNS = ("Acc", "Prec", "Rec", "F1", "FPR", "FNR", "Spec")


def format_table(rows: dict, digits: int = 4) -> str:
    """Aligned text table, one line per named report, columns Acc..Spec."""
    name_w = max([len("Model")] + [len(k) for k in rows])
    col_w = digits + 3
    lines = ["Model".ljust(name_w) + "".join(c.rjust(col_w) for c in COLUMNS)]
    for name, rep in rows.items():
        lines.append(name.ljust(name_w) + "".join(f"{v:{col_w}.{digits}f}" for v in rep.row()))
    return "\n".join(lines)
