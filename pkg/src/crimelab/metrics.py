"""Evaluation statistics: accuracy, label MSE, confusion matrix, PRF, ROC and a paired t-test."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

ALPHA = 0.05


def _pair(y_true, y_pred):
    a = np.asarray(y_true)
    b = np.asarray(y_pred)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"label vectors differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("label vectors are empty")
    return a, b


def accuracy(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return int(np.count_nonzero(a == b)) / a.size


def mse_labels(y_true, y_pred) -> float:
    """Mean squared difference of integer class codes.

    Only meaningful relative to a fixed class coding; here codes are the
    lexicographic order of category names.
    """
    a, b = _pair(y_true, y_pred)
    d = a.astype(np.int64) - b.astype(np.int64)
    return int(np.sum(d * d)) / a.size


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple = ()

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return int(np.trace(self.counts)) / self.total

    def supports(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def names(self) -> list[str]:
        return list(self.class_names) if self.class_names else [str(i) for i in range(self.n_classes)]

    def to_csv(self, path) -> None:
        names = self.names()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred", *names])
            for name, row in zip(names, self.counts):
                w.writerow([name, *row.tolist()])

    def to_dict(self) -> dict:
        return {"class_names": self.names(), "counts": self.counts.tolist()}


def confusion_matrix(y_true, y_pred, n_classes: int, class_names=()) -> ConfusionMatrix:
    a, b = _pair(y_true, y_pred)
    a = a.astype(np.int64)
    b = b.astype(np.int64)
    for v in (a, b):
        if v.min() < 0 or v.max() >= n_classes:
            raise ValueError(f"class code outside [0, {n_classes})")
    counts = np.bincount(a * n_classes + b, minlength=n_classes * n_classes).reshape(n_classes, n_classes)
    return ConfusionMatrix(counts, tuple(class_names))


@dataclass(frozen=True)
class PrfTable:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro: tuple
    weighted: tuple
    undefined: list = field(default_factory=list)
    class_names: tuple = ()

    def rows(self) -> list[list]:
        names = list(self.class_names) or [str(i) for i in range(len(self.precision))]
        out = [[n, float(p), float(r), float(f), int(s)]
               for n, p, r, f, s in zip(names, self.precision, self.recall, self.f1, self.support)]
        total = int(self.support.sum())
        out.append(["accuracy", "", "", self.accuracy, total])
        out.append(["macro avg", *self.macro, total])
        out.append(["weighted avg", *self.weighted, total])
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "precision", "recall", "f1", "support"])
            w.writerows(self.rows())

    def to_dict(self) -> dict:
        return {
            "precision": self.precision.tolist(), "recall": self.recall.tolist(), "f1": self.f1.tolist(),
            "support": self.support.tolist(), "accuracy": self.accuracy,
            "macro": list(self.macro), "weighted": list(self.weighted), "undefined": list(self.undefined),
        }


def _safe_ratio(num, den):
    out = np.zeros(num.shape, dtype=np.float64)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out, ~ok


def precision_recall_f1(cm: ConfusionMatrix) -> PrfTable:
    """Per-class precision, recall and F1 with macro and support-weighted averages.

    A zero denominator defines the metric as 0; each such case is listed in
    ``undefined`` as ``(metric, class_code)``.
    """
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    support = cm.counts.sum(axis=1)
    precision, p_bad = _safe_ratio(tp, c.sum(axis=0))
    recall, r_bad = _safe_ratio(tp, c.sum(axis=1))
    f1, f_bad = _safe_ratio(2 * precision * recall, precision + recall)
    undefined = ([("precision", int(i)) for i in np.flatnonzero(p_bad)]
                 + [("recall", int(i)) for i in np.flatnonzero(r_bad)]
                 + [("f1", int(i)) for i in np.flatnonzero(f_bad & ~p_bad & ~r_bad)])
    macro = tuple(float(np.mean(v)) for v in (precision, recall, f1))
    total = support.sum()
    weighted = tuple(float(np.dot(v, support) / total) if total else 0.0 for v in (precision, recall, f1))
    return PrfTable(precision, recall, f1, support, cm.accuracy(), macro, weighted, undefined, cm.class_names)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    positive_class: int

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_ovr(y_true, scores, positive_class: int) -> RocCurve:
    """One-vs-rest ROC for ``positive_class``.

    Thresholds sweep the distinct scores in descending order, so each block of
    tied scores contributes one step.  The AUC is evaluated from integer
    counts, which makes perfect and reversed rankings exactly 1 and 0.
    """
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim == 2:
        s = s[:, positive_class]
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    pos = y == positive_class
    P = int(pos.sum())
    N = y.size - P
    if P == 0 or N == 0:
        raise ValueError(f"AUC undefined for class {positive_class}: needs both positives and negatives")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    hits = pos[order].astype(np.int64)
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tps = np.r_[0, np.cumsum(hits)[last]]
    fps = np.r_[0, (last + 1) - tps[1:]]
    area2 = int(np.sum(np.diff(fps) * (tps[1:] + tps[:-1])))
    auc = area2 / (2 * P * N)
    return RocCurve(fps / N, tps / P, np.r_[np.inf, s_sorted[last]], auc, positive_class)


def roc_all(y_true, scores, n_classes: int) -> dict[int, RocCurve]:
    """ROC per class that has both positives and negatives in ``y_true``."""
    y = np.asarray(y_true)
    out = {}
    for c in range(n_classes):
        P = int(np.count_nonzero(y == c))
        if 0 < P < y.size:
            out[c] = roc_ovr(y, scores, c)
    return out


def write_roc_csv(curves: dict[int, RocCurve], path, class_names=()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "fpr", "tpr"])
        for c in sorted(curves):
            name = class_names[c] if class_names else str(c)
            for f, t in curves[c].points():
                w.writerow([name, repr(f), repr(t)])


# --- paired t-test ---------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-tailed p-value ``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    t2 = t * t
    # small x loses no precision this way when |t| is large
    if t2 > df:
        p = betainc_regularized(df / 2.0, 0.5, df / (df + t2))
    else:
        p = 1.0 - betainc_regularized(0.5, df / 2.0, t2 / (df + t2))
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: int
    mean_difference: float
    decision: str

    def to_dict(self) -> dict:
        t = self.t_statistic
        return {"t_statistic": t if math.isfinite(t) else ("inf" if t > 0 else "-inf"),
                "p_value": self.p_value, "degrees_of_freedom": self.degrees_of_freedom,
                "mean_difference": self.mean_difference, "decision": self.decision}


def paired_t_test(a, b, alpha: float = ALPHA) -> TTestResult:
    """Two-tailed paired t-test on equal-length score vectors."""
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = [x - y for x, y in zip(a, b)]
    mean = math.fsum(d) / n
    var = 0.0 if max(d) == min(d) else math.fsum((v - mean) ** 2 for v in d) / (n - 1)
    df = n - 1
    if var == 0.0:
        t = 0.0 if d[0] == 0.0 else math.copysign(math.inf, d[0])
    else:
        t = mean / math.sqrt(var / n)
    p = student_t_sf2(t, df)
    if p < alpha:
        decision = f"reject the null hypothesis of equal means at alpha={alpha:g}"
    else:
        decision = f"cannot reject the null hypothesis of equal means at alpha={alpha:g}"
    return TTestResult(t, p, df, mean, decision)
