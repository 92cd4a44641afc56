"""Similarity metrics between generated and ground-truth target graphs."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .graph import Dataset, Graph


class UndefinedMetricError(ValueError):
    pass


class MetricDomainError(ValueError):
    pass


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def mse(x, y) -> float:
    x, y = _pair(x, y)
    if x.size == 0:
        raise UndefinedMetricError("mse of empty vectors")
    return float(np.mean((x - y) ** 2))


def r2(y_true, y_pred) -> float:
    """1 - SS_res / SS_tot, SS_tot taken about the mean of ``y_true``."""
    t, p = _pair(y_true, y_pred)
    if t.size < 2:
        raise UndefinedMetricError("r2 needs at least two values")
    ss_tot = np.sum((t - t.mean()) ** 2)
    if ss_tot == 0:
        raise UndefinedMetricError("r2 undefined: true values have zero variance")
    return float(1.0 - np.sum((t - p) ** 2) / ss_tot)


def pearson(x, y) -> float:
    x, y = _pair(x, y)
    if x.size < 2:
        raise UndefinedMetricError("correlation needs at least two values")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(np.sum(xc * xc)), np.sqrt(np.sum(yc * yc))
    if sx == 0 or sy == 0:
        raise UndefinedMetricError("correlation undefined: zero variance")
    return float(np.clip(np.sum(xc * yc) / (sx * sy), -1.0, 1.0))


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = _vec(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    start = 0
    while start < x.size:
        stop = start + 1
        while stop < x.size and xs[stop] == xs[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def spearman(x, y) -> float:
    x, y = _pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def _binary_truth(t: np.ndarray) -> np.ndarray:
    if not np.all((t == 0) | (t == 1)):
        raise MetricDomainError("accuracy needs binary (0/1) ground truth")
    return t >= 0.5


def _accuracy(pred: np.ndarray, true: np.ndarray, threshold: float) -> float:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    truth = _binary_truth(true)
    if truth.size == 0:
        raise UndefinedMetricError("accuracy over zero entries")
    return float(np.mean((pred >= threshold) == truth))


def edge_entries(e, undirected: bool = True) -> np.ndarray:
    """Flatten an N x N (x K) edge tensor to one value per evaluated pair.

    Undirected graphs contribute each unordered pair once; the diagonal is
    never included.
    """
    e = np.asarray(e, dtype=np.float64)
    if e.ndim == 2:
        e = e[:, :, None]
    n = e.shape[0]
    if undirected:
        iu, ju = np.triu_indices(n, 1)
    else:
        iu, ju = np.nonzero(~np.eye(n, dtype=bool))
    return e[iu, ju, :].reshape(-1)


def edge_accuracy(pred_e, true_e, threshold: float = 0.5, undirected: bool = True) -> float:
    return _accuracy(edge_entries(pred_e, undirected), edge_entries(true_e, undirected), threshold)


def node_accuracy(pred_f, true_f, threshold: float = 0.5) -> float:
    return _accuracy(_vec(pred_f), _vec(true_f), threshold)


def consistency_fraction(graphs, poly=(0.0, 1.0, 5.0), tol: float = 0.5,
                         threshold: float = 0.5) -> float:
    """Fraction of nodes with |F_i - poly(deg_i)| < tol, degree from thresholded edges."""
    a, b, c = poly
    hits = total = 0
    for g in graphs:
        deg = g.degrees(threshold).astype(np.float64)
        expect = a * deg * deg + b * deg + c
        hits += int(np.sum(np.abs(g.f[:, 0] - expect) < tol))
        total += g.n
    if total == 0:
        raise UndefinedMetricError("no nodes to score")
    return hits / total


@dataclass
class EvalReport:
    pairs: int = 0
    n_mse: float | None = None
    n_r2: float | None = None
    n_pearson: float | None = None
    n_spearman: float | None = None
    n_acc: float | None = None
    e_mse: float | None = None
    e_r2: float | None = None
    e_pearson: float | None = None
    e_acc: float | None = None
    consistency: float | None = None
    consistency_tol: float = 0.5
    threshold: float = 0.5
    per_pair: list[dict] | None = field(default=None, repr=False)

    METRICS = ("n_mse", "n_r2", "n_pearson", "n_spearman", "n_acc",
               "e_mse", "e_r2", "e_pearson", "e_acc", "consistency")

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["per_pair"] is None:
            del d["per_pair"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_table(self) -> str:
        rows = [("pairs", str(self.pairs))]
        for name in self.METRICS:
            v = getattr(self, name)
            label = name.replace("_", "-").upper()
            if name == "consistency":
                label = f"CONSISTENCY(|F-poly(deg)|<{self.consistency_tol:g})"
            rows.append((label, "undefined" if v is None else f"{v:.6f}"))
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def _safe(fn, *args):
    try:
        return fn(*args)
    except (UndefinedMetricError, MetricDomainError):
        return None


def _is_binary(x: np.ndarray) -> bool:
    return x.size > 0 and bool(np.all((x == 0) | (x == 1)))


def score(preds: list[Graph], targets: list[Graph], threshold: float = 0.5,
          poly=(0.0, 1.0, 5.0), consistency_tol: float = 0.5) -> EvalReport:
    """Metrics pooled over the concatenated entries of all graphs."""
    if len(preds) != len(targets):
        raise ValueError(f"{len(preds)} predictions for {len(targets)} targets")
    if not preds:
        return EvalReport(pairs=0, consistency_tol=consistency_tol, threshold=threshold)
    for p, t in zip(preds, targets):
        if p.f.shape != t.f.shape or p.e.shape != t.e.shape:
            raise ValueError(f"prediction {p.f.shape}/{p.e.shape} vs target {t.f.shape}/{t.e.shape}")
    pf = np.concatenate([p.f.reshape(-1) for p in preds])
    tf = np.concatenate([t.f.reshape(-1) for t in targets])
    pe = np.concatenate([edge_entries(p.e, t.undirected) for p, t in zip(preds, targets)])
    te = np.concatenate([edge_entries(t.e, t.undirected) for t in targets])
    rep = EvalReport(
        pairs=len(preds),
        n_mse=_safe(mse, pf, tf), n_r2=_safe(r2, tf, pf),
        n_pearson=_safe(pearson, pf, tf), n_spearman=_safe(spearman, pf, tf),
        n_acc=_safe(_accuracy, pf, tf, threshold) if _is_binary(tf) else None,
        e_mse=_safe(mse, pe, te), e_r2=_safe(r2, te, pe), e_pearson=_safe(pearson, pe, te),
        e_acc=_safe(_accuracy, pe, te, threshold) if _is_binary(te) else None,
        consistency=(_safe(consistency_fraction, preds, poly, consistency_tol, threshold)
                     if preds[0].d >= 1 and preds[0].k >= 1 else None),
        consistency_tol=consistency_tol, threshold=threshold,
    )
    return rep


def evaluate(model, dataset: Dataset, threshold: float = 0.5, per_pair: bool = False,
             poly=(0.0, 1.0, 5.0), consistency_tol: float = 0.5) -> EvalReport:
    """Run the model on every input graph and score against the targets."""
    from .model import predict_batch

    preds = predict_batch(model, [p.input for p in dataset], [p.context for p in dataset])
    targets = [p.target for p in dataset]
    rep = score(preds, targets, threshold, poly, consistency_tol)
    if per_pair:
        rep.per_pair = [
            {k: v for k, v in score([p], [t], threshold, poly, consistency_tol).to_dict().items()
             if k in EvalReport.METRICS}
            for p, t in zip(preds, targets)
        ]
    return rep


def copy_input_report(dataset: Dataset, threshold: float = 0.5, poly=(0.0, 1.0, 5.0),
                      consistency_tol: float = 0.5) -> EvalReport:
    """Baseline that predicts the input graph unchanged."""
    return score([p.input for p in dataset], [p.target for p in dataset], threshold, poly, consistency_tol)


def average_reports(reports: list[EvalReport]) -> EvalReport:
    """Field-wise mean; a metric undefined in any report stays undefined."""
    out = EvalReport(pairs=sum(r.pairs for r in reports),
                     consistency_tol=reports[0].consistency_tol, threshold=reports[0].threshold)
    for name in EvalReport.METRICS:
        vals = [getattr(r, name) for r in reports]
        setattr(out, name, None if any(v is None for v in vals) else float(np.mean(vals)))
    return out
