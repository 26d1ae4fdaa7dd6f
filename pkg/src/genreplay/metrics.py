"""Evaluation metrics and incremental result tables."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .samples import LABEL_FAKE


def auc(scores, labels):
    """Rank-based AUC with the fake class positive; ties get half credit."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == LABEL_FAKE
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need at least one sample of each class")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def accuracy(scores, labels, threshold=0.5):
    """(overall, real_acc, fake_acc); a class absent from labels reports None."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("accuracy needs at least one sample")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0,1)")
    pred_fake = scores >= threshold
    is_fake = labels == LABEL_FAKE
    correct = pred_fake == is_fake
    overall = float(correct.mean())
    real_acc = float(correct[~is_fake].mean()) if (~is_fake).any() else None
    fake_acc = float(correct[is_fake].mean()) if is_fake.any() else None
    return overall, real_acc, fake_acc


def performance_drop(m0, mN):
    if not (0.0 <= m0 <= 1.0 and 0.0 <= mN <= 1.0):
        raise ValueError("metric values must lie in [0,1]")
    return m0 - mN


@dataclass
class TaskEval:
    """One task's scores at one incremental step."""

    auc: float
    acc: float
    acc_real: float
    acc_fake: float


@dataclass
class StepRow:
    step: int
    task_auc: dict
    task_acc: dict
    avg_auc: float
    pre_avg_auc: float | None
    pd_auc: float | None
    acc_real: float | None
    acc_fake: float | None
    pd_acc_real: float | None
    pd_acc_fake: float | None
    alpha: float | None


@dataclass
class MetricsTable:
    n_tasks: int
    rows: list = field(default_factory=list)

    @property
    def final(self):
        return self.rows[-1]


def build_table(per_step_evals, alphas=None):
    """Assemble the incremental table from a lower-triangular step x task grid.

    per_step_evals: list over steps; entry k is a dict {task_index: TaskEval}
    covering every task <= k (the diagonal must be present). alphas, when
    given, is one optional float per step.
    """
    n_steps = len(per_step_evals)
    if n_steps == 0:
        raise ValueError("no evaluations supplied")
    alphas = alphas or [None] * n_steps
    table = MetricsTable(n_tasks=n_steps)
    m0_auc = m0_real = m0_fake = None
    for k, evals in enumerate(per_step_evals):
        if k not in evals:
            raise ValueError(f"missing diagonal evaluation for step {k + 1}")
        seen = sorted(evals)
        aucs = [evals[t].auc for t in seen]
        avg_auc = float(np.mean(aucs))
        prev = [evals[t].auc for t in seen if t != k]
        pre_avg = float(np.mean(prev)) if prev else None
        reals = [evals[t].acc_real for t in seen if evals[t].acc_real is not None]
        fakes = [evals[t].acc_fake for t in seen if evals[t].acc_fake is not None]
        acc_real = float(np.mean(reals)) if reals else None
        acc_fake = float(np.mean(fakes)) if fakes else None
        if k == 0:
            m0_auc, m0_real, m0_fake = avg_auc, acc_real, acc_fake
            pd_auc = pd_real = pd_fake = None
        else:
            pd_auc = performance_drop(m0_auc, avg_auc)
            pd_real = (
                performance_drop(m0_real, acc_real)
                if m0_real is not None and acc_real is not None
                else None
            )
            pd_fake = (
                performance_drop(m0_fake, acc_fake)
                if m0_fake is not None and acc_fake is not None
                else None
            )
        table.rows.append(
            StepRow(
                step=k + 1,
                task_auc={t: evals[t].auc for t in seen},
                task_acc={t: evals[t].acc for t in seen},
                avg_auc=avg_auc,
                pre_avg_auc=pre_avg,
                pd_auc=pd_auc,
                acc_real=acc_real,
                acc_fake=acc_fake,
                pd_acc_real=pd_real,
                pd_acc_fake=pd_fake,
                alpha=alphas[k],
            )
        )
    return table


def table_columns(n_tasks):
    cols = ["step"]
    cols += [f"auc_t{t + 1}" for t in range(n_tasks)]
    cols += [f"acc_t{t + 1}" for t in range(n_tasks)]
    cols += [
        "avg_auc",
        "pre_avg_auc",
        "pd_auc",
        "acc_real",
        "acc_fake",
        "pd_acc_real",
        "pd_acc_fake",
        "alpha",
    ]
    return cols


def table_row_values(table, row):
    vals = [row.step]
    for t in range(table.n_tasks):
        vals.append(row.task_auc.get(t))
    for t in range(table.n_tasks):
        vals.append(row.task_acc.get(t))
    vals += [
        row.avg_auc,
        row.pre_avg_auc,
        row.pd_auc,
        row.acc_real,
        row.acc_fake,
        row.pd_acc_real,
        row.pd_acc_fake,
        row.alpha,
    ]
    return vals


def table_to_dict(table):
    """Full-precision nested summary for JSON output."""
    return {
        "n_tasks": table.n_tasks,
        "rows": [
            {
                "step": r.step,
                "task_auc": {f"t{t + 1}": v for t, v in sorted(r.task_auc.items())},
                "task_acc": {f"t{t + 1}": v for t, v in sorted(r.task_acc.items())},
                "avg_auc": r.avg_auc,
                "pre_avg_auc": r.pre_avg_auc,
                "pd_auc": r.pd_auc,
                "acc_real": r.acc_real,
                "acc_fake": r.acc_fake,
                "pd_acc_real": r.pd_acc_real,
                "pd_acc_fake": r.pd_acc_fake,
                "alpha": r.alpha,
            }
            for r in table.rows
        ],
    }
