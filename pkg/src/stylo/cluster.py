"""Affinity propagation over confusion-derived category similarities."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SimilarityMatrix:
    categories: tuple[str, ...]
    s: np.ndarray
    preference: float | np.ndarray


@dataclass(frozen=True)
class ClusterResult:
    exemplars: tuple[int, ...]
    assignment: tuple[int, ...]  # exemplar index per category; -1 when none emerged
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def members(self) -> dict[int, list[int]]:
        return {e: [i for i, a in enumerate(self.assignment) if a == e] for e in self.exemplars}


def _off_diagonal(a: np.ndarray) -> np.ndarray:
    return a[~np.eye(a.shape[0], dtype=bool)]


def confusion_to_similarity(categories, counts, preference: float | None = None) -> SimilarityMatrix:
    """Row-normalize, symmetrize by averaging with the transpose, and put the
    preference (default: median off-diagonal similarity) on the diagonal."""
    cm = np.asarray(counts, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] != len(categories):
        raise ValidationError(f"confusion matrix must be square over {len(categories)} categories")
    rows = cm.sum(axis=1)
    if np.any(rows <= 0):
        zero = [categories[i] for i in np.flatnonzero(rows <= 0)]
        raise ValidationError(f"confusion matrix row(s) {zero} sum to zero")
    P = cm / rows[:, None]
    s = (P + P.T) / 2.0
    if preference is None:
        preference = float(np.median(_off_diagonal(s))) if len(categories) > 1 else 0.0
    np.fill_diagonal(s, preference)
    return SimilarityMatrix(tuple(categories), s, preference)


def affinity_propagation(
    sim: SimilarityMatrix | np.ndarray,
    damping: float = 0.5,
    max_iter: int = 200,
    convergence_iter: int = 15,
    preference=None,
) -> ClusterResult:
    """Damped responsibility/availability message passing.

    ``sim`` may be a SimilarityMatrix (already carrying its preference on the
    diagonal) or a raw square array, in which case ``preference`` fills the
    diagonal when given.  Exemplars are the points with positive
    self-responsibility plus self-availability at the end of message passing,
    then refined within their clusters.  A perturbation of 1e-12 times the similarity range,
    growing with column index, breaks exact ties in favour of lower indices.
    """
    S = np.array(sim.s if isinstance(sim, SimilarityMatrix) else sim, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("similarity matrix must be square")
    if not 0.5 <= damping < 1.0:
        raise ValidationError(f"damping must lie in [0.5, 1), got {damping}")
    if preference is not None:
        np.fill_diagonal(S, preference)
    n = S.shape[0]
    if n == 1:
        return ClusterResult((0,), (0,), 0, True)

    spread = float(S.max() - S.min())
    S_exact = S
    S = S - 1e-12 * (spread if spread > 0 else 1.0) * np.arange(n)[None, :]

    R = np.zeros((n, n))
    A = np.zeros((n, n))
    rows = np.arange(n)
    history = np.zeros((n, convergence_iter), dtype=bool)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # responsibilities: s(i,k) - max over k' != k of a(i,k') + s(i,k')
        AS = A + S
        first = np.argmax(AS, axis=1)
        best = AS[rows, first]
        AS[rows, first] = -np.inf
        second = AS.max(axis=1)
        R_new = S - best[:, None]
        R_new[rows, first] = S[rows, first] - second
        R = damping * R + (1 - damping) * R_new

        # availabilities
        Rp = np.maximum(R, 0.0)
        np.fill_diagonal(Rp, R.diagonal())
        col = Rp.sum(axis=0)
        A_new = col[None, :] - Rp
        diag = A_new.diagonal().copy()
        A_new = np.minimum(A_new, 0.0)
        np.fill_diagonal(A_new, diag)
        A = damping * A + (1 - damping) * A_new

        exemplar = (R.diagonal() + A.diagonal()) > 0
        history[:, (it - 1) % convergence_iter] = exemplar
        if it >= convergence_iter:
            stable = np.all(history == history[:, :1], axis=1).all()
            if stable and exemplar.any():
                converged = True
                break

    exemplars = np.flatnonzero((R.diagonal() + A.diagonal()) > 0)
    if len(exemplars) == 0:
        return ClusterResult((), tuple([-1] * n), it, False, {"reason": "no exemplar emerged"})
    raw = exemplars.copy()
    exemplars = _refine(S_exact, exemplars, tol=1e-9 * (spread if spread > 0 else 1.0))
    choice = exemplars[np.argmax(S[:, exemplars], axis=1)]
    choice[exemplars] = exemplars
    diagnostics = {"message_exemplars": [int(e) for e in raw]}
    if not converged:
        diagnostics["reason"] = f"exemplar set not stable after {max_iter} iterations"
    return ClusterResult(tuple(int(e) for e in exemplars), tuple(int(c) for c in choice), it, converged, diagnostics)


def _refine(S, exemplars, tol):
    """Re-pick each cluster's exemplar as the member with the largest summed
    within-cluster similarity; the current exemplar wins ties (within ``tol``)."""
    exemplars = exemplars.copy()
    label = np.argmax(S[:, exemplars], axis=1)
    label[exemplars] = np.arange(len(exemplars))
    for k in range(len(exemplars)):
        members = np.flatnonzero(label == k)
        totals = S[np.ix_(members, members)].sum(axis=0)
        current = totals[members == exemplars[k]][0]
        if current < totals.max() - tol:
            exemplars[k] = members[np.argmax(totals)]
    return np.unique(exemplars)


def cluster_report(categories, result: ClusterResult, preference=None, damping=None) -> dict:
    def pref_value(p):
        return p.tolist() if isinstance(p, np.ndarray) else p

    return {
        "exemplars": [categories[e] for e in result.exemplars],
        "clusters": [
            {"exemplar": categories[e], "members": [categories[i] for i in members]}
            for e, members in result.members().items()
        ],
        "preference": pref_value(preference),
        "damping": damping,
        "iterations": result.iterations,
        "converged": result.converged,
        "diagnostics": result.diagnostics,
    }


def read_confusion_csv(path):
    """Read a confusion CSV: header ``gold\\predicted,<cat>...``, one row per gold category."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    categories = rows[0][1:]
    labels = [r[0] for r in rows[1:]]
    if labels != categories:
        raise ValidationError("confusion CSV row labels must match column labels")
    counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=int)
    return tuple(categories), counts


def write_cluster_json(path, report: dict):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
