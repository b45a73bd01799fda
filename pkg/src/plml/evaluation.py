"""Paired-classifier significance testing and multi-method comparison.

Two classifiers are compared on the instances they disagree about:
b counts cases only the first got right, c cases only the second did.
Small discordant counts (b + c < 25) use the exact two-sided binomial
test; larger ones use the continuity-corrected chi-square statistic.
A comparison across several methods awards 1 point per pairwise win,
0.5 per tie, and 0 per loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from .core import Dataset
from .errors import ContractError
from .neighbors import nearest_index

EXACT_TEST_LIMIT = 25  # switch point for discordant-pair count b + c

OUTCOMES = ("a_wins", "b_wins", "tie")


@dataclass(frozen=True)
class McNemarResult:
    outcome: str            # "a_wins" | "b_wins" | "tie"
    b: int                  # a correct, b wrong
    c: int                  # a wrong, b correct
    p_value: float
    statistic: Optional[float]   # None for the exact branch
    exact: bool
    alpha: float


def mcnemar_test(pred_a, pred_b, truth, alpha: float = 0.05) -> McNemarResult:
    """Paired test on two prediction vectors against the ground truth."""
    pred_a = np.asarray(pred_a)
    pred_b = np.asarray(pred_b)
    truth = np.asarray(truth)
    if not pred_a.shape == pred_b.shape == truth.shape or truth.ndim != 1:
        raise ContractError(
            f"prediction and truth vectors must share a 1-D shape, got "
            f"{pred_a.shape}, {pred_b.shape}, {truth.shape}"
        )
    if not 0.0 < alpha < 1.0:
        raise ContractError(f"alpha must be in (0, 1), got {alpha}")
    right_a = pred_a == truth
    right_b = pred_b == truth
    b = int(np.sum(right_a & ~right_b))
    c = int(np.sum(~right_a & right_b))

    if b + c == 0:
        return McNemarResult("tie", b, c, 1.0, None, True, alpha)
    if b + c < EXACT_TEST_LIMIT:
        p = min(1.0, 2.0 * stats.binom.cdf(min(b, c), b + c, 0.5))
        statistic = None
        exact = True
    else:
        statistic = (abs(b - c) - 1.0) ** 2 / (b + c)
        p = float(stats.chi2.sf(statistic, df=1))
        exact = False
    if p < alpha and b != c:
        outcome = "a_wins" if b > c else "b_wins"
    else:
        outcome = "tie"
    return McNemarResult(outcome, b, c, float(p), statistic, exact, alpha)


def ranking_points(
    outcomes: Dict[Tuple[str, str], str], methods
) -> Dict[str, float]:
    """Points per method from pairwise outcomes keyed by (a, b) tuples."""
    methods = list(methods)
    points = {name: 0.0 for name in methods}
    for (a, b), outcome in outcomes.items():
        if outcome not in OUTCOMES:
            raise ContractError(f"unknown outcome {outcome!r} for pair ({a}, {b})")
        if a not in points or b not in points:
            raise ContractError(f"pair ({a}, {b}) names an unlisted method")
        if outcome == "a_wins":
            points[a] += 1.0
        elif outcome == "b_wins":
            points[b] += 1.0
        else:
            points[a] += 0.5
            points[b] += 0.5
    return points


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ContractError(
            f"shape mismatch: {pred.shape} vs {truth.shape}"
        )
    return float(np.mean(pred == truth))


def euclidean_1nn_predict(train: Dataset, X_query) -> np.ndarray:
    """Plain 1-NN baseline in whatever space the inputs live in."""
    return train.y[nearest_index(X_query, train.X)]


@dataclass(frozen=True)
class ComparisonReport:
    methods: tuple
    accuracies: Dict[str, float]
    pairwise: Dict[Tuple[str, str], McNemarResult]
    points: Dict[str, float]
    alpha: float
    n_test: int

    def render_text(self) -> str:
        lines = [
            f"{'method':<12} {'accuracy':>9} {'points':>7}",
            "-" * 30,
        ]
        order = sorted(self.methods, key=lambda nm: -self.points[nm])
        for name in order:
            lines.append(
                f"{name:<12} {100.0 * self.accuracies[name]:>8.2f}% "
                f"{self.points[name]:>7.1f}"
            )
        lines.append("")
        lines.append(f"pairwise tests (alpha={self.alpha}, n={self.n_test}):")
        for (a, b), res in self.pairwise.items():
            kind = "exact" if res.exact else "chi2"
            lines.append(
                f"  {a} vs {b}: {res.outcome} "
                f"(b={res.b}, c={res.c}, p={res.p_value:.4f}, {kind})"
            )
        return "\n".join(lines)

    def to_csv_rows(self):
        rows = [("method", "accuracy", "points")]
        for name in self.methods:
            rows.append((name, f"{self.accuracies[name]:.6f}",
                         f"{self.points[name]:.1f}"))
        rows.append(("pair", "outcome", "p_value"))
        for (a, b), res in self.pairwise.items():
            rows.append((f"{a}|{b}", res.outcome, f"{res.p_value:.6g}"))
        return rows


def build_report(
    predictions: Dict[str, np.ndarray], truth, alpha: float = 0.05
) -> ComparisonReport:
    """Pairwise tests + points for named prediction vectors."""
    methods = tuple(predictions)
    if len(methods) < 2:
        raise ContractError("a comparison needs at least two methods")
    truth = np.asarray(truth)
    accuracies = {nm: accuracy(predictions[nm], truth) for nm in methods}
    pairwise = {}
    outcomes = {}
    for ai in range(len(methods)):
        for bi in range(ai + 1, len(methods)):
            a, b = methods[ai], methods[bi]
            res = mcnemar_test(predictions[a], predictions[b], truth, alpha)
            pairwise[(a, b)] = res
            outcomes[(a, b)] = res.outcome
    points = ranking_points(outcomes, methods)
    return ComparisonReport(
        methods=methods, accuracies=accuracies, pairwise=pairwise,
        points=points, alpha=alpha, n_test=int(truth.shape[0]),
    )
