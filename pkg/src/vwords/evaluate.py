"""Cross-validation protocols and verification-threshold analysis.

Speaker-dependent leave-one-word-out, cross-session speaker-dependent and
speaker-independent leave-one-subject-out protocols with per-subject word
recognition rates and confusion matrices; the single-rule group-constrained
decoder; FAR/FRR sweeps over a threshold grid with weighted error rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import (
    FeatureWeights,
    TrainingSet,
    decide_knn,
    decide_wknn,
    fused_scores,
    rank_labels,
)

PROTOCOL_KINDS = ("sd_loo", "si_loso", "sd2_session")


@dataclass
class Protocol:
    kind: str
    ks: tuple[int, ...] = (1,)
    mode: str = "dtw"
    weights: FeatureWeights | None = None
    rule: str = "wknn"
    group_rule: bool = False

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"kind must be one of {PROTOCOL_KINDS}, got {self.kind!r}")
        if not self.ks:
            raise ValueError("ks must be non-empty")
        if self.rule not in ("knn", "wknn"):
            raise ValueError(f"rule must be knn or wknn, got {self.rule!r}")


@dataclass
class EvalReport:
    kind: str
    ks: tuple[int, ...]
    vocabulary: list[str]
    per_subject: dict[str, dict[int, float]]
    overall: dict[int, float]
    confusion: dict[int, np.ndarray]
    n_folds: int
    group_rule: bool = False

    def best_k(self) -> int:
        return max(self.ks, key=lambda k: (self.overall[k], -k))

    def render_text(self) -> str:
        lines = [f"protocol: {self.kind}" + (" (group rule, oracle-assisted)" if self.group_rule else "")]
        header = "subject".ljust(12) + "".join(f"k={k}".rjust(9) for k in self.ks)
        lines.append(header)
        for subj in sorted(self.per_subject):
            row = subj.ljust(12) + "".join(
                f"{self.per_subject[subj][k]:8.2f}%" for k in self.ks
            )
            lines.append(row)
        lines.append(
            "overall".ljust(12) + "".join(f"{self.overall[k]:8.2f}%" for k in self.ks)
        )
        k = self.best_k()
        lines.append(f"confusion matrix (k={k}; rows = true, cols = predicted)")
        lines.append(" " * 12 + " ".join(w[:7].rjust(7) for w in self.vocabulary))
        for i, w in enumerate(self.vocabulary):
            counts = " ".join(f"{int(c):7d}" for c in self.confusion[k][i])
            lines.append(w[:11].ljust(12) + counts)
        return "\n".join(lines)


def label_groups(data: TrainingSet) -> dict[str, str]:
    """Word -> group mapping from the data; inconsistent assignments error."""
    groups: dict[str, str] = {}
    for e in data.entries:
        if e.label in groups and groups[e.label] != e.group:
            raise ValueError(f"label {e.label!r} maps to two groups")
        groups[e.label] = e.group
    return groups


def group_constrained(ranking: list[str], test_group: str, groups: dict[str, str]) -> str:
    """First ranked label in the test word's group; fall back to rank 1."""
    if not ranking:
        raise ValueError("empty ranking")
    for label in ranking:
        if label not in groups:
            raise ValueError(f"no group assigned to label {label!r}")
        if groups[label] == test_group:
            return label
    return ranking[0]


def _folds(data: TrainingSet, kind: str):
    """Yield (test_entry, train_entries) per the protocol's fold structure."""
    by_subject: dict[str, list] = {}
    for e in data.entries:
        by_subject.setdefault(e.speaker, []).append(e)

    if kind == "sd_loo":
        for subj, entries in by_subject.items():
            per_word: dict[str, int] = {}
            for e in entries:
                per_word[e.label] = per_word.get(e.label, 0) + 1
            thin = [w for w, c in per_word.items() if c < 2]
            if thin:
                raise ValueError(
                    f"sd_loo needs >=2 samples per word per subject; "
                    f"subject {subj!r} has one sample of {thin}"
                )
        for subj, entries in by_subject.items():
            for i, test in enumerate(entries):
                yield test, entries[:i] + entries[i + 1 :]
    elif kind == "si_loso":
        if len(by_subject) < 2:
            raise ValueError(
                f"si_loso needs >=2 subjects, got {len(by_subject)}"
            )
        for subj, tests in by_subject.items():
            train = [e for e in data.entries if e.speaker != subj]
            for test in tests:
                yield test, train
    elif kind == "sd2_session":
        usable = 0
        for subj, entries in by_subject.items():
            train = [e for e in entries if e.session == 2]
            tests = [e for e in entries if e.session == 1]
            if not train or not tests:
                continue  # subject missing a session is skipped
            usable += 1
            for test in tests:
                yield test, train
        if not usable:
            raise ValueError("sd2_session needs subjects recorded in both sessions")
    else:
        raise ValueError(f"unknown protocol kind {kind!r}")


def run_protocol(data: TrainingSet, p: Protocol) -> EvalReport:
    """Execute the protocol's folds and aggregate recognition rates."""
    if not data.entries:
        raise ValueError("empty data set")
    vocab = data.vocabulary
    v_index = {w: i for i, w in enumerate(vocab)}
    groups = label_groups(data) if p.group_rule else None
    decide = decide_wknn if p.rule == "wknn" else decide_knn

    correct: dict[str, dict[int, int]] = {}
    totals: dict[str, int] = {}
    confusion = {k: np.zeros((len(vocab), len(vocab)), dtype=np.int64) for k in p.ks}
    n_folds = 0
    for test, train_entries in _folds(data, p.kind):
        n_folds += 1
        train = TrainingSet(train_entries)
        scores = fused_scores(test, train, p.weights, p.mode)
        totals[test.speaker] = totals.get(test.speaker, 0) + 1
        for k in p.ks:
            pred = decide(scores, train.labels, k)
            if groups is not None:
                ranking = rank_labels(scores, train.labels, first=pred)
                pred = group_constrained(ranking, test.group, groups)
            if pred == test.label:
                correct.setdefault(test.speaker, {}).setdefault(k, 0)
                correct[test.speaker][k] += 1
            confusion[k][v_index[test.label], v_index[pred]] += 1

    per_subject = {
        subj: {
            k: 100.0 * correct.get(subj, {}).get(k, 0) / totals[subj] for k in p.ks
        }
        for subj in totals
    }
    total = sum(totals.values())
    overall = {
        k: 100.0 * sum(correct.get(s, {}).get(k, 0) for s in totals) / total
        for k in p.ks
    }
    return EvalReport(
        kind=p.kind,
        ks=p.ks,
        vocabulary=vocab,
        per_subject=per_subject,
        overall=overall,
        confusion=confusion,
        n_folds=n_folds,
        group_rule=p.group_rule,
    )


def default_grid() -> np.ndarray:
    """Thresholds 1.0 to 5.0 in 0.1 steps."""
    return (np.arange(41) + 10) / 10.0


@dataclass
class ThresholdCurve:
    thresholds: np.ndarray
    frr: np.ndarray
    far: np.ndarray
    best: float

    def best_weighted(self, omega: float) -> float:
        err = weighted_error(self.far, self.frr, omega)
        return float(self.thresholds[int(np.argmin(err))])

    def write(self, path) -> None:
        lines = ["threshold,frr,far"]
        for t, fr, fa in zip(self.thresholds, self.frr, self.far):
            lines.append(f"{t:.6f},{fr:.6f},{fa:.6f}")
        Path(path).write_text("\n".join(lines) + "\n")


def far_frr_sweep(genuine, impostor, grid=None) -> ThresholdCurve:
    """Error-rate curves for the accept-iff-distance-below-threshold rule.

    FRR(t) is the fraction of genuine distances >= t, FAR(t) the fraction of
    impostor distances < t; best is the smallest grid threshold minimizing
    their sum.
    """
    g = np.asarray(genuine, dtype=np.float64).ravel()
    i = np.asarray(impostor, dtype=np.float64).ravel()
    if g.size == 0 or i.size == 0:
        raise ValueError("need non-empty genuine and impostor distance lists")
    t = default_grid() if grid is None else np.asarray(grid, dtype=np.float64).ravel()
    frr = (g[None, :] >= t[:, None]).mean(axis=1)
    far = (i[None, :] < t[:, None]).mean(axis=1)
    best = float(t[int(np.argmin(frr + far))])  # argmin takes the smallest t on ties
    return ThresholdCurve(thresholds=t, frr=frr, far=far, best=best)


def weighted_error(far, frr, omega: float):
    """(omega * FAR + FRR) / (omega + 1)."""
    if omega <= 0:
        raise ValueError("omega must be > 0")
    return (omega * np.asarray(far) + np.asarray(frr)) / (omega + 1.0)
