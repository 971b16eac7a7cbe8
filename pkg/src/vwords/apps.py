"""Applications on top of the recognizer: speaker identification,
visual-password verification and watch-list word spotting."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import FeatureWeights, TrainingSet, decide_wknn, fused_scores
from .features import FeatureMatrix, read_feature_matrix, write_feature_matrix


@dataclass
class PasswordProfile:
    """One client's enrolled visual password plus the decision policy."""

    client_id: str
    enrolled: list[FeatureMatrix]
    threshold: float
    max_tries: int = 3

    def __post_init__(self):
        if not self.enrolled:
            raise ValueError("a profile needs at least one enrolled signature")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")


@dataclass
class WatchList:
    """Labelled security-word signatures and the alarm threshold."""

    entries: list[FeatureMatrix]
    threshold: float

    def __post_init__(self):
        if not self.entries:
            raise ValueError("a watch list needs at least one signature")


@dataclass
class SpotResult:
    alarm: bool
    label: str | None
    distance: float


def identify_speaker(
    test: FeatureMatrix,
    gallery: TrainingSet,
    k: int = 1,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> str:
    """Weighted-KNN over the gallery with speaker ids as the class labels."""
    if not gallery.entries:
        raise ValueError("empty speaker gallery")
    scores = fused_scores(test, gallery, weights, mode)
    return decide_wknn(scores, [e.speaker for e in gallery.entries], k)


def nearest_distance(
    test: FeatureMatrix,
    entries: list[FeatureMatrix],
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> tuple[float, int]:
    scores = fused_scores(test, TrainingSet(list(entries)), weights, mode)
    idx = int(np.argmin(scores))
    return float(scores[idx]), idx


def verify_password(
    attempt: FeatureMatrix,
    profile: PasswordProfile,
    tries_so_far: int = 0,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> tuple[str, float]:
    """Decide pass/retry/block for one attempt.

    Pass iff the nearest enrolled distance is strictly below the threshold;
    otherwise retry until max_tries consecutive failures, then block. The
    retry counter is caller-owned state.
    """
    d, _ = nearest_distance(attempt, profile.enrolled, weights, mode)
    if d < profile.threshold:
        return "pass", d
    if tries_so_far + 1 < profile.max_tries:
        return "retry", d
    return "block", d


def concat_signatures(a: FeatureMatrix, b: FeatureMatrix) -> FeatureMatrix:
    """Concatenate two signatures in time: a's frames then b's."""
    if a.values.shape[1] != b.values.shape[1]:
        raise ValueError("signature schemas differ")
    label = f"{a.label}+{b.label}" if a.label or b.label else ""
    return FeatureMatrix(
        np.vstack([a.values, b.values]),
        label=label,
        speaker=a.speaker,
        session=a.session,
        repetition=a.repetition,
        group=a.group,
    )


def bootstrap_pairs(word_a_samples, word_b_samples) -> list[FeatureMatrix]:
    """All |A| x |B| ordered concatenations (a then b)."""
    return [concat_signatures(a, b) for a in word_a_samples for b in word_b_samples]


def spot_security_word(
    test: FeatureMatrix,
    watch: WatchList,
    weights: FeatureWeights | None = None,
    mode: str = "dtw",
) -> SpotResult:
    """Alarm iff the nearest security signature is strictly below threshold."""
    d, idx = nearest_distance(test, watch.entries, weights, mode)
    if d < watch.threshold:
        return SpotResult(alarm=True, label=watch.entries[idx].label, distance=d)
    return SpotResult(alarm=False, label=None, distance=d)


# ---------------------------------------------------------------- stores


def save_profile(profile: PasswordProfile, directory) -> None:
    """Profile store: signature files plus a manifest with the policy."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = [
        f"client={profile.client_id}",
        f"threshold={profile.threshold}",
        f"max_tries={profile.max_tries}",
    ]
    for i, fm in enumerate(profile.enrolled):
        name = f"enrolled_{i:03d}.csv"
        write_feature_matrix(fm, d / name)
        lines.append(f"entry={name}")
    (d / "profile.txt").write_text("\n".join(lines) + "\n")


def load_profile(directory) -> PasswordProfile:
    d = Path(directory)
    manifest = d / "profile.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"no profile manifest in {d}")
    client, threshold, max_tries, enrolled = "", None, 3, []
    for line in manifest.read_text().splitlines():
        key, _, val = line.partition("=")
        if key == "client":
            client = val
        elif key == "threshold":
            threshold = float(val)
        elif key == "max_tries":
            max_tries = int(val)
        elif key == "entry":
            enrolled.append(read_feature_matrix(d / val))
    if threshold is None:
        raise ValueError(f"{manifest}: missing threshold")
    return PasswordProfile(client, enrolled, threshold, max_tries)


def save_watchlist(watch: WatchList, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = [f"threshold={watch.threshold}"]
    for i, fm in enumerate(watch.entries):
        name = f"security_{i:03d}.csv"
        write_feature_matrix(fm, d / name)
        lines.append(f"entry={name},{fm.label}")
    (d / "watchlist.txt").write_text("\n".join(lines) + "\n")


def load_watchlist(directory) -> WatchList:
    d = Path(directory)
    manifest = d / "watchlist.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"no watch-list manifest in {d}")
    threshold, entries = None, []
    for line in manifest.read_text().splitlines():
        key, _, val = line.partition("=")
        if key == "threshold":
            threshold = float(val)
        elif key == "entry":
            name, _, label = val.partition(",")
            entries.append(read_feature_matrix(d / name, label=label))
    if threshold is None:
        raise ValueError(f"{manifest}: missing threshold")
    return WatchList(entries, threshold)
