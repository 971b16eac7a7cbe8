"""Pydantic request/response models for the recognition service.

The service is local-first: requests reference clips, stores and output
locations by filesystem path and responses return what was computed or
written.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class FaceBoxModel(BaseModel):
    x: int
    y: int
    width: int
    height: int


class SynthRequest(BaseModel):
    kind: str = "words"  # faces | lips | words
    out_dir: str
    count: int = 20
    reps: int = 5
    sessions: list[int] = [1]
    seed: int = 17
    speaker: str = "synth01"


class SynthResponse(BaseModel):
    paths: list[str]


class FacesRequest(BaseModel):
    clip_dir: str
    config_path: str | None = None
    out_dir: str | None = None  # overlay frames written here when given


class FacesResponse(BaseModel):
    boxes: list[FaceBoxModel]
    overlays: list[str] = []


class MouthModel(BaseModel):
    frame: int
    found: bool
    box: FaceBoxModel | None = None  # frame coordinates


class LipsRequest(BaseModel):
    clip_dir: str
    config_path: str | None = None
    out_dir: str | None = None  # masks (pbm) and overlays written here


class LipsResponse(BaseModel):
    mouths: list[MouthModel]
    masks: list[str] = []


class FeaturesRequest(BaseModel):
    clip_dir: str
    annotations_path: str | None = None  # defaults to clip_dir/annotations.txt
    out_dir: str
    config_path: str | None = None


class FeaturesResponse(BaseModel):
    store_dir: str
    files: list[str]
    words: list[str]


class TrainRequest(BaseModel):
    feature_dirs: list[str]
    out_dir: str
    word: str | None = None  # keep only this label
    group: str | None = None  # keep only this word group
    speaker: str | None = None  # keep only this speaker


class TrainResponse(BaseModel):
    store_dir: str
    entries: int
    vocabulary: list[str]


class NearestModel(BaseModel):
    label: str
    distance: float


class ClassifyRequest(BaseModel):
    store_dir: str
    input_path: str
    k: int = 1
    mode: str = "dtw"
    rule: str = "wknn"
    weights: str = "sd"


class ClassifyResponse(BaseModel):
    label: str
    nearest: list[NearestModel]


class EvalRequest(BaseModel):
    store_dir: str
    protocol: str = "sd"  # sd | si | sd2
    ks: list[int] = [1]
    mode: str = "dtw"
    rule: str = "wknn"
    weights: str = "sd"
    group_rule: bool = False


class EvalResponse(BaseModel):
    report_text: str
    overall: dict[int, float]
    per_subject: dict[str, dict[int, float]]
    n_folds: int


class IdentifyRequest(BaseModel):
    gallery_dir: str
    input_path: str
    k: int = 1
    mode: str = "dtw"
    weights: str = "sd"


class IdentifyResponse(BaseModel):
    speaker: str


class EnrollRequest(BaseModel):
    store_dir: str  # signatures to enrol (a training store)
    client_id: str
    threshold: float = Field(gt=0)
    max_tries: int = 3
    out_dir: str


class EnrollResponse(BaseModel):
    profile_dir: str
    enrolled: int


class VerifyRequest(BaseModel):
    profile_dir: str
    input_path: str
    tries_so_far: int = 0
    mode: str = "dtw"
    weights: str = "sd"


class VerifyResponse(BaseModel):
    decision: str  # pass | retry | block
    distance: float


class BuildWatchlistRequest(BaseModel):
    store_dir: str
    threshold: float
    out_dir: str


class BuildWatchlistResponse(BaseModel):
    watchlist_dir: str
    entries: int


class SpotRequest(BaseModel):
    watchlist_dir: str
    input_path: str
    mode: str = "dtw"
    weights: str = "sd"


class SpotResponse(BaseModel):
    alarm: bool
    label: str | None
    distance: float


class SweepRequest(BaseModel):
    enrolled_dir: str
    genuine_dir: str
    impostor_dir: str
    grid_start: float = 1.0
    grid_stop: float = 5.0
    grid_step: float = 0.1
    omega: float | None = None  # weighted-error threshold when given
    mode: str = "dtw"
    weights: str = "sd"
    out_path: str | None = None


class SweepResponse(BaseModel):
    best: float
    best_weighted: float | None = None
    frr_at_best: float
    far_at_best: float
    curve_path: str | None = None
