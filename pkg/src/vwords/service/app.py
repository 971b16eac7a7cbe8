"""FastAPI service wrapping the lip-reading pipeline and its applications."""

from __future__ import annotations

import functools
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, apps, synth
from ..classify import FeatureWeights, TrainingSet, fused_scores, read_weights
from ..evaluate import Protocol, far_frr_sweep, run_protocol
from ..features import read_feature_matrix
from ..lips import tint_overlay, write_mask_pbm
from ..pipeline import (
    PipelineConfig,
    detect_faces,
    detect_lips,
    load_clip,
    load_training_set,
    read_annotations,
    read_config,
    run_pipeline,
    save_training_set,
    write_ppm,
)
from . import schemas

_PROTOCOLS = {"sd": "sd_loo", "si": "si_loso", "sd2": "sd2_session"}


def _config(path: str | None) -> PipelineConfig:
    return read_config(path) if path else PipelineConfig()


def _weights(name: str) -> FeatureWeights:
    if name == "sd":
        return FeatureWeights.sd()
    if name == "si":
        return FeatureWeights.si()
    if name == "uniform":
        return FeatureWeights.uniform()
    return read_weights(name)


def _clip_and_annotations(clip_dir: str, annotations_path: str | None):
    clip = load_clip(clip_dir)
    ann_path = annotations_path or str(Path(clip_dir) / "annotations.txt")
    return clip, read_annotations(ann_path)


def _bad_request_on_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, FileNotFoundError, NotADirectoryError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    return wrapper


def create_app() -> FastAPI:
    app = FastAPI(title="vwords", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/synth", response_model=schemas.SynthResponse)
    @_bad_request_on_error
    def synth_endpoint(req: schemas.SynthRequest):
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths: list[str] = []
        if req.kind == "words":
            dirs = synth.write_word_corpus(
                out, reps=req.reps, sessions=tuple(req.sessions),
                seed=req.seed, speaker=req.speaker,
            )
            paths = [str(d) for d in dirs]
        elif req.kind == "faces":
            for i, (frame, (x, y)) in enumerate(
                synth.face_fixture_suite(req.count, seed=req.seed)
            ):
                p = out / f"face_{i:03d}_at_{x}_{y}.ppm"
                write_ppm(frame, p)
                paths.append(str(p))
        elif req.kind == "lips":
            rng = np.random.default_rng(req.seed)
            for i, (img, truth) in enumerate(synth.lip_fixture_suite(req.count, seed=req.seed)):
                p = out / f"lips_{i:03d}.ppm"
                write_ppm(img, p)
                write_mask_pbm(truth, out / f"lips_{i:03d}_truth.pbm")
                paths.append(str(p))
        else:
            raise ValueError(f"kind must be faces, lips or words, got {req.kind!r}")
        return schemas.SynthResponse(paths=paths)

    @app.post("/faces", response_model=schemas.FacesResponse)
    @_bad_request_on_error
    def faces_endpoint(req: schemas.FacesRequest):
        clip = load_clip(req.clip_dir)
        boxes = detect_faces(clip, _config(req.config_path))
        overlays: list[str] = []
        if req.out_dir:
            out = Path(req.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for i, (frame, box) in enumerate(zip(clip.frames, boxes)):
                over = frame.copy()
                x0, y0 = box.x, box.y
                x1, y1 = x0 + box.width - 1, y0 + box.height - 1
                over[y0, x0 : x1 + 1] = (255, 0, 0)
                over[y1, x0 : x1 + 1] = (255, 0, 0)
                over[y0 : y1 + 1, x0] = (255, 0, 0)
                over[y0 : y1 + 1, x1] = (255, 0, 0)
                p = out / f"faces_{i:05d}.ppm"
                write_ppm(over, p)
                overlays.append(str(p))
        return schemas.FacesResponse(
            boxes=[
                schemas.FaceBoxModel(x=b.x, y=b.y, width=b.width, height=b.height)
                for b in boxes
            ],
            overlays=overlays,
        )

    @app.post("/lips", response_model=schemas.LipsResponse)
    @_bad_request_on_error
    def lips_endpoint(req: schemas.LipsRequest):
        clip = load_clip(req.clip_dir)
        detections = detect_lips(clip, _config(req.config_path))
        mouths, masks = [], []
        out = None
        if req.out_dir:
            out = Path(req.out_dir)
            out.mkdir(parents=True, exist_ok=True)
        for i, det in enumerate(detections):
            if det.mouth is not None:
                x, y, w, h = det.mouth.frame_box()
                box = schemas.FaceBoxModel(x=x, y=y, width=w, height=h)
            else:
                box = None
            mouths.append(schemas.MouthModel(frame=i, found=box is not None, box=box))
            if out is not None:
                p = out / f"mask_{i:05d}.pbm"
                write_mask_pbm(det.mask, p)
                write_ppm(
                    tint_overlay(det.roi.image, det.mask), out / f"overlay_{i:05d}.ppm"
                )
                masks.append(str(p))
        return schemas.LipsResponse(mouths=mouths, masks=masks)

    @app.post("/features", response_model=schemas.FeaturesResponse)
    @_bad_request_on_error
    def features_endpoint(req: schemas.FeaturesRequest):
        clip, annotations = _clip_and_annotations(req.clip_dir, req.annotations_path)
        cfg = _config(req.config_path)
        signatures = run_pipeline(clip, annotations, cfg)
        save_training_set(TrainingSet(signatures), req.out_dir)
        manifest = Path(req.out_dir) / "manifest.txt"
        files = [line.split(",", 1)[0] for line in manifest.read_text().splitlines() if line]
        return schemas.FeaturesResponse(
            store_dir=req.out_dir, files=files, words=[s.label for s in signatures]
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    @_bad_request_on_error
    def train_endpoint(req: schemas.TrainRequest):
        entries = []
        for d in req.feature_dirs:
            entries.extend(load_training_set(d).entries)
        if req.word:
            entries = [e for e in entries if e.label == req.word]
        if req.group:
            entries = [e for e in entries if e.group == req.group]
        if req.speaker:
            entries = [e for e in entries if e.speaker == req.speaker]
        if not entries:
            raise ValueError("no signatures match the requested filters")
        ts = TrainingSet(entries)
        save_training_set(ts, req.out_dir)
        return schemas.TrainResponse(
            store_dir=req.out_dir, entries=len(ts), vocabulary=ts.vocabulary
        )

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    @_bad_request_on_error
    def classify_endpoint(req: schemas.ClassifyRequest):
        from ..classify import decide_knn, decide_wknn

        train = load_training_set(req.store_dir)
        test = read_feature_matrix(req.input_path)
        scores = fused_scores(test, train, _weights(req.weights), req.mode)
        decide = decide_wknn if req.rule == "wknn" else decide_knn
        label = decide(scores, train.labels, req.k)
        order = np.argsort(scores, kind="stable")[:5]
        nearest = [
            schemas.NearestModel(label=train.labels[i], distance=float(scores[i]))
            for i in order
        ]
        return schemas.ClassifyResponse(label=label, nearest=nearest)

    @app.post("/eval", response_model=schemas.EvalResponse)
    @_bad_request_on_error
    def eval_endpoint(req: schemas.EvalRequest):
        if req.protocol not in _PROTOCOLS:
            raise ValueError(f"protocol must be sd, si or sd2, got {req.protocol!r}")
        data = load_training_set(req.store_dir)
        protocol = Protocol(
            kind=_PROTOCOLS[req.protocol],
            ks=tuple(req.ks),
            mode=req.mode,
            weights=_weights(req.weights),
            rule=req.rule,
            group_rule=req.group_rule,
        )
        report = run_protocol(data, protocol)
        return schemas.EvalResponse(
            report_text=report.render_text(),
            overall=report.overall,
            per_subject=report.per_subject,
            n_folds=report.n_folds,
        )

    @app.post("/identify", response_model=schemas.IdentifyResponse)
    @_bad_request_on_error
    def identify_endpoint(req: schemas.IdentifyRequest):
        gallery = load_training_set(req.gallery_dir)
        test = read_feature_matrix(req.input_path)
        speaker = apps.identify_speaker(
            test, gallery, k=req.k, weights=_weights(req.weights), mode=req.mode
        )
        return schemas.IdentifyResponse(speaker=speaker)

    @app.post("/verify/enroll", response_model=schemas.EnrollResponse)
    @_bad_request_on_error
    def enroll_endpoint(req: schemas.EnrollRequest):
        store = load_training_set(req.store_dir)
        profile = apps.PasswordProfile(
            client_id=req.client_id,
            enrolled=store.entries,
            threshold=req.threshold,
            max_tries=req.max_tries,
        )
        apps.save_profile(profile, req.out_dir)
        return schemas.EnrollResponse(profile_dir=req.out_dir, enrolled=len(store))

    @app.post("/verify", response_model=schemas.VerifyResponse)
    @_bad_request_on_error
    def verify_endpoint(req: schemas.VerifyRequest):
        profile = apps.load_profile(req.profile_dir)
        attempt = read_feature_matrix(req.input_path)
        decision, distance = apps.verify_password(
            attempt, profile, req.tries_so_far, _weights(req.weights), req.mode
        )
        return schemas.VerifyResponse(decision=decision, distance=distance)

    @app.post("/spot/build", response_model=schemas.BuildWatchlistResponse)
    @_bad_request_on_error
    def build_watchlist_endpoint(req: schemas.BuildWatchlistRequest):
        store = load_training_set(req.store_dir)
        watch = apps.WatchList(entries=store.entries, threshold=req.threshold)
        apps.save_watchlist(watch, req.out_dir)
        return schemas.BuildWatchlistResponse(
            watchlist_dir=req.out_dir, entries=len(store)
        )

    @app.post("/spot", response_model=schemas.SpotResponse)
    @_bad_request_on_error
    def spot_endpoint(req: schemas.SpotRequest):
        watch = apps.load_watchlist(req.watchlist_dir)
        test = read_feature_matrix(req.input_path)
        result = apps.spot_security_word(test, watch, _weights(req.weights), req.mode)
        return schemas.SpotResponse(
            alarm=result.alarm, label=result.label, distance=result.distance
        )

    def _signatures(directory: str):
        """Entries from a training store, a profile or a watch-list directory."""
        d = Path(directory)
        if (d / "manifest.txt").exists():
            return load_training_set(d).entries
        if (d / "profile.txt").exists():
            return apps.load_profile(d).enrolled
        if (d / "watchlist.txt").exists():
            return apps.load_watchlist(d).entries
        raise FileNotFoundError(f"no signature store in {directory}")

    @app.post("/sweep", response_model=schemas.SweepResponse)
    @_bad_request_on_error
    def sweep_endpoint(req: schemas.SweepRequest):
        enrolled = _signatures(req.enrolled_dir)
        weights = _weights(req.weights)

        def distances(store_dir):
            return [
                apps.nearest_distance(e, enrolled, weights, req.mode)[0]
                for e in _signatures(store_dir)
            ]

        n = int(round((req.grid_stop - req.grid_start) / req.grid_step)) + 1
        grid = req.grid_start + req.grid_step * np.arange(n)
        curve = far_frr_sweep(distances(req.genuine_dir), distances(req.impostor_dir), grid)
        if req.out_path:
            curve.write(req.out_path)
        at = int(np.argmin(np.abs(curve.thresholds - curve.best)))
        return schemas.SweepResponse(
            best=curve.best,
            best_weighted=curve.best_weighted(req.omega) if req.omega else None,
            frr_at_best=float(curve.frr[at]),
            far_at_best=float(curve.far[at]),
            curve_path=req.out_path,
        )

    return app


app = create_app()
