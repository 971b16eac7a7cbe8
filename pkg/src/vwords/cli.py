"""Thin command-line client for the recognition service.

Every subcommand builds a request model and posts it to the service: to a
remote instance when --server is given, otherwise to an in-process ASGI
transport, so the CLI works standalone without a running server. `serve`
starts the HTTP service itself.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx


def _post(args, path: str, payload: dict) -> dict:
    if args.server:
        with httpx.Client(base_url=args.server, timeout=600.0) as client:
            response = client.post(path, json=payload)
    else:
        from .service.app import create_app

        async def _go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://vwords.internal", timeout=600.0
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(_go())
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return response.json()


def _emit(args, data: dict, render) -> None:
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        render(data)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", help="base URL of a running service (default: in-process)")
    p.add_argument("--json", action="store_true", help="print the raw JSON response")


def _add_weights_mode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", default="sd", help="sd | si | uniform | weights file")
    p.add_argument("--mode", default="dtw", choices=["dtw", "euclid_interp"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vwords", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic fixture corpus")
    p.add_argument("--kind", default="words", choices=["faces", "lips", "words"])
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--sessions", type=int, nargs="+", default=[1])
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--speaker", default="synth01")

    p = sub.add_parser("faces", help="emit face boxes (and overlays) for a clip")
    p.add_argument("clip_dir")
    p.add_argument("--config")
    p.add_argument("--out")

    p = sub.add_parser("lips", help="emit lip masks and mouth boxes for a clip")
    p.add_argument("clip_dir")
    p.add_argument("--config")
    p.add_argument("--out")

    p = sub.add_parser("features", help="extract word signatures from a clip")
    p.add_argument("clip_dir")
    p.add_argument("--annotations")
    p.add_argument("--out", required=True)
    p.add_argument("--config")

    p = sub.add_parser("train", help="merge feature stores into a training store")
    p.add_argument("feature_dirs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--word", help="keep only this word label")
    p.add_argument("--group", help="keep only this word group")
    p.add_argument("--speaker", help="keep only this speaker")

    p = sub.add_parser("classify", help="classify one signature against a store")
    p.add_argument("input")
    p.add_argument("--store", required=True)
    p.add_argument("-k", type=int, default=1)
    p.add_argument("--rule", default="wknn", choices=["knn", "wknn"])
    _add_weights_mode(p)

    p = sub.add_parser("eval", help="run a cross-validation protocol")
    p.add_argument("--store", required=True)
    p.add_argument("--protocol", default="sd", choices=["sd", "si", "sd2"])
    p.add_argument("-k", "--ks", type=int, nargs="+", default=[1])
    p.add_argument("--rule", default="wknn", choices=["knn", "wknn"])
    p.add_argument("--group-rule", action="store_true")
    _add_weights_mode(p)

    p = sub.add_parser("identify", help="identify the speaker of a signature")
    p.add_argument("input")
    p.add_argument("--gallery", required=True)
    p.add_argument("-k", type=int, default=1)
    _add_weights_mode(p)

    p = sub.add_parser("verify", help="verify a visual-password attempt")
    p.add_argument("input", nargs="?")
    p.add_argument("--profile")
    p.add_argument("--tries", type=int, default=0)
    p.add_argument("--enroll", action="store_true", help="build a profile instead")
    p.add_argument("--from-store", dest="from_store")
    p.add_argument("--client")
    p.add_argument("--threshold", type=float, default=2.7)
    p.add_argument("--max-tries", dest="max_tries", type=int, default=3)
    p.add_argument("--out")
    _add_weights_mode(p)

    p = sub.add_parser("spot", help="watch-list word spotting")
    p.add_argument("input", nargs="?")
    p.add_argument("--watchlist")
    p.add_argument("--build", action="store_true", help="build a watch list instead")
    p.add_argument("--from-store", dest="from_store")
    p.add_argument("--threshold", type=float, default=2.4)
    p.add_argument("--out")
    _add_weights_mode(p)

    p = sub.add_parser("sweep", help="FAR/FRR threshold curve")
    p.add_argument("--enrolled", required=True)
    p.add_argument("--genuine", required=True)
    p.add_argument("--impostor", required=True)
    p.add_argument("--grid", type=float, nargs=3, default=[1.0, 5.0, 0.1],
                   metavar=("START", "STOP", "STEP"))
    p.add_argument("--omega", type=float)
    p.add_argument("--out")
    _add_weights_mode(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    for name, sp in sub.choices.items():
        if name != "serve":
            _add_common(sp)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    if args.command == "synth":
        data = _post(args, "/synth", {
            "kind": args.kind, "out_dir": args.out, "count": args.count,
            "reps": args.reps, "sessions": args.sessions, "seed": args.seed,
            "speaker": args.speaker,
        })
        _emit(args, data, lambda d: print("\n".join(d["paths"])))

    elif args.command == "faces":
        data = _post(args, "/faces", {
            "clip_dir": args.clip_dir, "config_path": args.config, "out_dir": args.out,
        })

        def render(d):
            for i, b in enumerate(d["boxes"]):
                print(f"frame {i}: x={b['x']} y={b['y']} w={b['width']} h={b['height']}")

        _emit(args, data, render)

    elif args.command == "lips":
        data = _post(args, "/lips", {
            "clip_dir": args.clip_dir, "config_path": args.config, "out_dir": args.out,
        })

        def render(d):
            for m in d["mouths"]:
                if m["found"]:
                    b = m["box"]
                    print(f"frame {m['frame']}: x={b['x']} y={b['y']} "
                          f"w={b['width']} h={b['height']}")
                else:
                    print(f"frame {m['frame']}: lips not found")

        _emit(args, data, render)

    elif args.command == "features":
        data = _post(args, "/features", {
            "clip_dir": args.clip_dir, "annotations_path": args.annotations,
            "out_dir": args.out, "config_path": args.config,
        })
        _emit(args, data, lambda d: print(
            f"{len(d['files'])} signatures ({', '.join(d['words'])}) -> {d['store_dir']}"
        ))

    elif args.command == "train":
        data = _post(args, "/train", {
            "feature_dirs": args.feature_dirs, "out_dir": args.out,
            "word": args.word, "group": args.group, "speaker": args.speaker,
        })
        _emit(args, data, lambda d: print(
            f"{d['entries']} entries, vocabulary {d['vocabulary']} -> {d['store_dir']}"
        ))

    elif args.command == "classify":
        data = _post(args, "/classify", {
            "store_dir": args.store, "input_path": args.input, "k": args.k,
            "mode": args.mode, "rule": args.rule, "weights": args.weights,
        })

        def render(d):
            print(f"label: {d['label']}")
            for n in d["nearest"]:
                print(f"  {n['label']}: {n['distance']:.6f}")

        _emit(args, data, render)

    elif args.command == "eval":
        data = _post(args, "/eval", {
            "store_dir": args.store, "protocol": args.protocol, "ks": args.ks,
            "mode": args.mode, "rule": args.rule, "weights": args.weights,
            "group_rule": args.group_rule,
        })
        _emit(args, data, lambda d: print(d["report_text"]))

    elif args.command == "identify":
        data = _post(args, "/identify", {
            "gallery_dir": args.gallery, "input_path": args.input, "k": args.k,
            "mode": args.mode, "weights": args.weights,
        })
        _emit(args, data, lambda d: print(f"speaker: {d['speaker']}"))

    elif args.command == "verify":
        if args.enroll:
            if not (args.from_store and args.client and args.out):
                parser.error("verify --enroll needs --from-store, --client and --out")
            data = _post(args, "/verify/enroll", {
                "store_dir": args.from_store, "client_id": args.client,
                "threshold": args.threshold, "max_tries": args.max_tries,
                "out_dir": args.out,
            })
            _emit(args, data, lambda d: print(
                f"enrolled {d['enrolled']} signatures -> {d['profile_dir']}"
            ))
        else:
            if not (args.profile and args.input):
                parser.error("verify needs a profile and an input signature")
            data = _post(args, "/verify", {
                "profile_dir": args.profile, "input_path": args.input,
                "tries_so_far": args.tries, "mode": args.mode, "weights": args.weights,
            })
            _emit(args, data, lambda d: print(
                f"{d['decision']} (distance {d['distance']:.6f})"
            ))

    elif args.command == "spot":
        if args.build:
            if not (args.from_store and args.out):
                parser.error("spot --build needs --from-store and --out")
            data = _post(args, "/spot/build", {
                "store_dir": args.from_store, "threshold": args.threshold,
                "out_dir": args.out,
            })
            _emit(args, data, lambda d: print(
                f"watch list of {d['entries']} signatures -> {d['watchlist_dir']}"
            ))
        else:
            if not (args.watchlist and args.input):
                parser.error("spot needs a watch list and an input signature")
            data = _post(args, "/spot", {
                "watchlist_dir": args.watchlist, "input_path": args.input,
                "mode": args.mode, "weights": args.weights,
            })

            def render(d):
                if d["alarm"]:
                    print(f"ALARM {d['label']} (distance {d['distance']:.6f})")
                else:
                    print(f"clear (distance {d['distance']:.6f})")

            _emit(args, data, render)

    elif args.command == "sweep":
        data = _post(args, "/sweep", {
            "enrolled_dir": args.enrolled, "genuine_dir": args.genuine,
            "impostor_dir": args.impostor, "grid_start": args.grid[0],
            "grid_stop": args.grid[1], "grid_step": args.grid[2],
            "omega": args.omega, "mode": args.mode, "weights": args.weights,
            "out_path": args.out,
        })

        def render(d):
            print(f"best threshold: {d['best']:.3f} "
                  f"(FRR {d['frr_at_best']:.3f}, FAR {d['far_at_best']:.3f})")
            if d.get("best_weighted") is not None:
                print(f"best weighted threshold: {d['best_weighted']:.3f}")
            if d.get("curve_path"):
                print(f"curve -> {d['curve_path']}")

        _emit(args, data, render)

    return 0


if __name__ == "__main__":
    sys.exit(main())
