"""Command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
Every subcommand accepts ``--config file.json`` whose keys mirror the long
flag names (dashes become underscores); explicit flags win over the file.
``GIMS_SEED`` supplies the seed when ``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import agc, baselines, descriptor, experiments, formats, imagekp, perf, trainer
from .compare import METHODS as COMPARE_METHODS
from .compare import compare
from .core import DescriptorSet, keypoint_positions
from .encoder import EncoderConfig, ModelWeights
from .geometry import RansacConfig
from .pipeline import GRAPH_METHODS, ImageFeatures, RunConfig, match_features, match_pair

log = logging.getLogger("gims")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


# ---- helpers -----------------------------------------------------------------------------

def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("GIMS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"GIMS_SEED must be an integer, got {env!r}") from exc
    return 0


def _run_config(args, **over) -> RunConfig:
    kw = dict(beta=args.beta, alpha=args.alpha, theta=args.theta, max_kp=args.max_kp,
              sinkhorn_iters=args.iters, temperature=args.temperature, gnn_layers=args.layers,
              min_conf=args.min_conf, seed=_seed(args), drop_missing=args.drop_missing,
              ransac=RansacConfig(args.ransac_iters, args.ransac_thr, _seed(args)))
    kw.update(over)
    return RunConfig(**kw)


def _weights(args, layers: int | None = None) -> ModelWeights:
    if getattr(args, "weights", None):
        return formats.read_weights(args.weights)
    L = args.layers if layers is None else layers
    log.info("no --weights given; using the identity configuration with L=%d", L)
    return ModelWeights.identity(EncoderConfig(gnn_layers=L))


def _load_image(path):
    if not Path(path).is_file():
        raise InputError(f"no such image: {path}")
    return formats.load_image(path)


def _emit(text: str, out: str | None):
    if out:
        formats.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _load_side(kp_path, desc_path, graph_path) -> ImageFeatures:
    kps = formats.read_keypoints(kp_path)
    desc = formats.read_descriptors(desc_path)
    g, method, params = formats.read_graph(graph_path)
    if desc.count != len(kps):
        raise InputError(f"{desc_path}: {desc.count} descriptors for {len(kps)} keypoints")
    kept = np.asarray(params.get("kept", range(len(kps))), dtype=np.int64)
    if len(kept) != g.n or (len(kept) and (kept.min() < 0 or kept.max() >= len(kps))):
        raise InputError(f"{graph_path}: graph has {g.n} vertices, inconsistent with {len(kps)} keypoints")
    size = params.get("image_size")
    if size is None:
        pos = keypoint_positions(kps)
        size = [float(pos[:, 0].max() + 1), float(pos[:, 1].max() + 1)] if len(kps) else [1.0, 1.0]
    kps = [kps[i] for i in kept]
    g = type(g)(g.n, g.edges, keypoint_positions(kps))
    return ImageFeatures(kps, desc.subset(kept), g, tuple(size), params)


# ---- commands ----------------------------------------------------------------------------

def cmd_detect(args) -> int:
    img = _load_image(args.image)
    gray = imagekp.to_grayscale(img) if img.channels != 1 else img
    pyr = imagekp.build_pyramid(gray)
    kps = imagekp.detect_keypoints(gray, max_kp=args.max_kp, pyramid=pyr)
    formats.write_keypoints(args.output, kps)
    if args.patches:
        buf = io.BytesIO()
        np.save(buf, imagekp.extract_patches(pyr, kps))
        formats.atomic_write(args.patches, buf.getvalue())
    log.info("%d keypoints -> %s", len(kps), args.output)
    return EXIT_OK


def cmd_describe(args) -> int:
    img = _load_image(args.image)
    kps = formats.read_keypoints(args.keypoints)
    gray = imagekp.to_grayscale(img) if img.channels != 1 else img
    pyr = imagekp.build_pyramid(gray)
    provider = descriptor.DescriptorProvider(args.kind)
    if kps:
        desc = descriptor.describe(imagekp.extract_patches(pyr, kps), provider)
    else:
        desc = DescriptorSet(np.zeros((0, provider.dim)))
    formats.write_descriptors(args.output, desc)
    return EXIT_OK


def cmd_build_graph(args) -> int:
    kps = formats.read_keypoints(args.keypoints)
    desc = formats.read_descriptors(args.descriptors)
    if desc.count != len(kps):
        raise InputError(f"{desc.count} descriptors for {len(kps)} keypoints")
    pos = keypoint_positions(kps)
    method = args.method
    param = {"epsilon": args.eps, "knn": args.k}.get(method)
    params = {"beta": args.beta, "alpha": args.alpha, "theta": args.theta} if method == "agc" else {}
    if param is not None:
        params["param"] = param
    report = {}
    if method == "agc":
        g, rep = agc.build_agc(pos, desc, agc.AgcParams(args.beta, args.alpha, args.theta))
        report = rep.as_dict()
        kept = rep.kept_ids
    else:
        g = baselines.build_baseline(method, pos, param)
        kept = np.arange(len(pos))
    params["kept"] = kept.tolist()
    if args.width and args.height:
        params["image_size"] = [args.width, args.height]
    formats.write_graph(args.output, g, method, params)
    stats = agc.graph_stats(g)
    stats.pop("degree_histogram")
    stats["gamma"] = report.get("gamma")
    stats["method"] = method
    stats["report"] = report
    text = json.dumps(stats, indent=2, sort_keys=True, default=formats._json_default) + "\n"
    _emit(text, args.stats)
    return EXIT_OK


def _write_match_outputs(args, res, extra: dict) -> None:
    formats.write_matches(args.output, res.matches)
    side = {"matches": len(res.matches), "vertices_a": res.features_a.graph.n,
            "vertices_b": res.features_b.graph.n,
            "residual": res.assignment.residual if res.assignment is not None else None,
            "iterations": res.assignment.iterations if res.assignment is not None else 0,
            "homography": res.homography, "inliers": int(res.inliers.sum()), **extra}
    formats.write_json(str(args.output) + ".log.json", side)
    if args.homography:
        if res.homography is None:
            formats.atomic_write(args.homography, json.dumps({"H": None}))
        else:
            formats.write_homography(args.homography, res.homography)
    if args.profile:
        rows = [{"stage": k, "seconds": v} for k, v in res.timings.items()]
        _emit(experiments.rows_to_csv(rows), args.profile)


def cmd_match(args) -> int:
    fa = _load_side(args.a_kp, args.a_desc, args.a_graph)
    fb = _load_side(args.b_kp, args.b_desc, args.b_graph)
    weights = _weights(args)
    cfg = _run_config(args, gnn_layers=weights.config.gnn_layers)
    res = match_features(fa, fb, weights, cfg)
    _write_match_outputs(args, res, {})
    log.info("%d matches (residual %s)", len(res.matches), res.assignment.residual if res.assignment else None)
    return EXIT_OK


def cmd_run(args) -> int:
    weights = _weights(args)
    cfg = _run_config(args, gnn_layers=weights.config.gnn_layers, graph_method=args.method)
    res = match_pair(_load_image(args.image_a), _load_image(args.image_b), weights, cfg)
    _write_match_outputs(args, res, {"graph_a": res.features_a.graph_report,
                                     "graph_b": res.features_b.graph_report})
    return EXIT_OK


def _read_optional_h(path):
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(d, dict) and d.get("H") is None:
        return None
    return formats.read_homography(path)


def cmd_eval(args) -> int:
    if len(args.est) != len(args.true):
        raise InputError("--est and --true need the same number of files")
    counts = [len(formats.read_matches(m)) for m in args.matches] if args.matches else [0] * len(args.est)
    if len(counts) != len(args.est):
        raise InputError("--matches needs one file per pair")
    outcomes = [(_read_optional_h(e), formats.read_homography(t), args.width, args.height, c)
                for e, t, c in zip(args.est, args.true, counts)]
    report = experiments.evaluate_pairs(outcomes, drop_missing=args.drop_missing)
    report["match_counts"] = counts
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def _source_images(image_dir):
    if image_dir is None:
        return []
    d = Path(image_dir)
    if not d.is_dir():
        raise InputError(f"not a directory: {image_dir}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".pgm"))
    if not files:
        raise InputError(f"no images in {image_dir}")
    return files


def cmd_synth(args) -> int:
    seed = _seed(args)
    files = _source_images(args.image_dir)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    def one(k):
        src = formats.load_image(files[k % len(files)]) if files else None
        if src is not None and src.channels != 1:
            src = imagekp.to_grayscale(src)
        pair = trainer.make_pair(seed + k, args.width, args.height, source=src)
        formats.save_image(pair.source, out / f"pair{k:04d}_a.png")
        formats.save_image(pair.warped, out / f"pair{k:04d}_b.png")
        formats.write_homography(out / f"pair{k:04d}_H.json", pair.H)
        return k

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as ex:
        list(ex.map(one, range(args.count)))
    formats.write_json(out / "manifest.json", {"count": args.count, "seed": seed, "source_dir": args.image_dir})
    return EXIT_OK


def load_dataset(path) -> list[trainer.SynthPair]:
    d = Path(path)
    hs = sorted(d.glob("pair*_H.json"))
    if not hs:
        raise InputError(f"no synthetic pairs in {path}")
    pairs = []
    for h in hs:
        stem = h.name[: -len("_H.json")]
        a = formats.load_image(d / f"{stem}_a.png")
        b = formats.load_image(d / f"{stem}_b.png")
        pairs.append(trainer.SynthPair(a, b, formats.read_homography(h), int(stem[4:])))
    return pairs


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def cmd_sweep(args) -> int:
    pairs = load_dataset(args.dataset)
    weights = _weights(args)
    cfg = _run_config(args, gnn_layers=weights.config.gnn_layers)
    rows = experiments.sweep(pairs, _floats(args.betas), _floats(args.alphas),
                             [int(t) for t in _floats(args.thetas)], weights, cfg)
    _emit(experiments.rows_to_csv(rows), args.output)
    return EXIT_OK


def cmd_train(args) -> int:
    seed = _seed(args)
    enc = EncoderConfig(dim=args.dim, gnn_layers=args.layers, heads=args.heads,
                        attention=("self", "cross") * args.attention_pairs)
    tcfg = trainer.TrainConfig(steps=args.steps, lr=args.lr, pairs=args.pairs, max_kp=args.max_kp,
                               eps_gt=args.eps_gt, seed=seed, sinkhorn_iters=args.iters,
                               temperature=args.temperature, encoder=enc)
    if args.dataset:
        run = tcfg.run_config()
        data = [trainer.prepare_example(p, run, tcfg.eps_gt) for p in load_dataset(args.dataset)]
        data = [e for e in data if e.features_a.graph.n and e.features_b.graph.n]
    else:
        data = trainer.synthetic_dataset(tcfg.pairs, seed, tcfg)
    if not data:
        raise InputError("no usable training pairs")
    if data[0].features_a.descriptors.dim != enc.dim:
        raise InputError(f"descriptor dimension {data[0].features_a.descriptors.dim} != --dim {enc.dim}")
    init = formats.read_weights(args.weights) if args.weights else None
    res = trainer.train(data, tcfg, init)
    out = Path(args.output)
    formats.write_weights(out, res.weights)
    state = {"steps": tcfg.steps, "seed": seed, "seconds": res.seconds, "optimizer": res.optimizer.state_dict(),
             "final_loss": res.losses[-1], "config": {"lr": tcfg.lr, "max_kp": tcfg.max_kp, "pairs": len(data)}}
    formats.write_json(str(out) + ".state.json", state)
    rows = [{"step": i, "loss": v} for i, v in enumerate(res.losses)]
    formats.atomic_write(args.loss_csv or str(out) + ".loss.csv", experiments.rows_to_csv(rows))
    return EXIT_OK


def cmd_compare(args) -> int:
    kps = formats.read_keypoints(args.keypoints)
    desc = formats.read_descriptors(args.descriptors)
    if desc.count != len(kps):
        raise InputError(f"{desc.count} descriptors for {len(kps)} keypoints")
    methods = args.methods.split(",") if args.methods else COMPARE_METHODS
    rep = compare(keypoint_positions(kps), desc, methods, {"epsilon": args.eps, "knn": args.k},
                  agc.AgcParams(args.beta, args.alpha, args.theta), jobs=args.jobs)
    _emit(rep.to_csv() if args.format == "csv" else rep.to_markdown(), args.output)
    return EXIT_OK


def cmd_profile(args) -> int:
    weights = _weights(args)
    cfg = _run_config(args, gnn_layers=weights.config.gnn_layers, graph_method=args.method)
    rows, total = perf.profile_pipeline(_load_image(args.image_a), _load_image(args.image_b), weights, cfg)
    out = [{"stage": r.stage, "seconds": r.seconds, "n_a": r.sizes[0], "n_b": r.sizes[1]} for r in rows]
    out.append({"stage": "total", "seconds": total, "n_a": rows[0].sizes[0] if rows else 0,
                "n_b": rows[0].sizes[1] if rows else 0})
    _emit(experiments.rows_to_csv(out), args.output)
    return EXIT_OK


def cmd_scaling(args) -> int:
    rows, exponent = perf.scaling_study(args.n, _seed(args), args.density)
    _emit(perf.scaling_csv(rows), args.output)
    if rows:
        log.info("fitted coarse-stage exponent %.3f", exponent)
        sys.stderr.write(f"exponent\t{exponent:.4f}\n")
    return EXIT_OK


def cmd_depth(args) -> int:
    rows = experiments.depth_study(args.depths, args.train_pairs, args.eval_pairs, args.steps,
                                   _seed(args), args.max_kp, args.lr,
                                   log=lambda r: log.info("L=%s auc@10=%.2f", r["L"], r["auc@10"]))
    text = experiments.rows_to_csv(rows) if args.format == "csv" else experiments.rows_to_markdown(rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_init_weights(args) -> int:
    enc = EncoderConfig(dim=args.dim, gnn_layers=args.layers, heads=args.heads,
                        attention=("self", "cross") * args.attention_pairs)
    if args.identity:
        w = ModelWeights.identity(enc)
    else:
        w = ModelWeights.random(enc, _seed(args), dustbin=args.dustbin)
    formats.write_weights(args.output, w)
    return EXIT_OK


# ---- parser ------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys mirror the long flags")
    p.add_argument("--seed", type=int, default=None, help="random seed (falls back to GIMS_SEED, then 0)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def _agc_flags(p):
    p.add_argument("--beta", type=float, default=15.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--theta", type=int, default=7)


def _match_flags(p):
    _agc_flags(p)
    p.add_argument("--max-kp", type=int, default=10000)
    p.add_argument("--iters", type=int, default=100, help="Sinkhorn iterations")
    p.add_argument("--temperature", type=float, default=RunConfig.temperature)
    p.add_argument("--layers", type=int, default=0, help="GraphSAGE depth for the identity configuration")
    p.add_argument("--min-conf", type=float, default=0.2)
    p.add_argument("--ransac-iters", type=int, default=2000)
    p.add_argument("--ransac-thr", type=float, default=3.0)
    p.add_argument("--drop-missing", action="store_true")
    p.add_argument("--weights", help="GIMW weights (default: identity configuration)")


def _encoder_flags(p, layers: int = 3):
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--layers", type=int, default=layers)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--attention-pairs", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gims", description="Graph-based image matching toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect keypoints")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-kp", type=int, default=10000)
    p.add_argument("--patches", help="optional .npy dump of 32x32 patches")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("describe", help="describe keypoints of an image")
    p.add_argument("image")
    p.add_argument("keypoints")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kind", choices=("hist128", "rawpatch"), default="hist128")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("build-graph", help="build a graph over keypoints")
    p.add_argument("keypoints")
    p.add_argument("descriptors")
    p.add_argument("--method", choices=[m for m in GRAPH_METHODS if m != "none"], default="agc")
    _agc_flags(p)
    p.add_argument("--eps", type=float, default=15.0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--width", type=float)
    p.add_argument("--height", type=float)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats", help="write stats JSON here instead of stdout")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("match", help="match two prepared keypoint graphs")
    for side in ("a", "b"):
        p.add_argument(f"{side}_kp", metavar=f"{side.upper()}.gimk")
        p.add_argument(f"{side}_desc", metavar=f"{side.upper()}.gimd")
        p.add_argument(f"{side}_graph", metavar=f"{side.upper()}.gimg")
    _match_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--homography", help="write the RANSAC homography JSON here")
    p.add_argument("--profile", help="write stage timings CSV here")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("run", help="full pipeline on two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    _match_flags(p)
    p.add_argument("--method", choices=GRAPH_METHODS, default="agc")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--homography")
    p.add_argument("--profile")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="corner-error AUC of estimated homographies")
    p.add_argument("--est", nargs="+", required=True)
    p.add_argument("--true", nargs="+", required=True)
    p.add_argument("--matches", nargs="*")
    p.add_argument("--width", type=float, required=True)
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--drop-missing", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic homography pairs")
    p.add_argument("image_dir", nargs="?", help="source images (default: procedural scenes)")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="grid over beta/alpha/theta")
    p.add_argument("dataset")
    _match_flags(p)
    p.add_argument("--betas", default="10,15,20,25,30")
    p.add_argument("--alphas", default="0,2,5,10")
    p.add_argument("--thetas", default="0,3,7,10")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train encoder weights on synthetic pairs")
    p.add_argument("dataset", nargs="?", help="synth output directory (default: generate on the fly)")
    _encoder_flags(p)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--max-kp", type=int, default=256)
    p.add_argument("--eps-gt", type=float, default=3.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--temperature", type=float, default=RunConfig.temperature)
    p.add_argument("--weights", help="initial weights")
    p.add_argument("--loss-csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="AGC against baseline graph builders")
    p.add_argument("keypoints")
    p.add_argument("descriptors")
    p.add_argument("--methods", help=f"comma list from {','.join(COMPARE_METHODS)}")
    _agc_flags(p)
    p.add_argument("--eps", type=float, default=15.0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("profile", help="stage timings of one pipeline run")
    p.add_argument("image_a")
    p.add_argument("image_b")
    _match_flags(p)
    p.add_argument("--method", choices=GRAPH_METHODS, default="agc")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("scaling", help="AGC build time against n")
    p.add_argument("--n", type=int, nargs="*", default=[2000, 4000, 8000, 16000])
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("depth", help="AUC against GraphSAGE depth")
    p.add_argument("--depths", type=int, nargs="+", default=[0, 1, 2, 3, 4, 5])
    p.add_argument("--train-pairs", type=int, default=10)
    p.add_argument("--eval-pairs", type=int, default=10)
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--max-kp", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("init-weights", help="write random or identity weights")
    _encoder_flags(p)
    p.add_argument("--identity", action="store_true")
    p.add_argument("--dustbin", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_init_weights)

    for action in sub.choices.values():
        _common(action)
    return ap


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in sub._actions}
    unknown = sorted(k for k in (key.replace("-", "_") for key in cfg) if k not in dests)
    if unknown:
        raise InputError(f"unknown config keys: {unknown}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    except InputError as exc:
        sys.stderr.write(f"gims: error: {exc}\n")
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"gims: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (InputError, formats.FormatError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        sys.stderr.write(f"gims: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
