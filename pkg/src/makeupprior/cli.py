"""Command-line entry point.

Exit codes: 0 on success, 2 on a usage error, 1 on any runtime error.  Runtime
errors are reported on stderr as a single JSON line with ``error``,
``message`` and, when a file is involved, ``path``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from makeupprior import apps, metrics
from makeupprior.fit import FitConfig, fit_coeffs, warm_start, write_history_csv
from makeupprior.prior import Coefficients, build_pca, decode, load_model, sample, save_model
from makeupprior.synthetic import SyntheticSpec, gen_synthetic
from makeupprior.uvtex import (
    FaceMask,
    compose_alpha_blend,
    load_layer,
    load_mask,
    load_texture,
    save_layer,
    save_texture,
)


class MissingInputError(Exception):
    def __init__(self, path):
        super().__init__(f"no such file or directory: {path}")
        self.path = str(path)


def _need(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise MissingInputError(p)


def _model(path):
    _need(path, Path(path) / "manifest.json", Path(path) / "payload.bin")
    return load_model(path)


def _coeffs(path) -> Coefficients:
    _need(path)
    return Coefficients.load(path)


def _texture(path, channels=3):
    _need(path)
    return load_texture(path, expected_channels=channels)


def _mask(path, shape) -> FaceMask:
    if path is None:
        return FaceMask.full(*shape)
    _need(path)
    return load_mask(path)


def _layer_paths(prefix):
    return Path(f"{prefix}_bases.png"), Path(f"{prefix}_alpha.png")


def _parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- subcommands -------------------------------------------------------------


def cmd_gen_synthetic(args):
    spec = SyntheticSpec(seed=args.seed, count=args.count, size=args.size)
    entries = gen_synthetic(spec, args.out)
    print(json.dumps({"out": str(args.out), "samples": len(entries)}))


def _corpus_layers(corpus: Path):
    _need(corpus)
    doc_path = corpus / "corpus.json"
    if doc_path.exists():
        doc = json.loads(doc_path.read_text(encoding="utf-8"))
        pairs = [(corpus / s["bases"], corpus / s["alpha"]) for s in doc["samples"]]
    else:
        pairs = [(b, b.with_name(b.name.replace("_bases", "_alpha"))) for b in sorted(corpus.glob("makeup_*_bases.png"))]
    if not pairs:
        raise ValueError(f"{corpus}: no makeup layers found")
    for bases, alpha in pairs:
        _need(bases, alpha)
    return [load_layer(b, a) for b, a in pairs]


def cmd_build_prior(args):
    prior = build_pca(_corpus_layers(Path(args.corpus)), k=args.k)
    save_model(prior, args.out)
    print(json.dumps({"out": str(args.out), "k": prior.k, "dim": prior.dim}))


def _config(args) -> FitConfig:
    if args.config is not None:
        _need(args.config)
        cfg = FitConfig.load(args.config)
    else:
        cfg = FitConfig()
    if args.iters is not None:
        cfg = FitConfig(**{**cfg.__dict__, "iterations": args.iters})
    return cfg


def cmd_fit(args):
    prior = _model(args.model)
    bare = _texture(args.bare)
    target = _texture(args.target)
    face = _mask(args.mask, (prior.height, prior.width))
    cfg = _config(args)
    init = warm_start(prior, bare, target) if args.init == "warm" else Coefficients.zeros(prior.k)
    result = fit_coeffs(prior, bare, target, face, cfg, init)
    result.coefficients.save(_parent(args.out))
    history = Path(args.history) if args.history else Path(args.out).with_suffix(".csv")
    write_history_csv(result.history, _parent(history))
    best = result.history[result.best_iteration]
    print(json.dumps({"out": str(args.out), "history": str(history), "loss": best.total, "converged": bool(result.converged)}))


def cmd_decode(args):
    prior = _model(args.model)
    layer = decode(prior, _coeffs(args.coeffs))
    bases, alpha = _layer_paths(args.out)
    save_layer(layer, _parent(bases), alpha)


def cmd_sample(args):
    prior = _model(args.model)
    sample(prior, args.seed, args.scale).save(_parent(args.out))


def cmd_transfer(args):
    prior = _model(args.model)
    out = apps.transfer(prior, _coeffs(args.coeffs), _texture(args.bare))
    save_texture(out, _parent(args.out), bitdepth=16)


def _parse_take(spec: str, k: int) -> np.ndarray:
    # "0-3,7" selects indices 0, 1, 2, 3 and 7
    mask = np.zeros(k, dtype=bool)
    for part in filter(None, (p.strip() for p in spec.split(","))):
        lo, _, hi = part.partition("-")
        lo_i, hi_i = int(lo), int(hi or lo)
        if not 0 <= lo_i <= hi_i < k:
            raise ValueError(f"index range {part!r} outside 0..{k - 1}")
        mask[lo_i : hi_i + 1] = True
    return mask


def cmd_interpolate(args, parser):
    need_coeffs = {"coeff": 2, "mix": 2, "bilerp": 4}
    if args.mode in need_coeffs and len(args.coeffs or []) != need_coeffs[args.mode]:
        parser.error(f"--mode {args.mode} takes {need_coeffs[args.mode]} --coeffs files")
    if args.mode == "coeff":
        if args.t is None:
            parser.error("--mode coeff requires --t")
        a, b = (_coeffs(p) for p in args.coeffs)
        apps.lerp_coeffs(a, b, args.t).save(_parent(args.out))
    elif args.mode == "mix":
        if args.take is None:
            parser.error("--mode mix requires --take")
        a, b = (_coeffs(p) for p in args.coeffs)
        apps.mix_coeffs(a, b, _parse_take(args.take, a.k)).save(_parent(args.out))
    elif args.mode == "bilerp":
        if args.u is None or args.v is None:
            parser.error("--mode bilerp requires --u and --v")
        corners = [_coeffs(p) for p in args.coeffs]
        apps.bilerp_coeffs(*corners, args.u, args.v).save(_parent(args.out))
    else:
        if args.t is None:
            parser.error("--mode fade requires --t")
        if args.layer_prefix:
            bases, alpha = _layer_paths(args.layer_prefix)
            _need(bases, alpha)
            layer = load_layer(bases, alpha)
        elif args.model and args.coeffs and len(args.coeffs) == 1:
            layer = decode(_model(args.model), _coeffs(args.coeffs[0]))
        else:
            parser.error("--mode fade needs --layer-prefix, or --model with one --coeffs file")
        faded = apps.fade_alpha(layer, args.t)
        if args.bare:
            save_texture(compose_alpha_blend(faded, _texture(args.bare)), _parent(args.out), bitdepth=16)
        else:
            bases, alpha = _layer_paths(args.out)
            save_layer(faded, _parent(bases), alpha)


def cmd_eval(args):
    result = _texture(args.result)
    reference = _texture(args.target)
    if args.labels:
        _need(args.labels)
        regions = metrics.regions_from_labels(load_texture(args.labels, expected_channels=1))
    else:
        regions = _mask(args.mask, (result.height, result.width))
    text = metrics.records_to_json(metrics.evaluate(result, reference, regions))
    if args.out:
        _parent(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="makeupprior", description="PCA makeup prior over UV textures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic makeup corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("build-prior", help="fit the PCA prior to a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_prior)

    p = sub.add_parser("fit", help="estimate coefficients for a makeup-applied albedo")
    p.add_argument("--model", required=True)
    p.add_argument("--bare", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--mask")
    p.add_argument("--config")
    p.add_argument("--iters", type=int)
    p.add_argument("--init", choices=("warm", "zero"), default="warm")
    p.add_argument("--out", required=True, help="coefficients JSON")
    p.add_argument("--history", help="loss history CSV (default: next to --out)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("decode", help="write the makeup layer for a coefficient vector")
    p.add_argument("--model", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--out", required=True, help="prefix for <out>_bases.png and <out>_alpha.png")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sample", help="draw random coefficients from the prior")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("transfer", help="apply coefficients to a bare-skin albedo")
    p.add_argument("--model", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--bare", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("interpolate", help="blend styles (coeff, mix, bilerp) or fade a layer")
    p.add_argument("--mode", choices=("coeff", "mix", "bilerp", "fade"), required=True)
    p.add_argument("--coeffs", nargs="+")
    p.add_argument("--t", type=float)
    p.add_argument("--u", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--take", help="indices taken from the second style, e.g. 0-3,7")
    p.add_argument("--model")
    p.add_argument("--layer-prefix")
    p.add_argument("--bare", help="fade: composite the faded layer onto this albedo")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("eval", help="region metrics of a result against a reference")
    p.add_argument("--result", required=True)
    p.add_argument("--target", required=True, help="reference albedo")
    p.add_argument("--mask")
    p.add_argument("--labels", help="8-bit label map; adds eye and lip HM")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def _error_line(exc: BaseException) -> str:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "path", None) or getattr(exc, "filename", None)
    if path:
        doc["path"] = str(path)
    return json.dumps(doc)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.func is cmd_interpolate:
            args.func(args, parser)
        else:
            args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    return 0


run = main

if __name__ == "__main__":
    sys.exit(main())
