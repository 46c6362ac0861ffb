"""Command-line entry point: ``alanet <command> [flags]``.

Commands: synth, corrupt, caption-score, gradcheck, train, eval, infer.
Each accepts ``--seed``; the ``ALANET_SEED`` environment variable is used
when the flag is absent. Exit codes are 0 on success, 1 on runtime failure
and 2 on usage errors.

Training configuration is a JSON object with the fields of
:class:`alanet.config.NetworkConfig`; command-line flags override it.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import LossWeights, NetworkConfig
from .errors import ConfigurationError

log = logging.getLogger("alanet")


def _seed(args, default: int | None = 0) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ALANET_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"ALANET_SEED must be an integer, got {env!r}") from None
    return default


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _source_weights(text: str) -> dict[str, float]:
    """``name=weight,name=weight``"""
    out = {}
    for item in text.split(","):
        name, sep, val = item.partition("=")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            sep = ""
        if not sep or not name.strip():
            raise argparse.ArgumentTypeError(f"expected name=weight pairs, got {text!r}")
    return out


# ---------------------------------------------------------------- config

def build_config(args, seed: int | None) -> NetworkConfig:
    """Defaults < config file < flags."""
    d = NetworkConfig().to_dict()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigurationError(f"{args.config}: expected a JSON object")
        lw = {**d["loss_weights"], **file_cfg.pop("loss_weights", {})}
        d.update(file_cfg)
        d["loss_weights"] = lw
    for key in ("channels", "blocks", "kernel_sizes", "lcam_reduction"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    for key in ("lambda1", "lambda2", "lambda3"):
        val = getattr(args, key, None)
        if val is not None:
            d["loss_weights"][key] = val
    for flag, key in (("no_alcm", "use_alcm"), ("no_lsct", "use_lsct"),
                      ("no_lcam_language", "use_lcam_language"), ("no_lcam_channel", "use_lcam_channel")):
        if getattr(args, flag, False):
            d[key] = False
    if getattr(args, "lr", None) is not None:
        d["lr"] = args.lr
    if seed is not None:
        d["seed"] = seed
    d["loss_weights"] = LossWeights(**d["loss_weights"])
    return NetworkConfig.from_dict(d)


def _add_model_flags(p):
    p.add_argument("--config", help="JSON file with NetworkConfig fields")
    p.add_argument("--channels", type=_int_tuple, help="five comma-separated level widths")
    p.add_argument("--blocks", type=_int_tuple, help="five comma-separated block counts")
    p.add_argument("--kernel-sizes", dest="kernel_sizes", type=_int_tuple)
    p.add_argument("--lcam-reduction", dest="lcam_reduction", type=int)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--lambda3", type=float)
    p.add_argument("--no-alcm", action="store_true")
    p.add_argument("--no-lsct", action="store_true")
    p.add_argument("--no-lcam-language", action="store_true")
    p.add_argument("--no-lcam-channel", action="store_true")


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    from .synthesis import make_dataset, make_source_images
    seed = _seed(args)
    source = args.source
    if source is None:
        source = Path(args.out) / "sources"
        make_source_images(source, args.demo_sources, size=max(args.patch, 48), seed=seed)
    records = make_dataset(source, args.n_pairs, seed, args.out, patch=args.patch, source=args.source_tag)
    print(f"wrote {len(records)} pairs to {Path(args.out) / 'manifest.jsonl'}")
    return 0


def _load_caption_input(args, seed: int):
    from .captions import read_captions, synthetic_corpus
    if args.input:
        return read_captions(args.input)
    return synthetic_corpus(args.n_images, seed)


def cmd_corrupt(args) -> int:
    from .captions import corrupt_records, write_captions
    seed = _seed(args)
    records = _load_caption_input(args, seed)
    out = records if args.kind == "accurate" else corrupt_records(records, args.kind, args.degree, seed)
    for r in out:
        if r.warning:
            log.warning("%s/%s: %s", r.image_id, r.layer, r.warning)
    write_captions(out, args.out)
    print(f"wrote {len(out)} captions to {args.out}")
    return 0


def caption_score_rows(records, seed: int, kinds=("incorrect", "confused", "incomplete")) -> list[dict]:
    from .captions import DEGREES, METRICS, corrupt_records
    rows = []
    refs = [r.text for r in records]
    for kind in kinds:
        for degree in DEGREES:
            corrupted = corrupt_records(records, kind, degree, seed)
            for name, fn in METRICS.items():
                vals = np.array([fn(c.text, ref) for c, ref in zip(corrupted, refs)])
                rows.append({"kind": kind, "degree": degree, "metric": name,
                             "mean": float(vals.mean()) if vals.size else 0.0,
                             "std": float(vals.std()) if vals.size else 0.0, "n": int(vals.size)})
    return rows


def cmd_caption_score(args) -> int:
    seed = _seed(args)
    rows = caption_score_rows(_load_caption_input(args, seed), seed, tuple(args.kinds))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=["kind", "degree", "metric", "mean", "std", "n"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "mean": repr(r["mean"]), "std": repr(r["std"])})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_gradcheck(args) -> int:
    from .gradsuite import run_suite
    reports = run_suite(tol=args.tol, e2e_tol=args.e2e_tol, seed=_seed(args))
    for r in reports:
        print(r.line())
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return 1 if failed else 0


def cmd_train(args) -> int:
    from .checkpoint import save_checkpoint
    from .train import train, write_trace
    seed = _seed(args, default=None)
    cfg = build_config(args, seed)
    result = train(cfg, args.manifest, args.epochs, cfg.seed, lr=args.lr,
                   source_weights=args.source_weights, augment=not args.no_augment,
                   caption_mode=args.caption_mode)
    save_checkpoint(result.model, args.out)
    if args.trace:
        write_trace(result.trace, args.trace)
    final = result.trace[-1]["total"] if result.trace else float("nan")
    print(f"trained {len(result.trace)} iterations, final loss {final:.6g}; checkpoint {args.out}")
    if result.skipped:
        print(f"skipped {len(result.skipped)} unreadable entries: {', '.join(result.skipped)}")
    return 0


def cmd_eval(args) -> int:
    from .checkpoint import load_checkpoint
    from .train import evaluate, write_eval
    model = load_checkpoint(args.checkpoint)
    rows = evaluate(model, args.manifest, caption_mode=args.caption_mode)
    write_eval(rows, args.out)
    if rows:
        print(f"mean PSNR {np.mean([r['psnr'] for r in rows]):.4f} dB, "
              f"mean SSIM {np.mean([r['ssim'] for r in rows]):.4f} over {len(rows)} images")
    return 0


def cmd_infer(args) -> int:
    from .checkpoint import load_checkpoint
    from .network import ALANet
    from .synthesis import read_ppm, write_ppm
    from .train import predict
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
    else:
        model = ALANet(build_config(args, _seed(args)))
    img = read_ppm(args.image)
    t_hat, r_hat = predict(model, img, args.caption_t, args.caption_r)
    write_ppm(t_hat, args.out_t)
    write_ppm(r_hat, args.out_r)
    print(f"wrote {args.out_t} and {args.out_r}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    from .captions import DEGREES, KINDS
    from .train import CAPTION_MODES

    parser = argparse.ArgumentParser(prog="alanet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def command(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--seed", type=int, help="random seed (default: $ALANET_SEED or 0)")
        p.set_defaults(func=fn)
        return p

    p = command("synth", cmd_synth, "blend T/R pairs into a PPM dataset with a manifest")
    p.add_argument("--source", help="directory of .ppm images (default: generate demo scenes)")
    p.add_argument("--demo-sources", type=int, default=8, help="number of demo scenes when --source is absent")
    p.add_argument("--n-pairs", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch", type=int, default=32)
    p.add_argument("--source-tag", default="synthetic", help="value of the manifest 'source' field")

    def caption_input(p):
        p.add_argument("--input", help="captions JSONL (default: seeded synthetic corpus)")
        p.add_argument("--n-images", type=int, default=25, help="synthetic corpus size (two captions each)")

    p = command("corrupt", cmd_corrupt, "apply a caption corruption")
    caption_input(p)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--degree", type=float, choices=DEGREES, default=1.0)
    p.add_argument("--out", required=True)

    p = command("caption-score", cmd_caption_score, "score corrupted captions against the originals")
    caption_input(p)
    p.add_argument("--kinds", nargs="+", choices=KINDS[1:], default=list(KINDS[1:]))
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = command("gradcheck", cmd_gradcheck, "run the finite-difference gradient suite")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--e2e-tol", type=float, default=1e-3)

    p = command("train", cmd_train, "train from a manifest")
    p.add_argument("--manifest", required=True)
    _add_model_flags(p)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--lr", type=float)
    p.add_argument("--caption-mode", choices=CAPTION_MODES, default="both")
    p.add_argument("--source-weights", type=_source_weights, help="e.g. synthetic=0.7,real=0.3")
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", help="loss trace CSV path")

    p = command("eval", cmd_eval, "PSNR/SSIM of a checkpoint over a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--caption-mode", choices=CAPTION_MODES, default="both")
    p.add_argument("--out", required=True, help="CSV path")

    p = command("infer", cmd_infer, "separate one image")
    p.add_argument("--checkpoint", help="checkpoint (default: untrained network from --seed)")
    _add_model_flags(p)
    p.add_argument("--image", required=True)
    p.add_argument("--caption-t")
    p.add_argument("--caption-r")
    p.add_argument("--out-t", required=True)
    p.add_argument("--out-r", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"alanet {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
