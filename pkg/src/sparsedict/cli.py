"""Command-line entry point: gen | train | denoise | eval | bench.

Every command validates its configuration before touching data, writes a
manifest beside its outputs, and is reproducible from the recorded seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import storage
from .denoising import DenoiseConfig, denoise_image, load_pgm, save_pgm
from .exceptions import SparsedictError
from .metrics import CostParams, atom_recovery, bench_compare, mse_db, predict_costs, psnr
from .sparse_coding import omp_batch
from .synthesis import SyntheticSpec, gen_dictionary, gen_signals
from .trainer import TrainConfig, train_split_merge, train_standard

_GEN_FIELDS = {"m", "K", "N", "s", "seed"}
_BENCH_FIELDS = {"m", "K", "N", "s", "seed", "iterations", "K1", "s1", "s2",
                 "L_sweep", "data"}


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SPARSEDICT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_config(path, allowed: set[str]) -> dict:
    cfg = storage.read_json(path)
    if not isinstance(cfg, dict):
        raise SparsedictError(f"{path}: config must be a JSON object")
    unknown = set(cfg) - allowed
    if unknown:
        raise SparsedictError(f"{path}: unknown config fields {sorted(unknown)}")
    return cfg


def cmd_gen(args) -> int:
    cfg = _load_config(args.config, _GEN_FIELDS)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    spec = SyntheticSpec(**cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    D = gen_dictionary(spec.m, spec.K, spec.seed)
    Y, X = gen_signals(D, spec.N, spec.s, spec.seed + 1)

    dict_path = out / "truth_dictionary.sdict"
    data_path = out / "training_set.sdata"
    codes_path = out / "truth_codes.sdata"
    try:
        storage.save_dictionary(dict_path, D)
        storage.save_dataset(data_path, Y)
        storage.save_dataset(codes_path, X.to_dense())
    except OSError as exc:
        raise SparsedictError(f"cannot write to {out}: {exc}") from exc
    storage.write_manifest(out, "gen", seed=spec.seed, config_path=args.config,
                           outputs=[dict_path, data_path, codes_path],
                           extra={"spec": cfg})
    print(f"wrote {dict_path}, {data_path}, {codes_path}")
    return 0


def cmd_train(args) -> int:
    raw = storage.read_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = TrainConfig.from_dict(raw)  # validates before any compute
    cfg.threads = _resolve_threads(args)

    Y = storage.load_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "standard":
        D, _X, report = train_standard(Y, cfg)
    else:
        D, report = train_split_merge(Y, cfg)

    dict_path = out / "dictionary.sdict"
    report_path = out / "report.json"
    storage.save_dictionary(dict_path, D)
    storage.write_json(report_path, {"config": cfg.to_dict(),
                                     "report": report.to_dict()})
    storage.write_manifest(out, "train", seed=cfg.seed, config_path=args.config,
                           inputs=[args.data], outputs=[dict_path, report_path],
                           extra={"threads": cfg.threads})
    print(f"final MSE {report.final_mse_db:.2f} dB, "
          f"wall time {report.wall_time_s:.2f} s")
    return 0


def cmd_denoise(args) -> int:
    cfg = DenoiseConfig(sigma=args.sigma, patch_size=args.patch,
                        stride=args.stride, eps_gain=args.eps_gain)
    cfg.validate()
    D = storage.load_dictionary(args.dict)
    if D.shape[0] != args.patch ** 2:
        raise SparsedictError(
            f"dictionary rows {D.shape[0]} do not match patch size "
            f"{args.patch}x{args.patch}")
    noisy = load_pgm(args.input)
    denoised = denoise_image(noisy, D, cfg, threads=_resolve_threads(args))

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_pgm(denoised, out_path)
    extra = {"sigma": args.sigma, "eps_gain": args.eps_gain}
    if args.reference:
        ref = load_pgm(args.reference)
        in_psnr = psnr(ref.pixels, noisy.pixels)
        out_psnr = psnr(ref.pixels, denoised.pixels)
        print(f"input PSNR  {in_psnr:.2f} dB")
        print(f"output PSNR {out_psnr:.2f} dB")
        extra.update(input_psnr_db=in_psnr, output_psnr_db=out_psnr)
    storage.write_manifest(out_path.parent, "denoise",
                           seed=args.seed if args.seed is not None else 0,
                           inputs=[args.input, args.dict],
                           outputs=[out_path], extra=extra)
    return 0


def cmd_eval(args) -> int:
    if args.truth_dict is None and args.data is None:
        raise SparsedictError("eval needs --truth-dict and/or --data")
    D = storage.load_dictionary(args.dict)
    result: dict = {}
    if args.truth_dict:
        D_true = storage.load_dictionary(args.truth_dict)
        result["atom_recovery_pct"] = atom_recovery(D_true, D)
    if args.data:
        if args.sparsity is None:
            raise SparsedictError("--data requires --sparsity")
        Y = storage.load_dataset(args.data)
        X = omp_batch(Y, D, s=args.sparsity, threads=_resolve_threads(args))
        result["mse_db"] = mse_db(Y, D, X)
    print(json.dumps(result, indent=2))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config, _BENCH_FIELDS)
    sweep = cfg.get("L_sweep", [])
    if not sweep:
        raise SparsedictError("L_sweep must be a nonempty list")
    for key in ("K", "s", "K1", "s1", "s2"):
        if key not in cfg:
            raise SparsedictError(f"bench config is missing {key!r}")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    iterations = cfg.get("iterations", 100)
    threads = _resolve_threads(args)

    D_true = None
    if "data" in cfg:
        Y = storage.load_dataset(cfg["data"])
    else:
        for key in ("m", "N"):
            if key not in cfg:
                raise SparsedictError(f"synthetic bench config is missing {key!r}")
        D_true = gen_dictionary(cfg["m"], cfg["K"], seed)
        Y, _X = gen_signals(D_true, cfg["N"], cfg["s"], seed + 1)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    reports = []
    for L in sweep:
        cfg_std = TrainConfig(K=cfg["K"], s=cfg["s"], iterations=iterations,
                              seed=seed, threads=threads)
        cfg_spl = TrainConfig(K=cfg["K"], s=cfg["s"], iterations=iterations,
                              seed=seed, mode="split-merge", L=L,
                              K1=cfg["K1"], s1=cfg["s1"], s2=cfg["s2"],
                              threads=threads)
        cfg_spl.validate()
        report = bench_compare(Y, cfg_std, cfg_spl, D_true=D_true)
        params = CostParams(N=Y.shape[1], m=Y.shape[0], K=cfg["K"], s=cfg["s"],
                            L=L, K1=cfg["K1"], s1=cfg["s1"], s2=cfg["s2"])
        T1, T2, T_total = predict_costs(params)
        row = report.csv_row()
        row["predicted_Ttotal_over_T1"] = T_total / T1
        rows.append(row)
        rep = json.loads(report.to_json())
        rep["predicted"] = {"T1": T1, "T2": T2, "T_total": T_total,
                            "Ttotal_over_T1": T_total / T1}
        reports.append(rep)

    json_path = out / "bench.json"
    csv_path = out / "bench.csv"
    storage.write_json(json_path, reports)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    storage.write_manifest(out, "bench", seed=seed, config_path=args.config,
                           outputs=[json_path, csv_path])
    print(f"wrote {json_path} and {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsedict",
        description="Dictionary learning (standard and split-and-merge) "
                    "with OMP sparse coding and patch-based denoising.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __import__("sparsedict").__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="64-bit seed (default: value from config, else 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker count (default: SPARSEDICT_THREADS or "
                             "hardware parallelism); never changes results")

    p = sub.add_parser("gen", parents=[common],
                       help="generate a synthetic ground-truth problem")
    p.add_argument("--config", required=True, help="SyntheticSpec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common], help="train a dictionary")
    p.add_argument("--data", required=True, help="SDATA training set")
    p.add_argument("--config", required=True, help="TrainConfig JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denoise", parents=[common], help="denoise a PGM image")
    p.add_argument("--in", dest="input", required=True, help="noisy PGM (P5)")
    p.add_argument("--dict", required=True, help="SDICT dictionary")
    p.add_argument("--sigma", type=float, required=True,
                   help="noise standard deviation in pixel units")
    p.add_argument("--out", required=True, help="output PGM path")
    p.add_argument("--reference", default=None,
                   help="clean PGM; prints input/output PSNR when given")
    p.add_argument("--patch", type=int, default=8, help="patch size p")
    p.add_argument("--stride", type=int, default=1, help="patch grid stride")
    p.add_argument("--eps-gain", type=float, default=8.5,
                   help="OMP stops at residual norm eps-gain * sigma")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("eval", parents=[common],
                       help="atom recovery and/or training MSE of a dictionary")
    p.add_argument("--dict", required=True, help="SDICT dictionary to evaluate")
    p.add_argument("--truth-dict", default=None, help="ground-truth SDICT")
    p.add_argument("--data", default=None, help="SDATA training set for MSE")
    p.add_argument("--sparsity", type=int, default=None,
                   help="coding sparsity for the MSE evaluation")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common],
                       help="measured vs predicted cost over an L sweep")
    p.add_argument("--config", required=True, help="bench config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SparsedictError, OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
