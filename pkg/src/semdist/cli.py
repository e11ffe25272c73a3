"""Command-line surface: eval, sweep, hnsc, sproj-check.

Exit codes: 0 success, 1 data/IO error (machine-readable error JSON on
stdout), 2 usage/config error. Output is byte-deterministic for fixed
inputs, flags and seed. SEMDIST_THREADS caps BLAS parallelism.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import random
import sys

from .errors import ConfigError, SemdistError


def _write_out(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _echo_config(command: str, effective: dict):
    # keeps stdout formats pinned (JSON report / CSV / captions) while every
    # command still states its effective configuration
    sys.stderr.write(f"config: {json.dumps({'command': command, **effective}, sort_keys=True)}\n")


def _add_common_metric_flags(sub):
    sub.add_argument("--manifest", required=True, help="record manifest JSON")
    sub.add_argument("--out", default=None, help="write output here instead of stdout")
    sub.add_argument("--ridge-scale", type=float, default=1e-6)
    sub.add_argument("--scale", type=float, default=100.0)
    sub.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semdist",
        description="Text-image consistency metrics over embedding files")
    commands = parser.add_subparsers(dest="command", required=True)

    ev = commands.add_parser("eval", help="compute metrics over a manifest")
    _add_common_metric_flags(ev)
    ev.add_argument("--omega", type=float, default=2.5)
    ev.add_argument("--trsv-mode", choices=("diag", "full"), default="diag")
    ev.add_argument("--distractors", type=int, default=99)
    ev.add_argument("--metrics", default="ssd,cs,cfid,r",
                    help="comma list from {ssd,cs,cfid,r}")

    sw = commands.add_parser("sweep", help="SSD stability vs sample count")
    _add_common_metric_flags(sw)
    sw.add_argument("--counts", required=True,
                    help="comma list of sample counts, increasing")
    sw.add_argument("--repeats", type=int, default=10)

    hn = commands.add_parser("hnsc", help="corrupt captions by POS replacement")
    hn.add_argument("captions", help="captions file, one per line")
    hn.add_argument("--lexicon", required=True, help="token<TAB>POS TSV")
    hn.add_argument("--ratio", type=float, required=True)
    hn.add_argument("--seed", type=int, default=0)
    hn.add_argument("--out", default=None, help="corrupted captions output")
    hn.add_argument("--log", default=None,
                    help="replacement log JSON (default: <out>.log.json)")

    sp = commands.add_parser("sproj-check",
                             help="project gradient pairs from a JSON file")
    sp.add_argument("pairs", help="JSON list of {delta_a, delta_s} objects")
    sp.add_argument("--out", default=None)
    sp.add_argument("--paper-sign-convention", action="store_true",
                    help="trigger projection on a non-negative inner product")
    return parser


def _cmd_eval(args) -> int:
    from .embstore import load_manifest
    from .metrics import MetricConfig, evaluate

    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    config = MetricConfig(ridge_scale=args.ridge_scale, omega=args.omega,
                          scale=args.scale, trsv_mode=args.trsv_mode,
                          seed=args.seed, distractors=args.distractors)
    _echo_config("eval", {"manifest": args.manifest, "metrics": list(metrics),
                          "ridge_scale": args.ridge_scale, "omega": args.omega,
                          "scale": args.scale, "trsv_mode": args.trsv_mode,
                          "seed": args.seed, "distractors": args.distractors})
    dataset = load_manifest(args.manifest)
    report = evaluate(dataset, config, metrics=metrics)
    doc = report.to_dict()
    doc["config"]["manifest"] = args.manifest
    _write_out(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    from .embstore import load_manifest
    from .metrics import MetricConfig, stability_sweep

    try:
        counts = [int(c) for c in args.counts.split(",") if c.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --counts value: {exc}") from exc
    if len(set(counts)) != len(counts):
        raise ConfigError(f"duplicate sample counts: {counts}")
    counts = sorted(counts)
    config = MetricConfig(ridge_scale=args.ridge_scale, scale=args.scale,
                          seed=args.seed)
    _echo_config("sweep", {"manifest": args.manifest, "counts": counts,
                           "repeats": args.repeats, "seed": args.seed,
                           "ridge_scale": args.ridge_scale,
                           "scale": args.scale})
    dataset = load_manifest(args.manifest)
    curve = stability_sweep(dataset, counts, repeats=args.repeats,
                            seed=args.seed, config=config)
    _write_out(curve.to_csv(), args.out)
    return 0


def _cmd_hnsc(args) -> int:
    from .hnsc import corrupt_line, load_lexicon

    if not 0.0 <= args.ratio <= 1.0:
        raise ConfigError(f"--ratio must be in [0, 1], got {args.ratio}")
    _echo_config("hnsc", {"captions": args.captions, "lexicon": args.lexicon,
                          "ratio": args.ratio, "seed": args.seed})
    lexicon = load_lexicon(args.lexicon)
    with open(args.captions, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    master = random.Random(args.seed)
    out_lines = []
    log = []
    for i, line in enumerate(lines):
        new_line, entry = corrupt_line(line, lexicon, args.ratio,
                                       seed=master.getrandbits(63))
        out_lines.append(new_line)
        entry = {"line": i, **entry}
        log.append(entry)

    text = "".join(line + "\n" for line in out_lines)
    _write_out(text, args.out)
    log_path = args.log or (f"{args.out}.log.json" if args.out else None)
    if log_path:
        with open(log_path, "w", encoding="utf-8") as fh:
            json.dump(log, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0


def _cmd_sproj_check(args) -> int:
    import numpy as np

    from .sproj import GradientPair, batched_project

    _echo_config("sproj-check", {
        "pairs": args.pairs,
        "paper_sign_convention": args.paper_sign_convention})
    with open(args.pairs, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise SemdistError("pairs file must hold a JSON list",
                           kind="bad_pairs_file")
    pairs = []
    for i, item in enumerate(doc):
        try:
            pairs.append(GradientPair(delta_a=np.asarray(item["delta_a"]),
                                      delta_s=np.asarray(item["delta_s"])))
        except SemdistError as exc:
            raise SemdistError(f"pair {i}: {exc}", kind=exc.kind) from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise SemdistError(f"pair {i}: missing or bad field ({exc})",
                               kind="bad_pairs_file") from exc
    results = batched_project(pairs,
                              paper_sign_trigger=args.paper_sign_convention)
    out = []
    for pair, res in zip(pairs, results):
        bound = -1e-12 * float(np.linalg.norm(pair.delta_a)) \
            * float(np.linalg.norm(res.projected))
        if res.inner_after < bound:
            raise SemdistError("projection left a conflicting component",
                               kind="projection_invariant")
        out.append({"projected": res.projected.tolist(),
                    "conflicted": res.conflicted,
                    "inner_before": res.inner_before,
                    "inner_after": res.inner_after})
    _write_out(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return 0


_COMMANDS = {
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "hnsc": _cmd_hnsc,
    "sproj-check": _cmd_sproj_check,
}


def _thread_cap():
    raw = os.environ.get("SEMDIST_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        limit = int(raw)
        if limit < 1:
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"SEMDIST_THREADS must be a positive integer, "
                          f"got {raw!r}") from None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=limit)


def _error_json(kind: str, message: str) -> str:
    return json.dumps({"error": {"kind": kind, "message": message}},
                      sort_keys=True) + "\n"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with _thread_cap():
            return _COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stdout.write(_error_json(exc.kind, str(exc)))
        return 2
    except FileNotFoundError as exc:
        sys.stdout.write(_error_json("file_not_found", str(exc)))
        return 1
    except SemdistError as exc:
        sys.stdout.write(_error_json(exc.kind, str(exc)))
        return 1
    except OSError as exc:
        sys.stdout.write(_error_json("io_error", str(exc)))
        return 1


if __name__ == "__main__":
    sys.exit(main())
