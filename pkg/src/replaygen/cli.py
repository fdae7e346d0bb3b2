"""Command-line runner.

    replaygen run   --generator wp --adversary fair --class nonuniform-hard --target 6 --horizon 500
    replaygen grid  --out results/grid
    replaygen trace --generator wp --adversary fair --class nonuniform-hard --target 6 --inject-rate 0.5

A JSON ``--config`` file holds manifest fields and overrides the flags.
Exit codes: 0 ok, 1 failure verdict under --assert-success (or a grid
mismatch), 2 usage error, 3 protocol violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .artifacts import atomic_write, canonical_json, manifest_hash
from .engine import ProtocolViolationError, transcript_lines
from .experiments import (
    ADVERSARY_IDS,
    GENERATOR_IDS,
    ManifestError,
    normalize_manifest,
    run_grid,
    run_manifest,
)
from .generators import ProtocolViolation, WitnessProtection

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_PROTOCOL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _kv(items, flag):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"{flag}: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def manifest_from_args(args) -> dict:
    m = {
        "generator": {"id": args.generator, "params": _kv(args.gen_param, "--gen-param")},
        "adversary": {"id": args.adversary, "params": _kv(args.adv_param, "--adv-param")},
        "class": {"id": args.class_id, "params": _kv(args.class_param, "--class-param")},
        "target": args.target,
        "horizon": args.horizon,
        "seed": args.seed,
        "inject_rate": args.inject_rate,
    }
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"--config: {e}") from None
        if not isinstance(cfg, dict):
            raise UsageError("--config: expected a JSON object of manifest fields")
        m.update(cfg)
    return normalize_manifest(m)


def _add_run_flags(p):
    p.add_argument("--generator", default="wp", help=f"one of {', '.join(GENERATOR_IDS)}")
    p.add_argument("--adversary", default="fair", help=f"one of {', '.join(ADVERSARY_IDS)}")
    p.add_argument("--class", dest="class_id", default="nonuniform-hard",
                   help="nonuniform-hard, generic, uniform-countable, finite, proper-replay, "
                        "proper-replay-countable, separation, diagonal")
    p.add_argument("--target", type=int, default=None, help="target index in the class (fair enumerator)")
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-rate", type=float, default=0.0, help="replay probability per round")
    p.add_argument("--gen-param", action="append", metavar="K=V", help="generator parameter (repeatable)")
    p.add_argument("--adv-param", action="append", metavar="K=V", help="adversary parameter (repeatable)")
    p.add_argument("--class-param", action="append", metavar="K=V", help="class parameter (repeatable)")
    p.add_argument("--config", help="JSON file of manifest fields; overrides the flags above")
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="replaygen", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="play one game and write transcript.jsonl + verdict.json")
    _add_run_flags(p)
    p.add_argument("--assert-success", action="store_true",
                   help="exit 1 when some legal target certifies a failure")
    p = sub.add_parser("trace", help="dump Witness Protection internals per round")
    _add_run_flags(p)
    p = sub.add_parser("grid", help="notion x class-family verdict grid as CSV")
    p.add_argument("--out", default="grid-out", help="output directory")
    return ap


def cmd_run(args) -> int:
    m = manifest_from_args(args)
    res = run_manifest(m)
    out = Path(args.out or "run-out")
    lines = transcript_lines(res.transcript, res.manifest_hash)
    atomic_write(out / "transcript.jsonl", "\n".join(lines) + "\n")
    atomic_write(out / "verdict.json", json.dumps(res.summary(), indent=2, sort_keys=True) + "\n")
    tr = res.transcript
    print(f"manifest {res.manifest_hash[:12]}  rounds={tr.horizon}  status={tr.status}  "
          f"outcome={tr.resolution.outcome}")
    for label, v in res.verdicts.items():
        print(f"  {label}: {v.classification}  legal={tr.legal.get(label)}  mistakes={len(v.mistake_times)}"
              f"  last_mistake={v.last_mistake}")
    if tr.status == "adversary-bug":
        return EXIT_PROTOCOL
    if args.assert_success and res.failed:
        return EXIT_FAILURE
    return EXIT_OK


def cmd_trace(args) -> int:
    m = manifest_from_args(args)
    if m["generator"]["id"] not in ("wp", "baseline"):
        raise UsageError(f"generator: {m['generator']['id']!r} has no traceable internals (use wp or baseline)")
    snaps = []

    def hook(rec, gen, adv):
        assert isinstance(gen, WitnessProtection)
        s = gen.snapshot(with_witnesses=True)
        s["example"] = str(rec.example)
        snaps.append(s)

    res = run_manifest(m, on_round=hook)
    h = res.manifest_hash
    header = {"schema": "replaygen.trace/1", "kind": "header", "manifest_sha256": h, "manifest": m}
    text = "\n".join([json.dumps(header, sort_keys=True)] + [json.dumps(s, sort_keys=True) for s in snaps])
    out = Path(args.out or "trace-out")
    atomic_write(out / "trace.jsonl", text + "\n")
    print(f"manifest {h[:12]}  traced {len(snaps)} rounds -> {out / 'trace.jsonl'}")
    return EXIT_OK


def cmd_grid(args) -> int:
    out = Path(args.out)
    cells = run_grid(progress=lambda c: print(f"{c.notion:13s} {c.family:9s} {c.verdict}", flush=True))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["notion", "family", "verdict", "expected", "match", "runs", "manifest_sha256"])
    manifests = {}
    for c in cells:
        hashes = [r.manifest_hash for r in c.runs]
        for r in c.runs:
            manifests[r.manifest_hash] = r.manifest
        expected = "n/a" if c.verdict == "n/a" else ("success" if c.expected else "failure")
        match = "" if c.matches is None else str(c.matches).lower()
        w.writerow([c.notion, c.family, c.verdict, expected, match, len(c.runs), ";".join(hashes)])
    atomic_write(out / "grid.csv", buf.getvalue())
    grid_hash = manifest_hash({"cells": sorted(manifests)})
    atomic_write(out / "grid_manifests.json",
                 json.dumps({"grid_sha256": grid_hash, "manifests": manifests}, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'grid.csv'}")
    bad = [c for c in cells if c.matches is False]
    return EXIT_FAILURE if bad else EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return {"run": cmd_run, "trace": cmd_trace, "grid": cmd_grid}[args.cmd](args)
    except (UsageError, ManifestError) as e:
        print(f"replaygen: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ProtocolViolationError, ProtocolViolation) as e:
        print(f"replaygen: protocol violation: {e}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
