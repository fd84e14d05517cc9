"""Command-line interface.

    sparsedag run --config cfg.json [--seed S] [--out results.csv]
                  [--eventlog run.ndjson]
    sparsedag sweep --config cfg.json --samples 35,70,140,baseline
                    --bandwidth 5MB,10MB,unlimited --out dir/
    sparsedag inclusion --n 1000 --sample 70 --rounds 200 --seed S
                        [--out incl.csv]
    sparsedag egress-model --n 2000 --lambda 128 [--out egress_model.csv]
    sparsedag audit --eventlog run.ndjson [--delta-ms X --gst-ms Y
                    --bandwidth-bps Z]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .auditors import audit_eventlog
from .inclusion import inclusion_latency_sim
from .runner import (ExperimentConfig, export_csv, export_egress_model_csv,
                     export_inclusion_csv, run_experiment_full, sweep)


def _load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(fh.read())


def _parse_bandwidth(token: str) -> int:
    token = token.strip().lower()
    if token in ("unlimited", "inf", "0"):
        return 0
    for suffix, mult in (("gb", 10 ** 9), ("mb", 10 ** 6), ("kb", 10 ** 3),
                         ("b", 1)):
        if token.endswith(suffix):
            return int(float(token[:-len(suffix)]) * mult)
    return int(token)


def _parse_samples(text: str) -> list:
    out = []
    for token in text.split(","):
        token = token.strip()
        if token == "baseline":
            out.append("baseline")
        else:
            out.append(int(token))
    return out


def cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    records = []
    for _ in range(max(config.repetitions, 1)):
        record, validators, shared, net = run_experiment_full(
            config, record_schedule=False)
        records.append(record)
        if args.eventlog:
            net.export_log(args.eventlog)
    export_csv(records, args.out)
    for r in records:
        print(f"variant={r.variant} n={r.n} D={r.D} seed={r.seed} "
              f"throughput={r.throughput_bps:.3f} blocks/s "
              f"commit_p50={r.commit_latency_p50_ms:.1f} ms "
              f"audit_ok={r.audit_ok}")
    print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    samples = _parse_samples(args.samples)
    bandwidths = [_parse_bandwidth(t) for t in args.bandwidth.split(",")]
    records = sweep(config, samples, bandwidths,
                    repetitions=args.repetitions)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "results.csv")
    export_csv(records, out_path)
    for r in records:
        print(f"variant={r.variant} D={r.D} bw={r.bandwidth_bps} "
              f"throughput={r.throughput_bps:.3f} "
              f"latency_p50={r.commit_latency_p50_ms:.1f} ms")
    print(f"wrote {out_path}")
    return 0


def cmd_inclusion(args) -> int:
    hist = inclusion_latency_sim(args.n, args.sample, args.rounds, args.seed)
    export_inclusion_csv(hist, args.out)
    total = sum(hist.values())
    within2 = sum(c for lat, c in hist.items() if 0 <= lat <= 2)
    print(f"n={args.n} D={args.sample} rounds={args.rounds} seed={args.seed} "
          f"vertices={total} latency<=2: {within2 / total:.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_egress_model(args) -> int:
    export_egress_model_csv(args.n, getattr(args, "lambda"), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_audit(args) -> int:
    verdict = audit_eventlog(args.eventlog, delta_ms=args.delta_ms,
                             gst_ms=args.gst_ms,
                             bandwidth_bytes_per_sec=args.bandwidth_bps)
    print(json.dumps({k: v for k, v in verdict.items() if k != "problems"},
                     indent=2))
    for problem in verdict["problems"][:20]:
        print(f"PROBLEM: {problem}", file=sys.stderr)
    return 0 if verdict["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsedag",
        description="DAG-consensus simulation harness: runs, sweeps, the "
                    "standalone inclusion-latency simulator, and event-log "
                    "audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default="results.csv")
    p_run.add_argument("--eventlog", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="cross-product of sample sizes "
                                           "and bandwidth caps")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--samples", required=True,
                         help="comma list of sample sizes, e.g. 35,70,baseline")
    p_sweep.add_argument("--bandwidth", required=True,
                         help="comma list of caps, e.g. 5MB,10MB,unlimited")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--repetitions", type=int, default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_incl = sub.add_parser("inclusion", help="standalone inclusion-latency "
                                              "graph simulation")
    p_incl.add_argument("--n", type=int, required=True)
    p_incl.add_argument("--sample", type=int, required=True)
    p_incl.add_argument("--rounds", type=int, required=True)
    p_incl.add_argument("--seed", type=int, default=1)
    p_incl.add_argument("--out", default="incl.csv")
    p_incl.set_defaults(fn=cmd_inclusion)

    p_egress = sub.add_parser("egress-model", help="traffic-model egress "
                                                   "estimates as CSV")
    p_egress.add_argument("--n", type=int, required=True)
    p_egress.add_argument("--lambda", type=int, default=128)
    p_egress.add_argument("--out", default="egress_model.csv")
    p_egress.set_defaults(fn=cmd_egress_model)

    p_audit = sub.add_parser("audit", help="offline event-log audit")
    p_audit.add_argument("--eventlog", required=True)
    p_audit.add_argument("--delta-ms", type=float, default=None)
    p_audit.add_argument("--gst-ms", type=float, default=None)
    p_audit.add_argument("--bandwidth-bps", type=int, default=None)
    p_audit.set_defaults(fn=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
