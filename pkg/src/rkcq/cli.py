"""Command-line driver: preset tables, custom config runs, stability reports."""

import argparse
import json
import sys

from .harness import ExperimentConfig, run_config, run_stability_report, run_table

_TABLES = ("table1", "table2", "table3", "table4", "table5")


def _add_common(p):
    p.add_argument("--out", default="cq_out", help="output directory (default: cq_out)")
    p.add_argument("--threads", type=int, default=None,
                   help="frequency-loop worker processes (default: serial)")
    p.add_argument("--weights-cache", default=None,
                   help="directory for reusable weight-set artifacts")
    p.add_argument("--panels", type=int, default=None,
                   help="override boundary panel count")
    p.add_argument("--nref", type=int, default=None,
                   help="override reference step count")


def _parse_m_range(text):
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(","))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cq-harness",
        description="Runge-Kutta convolution quadrature convergence and stability studies",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a JSON experiment config")
    p_run.add_argument("config", help="path to a config JSON file")
    _add_common(p_run)

    for t in _TABLES:
        p_t = sub.add_parser(t, help="run the %s preset" % t)
        _add_common(p_t)

    p_st = sub.add_parser("stability-report", help="emit the stability JSON report")
    p_st.add_argument("--m-range", default="1-12",
                      help="stage counts, e.g. 1-12 or 2,3,5 (default: 1-12)")
    p_st.add_argument("--out", default=None,
                      help="write JSON to DIR/stability_report.json instead of stdout")

    args = parser.parse_args(argv)

    if args.cmd == "stability-report":
        report = run_stability_report(_parse_m_range(args.m_range))
        text = json.dumps(report, indent=2)
        if args.out:
            import os

            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, "stability_report.json")
            with open(path, "w") as f:
                f.write(text + "\n")
            print(path)
        else:
            print(text)
        return 0

    if args.cmd == "run":
        with open(args.config) as f:
            cfg = ExperimentConfig.from_dict(json.load(f))
        over = {}
        if args.threads is not None:
            over["threads"] = args.threads
        if args.weights_cache is not None:
            over["weights_cache"] = args.weights_cache
        if args.panels is not None:
            over["n_panels"] = args.panels
        if args.nref is not None:
            over["N_ref"] = args.nref
        if over:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
        run_config(cfg, args.out)
        print(args.out)
        return 0

    run_table(args.cmd, args.out, panels=args.panels, nref=args.nref,
              threads=args.threads, weights_cache=args.weights_cache)
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
