"""``collapse-lab`` command-line runner.

Exit codes: 0 success, 1 criterion failure, 2 configuration error,
3 runtime or numerical error.  A manifest is written for every run that
gets as far as having an output directory, including failed ones.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from pathlib import Path

from . import __version__
from .acceptance import criterion_determinism, run_suite, suite_csv
from .errors import ConfigurationError
from .experiments import EXPERIMENTS, get
from .io import write_csv, write_manifest
from .criteria import CRITERION_COLUMNS

EXIT_OK, EXIT_CRITERION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
CONFIG_KEYS = {"experiment", "seed", "params", "workers", "out"}
SEED_MAX = 2**64 - 1


def parse_config(data: dict, seed: int | None = None, workers: int | None = None,
                 out: str | None = None) -> dict:
    """Validate a config mapping and return it with defaults applied.

    Parameters may sit under ``params`` or, for convenience, at the top
    level next to ``experiment``; the echo always uses ``params``.
    """
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    if "experiment" not in data:
        raise ConfigurationError("config needs an 'experiment' key")
    exp = get(data["experiment"])
    params = dict(data.get("params") or {})
    if not isinstance(data.get("params", {}), dict):
        raise ConfigurationError("'params' must be an object")
    for k, v in data.items():
        if k in CONFIG_KEYS:
            continue
        if k not in exp.defaults:
            raise ConfigurationError(f"unknown config key {k!r}")
        if k in params:
            raise ConfigurationError(f"parameter {k!r} given twice")
        params[k] = v
    seed = data.get("seed", 0) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= SEED_MAX:
        raise ConfigurationError("seed must be an integer in [0, 2^64)")
    workers = data.get("workers", 1) if workers is None else workers
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("workers must be a positive integer")
    out = data.get("out") if out is None else out
    if out is not None and not isinstance(out, str):
        raise ConfigurationError("out must be a string")
    resolved = exp.resolve(params)
    for k, v in resolved.items():
        if ("lam" in k or k in ("beta", "mass", "pointer_mass")) and isinstance(v, float) and v < 0:
            raise ConfigurationError(f"{k} must be non-negative")
    return {"experiment": exp.name, "seed": seed, "workers": workers,
            "out": out or f"runs/{exp.name}-seed{seed}", "params": resolved}


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"malformed JSON in {path}: {e}") from e


def _manifest(kind: str, config, start: float, status: str, criteria, **extra) -> dict:
    m = {"kind": kind, "artifact_version": __version__, "config": config,
         "wall_clock_seconds": time.perf_counter() - start,
         "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
         "status": status, "criteria": [c.to_dict() for c in criteria]}
    failing = [c.id for c in criteria if not c.passed]
    m["failing_criteria"] = failing
    m.update(extra)
    return m


def cmd_run(args) -> int:
    start = time.perf_counter()
    try:
        cfg = parse_config(load_config(args.config), args.seed, args.workers, args.out)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        if args.out:
            write_manifest(Path(args.out) / "manifest.json",
                           _manifest("run", None, start, "config-error", [], error=str(e)))
        return EXIT_CONFIG
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    exp = EXPERIMENTS[cfg["experiment"]]
    t0 = time.perf_counter()
    try:
        res = exp.run(cfg["params"], cfg["seed"], cfg["workers"])
    except ConfigurationError as e:
        print(f"config error in {exp.name}: {e}", file=sys.stderr)
        write_manifest(out / "manifest.json", _manifest("run", cfg, start, "config-error", [], error=str(e)))
        return EXIT_CONFIG
    except Exception as e:  # any module failure is reported, never swallowed silently
        print(f"runtime error in {exp.name}: {type(e).__name__}: {e}", file=sys.stderr)
        write_manifest(out / "manifest.json",
                       _manifest("run", cfg, start, "runtime-error", [], partial=True,
                                 error=f"{type(e).__name__}: {e}", traceback=traceback.format_exc()))
        return EXIT_RUNTIME
    for c in res.criteria:
        c.runtime = time.perf_counter() - t0
    csv_path = write_csv(out / f"{exp.name}.csv", res.columns, res.rows)
    ok = all(c.passed for c in res.criteria)
    write_manifest(out / "manifest.json",
                   _manifest("run", cfg, start, "ok" if ok else "criterion-failure", res.criteria,
                             summary=res.summary, data_file=csv_path.name, columns=list(res.columns)))
    for c in res.criteria:
        print(c.summary_line())
    print(f"wrote {csv_path} and {out / 'manifest.json'}")
    return EXIT_OK if ok else EXIT_CRITERION


def cmd_list(args) -> int:
    width = max(map(len, EXPERIMENTS))
    for name, exp in EXPERIMENTS.items():
        print(f"{name:<{width}}  {exp.description}")
        if args.verbose:
            print(f"{'':<{width}}  defaults: {json.dumps(exp.defaults)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    start = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {"seed": args.seed, "workers": args.workers, "determinism_check": not args.skip_determinism}
    results = []
    try:
        results = run_suite(args.seed, args.workers, echo=lambda s: print(s, flush=True))
        body = suite_csv(results)
        if not args.skip_determinism:
            det = criterion_determinism(body, args.seed, args.workers)
            print(det.summary_line(), flush=True)
            results.append(det)
    except Exception as e:
        print(f"runtime error during verify: {type(e).__name__}: {e}", file=sys.stderr)
        write_manifest(out / "manifest.json",
                       _manifest("verify", config, start, "runtime-error", results, partial=True,
                                 error=f"{type(e).__name__}: {e}"))
        return EXIT_RUNTIME
    rows = [row for r in results for row in r.csv_rows()]
    write_csv(out / "verify.csv", CRITERION_COLUMNS, rows)
    ok = all(r.passed for r in results)
    write_manifest(out / "manifest.json",
                   _manifest("verify", config, start, "ok" if ok else "criterion-failure", results,
                             data_file="verify.csv"))
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed; wrote {out / 'verify.csv'}")
    return EXIT_OK if ok else EXIT_CRITERION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="collapse-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list experiments")
    ls.add_argument("-v", "--verbose", action="store_true", help="show default parameters")
    ls.set_defaults(func=cmd_list)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="runs/verify")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--skip-determinism", action="store_true",
                   help="skip the second suite pass that checks byte-identical output")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors, which matches the config-error code
        return int(e.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
