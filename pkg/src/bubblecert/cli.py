"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from . import certificates as C
from .suites import DEFAULT_TOLERANCES, RUNNERS, SUITES

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def read_config(path: str) -> dict:
    """key = value lines; '#' starts a comment; tolerances as tol.<name> = value."""
    out: dict = {}
    tol: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            value = value.strip("\"'")
            key = key.replace("-", "_")
            if key.startswith("tol."):
                tol[key[4:]] = float(value)
            else:
                out[key] = value
    if tol:
        out["tol"] = tol
    return out


def _env_jobs() -> int:
    raw = os.environ.get("BUBBLECERT_JOBS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _tol_pair(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    k, v = text.split("=", 1)
    if k not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(f"unknown tolerance {k!r}; known: {', '.join(DEFAULT_TOLERANCES)}")
    return k, float(v)


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    defaults = defaults or {}
    parser = argparse.ArgumentParser(prog="bubblecert", description="Exact certificates and numerical cross-checks for the boundary bubble construction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file presetting flags; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", help="exact sign certificates for a range of dimensions")
    cert.add_argument("--n-min", type=int, default=25)
    cert.add_argument("--n-max", type=int, default=200)
    cert.add_argument("--out", help="write to FILE instead of stdout")
    cert.add_argument("--format", choices=("json", "csv"), default="json")
    cert.add_argument("--jobs", type=int, default=_env_jobs())
    cert.add_argument("--seed", type=int, default=0)

    cc = sub.add_parser("crosscheck", help="oracle cross-check suites")
    cc.add_argument("--suite", choices=SUITES + ("all",), default="all")
    cc.add_argument("--seed", type=int, default=0)
    cc.add_argument("--samples", type=int, default=10**6, help="Monte-Carlo samples per instance (0 skips)")
    cc.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VALUE")
    cc.add_argument("--jobs", type=int, default=_env_jobs())
    cc.add_argument("--json", action="store_true", help="emit rows as JSON instead of a table")

    sm = sub.add_parser("sample-metric", help="evaluate the bump-series metric on a grid")
    sm.add_argument("--n", type=int, default=25)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--grid", default="0.1:0.5:9", help="lo:hi:count per axis, comma separated (x_1, x_2, ...)")
    sm.add_argument("--N0", type=int, default=3)
    sm.add_argument("--out", help="write CSV to FILE instead of stdout")

    for p in (cert, cc, sm):
        p.add_argument("--config", help=argparse.SUPPRESS)
        known = {a.dest for a in p._actions}
        p.set_defaults(**{k: _coerce(p, k, v) for k, v in defaults.items() if k in known})
    return parser


def _coerce(p: argparse.ArgumentParser, dest: str, value):
    if dest == "tol":
        return sorted(value.items())
    for a in p._actions:
        if a.dest == dest and a.type is not None and isinstance(value, str):
            return a.type(value)
    return value


# -- certify ----------------------------------------------------------------


def _certificate_csv(certs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "regime", "d", "valid", "a0", "I''(1)", "J(1)", "failing"])
    for c in certs:
        if isinstance(c, C.CertificateFailure):
            w.writerow([c.n, "", "", False, "", "", "", c.error])
            continue
        w.writerow([
            c.n,
            c.regime,
            c.d,
            c.valid,
            repr(float(c.a0)),
            repr(c.crosschecks["I''(1)"]["exact"]),
            repr(c.crosschecks["J(1)"]["exact"]),
            ";".join(c.failing()),
        ])
    return buf.getvalue()


def cmd_certify(args) -> int:
    if args.n_max < args.n_min:
        raise UsageError("--n-max must be >= --n-min")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    certs = C.certify_range(args.n_min, args.n_max, jobs=args.jobs, seed=args.seed)
    text = C.certificates_json(certs) + "\n" if args.format == "json" else _certificate_csv(certs)
    _emit(text, args.out)
    bad = [c for c in certs if not c.valid]
    for c in bad:
        if isinstance(c, C.CertificateFailure):
            reason = "unsupported dimension" if "unsupported dimension" in c.error else c.error
        else:
            reason = "failed checks: " + ", ".join(c.failing())
        print(f"n={c.n}: {reason}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


# -- crosscheck -------------------------------------------------------------


def _run_suite(job):
    name, kw = job
    return name, RUNNERS[name](**kw)


def _table(rows) -> str:
    heads = ("SUITE", "CHECK", "REFERENCE", "COMPUTED", "STATUS")
    cells = [(r.suite, r.check, r.reference, r.computed, r.status) for r in rows]
    width = [min(max([len(h)] + [len(c[i]) for c in cells]), 60) for i, h in enumerate(heads)]

    def line(vals):
        return "  ".join(v.ljust(width[i]) for i, v in enumerate(vals)).rstrip()

    out = [line(heads), line(["-" * w for w in width])]
    out += [line(c) for c in cells]
    return "\n".join(out) + "\n"


def cmd_crosscheck(args) -> int:
    if args.samples < 0:
        raise UsageError("--samples must be >= 0")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    kw = {"seed": args.seed, "samples": args.samples, "tol": dict(args.tol)}
    jobs = [(name, kw) for name in names]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = dict(ex.map(_run_suite, jobs))
    else:
        results = dict(_run_suite(j) for j in jobs)
    rows = [r for name in names for r in results[name]]
    if args.json:
        print(json.dumps([r.__dict__ for r in rows], indent=2))
    else:
        sys.stdout.write(_table(rows))
    failed = [r for r in rows if not r.ok]
    summary = ", ".join(f"{n}: {'PASS' if all(r.ok for r in results[n]) else 'FAIL'}" for n in names)
    print(f"summary: {summary}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# -- sample-metric ----------------------------------------------------------


def parse_grid(spec: str, n: int) -> np.ndarray:
    axes = []
    for part in spec.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise UsageError(f"bad grid axis {part!r}; expected lo:hi:count")
        try:
            lo, hi, count = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError as exc:
            raise UsageError(f"bad grid axis {part!r}: {exc}") from None
        if count < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise UsageError(f"bad grid axis {part!r}")
        axes.append(np.linspace(lo, hi, count))
    if len(axes) > n:
        raise UsageError(f"grid has {len(axes)} axes but n={n}")
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.zeros((mesh[0].size, n))
    for i, m in enumerate(mesh):
        pts[:, i] = m.ravel()
    if np.any(pts[:, -1] < 0):
        raise UsageError("grid leaves the half-space (x_n < 0)")
    return pts


def bump_log10_smallness(n: int, d: int, N: int) -> float:
    """log10 of mu^-2 lam^(n-4d-6) rho^(2-n) for bump N: mu = 1, lam = 2^-N, rho = 1/(2N^2)."""
    return -N * (n - 4 * d - 6) * math.log10(2) + (2 - n) * math.log10(Fraction(1, 2 * N * N))


def cmd_sample_metric(args) -> int:
    from .weyl import active_bumps, counterexample_metric_sample, weyl_from_seed

    n = args.n
    if n < C.MID_MIN:
        raise UsageError(f"--n must be >= {C.MID_MIN}")
    if args.N0 < 3:
        raise UsageError("--N0 must be >= 3")
    pts = parse_grid(args.grid, n)
    W = weyl_from_seed(n - 1, args.seed)
    f = C.f_for(n)
    d = f.degree
    fc = [float(c) for c in f.coeffs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    tri = [(a, b) for a in range(n) for b in range(a, n)]
    w.writerow([f"x{i + 1}" for i in range(n)] + ["bumps", "log10_smallness"] + [f"g{a + 1}_{b + 1}" for a, b in tri])
    for x in pts:
        g = counterexample_metric_sample(W, fc, d, args.N0, x)
        bumps = active_bumps(x, args.N0)
        small = ";".join(repr(bump_log10_smallness(n, d, N)) for N in bumps)
        w.writerow([repr(float(v)) for v in x] + [";".join(map(str, bumps)), small] + [repr(float(g[a, b])) for a, b in tri])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- entry ------------------------------------------------------------------


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


COMMANDS = {"certify": cmd_certify, "crosscheck": cmd_crosscheck, "sample-metric": cmd_sample_metric}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        defaults = read_config(known.config) if known.config else {}
    except (OSError, UsageError, ValueError) as exc:
        print(f"bubblecert: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser(defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bubblecert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bubblecert: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
