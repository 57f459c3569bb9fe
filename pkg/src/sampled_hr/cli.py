"""Command-line interface: ``sampled-hr <command> ...``.

Every output starts with a provenance manifest (a ``#`` comment line for
CSV, a ``manifest`` key for JSON).  Exit codes: 0 success, 1 computation
error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import error_report, winner_table
from .core import CatalogSpec, histogram, load_rank_profile, load_sampled_ranks, read_sidecar_N
from .dist import WITH_REPLACEMENT, WITHOUT_REPLACEMENT
from .errors import ComputationError, ConfigurationError, DomainError, FitError, SampledHRError
from .mapping import (
    BETA_FITTED,
    FitConfig,
    MappingSpec,
    beta_map_table,
    bound_map,
    build_table,
    fit_beta_param,
    linear_map,
    uniform_map,
)
from .metrics import (
    IRRELEVANT_ONLY,
    MonteCarloConfig,
    SamplingScheme,
    expected_shr_curve,
    hr_curve,
    sample_profile,
    shr_curve_monte_carlo,
    shr_variance_curve,
    simulate_profile,
)

DEFAULT_KS = "1,2,5,10,20,50"
# flags that never change the numbers and so stay out of the manifest
_EXECUTION_ONLY = {"out", "threads", "func", "sampled_out"}


def fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class RunManifest:
    command: str
    flags: dict
    seed: object
    input_digests: dict
    version: str = __version__

    def to_dict(self):
        return asdict(self)

    def header(self) -> str:
        return "# " + json.dumps(self.to_dict(), sort_keys=True) + "\n"


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(args, inputs=()):
    flags = {
        k: v for k, v in sorted(vars(args).items())
        if k not in _EXECUTION_ONLY and k != "command"
    }
    return RunManifest(
        command=args.command,
        flags=flags,
        seed=getattr(args, "seed", None),
        input_digests={str(p): _digest(p) for p in inputs},
    )


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _curve_csv(manifest, values, stderr=None) -> str:
    buf = io.StringIO()
    buf.write(manifest.header())
    if stderr is None:
        buf.write("k,value\n")
        for k, v in enumerate(values, start=1):
            buf.write(f"{k},{fmt(v)}\n")
    else:
        buf.write("k,value,stderr\n")
        for k, (v, se) in enumerate(zip(values, stderr), start=1):
            buf.write(f"{k},{fmt(v)},{'' if np.isnan(se) else fmt(se)}\n")
    return buf.getvalue()


def _json(manifest, payload) -> str:
    doc = {"manifest": manifest.to_dict()}
    doc.update(payload)
    return json.dumps(doc, indent=2) + "\n"


def _catalog_size(args, path):
    if args.N is not None:
        return args.N
    N = read_sidecar_N(path)
    if N is None:
        raise ConfigurationError(f"--N is required (no JSON sidecar found for {path})")
    return N


def _scheme_kind(name):
    return {"binom": WITH_REPLACEMENT, "hyper": WITHOUT_REPLACEMENT, "actual": IRRELEVANT_ONLY}[name]


def cmd_hr(args):
    profile = load_rank_profile(args.ranks, _catalog_size(args, args.ranks))
    curve = hr_curve(profile)
    _emit(_curve_csv(_manifest(args, [args.ranks]), curve.values), args.out)


def cmd_shr(args):
    profile = load_rank_profile(args.ranks, _catalog_size(args, args.ranks))
    catalog = CatalogSpec(profile.N, args.n)
    scheme = SamplingScheme.for_profile(_scheme_kind(args.scheme), profile)
    cfg = MonteCarloConfig(seed=args.seed, runs=args.runs, workers=args.threads)
    curve = shr_curve_monte_carlo(profile, scheme, catalog, cfg)
    stderr = curve.stderr if curve.stderr is not None else np.full(catalog.n, np.nan)
    manifest = _manifest(args, [args.ranks])
    _emit(_curve_csv(manifest, curve.values, stderr), args.out)
    if args.sampled_out:
        sampled = sample_profile(profile, scheme, catalog, args.seed, 0, args.threads)
        ids = profile.user_ids or [f"u{i + 1}" for i in range(profile.M)]
        lines = [manifest.header(), "user_id,sampled_rank\n"]
        lines += [f"{u},{r}\n" for u, r in zip(ids, sampled.sampled_ranks)]
        _emit("".join(lines), args.sampled_out)


def cmd_eshr(args):
    profile = load_rank_profile(args.ranks, _catalog_size(args, args.ranks))
    catalog = CatalogSpec(profile.N, args.n)
    scheme = SamplingScheme.for_profile(_scheme_kind(args.scheme), profile)
    hist = histogram(profile)
    curve = expected_shr_curve(hist, scheme, catalog)
    stderr = np.sqrt(shr_variance_curve(hist, scheme, catalog, profile.M))
    _emit(_curve_csv(_manifest(args, [args.ranks]), curve.values, stderr), args.out)


def cmd_map(args):
    catalog = CatalogSpec(args.N, args.n)
    if args.f == "beta":
        if args.a is None:
            raise ConfigurationError("--f beta needs --a")
        table = beta_map_table(args.a, catalog)
    else:
        table = {"linear": linear_map, "bound": bound_map, "uniform": uniform_map}[args.f](catalog)
    buf = io.StringIO()
    buf.write(_manifest(args).header())
    buf.write("k,f_k\n")
    for k, f in enumerate(table.f, start=1):
        buf.write(f"{k},{fmt(f)}\n")
    _emit(buf.getvalue(), args.out)


def cmd_fit(args):
    catalog = CatalogSpec(args.N, args.n)
    sampled = load_sampled_ranks(args.sampled_ranks, catalog.n)
    config = FitConfig(init_a=args.init, tol=args.tol, max_iter=args.max_iter)
    manifest = _manifest(args, [args.sampled_ranks])
    try:
        trace = fit_beta_param(sampled, catalog, config)
    except FitError as exc:
        if exc.trace is not None:
            sys.stderr.write(json.dumps(exc.trace.to_dict()) + "\n")
        raise
    _emit(_json(manifest, trace.to_dict()), args.out)


def _parse_ks(text):
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigurationError(f"bad cutoff list {text!r}") from None
    if not ks:
        raise ConfigurationError("empty cutoff list")
    return ks


def cmd_compare(args):
    paths = args.ranks
    labels = args.labels or [Path(p).stem for p in paths]
    if len(labels) != len(paths):
        raise ConfigurationError("--labels must name every rank file")
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"duplicate algorithm labels: {labels}")
    ks = _parse_ks(args.k)
    fit = FitConfig(init_a=args.init, tol=args.tol, max_iter=args.max_iter)
    specs = [MappingSpec.parse(t, fit) for t in args.f.split(",") if t.strip()]
    cfg = MonteCarloConfig(seed=args.seed, runs=args.runs, workers=args.threads)

    N = args.N if args.N is not None else read_sidecar_N(paths[0])
    if N is None:
        raise ConfigurationError("--N is required (no JSON sidecar found)")
    catalog = CatalogSpec(N, args.n)
    algos = []
    for label, path in zip(labels, paths):
        profile = load_rank_profile(path, N)
        scheme = SamplingScheme.for_profile(_scheme_kind(args.scheme), profile)
        sampled = shr_curve_monte_carlo(profile, scheme, catalog, cfg)
        first_run = None
        if any(s.kind == BETA_FITTED for s in specs):
            first_run = sample_profile(profile, scheme, catalog, cfg.seed, 0, cfg.workers)
        algos.append((label, hr_curve(profile), sampled, first_run))

    winners, reports, fitted = {}, {lab: {} for lab in labels}, {}
    for spec in specs:
        tables = []
        for label, glob, samp, first_run in algos:
            table = build_table(spec, catalog, first_run)
            if spec.kind == BETA_FITTED:
                fitted[label] = fit_beta_param(first_run, catalog, spec.fit).to_dict()
            tables.append((label, table))
            reports[label][spec.label] = error_report(glob, samp, table).to_dict()
        curves = [(lab, glob, samp) for lab, glob, samp, _ in algos]
        winners[spec.label] = winner_table(curves, tables, ks).to_dict()

    payload = {"catalog": {"N": catalog.N, "n": catalog.n}, "winner_tables": winners,
               "error_reports": reports}
    if cfg.runs > 1:
        payload["shr_stderr"] = {
            lab: {str(k): float(samp.stderr[k - 1]) for k in ks}
            for lab, _, samp, _ in algos
        }
    if fitted:
        payload["fitted_a"] = fitted
    _emit(_json(_manifest(args, paths), payload), args.out)


def cmd_simulate(args):
    profile = simulate_profile(args.a, args.M, args.N, args.seed)
    lines = [_manifest(args).header(), "user_id,rank\n"]
    lines += [f"{u},{r}\n" for u, r in zip(profile.user_ids, profile.ranks)]
    _emit("".join(lines), args.out)
    if args.out is not None:
        with open(Path(args.out).with_suffix(".json"), "w", encoding="utf-8") as fh:
            json.dump({"N": args.N}, fh)
            fh.write("\n")


def _add_fit_flags(p):
    p.add_argument("--init", type=float, default=0.5, help="initial shape a (default 0.5)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sampled-hr",
        description="Global vs sampled top-k hit-ratio curves and mapping functions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hr", help="global HR@K curve")
    p.add_argument("--ranks", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hr)

    schemes = ("binom", "hyper", "actual")

    p = sub.add_parser("shr", help="Monte Carlo sampled SHR@k curve")
    p.add_argument("--ranks", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scheme", choices=schemes, default="binom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--sampled-out", help="also write run-0 per-user sampled ranks here")
    p.set_defaults(func=cmd_shr)

    p = sub.add_parser("eshr", help="exact E[SHR@k] curve with its standard deviation")
    p.add_argument("--ranks", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scheme", choices=("binom", "hyper"), default="binom")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eshr)

    p = sub.add_parser("map", help="mapping table f(k)")
    p.add_argument("--f", choices=("linear", "bound", "uniform", "beta"), required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("fit", help="fit the Beta(a, 1) shape from sampled ranks")
    p.add_argument("--sampled-ranks", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_fit_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="winner tables and error reports across algorithms")
    p.add_argument("--ranks", nargs="+", required=True)
    p.add_argument("--labels", nargs="+")
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", default=DEFAULT_KS)
    p.add_argument("--f", default="bound,beta@0.5")
    p.add_argument("--scheme", choices=schemes, default="binom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    _add_fit_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="synthetic rank file with Beta(a, 1) ranks")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (DomainError, ConfigurationError, OSError) as exc:
        print(f"sampled-hr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, SampledHRError) as exc:
        print(f"sampled-hr {args.command}: computation error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
