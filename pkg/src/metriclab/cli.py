"""Command-line front end: reproducible runs over files and zoo families.

Every report is JSON with a schema marker and the full config embedded, so
identical invocations produce byte-identical output. Exit codes: 0 success,
1 domain or input errors, 2 verification failures (certificate, packing, or
bound violations on a constructed object).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from ._util import dumps
from .embedding import (
    embed_chain,
    estimate_metric_dimension,
    image_ratio_report,
    min_embedding_dimension,
    select_embeddable_subchain,
    verify_embedding_distortion,
)
from .errors import MetricLabError, VerificationFailure
from .logratio import brute_force_min_R, gap_bounds, profile, threshold_min_R
from .partitions import dendrogram_chain, with_singleton_terminal
from .spaces import (
    FiniteMetricSpace,
    from_csv,
    from_json,
    hausdorff_hyperspace,
    sup_product,
    to_csv,
)
from .ultrametrize import certificate
from .zoo import KINDS, formula_table, make_family, sample

SCHEMA = 1


def _add_common(sub):
    sub.add_argument("--out", type=Path, default=None, help="directory for report files")
    sub.add_argument("--threads", type=int, default=1, help="worker thread bound")
    sub.add_argument("--rescale", action="store_true",
                     help="divide input matrices by their diameter when above 1")


def _add_source(sub, chain_needed=False):
    sub.add_argument("--input", help="space file (.csv or .json)")
    sub.add_argument("--zoo", choices=KINDS, help="analytic family instead of a file")
    sub.add_argument("--s", type=float, default=None, help="family exponent parameter")
    sub.add_argument("--t", type=float, default=None, help="product family parameter")
    sub.add_argument("--r", type=float, default=None, help="cantor family parameter")
    sub.add_argument("--r1", type=float, default=None, help="product first scale")
    sub.add_argument("--depth", type=int, default=12, help="sampling depth")
    sub.add_argument("--exact", action="store_true",
                     help="exact rational sampling for dyadic families")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="metriclab",
        description="log-ratio analysis, compatible ultrametrics, and box-norm embeddings",
    )
    ap.add_argument("--version", action="version", version=f"metriclab {__version__}")
    subs = ap.add_subparsers(dest="command", required=True)

    p = subs.add_parser("profile", help="per-level log-ratio profile of a chain")
    _add_source(p)
    _add_common(p)
    p.add_argument("--burn-epsilon", type=float, default=0.05,
                   help="tolerance defining the profile burn-in level")

    p = subs.add_parser("ultrametrize", help="compatible ultrametric with certificate")
    _add_source(p)
    _add_common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--rho-out", type=Path, default=None, help="write rho as CSV")

    p = subs.add_parser("embed", help="box-norm embedding into R^N")
    _add_source(p)
    _add_common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--D", type=float, default=None,
                   help="dimension estimate used to size N when --N is absent")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--no-thin", action="store_true",
                   help="embed the chain as given instead of the feasible subsequence")
    p.add_argument("--coords-out", type=Path, default=None)

    p = subs.add_parser("dimension", help="metric (Assouad-type) dimension estimate")
    _add_source(p)
    _add_common(p)
    p.add_argument("--window-r", type=float, required=True)
    p.add_argument("--ratio-floor", type=float, required=True)

    p = subs.add_parser("zoo", help="emit a sampled family: space CSV, chain, formulas")
    _add_source(p)
    _add_common(p)

    p = subs.add_parser("product", help="sup-metric product of space files")
    p.add_argument("inputs", nargs="+", help="space files (.csv or .json)")
    _add_common(p)

    p = subs.add_parser("hyperspace", help="Hausdorff hyperspace of a space")
    _add_source(p)
    _add_common(p)
    p.add_argument("--max-subset-size", type=int, default=None)

    p = subs.add_parser("gap-bounds", help="G and g gap bounds with ratio estimates")
    _add_source(p)
    _add_common(p)
    p.add_argument("--radii", required=True,
                   help="comma-separated radii, e.g. 0.5,0.25,0.125")
    p.add_argument("--heuristic", action="store_true",
                   help="force the two-block heuristic for G regardless of size")

    p = subs.add_parser("oracle", help="brute-force minimum R over all partitions")
    _add_source(p)
    _add_common(p)
    p.add_argument("--radius", dest="oracle_r", type=float, required=True)
    return ap


def _load_space(args, zoo_chain=True):
    """Resolve (space, chain, meta) from --input or --zoo."""
    if args.input and args.zoo:
        raise MetricLabError("give either --input or --zoo, not both")
    if args.input:
        path = Path(args.input)
        text = path.read_text()
        if path.suffix.lower() == ".json":
            space = from_json(text, rescale=args.rescale)
        else:
            space = from_csv(text, rescale=args.rescale)
        chain = dendrogram_chain(space) if zoo_chain else None
        return space, chain, {"input": str(path), "rescaled": space.rescaled}
    if not args.zoo:
        raise MetricLabError("a space source is required: --input or --zoo")
    params = {}
    for key in ("s", "t", "r", "r1"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    family = make_family(args.zoo, **params)
    space, chain = sample(family, args.depth, exact=args.exact)
    meta = {
        "zoo": args.zoo,
        "params": dict(family.params),
        "depth": args.depth,
        "exact": args.exact,
        "exact_R": family.exact_R,
        "standing_hypothesis_ok": family.standing_hypothesis_ok,
    }
    return space, chain, meta, family


def _unpack(loaded):
    if len(loaded) == 4:
        return loaded
    space, chain, meta = loaded
    return space, chain, meta, None


def _config(args, keys):
    return {k: _jsonable(getattr(args, k)) for k in keys if hasattr(args, k)}


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    return v


def _emit(args, name: str, report: dict) -> None:
    text = dumps(report)
    sys.stdout.write(text + "\n")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text + "\n")


def _cmd_profile(args) -> int:
    space, chain, meta, family = _unpack(_load_space(args))
    prof = profile(chain, epsilon=args.burn_epsilon, space=space)
    report = {
        "schema": SCHEMA,
        "config": {"command": "profile", **_config(args, ("input", "zoo", "depth", "burn_epsilon")), **meta},
        "profile": prof.to_report(),
    }
    if family is not None:
        report["exact_limit"] = family.exact_R
    _emit(args, "profile.json", report)
    return 0


def _cmd_ultrametrize(args) -> int:
    space, chain, meta, family = _unpack(_load_space(args))
    chain = with_singleton_terminal(space, chain)
    cert = certificate(space, chain, args.p, args.epsilon)
    report = {
        "schema": SCHEMA,
        "config": {"command": "ultrametrize",
                   **_config(args, ("input", "zoo", "depth", "p", "epsilon")), **meta},
        "certificate": cert.to_report(),
    }
    _emit(args, "certificate.json", report)
    if args.rho_out:
        if space.exact:
            sys.stderr.write("note: exact-mode rho does not serialize to CSV; skipped\n")
        else:
            rho_space = FiniteMetricSpace(space.labels, cert.rho, _trusted=True)
            args.rho_out.write_text(to_csv(rho_space))
    return 0


def _cmd_embed(args) -> int:
    space, chain, meta, family = _unpack(_load_space(args))
    chain = with_singleton_terminal(space, chain)
    N = args.N
    prof = profile(chain)
    if N is None:
        if args.D is None:
            raise MetricLabError("embed needs --N or --D")
        r_est = prof.estimate
        N = min_embedding_dimension(args.D, r_est, r_est - 1.0)
    work = chain if args.no_thin else select_embeddable_subchain(space, chain, N)
    result = embed_chain(space, work, N, args.p, args.epsilon)
    verify = verify_embedding_distortion(space, result, args.p, args.epsilon)
    report = {
        "schema": SCHEMA,
        "config": {"command": "embed",
                   **_config(args, ("input", "zoo", "depth", "N", "D", "p", "epsilon",
                                    "no_thin")), **meta},
        "N": N,
        "thinned_level_ids": [int(i) for i in work.level_ids],
        "audit": result.to_report(),
        "distortion": verify.to_report(),
        "image": image_ratio_report(space, result),
    }
    _emit(args, "embedding.json", report)
    if args.coords_out:
        lines = [",".join(["label"] + [f"x{k+1}" for k in range(result.N)])]
        for i, label in enumerate(space.labels):
            lines.append(",".join([label] + [repr(float(x)) for x in result.coords[i]]))
        args.coords_out.write_text("\n".join(lines) + "\n")
    return 0


def _cmd_dimension(args) -> int:
    space, _chain, meta, family = _unpack(_load_space(args))
    est = estimate_metric_dimension(space, args.window_r, args.ratio_floor)
    report = {
        "schema": SCHEMA,
        "config": {"command": "dimension",
                   **_config(args, ("input", "zoo", "depth", "window_r", "ratio_floor")),
                   **meta},
        "dimension": est.to_report(),
    }
    _emit(args, "dimension.json", report)
    return 0


def _cmd_zoo(args) -> int:
    space, chain, meta, family = _unpack(_load_space(args))
    if family is None:
        raise MetricLabError("the zoo command needs --zoo")
    first = family.first_index
    table = formula_table(family, first + 1, first + args.depth - 1)
    report = {
        "schema": SCHEMA,
        "config": {"command": "zoo", **meta},
        "chain": chain.to_report(),
        "formulas": table,
    }
    _emit(args, "zoo.json", report)
    if args.out and not space.exact:
        (args.out / "space.csv").write_text(to_csv(space))
    return 0


def _cmd_product(args) -> int:
    factors = []
    for raw in args.inputs:
        path = Path(raw)
        text = path.read_text()
        loader = from_json if path.suffix.lower() == ".json" else from_csv
        factors.append(loader(text, rescale=args.rescale))
    prod = sup_product(factors)
    report = {
        "schema": SCHEMA,
        "config": {"command": "product", "inputs": [str(p) for p in args.inputs]},
        "points": prod.n,
        "diameter": float(prod.diameter),
    }
    _emit(args, "product.json", report)
    if args.out:
        (args.out / "product.csv").write_text(to_csv(prod))
    return 0


def _cmd_hyperspace(args) -> int:
    space, _chain, meta, _family = _unpack(_load_space(args))
    hyper = hausdorff_hyperspace(space, args.max_subset_size)
    report = {
        "schema": SCHEMA,
        "config": {"command": "hyperspace",
                   **_config(args, ("input", "zoo", "depth", "max_subset_size")), **meta},
        "points": hyper.n,
        "diameter": float(hyper.diameter),
    }
    _emit(args, "hyperspace.json", report)
    if args.out and not hyper.exact:
        (args.out / "hyperspace.csv").write_text(to_csv(hyper))
    return 0


def _cmd_gap_bounds(args) -> int:
    space, _chain, meta, _family = _unpack(_load_space(args))
    radii = [float(x) for x in args.radii.split(",") if x.strip()]
    report_obj = gap_bounds(space, radii, exact=False if args.heuristic else None)
    report = {
        "schema": SCHEMA,
        "config": {"command": "gap-bounds",
                   **_config(args, ("input", "zoo", "depth", "radii", "heuristic")),
                   **meta},
        "gap_bounds": report_obj.to_report(),
    }
    _emit(args, "gap_bounds.json", report)
    return 0


def _cmd_oracle(args) -> int:
    space, _chain, meta, _family = _unpack(_load_space(args))
    brute = brute_force_min_R(space, args.oracle_r, threads=args.threads)
    brute_pos = brute_force_min_R(space, args.oracle_r, require_positive_delta=True,
                                  threads=args.threads)
    thresh = threshold_min_R(space, args.oracle_r)
    thresh_pos = threshold_min_R(space, args.oracle_r, require_positive_delta=True)
    report = {
        "schema": SCHEMA,
        "config": {"command": "oracle",
                   **_config(args, ("input", "zoo", "depth", "oracle_r", "threads")),
                   **meta},
        "minimum": {"R": brute.value, "delta": brute.delta, "gamma": brute.gamma,
                    "witness": [list(b) for b in brute.witness.blocks]},
        "minimum_positive_delta": {"R": brute_pos.value, "delta": brute_pos.delta,
                                   "gamma": brute_pos.gamma,
                                   "witness": [list(b) for b in brute_pos.witness.blocks]},
        "threshold_minimum": {"R": thresh.value},
        "threshold_minimum_positive_delta": {"R": thresh_pos.value},
        "agree": bool(brute.value == thresh.value),
    }
    _emit(args, "oracle.json", report)
    return 0


_HANDLERS = {
    "profile": _cmd_profile,
    "ultrametrize": _cmd_ultrametrize,
    "embed": _cmd_embed,
    "dimension": _cmd_dimension,
    "zoo": _cmd_zoo,
    "product": _cmd_product,
    "hyperspace": _cmd_hyperspace,
    "gap-bounds": _cmd_gap_bounds,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except VerificationFailure as exc:
        sys.stderr.write(f"verification failure: {exc}\n")
        return 2
    except (MetricLabError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
