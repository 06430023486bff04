"""Command-line front end.

Every subcommand reads one graph (a JSON document path or ``--catalog``),
runs one computation and writes CSV or JSON to stdout or ``--out``.
Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import analysis as an
from .graphcore import CATALOG_NAMES, GraphError, catalog, compute_invariants, load_graph
from .resonancefinder import (
    BoundaryZeroError,
    FinderConfig,
    SearchRegion,
    StateError,
    WindingError,
    extract_state,
    search,
)
from .scattering import SecularFunction
from .secularpoly import SizeGuardError, symbolic_secular

NUMERIC_ERRORS = (WindingError, BoundaryZeroError, an.BranchDivergenceError, np.linalg.LinAlgError)


def fmt(x) -> str:
    return "%.15g" % x


def _clean(obj):
    """Round floats to 15 significant digits and spell out infinities."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(fmt(x))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _tidy(x: float) -> float:
    return 0.0 if abs(x) < 1e-14 else x


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _complexes(text: str) -> list[complex]:
    try:
        return [complex(x.strip().replace("i", "j")) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgraph-resonances",
                                description="Scattering resonances of quantum graphs with leads.")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_args(sp):
        sp.add_argument("graph", nargs="?", help="graph document (JSON)")
        sp.add_argument("--catalog", choices=CATALOG_NAMES, help="named example graph")
        sp.add_argument("--params", type=_floats, default=None, help="catalog parameters, e.g. 1,3")
        sp.add_argument("--lengths", type=_floats, default=None, help="override edge lengths")
        sp.add_argument("--out", help="output file (default stdout)")

    def window_args(sp, sigma_max=10.0, tau_min=-1.0):
        sp.add_argument("--sigma-min", type=float, default=0.0)
        sp.add_argument("--sigma-max", type=float, default=sigma_max)
        sp.add_argument("--tau-min", type=float, default=tau_min)
        sp.add_argument("--tau-cap", type=float, default=1e-6)
        sp.add_argument("--tol", type=float, default=1e-12, help="Newton step tolerance")

    graph_args(sub.add_parser("classify", help="combinatorial invariants as JSON"))
    graph_args(sub.add_parser("secular-poly", help="normalized secular polynomial, one term per line"))

    sp = sub.add_parser("resonances", help="resonances in a window as CSV")
    graph_args(sp)
    window_args(sp)

    sp = sub.add_parser("spectrum", help="eigenvalues of the compact graph as CSV")
    graph_args(sp)
    sp.add_argument("--sigma-max", type=float, default=10.0, help="largest k")
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("weyl", help="Weyl slope of the resonance counting function")
    graph_args(sp)
    window_args(sp, sigma_max=100.0, tau_min=-5.0)

    sp = sub.add_parser("neps", help="N(eps) curve and exponent fit")
    graph_args(sp)
    window_args(sp, sigma_max=200.0)
    sp.add_argument("--eps-min", type=float, default=1e-3)
    sp.add_argument("--eps-max", type=float, default=1e-1)
    sp.add_argument("--eps-steps", type=int, default=9)

    sp = sub.add_parser("estimate-h", help="resonance gap of a type I graph")
    graph_args(sp)
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sigma-max", type=float, default=40.0)
    sp.add_argument("--tau-min", type=float, default=-5.0)
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("branch-trace", help="resonance branch through a torus point (two edges)")
    graph_args(sp)
    sp.add_argument("--base", type=_complexes, default=None,
                    help="torus point, e.g. 1j,1j (default: every point of W_G found)")
    sp.add_argument("--u-max", type=float, default=0.2)
    sp.add_argument("--u-steps", type=int, default=401)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--only", type=lambda s: [int(x) for x in s.split(",")], default=None,
                    help="comma-separated criterion numbers")
    sp.add_argument("--out", help="output file (default stdout)")
    return p


def _graph(args):
    if args.graph and args.catalog:
        raise GraphError("give either a graph document or --catalog, not both")
    if args.graph:
        with open(args.graph, encoding="utf-8") as fh:
            g = load_graph(fh.read())
        if args.lengths is not None:
            g = g.with_lengths(args.lengths)
        return g
    if args.catalog:
        return catalog(args.catalog, args.params or [], lengths=args.lengths)
    raise GraphError("no graph given; pass a document path or --catalog NAME")


def _cfg(args) -> FinderConfig:
    return FinderConfig(newton_tol=args.tol)


def _region(args) -> SearchRegion:
    return SearchRegion(args.sigma_min, args.sigma_max, args.tau_min, args.tau_cap, tau_cap=args.tau_cap)


def cmd_classify(args, out):
    out.write(_dump_json(compute_invariants(_graph(args)).to_json()))


def cmd_secular_poly(args, out):
    g = _graph(args)
    sp = symbolic_secular(g)
    for line in sp.poly.format():
        out.write(line + "\n")


def cmd_resonances(args, out):
    g = _graph(args)
    sf = SecularFunction.of(g)
    result = search(sf, _region(args), _cfg(args))
    out.write("sigma,tau,residual,multiplicity,t_norm\n")
    for r in result.resonances:
        try:
            t = extract_state(sf, r.k, multiplicity=r.multiplicity).t_norm
        except StateError:
            t = math.nan
        out.write(",".join([fmt(r.k.real), fmt(r.k.imag), fmt(r.residual), str(r.multiplicity), fmt(t)]) + "\n")


def cmd_spectrum(args, out):
    g = _graph(args)
    eig = an.compact_eigenvalues(g, None, args.sigma_max, FinderConfig(newton_tol=args.tol))
    out.write("k,multiplicity\n")
    for k, m in eig:
        out.write(f"{fmt(k)},{m}\n")


def cmd_weyl(args, out):
    g = _graph(args)
    sf = SecularFunction.of(g)
    res = search(sf, _region(args), _cfg(args)).resonances
    w = an.weyl_fit(res, args.sigma_max, sf.total_length)
    out.write(_dump_json({
        "K": args.sigma_max,
        "count": len(res),
        "slope": w.slope,
        "intercept": w.intercept,
        "total_length": w.total_length,
        "L_over_pi": w.one_sided,
        "L_over_2pi": w.half_density,
        "closest": w.closest_reference,
    }))


def cmd_neps(args, out):
    g = _graph(args)
    if not 0 < args.eps_min <= args.eps_max or args.eps_steps < 1:
        raise ValueError("need 0 < eps-min <= eps-max and eps-steps >= 1")
    eps = np.logspace(math.log10(args.eps_min), math.log10(args.eps_max), args.eps_steps)
    sf = SecularFunction.of(g)
    tau_min = min(args.tau_min, -1.05 * args.eps_max)
    region = SearchRegion(max(args.sigma_min, 1e-3), args.sigma_max, tau_min, args.tau_cap,
                          tau_cap=args.tau_cap)
    res = search(sf, region, _cfg(args)).resonances
    rep = an.n_eps_curve(g, None, args.sigma_max, eps, resonances=res)
    out.write(_dump_json({
        "K": rep.K,
        "curve": [[e, c, n] for (e, n), c in zip(rep.eps_grid, rep.counts)],
        "exponent": rep.exponent,
        "d_hat": rep.d_hat,
        "d_hat_half_window": rep.d_hat_half,
        "stable": rep.stable,
        "weyl_slope": rep.weyl_slope,
        "h_hat": rep.h_hat,
        "message": rep.message,
    }))
    if rep.exponent is None:
        print(f"warning: {rep.message}", file=sys.stderr)


def cmd_estimate_h(args, out):
    g = _graph(args)
    hs = an.h_samples(g, args.samples, args.sigma_max, args.seed, -args.tau_min,
                      FinderConfig(newton_tol=args.tol))
    out.write(_dump_json({
        "h_hat": min(hs),
        "spread": max(hs) - min(hs) if all(map(math.isfinite, hs)) else 0.0,
        "samples": hs,
        "seed": args.seed,
        "K": args.sigma_max,
    }))


def cmd_branch_trace(args, out):
    g = _graph(args)
    if args.base is not None:
        bases = [np.array(args.base)]
    else:
        bases = [an.snap_torus_point(w) for w in an.torus_zeros(g)]
        if not bases:
            raise an.NotInWError("no point of W_G found on the torus")
    u = np.linspace(-args.u_max, args.u_max, args.u_steps)
    traces = []
    for w in bases:
        tr = an.branch_trace(g, w, u)
        traces.append({
            "base": [[_tidy(z.real), _tidy(z.imag)] for z in np.asarray(w, dtype=complex)],
            "c": tr.c,
            "quoted_c": tr.quoted_c,
            "dtau_du0": tr.dtau_du0,
            "dbeta_du0": tr.dbeta_du0,
            "m_weights": tr.m_weights.tolist(),
            "tangent_residual": tr.tangent_residual,
            "samples": [[a, b] for a, b in zip(tr.u.tolist(), tr.tau.tolist())],
        })
    out.write(_dump_json({"lengths": list(g.lengths), "traces": traces}))


def cmd_verify(args, out):
    from . import verify

    unknown = sorted(set(args.only or []) - set(verify.TITLES))
    if unknown:
        raise ValueError(f"no acceptance criteria numbered {unknown}")
    results = verify.run(args.only, stream=lambda line: (out.write(line + "\n"), out.flush()))
    passed = sum(r.passed for r in results)
    out.write(f"{passed}/{len(results)} criteria passed\n")
    return 0 if passed == len(results) else 1


COMMANDS = {
    "classify": cmd_classify,
    "secular-poly": cmd_secular_poly,
    "resonances": cmd_resonances,
    "spectrum": cmd_spectrum,
    "weyl": cmd_weyl,
    "neps": cmd_neps,
    "estimate-h": cmd_estimate_h,
    "branch-trace": cmd_branch_trace,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    buf = io.StringIO()
    try:
        status = COMMANDS[args.command](args, buf) or 0
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (GraphError, SizeGuardError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
