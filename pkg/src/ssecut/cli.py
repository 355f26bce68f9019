"""Command-line entry point: ``sse-cut <command> [options]``.

Input graphs are rescaled to degree 1 unless ``--raw`` is given. Every
command prints a JSON report (sorted keys) on stdout and, with ``--out``,
writes the same text to a file; ``bench`` writes CSV instead.
Exit status is 0 on success, 2 when the answer is inconclusive or a
verification fails, and 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import cut_improve, decomp, embed_sdp, gs_round, oracle, orth_sep, planted, sse_flow
from .graph_core import Graph, GraphError, cut_quality, load_graph, normalize_regular
from .graph_core import barbell_graph, complete_graph, cycle_graph, grid_graph, random_graph
from .rng import make_rng

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
ALGORITHMS = ("gs-round", "orth-round", "genus-round", "flow-round")


class Inconclusive(Exception):
    """Carries a report whose outcome is not a definite answer."""

    def __init__(self, report: dict):
        super().__init__("inconclusive")
        self.report = report


def _load_json(path: str) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _graph(args) -> Graph:
    g = load_graph(args.graph)
    return g if args.raw else normalize_regular(g)


def _rescore(g: Graph, cut, tol: float) -> dict:
    """Cut JSON recomputed from scratch; a mismatch beyond tol is an error."""
    fresh = cut_quality(g, cut.set)
    for key in ("cut_weight", "sparsity", "expansion"):
        if abs(getattr(fresh, key) - getattr(cut, key)) > tol:
            raise AssertionError(f"reported {key} {getattr(cut, key)} differs from rescored {getattr(fresh, key)}")
    return fresh.to_json()


def _solution(args, g: Graph) -> embed_sdp.VectorSolution:
    if getattr(args, "sol", None):
        return embed_sdp.VectorSolution.from_json(_load_json(args.sol))
    return embed_sdp.solve_sdp(g)


# --- commands ------------------------------------------------------------------------------


def cmd_embed(args) -> dict:
    g = _graph(args)
    sol = embed_sdp.solve_sdp(g) if args.mu is None else embed_sdp.solve_base_embedding(g, args.mu)
    return {**sol.to_json(), "residuals": sol.residuals}


def cmd_gs_round(args) -> dict:
    g = _graph(args)
    sol = _solution(args, g)
    rep = gs_round.gs_round(g, sol, args.r, args.eps, seed=args.seed)
    return {**rep.to_json(), "cut": _rescore(g, rep.best_cut, args.tol)}


def cmd_orth_round(args) -> dict:
    g = _graph(args)
    sol = _solution(args, g)
    res = orth_sep.round_or_small_set(g, args.r, args.eps, seed=args.seed, sol=sol, trials=args.trials)
    out = res.to_json()
    if res.cut is not None:
        out["cut"] = _rescore(g, res.cut, args.tol)
    if res.branch == "inconclusive":
        raise Inconclusive(out)
    return out


def cmd_genus_round(args) -> dict:
    g = _graph(args)
    sol = _solution(args, g)
    res = decomp.genus_round(g, sol, args.r, args.eps, args.beta_pad, seed=args.seed,
                             delta=args.delta, draws=args.draws)
    out = res.to_json()
    if res.cut is not None:
        out["cut"] = _rescore(g, res.cut, args.tol)
    if res.branch == "inconclusive":
        raise Inconclusive(out)
    return out


def cmd_flow_build(args) -> dict:
    g = _graph(args)
    res = sse_flow.construct_spectral_flow(g, args.r, args.d, iterations=args.iterations,
                                           k_paths=args.k_paths, target_lambda=args.target_lambda)
    cap = sse_flow.verify_capacity(res.flow, g, tol=args.tol)
    out = {
        "flow": res.flow.to_json(),
        "certificate": res.certificate.to_json(),
        "objective": res.objective,
        "iterations": len(res.history) - 1,
        "capacity_ok": cap.ok,
        "fallback": None if res.fallback is None else res.fallback.to_json(),
        "seed": args.seed,
    }
    if res.fallback is not None:
        raise Inconclusive(out)
    return out


def cmd_flow_verify(args) -> dict:
    g = _graph(args)
    F = sse_flow.load_flow(args.flow, g.n)
    cap = sse_flow.verify_capacity(F, g, tol=args.tol)
    out = {"capacity": {"ok": cap.ok, "worst_edge": cap.worst_edge, "worst_excess": cap.worst_excess},
           "degrees": [float(x) for x in F.degrees], "seed": args.seed}
    ok = cap.ok
    if args.spectral:
        r, d, lam = args.spectral
        cert = sse_flow.verify_spectral(F, int(r), d, lam)
        out["spectral"] = {**cert.to_json(), "valid": cert.valid}
        ok &= cert.valid
    for name, fn in (("sse", sse_flow.verify_sse), ("weak_sse", sse_flow.verify_weak_sse)):
        params = getattr(args, name)
        if params:
            r, d, beta = params
            verdict = fn(F, r, d, beta)
            out[name] = {"ok": verdict.ok, "degree_ok": verdict.degree_ok,
                         "min_expansion": verdict.min_expansion,
                         "witness": None if verdict.witness is None else verdict.witness.to_json()}
            ok &= verdict.ok
    out["valid"] = bool(ok)
    if not ok:
        raise Inconclusive(out)
    return out


def _certificate(args, g: Graph) -> sse_flow.SpectralCertificate:
    data = _load_json(args.cert)
    flow_data = data.get("flow")
    if "certificate" in data:
        data = data["certificate"]
    if args.flow:
        F = sse_flow.load_flow(args.flow, g.n)
    elif flow_data is not None:
        F = sse_flow.MultiFlow.from_json(flow_data, g.n)
    else:
        raise ValueError("the certificate carries no flow; pass --flow")
    cap = sse_flow.verify_capacity(F, g, tol=args.tol)
    if not cap.ok:
        raise sse_flow.FlowError(f"flow exceeds capacity on edge {cap.worst_edge} by {cap.worst_excess:.3g}")
    # the claimed lambda is re-measured, never trusted
    return sse_flow.verify_spectral(F, int(data["r"]), float(data["d"]), float(data["lambda"]))


def cmd_flow_round(args) -> dict:
    g = _graph(args)
    cert = _certificate(args, g)
    if not cert.valid:
        raise Inconclusive({"certificate": cert.to_json(), "valid": False, "seed": args.seed})
    cut = cut_improve.flow_round(g, cert, args.eps, mode=args.mode, c=args.c)
    return {"cut": _rescore(g, cut, args.tol), "mode": args.mode, "eps": args.eps,
            "certificate": cert.to_json(), "seed": args.seed}


def cmd_brute(args) -> dict:
    g = _graph(args)
    if args.small is not None:
        phi, Phi, sp, ex = oracle.brute_small_set(g, args.small)
        return {"sparsity": phi, "expansion": Phi, "sparsity_set": sp.to_json(),
                "expansion_set": ex.to_json(), "r": args.small, "seed": args.seed}
    if args.balanced is not None:
        res = oracle.brute_balanced(g, args.balanced)
    else:
        res = oracle.brute_sparsest(g)
    return {**res.to_json(), "seed": args.seed}


def cmd_gen_planted(args) -> dict:
    cross = args.cross_edges if args.cross_edges == "complete" else int(args.cross_edges)
    inst = planted.generate(args.n, args.rho, args.inner_degree, cross, seed=args.seed)
    out = {**inst.to_json(), "degree": inst.degree, "phi_planted": inst.phi_planted,
           "inner_expansion": list(inst.inner_expansion), "seed": args.seed}
    if args.check_eps is not None:
        out["hypothesis"] = planted.check_hypothesis(inst, args.check_eps, args.const).to_json()
    return out


# --- bench -------------------------------------------------------------------------------------


def default_suite(seed: int) -> list[tuple[str, Graph]]:
    rng = make_rng(seed, 61)
    suite = [("C8", cycle_graph(8)), ("K6", complete_graph(6)), ("grid3x3", grid_graph(3, 3)),
             ("barbell5", barbell_graph(5))]
    suite += [(f"gnp10_{k}", random_graph(10, 0.4, rng)) for k in range(2)]
    return [(name, normalize_regular(g)) for name, g in suite]


def run_algorithm(name: str, g: Graph, sol, r: int, eps: float, seed: int, beta_pad: float = 3.0,
                  trials: int = 4000, iterations: int = 60):
    """The cut a rounding path returns on g (None when it has no cut to offer)."""
    if name == "gs-round":
        return gs_round.gs_round(g, sol, r, eps, seed=seed).best_cut
    if name == "orth-round":
        return orth_sep.round_or_small_set(g, r, eps, seed=seed, sol=sol, trials=trials).cut
    if name == "genus-round":
        return decomp.genus_round(g, sol, r, eps, beta_pad, seed=seed).cut
    if name == "flow-round":
        cert = sse_flow.construct_spectral_flow(g, r, 1.0, iterations=iterations).certificate
        return cut_improve.flow_round(g, cert, eps)
    raise ValueError(f"unknown algorithm {name!r}")


def cmd_bench(args) -> str:
    if args.graph:
        graphs = [(Path(p).stem, load_graph(p)) for p in args.graph]
        if not args.raw:
            graphs = [(name, normalize_regular(g)) for name, g in graphs]
    else:
        graphs = default_suite(args.seed)
    algos = args.algorithms.split(",")
    for a in algos:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "algorithm", "sparsity", "oracle", "ratio", "seconds"])
    for name, g in graphs:
        opt = oracle.brute_sparsest(g).sparsity
        sol = embed_sdp.solve_sdp(g)
        for a in algos:
            t0 = time.perf_counter()
            cut = run_algorithm(a, g, sol, args.r, args.eps, args.seed)
            dt = time.perf_counter() - t0
            sp = float("nan") if cut is None else cut_quality(g, cut.set).sparsity
            ratio = sp / opt if opt > 0 else (1.0 if sp == 0 else float("inf"))
            w.writerow([name, a, f"{sp:.12g}", f"{opt:.12g}", f"{ratio:.12g}", f"{dt:.4f}"])
    return buf.getvalue()


# --- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sse-cut", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, fn, help_, graph=True):
        c = sub.add_parser(name, help=help_)
        c.set_defaults(fn=fn)
        c.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
        c.add_argument("--out", help="also write the report to this file")
        c.add_argument("--tol", type=float, default=1e-7, help="tolerance for re-verification")
        if graph:
            c.add_argument("--graph", required=True, help="graph JSON {n, edges}")
            c.add_argument("--raw", action="store_true", help="skip the rescaling to degree 1")
        return c

    c = command("embed", cmd_embed, "solve the base vector relaxation")
    c.add_argument("--mu", type=float, help="balance k/n (default: sweep all)")

    for name, fn, help_ in (("gs-round", cmd_gs_round, "column-selection rounding"),
                            ("orth-round", cmd_orth_round, "orthogonal-separator round or small set"),
                            ("genus-round", cmd_genus_round, "padded-decomposition round or small set")):
        c = command(name, fn, help_)
        c.add_argument("--r", type=int, required=True)
        c.add_argument("--eps", type=float, default=0.5)
        c.add_argument("--sol", help="vector solution JSON (default: solve the relaxation)")
        if name == "orth-round":
            c.add_argument("--trials", type=int, default=20_000)
        if name == "genus-round":
            c.add_argument("--beta-pad", type=float, required=True, help="padding parameter to assume")
            c.add_argument("--delta", type=float, help="decomposition scale (default (eps/2) mean ||X_u||^2)")
            c.add_argument("--draws", type=int, default=200)

    c = command("flow-build", cmd_flow_build, "construct a spectral small-set expander flow")
    c.add_argument("--r", type=int, required=True)
    c.add_argument("--d", type=float, default=1.0)
    c.add_argument("--iterations", type=int, default=300)
    c.add_argument("--k-paths", type=int, default=4)
    c.add_argument("--target-lambda", type=float)

    c = command("flow-verify", cmd_flow_verify, "check capacity and flow certificates")
    c.add_argument("--flow", required=True)
    c.add_argument("--spectral", nargs=3, type=float, metavar=("R", "D", "LAMBDA"))
    c.add_argument("--sse", nargs=3, type=float, metavar=("R", "D", "BETA"))
    c.add_argument("--weak-sse", nargs=3, type=float, metavar=("R", "D", "BETA"))

    c = command("flow-round", cmd_flow_round, "eigenspace enumeration plus cut improvement")
    c.add_argument("--cert", required=True, help="certificate JSON, or a flow-build report")
    c.add_argument("--flow", help="flow JSON when the certificate does not carry one")
    c.add_argument("--eps", type=float, default=0.5)
    c.add_argument("--mode", choices=("sparsest", "expansion", "balanced"), default="sparsest")
    c.add_argument("--c", type=float, help="balance for --mode balanced")

    c = command("brute", cmd_brute, "exact oracle by enumeration (n <= 24)")
    c.add_argument("--small", type=float, metavar="R", help="restrict to sets of size <= n/R")
    c.add_argument("--balanced", type=float, metavar="C", help="restrict to cn <= |S| <= n/2")

    c = command("gen-planted", cmd_gen_planted, "generate a planted instance", graph=False)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--rho", type=float, required=True)
    c.add_argument("--inner-degree", type=int, required=True)
    c.add_argument("--cross-edges", required=True, help='a count or "complete"')
    c.add_argument("--check-eps", type=float, help="also run the hypothesis check at this eps")
    c.add_argument("--const", type=float, default=1.0)

    c = command("bench", cmd_bench, "compare rounding paths against the oracle (CSV)", graph=False)
    c.add_argument("--graph", action="append", help="graph JSON (repeatable; default: built-in suite)")
    c.add_argument("--raw", action="store_true", help="skip the rescaling to degree 1")
    c.add_argument("--algorithms", default=",".join(ALGORITHMS))
    c.add_argument("--r", type=int, default=2)
    c.add_argument("--eps", type=float, default=0.5)
    return p


def _emit(text: str, out: str | None) -> None:
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.fn(args)
        code = EXIT_OK
    except Inconclusive as exc:
        result, code = exc.report, EXIT_INCONCLUSIVE
    except (GraphError, ValueError, OSError, KeyError, embed_sdp.SolverError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = result if isinstance(result, str) else json.dumps(result, sort_keys=True, indent=2) + "\n"
    _emit(text, args.out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
