"""Command line front end.

Exit codes: 0 success / uniqueness holds, 1 usage or schema error,
2 inconclusive uniqueness test, 3 Newton non-convergence, 4 unsupported
Dirichlet regime.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dirichlet, elastic, inversion
from .dirichlet import RegimeTag, classify_regime
from .fileio import (
    NetworkModel,
    SchemaError,
    complex_to_json,
    load_matrix,
    load_network,
    parse_complex,
    save_matrix,
)
from .graph import FieldError, GraphError, vec
from .operators import eigen_decompose, laplacian_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2
EXIT_NONCONVERGED = 3
EXIT_UNSUPPORTED = 4

PROBLEMS = ("conductivity", "schrodinger", "eigenvalues", "springs", "masses")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage errors, not argparse's 2
        raise UsageError(message)


def _build_spec(model: NetworkModel, problem: str):
    """ProblemSpec plus the parameter vector encoded in the network file."""
    g = model.graph
    if problem == "conductivity":
        sigma = model.conductivity()
        spec = inversion.make_spec_conductivity(g, model.d)
        p = np.concatenate([vec(b) for b in sigma.values])
    elif problem == "schrodinger":
        if model.sigma is None:
            raise SchemaError("schrodinger problem needs explicit sigma blocks")
        spec = inversion.make_spec_schrodinger(g, model.sigma)
        if model.q is not None:
            p = np.concatenate([vec(b) for b in model.q.values])
        else:
            p = np.zeros(spec.m, dtype=complex)
    elif problem == "eigenvalues":
        sigma = model.conductivity()
        eig = eigen_decompose(sigma)
        spec = elastic.make_spec_eigenvalues(g, eig)
        p = np.concatenate(eig.lam)
    elif problem == "springs":
        if model.network is None:
            raise SchemaError("springs problem needs spring-network edges (k + positions)")
        spec = elastic.make_spec_static_springs(model.network)
        p = model.network.k.astype(float)
    elif problem == "masses":
        if model.network is None:
            raise SchemaError("masses problem needs spring-network edges (k + positions)")
        net = model.network
        spec = elastic.make_spec_masses_known_springs(net)
        w = net.omega
        p = -w * w * net.mass + 1j * w * net.c_v
    else:
        raise SchemaError(f"unknown problem {problem!r}")
    return spec, p


def _load_boundary_data(path: str, model: NetworkModel) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "g" not in doc:
        raise SchemaError("boundary condition file needs a 'g' key")
    rows = doc["g"]
    nb = model.graph.num_boundary
    if not isinstance(rows, list) or len(rows) != nb:
        raise SchemaError(f"'g' must list {nb} boundary displacement vectors")
    out = np.empty((nb, model.d), dtype=complex)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != model.d:
            raise SchemaError(f"boundary vector {r} must have {model.d} components")
        out[r] = [parse_complex(x) for x in row]
    return out.reshape(-1)


def _write_json(path: str | None, doc: dict) -> None:
    text = json.dumps(doc, indent=1)
    if path:
        Path(path).write_text(text)
    else:
        print(text)


def cmd_forward(args) -> int:
    model = load_network(args.network)
    gvec = _load_boundary_data(args.boundary, model)
    g = model.graph
    sigma = model.conductivity()
    regime = classify_regime(g, sigma, model.q)
    if regime.tag is RegimeTag.UNSUPPORTED:
        print(f"unsupported regime: {regime.diagnostics}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    doc: dict = {"regime": regime.tag.value}
    if regime.tag.is_pd:
        u = dirichlet.solve_dirichlet_pd(g, sigma, model.q, gvec)
    else:
        u = dirichlet.solve_dirichlet_psd(g, sigma, gvec)
        doc["floppy_dim"] = dirichlet.floppy_basis(g, sigma).dim
    op = dirichlet.assemble_schrodinger(g, sigma, model.q) if model.q is not None \
        else dirichlet.assemble_laplacian(g, sigma)
    resid = np.linalg.norm((op.matrix @ u.canonical(g))[model.d * g.num_boundary:])
    doc["residual"] = float(resid)
    doc["u"] = [[complex_to_json(z) for z in u.values[v]] for v in range(g.num_vertices)]
    doc["vertex_ids"] = list(model.vertex_ids)
    _write_json(args.output, doc)
    return EXIT_OK


def cmd_dtn(args) -> int:
    model = load_network(args.network)
    g = model.graph
    sigma = model.conductivity()
    regime = classify_regime(g, sigma, model.q)
    if regime.tag is RegimeTag.UNSUPPORTED:
        print(f"unsupported regime: {regime.diagnostics}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    if regime.tag.is_pd:
        dtn = dirichlet.dtn_pd(g, sigma, model.q)
    else:
        dtn = dirichlet.dtn_psd(g, sigma)
    m = dtn.matrix
    sym = float(np.abs(m - m.T).max())
    save_matrix(m, args.output, extra={"provenance": dtn.provenance,
                                       "symmetry_residual": sym})
    print(f"provenance: {dtn.provenance}")
    print(f"symmetry residual: {sym:.3e}")
    return EXIT_OK


def cmd_uniqueness(args) -> int:
    model = load_network(args.network)
    spec, p = _build_spec(model, args.problem)
    verdict = inversion.uniqueness_test(spec, p, args.epsilon)
    print(f"sigma_max: {verdict.sigma_max:.12e}")
    print(f"sigma_min: {verdict.sigma_min:.12e}")
    print(f"verdict: {verdict.verdict}")
    return EXIT_OK if verdict.holds else EXIT_INCONCLUSIVE


def _parse_p0(arg: str | None, spec, default: np.ndarray) -> np.ndarray:
    if arg is None:
        return default
    path = Path(arg)
    if path.exists():
        doc = json.loads(path.read_text())
        return np.array([parse_complex(x) for x in doc])
    value = parse_complex(json.loads(arg)) if arg.startswith("[") else complex(float(arg))
    fill = np.full(spec.m, value, dtype=complex)
    return fill.real if spec.is_real else fill


def cmd_invert(args) -> int:
    model = load_network(args.network)
    spec, p_file = _build_spec(model, args.problem)
    target = load_matrix(args.target)
    if target.shape != (spec.n, spec.n):
        raise SchemaError(f"target must be {spec.n} x {spec.n}")
    p0 = _parse_p0(args.p0, spec, p_file)
    try:
        p, trace = inversion.newton_invert(spec, target, p0, max_iter=args.max_iters)
    except inversion.InadmissibleParameterError as exc:
        raise SchemaError(str(exc)) from exc
    doc = {
        "problem": args.problem,
        "parameters": [complex_to_json(z) for z in np.asarray(p, dtype=complex)],
        "residuals": [float(r) for r in trace.residuals],
        "step_lengths": [float(t) for t in trace.step_lengths],
        "reason": trace.reason,
    }
    _write_json(args.output, doc)
    print(f"terminated: {trace.reason}, residual {trace.residuals[-1]:.3e}",
          file=sys.stderr)
    converged = trace.reason in ("residual", "step")
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_floppy(args) -> int:
    model = load_network(args.network)
    g = model.graph
    sigma = model.conductivity()
    regime = classify_regime(g, sigma, model.q)
    if regime.tag is RegimeTag.UNSUPPORTED:
        print(f"unsupported regime: {regime.diagnostics}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    if regime.tag.is_pd:
        print("floppy dimension: 0")
        return EXIT_OK
    basis = dirichlet.floppy_basis(g, sigma)
    print(f"floppy dimension: {basis.dim}")
    L = laplacian_matrix(g, sigma.values)
    nb = model.d * g.num_boundary
    worst = 0.0
    for c in range(basis.dim):
        z = basis.modes[:, c]
        worst = max(worst, float(np.abs((L @ z)[:nb]).max(initial=0.0)))
        print(f"mode {c}: {[round(x, 12) for x in z.tolist()]}")
    print(f"max boundary-flux violation: {worst:.3e}")
    return EXIT_OK


def cmd_scan(args) -> int:
    model = load_network(args.network)
    spec, p = _build_spec(model, args.problem)
    rng = np.random.default_rng(args.seed)
    dp = rng.standard_normal(spec.m)
    if not spec.is_real:
        dp = dp + 1j * rng.standard_normal(spec.m)
    scan = inversion.line_rank_scan(spec, p, dp, num_samples=args.samples,
                                   epsilon=args.epsilon, rng=rng)
    print(f"samples: {len(scan.samples)}")
    print(f"near-singular fraction: {scan.near_singular_fraction:.6f}")
    return EXIT_OK


def make_parser() -> _Parser:
    parser = _Parser(prog="netinv",
                     description="forward and inverse problems on block-weighted networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="solve a Dirichlet problem")
    p.add_argument("network")
    p.add_argument("boundary")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("dtn", help="export the Dirichlet-to-Neumann map")
    p.add_argument("network")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_dtn)

    p = sub.add_parser("uniqueness", help="uniqueness-a.e. singular value test")
    p.add_argument("network")
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.set_defaults(func=cmd_uniqueness)

    p = sub.add_parser("invert", help="Newton inversion against a target map")
    p.add_argument("network")
    p.add_argument("target")
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--p0", default=None,
                   help="initial guess: scalar, [re,im], or JSON file of values")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("floppy", help="floppy mode report")
    p.add_argument("network")
    p.set_defaults(func=cmd_floppy)

    p = sub.add_parser("scan", help="Jacobian conditioning along a random line")
    p.add_argument("network")
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_scan)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, GraphError, FieldError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dirichlet.RegimeError as exc:
        print(f"unsupported regime: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
