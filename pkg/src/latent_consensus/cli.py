"""Command-line interface.

Commands: ``laplacian``, ``eigenprojection``, ``consensus``, ``verify``,
``sweep``.  Graphs are read from JSON files; all output is deterministic for
fixed inputs and seed.  Exit code 0 means success and, for ``verify``, that
every residual is under tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, forests, orthoproj, protocols, regularize, spectra
from .digraph import (
    GraphFormatError,
    NotLaplacianError,
    WeightedDigraph,
    from_dependency_matrix,
    has_spanning_in_tree,
    laplacian,
    parse_digraph,
    random_digraph,
    validate_laplacian,
)
from .regularize import (
    BackgroundAugmentation,
    DiscreteRegularization,
    HubAugmentation,
    RegularizationSpec,
)

FOREST_CAP_ENV = "LC_TOOLKIT_FOREST_CAP"
METHOD_AGREEMENT_TOL = 1e-6


def _forest_cap() -> int:
    raw = os.environ.get(FOREST_CAP_ENV)
    if raw is None:
        return forests.DEFAULT_ENUMERATION_CAP
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{FOREST_CAP_ENV} must be an integer, got {raw!r}") from exc


def _load_graph(path: str) -> WeightedDigraph:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValueError(f"cannot read graph file {path!r}: {exc}") from exc
    return parse_digraph(text)


def _load_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read matrix file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed matrix JSON in {path!r}: {exc}") from exc
    return np.asarray(data, dtype=float)


def _parse_vector(text: str, label: str) -> np.ndarray:
    try:
        return np.array([float(part) for part in text.split(",")])
    except ValueError as exc:
        raise ValueError(f"{label} must be comma-separated numbers, got {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _matrix_text(m: np.ndarray) -> str:
    return "\n".join(" ".join(f"{x: .10f}" for x in row) for row in np.atleast_2d(m))


def _matrix_json(m: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in np.atleast_2d(m)]


def _pooling_matrix(L: np.ndarray) -> np.ndarray:
    """One-step pooling matrix I - L; valid only when diag(L) <= 1."""
    if np.diag(L).max() > 1.0:
        raise ValueError(
            "graph cannot back a discrete method: I - L would have a negative "
            "diagonal (some total dependence exceeds 1)"
        )
    return np.eye(L.shape[0]) - L


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_laplacian(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    L = laplacian(g)
    if args.format == "json":
        _emit(json.dumps({"n": g.n, "matrix": _matrix_json(L)}), args.out)
    else:
        _emit(_matrix_text(L), args.out)
    return 0


def _eigenprojection_by_method(
    g: WeightedDigraph, L: np.ndarray, method: str
) -> tuple[np.ndarray, dict[str, float]]:
    if method == "algebraic":
        proj = spectra.eigenprojection(L)
        return proj.matrix, dict(proj.residuals)
    if method == "resolvent":
        proj = spectra.eigenprojection_resolvent(L)
        return proj.matrix, dict(proj.residuals)
    if method == "forest":
        matrix = forests.max_forest_matrix(g, cap=_forest_cap())
        return matrix, {"idempotency": float(np.abs(matrix @ matrix - matrix).max())}
    raise ValueError(f"unknown eigenprojection method {method!r}")


def _cmd_eigenprojection(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    L = laplacian(g)
    skipped = []
    if args.method == "all":
        methods = ["algebraic", "resolvent"]
        # explicit --method forest still refuses above the cap
        if g.n <= _forest_cap():
            methods.append("forest")
        else:
            skipped.append(f"forest (n = {g.n} exceeds enumeration cap {_forest_cap()})")
    else:
        methods = [args.method]
    results = {}
    for method in methods:
        matrix, residuals = _eigenprojection_by_method(g, L, method)
        results[method] = (matrix, residuals)
    deviation = 0.0
    names = list(results)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            deviation = max(
                deviation, float(np.abs(results[names[a]][0] - results[names[b]][0]).max())
            )
    tolerance = METHOD_AGREEMENT_TOL * args.tol
    if args.format == "json":
        payload = {
            "methods": {
                name: {"matrix": _matrix_json(matrix), "residuals": residuals}
                for name, (matrix, residuals) in results.items()
            },
            "max_pairwise_deviation": deviation,
            "tolerance": tolerance,
            "skipped": skipped,
        }
        _emit(json.dumps(payload), args.out)
    else:
        lines = []
        for name, (matrix, _) in results.items():
            lines.append(f"# method: {name}")
            lines.append(_matrix_text(matrix))
        for note in skipped:
            lines.append(f"# skipped: {note}")
        if len(results) > 1:
            lines.append(f"# max pairwise deviation: {deviation:.3e} (tolerance {tolerance:.3e})")
        _emit("\n".join(lines), args.out)
    return 0 if deviation <= tolerance else 1


def _consensus_report(
    g: WeightedDigraph, raw_spec: dict, x0: np.ndarray, simulate: bool
) -> protocols.ConsensusReport:
    L = laplacian(g)
    method = raw_spec.get("method")
    if method == "orthoproj":
        leftover = {k: v for k, v in raw_spec.items() if k != "method" and v is not None}
        if leftover:
            raise ValueError(f"orthoproj takes no parameters, got {sorted(leftover)}")
        return orthoproj.orthoproj_consensus(L, x0)
    spec = regularize.parse_regularization_spec(json.dumps(raw_spec))
    system = _pooling_matrix(L) if spec.method in regularize.DISCRETE_METHODS else L
    return protocols.latent_consensus(system, spec, x0, simulate=simulate)


def _cmd_consensus(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            raw_spec = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read spec file {args.spec!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed spec JSON in {args.spec!r}: {exc}") from exc
    if not isinstance(raw_spec, dict):
        raise ValueError("spec JSON must be an object")
    x0 = _parse_vector(args.x0, "--x0")
    report = _consensus_report(g, raw_spec, x0, args.simulate)
    if args.trajectory_out is not None:
        _write_trajectory(g, raw_spec, x0, args.trajectory_out)
    if args.format == "json":
        _emit(report.to_json(), args.out)
    else:
        lines = [
            f"method:  {report.method}",
            f"weights: {' '.join(format(w, '.10f') for w in report.weights)}",
            f"value:   {'n/a' if report.value is None else format(report.value, '.10f')}",
            f"delta:   {'limit' if report.delta_used is None else report.delta_used}",
        ]
        for name in sorted(report.diagnostics):
            lines.append(f"  {name}: {report.diagnostics[name]:.6e}")
        _emit("\n".join(lines), args.out)
    return 0


def _write_trajectory(g: WeightedDigraph, raw_spec: dict, x0: np.ndarray, path: str) -> None:
    """Simulate the system behind the chosen method and dump the CSV."""
    L = laplacian(g)
    n = L.shape[0]
    method = raw_spec.get("method")
    if method == "orthoproj":
        # Correct the initial state, then run the unmodified dynamics.
        jbar = spectra.eigenprojection(L).matrix
        s = orthoproj.orthogonal_projector(orthoproj.consensus_subspace(jbar))
        corrected = s @ x0
        _, settle = protocols.simulate_to_limit(L, corrected)
        times = _log_times(settle)
        trajectory = protocols.simulate_continuous(L, corrected, times)
    else:
        spec = regularize.parse_regularization_spec(json.dumps(raw_spec))
        delta = spec.delta if spec.delta is not None else 1e-3
        if spec.method in regularize.CONTINUOUS_METHODS:
            uniform = np.full(n, 1.0 / n)
            if spec.method == "hub-symmetric":
                assembled = regularize.hub_augment(
                    HubAugmentation(L, delta, delta * np.ones(n))
                )
            elif spec.method == "hub-subordinate":
                vtilde = spec.vtilde if spec.vtilde is not None else uniform
                assembled = regularize.hub_augment(
                    HubAugmentation(L, delta, math.sqrt(delta) * vtilde)
                )
            else:
                v = spec.v if spec.v is not None else uniform
                assembled = regularize.background_laplacian(
                    BackgroundAugmentation(L, delta, v)
                )
            _, settle = protocols.simulate_to_limit(assembled, x0)
            trajectory = protocols.simulate_continuous(assembled, x0, _log_times(settle))
        else:
            P = _pooling_matrix(L)
            v = spec.v if spec.v is not None else np.full(n, 1.0 / n)
            d = DiscreteRegularization(P, delta, v)
            assembled = (
                regularize.degroot_hub_matrix(d)
                if spec.method == "degroot-hub"
                else regularize.pagerank_matrix(d)
            )
            trajectory = protocols.simulate_discrete(assembled, x0, k_max=100)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trajectory.to_csv())


def _log_times(settle: float, points: int = 25) -> np.ndarray:
    times = [0.0] + [settle * 2.0 ** (-k) for k in range(points - 1, -1, -1)]
    return np.asarray(times)


def _cmd_sweep(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    L = laplacian(g)
    x0 = _parse_vector(args.x0, "--x0")
    deltas = [float(d) for d in args.deltas.split(",")] if args.deltas else [
        10.0**-k for k in range(1, 9)
    ]
    v = _parse_vector(args.v, "--v") if args.v else None
    vtilde = _parse_vector(args.vtilde, "--vtilde") if args.vtilde else None
    system = _pooling_matrix(L) if args.method in regularize.DISCRETE_METHODS else L
    rows = []
    width = None
    for delta in deltas:
        spec = RegularizationSpec(method=args.method, delta=delta, v=v, vtilde=vtilde)
        report = protocols.latent_consensus(system, spec, x0)
        width = report.weights.size
        rows.append((delta, report.weights, report.value))
    header = "delta," + ",".join(f"w{i + 1}" for i in range(width)) + ",value"
    lines = [header]
    for delta, weights, value in rows:
        lines.append(
            ",".join(format(x, ".17g") for x in (delta, *weights, value))
        )
    _emit("\n".join(lines), args.out)
    return 0


# ---------------------------------------------------------------------------
# verify: the identity battery
# ---------------------------------------------------------------------------


def _verify_checks(g: WeightedDigraph, tol_mult: float) -> list[dict]:
    L = laplacian(g)
    n = g.n
    checks: list[dict] = []

    def add(name: str, residual: float, tolerance: float) -> None:
        checks.append(
            {
                "name": name,
                "residual": float(residual),
                "tolerance": float(tolerance * tol_mult),
                "passed": bool(residual <= tolerance * tol_mult),
            }
        )

    scale = max(1.0, float(np.abs(L).max()))
    row_residual = float(np.abs(L.sum(axis=1)).max())
    add("laplacian-class", row_residual, 1e-12 * n * scale)

    proj = spectra.eigenprojection(L)
    jbar = proj.matrix
    add("projection-idempotency", float(np.abs(jbar @ jbar - jbar).max()), 1e-10)
    add(
        "projection-commutation",
        max(float(np.abs(L @ jbar).max()), float(np.abs(jbar @ L).max())) / scale,
        1e-9,
    )

    cap = _forest_cap()
    if n <= cap:
        forest = forests.max_forest_matrix(g, cap=cap)
        add("forest-vs-algebraic", float(np.abs(forest - jbar).max()), 1e-9)

    resolvent = spectra.eigenprojection_resolvent(L)
    resolvent_gap = float(np.abs(resolvent.matrix - jbar).max())
    if resolvent.converged:
        add("resolvent-vs-algebraic", resolvent_gap, 1e-6)
    else:
        # A near-zero spectral gap exhausts the schedule first; the op flags
        # it and its last successive difference bounds the remaining gap.
        add(
            "resolvent-gap-within-flagged-bound",
            resolvent_gap,
            10.0 * resolvent.residuals["last_difference"],
        )

    settled, _ = spectra.laplacian_exp_limit(L)
    add("exponential-limit", float(np.abs(settled - jbar).max()), 1e-8)

    uniform = np.full(n, 1.0 / n)
    ones = np.ones(n)

    hub = HubAugmentation(L, 0.3, ones)
    assembled = regularize.hub_augment(hub)
    add(
        "hub-closed-form",
        float(np.abs(regularize.hub_eigenprojection(hub) - spectra.eigenprojection(assembled).matrix).max()),
        1e-8,
    )

    background = BackgroundAugmentation(L, 0.5, uniform)
    assembled_bg = regularize.background_laplacian(background)
    add(
        "background-closed-form",
        float(
            np.abs(
                regularize.background_eigenprojection(background)
                - spectra.eigenprojection(assembled_bg).matrix
            ).max()
        ),
        1e-8,
    )

    # Discrete legs run on P = I - L/c, which shares the eigenprojection of L.
    c = max(1.0, float(np.diag(L).max()))
    P = np.eye(n) - L / c
    d = DiscreteRegularization(P, 0.4, uniform)
    q = regularize.degroot_hub_matrix(d)
    add(
        "pooling-hub-closed-form",
        float(
            np.abs(
                regularize.degroot_hub_eigenprojection(d)
                - spectra.eigenprojection(np.eye(n + 1) - q).matrix
            ).max()
        ),
        1e-8,
    )
    add(
        "pagerank-closed-form",
        float(
            np.abs(
                regularize.pagerank_power_limit(d)
                - protocols.power_limit(regularize.pagerank_matrix(d))
            ).max()
        ),
        1e-8,
    )

    hub_pair_a = np.zeros((n + 1, n + 1))
    hub_pair_a[:n, :n] = L
    hub_pair_a[n, :n] = -ones
    hub_pair_a[n, n] = float(n)
    hub_pair_c = np.zeros((n + 1, n + 1))
    hub_pair_c[:n, :n] = np.eye(n)
    hub_pair_c[:n, n] = -1.0
    bg_pair_c = np.eye(n) - np.outer(ones, uniform)

    add(
        "pair-identity-hub",
        regularize.laplacian_pair_identity_residual(hub_pair_a, hub_pair_c, 0.3),
        1e-8,
    )
    add(
        "pair-identity-background",
        regularize.laplacian_pair_identity_residual(L, bg_pair_c, 0.7),
        1e-8,
    )

    exp_scale = max(1.0, float(np.abs(hub_pair_a).max()))
    add(
        "exp-identity-hub",
        spectra.exp_regularization_identity_residual(hub_pair_a, hub_pair_c, 0.3, 2.0),
        1e-9 * exp_scale,
    )
    add(
        "exp-identity-background",
        spectra.exp_regularization_identity_residual(L, bg_pair_c, 0.5, 1.0),
        1e-9 * max(1.0, float(np.abs(L).max())),
    )
    add(
        "power-identity-hub",
        spectra.power_monomial_identity_residual(hub_pair_a, hub_pair_c, 0.2, 4),
        1e-9 * exp_scale**4,
    )
    add(
        "power-identity-background",
        spectra.power_monomial_identity_residual(L, bg_pair_c, 1.0, 3),
        1e-9 * max(1.0, float(np.abs(L).max()) ** 3),
    )

    sub = regularize.subordinate_hub_limit(L, uniform)[0][:n]
    bg_limit = regularize.background_limit(L, uniform)[0]
    add("subordinate-vs-background-limit", float(np.abs(sub - bg_limit).max()), 1e-12)

    sym = regularize.hub_eigenprojection(HubAugmentation(L, 1e-2, 1e-2 * ones))
    add("hub-weight-constancy", abs(sym[0][-1] - 1.0 / (n + 1)), 0.0)

    report = orthoproj.orthoproj_consensus(L, np.arange(1.0, n + 1.0))
    s_matrix = orthoproj.orthogonal_projector(
        orthoproj.consensus_subspace(jbar)
    )
    ortho_residual = max(
        float(np.abs(s_matrix @ s_matrix - s_matrix).max()),
        report.diagnostics["row_agreement"],
        float(abs(report.weights.sum() - 1.0)),
    )
    add("orthoproj-consistency", ortho_residual, 1e-10)

    x0 = np.arange(1.0, n + 1.0)
    settled_state, _ = protocols.simulate_to_limit(L, x0)
    add(
        "trajectory-consistency",
        float(np.abs(settled_state - protocols.continuous_limit(L, x0)).max()),
        1e-6,
    )

    if has_spanning_in_tree(g):
        common_row = jbar.mean(axis=0)
        collapse = max(
            float(np.abs(sub - common_row).max()),
            float(np.abs(bg_limit - common_row).max()),
            float(np.abs(report.weights - common_row).max()),
        )
        add("in-tree-collapse", collapse, 1e-9)

    return checks


def _cmd_verify(args: argparse.Namespace) -> int:
    sources = [args.graph is not None, args.random is not None, args.matrix_file is not None]
    if sum(sources) != 1:
        raise ValueError("verify needs exactly one of: a graph file, --random, --matrix-file")
    if args.graph is not None:
        g = _load_graph(args.graph)
    elif args.random is not None:
        n, seed = args.random
        g = random_digraph(int(n), int(seed))
    else:
        m = _load_matrix(args.matrix_file)
        try:
            L = validate_laplacian(m)
        except NotLaplacianError as exc:
            failure = {
                "name": "laplacian-class",
                "residual": float("inf"),
                "tolerance": 0.0,
                "passed": False,
                "detail": str(exc),
            }
            _emit_verify([failure], args)
            return 1
        g = from_dependency_matrix(-L)

    checks = _verify_checks(g, args.tol)
    _emit_verify(checks, args)
    return 0 if all(c["passed"] for c in checks) else 1


def _emit_verify(checks: list[dict], args: argparse.Namespace) -> None:
    passed = sum(1 for c in checks if c["passed"])
    if args.format == "json":
        _emit(json.dumps({"checks": checks, "passed": passed == len(checks)}), args.out)
        return
    lines = [f"{'CHECK':<34} {'RESIDUAL':>12} {'TOLERANCE':>12}  RESULT"]
    for c in checks:
        lines.append(
            f"{c['name']:<34} {c['residual']:>12.3e} {c['tolerance']:>12.3e}  "
            f"{'pass' if c['passed'] else 'FAIL'}"
        )
        if "detail" in c:
            lines.append(f"    {c['detail']}")
    lines.append(f"verify: {passed}/{len(checks)} checks passed")
    _emit("\n".join(lines), args.out)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument(
        "--tol", type=float, default=1.0, help="multiplier applied to all tolerances"
    )
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")

    parser = argparse.ArgumentParser(
        prog="lc-toolkit",
        description="Latent-consensus toolkit for weighted dependency digraphs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("laplacian", parents=[common], help="print the Laplacian of a graph")
    p.add_argument("graph")
    p.set_defaults(func=_cmd_laplacian)

    p = sub.add_parser(
        "eigenprojection", parents=[common], help="eigenprojection of the graph Laplacian"
    )
    p.add_argument("graph")
    p.add_argument(
        "--method",
        choices=("algebraic", "resolvent", "forest", "all"),
        default="algebraic",
    )
    p.set_defaults(func=_cmd_eigenprojection)

    p = sub.add_parser("consensus", parents=[common], help="consensus report for one method")
    p.add_argument("graph")
    p.add_argument("--spec", required=True, help="regularization spec JSON file")
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--simulate", action="store_true", help="add trajectory residual diagnostic")
    p.add_argument("--trajectory-out", default=None, help="write the simulated trajectory CSV")
    p.set_defaults(func=_cmd_consensus)

    p = sub.add_parser("verify", parents=[common], help="run the full identity battery")
    p.add_argument("graph", nargs="?", default=None)
    p.add_argument(
        "--random", nargs=2, metavar=("N", "SEED"), default=None, help="seeded random graph"
    )
    p.add_argument("--matrix-file", default=None, help="JSON matrix to validate and verify")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="delta sweep of consensus weights (CSV)")
    p.add_argument("graph")
    p.add_argument("--method", choices=regularize.METHODS, required=True)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--deltas", default=None, help="comma-separated deltas (default 1e-1..1e-8)")
    p.add_argument("--v", default=None, help="comma-separated influence distribution")
    p.add_argument("--vtilde", default=None, help="comma-separated limit distribution")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ValueError,
        GraphFormatError,
        NotLaplacianError,
        forests.EnumerationCapError,
        spectra.NumericalDegeneracyError,
        RuntimeError,
        OverflowError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
