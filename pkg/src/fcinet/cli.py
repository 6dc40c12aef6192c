"""Command-line surface: fcix, egc, emh, netstats, synth.

Exit codes: 0 success, 2 usage or input validation failure, 3 numerical
non-convergence.  Every artifact embeds {tool version, resolved config,
seed} so reruns with identical configuration are byte-identical; BLAS
thread pools are pinned to one thread at process start (before numpy
loads) so reductions are deterministic, with parallelism provided by the
task-level ``--threads`` flag instead.
"""

import argparse
import json
import os
import sys

_BLAS_VARS = (
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "OMP_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _pin_blas_threads():
    for var in _BLAS_VARS:
        os.environ[var] = "1"


def _meta(args, command):
    from . import __version__
    from ._kernels import active_backend

    # threads never changes results, so it stays out of the config echo
    skip = {"func", "threads"}
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        config[key] = value
    return {
        "tool": "fcinet",
        "version": __version__,
        "backend": active_backend(),
        "command": command,
        "config": config,
    }


def _meta_line(meta):
    return "fcinet-meta: " + json.dumps(meta, sort_keys=True)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def _write_labelled_matrix(path, labels, matrix, metadata):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {metadata}\n")
        fh.write(",".join(["node", *labels]) + "\n")
        for pos, label in enumerate(labels):
            cells = ["%.17g" % v for v in matrix[pos]]
            fh.write(",".join([label, *cells]) + "\n")


def _load_table(args):
    from .panel import first_difference, load_series_table, log_transform

    table = load_series_table(args.series)
    if getattr(args, "log", False):
        table = log_transform(table)
    if getattr(args, "diff", False):
        table = first_difference(table)
    return table


def _resolve_spec(args, table):
    from .varmodel import VarSpec, select_lag

    base = VarSpec(
        p=1,
        include_instantaneous=not args.no_instantaneous,
        include_intercept=not args.no_intercept,
    )
    if args.lags == "auto":
        p = select_lag(table, args.max_lags, base)
    else:
        p = int(args.lags)
    return VarSpec(p=p,
                   include_instantaneous=base.include_instantaneous,
                   include_intercept=base.include_intercept)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fcix(args):
    import numpy as np

    from .errors import InputError
    from .fcix import fcix_pipeline
    from .panel import SeriesTable, load_price_panel, write_series_table

    if args.window is not None and args.factors is not None:
        raise InputError("--factors is not available in windowed mode")
    panel = load_price_panel(args.prices)
    series, factors = fcix_pipeline(panel, window=args.window)
    meta = _meta(args, "fcix")
    out = SeriesTable(
        names=("fcix", "lambda_max"),
        timestamps=series.timestamps,
        values=np.vstack([series.values, series.lambda_max]),
    )
    write_series_table(out, args.out, metadata=_meta_line(meta))
    if args.factors is not None:
        doc = {
            "x": factors.x.tolist(),
            "y": factors.y.tolist(),
            "z": factors.z.tolist(),
            "relative_residual": factors.relative_residual,
            "iterations": factors.iterations,
            "converged": factors.converged,
            "meta": meta,
        }
        _write_text(args.factors, json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_egc(args):
    from .egc import (KIND_INSTANTANEOUS, KIND_LAGGED, assemble_network,
                      all_egc_results, egc_heatmaps, network_to_json)

    table = _load_table(args)
    spec = _resolve_spec(args, table)
    results = all_egc_results(table, spec, args.bootstrap, args.seed,
                              scheme=args.scheme, threads=args.threads)
    net = assemble_network(results, table.names, args.alpha)
    meta = _meta(args, "egc")
    meta["resolved_lags"] = spec.p
    _write_text(args.out, network_to_json(net, meta=meta))
    if args.coeffs:
        _write_text(args.coeffs,
                    json.dumps(_coefficient_dump(table, spec, meta),
                               indent=2, sort_keys=True))
    if args.heatmaps:
        kinds = [KIND_LAGGED]
        if spec.include_instantaneous:
            kinds.append(KIND_INSTANTANEOUS)
        for kind in kinds:
            measures, probs = egc_heatmaps(results, kind, nodes=table.names)
            _write_labelled_matrix(f"{args.heatmaps}_{kind}_measure.csv",
                                   table.names, measures, _meta_line(meta))
            _write_labelled_matrix(f"{args.heatmaps}_{kind}_prob.csv",
                                   table.names, probs, _meta_line(meta))
    return 0


def _coefficient_dump(table, spec, meta):
    """Per-equation unrestricted OLS coefficients for diagnostics."""
    from .varmodel import fit_equation

    equations = []
    for target in range(table.n_series):
        fit = fit_equation(table, target, spec)
        coeffs = [
            {"variable": "const" if reg.variable == -1
             else table.names[reg.variable],
             "lag": reg.lag, "value": float(val)}
            for reg, val in zip(fit.regressors, fit.coefficients)
        ]
        equations.append({
            "target": table.names[target],
            "coefficients": coeffs,
            "residual_variance": fit.residual_variance,
            "t_eff": fit.t_eff,
        })
    return {"equations": equations, "meta": meta}


def _load_pvalues_file(path, n_boot):
    from .errors import InputError

    labels, p_values = [], []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [cell.strip() for cell in line.split(",")]
            if lineno == 1 and parts[-1].lower() in ("p", "p_value", "pvalue"):
                continue
            if len(parts) == 1:
                label, cell = f"H{len(p_values) + 1}", parts[0]
            elif len(parts) == 2:
                label, cell = parts
            else:
                raise InputError(f"{path}:{lineno}: expected 'label,p' rows")
            try:
                p = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}:{lineno}: unparseable p-value {cell!r}"
                ) from None
            if p == 0.0:
                # printed zeros sit below bootstrap resolution
                p = 1.0 / (n_boot + 1)
            labels.append(label)
            p_values.append(p)
    if not p_values:
        raise InputError(f"{path}: no p-values found")
    return labels, p_values


def cmd_emh(args):
    from .errors import InputError
    from .mht import (METHOD_BONFERRONI, bonferroni_joint, emh_test,
                      fisher_joint)

    meta = _meta(args, "emh")
    if args.pvalues_file:
        labels, p_values = _load_pvalues_file(args.pvalues_file, args.bootstrap)
        combine = (bonferroni_joint if args.method == METHOD_BONFERRONI
                   else fisher_joint)
        report = combine(p_values, args.alpha, labels=labels)
    else:
        if not args.series or not args.target or not args.news:
            raise InputError(
                "--series, --target and --news are required unless "
                "--pvalues-file is given"
            )
        if args.seed is None:
            raise InputError("--seed is required for the bootstrap test")
        table = _load_table(args)
        spec = _resolve_spec(args, table)
        news = [name.strip() for name in args.news.split(",") if name.strip()]
        report = emh_test(table, args.target, news, spec, args.alpha,
                          args.bootstrap, args.seed, method=args.method,
                          scheme=args.scheme, threads=args.threads)
        meta["resolved_lags"] = spec.p
    print(report.summary())
    if args.out:
        _write_text(args.out, report.to_json(meta=meta))
    return 0


def cmd_netstats(args):
    from .egc import network_from_json
    from .errors import InputError
    from .netstats import (from_causal_network, global_stats_json, node_stats,
                           to_dot, write_node_stats_csv)

    try:
        with open(args.network, "r", encoding="utf-8") as fh:
            net = network_from_json(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {args.network}: {exc}") from None
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in ("lagged", "instantaneous"):
            raise InputError(f"unknown edge kind {kind!r}")
    graph = from_causal_network(net, kinds=kinds)
    meta = _meta(args, "netstats")
    write_node_stats_csv(node_stats(graph), args.out, metadata=_meta_line(meta))
    global_out = args.global_out
    if global_out is None:
        root, _ = os.path.splitext(args.out)
        global_out = root + ".global.json"
    _write_text(global_out, global_stats_json(graph, meta=meta))
    if args.dot:
        _write_text(args.dot, to_dot(graph))
    return 0


def cmd_synth(args):
    import numpy as np

    from .errors import InputError
    from .panel import SeriesTable, write_series_table
    from .synth import VarGroundTruth, simulate_price_panel, simulate_var

    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec_text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.spec}: {exc}") from None
    meta = _meta(args, "synth")

    if args.mode == "var":
        truth = VarGroundTruth.from_json(spec_text)
        table = simulate_var(truth, args.length, args.burn_in, args.seed)
        write_series_table(table, args.out, metadata=_meta_line(meta))
        truth_out = args.truth
        if truth_out is None:
            root, _ = os.path.splitext(args.out)
            truth_out = root + ".truth.json"
        doc = {
            "lagged": sorted(truth.lagged_edges()),
            "instantaneous": sorted(truth.instantaneous_edges()),
            "meta": meta,
        }
        _write_text(truth_out, json.dumps(doc, indent=2, sort_keys=True))
    else:
        try:
            doc = json.loads(spec_text)
            n_assets = int(doc["n_assets"])
            dispersion = doc["dispersion"]
            base_price = float(doc.get("base_price", 100.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed panel spec: {exc}") from None
        panel = simulate_price_panel(n_assets, args.length, dispersion,
                                     args.seed, base_price=base_price)
        table = SeriesTable(names=panel.asset_ids,
                            timestamps=panel.timestamps,
                            values=panel.prices)
        write_series_table(table, args.out, metadata=_meta_line(meta))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_model_flags(sub):
    sub.add_argument("--lags", default="auto",
                     help="VAR lag order, or 'auto' for BIC selection")
    sub.add_argument("--max-lags", type=int, default=8,
                     help="largest order tried when --lags auto")
    sub.add_argument("--no-intercept", action="store_true",
                     help="drop the intercept from every equation")
    sub.add_argument("--no-instantaneous", action="store_true",
                     help="drop the lag-0 regressor block")
    sub.add_argument("--log", action="store_true",
                     help="log-transform series before modelling")
    sub.add_argument("--diff", action="store_true",
                     help="first-difference series before modelling")
    sub.add_argument("--scheme", choices=("resample", "permutation"),
                     default="resample", help="bootstrap null scheme")
    sub.add_argument("--threads", type=int, default=1,
                     help="task-level parallelism cap (never changes results)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fcinet",
        description="Chaos-index construction, causal uncertainty networks, "
                    "and market-efficiency tests over CSV time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fcix = sub.add_parser("fcix", help="chaos index from a price panel")
    p_fcix.add_argument("--prices", required=True, help="price panel CSV")
    p_fcix.add_argument("--out", required=True, help="output CSV (date,fcix,lambda_max)")
    p_fcix.add_argument("--window", type=int, default=None,
                        help="sliding-window width in return slices")
    p_fcix.add_argument("--factors", default=None,
                        help="dump fitted factors to this JSON file")
    p_fcix.set_defaults(func=cmd_fcix)

    p_egc = sub.add_parser("egc", help="extended Granger causality network")
    p_egc.add_argument("--series", required=True, help="series table CSV")
    p_egc.add_argument("--alpha", type=float, default=0.01)
    p_egc.add_argument("--bootstrap", type=int, required=True,
                       help="bootstrap replication count")
    p_egc.add_argument("--seed", type=int, required=True)
    p_egc.add_argument("--out", required=True, help="network JSON output")
    p_egc.add_argument("--heatmaps", default=None,
                       help="prefix for measure/probability heatmap CSVs")
    p_egc.add_argument("--coeffs", default=None,
                       help="dump unrestricted equation coefficients to JSON")
    _add_model_flags(p_egc)
    p_egc.set_defaults(func=cmd_egc)

    p_emh = sub.add_parser("emh", help="joint market-efficiency test")
    p_emh.add_argument("--series", default=None, help="series table CSV")
    p_emh.add_argument("--target", default=None, help="tested target series")
    p_emh.add_argument("--news", default=None,
                       help="comma-separated news series labels")
    p_emh.add_argument("--method", choices=("bonferroni", "fisher"),
                       default="bonferroni")
    p_emh.add_argument("--alpha", type=float, default=0.01)
    p_emh.add_argument("--bootstrap", type=int, default=500)
    p_emh.add_argument("--seed", type=int, default=None)
    p_emh.add_argument("--pvalues-file", default=None,
                       help="skip estimation; combine these label,p rows")
    p_emh.add_argument("--out", default=None, help="report JSON output")
    _add_model_flags(p_emh)
    p_emh.set_defaults(func=cmd_emh)

    p_net = sub.add_parser("netstats", help="graph diagnostics of a network")
    p_net.add_argument("--network", required=True, help="network JSON input")
    p_net.add_argument("--out", required=True, help="node statistics CSV")
    p_net.add_argument("--global-out", default=None,
                       help="global stats JSON (default: <out>.global.json)")
    p_net.add_argument("--dot", default=None, help="DOT graph output")
    p_net.add_argument("--kinds", default="lagged,instantaneous",
                       help="edge kinds to keep")
    p_net.set_defaults(func=cmd_netstats)

    p_syn = sub.add_parser("synth", help="synthetic data generators")
    p_syn.add_argument("mode", choices=("var", "panel"))
    p_syn.add_argument("--spec", required=True, help="generator spec JSON")
    p_syn.add_argument("--length", type=int, required=True)
    p_syn.add_argument("--seed", type=int, required=True)
    p_syn.add_argument("--out", required=True, help="data CSV output")
    p_syn.add_argument("--burn-in", type=int, default=200)
    p_syn.add_argument("--truth", default=None,
                       help="truth edge-set JSON (default: <out>.truth.json)")
    p_syn.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    _pin_blas_threads()
    parser = build_parser()
    args = parser.parse_args(argv)

    from .errors import ConvergenceError, InputError

    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
