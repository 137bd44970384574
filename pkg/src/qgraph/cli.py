"""Batch front-end: parse graph and function files, run commands, emit tables.

Commands: validate, spectrum, dtn, resolvent, lap-sweep, scan.  Output is
CSV or JSON-lines with fixed 15-significant-digit formatting and stable row
ordering, so repeated runs are byte-identical.  Exit codes: 0 success, 2 for
structural or invariant violations in the inputs, 3 for numerical exceptions
(interior eigenvalue or continuation pole at a requested point, threshold
region).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .graph_model import GraphError, GraphFormatError, MetricGraph, parse_graph_file
from .halfline import LeadFunction, ThresholdError
from .interior import EdgeForcing, NearSingular
from .lap_analysis import (
    DEFAULT_EPS_LADDER,
    ExceptionalWindowError,
    embedded_probe,
    exceptional_scan,
    lap_sweep,
)
from .numformat import format_float, parse_complex
from .piecewise import PiecewisePoly, PolyPiece
from .resolvent import CompositeFunction, ContinuationPole, continue_value, solve_full
from .spectrum import ScanConfig, find_eigenvalues

log = logging.getLogger("qgraph")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class FunctionFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def parse_function_text(text: str, graph: MetricGraph) -> CompositeFunction:
    """Parse the piecewise-polynomial function format against a graph.

    Sections ``[edge]`` / ``[lead]`` carry an ``id`` and one or more
    ``piece = x0, x1, c0, c1, ...`` lines (complex coefficients, low degree
    first, in the edge or lead coordinate).
    """
    from .graph_model import _sections  # same section grammar as graph files

    edge_pieces: dict[str, list[PolyPiece]] = {}
    lead_pieces: dict[str, list[PolyPiece]] = {}
    try:
        sections = list(_sections(text))
    except GraphFormatError as exc:
        raise FunctionFormatError(str(exc)) from exc
    for header, line, fields in sections:
        if header not in ("edge", "lead"):
            raise FunctionFormatError(f"unknown section [{header}]", line)
        if "id" not in fields:
            raise FunctionFormatError(f"[{header}] section is missing 'id'", line)
        target_id = fields["id"][0]
        pieces: list[PolyPiece] = []
        for key, (value, key_line) in fields.items():
            if key == "id":
                continue
            if not key.startswith("piece"):
                raise FunctionFormatError(f"unexpected key {key!r}", key_line)
            tokens = [t.strip() for t in value.split(",")]
            if len(tokens) < 3:
                raise FunctionFormatError(
                    "piece needs 'x0, x1, c0[, c1, ...]'", key_line
                )
            try:
                x0, x1 = float(tokens[0]), float(tokens[1])
                coeffs = [parse_complex(t) for t in tokens[2:]]
            except ValueError as exc:
                raise FunctionFormatError(f"bad piece entry: {exc}", key_line)
            try:
                pieces.append(PolyPiece(x0, x1, tuple(coeffs)))
            except ValueError as exc:
                raise FunctionFormatError(str(exc), key_line)
        store = edge_pieces if header == "edge" else lead_pieces
        store.setdefault(target_id, []).extend(pieces)

    try:
        forcing = EdgeForcing(
            graph, {eid: PiecewisePoly(ps) for eid, ps in edge_pieces.items()}
        )
        lead = LeadFunction(
            graph, {lid: PiecewisePoly(ps) for lid, ps in lead_pieces.items()}
        )
    except (GraphError, ValueError) as exc:
        raise FunctionFormatError(str(exc)) from exc
    return CompositeFunction(forcing, lead)


def parse_function_file(path, graph: MetricGraph) -> CompositeFunction:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_function_text(fh.read(), graph)


# Keys whose "piece" prefix carries an index are accepted so files may list
# several pieces per section: piece, piece2, piece_a, ...


def _fmt(x: float) -> str:
    return format_float(x, 15)


def _round15(x: float) -> float:
    return float(f"{float(x):.15g}")


class _Writer:
    def __init__(self, out_path: str | None, fmt: str, header: list[str]):
        self.fmt = fmt
        self.header = header
        self.lines: list[str] = []
        self.out_path = out_path
        if fmt == "csv":
            self.lines.append(",".join(header))

    def row(self, values: list) -> None:
        if self.fmt == "csv":
            self.lines.append(",".join(
                _fmt(v) if isinstance(v, float) else str(v) for v in values
            ))
        else:
            rec = {
                k: (_round15(v) if isinstance(v, float) else v)
                for k, v in zip(self.header, values)
            }
            self.lines.append(json.dumps(rec, sort_keys=True))

    def finish(self) -> None:
        text = "\n".join(self.lines) + "\n"
        if self.out_path:
            with open(self.out_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _parse_lambda_list(text: str) -> list[complex]:
    values = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            values.append(parse_complex(tok))
    if not values:
        raise ValueError("empty lambda list")
    return values


def _parse_window(text: str) -> tuple[float, float]:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 2:
        raise ValueError("window must be 'a,b'")
    return float(parts[0]), float(parts[1])


def _parse_ladder(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _lambda_grid(args) -> list[complex]:
    if args.lam:
        return _parse_lambda_list(args.lam)
    if args.window:
        lo, hi = _parse_window(args.window)
        if not args.step:
            raise ValueError("--window needs --step")
        grid = np.arange(lo, hi + args.step / 2, args.step)
        return [complex(x) for x in grid]
    raise ValueError("provide --lambda or --window with --step")


def _load_inputs(args) -> tuple[MetricGraph, CompositeFunction | None]:
    graph = parse_graph_file(args.graph)
    func = None
    if getattr(args, "function", None):
        func = parse_function_file(args.function, graph)
    return graph, func


def _require_function(func: CompositeFunction | None, graph: MetricGraph) -> CompositeFunction:
    return func if func is not None else CompositeFunction.zero(graph)


def _cmd_validate(args) -> int:
    graph, func = _load_inputs(args)
    print(f"graph ok: {len(graph.vertex_ids)} vertices, {len(graph.edges)} edges, "
          f"{len(graph.leads)} leads, boundary size {graph.n_boundary}, "
          f"normalized={'yes' if graph.is_normalized else 'no'}")
    if func is not None:
        n_edge = len(func.forcing.components)
        n_lead = sum(1 for p in func.lead.components if not p.is_zero)
        print(f"function ok: {n_edge} edge components, {n_lead} lead components")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    graph, _ = _load_inputs(args)
    lo, hi = _parse_window(args.window)
    cfg = ScanConfig(lo, hi, step=args.step, accept_tol=args.accept_tol,
                     merge_tol=args.merge_tol)
    hits = find_eigenvalues(graph, cfg)
    writer = _Writer(args.out, args.format, ["lambda", "multiplicity", "smin"])
    for hit in hits:
        writer.row([hit.lam, hit.multiplicity, hit.smin])
    writer.finish()
    return EXIT_OK


def _cmd_dtn(args) -> int:
    from .dtn import dtn_matrix

    graph, _ = _load_inputs(args)
    lams = _lambda_grid(args)
    writer = _Writer(args.out, args.format,
                     ["lambda_re", "lambda_im", "row", "col", "re", "im"])
    for lam in lams:
        dtn = dtn_matrix(graph, lam)
        for i in range(dtn.n):
            for j in range(dtn.n):
                z = dtn.matrix[i, j]
                writer.row([lam.real, lam.imag, i, j, float(z.real), float(z.imag)])
    writer.finish()
    return EXIT_OK


def _cmd_resolvent(args) -> int:
    graph, func = _load_inputs(args)
    f = _require_function(func, graph)
    lams = _lambda_grid(args)
    n = graph.n_boundary
    header = ["lambda_re", "lambda_im", "k_re", "k_im", "value_re", "value_im",
              "robin_residual", "trace_residual"]
    for i in range(n):
        header += [f"a{i}_re", f"a{i}_im"]
    for i in range(n):
        header += [f"u0_{i}_re", f"u0_{i}_im"]
    writer = _Writer(args.out, args.format, header)
    for lam in lams:
        if lam.imag > 0:
            sample = solve_full(graph, f, lam, args.formula)
        else:
            sample = continue_value(graph, f, lam, args.formula)
        row = [lam.real, lam.imag, sample.k.real, sample.k.imag,
               sample.value.real, sample.value.imag,
               sample.robin_residual, sample.trace_residual]
        for i in range(n):
            row += [float(sample.amplitude[i].real), float(sample.amplitude[i].imag)]
        for i in range(n):
            row += [float(sample.u1_zero[i].real), float(sample.u1_zero[i].imag)]
        writer.row(row)
    writer.finish()
    return EXIT_OK


def _cmd_lap_sweep(args) -> int:
    graph, func = _load_inputs(args)
    f = _require_function(func, graph)
    window = _parse_window(args.window)
    sweep = lap_sweep(
        graph, f, window,
        step=args.step,
        eps_ladder=_parse_ladder(args.eps_ladder),
        exclude=args.exclude,
        formula=args.formula,
    )
    writer = _Writer(args.out, args.format,
                     ["lambda", "eps", "re", "im", "abs",
                      "continued_re", "continued_im", "deviation"])
    for i, lam in enumerate(sweep.lambdas):
        for j, eps in enumerate(sweep.eps_ladder):
            v = sweep.values[i, j]
            c = sweep.continued[i]
            writer.row([float(lam), float(eps), v.real, v.imag, abs(v),
                        c.real, c.imag, float(sweep.deviations[i, j])])
    writer.finish()
    return EXIT_OK


def _cmd_scan(args) -> int:
    graph, _ = _load_inputs(args)
    window = _parse_window(args.window)
    result = exceptional_scan(graph, window, step=args.step)
    writer = _Writer(args.out, args.format, ["lambda_star", "kind", "sigma_min"])
    for p in result.points:
        writer.row([p.lam, p.kind, p.smin])
    writer.finish()
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgraph",
        description="Spectra, boundary response and resolvent boundary values "
                    "for metric graphs with leads",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_function=False):
        p.add_argument("--graph", required=True, help="graph description file")
        p.add_argument("--function", required=needs_function,
                       help="piecewise-polynomial function file")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("validate", help="parse and validate inputs")
    add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("spectrum", help="interior eigenvalue scan")
    add_common(p)
    p.add_argument("--window", required=True, help="a,b")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--accept-tol", type=float, default=1e-8, dest="accept_tol")
    p.add_argument("--merge-tol", type=float, default=1e-6, dest="merge_tol")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("dtn", help="boundary response matrix over a lambda grid")
    add_common(p)
    p.add_argument("--lambda", dest="lam", default=None,
                   help="comma-separated complex values, e.g. 2+1i,3.5")
    p.add_argument("--window", default=None, help="a,b (real grid)")
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=_cmd_dtn)

    p = sub.add_parser("resolvent", help="resolvent quadratic form samples")
    add_common(p)
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--window", default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--formula", choices=("derived", "paper"), default="derived")
    p.set_defaults(func=_cmd_resolvent)

    p = sub.add_parser("lap-sweep", help="limiting-absorption sweep over a window")
    add_common(p)
    p.add_argument("--window", required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--eps-ladder", dest="eps_ladder",
                   default=",".join(str(e) for e in DEFAULT_EPS_LADDER))
    p.add_argument("--exclude", action="store_true",
                   help="drop grid points near exceptional points instead of failing")
    p.add_argument("--formula", choices=("derived", "paper"), default="derived")
    p.set_defaults(func=_cmd_lap_sweep)

    p = sub.add_parser("scan", help="exceptional-set scan over a window")
    add_common(p)
    p.add_argument("--window", required=True)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=_cmd_scan)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("QGRAPH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphFormatError, FunctionFormatError, GraphError) as exc:
        print(f"qgraph: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ExceptionalWindowError as exc:
        print(f"qgraph: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NearSingular, ContinuationPole, ThresholdError) as exc:
        print(f"qgraph: numerical exception: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"qgraph: invalid request: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
