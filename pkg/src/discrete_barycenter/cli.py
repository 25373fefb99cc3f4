"""Command line interface: ``barycenter <subcommand> ...``.

Measures are written in the measure text format; every other line of
output starts with ``#`` so stdout always parses as a measure file.
Exit codes: 0 success, 1 usage, 2 data, 3 size cap, 4 solver.
"""

import argparse
import sys
import warnings

from . import io
from .algorithms import (
    ApproxResult,
    approx_barycenter,
    exact_barycenter,
    iterate_local_improvement,
    recover_non_mass_split,
    stage_bound,
)
from .arith import get_arithmetic
from .exceptions import BarycenterError, DataError
from .measures import transport_cost, union_support
from .oracle import reference_values
from .validation import check_weights

__all__ = ["main", "run", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _on_off(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _canvas(value):
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError("expected WxH, e.g. 16x16") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="weights", help="comma separated weights (default uniform)")
    common.add_argument("--arith", choices=("rational", "float"), default="rational")
    common.add_argument("--tol", type=float, default=1e-9, help="float-mode relative tolerance")
    common.add_argument("--mini-exact", type=_on_off, default=True, metavar="on|off")
    common.add_argument("--centroid-cap", type=int, default=10**6)
    common.add_argument("--max-iter", type=int, default=100)
    common.add_argument("--out", help="write the measure (or image) here instead of stdout")
    common.add_argument("--transport-out", help="write the transport here")

    parser = _Parser(prog="barycenter", description="Discrete Wasserstein barycenters.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("approx", parents=[common], help="best measure on the union of the input supports")
    p.add_argument("measures", nargs="+")
    p = sub.add_parser("recover", parents=[common], help="non-mass-splitting recovery of a given measure")
    p.add_argument("measures", nargs="+")
    p.add_argument("--input", required=True, help="measure to recover from")
    p.add_argument("--transport", help="its transport (default: an optimal one)")
    p = sub.add_parser("improve", parents=[common], help="iterate approximation and recovery")
    p.add_argument("measures", nargs="+")
    p = sub.add_parser("exact", parents=[common], help="exact barycenter over all weighted centroids")
    p.add_argument("measures", nargs="+")
    p = sub.add_parser("cost", parents=[common], help="weighted transport cost of a candidate")
    p.add_argument("candidate")
    p.add_argument("measures", nargs="+")
    p = sub.add_parser("render", parents=[common], help="draw a 2-d measure as a PGM image")
    p.add_argument("measure")
    p.add_argument("--refine", type=int, default=1)
    p.add_argument("--canvas", type=_canvas)
    p.add_argument("--binary", action="store_true", help="write P5 instead of P2")
    p.add_argument("--max-value", type=int, default=255)
    sub.add_parser("verify", parents=[common], help="recompute the brute-force reference values")
    return parser


def _load_measures(paths, arith):
    measures = []
    for path in paths:
        if path.lower().endswith((".pgm", ".pnm")):
            measures.append(io.grid_to_measure(io.read_pgm(path), arith))
        else:
            measures.append(io.read_measure(path, arith))
    return measures


def _weights(args, n, arith):
    if args.weights is None:
        return check_weights(None, n, arith)
    return check_weights([w.strip() for w in args.weights.split(",")], n, arith)


def _emit(args, measure, plan, comments, out):
    text = io.serialize_measure(measure)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    if args.transport_out:
        with open(args.transport_out, "w", encoding="utf-8") as fh:
            fh.write(io.serialize_transport(plan))
    for line in comments:
        out.write(f"# {line}\n")


def _fmt(v):
    return io.format_scalar(v)


def _cmd_approx(args, arith, out):
    measures = _load_measures(args.measures, arith)
    w = _weights(args, len(measures), arith)
    res = approx_barycenter(union_support(measures, arith), measures, w, arith)
    _emit(args, res.measure, res.plan, [f"phi {_fmt(res.phi)}"], out)


def _cmd_exact(args, arith, out):
    measures = _load_measures(args.measures, arith)
    w = _weights(args, len(measures), arith)
    res = exact_barycenter(measures, w, arith, cap=args.centroid_cap)
    _emit(args, res.measure, res.plan, [f"phi {_fmt(res.phi)}"], out)


def _cmd_recover(args, arith, out):
    measures = _load_measures(args.measures, arith)
    w = _weights(args, len(measures), arith)
    source = io.read_measure(args.input, arith)
    if args.transport:
        with open(args.transport, encoding="utf-8") as fh:
            plan = io.parse_transport(fh.read(), source, measures, arith)
        phi = plan.cost(w)
    else:
        phi, plan = transport_cost(source, measures, w, arith)
    measure, new_plan = recover_non_mass_split(
        ApproxResult(source, plan, phi, list(source.points)), measures, w, arith, args.mini_exact
    )
    phi2 = new_plan.cost(w)
    _emit(args, measure, new_plan, [f"phi_input {_fmt(phi)}", f"phi {_fmt(phi2)}"], out)


def _cmd_improve(args, arith, out):
    measures = _load_measures(args.measures, arith)
    w = _weights(args, len(measures), arith)
    trace = iterate_local_improvement(measures, w, arith, mini_exact=args.mini_exact, max_iter=args.max_iter)
    first = trace.iterations[0].phi_after_step1
    lines = []
    for t, it in enumerate(trace.iterations, 1):
        lines.append(
            f"iteration {t}: phi_step1 {_fmt(it.phi_after_step1)} phi_step2 {_fmt(it.phi_after_step2)} "
            f"support {it.support_size} bound {_fmt(stage_bound(first, it.phi_after_step2))}"
        )
    lines.append("phi: " + " -> ".join(_fmt(v) for v in trace.phi_sequence))
    lines.append(f"phi {_fmt(trace.final.phi)}")
    lines.append(f"certified_ratio_bound {_fmt(trace.certified_ratio_bound)}")
    if not trace.converged:
        lines.append(f"not converged after {len(trace.iterations)} iterations; best so far reported")
    _emit(args, trace.final.measure, trace.final.plan, lines, out)


def _cmd_cost(args, arith, out):
    measures = _load_measures(args.measures, arith)
    w = _weights(args, len(measures), arith)
    candidate = _load_measures([args.candidate], arith)[0]
    phi, plan = transport_cost(candidate, measures, w, arith)
    out.write(f"phi {_fmt(phi)}\n")
    if args.transport_out:
        with open(args.transport_out, "w", encoding="utf-8") as fh:
            fh.write(io.serialize_transport(plan))


def _cmd_render(args, arith, out):
    measure = _load_measures([args.measure], arith)[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        img = io.render_measure(measure, args.refine, args.canvas, args.max_value)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    data = io.serialize_pgm(img, binary=args.binary)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        out.flush()
        buf = getattr(out, "buffer", None)
        if buf is not None:
            buf.write(data)
            buf.flush()
        else:
            out.write(data.decode("latin-1"))


def _cmd_verify(args, arith, out):
    bad = 0
    for name, oracle, solver in reference_values():
        ok = oracle == solver
        bad += not ok
        out.write(f"{name}: oracle {_fmt(oracle)} solver {_fmt(solver)} {'ok' if ok else 'MISMATCH'}\n")
    return 4 if bad else 0


COMMANDS = {
    "approx": _cmd_approx,
    "recover": _cmd_recover,
    "improve": _cmd_improve,
    "exact": _cmd_exact,
    "cost": _cmd_cost,
    "render": _cmd_render,
    "verify": _cmd_verify,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        arith = get_arithmetic(args.arith, args.tol)
    except ValueError as exc:
        print(f"barycenter: error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args, arith, out) or 0
    except BarycenterError as exc:
        print(f"barycenter: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"barycenter: error: {exc}", file=sys.stderr)
        return DataError.exit_code


def run():
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    run()
