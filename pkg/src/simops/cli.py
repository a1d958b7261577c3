"""Command-line interface.

Subcommands::

    simops reduce    --input problem.json [engine flags]
    simops potential --input potential.json --truncation M [engine flags]
    simops kernels   --a A [--emit-samples] [--half-width T] [--step H]
    simops verify    --input report.json

Reports are JSON with a fixed field order and floats written at 17
significant digits, so identical inputs give byte-identical output and
``verify`` recomputes exactly the stored quantities.

Exit codes: 0 success, 2 precondition or budget failure, 3 non-convergence
or failed verification, 4 I/O or schema error.
"""

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .engine import IterationConfig, VARIANTS, iterate_fixed_point, verify_similarity
from .errors import (
    BudgetError,
    DomainError,
    NonConvergenceError,
    OracleError,
    ResolutionError,
    SingularityError,
    StructuralError,
)
from .kernels import (
    KERNEL_KINDS,
    PSI_L1_CONSTANT,
    SQRT3,
    phi_kernel_sample,
    psi_kernel_table,
    verify_norm_bounds,
)
from .operators import NORM_KINDS, make_frame
from .oracle import match_spectra
from .potential import (
    build_laurent,
    default_periodic_config,
    potential_from_dict,
    reduce_hypercausal_potential,
    reduce_periodic,
)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

VERIFY_ATOL = 1e-12

LOGGER = logging.getLogger(__name__)


class SchemaError(Exception):
    """An input document does not follow the expected layout."""


# -- serialisation ------------------------------------------------------------


def _encode(value):
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in value.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return "null"
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(doc):
    """Deterministic JSON text: insertion-ordered keys, 17 significant digits."""
    return _encode(doc) + "\n"


def matrix_to_json(X):
    X = np.asarray(X, dtype=complex)
    return {"re": X.real.tolist(), "im": X.imag.tolist()}


def matrix_from_json(doc, name="matrix"):
    try:
        re = np.array(doc["re"], dtype=float)
        im = np.array(doc["im"], dtype=float) if "im" in doc else np.zeros_like(re)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: expected {{'re': [[...]], 'im': [[...]]}} ({exc})") from exc
    if re.ndim != 2 or re.shape[0] != re.shape[1] or im.shape != re.shape:
        raise SchemaError(f"{name}: planes must be square and of equal shape")
    return re + 1j * im


def complex_list(values):
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


def _complex_from_pairs(pairs, name):
    try:
        arr = np.array(pairs, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: expected a list of [re, im] pairs") from exc
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SchemaError(f"{name}: expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def load_problem(doc):
    """Parse a matrix problem ``{"frame": {"eigenvalues"}, "matrix": {"re", "im"}}``."""
    try:
        eigenvalues = doc["frame"]["eigenvalues"]
        mdoc = doc["matrix"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"matrix problem needs 'frame.eigenvalues' and 'matrix' ({exc})") from exc
    try:
        frame = make_frame(eigenvalues)
    except (DomainError, TypeError, ValueError) as exc:
        raise SchemaError(f"frame: {exc}") from exc
    B = matrix_from_json(mdoc)
    if B.shape != (frame.n, frame.n):
        raise SchemaError(f"matrix of shape {B.shape} does not match {frame.n} eigenvalues")
    return frame, B


def report_to_json(report, frame, B):
    """Engine report as an ordered JSON document.

    The frame and ``B`` are embedded so that ``verify`` can recompute the
    residual and spectra from the file alone.
    """
    return {
        "variant": report.variant,
        "a": report.a,
        "iterations": report.iterations,
        "residual_rel": report.residual_rel,
        "budget": report.budget.to_dict(),
        "spectra": {
            "perturbed": complex_list(report.spectra["perturbed"]),
            "reduced": complex_list(report.spectra["reduced"]),
            "max_match_distance": report.spectra["max_match_distance"],
        },
        "x_star": matrix_to_json(report.X_star),
        "jx_star": matrix_to_json(report.JX_star),
        "u": matrix_to_json(report.U),
        "kernel": report.kernel_kind,
        "norm": report.norm_kind,
        "requested_variant": report.requested_variant,
        "frame": {"eigenvalues": frame.eigenvalues.tolist()},
        "b": matrix_to_json(B),
        "condition_number": report.condition_number,
        "inverse_defect": report.inverse_defect,
        "fixed_point_residual": report.fixed_point_residual,
        "ball_ratio": report.ball_ratio,
        "ball_radius": report.ball_radius,
        "term_norms": list(report.term_norms),
        "factorial_bound_holds": report.factorial_bound_holds,
        "convergence_log": list(report.convergence_log),
        "notes": list(report.notes),
    }


# -- I/O ------------------------------------------------------------------------


def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SchemaError(f"cannot write {path}: {exc}") from exc


# -- subcommands ----------------------------------------------------------------


def _engine_overrides(args):
    keys = {
        "variant": "variant",
        "a": "a",
        "kernel": "kernel_kind",
        "norm": "norm_kind",
        "tol": "tol",
        "max_iter": "max_iter",
    }
    out = {field: getattr(args, arg) for arg, field in keys.items() if getattr(args, arg) is not None}
    if args.force:
        out["force"] = True
    if args.tight_constants:
        out["tight"] = True
    return out


def cmd_reduce(args):
    frame, B = load_problem(_read_json(args.input))
    overrides = _engine_overrides(args)
    config = IterationConfig(**overrides)
    report = iterate_fixed_point(frame, B, config)
    _write(dumps(report_to_json(report, frame, B)), args.out)
    return EXIT_OK


def cmd_potential(args):
    doc = _read_json(args.input)
    try:
        potential = potential_from_dict(doc)
    except DomainError as exc:
        raise SchemaError(str(exc)) from exc
    overrides = _engine_overrides(args)
    variant = overrides.pop("variant", "auto")
    support = potential.support()
    one_sided = bool(support) and (min(support) > 0 or max(support) < 0)
    if variant == "series" or (variant == "auto" and one_sided):
        overrides.pop("a", None)
        config = IterationConfig(variant="series", **overrides)
        report = reduce_hypercausal_potential(potential, args.truncation, config)
        M = (report.X_star.shape[0] - 1) // 2
        out = report_to_json(report, *build_laurent(potential, M))
        out["c"] = [0.0, 0.0]
        out["v0"] = []
        out["mode"] = "hypercausal"
    else:
        if variant != "auto":
            overrides["variant"] = variant
        config = default_periodic_config(potential, **overrides)
        result = reduce_periodic(potential, config, args.truncation)
        out = report_to_json(result.report, *build_laurent(potential, result.truncation))
        out["c"] = None if result.c is None else [result.c.real, result.c.imag]
        out["v0"] = result.v0_dict()
        out["mode"] = "periodic"
        out["constant_regime"] = result.constant_regime
        out["constant_budget"] = result.constant_budget
        out["crossval_discrepancy"] = result.crossval_discrepancy
        out["interior_eigen_distance"] = result.interior_eigen_distance
    out["potential"] = potential.to_dict()
    _write(dumps(out), args.out)
    return EXIT_OK


def cmd_kernels(args):
    a = args.a
    norms = verify_norm_bounds(a)
    out = {
        "a": norms.a,
        "phi_l1": norms.phi_l1,
        "psi_l1": norms.psi_l1,
        "psitilde_l1": norms.psitilde_l1,
        "bounds_hold": norms.bounds_hold,
        "samples": [],
        "phi_bound": SQRT3,
        "psi_bound": PSI_L1_CONSTANT / a,
        "psitilde_target": 1.0 / (2.0 * a),
        "sobolev_bound": norms.sobolev_bound,
        "errors": {
            "phi": norms.phi_error,
            "psi": norms.psi_error,
            "psitilde": norms.psitilde_error,
        },
        "checks": dict(norms.checks),
    }
    if args.emit_samples:
        table = psi_kernel_table(a, half_width=args.half_width, step=args.step)
        phi = phi_kernel_sample(a, table.grid)
        out["samples"] = [
            {"t": float(t), "phi": float(p), "psi_im": float(s.imag)}
            for t, p, s in zip(table.grid, phi, table.values)
        ]
        out["table"] = {
            "step": table.step,
            "half_width": float(table.grid[-1]),
            "psi_l1_table": table.l1_estimate,
            "quadrature_error_bound": table.quadrature_error_bound,
            "tail_bound": table.tail_bound,
        }
    _write(dumps(out), args.out)
    return EXIT_OK


def verify_report(doc):
    """Recompute residual and spectra of a saved report.

    Returns an ordered document with the recomputed values and an ``ok``
    flag that requires the residual to reproduce within ``1e-12``.
    """
    try:
        frame = make_frame(doc["frame"]["eigenvalues"])
        B = matrix_from_json(doc["b"], "b")
        X = matrix_from_json(doc["x_star"], "x_star")
        JX = matrix_from_json(doc["jx_star"], "jx_star")
        U = matrix_from_json(doc["u"], "u")
        stored = float(doc["residual_rel"])
        norm_kind = doc.get("norm", "spectral")
        stored_perturbed = _complex_from_pairs(doc["spectra"]["perturbed"], "spectra.perturbed")
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise SchemaError(f"report is missing fields needed for verification ({exc})") from exc
    if norm_kind not in NORM_KINDS:
        raise SchemaError(f"unknown norm kind {norm_kind!r}")
    for name, M in (("b", B), ("x_star", X), ("jx_star", JX), ("u", U)):
        if M.shape != (frame.n, frame.n):
            raise SchemaError(f"{name} does not match the frame size {frame.n}")
    check = verify_similarity(frame, B, X, JX, U, norm_kind)
    stored_distance = (
        match_spectra(stored_perturbed, check.perturbed)
        if stored_perturbed.size == check.perturbed.size
        else math.inf
    )
    agrees = abs(check.residual_rel - stored) <= VERIFY_ATOL
    return {
        "residual_rel": check.residual_rel,
        "stored_residual_rel": stored,
        "residual_agrees": agrees,
        "max_match_distance": check.spectra_distance,
        "stored_spectrum_distance": stored_distance,
        "ok": bool(agrees and check.residual_rel <= 1e-6),
    }


def cmd_verify(args):
    result = verify_report(_read_json(args.input))
    _write(dumps(result), args.out)
    return EXIT_OK if result["ok"] else EXIT_NONCONVERGENCE


# -- parser -----------------------------------------------------------------------


def _positive_float(text):
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"{text} is not a positive number")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _add_engine_flags(p, variants):
    p.add_argument("--variant", choices=variants, default=None)
    p.add_argument("--a", type=_positive_float, default=None, help="band parameter a")
    p.add_argument("--kernel", choices=KERNEL_KINDS, default=None)
    p.add_argument("--norm", choices=NORM_KINDS, default=None)
    p.add_argument("--tol", type=_positive_float, default=None)
    p.add_argument("--max-iter", type=_positive_int, default=None)
    p.add_argument("--force", action="store_true", help="run even if the budget fails")
    p.add_argument(
        "--tight-constants",
        action="store_true",
        help="use j = 1 when J is a pinching of a separated frame",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simops", description="Similarity reduction of perturbed diagonal operators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce a matrix problem")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    _add_engine_flags(p, VARIANTS)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("potential", help="reduce a periodic potential")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--truncation", type=_positive_int, default=None)
    _add_engine_flags(p, ("auto",) + VARIANTS)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("kernels", help="kernel L1 norms and samples")
    p.add_argument("--a", type=_positive_float, default=1.0)
    p.add_argument("--emit-samples", action="store_true")
    p.add_argument("--half-width", type=_positive_float, default=None)
    p.add_argument("--step", type=_positive_float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("verify", help="re-check a saved report")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def _error(message):
    sys.stderr.write(f"simops: {message}\n")


def run_command(argv=None):
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_PRECONDITION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except SchemaError as exc:
        _error(str(exc))
        return EXIT_IO
    except BudgetError as exc:
        _error(str(exc))
        sys.stderr.write(dumps({"budget": exc.budget.to_dict()}))
        return EXIT_PRECONDITION
    except (StructuralError, DomainError) as exc:
        _error(str(exc))
        return EXIT_PRECONDITION
    except (NonConvergenceError, SingularityError, OracleError, ResolutionError) as exc:
        _error(str(exc))
        return EXIT_NONCONVERGENCE


def main():
    sys.exit(run_command(sys.argv[1:]))
