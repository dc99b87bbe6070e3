"""Batch front end: parse connection files, dispatch operations, emit JSON
reports with certificates.

Exit codes: 0 success; 1 invalid input or precondition failure
(mathematically impossible request); 2 retryable resource failure
(SearchExhausted, PrecisionExhausted, Unstabilized: rerun with larger knobs).

Reports are deterministic apart from the "timestamp" field and embed the
library version and every knob.  Every certificate is re-verified before the
report is emitted, through a pass that uses only the gauge action and the
predicates, never the normalization code paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from . import linalg as la
from .errors import (
    OperforgeError,
    OrderUndetermined,
    PrecisionExhausted,
    SchemaError,
    SearchExhausted,
    Unstabilized,
)
from .gauge import CONST, EXP, Connection, GaugeElement, gauge_transform
from .laurent import INF, parse_rational
from .liealg import is_regular_nilpotent, make_context
from .oper import (
    OperForm,
    is_oper_form,
    normalize_regular,
    normalize_regular_nilpotent,
)
from .cyclic import find_cyclic_vector, oper_from_cyclic
from .springer import (
    DeformedFiberQuery,
    SearchCertificate,
    in_M_A,
    in_deformed_fiber,
    is_regular_point,
    regularization_search,
    tangent_space_dim,
)

COMMANDS = (
    "normalize",
    "normalize-regular",
    "cyclic",
    "regularize",
    "verify-oper",
    "tangent-dim",
    "member",
)

DEFAULT_CLI_PRECISION = 16


@dataclass
class JobSpec:
    command: str
    input_path: str
    precision: int = DEFAULT_CLI_PRECISION
    bounds: dict = field(default_factory=dict)
    output_path: str | None = None
    verify_only: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.precision < 4:
            raise SchemaError("/precision", "working precision must be at least 4")


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError("", f"input file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(
            "", f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        )


def parse_connection(path) -> Connection:
    """Load a connection file; round-tripping through emit normalizes key
    order and rational formatting but preserves values exactly."""
    doc = _load_json(path)
    if isinstance(doc, dict) and "connection" in doc:
        doc = doc["connection"]
    return Connection.from_json(doc)


def _load_job_input(spec: JobSpec):
    doc = _load_json(spec.input_path)
    if not isinstance(doc, dict):
        raise SchemaError("", "expected a JSON object")
    if "connection" in doc:
        conn = Connection.from_json(doc["connection"])
        gauge = None
        if "gauge" in doc:
            try:
                gauge = GaugeElement.from_json(doc["gauge"])
            except SchemaError:
                raise
            except OperforgeError as exc:
                raise SchemaError("/gauge", str(exc))
        lam = doc.get("lambda")
        if lam is not None:
            try:
                lam = parse_rational(lam)
            except ValueError as exc:
                raise SchemaError("/lambda", str(exc))
        return conn, gauge, lam
    return Connection.from_json(doc), None, None


def emit_report(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _base_report(spec: JobSpec, conn: Connection):
    return {
        "command": spec.command,
        "version": __version__,
        "knobs": {"precision": spec.precision, **spec.bounds},
        "input": conn.to_json(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _window_json(lo, hi):
    return [None if lo == INF else int(lo), None if hi == INF else int(hi)]


def _fmt_matrix(m):
    from .laurent import format_rational

    return [[format_rational(x) for x in row] for row in m]


def run(spec: JobSpec):
    """Execute a job; returns (exit_code, report dict)."""
    try:
        if spec.verify_only:
            report = _load_json(spec.input_path)
            ok, message = verify_report(report)
            out = {
                "command": "verify",
                "version": __version__,
                "verified": ok,
                "detail": message,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            return (0 if ok else 1), out
        conn, gauge, lam = _load_job_input(spec)
        report = _base_report(spec, conn)
        handler = _HANDLERS[spec.command]
        handler(spec, report, conn, gauge, lam)
        ok, message = verify_report(report)
        if not ok:
            report["status"] = "error"
            report["error"] = f"certificate failed independent verification: {message}"
            return 1, report
        report["status"] = "ok"
        report["verified"] = True
        return 0, report
    except (SearchExhausted, PrecisionExhausted, Unstabilized, OrderUndetermined) as exc:
        return 2, {
            "command": spec.command,
            "version": __version__,
            "status": "retryable",
            "error": f"{type(exc).__name__}: {exc}",
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
    except OperforgeError as exc:
        return 1, {
            "command": spec.command,
            "version": __version__,
            "status": "error",
            "error": f"{type(exc).__name__}: {exc}",
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }


def _handle_normalize(spec, report, conn, gauge, lam):
    cert = normalize_regular_nilpotent(conn, working_precision=spec.precision)
    report["certificate"] = cert.to_json()
    report["certified_window"] = _window_json(*cert.window)
    report["steps"] = cert.K


def _handle_normalize_regular(spec, report, conn, gauge, lam):
    cert = normalize_regular(conn, working_precision=spec.precision)
    report["certificate"] = cert.to_json()
    report["certified_window"] = _window_json(*cert.window)
    report["steps"] = cert.K


def _handle_cyclic(spec, report, conn, gauge, lam):
    budget = spec.bounds.get("pole_budget")
    witness = find_cyclic_vector(conn, pole_budget=budget)
    g, companion = oper_from_cyclic(conn, witness)
    report["witness"] = witness.to_json()
    report["gauge"] = g.to_json()
    report["companion"] = companion.to_json()
    report["is_oper"] = is_oper_form(companion)
    report["certified_window"] = _window_json(
        companion.matrix.val_bound, companion.precision
    )


def _handle_regularize(spec, report, conn, gauge, lam):
    cert = regularization_search(
        conn,
        coweight_bound=spec.bounds.get("coweight_bound", 2),
        depth_bound=spec.bounds.get("depth_bound", 2),
    )
    report["certificate"] = cert.to_json()
    report["certified_window"] = _window_json(
        cert.transformed.matrix.val_bound, cert.transformed.precision
    )


def _handle_verify_oper(spec, report, conn, gauge, lam):
    report["is_oper"] = is_oper_form(conn)
    report["certified_window"] = _window_json(
        conn.matrix.val_bound, conn.precision
    )


def _handle_tangent_dim(spec, report, conn, gauge, lam):
    if gauge is None:
        raise SchemaError("/gauge", "tangent-dim needs a gauge element")
    depth = spec.bounds.get("window_depth", 6)
    dim = tangent_space_dim(conn, gauge, depth)
    report["tangent_dim"] = dim
    report["window_depth"] = depth
    report["certified_window"] = _window_json(conn.matrix.val_bound, conn.precision)


def _handle_member(spec, report, conn, gauge, lam):
    if gauge is None:
        raise SchemaError("/gauge", "member needs a gauge element")
    if lam is None:
        result = in_M_A(conn, gauge)
        report["lambda"] = None
    else:
        q = DeformedFiberQuery.from_connection(conn, lam)
        result = in_deformed_fiber(q, gauge)
        from .laurent import format_rational

        report["lambda"] = format_rational(lam)
    report["member"] = bool(result)
    report["certified_window"] = _window_json(conn.matrix.val_bound, conn.precision)


_HANDLERS = {
    "normalize": _handle_normalize,
    "normalize-regular": _handle_normalize_regular,
    "cyclic": _handle_cyclic,
    "regularize": _handle_regularize,
    "verify-oper": _handle_verify_oper,
    "tangent-dim": _handle_tangent_dim,
    "member": _handle_member,
}


# -- independent verification ----------------------------------------------


def _gauge_from_certificate(ctx, cert):
    factors = tuple(
        (EXP, step["k"], la.mat([[parse_rational(x) for x in row] for row in step["X"]]))
        for step in reversed(cert["steps"])
    )
    conj = la.mat([[parse_rational(x) for x in row] for row in cert["conjugator"]])
    return GaugeElement(ctx, factors=factors + ((CONST, conj),))


def verify_report(report) -> tuple[bool, str]:
    """Re-check the certificates in a report using only the gauge action and
    the predicates."""
    command = report.get("command")
    if command in ("normalize", "normalize-regular"):
        conn = Connection.from_json(report["input"])
        cert = report["certificate"]
        ctx = conn.ctx
        g = _gauge_from_certificate(ctx, cert)
        lo, hi = cert["window"]
        replay = gauge_transform(g, conn.truncated(hi))
        target = OperForm.from_json(ctx, cert["result"]).expand()
        if not replay.matrix.truncated(hi).agrees_with(target.matrix):
            return False, "gauge replay does not match the certified result"
        if not is_oper_form(replay):
            return False, "replayed connection is not in oper form"
        for step in cert["steps"]:
            if step["k"] < 1:
                return False, "certificate contains a non-congruence step"
        return True, "replay and oper-form predicates hold"
    if command == "regularize":
        conn = Connection.from_json(report["input"])
        cert = report["certificate"]
        g = GaugeElement.from_json(cert["gauge"])
        transformed = gauge_transform(g.inverse(), conn)
        stored = Connection.from_json(cert["transformed"])
        if not transformed.matrix.agrees_with(stored.matrix):
            return False, "gauge replay does not match the stored transform"
        r = cert["effective_order"]
        leading = transformed.coefficient(r)
        stored_leading = la.mat(
            [[parse_rational(x) for x in row] for row in cert["leading"]]
        )
        if not la.eq(leading, stored_leading):
            return False, "leading coefficient mismatch"
        if not is_regular_nilpotent(leading):
            return False, "leading coefficient is not regular nilpotent"
        if not conn.matrix.is_exact_zero and not in_M_A(conn, g):
            return False, "gauge element is not a fiber member"
        return True, "replay, order and regularity predicates hold"
    if command == "cyclic":
        conn = Connection.from_json(report["input"])
        g = GaugeElement.from_json(report["gauge"])
        companion = Connection.from_json(report["companion"])
        replay = gauge_transform(g.inverse(), conn)
        if not replay.matrix.agrees_with(companion.matrix):
            return False, "gauge replay does not match the companion form"
        if not is_oper_form(replay):
            return False, "companion form fails the oper predicate"
        return True, "replay and oper-form predicates hold"
    if command in ("verify-oper", "member", "tangent-dim"):
        return True, "no certificate to verify"
    return False, f"unknown report command {command!r}"


# -- argument parsing --------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="operforge",
        description="Exact gauge calculus on the formal punctured disc",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", help="input JSON file")
    parser.add_argument(
        "--precision",
        type=int,
        default=None,
        help="working precision: coefficients kept beyond the valuation "
        "(default 16, or OPERFORGE_PRECISION)",
    )
    parser.add_argument("--coweight-bound", type=int, default=None)
    parser.add_argument("--depth-bound", type=int, default=None)
    parser.add_argument("--pole-budget", type=int, default=None)
    parser.add_argument("--window-depth", type=int, default=None)
    parser.add_argument("--output", default=None, help="write the report here as well")
    parser.add_argument(
        "--verify-only",
        action="store_true",
        help="treat the input as a previously emitted report and re-verify it",
    )
    return parser


def spec_from_args(args) -> JobSpec:
    precision = args.precision
    if precision is None:
        env = os.environ.get("OPERFORGE_PRECISION")
        precision = int(env) if env else DEFAULT_CLI_PRECISION
    bounds = {}
    if args.coweight_bound is not None:
        bounds["coweight_bound"] = args.coweight_bound
    if args.depth_bound is not None:
        bounds["depth_bound"] = args.depth_bound
    if args.pole_budget is not None:
        bounds["pole_budget"] = args.pole_budget
    if args.window_depth is not None:
        bounds["window_depth"] = args.window_depth
    return JobSpec(
        command=args.command,
        input_path=args.input,
        precision=precision,
        bounds=bounds,
        output_path=args.output,
        verify_only=args.verify_only,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
    except SchemaError as exc:
        print(json.dumps({"status": "error", "error": str(exc)}), file=sys.stderr)
        return 1
    try:
        code, report = run(spec)
    except SchemaError as exc:
        report = {
            "command": args.command,
            "version": __version__,
            "status": "error",
            "error": f"SchemaError: {exc}",
        }
        code = 1
    text = emit_report(report)
    sys.stdout.write(text)
    if spec.output_path:
        with open(spec.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
