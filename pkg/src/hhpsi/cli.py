"""Command-line entry point: analyze | expand | resum | certify | validate.

Exit codes: 0 success, 1 invalid input, 2 out-of-scope regime,
3 verification failure (compatibility, bound or cross-validation).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import (CertificateError, CompatibilityError, InternalConsistencyError,
                     InvalidParameterError, InvalidResummationError, ParseError,
                     PsiSeriesError, RegimeError)
from .model import ModelParams
from .singularity import Regime, classify

EXIT_OK, EXIT_INPUT, EXIT_SCOPE, EXIT_VERIFY = 0, 1, 2, 3
OUT_ENV = "HHPSI_OUT"
DEFAULT_OUT = "hhpsi-out"

_VALUE_FLAGS = {"--lambda", "--A", "--B", "--sign", "--case", "--order", "--a010", "--a001",
                "--a600", "--a000", "--b600", "--tol", "--ode-tol", "--precision",
                "--threads", "--out", "--tau0", "--tau1", "--gamma-max"}

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_NUM_RE = re.compile(_NUM)


class UsageError(Exception):
    pass


def parse_fraction(text: str) -> Fraction:
    """Parse an exact rational 'p', 'p/q' or a terminating decimal."""
    s = text
    i = 0
    n = len(s)
    while i < n and s[i] == " ":
        i += 1
    if i < n and s[i] in "+-":
        i += 1
    start = i
    while i < n and s[i].isdigit():
        i += 1
    if i == start:
        raise ParseError("expected digits", text, i)
    if i < n and s[i] == ".":
        i += 1
        while i < n and s[i].isdigit():
            i += 1
    elif i < n and s[i] == "/":
        i += 1
        dstart = i
        while i < n and s[i].isdigit():
            i += 1
        if i == dstart:
            raise ParseError("expected denominator digits", text, i)
        if int(s[dstart:i]) == 0:
            raise ParseError("zero denominator", text, dstart)
    while i < n and s[i] == " ":
        i += 1
    if i != n:
        raise ParseError(f"unexpected character {s[i]!r}", text, i)
    return Fraction(text.strip())


def parse_complex(text: str) -> complex:
    """Parse 're', 'im i', 're+imi' or 're-imi' ('j' also accepted)."""
    s = text
    i = 0
    n = len(s)
    parts = []
    while i < n:
        term = i
        sign = 1
        if s[i] in "+-":
            sign = -1 if s[i] == "-" else 1
            i += 1
        elif parts:
            raise ParseError("expected '+' or '-'", text, i)
        m = _NUM_RE.match(s, i)
        if m:
            value = float(m.group()) * sign
            i = m.end()
        else:
            value = float(sign)
            if i >= n or s[i] not in "ij":
                raise ParseError("expected a number", text, i)
        imag = i < n and s[i] in "ij"
        if imag:
            i += 1
        if i < n and s[i] not in "+-":
            raise ParseError(f"unexpected character {s[i]!r}", text, i)
        if any(p[1] == imag for p in parts) or len(parts) == 2:
            raise ParseError("repeated real or imaginary part", text, term)
        parts.append((value, imag))
    if not parts:
        raise ParseError("empty literal", text, 0)
    re_part = sum(v for v, im in parts if not im)
    im_part = sum(v for v, im in parts if im)
    return complex(re_part, im_part)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _normalize_argv(argv):
    # let "--lambda -24/23" through: argparse reads "-24/23" as an option
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1] not in _VALUE_FLAGS and not argv[i + 1].startswith("--"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--lambda", dest="lam", required=True,
                        help="exact rational, e.g. -24/23")
    common.add_argument("--A", dest="A", default="1", help="coefficient A (default 1)")
    common.add_argument("--B", dest="B", default="1", help="coefficient B (default 1)")
    common.add_argument("--sign", default="+", choices=["+", "-"],
                        help="branch of the leading x coefficient")
    common.add_argument("--case", default="i", choices=["i", "ii", "iia", "I", "II"],
                        help="leading-order branch (default i)")
    common.add_argument("--order", type=int, default=None, help="truncation order N")
    for name in ("a010", "a001", "a600", "a000", "b600"):
        common.add_argument(f"--{name}", default=None, help="free constant, e.g. 0.1+0.2i")
    common.add_argument("--tol", type=float, default=1e-10,
                        help="compatibility tolerance (relative)")
    common.add_argument("--ode-tol", type=float, default=1e-12, help="integrator tolerance")
    common.add_argument("--precision", type=int, default=None,
                        help="mantissa bits for extended-precision coefficients")
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; work is sequential")
    common.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--tau0", type=float, default=None)
    common.add_argument("--tau1", type=float, default=None)
    common.add_argument("--gamma-max", type=int, default=None)

    parser = _Parser(prog="hhpsi", description="Psi-series tools for the cubic Henon-Heiles system")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [("analyze", "classify the lambda regime"),
                       ("expand", "build a coefficient table"),
                       ("resum", "regroup a table into per-grade exponential sums"),
                       ("certify", "compute a convergence-radius certificate"),
                       ("validate", "cross-check the series against an integrator")]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _schema(name: str) -> dict:
    path = resources.files("hhpsi") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text())


def _emit(doc: dict, schema: str, out_dir: Path | None, filename: str | None, stream):
    jsonschema.validate(doc, _schema(schema))
    text = json.dumps(doc, indent=2, default=_json_default)
    if out_dir is not None and filename:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / filename).write_text(text + "\n")
    print(text, file=stream)


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _out_dir(cfg) -> Path:
    return Path(cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _branch(cfg) -> str:
    return {"I": "i", "II": "ii"}.get(cfg.case, cfg.case)


def _params(cfg) -> ModelParams:
    lam = parse_fraction(cfg.lam)
    try:
        A, B = float(cfg.A), float(cfg.B)
    except ValueError as exc:
        raise InvalidParameterError(str(exc)) from exc
    return ModelParams(A, B, lam, 1 if cfg.sign == "+" else -1)


def _arbitrary(cfg, case: str) -> dict:
    names = ("a010", "a001", "a600") if case == "I" else ("a000", "a010", "b600")
    out = {}
    for name in names:
        raw = getattr(cfg, name)
        if raw is not None:
            out[name] = parse_complex(raw)
    return out


def _table(cfg, p: ModelParams, default_order: int, precision=None):
    from .series import expand_case_i, expand_case_ii

    branch = _branch(cfg)
    N = default_order if cfg.order is None else cfg.order
    if N < 0:
        raise InvalidParameterError("order must be nonnegative")
    prec = cfg.precision if precision is None else precision
    if branch == "i":
        return expand_case_i(p, _arbitrary(cfg, "I"), N, tol=cfg.tol, precision=prec)
    if branch == "iia":
        raise RegimeError("case (ii) branch with leading order alpha has a negative "
                          "resonance; not expanded")
    return expand_case_ii(p, _arbitrary(cfg, "II"), N, tol=cfg.tol, precision=prec)


def cmd_analyze(cfg, stream) -> int:
    p = _params(cfg)
    report = classify(p.lam, p.A, p.B, _branch(cfg))
    _emit(report.to_json(), "regime", None, None, stream)
    return EXIT_OK if report.viable else EXIT_SCOPE


def cmd_expand(cfg, stream) -> int:
    from .series import case_i_identity_residual, case_ii_identity_residual

    p = _params(cfg)
    t = _table(cfg, p, 20)
    out = _out_dir(cfg)
    t.write(out, "coefficients")
    doc = t.metadata()
    summary = {"entries": len(t.coeffs)}
    if t.case == "I" and t.order >= 6:
        summary["compatibility600"] = t.compatibility.get((6, 0, 0))
        summary["identityResidual600"] = case_i_identity_residual(t)
    if t.case == "II":
        tc = t.as_complex()
        if t.order >= 2:
            summary["b200"] = complex(tc.b[2, 0, 0]).real
            summary["b200Expected"] = p.B / 2
        if t.order >= 4:
            summary["b400"] = complex(tc.b[4, 0, 0]).real
            summary["b400Expected"] = p.B ** 2 / 40
        if t.order >= 6:
            summary["compatibility600"] = t.compatibility.get((6, 0, 0))
            summary["identityResidual600"] = case_ii_identity_residual(t)
    if t.order == 0:
        a0, b0 = t[0, 0, 0]
        summary["leading"] = {"a000": [complex(a0).real, complex(a0).imag],
                              "b000": [complex(b0).real, complex(b0).imag]}
    doc["summary"] = summary
    _emit(doc, "table", out, "coefficients.json", stream)
    return EXIT_OK


def _series(cfg, p, default_order):
    from .resummation import resum

    return resum(_table(cfg, p, default_order))


def cmd_resum(cfg, stream) -> int:
    from .resummation import ode_residual

    p = _params(cfg)
    s = _series(cfg, p, 20)
    doc = s.to_json()
    res = ode_residual(s)
    doc["summary"] = {"maxOdeResidual": max(res.values()) if res else 0.0}
    _emit(doc, "resummed", _out_dir(cfg), "resummed.json", stream)
    return EXIT_OK


def _check_convergent(cfg, p):
    report = classify(p.lam, p.A, p.B, _branch(cfg))
    if report.case == Regime.II_IMAGINARY:
        raise RegimeError(f"{report.case.value}: {report.status}")
    if not report.viable:
        raise RegimeError(f"{report.case.value}: {report.status}")
    return report


def cmd_certify(cfg, stream) -> int:
    from .bounds import certify

    p = _params(cfg)
    _check_convergent(cfg, p)
    s = _series(cfg, p, 60)
    cert = certify(s, p, cfg.gamma_max)
    _emit(cert.to_json(), "certificate", _out_dir(cfg), "certificate.json", stream)
    return EXIT_OK


def cmd_validate(cfg, stream) -> int:
    import numpy as np

    from .bounds import certify
    from .resummation import resum
    from .validation import cross_validate, series_curve, write_curve_csv

    p = _params(cfg)
    _check_convergent(cfg, p)
    N = 40 if cfg.order is None else cfg.order
    t = _table(cfg, p, N)
    cert = None
    radius = None
    try:
        cert = certify(resum(t.as_complex()), p)
        radius = cert.radius
    except (CertificateError, InvalidResummationError) as exc:
        print(f"warning: no certificate: {exc}", file=sys.stderr)
    if cfg.tau1 is None and radius is None:
        raise RegimeError("no certified radius; pass --tau0 and --tau1")
    tau1 = cfg.tau1 if cfg.tau1 is not None else radius / 4
    tau0 = cfg.tau0 if cfg.tau0 is not None else tau1 / 2
    orders = sorted({max(N // 2, 0), N})
    rep = cross_validate(t, p, tau0, tau1, orders, tol=cfg.ode_tol, radius=radius)
    doc = rep.to_json()
    doc["certificate"] = cert.to_json() if cert else None
    out = _out_dir(cfg)
    rows = series_curve(t.as_complex(), np.linspace(tau1 / 4, tau1, 64))
    write_curve_csv(out / "curve.csv", rows)
    _emit(doc, "validation", out, "validation.json", stream)
    return EXIT_VERIFY if rep.status in ("convergence-failure", "failed") else EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "expand": cmd_expand, "resum": cmd_resum,
            "certify": cmd_certify, "validate": cmd_validate}


def main(argv=None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = build_parser().parse_args(_normalize_argv(argv))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg, stream)
    except (ParseError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RegimeError, InvalidResummationError) as exc:
        print(f"out of scope: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except (CompatibilityError, CertificateError, InternalConsistencyError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except PsiSeriesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
