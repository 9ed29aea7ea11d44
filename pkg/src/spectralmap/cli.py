"""Command-line entry point: forward, inverse, validate, fit and roundtrip.

Exit codes: 0 success, 1 other solver error, 2 input error, 3 validation
failure, 4 solvability alarm, 5 fit failure.  Set SPECTRALMAP_LOG to a
logging level name (DEBUG, INFO, ...) for progress messages on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .assoc import associated_matrix
from .coefficients import CoefficientSet, dumps_coefficients, load_coefficients
from .errors import FitError, SolvabilityAlarm, SpectralMapError, ValidationFailure
from .forward import (
    SpectralData,
    fit_asymptotics,
    forward_spectral_data,
    remainders_csv,
    validate_spectral_data,
)
from .grid import ChebGrid
from .maineq import inverse_solve

log = logging.getLogger("spectralmap")

EXIT_OK, EXIT_ERROR, EXIT_INPUT, EXIT_VALIDATION, EXIT_ALARM, EXIT_FIT = 0, 1, 2, 3, 4, 5
LOG_ENV = "SPECTRALMAP_LOG"


class InputError(Exception):
    """Unreadable or malformed input; maps to exit code 2."""


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read(loader, path, what):
    try:
        return loader(path)
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from exc
    except (SpectralMapError, ValueError) as exc:
        raise InputError(f"{what} {path}: {exc}") from exc


def _grid_size(value):
    g = int(value)
    if not ChebGrid.validate_size(g):
        raise InputError(f"grid size must be 2^m + 1 and at least 33, got {g}")
    return g


def _positive_int(value, name):
    v = int(value)
    if v < 1:
        raise InputError(f"{name} must be >= 1, got {v}")
    return v


def _write_atomic(path, text):
    """Write through a temporary file so a failure leaves no partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_text(text)
    tmp.replace(path)


def diagnostics_csv(x, sigma_min, residual):
    rows = ["x,sigma_min,residual"]
    rows += [f"{a:.17g},{b:.17g},{c:.17g}" for a, b, c in zip(x, sigma_min, residual)]
    return "\n".join(rows) + "\n"


def parse_perturbation(spec, n):
    """``l:k:lam_factor:beta_factor[,...]``; k may be ``*`` for every k."""
    out = []
    for item in filter(None, (spec or "").split(",")):
        parts = item.split(":")
        if len(parts) != 4:
            raise InputError(f"perturbation {item!r} is not l:k:lam_factor:beta_factor")
        try:
            l = int(parts[0])
            ks = range(1, n) if parts[1] == "*" else [int(parts[1])]
            fl, fb = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise InputError(f"bad perturbation {item!r}") from exc
        out += [(l, k, fl, fb) for k in ks]
    return out


def perturb_data(data: SpectralData, changes):
    for l, k, fl, fb in changes:
        sel = (data.l == l) & (data.k == k)
        if not sel.any():
            raise InputError(f"no data entry (l={l}, k={k}) to perturb")
        i = np.flatnonzero(sel)[0]
        data = data.replace(l, k, lam=data.lam[i] * fl, beta=data.beta[i] * fb)
    return data


# -- commands ---------------------------------------------------------------------


def cmd_forward(args):
    coeffs = _read(load_coefficients, args.coeffs, "coefficient file")
    L = _positive_int(args.L, "L")
    nodes = _grid_size(args.grid)
    data = forward_spectral_data(associated_matrix(coeffs), L, nodes)
    _write_atomic(args.out, data.dumps())
    csv = args.csv or f"{args.out}.remainders.csv"
    _write_atomic(csv, remainders_csv(data))
    print(f"wrote {len(data.l)} eigenvalues to {args.out} and remainders to {csv}")
    return EXIT_OK


def _inverse_config(args):
    """Merge an optional manifest ([inverse] section) with command-line flags."""
    cfg = {"L": None, "grid": "33", "pieces": "8", "degree": None, "perturb_model": None,
           "diagnostics": None, "data": None, "model": None, "model_data": None, "out": None}
    if args.manifest:
        cp = configparser.ConfigParser()
        try:
            if not cp.read(args.manifest):
                raise InputError(f"cannot read manifest {args.manifest}")
            sec = cp["inverse"]
        except (configparser.Error, KeyError) as exc:
            raise InputError(f"malformed manifest {args.manifest}: {exc}") from exc
        base = Path(args.manifest).parent
        for key in cfg:
            if key in sec:
                val = sec[key]
                cfg[key] = str(base / val) if key in ("data", "model", "model_data", "out", "diagnostics") else val
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("data", "model", "out"):
        if not cfg[key]:
            raise InputError(f"missing required setting {key!r}")
    return cfg


def cmd_inverse(args):
    cfg = _inverse_config(args)
    data = _read(SpectralData.load, cfg["data"], "spectral data file")
    model = _read(load_coefficients, cfg["model"], "model coefficient file")
    if model.n != data.n:
        raise InputError(f"model order {model.n} differs from data order {data.n}")
    model_data = _read(SpectralData.load, cfg["model_data"], "model spectral data") if cfg["model_data"] else None
    L = _positive_int(cfg["L"], "L") if cfg["L"] else None
    eps = float(cfg["perturb_model"]) if cfg["perturb_model"] else None
    result = inverse_solve(data, model, L, model_data=model_data, pieces=int(cfg["pieces"]),
                           nodes=_grid_size(cfg["grid"]), degree=int(cfg["degree"]) if cfg["degree"] else None,
                           force=args.force, perturb_model=eps)
    _write_atomic(cfg["out"], dumps_coefficients(result.coefficients))
    diag = cfg["diagnostics"] or f"{cfg['out']}.diagnostics.csv"
    _write_atomic(diag, diagnostics_csv(result.cache.grid.x, result.sigma_min, result.residual))
    print(f"min sigma_min {np.min(result.sigma_min):.3g}, max residual {np.max(result.residual):.3g}")
    print(f"wrote {cfg['out']} and {diag}")
    return EXIT_OK


def cmd_validate(args):
    data = _read(SpectralData.load, args.data, "spectral data file")
    model = _read(SpectralData.load, args.model, "model spectral data")
    report = validate_spectral_data(data, model)
    print(report)
    return EXIT_OK if report.overall_pass else EXIT_VALIDATION


def cmd_fit(args):
    data = _read(SpectralData.load, args.data, "spectral data file")
    params = fit_asymptotics(data)
    cp = configparser.ConfigParser()
    cp["asymptotics"] = {"n": str(params.n)}
    sec = cp["asymptotics"]
    for k, c in enumerate(params.chi, start=1):
        sec[f"chi{k}"] = f"{c:.17g}"
    for name in ("theta", "t0", "t1", "sigma_int"):
        v = getattr(params, name)
        if v is not None:
            v = complex(v)
            sec[name] = f"{v.real:.17g}" if v.imag == 0 else f"{v.real:.17g}{v.imag:+.17g}j"
    cp["residuals"] = {key: f"{r:.17g}" for key, r in params.residuals.items()}
    with open(args.out + ".part", "w") as fh:
        cp.write(fh)
    os.replace(args.out + ".part", args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_roundtrip(args):
    target = _read(load_coefficients, args.coeffs, "coefficient file")
    L = _positive_int(args.L, "L")
    nodes = _grid_size(args.grid)
    changes = parse_perturbation(args.perturb, target.n)
    model = CoefficientSet.zero(target.n)
    model_data = forward_spectral_data(associated_matrix(model), L, nodes)
    if changes:
        # finite perturbation of the model data; the target is whatever they define
        data = perturb_data(model_data, changes)
        target = None
    else:
        data = forward_spectral_data(associated_matrix(target), L, nodes)
    result = inverse_solve(data, model, L, model_data=model_data, force=args.force)
    x = np.linspace(0.05, 0.95, 181)
    print(f"min sigma_min {np.min(result.sigma_min):.3g}, max residual {np.max(result.residual):.3g}")
    if target is not None:
        for nu, (a, b) in enumerate(zip(result.coefficients.tau, target.tau)):
            fa = a.func if nu == 0 else a
            fb = b.func if nu == 0 else b
            label = "antiderivative of tau_0" if nu == 0 else f"tau_{nu}"
            print(f"{label}: max error {np.max(np.abs(fa(x) - fb(x))):.3g} on [0.05, 0.95]")
    if args.out:
        _write_atomic(args.out, dumps_coefficients(result.coefficients))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="spectralmap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="coefficients -> spectral data")
    f.add_argument("--coeffs", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--L", default=10)
    f.add_argument("--grid", default=129)
    f.add_argument("--csv", help="remainder diagnostics (default: OUT.remainders.csv)")
    f.set_defaults(func=cmd_forward)

    i = sub.add_parser("inverse", help="spectral data -> coefficients")
    i.add_argument("--manifest", help="INI file with an [inverse] section")
    i.add_argument("--data")
    i.add_argument("--model")
    i.add_argument("--model-data", dest="model_data")
    i.add_argument("--out")
    i.add_argument("--L")
    i.add_argument("--grid")
    i.add_argument("--pieces")
    i.add_argument("--degree", help="polynomial degree of the coefficient fit (default depends on the order)")
    i.add_argument("--diagnostics")
    i.add_argument("--force", action="store_true")
    i.add_argument("--perturb-model", dest="perturb_model", type=float)
    i.set_defaults(func=cmd_inverse)

    v = sub.add_parser("validate", help="check spectral data against a model")
    v.add_argument("--data", required=True)
    v.add_argument("--model", required=True, help="model spectral data file")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("fit", help="asymptotic constants from spectral data")
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_fit)

    r = sub.add_parser("roundtrip", help="forward then inverse against the zero model")
    r.add_argument("--coeffs", required=True)
    r.add_argument("--perturb", help="perturb the zero-model data instead: l:k:lam_factor:beta_factor,...")
    r.add_argument("--L", default=10)
    r.add_argument("--grid", default=129)
    r.add_argument("--out")
    r.add_argument("--force", action="store_true")
    r.set_defaults(func=cmd_roundtrip)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationFailure as exc:
        print(f"validation failed: {', '.join(exc.report.failed())}", file=sys.stderr)
        print(exc.report, file=sys.stderr)
        return EXIT_VALIDATION
    except SolvabilityAlarm as exc:
        print(f"solvability alarm: {exc}", file=sys.stderr)
        return EXIT_ALARM
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except SpectralMapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
