"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import circular as C
from . import models
from . import spherical as S
from .estimation import (
    CIRCULAR_MODELS,
    SPHERICAL_MODELS,
    FitError,
    OptimizerConfig,
    fit,
    standard_errors,
)
from .geometry import normalize, spherical_to_cartesian, wrap_angle
from .inference import bootstrap_lrt, kld, lrt_from_logliks, lrt_isotropy_sphere, lrt_rho_one
from .io import DatasetError, parse_dataset, write_csv
from .quadrature import QuadratureError
from .regression import (
    cipc_reg_fit,
    design_matrix,
    gcpc_reg_fit,
    regression_standard_errors,
    sphere_reg_fit,
    spml_fit,
)
from .simstudy import simstudy_run, table_spec

SCHEMA_VERSION = 1
MODEL_CHOICES = ("cipc", "gcpc", "wc", "pn", "spml", "sipc", "sespc", "sc", "esag", "iag")
CIRCLE_MODELS = ("cipc", "gcpc", "wc", "pn", "spml")

LATLON_HELP = (
    "Spherical grids use latitude = 90 - colatitude (degrees, colatitude "
    "measured from the +z axis) and longitude in degrees east of the +x axis."
)


class InputError(ValueError):
    """Invalid command-line input (exit code 2)."""


# --------------------------------------------------------------------------
# helpers


def _floats(s: str | None):
    if s is None:
        return None
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {s!r}") from None


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(type(o).__name__)


def _emit_json(obj, out):
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    text = json.dumps(obj, indent=2, default=_json_default, allow_nan=True)
    _emit_text(text + "\n", out)


def _emit_text(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _emit_rows(rows, header, out):
    if out in (None, "-"):
        write_csv(rows, header, sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            write_csv(rows, header, fh)


def _cfg(args) -> OptimizerConfig:
    kw = {"seed": args.seed}
    if getattr(args, "restarts", None) is not None:
        kw["restarts"] = args.restarts
    if getattr(args, "tol", None) is not None:
        kw["tolerance"] = args.tol
    return OptimizerConfig(**kw)


def _check_pairing(model: str, ds):
    if model in CIRCLE_MODELS and ds.domain != "circle":
        raise InputError(f"model {model!r} needs circular data (theta or y1,y2 columns)")
    if model in SPHERICAL_MODELS and ds.domain != "sphere":
        raise InputError(f"model {model!r} needs spherical data (y1,y2,y3 columns)")


# --------------------------------------------------------------------------
# parameters from flags or JSON


def params_from_dict(model: str, d: dict):
    """Build a parameter object from a flat dict of model parameters.

    Circular locations come from ``mu`` or ``omega`` + ``gamma``; the SESPC and
    ESAG shape pair comes from ``theta`` (SESPC also accepts ``rho`` + ``psi``).
    """
    def loc(dim):
        if d.get("mu") is not None:
            mu = np.asarray(d["mu"], dtype=float)
            if mu.shape != (dim,):
                raise InputError(f"mu must have {dim} components")
            return mu
        if dim == 2 and d.get("omega") is not None and d.get("gamma") is not None:
            return float(d["gamma"]) * np.array([math.cos(d["omega"]), math.sin(d["omega"])])
        raise InputError(f"model {model!r} needs --mu" + (" or --omega/--gamma" if dim == 2 else ""))

    def shape():
        t = d.get("theta")
        if t is None:
            if d.get("rho") is not None and model == "sespc":
                return S.theta_from_rho_psi(float(d["rho"]), float(d.get("psi", 0.0)))
            return (0.0, 0.0)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.size != 2:
            raise InputError("theta needs two components")
        return tuple(t)

    try:
        if model == "cipc":
            return C.CipcParams(loc(2))
        if model == "gcpc":
            if d.get("rho") is None:
                raise InputError("gcpc needs --rho")
            return C.GcpcParams(loc(2), float(d["rho"]))
        if model == "wc":
            lam = d.get("lam")
            if lam is None and d.get("gamma") is not None:
                lam = float(C.lambda_from_gamma(d["gamma"]))
            if lam is None or d.get("omega") is None:
                raise InputError("wc needs --omega and --lam (or --gamma)")
            return C.WcParams(float(d["omega"]), float(lam))
        if model in ("pn", "spml"):
            return C.PnParams(loc(2))
        if model == "sipc":
            return S.SipcParams(loc(3))
        if model == "iag":
            return S.IagParams(loc(3))
        if model == "sespc":
            return S.SespcParams(loc(3), shape())
        if model == "esag":
            return S.EsagParams(loc(3), shape())
        if model == "sc":
            if d.get("lam") is None:
                raise InputError("sc needs --lam")
            return S.ScParams(normalize(loc(3)), float(d["lam"]))
    except InputError:
        raise
    except ValueError as e:
        raise InputError(str(e)) from None
    raise InputError(f"unknown model {model!r}")


def _params_from_args(args):
    d = {}
    if getattr(args, "params", None):
        try:
            with open(args.params) as fh:
                d.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read parameter file: {e}") from None
    for key in ("omega", "gamma", "rho", "lam", "psi"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    for key in ("mu", "theta"):
        v = _floats(getattr(args, key, None))
        if v is not None:
            d[key] = v
    model = d.pop("model", None) or args.model
    return model, params_from_dict(model, d)


def _parse_model_spec(text: str):
    """``kld`` operands: a JSON object (inline or a file path) with a
    ``model`` key plus parameters."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError:
        try:
            with open(text) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot parse model spec {text!r}: {e}") from None
    if "model" not in d:
        raise InputError("model spec needs a 'model' key")
    d = dict(d)
    model = d.pop("model")
    return params_from_dict(model, d)


def _add_param_flags(p):
    p.add_argument("--mu", help="location vector, comma separated")
    p.add_argument("--omega", type=float, help="circular location angle (radians)")
    p.add_argument("--gamma", type=float, help="circular concentration |mu|")
    p.add_argument("--rho", type=float, help="GCPC scatter ratio, or SESPC axis ratio with --psi")
    p.add_argument("--psi", type=float, help="SESPC minor-axis angle in the tangent plane")
    p.add_argument("--lam", type=float, help="wrapped or spherical Cauchy concentration in [0, 1)")
    p.add_argument("--theta", help="SESPC or ESAG shape pair, comma separated")
    p.add_argument("--params", help="JSON file of parameters (may include 'model')")


# --------------------------------------------------------------------------
# derived views


def _derived(res) -> dict:
    out = {}
    p = res.params
    if res.model in ("cipc", "gcpc", "pn"):
        out["omega"] = float(math.atan2(p.mu[1], p.mu[0])) if p.gamma > 0 else None
        out["gamma"] = float(p.gamma)
        if res.model == "cipc":
            out["lambda"] = float(C.lambda_from_gamma(p.gamma))
    elif res.model == "wc":
        out["gamma"] = float(C.gamma_from_lambda(p.lam))
    elif res.model == "sespc":
        rho, psi = S.rho_psi_from_theta(*p.theta)
        out["rho"], out["psi"] = float(rho), float(psi)
    if res.model in SPHERICAL_MODELS and res.model != "sc":
        mu = np.asarray(p.mu, dtype=float)
        out["gamma"] = float(np.linalg.norm(mu))
        out["mean_direction"] = normalize(mu).tolist()
    return out


# --------------------------------------------------------------------------
# commands


def cmd_fit(args):
    ds = parse_dataset(args.data, degrees=args.degrees)
    model = "pn" if args.model == "spml" else args.model
    _check_pairing(model, ds)
    y = ds.unit_vectors()
    res = fit(model, y, _cfg(args))
    if args.se:
        res = standard_errors(res, y)
    report = {"seed": args.seed, "n": ds.n, **res.as_dict(), "derived": _derived(res)}
    if args.test:
        if model == "gcpc":
            small = fit("cipc", y, _cfg(args))
            t = lrt_from_logliks(small.loglik, res.loglik, "mixture", 1)
            report["test"] = {"hypothesis": "rho = 1", **t.as_dict()}
        elif model == "sespc":
            small = fit("sipc", y, _cfg(args))
            t = lrt_from_logliks(small.loglik, res.loglik, "chi2", 2)
            report["test"] = {"hypothesis": "theta = 0", **t.as_dict()}
        else:
            raise InputError("--test is available for gcpc and sespc fits")
    _emit_json(report, args.out)
    return 0 if res.converged else 1


def cmd_regress(args):
    ds = parse_dataset(args.data, degrees=args.degrees)
    _check_pairing(args.model, ds)
    X = design_matrix(ds.covariates, ds.n)
    cfg = _cfg(args)
    if ds.domain == "circle":
        fitter = {"spml": spml_fit, "pn": spml_fit, "cipc": cipc_reg_fit, "gcpc": gcpc_reg_fit}.get(args.model)
        if fitter is None:
            raise InputError(f"no circular regression for model {args.model!r}")
        y = ds.angles()
        res = fitter(y, X, cfg)
    else:
        if args.model not in ("sipc", "sespc", "esag", "iag"):
            raise InputError(f"no spherical regression for model {args.model!r}")
        y = ds.unit_vectors()
        grid = tuple(int(v) for v in _floats(args.grid_size))
        if len(grid) != 3 or min(grid) < 1:
            raise InputError("--grid-size needs three positive integers")
        res = sphere_reg_fit(args.model, y, X, cfg, rotation=args.rotation, grid=grid)
    if args.se:
        res = regression_standard_errors(res, y, X)
    report = {"seed": args.seed, "n": ds.n,
              "design_columns": ["intercept", *ds.covariate_names], **res.as_dict()}
    _emit_json(report, args.out)
    return 0 if res.converged else 1


def cmd_sample(args):
    model, p = _params_from_args(args)
    if args.n < 1:
        raise InputError("-n must be positive")
    draws = models.sample(p, args.n, np.random.default_rng(args.seed))
    if models.domain(p) == "circle":
        vals = np.rad2deg(draws) if args.degrees else draws
        _emit_rows(([v] for v in vals), ["theta"], args.out)
    else:
        _emit_rows(draws.tolist(), ["y1", "y2", "y3"], args.out)
    return 0


def cmd_grid(args):
    model, p = _params_from_args(args)
    if models.domain(p) == "circle":
        if args.points < 2:
            raise InputError("--points must be at least 2")
        theta = -np.pi + 2 * np.pi * np.arange(args.points) / args.points
        f = models.density(p, theta)
        t_out = np.rad2deg(theta) if args.degrees else theta
        _emit_rows(zip(t_out, f), ["theta", "density"], args.out)
        return 0
    if args.transect_lat is not None:
        if args.nlon < 1:
            raise InputError("--nlon must be positive")
        lon = np.linspace(-180.0, 180.0, args.nlon, endpoint=False)
        lat = np.full_like(lon, args.transect_lat)
    elif args.transect_lon is not None:
        if args.nlat < 2:
            raise InputError("--nlat must be at least 2")
        lat = np.linspace(-90.0, 90.0, args.nlat)
        lon = np.full_like(lat, args.transect_lon)
    else:
        if args.nlat < 2 or args.nlon < 1:
            raise InputError("--nlat must be at least 2 and --nlon positive")
        la = np.linspace(-90.0, 90.0, args.nlat)
        lo = np.linspace(-180.0, 180.0, args.nlon, endpoint=False)
        lat, lon = (g.ravel() for g in np.meshgrid(la, lo, indexing="ij"))
    x = spherical_to_cartesian(np.deg2rad(90.0 - lat), np.deg2rad(lon))
    f = models.density(p, x)
    _emit_rows(zip(lon, lat, f), ["longitude", "latitude", "density"], args.out)
    return 0


def cmd_cdf(args):
    model, p = _params_from_args(args)
    if models.domain(p) != "circle":
        raise InputError("cdf is defined for circular models")
    lo, hi = args.lower, args.upper
    if args.degrees:
        lo, hi = math.radians(lo), math.radians(hi)
    report = {"model": model, "lower": lo, "upper": hi}
    if args.method == "closed":
        gp = p if isinstance(p, C.GcpcParams) else None
        if isinstance(p, C.CipcParams):
            gp = C.GcpcParams(p.mu, 1.0)
        if gp is None:
            raise InputError("the closed form is available for cipc and gcpc")
        report["probability"] = C.gcpc_cdf_closed(lo, hi, gp)
    else:
        d = wrap_angle(np.array([lo, hi]))
        F = C.circular_cdf(d, lambda t: models.density(p, t))
        report["probability"] = float(F[1] - F[0]) % 1.0 if hi - lo < 2 * np.pi else 1.0
    report["method"] = args.method
    _emit_json(report, args.out)
    return 0


def cmd_lrt(args):
    ds = parse_dataset(args.data, degrees=args.degrees)
    cfg = _cfg(args)
    if args.hypothesis == "rho1":
        if ds.domain != "circle":
            raise InputError("rho1 needs circular data")
        y = ds.unit_vectors()
        res = lrt_rho_one(y, cfg, null=args.null)
    else:
        if ds.domain != "sphere":
            raise InputError("isotropy needs spherical data")
        y = ds.unit_vectors()
        res = lrt_isotropy_sphere(y, cfg)
    report = {"hypothesis": args.hypothesis, "n": ds.n, **res.as_dict()}
    if args.bootstrap:
        test = "rho1" if args.hypothesis == "rho1" else "isotropy"
        report["bootstrap"] = bootstrap_lrt(y, test, args.bootstrap, args.seed, cfg)
    _emit_json(report, args.out)
    return 0


def cmd_kld(args):
    p = _parse_model_spec(args.p)
    q = _parse_model_spec(args.q)
    val, info = kld(p, q, return_info=True)
    _emit_json({"kld": val, "quadrature": info}, args.out)
    return 0


def cmd_simstudy(args):
    grid = None
    if args.grid:
        if args.table == 5:
            vals = _floats(args.grid)
            if len(vals) % 2:
                raise InputError("table 5 grid needs pairs of values")
            grid = [tuple(vals[i:i + 2]) for i in range(0, len(vals), 2)]
        else:
            grid = _floats(args.grid)
    models_ = tuple(args.models.split(",")) if args.models else None
    sizes = [int(v) for v in _floats(args.sizes)] if args.sizes else None
    try:
        spec = table_spec(args.table, sizes=sizes, B=args.B, seed=args.seed, grid=grid,
                          models=models_, truth_model=args.truth,
                          restarts=args.restarts if args.restarts is not None else 5)
    except ValueError as e:
        raise InputError(str(e)) from None
    res = simstudy_run(spec)
    if args.format == "json":
        _emit_text(res.to_json() + "\n", args.out)
    else:
        _emit_text(res.to_csv() if args.long else res.to_wide_csv(), args.out)
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="projcauchy",
        description="Projected Cauchy models for circular and spherical data.",
        epilog=LATLON_HELP,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("data", help="CSV with theta or y1,y2(,y3) columns and optional x_ covariates")
            p.add_argument("--degrees", action="store_true", help="angles in degrees")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")

    def optim(p):
        p.add_argument("--restarts", type=int, help="number of random restarts")
        p.add_argument("--tol", type=float, help="optimizer tolerance")

    p = sub.add_parser("fit", help="maximum likelihood fit")
    common(p)
    optim(p)
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--se", action="store_true", help="add observed-information standard errors")
    p.add_argument("--test", action="store_true",
                   help="add the likelihood-ratio test against the nested model (gcpc, sespc)")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("regress", help="regression on x_ covariates")
    common(p)
    optim(p)
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--rotation", choices=("grid", "identity"), default="grid",
                   help="spherical models: search the rotation grid or fix it at the identity")
    p.add_argument("--grid-size", default="12,6,12",
                   help="Euler grid a,b,c for the rotation search (cells per angle)")
    p.add_argument("--se", action="store_true")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("sample", help="draw a random sample")
    p.add_argument("model", choices=MODEL_CHOICES)
    _add_param_flags(p)
    common(p, data=False)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--degrees", action="store_true", help="write angles in degrees")
    p.add_argument("--format", choices=("csv",), default="csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("grid", help="density on a grid", epilog=LATLON_HELP)
    p.add_argument("model", choices=MODEL_CHOICES)
    _add_param_flags(p)
    common(p, data=False)
    p.add_argument("--points", type=int, default=360, help="circular grid size")
    p.add_argument("--nlat", type=int, default=181)
    p.add_argument("--nlon", type=int, default=360)
    p.add_argument("--transect-lat", type=float, help="fix latitude (degrees), vary longitude")
    p.add_argument("--transect-lon", type=float, help="fix longitude (degrees), vary latitude")
    p.add_argument("--degrees", action="store_true", help="write circular angles in degrees")
    p.add_argument("--format", choices=("csv",), default="csv")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("cdf", help="probability of an arc")
    p.add_argument("model", choices=CIRCLE_MODELS)
    _add_param_flags(p)
    common(p, data=False)
    p.add_argument("--lower", type=float, required=True)
    p.add_argument("--upper", type=float, required=True)
    p.add_argument("--degrees", action="store_true")
    p.add_argument("--method", choices=("numeric", "closed"), default="numeric")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("lrt", help="likelihood-ratio tests")
    p.add_argument("hypothesis", choices=("rho1", "isotropy"))
    common(p)
    optim(p)
    p.add_argument("--null", choices=("mixture", "chi2"), default="mixture",
                   help="reference law for rho1")
    p.add_argument("--bootstrap", "--B", dest="bootstrap", type=int, default=0,
                   help="number of bootstrap resamples (0 for none)")
    p.set_defaults(func=cmd_lrt)

    p = sub.add_parser("kld", help="Kullback-Leibler divergence KL(p || q)")
    p.add_argument("p", help='JSON model spec, e.g. \'{"model": "gcpc", "mu": [3, 10], "rho": 0.5}\'')
    p.add_argument("q", help="JSON model spec or path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kld, seed=0)

    p = sub.add_parser("simstudy", help="Monte Carlo accuracy and power study")
    p.add_argument("--table", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.add_argument("--B", type=int, default=200, help="replicates per cell")
    p.add_argument("--sizes", help="sample sizes, comma separated")
    p.add_argument("--grid", help="parameter values, comma separated (pairs for table 5)")
    p.add_argument("--models", help="models to fit, comma separated")
    p.add_argument("--truth", choices=("sespc", "esag"), help="truth family for tables 3 to 5")
    p.add_argument("--restarts", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--long", action="store_true",
                   help="one row per (param, n, model) cell with Monte Carlo errors; "
                        "the default CSV has models as rows and (param, n) as columns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simstudy)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FitError, QuadratureError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
