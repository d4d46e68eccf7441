"""Command-line experiment runner.

    cwlab <command> --config run.json [--out DIR]

Every command reads one JSON document, resolves defaults, validates all
parameters before computing and writes ``<command>.json`` or
``<command>.csv`` (plus ``<command>.config.json``) into ``DIR``.  The
resolved configuration is embedded in every output.  Exit codes: 0 success,
1 I/O or JSON syntax error, 2 invalid configuration or parameters,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .delay import DelayParams, fit_decay_rate, simulate
from .errors import BelowInghamTime, InvalidParams, NumericalError, ValidationError
from .galerkin import (
    InitialData,
    OperatorQuadruple,
    conjugation_residual,
    estimate_delta,
    random_quadruple,
    transfer_resolvent_pair,
    validate_quadruple,
)
from .models import ModalState, ModelConfig, assemble_model, mode_frequencies, modal_initial_data

COMMANDS = ("validate", "simulate", "decay", "transfer", "observability", "criterion", "conjugacy")


class ConfigError(InvalidParams):
    pass


# --------------------------------------------------------------------------
# config helpers
# --------------------------------------------------------------------------


def _section(doc, key, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigError(f"missing required field {key!r}")
        return default
    return doc[key]


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field(s) {extra} in {where}")


def _number(doc, key, default=None, required=False, kind=float):
    value = _section(doc, key, default, required)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"field {key!r} must be an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"field {key!r} must be finite")
    return value


def _model(doc):
    m = _section(doc, "model", required=True)
    _check_keys(m, ("kind", "beta", "xi", "N"), "model")
    cfg = ModelConfig(
        _section(m, "kind", required=True),
        _number(m, "beta", required=True),
        _number(m, "xi", required=True),
        _number(m, "N", required=True, kind=int),
    )
    return cfg


def _quadruple(doc, rng):
    """A quadruple from ``quadruple``, ``random_quadruple`` or ``model``; returns ``(q, resolved)``."""
    present = [k for k in ("quadruple", "random_quadruple", "model") if k in doc]
    if len(present) != 1:
        raise ConfigError("give exactly one of 'quadruple', 'random_quadruple', 'model'")
    key = present[0]
    if key == "quadruple":
        q = OperatorQuadruple.from_dict(doc["quadruple"])
        return q, {"quadruple": q.to_dict()}
    if key == "random_quadruple":
        r = doc["random_quadruple"]
        _check_keys(r, ("n1", "n2", "m"), "random_quadruple")
        n1 = _number(r, "n1", required=True, kind=int)
        n2 = _number(r, "n2", required=True, kind=int)
        m = _number(r, "m", 1, kind=int)
        if min(n1, n2, m) < 1:
            raise ConfigError("random_quadruple dimensions must be positive")
        return random_quadruple(rng, n1, n2, m), {"random_quadruple": {"n1": n1, "n2": n2, "m": m}}
    cfg = _model(doc)
    return assemble_model(cfg).quad, {"model": cfg.to_dict()}


def _delay(doc):
    d = _section(doc, "delay", required=True)
    _check_keys(d, ("alpha1", "alpha2", "tau", "mu"), "delay")
    return DelayParams(
        _number(d, "alpha1", required=True),
        _number(d, "alpha2", required=True),
        _number(d, "tau", required=True),
        _number(d, "mu"),
    )


def _initial(doc, model, rng):
    spec = dict(_section(doc, "initial", {"type": "random"}))
    kind = spec.get("type", "random")
    n1, n2, _ = model.quad.dims
    if kind == "zero":
        _check_keys(spec, ("type",), "initial")
        return InitialData.zeros(model.quad), {"type": "zero"}
    if kind == "random":
        _check_keys(spec, ("type",), "initial")
        k1 = 1.0 + np.arange(n1)
        k2 = 1.0 + np.arange(n2)
        w1 = rng.standard_normal(n1) / k1**2
        d1 = rng.standard_normal(n1) / k1
        d2 = rng.standard_normal(n2) / k2
        return InitialData(w1, np.zeros(n2), d1, d2), {"type": "random"}
    if kind == "explicit":
        _check_keys(spec, ("type", "w1", "w2", "w1dot", "w2dot"), "initial")
        parts = []
        for key, n in (("w1", n1), ("w2", n2), ("w1dot", n1), ("w2dot", n2)):
            v = np.asarray(spec.get(key, np.zeros(n)), dtype=float)
            if v.shape != (n,):
                raise ConfigError(f"initial.{key} must have length {n}")
            parts.append(v)
        init = InitialData(*parts)
        return init, {"type": "explicit", **{k: v.tolist() for k, v in zip(InitialData._fields, parts)}}
    if kind in ("modes", "weak_modes"):
        allowed = ("type", "n", "branch", "formula") if kind == "modes" else ("type", "count", "n_min", "formula")
        _check_keys(spec, allowed, "initial")
        formula = spec.get("formula", "exact")
        if kind == "modes":
            n = np.asarray(_section(spec, "n", required=True), dtype=int)
        else:
            count = _number(spec, "count", 3, kind=int)
            n_min = _number(spec, "n_min", None, kind=int)
            n = analysis.weak_modes(model.cfg, count, n_min)
        branch = np.asarray(spec.get("branch", np.ones_like(n)), dtype=int)
        if branch.shape != n.shape:
            raise ConfigError("initial.branch must match initial.n")
        lam = mode_frequencies(model.cfg, n, branch, formula)
        state = ModalState(n, branch, lam, np.ones(len(n)))
        resolved = {"type": "modes", "n": n.tolist(), "branch": branch.tolist(), "formula": formula}
        return modal_initial_data(model, state), resolved
    raise ConfigError(f"unknown initial data type {kind!r}")


def _history(doc, model):
    spec = dict(_section(doc, "history", {"type": "zero"}))
    kind = spec.get("type", "zero")
    if kind == "zero":
        _check_keys(spec, ("type",), "history")
        return None, {"type": "zero"}
    if kind == "constant":
        _check_keys(spec, ("type", "w1dot"), "history")
        n1 = model.quad.dims[0]
        v = np.asarray(_section(spec, "w1dot", required=True), dtype=float)
        if v.shape != (n1,):
            raise ConfigError(f"history.w1dot must have length {n1}")
        return (lambda s: v), {"type": "constant", "w1dot": v.tolist()}
    raise ConfigError(f"unknown history type {kind!r}")


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write_json(out, name, payload, config):
    path = out / f"{name}.json"
    path.write_text(_dump({"config": config, **payload}))
    return [path]


def _write_sidecar(out, name, config):
    path = out / f"{name}.config.json"
    path.write_text(_dump(config))
    return path


def _cplx(z):
    return [float(z.real), float(z.imag)]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_validate(doc, rng, out):
    _check_keys(doc, ("seed", "quadruple", "random_quadruple", "model"), "config")
    q, resolved = _quadruple(doc, rng)
    config = {"seed": doc.get("seed", 0), **resolved}
    report = validate_quadruple(q)
    delta = estimate_delta(q)
    payload = {
        "dims": list(q.dims),
        "report": report.to_dict(),
        "delta": {"delta_min": delta.delta_min, "admissible": delta.admissible},
    }
    return _write_json(out, "validate", payload, config)


def _simulation_inputs(doc, rng):
    cfg = _model(doc)
    params = _delay(doc)
    dt = _number(doc, "dt", 1 / 128)
    T = _number(doc, "T", 10.0)
    model = assemble_model(cfg)
    init, init_res = _initial(doc, model, rng)
    history, hist_res = _history(doc, model)
    config = {
        "seed": doc.get("seed", 0),
        "model": cfg.to_dict(),
        "delay": params.to_dict(),
        "dt": dt,
        "T": T,
        "initial": init_res,
        "history": hist_res,
    }
    return model, params, init, history, dt, T, config


SIM_KEYS = ("seed", "model", "delay", "dt", "T", "initial", "history")


def cmd_simulate(doc, rng, out):
    _check_keys(doc, SIM_KEYS, "config")
    model, params, init, history, dt, T, config = _simulation_inputs(doc, rng)
    trace, _ = simulate(model, params, init, dt, T, history)
    path = out / "simulate.csv"
    trace.to_csv(path)
    return [path, _write_sidecar(out, "simulate", config)]


def cmd_decay(doc, rng, out):
    _check_keys(doc, SIM_KEYS + ("window",), "config")
    model, params, init, history, dt, T, config = _simulation_inputs(doc, rng)
    window = doc.get("window", [0.0, T])
    if not (isinstance(window, list) and len(window) == 2):
        raise ConfigError("window must be a two-element list")
    window = (float(window[0]), float(window[1]))
    config["window"] = list(window)
    trace, _ = simulate(model, params, init, dt, T, history)
    fit = fit_decay_rate(trace, window)
    steps = np.diff(trace.Ed) / np.where(trace.Ed[:-1] > 0, trace.Ed[:-1], 1.0)
    inf, argmin = analysis.modal_infimum(model.cfg, 10 * model.cfg.N)
    payload = {
        "fit": {
            "omega": fit.omega,
            "C": fit.C,
            "residual": fit.residual,
            "window": list(fit.window),
            "n_samples": fit.n_samples,
        },
        "decays": bool(fit.omega > 0),
        "Ed_initial": float(trace.Ed[0]),
        "Ed_final": float(trace.Ed[-1]),
        "max_relative_step_increase": float(np.max(steps)) if steps.size else 0.0,
        "modal_infimum": inf,
        "argmin_n": argmin,
    }
    return _write_json(out, "decay", payload, config)


GRID_DEFAULTS = {"re_min": 0.5, "re_max": 2.0, "n_re": 4, "im_min": -50.0, "im_max": 50.0, "n_im": 51}


def _lambda_grid(spec):
    _check_keys(spec, tuple(GRID_DEFAULTS), "grid")
    g = {k: _number(spec, k, v, kind=int if k.startswith("n_") else float) for k, v in GRID_DEFAULTS.items()}
    if g["n_re"] < 1 or g["n_im"] < 1:
        raise ConfigError("grid sizes must be positive")
    re = np.linspace(g["re_min"], g["re_max"], g["n_re"])
    im = np.linspace(g["im_min"], g["im_max"], g["n_im"])
    return (re[:, None] + 1j * im[None, :]).ravel(), g


def cmd_transfer(doc, rng, out):
    _check_keys(doc, ("seed", "model", "grid", "lambdas", "methods", "vertical_line"), "config")
    cfg = _model(doc)
    if "lambdas" in doc:
        lams = np.array([complex(*pair) for pair in doc["lambdas"]])
        grid_res = {"lambdas": [_cplx(z) for z in lams]}
    else:
        lams, grid = _lambda_grid(doc.get("grid", {}))
        grid_res = {"grid": grid}
    if np.any(lams.real <= 0):
        raise InvalidParams("every lambda must have positive real part")
    methods = list(doc.get("methods", analysis.transfer.METHODS))
    config = {"seed": doc.get("seed", 0), "model": cfg.to_dict(), "methods": methods, **grid_res}
    vl = doc.get("vertical_line")
    if vl is not None:
        _check_keys(vl, ("gamma", "omega_max", "n_samples"), "vertical_line")
        vl = {
            "gamma": _number(vl, "gamma", 1.0),
            "omega_max": _number(vl, "omega_max", 50.0),
            "n_samples": _number(vl, "n_samples", 1001, kind=int),
        }
        config["vertical_line"] = vl
        analysis.paper_h1_bound(cfg, vl["gamma"])
    samples = analysis.scan(cfg, lams, methods)
    path = out / "transfer.csv"
    analysis.write_scan_csv(samples, path)
    written = [path, _write_sidecar(out, "transfer", config)]
    if vl is not None:
        res = analysis.vertical_line_sup(cfg, vl["gamma"], vl["omega_max"], vl["n_samples"])
        written += _write_json(out, "vertical_line", res.to_dict(), config)
    return written


def cmd_observability(doc, rng, out):
    _check_keys(doc, ("seed", "model", "T", "T_factor", "batches", "draws", "n_max", "formula", "N_scan"), "config")
    cfg = _model(doc)
    thr = analysis.ingham_threshold(cfg)
    T = _number(doc, "T")
    factor = _number(doc, "T_factor", 1.5)
    if T is None:
        T = factor * thr
    batches = _number(doc, "batches", 2, kind=int)
    draws = _number(doc, "draws", 50, kind=int)
    n_max = _number(doc, "n_max", cfg.N, kind=int)
    formula = doc.get("formula", "paper")
    N_scan = _number(doc, "N_scan", 10 * cfg.N, kind=int)
    if batches < 1 or draws < 1:
        raise InvalidParams("batches and draws must be positive")
    if not T > thr:
        raise BelowInghamTime(f"horizon T={T} must exceed the Ingham threshold {thr:.12g}")
    config = {
        "seed": doc.get("seed", 0),
        "model": cfg.to_dict(),
        "T": T,
        "batches": batches,
        "draws": draws,
        "n_max": n_max,
        "formula": formula,
        "N_scan": N_scan,
    }
    summary = []
    for _ in range(batches):
        ratios = []
        for _ in range(draws):
            state = analysis.random_state(cfg, rng, n_max, formula)
            ratios.append(analysis.ingham_ratio(cfg, state, T).ratio)
        ratios = np.asarray(ratios)
        summary.append(
            {"min_ratio": float(ratios.min()), "max_ratio": float(ratios.max()), "mean_ratio": float(ratios.mean())}
        )
    inf, argmin = analysis.modal_infimum(cfg, N_scan)
    payload = {
        "ingham_threshold": thr,
        "batches": summary,
        "modal_infimum": inf,
        "argmin_n": argmin,
    }
    return _write_json(out, "observability", payload, config)


def cmd_criterion(doc, rng, out):
    _check_keys(doc, ("seed", "xi", "denom_cap", "tol", "N_scan"), "config")
    xi = _number(doc, "xi", required=True)
    cap = _number(doc, "denom_cap", analysis.criterion.DEFAULT_DENOM_CAP, kind=int)
    tol = _number(doc, "tol", analysis.criterion.DEFAULT_TOL)
    N_scan = _number(doc, "N_scan", None, kind=int)
    verdict = analysis.stability_criterion(xi, cap, tol, N_scan)
    config = {"seed": doc.get("seed", 0), "xi": xi, "denom_cap": cap, "tol": tol, "N_scan": verdict.N_scan}
    return _write_json(out, "criterion", verdict.to_dict(), config)


def cmd_conjugacy(doc, rng, out):
    _check_keys(doc, ("seed", "quadruple", "random_quadruple", "model", "lambdas"), "config")
    q, resolved = _quadruple(doc, rng)
    validate_quadruple(q)
    lams = [complex(*pair) for pair in doc.get("lambdas", [[1.0, 2.0]])]
    config = {"seed": doc.get("seed", 0), **resolved, "lambdas": [_cplx(z) for z in lams]}
    rows = []
    for lam in lams:
        triple = transfer_resolvent_pair(q, lam)
        rows.append({"lambda": _cplx(lam), "max_discrepancy": triple.max_discrepancy()})
    payload = {
        "conjugation_residual": conjugation_residual(q),
        "conjugation_residual_open_loop": conjugation_residual(q, damping=False),
        "transfer": rows,
    }
    return _write_json(out, "conjugacy", payload, config)


HANDLERS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "decay": cmd_decay,
    "transfer": cmd_transfer,
    "observability": cmd_observability,
    "criterion": cmd_criterion,
    "conjugacy": cmd_conjugacy,
}


def run(command, config_path, out_dir="."):
    """Execute ``command``; returns the list of written paths. Raises on failure."""
    doc = json.loads(Path(config_path).read_text())
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    seed = _number(doc, "seed", 0, kind=int)
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    doc["seed"] = seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    return HANDLERS[command](doc, rng, out)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cwlab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    args = parser.parse_args(argv)
    try:
        written = run(args.command, args.config, args.out)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"cwlab: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"cwlab: invalid input: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"cwlab: invalid config: {exc!r}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"cwlab: numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
