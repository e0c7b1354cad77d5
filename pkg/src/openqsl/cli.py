"""``qsl`` command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bd
from . import dynamics as dy
from . import experiments as ex
from .core import validate_density
from .errors import ConfigError, DensityError, NumericalError, QSLError
from .svg import render

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_CONFIG = 0, 2, 3, 4

CONFIG_KEYS = {"experiment", "seed", "out", "svg", "params"}
SATURATION_MODELS = {"gad": "gad-saturation", "dephasing": "dephasing-saturation", "nonmarkov": "nonmarkov"}


# --------------------------------------------------------------------------- #
# Serialization
# --------------------------------------------------------------------------- #


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(_jsonable(obj), indent=2) + "\n"
    if path is not None:
        path.write_text(text)
    return text


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _is_number(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, (bool, np.bool_))


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _split_finite(result: ex.ExperimentResult) -> tuple[list[str], list[dict], list[dict]]:
    """Keep numeric columns only and move rows with non-finite values to the error list."""
    columns = [c for c in result.columns if all(_is_number(r.get(c)) for r in result.rows)] if result.rows else list(result.columns)
    rows, errors = [], list(result.errors)
    for row in result.rows:
        bad = [c for c in columns if not math.isfinite(float(row[c]))]
        if bad:
            errors.append({**{k: row[k] for k in columns if k not in bad}, "reason": f"non-finite {','.join(bad)}"})
        else:
            rows.append(row)
    return columns, rows, errors


def _error_columns(errors: list[dict]) -> list[str]:
    cols: list[str] = []
    for err in errors:
        for key in err:
            if key not in cols and key != "reason":
                cols.append(key)
    return cols + ["reason"]


def write_outputs(result: ex.ExperimentResult, manifest: dict, out_dir: Path, svg: bool) -> Path:
    target = out_dir / result.experiment
    target.mkdir(parents=True, exist_ok=True)
    columns, rows, errors = _split_finite(result)
    write_csv(target / "data.csv", columns, rows)
    write_csv(target / "errors.csv", _error_columns(errors), [{k: _cell_value(v) for k, v in e.items()} for e in errors])
    dump_json(result.summary, target / "summary.json")
    outputs = ["data.csv", "errors.csv", "summary.json", "manifest.json"]
    if svg and result.plot is not None:
        (target / "plot.svg").write_text(render(result.plot))
        outputs.append("plot.svg")
    dump_json({**manifest, "outputs": outputs}, target / "manifest.json")
    return target


def _cell_value(v):
    return json.dumps(_jsonable(v)) if isinstance(v, (list, tuple, np.ndarray)) else v


# --------------------------------------------------------------------------- #
# Config resolution
# --------------------------------------------------------------------------- #


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}; allowed: {sorted(CONFIG_KEYS)}")
    if "params" in cfg and not isinstance(cfg["params"], dict):
        raise ConfigError("config 'params' must be an object")
    return cfg


def resolve(experiment: str, args: argparse.Namespace) -> tuple[dict, int, Path, bool]:
    cfg = load_config(args.config)
    if cfg.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {cfg['experiment']!r}, command runs {experiment!r}")
    overrides = dict(cfg.get("params", {}))
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_value(value)
    if getattr(args, "samples", None) is not None:
        overrides["samples"] = args.samples
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if args.dt is not None:
        if "dt" not in ex.DEFAULTS[experiment]:
            raise ConfigError(f"--dt does not apply to {experiment}")
        overrides["dt"] = args.dt
    if getattr(args, "scan", None) is not None:
        overrides["scan"] = args.scan
    if getattr(args, "rate_csv", None) is not None:
        overrides["rate_csv"] = args.rate_csv
    params = ex.resolve_params(experiment, overrides)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    out = Path(args.out if args.out is not None else cfg.get("out", "qsl-out"))
    svg = bool(args.svg or cfg.get("svg", False))
    return params, seed, out, svg


def run_experiment(experiment: str, args: argparse.Namespace) -> int:
    params, seed, out, svg = resolve(experiment, args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = ex.run(experiment, params, seed)
    notes = [str(w.message) for w in caught]
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    if notes:
        result.summary["warnings"] = notes
    manifest = {"experiment": experiment, "version": __version__, "seed": seed, "params": params, "svg": svg}
    target = write_outputs(result, manifest, out, svg)
    print(dump_json(result.summary), end="")
    print(f"wrote {target}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# bounds
# --------------------------------------------------------------------------- #


def _entry(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex entry must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"matrix entry must be a number or [re, im], got {value!r}")
    return complex(value)


def _matrix(obj, name: str) -> np.ndarray:
    """Square matrix from rows of numbers or ``[re, im]`` pairs, or a ``{"re": ..., "im": ...}`` object."""
    try:
        if isinstance(obj, dict):
            m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
        else:
            if not isinstance(obj, list) or not all(isinstance(row, list) for row in obj):
                raise ValueError("expected a list of rows")
            widths = {len(row) for row in obj}
            if len(widths) != 1:
                raise ValueError("rows have different lengths")
            m = np.array([[_entry(v) for v in row] for row in obj], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{name}: malformed matrix ({exc})") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {m.shape}")
    return m


def _take(params: dict, allowed: dict, model: str) -> dict:
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)} for model {model!r}; allowed: {sorted(allowed)}")
    return {**allowed, **params}


def trajectory_from_doc(doc: dict) -> dy.Trajectory:
    """Build the trajectory described by a ``bounds`` input document."""
    if "model" not in doc:
        p = _take(doc, {"rho0": None, "rho_tau": None, "beta": "linear", "tau": 1.0, "grid": 257}, "state-pair")
        if p["rho0"] is None or p["rho_tau"] is None:
            raise ValueError("state-pair input needs 'rho0' and 'rho_tau'")
        a = validate_density(_matrix(p["rho0"], "rho0"))
        b = validate_density(_matrix(p["rho_tau"], "rho_tau"))
        return bd.geodesic_path(a, b, p["beta"], int(p["grid"]), float(p["tau"]))

    model, raw = doc["model"], doc.get("params", {})
    extra = set(doc) - {"model", "params"}
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} next to 'model'")
    if model == "geodesic":
        return trajectory_from_doc(raw)
    if model == "gad":
        p = _take(raw, {"excited": 0.6, "gamma": 1.0, "q_tau": 0.5, "tau": None, "grid": 1025}, model)
        gp = dy.GADParams.qubit(float(p["excited"]), float(p["gamma"]))
        tau = float(p["tau"] or -math.log(float(p["q_tau"])) / float(p["gamma"]))
        return dy.gad_trajectory(gp, tau, int(p["grid"]))
    if model == "nonmarkov":
        p = _take(raw, {"excited": 0.6, "gamma0": 5.0, "lam": 1.0, "tau": None, "grid": 1025}, model)
        rate = dy.NonMarkovRate(float(p["gamma0"]), float(p["lam"]))
        tau = float(p["tau"] or ex.nonmarkov_period(rate))
        return dy.gad_trajectory(dy.GADParams.qubit(float(p["excited"]), rate), tau, int(p["grid"]))
    if model == "dephasing":
        p = _take(raw, {"ratio": 1.0, "gamma_tau": 1.0, "tau": 1.0, "grid": 1025}, model)
        r = float(p["ratio"])
        rho0 = validate_density(np.array([[0.5, r / 2], [r / 2, 0.5]], dtype=complex))
        tau = float(p["tau"])
        return dy.dephasing_trajectory(dy.DephasingParams.linear(rho0, float(p["gamma_tau"]) / tau), tau, int(p["grid"]))
    if model == "kraus":
        p = _take(raw, {"c": 0.5, "rho11": 0.5, "tau": 50.0, "p_scale": 100.0, "grid": 1025}, model)
        kp = dy.ThermalKrausParams.pure(float(p["c"]), float(p["rho11"]), float(p["p_scale"]))
        return dy.kraus_trajectory(kp, float(p["tau"]), int(p["grid"]))
    if model == "appendix-b":
        p = _take(raw, {"theta": math.pi / 4, "omega_l": 2.0, "gamma": 0.5, "r0": [0.5, 0.0, 0.5], "tau": 2.0, "grid": 1025}, model)
        ab = dy.AppendixBParams(float(p["theta"]), float(p["omega_l"]), float(p["gamma"]), tuple(p["r0"]))
        return dy.appendix_b_trajectory(ab, float(p["tau"]), int(p["grid"]))
    if model == "unitary":
        p = _take(raw, {"hamiltonian": None, "rho0": None, "tau": 1.0, "grid": 1025}, model)
        if p["hamiltonian"] is None or p["rho0"] is None:
            raise ValueError("unitary model needs 'hamiltonian' and 'rho0'")
        rho0 = validate_density(_matrix(p["rho0"], "rho0"))
        return dy.unitary_trajectory(_matrix(p["hamiltonian"], "hamiltonian"), rho0, float(p["tau"]), int(p["grid"]))
    raise ConfigError(f"unknown model {model!r}; choose from appendix-b, dephasing, gad, geodesic, kraus, nonmarkov, unitary")


def _zero_report(traj: dy.Trajectory) -> dict:
    rep = {f: 0.0 for f in bd.BoundReport.__dataclass_fields__ if f != "model_tag"}
    rep["tau"] = traj.tau
    rep["model_tag"] = traj.model_tag
    return rep


def cmd_bounds(args: argparse.Namespace) -> int:
    text = args.input_json if args.input_json is not None else _read_input(args.input)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"input is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("input must be a JSON object")
    traj = trajectory_from_doc(doc)
    if np.array_equal(traj.states[0], traj.states[-1]) and bd.path_length(traj, "E") == 0.0:
        out = _zero_report(traj)
    else:
        out = bd.report(traj, refine=args.refine).to_dict()
    print(dump_json(out), end="")
    return EXIT_OK


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with experiment, seed, out, svg and params")
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--out", default=None, help="output root (default ./qsl-out)")
    p.add_argument("--svg", action="store_true", help="also write plot.svg")
    p.add_argument("--dt", type=float, default=None, help="RK4 step where applicable")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="override one parameter (JSON value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsl", description="Quantum speed limits for open-system trajectories.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="bound report for a state pair or a named model")
    b.add_argument("input", nargs="?", help="JSON file ('-' or omitted reads stdin)")
    b.add_argument("--json", dest="input_json", help="inline JSON input")
    b.add_argument("--refine", action="store_true", help="refine quadrature until lengths converge")

    f2 = sub.add_parser("fig2", help="random bipartite dynamics: purity vs tau_qsl - tau_E")
    _common(f2)
    f2.add_argument("--samples", type=int, default=None)
    f2.add_argument("--workers", type=int, default=None)

    for name, text in (("fig3a", "thermal Kraus ratio grid, c = 0.5"), ("fig3b", "thermal Kraus bound comparison, c = 0")):
        _common(sub.add_parser(name, help=text))

    s = sub.add_parser("saturation", help="saturation checks for GAD, dephasing or non-Markovian GAD")
    _common(s)
    s.add_argument("--model", choices=sorted(SATURATION_MODELS), default="gad")
    s.add_argument("--rate-csv", dest="rate_csv", default=None, help="tabulated decay rate t,gamma for --model gad")

    ab = sub.add_parser("appendix-b", help="geodesic classifier for the driven damped qubit")
    _common(ab)
    ab.add_argument("--scan", dest="scan", action="store_true", default=None, help="scan the built-in (theta, r0) grid")
    ab.add_argument("--no-scan", dest="scan", action="store_false", help="check the single configured case")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "bounds":
        return cmd_bounds(args)
    if args.command == "saturation":
        if args.rate_csv is not None and args.model != "gad":
            raise ConfigError("--rate-csv applies to --model gad only")
        return run_experiment(SATURATION_MODELS[args.model], args)
    return run_experiment(args.command, args)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DensityError as exc:
        msg = str(exc)
        if not msg.startswith(exc.invariant):
            msg = f"{exc.invariant}: {msg}"
        print(f"validation error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (QSLError, ValueError) as exc:
        print(f"validation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
