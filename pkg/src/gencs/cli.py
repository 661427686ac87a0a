"""Command-line front end: ``gencs {expect,evolve,bch,validate} --config FILE``.

Exit codes: 0 success, 1 validation above tolerance, 2 configuration or input
errors, 3 numerical failures (the error name is printed and written out).
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import hashlib
import json
import math
import os
import sys

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import ConfigurationError, GencsError, InputError
from .families import FAMILIES, make_family
from .operators import OperatorExpr
from .standard_form import GenState, expectations

OUT_DIR_ENV = "GENCS_OUTPUT_DIR"
COMMANDS = ("expect", "evolve", "bch", "validate")

_num = {"type": "number"}
_vec = {"type": "array", "items": _num}
SCHEMA = {
    "type": "object",
    "required": ["system"],
    "additionalProperties": False,
    "properties": {
        "job": {"enum": list(COMMANDS)},
        "output": {"type": "string"},
        "system": {
            "type": "object",
            "required": ["kind", "n"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": sorted(FAMILIES)},
                "n": {"type": "integer", "minimum": 1, "maximum": 64},
                "cutoff": {"type": "integer", "minimum": 1},
            },
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "K1": _vec,
                "K2": _vec,
                "M": {"type": "array", "items": _vec},
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "seed": {"type": "integer", "minimum": 0},
                        "k_norm": {"type": "number", "minimum": 0},
                        "m_scale": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
        "observables": {
            "oneOf": [
                {"type": "object", "additionalProperties": {"type": "string"}},
                {"type": "array", "items": {"type": "string"}},
            ]
        },
        "hamiltonian": {"type": "string"},
        "evolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["imaginary", "real"]},
                "real_form": {"enum": ["mclachlan", "lagrangian"]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 0},
                "cutoff": {"type": "number", "exclusiveMinimum": 0},
                "freeze_M": {"type": "boolean"},
                "format": {"enum": ["json", "csv"]},
            },
        },
        "bch": {
            "type": "object",
            "additionalProperties": False,
            "required": ["K"],
            "properties": {
                "K": _vec,
                "method": {"enum": ["analytic", "generic", "both"]},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fixtures": {"type": "integer", "minimum": 1},
                "max_degree": {"type": "integer", "minimum": 0, "maximum": 6},
                "words": {"enum": ["all", "sorted"]},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "k_norm": {"type": "number", "minimum": 0},
                "m_scale": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
    },
}


# -- output ----------------------------------------------------------------
def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every float at 17 significant digits and complex as ``[re, im]``."""
    pad, nxt = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{nxt}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(nxt + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# -- config ----------------------------------------------------------------
def load_config(path: str) -> dict:
    """Parse and schema-check a config file.

    Raises
    ------
    ConfigurationError
        With line/column for syntax errors and the field path for schema errors.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    check_config(config, path)
    return config


def check_config(config: dict, source: str = "config") -> None:
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(config), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            where = ".".join(str(p) for p in e.path) or "(root)"
            lines.append(f"{source}: field {where}: {e.message}")
        raise ConfigurationError("\n".join(lines))


def build_state(config: dict, family) -> GenState:
    sc = config.get("state", {"random": {}})
    if "random" in sc:
        if any(k in sc for k in ("K1", "K2", "M")):
            raise ConfigurationError("field state: give either 'random' or explicit K1/K2/M")
        r = sc["random"]
        rng = np.random.default_rng(r.get("seed", 0))
        return GenState.random(family, rng, r.get("k_norm", 1.0), r.get("m_scale", 1.0))
    dim, ell = family.algebra.dim, family.rank
    K1 = np.asarray(sc.get("K1", np.zeros(dim)), float)
    K2 = np.asarray(sc.get("K2", np.zeros(dim)), float)
    M = np.asarray(sc.get("M", np.zeros((ell, ell))), float)
    for name, v, shape in (("K1", K1, (dim,)), ("K2", K2, (dim,)), ("M", M, (ell, ell))):
        if v.shape != shape:
            raise ConfigurationError(f"field state.{name}: expected shape {shape}, got {v.shape}")
    if np.abs(M - M.T).max(initial=0.0) > 1e-12:
        raise ConfigurationError("field state.M: matrix must be symmetric")
    return GenState.from_params(family, K1, M, K2)


def _parse_text(family, text: str, field: str) -> OperatorExpr:
    try:
        return OperatorExpr.parse(family, text)
    except InputError as exc:
        raise ConfigurationError(f"field {field}: {exc}") from exc


def _observables(config, family):
    obs = config.get("observables")
    if obs is None:
        raise ConfigurationError("field observables: required for 'expect'")
    items = obs.items() if isinstance(obs, dict) else ((f"O{k}", t) for k, t in enumerate(obs))
    return [(name, _parse_text(family, text, f"observables.{name}")) for name, text in items]


# -- jobs ------------------------------------------------------------------
def _factors_dict(family, g):
    f = family.analytic_factors(g)
    return {**f.to_dict(), "residual": f.info["residual"]}


def job_expect(config, family, args):
    state = build_state(config, family)
    named = _observables(config, family)
    vals = expectations(state, [o for _, o in named], max_degree=64)
    out = {"values": {name: complex(v) for (name, _), v in zip(named, vals)}}
    if args.dump_factors:
        out["factors"] = {"g1": _factors_dict(family, state.g1), "g2": _factors_dict(family, state.g2)}
    return out, 0


def job_evolve(config, family, args):
    from .variational import evolve

    state = build_state(config, family)
    if "hamiltonian" not in config:
        raise ConfigurationError("field hamiltonian: required for 'evolve'")
    H = _parse_text(family, config["hamiltonian"], "hamiltonian")
    ev = config.get("evolution", {})
    traj = evolve(
        state,
        H,
        mode=ev.get("mode", "imaginary"),
        dt=ev.get("dt", 0.05),
        steps=ev.get("steps", 100),
        real_form=ev.get("real_form", "mclachlan"),
        cutoff=ev.get("cutoff", 1e-10),
        freeze_M=ev.get("freeze_M", False),
    )
    return {"trajectory": traj.to_rows(), "format": ev.get("format", "json")}, 0


def job_bch(config, family, args):
    from .bch import RMatrix, bch_split_generic

    bc = config.get("bch")
    if bc is None:
        raise ConfigurationError("field bch: required for 'bch'")
    spec = family.algebra
    K = np.asarray(bc["K"], float)
    if K.shape != (spec.dim,):
        raise ConfigurationError(f"field bch.K: expected {spec.dim} coordinates, got {K.size}")
    method = bc.get("method", "both")
    g = family.group(K)
    out = {"algebra": spec.name}
    found = {}
    if method in ("analytic", "both"):
        found["analytic"] = family.analytic_factors(g)
    if method in ("generic", "both"):
        found["generic"] = bch_split_generic(spec, K, tol=bc.get("tol", 1e-11))
    for name, f in found.items():
        entry = {**f.to_dict(), "residual": f.residual(spec, K)}
        if "steps" in f.info:
            entry["steps"] = f.info["steps"]
        if args.dump_factors:
            Tp, T0, Tm = f.matrices(spec)
            entry["matrices"] = {"T_plus": Tp, "T_zero": T0, "T_minus": Tm}
            entry["R"] = RMatrix.from_factors(spec, f).R
        out[name] = entry
    if len(found) == 2:
        a, b = found["analytic"], found["generic"]
        out["max_difference"] = float(
            max(np.abs(a.A_plus - b.A_plus).max(initial=0), np.abs(a.A_minus - b.A_minus).max(initial=0))
        )
    return out, 0


def job_validate(config, family, args):
    from .validation import DEFAULT_TOL, validate

    vc = config.get("validate", {})
    kind = config["system"]["kind"]
    seed = args.seed if args.seed is not None else vc.get("seed", 0)
    res = validate(
        kind,
        config["system"]["n"],
        fixtures=vc.get("fixtures", 5),
        max_degree=vc.get("max_degree", 3),
        seed=seed,
        k_norm=vc.get("k_norm", 0.3 if kind == "boson" else 1.0),
        m_scale=vc.get("m_scale", 1.0),
        words=vc.get("words", "all"),
    )
    tol = vc.get("tolerance", DEFAULT_TOL[kind])
    res["tolerance"] = tol
    res["passed"] = bool(res["max_deviation"] < tol)
    return res, 0 if res["passed"] else 1


JOBS = {"expect": job_expect, "evolve": job_evolve, "bch": job_bch, "validate": job_validate}


# -- driver ----------------------------------------------------------------
def _out_path(args, config, command, ext):
    path = args.out or config.get("output") or f"{command}.{ext}"
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    return path


def _header(config, command):
    return {"tool": "gencs", "version": __version__, "config_sha256": config_hash(config), "command": command}


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _write_csv(path, head, rows):
    lines = [f"# {k}={v}" for k, v in head.items()]
    n = len(rows[0]["params"]) if rows else 0
    lines.append(",".join(["time", "energy", "norm", "gram_cond"] + [f"x{i}" for i in range(n)]))
    for r in rows:
        vals = [r["time"], r["energy"], r["norm"], r["gram_cond"]] + list(r["params"])
        lines.append(",".join(_fmt_float(float(v)).strip('"') for v in vals))
    _write(path, "\n".join(lines) + "\n")


def _with_seed(config, args):
    config = copy.deepcopy(config)
    st = config.setdefault("state", {})
    if not st or "random" in st:
        st.setdefault("random", {})["seed"] = args.seed
    if args.command == "validate":
        config.setdefault("validate", {})["seed"] = args.seed
    return config


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gencs", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="result file (default <command>.json)")
    p.add_argument("--seed", type=int, help="override the random-state seed")
    p.add_argument("--threads", type=int, help="cap BLAS worker threads")
    p.add_argument("--dump-factors", action="store_true", help="include Gauss factors in the output")
    return p


def run(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.get("job", args.command) != args.command:
            raise ConfigurationError(f"field job: config is for {config['job']!r}, not {args.command!r}")
        if args.seed is not None:
            config = _with_seed(config, args)
        sysc = config["system"]
        family = make_family(sysc["kind"], sysc["n"])
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    head = _header(config, args.command)
    limits = threadpool_limits(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limits:
            result, code = JOBS[args.command](config, family, args)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GencsError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        path = _out_path(args, config, args.command, "json")
        _write(path, dumps({**head, "error": exc.code, "message": str(exc)}) + "\n")
        return 3

    if args.command == "evolve" and result["format"] == "csv":
        _write_csv(_out_path(args, config, args.command, "csv"), head, result["trajectory"])
    else:
        result.pop("format", None)
        _write(_out_path(args, config, args.command, "json"), dumps({**head, "result": result}) + "\n")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
