"""Run configuration: YAML parsing with safe numeric expressions.

Numeric fields accept arithmetic expressions such as ``-cos(pi/3)`` or
``2*pi/5`` so that states can be entered exactly as specified.  Expressions
are evaluated on a restricted AST (arithmetic operators plus a whitelist of
math functions and constants); anything else is rejected.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, asdict

import yaml

from .coherent import CoherentSpec
from .hamiltonians import Model, ModelSpec, Parity

__all__ = ["ConfigError", "RunConfig", "evaluate_expression",
           "load_config", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Malformed configuration; message carries the offending location."""


_ALLOWED_FUNCS = {
    "cos": math.cos, "sin": math.sin, "tan": math.tan, "sqrt": math.sqrt,
    "exp": math.exp, "log": math.log, "atan": math.atan, "acos": math.acos,
    "asin": math.asin, "abs": abs,
}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_ALLOWED_OPS = (ast.UAdd, ast.USub, ast.Add, ast.Sub, ast.Mult, ast.Div,
                ast.Pow, ast.Mod, ast.FloorDiv)


def _eval_node(node: ast.AST) -> float:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ConfigError(f"non-numeric constant {node.value!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, _ALLOWED_OPS):
        val = _eval_node(node.operand)
        return -val if isinstance(node.op, ast.USub) else +val
    if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_OPS):
        a, b = _eval_node(node.left), _eval_node(node.right)
        return {
            ast.Add: lambda: a + b, ast.Sub: lambda: a - b,
            ast.Mult: lambda: a * b, ast.Div: lambda: a / b,
            ast.Pow: lambda: a ** b, ast.Mod: lambda: a % b,
            ast.FloorDiv: lambda: a // b,
        }[type(node.op)]()
    if isinstance(node, ast.Name):
        if node.id in _ALLOWED_NAMES:
            return _ALLOWED_NAMES[node.id]
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.Call):
        if (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_FUNCS
                and not node.keywords):
            return _ALLOWED_FUNCS[node.func.id](
                *[_eval_node(a) for a in node.args])
        raise ConfigError("only whitelisted math functions are allowed")
    raise ConfigError(f"disallowed syntax {type(node).__name__} in expression")


def evaluate_expression(value) -> float:
    """Evaluate a numeric literal or a restricted arithmetic expression."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got boolean {value}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            tree = ast.parse(value, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {value!r}: {exc.msg}") from exc
        return _eval_node(tree)
    raise ConfigError(f"expected number or expression, got {type(value).__name__}")


@dataclass
class RunConfig:
    """Everything one CLI command needs, as plain data.

    ``raw`` keeps the parsed mapping so the exact input round-trips through
    :func:`serialize_config`.
    """

    model: ModelSpec
    states: list[CoherentSpec] = field(default_factory=list)
    t_max: float = 100.0
    n_points: int = 4001
    grid: str = "linear"
    j_ladder: list[float] = field(default_factory=list)
    target_energy: float | None = None
    jz_values: list[float] = field(default_factory=list)
    prefer_larger_q0: bool = False
    analyses: dict = field(default_factory=dict)
    detection: dict = field(default_factory=dict)
    output_dir: str = "."
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)


def _number(mapping: dict, key: str, default=None, required: bool = False):
    if key not in mapping:
        if required:
            raise ConfigError(f"missing required field {key!r}")
        return default
    return evaluate_expression(mapping[key])


def parse_config(data: dict) -> RunConfig:
    """Build a validated RunConfig from a parsed mapping."""
    if not isinstance(data, dict):
        raise ConfigError("top level of the config must be a mapping")
    if "model" not in data or not isinstance(data["model"], dict):
        raise ConfigError("missing required 'model' section")
    m = data["model"]
    try:
        model = Model(m.get("name", "").lower())
    except ValueError:
        raise ConfigError(f"model.name must be 'lmg' or 'dicke', got {m.get('name')!r}")
    parity_aliases = {"+": "plus", "-": "minus", "plus": "plus",
                      "minus": "minus"}
    parity_key = str(m.get("parity", "plus")).lower()
    if parity_key not in parity_aliases:
        raise ConfigError(
            f"model.parity must be one of +, -, plus, minus; got {m.get('parity')!r}")
    parity = Parity(parity_aliases[parity_key])
    nmax = m.get("nmax")
    try:
        spec = ModelSpec(
            model=model, j=_number(m, "j", required=True), parity=parity,
            gamma_x=_number(m, "gamma_x", 0.0), gamma_y=_number(m, "gamma_y", 0.0),
            omega=_number(m, "omega", 1.0), omega0=_number(m, "omega0", 1.0),
            gamma=_number(m, "gamma", 0.0),
            nmax=int(nmax) if nmax is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    states = []
    for i, s in enumerate(data.get("states", []) or []):
        if not isinstance(s, dict):
            raise ConfigError(f"states[{i}] must be a mapping")
        try:
            states.append(CoherentSpec(
                jz0_over_j=_number(s, "jz0_over_j", required=True),
                phi0=_number(s, "phi0", 0.0),
                q0=_number(s, "q0", 0.0), p0=_number(s, "p0", 0.0),
            ))
        except ValueError as exc:
            raise ConfigError(f"states[{i}]: {exc}") from exc

    grid_sec = data.get("time_grid", {}) or {}
    grid = grid_sec.get("kind", "linear")
    if grid not in ("linear", "log"):
        raise ConfigError(f"time_grid.kind must be 'linear' or 'log', got {grid!r}")

    return RunConfig(
        model=spec, states=states,
        t_max=_number(grid_sec, "t_max", 100.0),
        n_points=int(grid_sec.get("n_points", 4001)),
        grid=grid,
        j_ladder=[evaluate_expression(x) for x in data.get("j_ladder", []) or []],
        target_energy=_number(data, "target_energy"),
        jz_values=[evaluate_expression(x) for x in data.get("jz_values", []) or []],
        prefer_larger_q0=bool(data.get("prefer_larger_q0", False)),
        analyses=dict(data.get("analyses", {}) or {}),
        detection=dict(data.get("detection", {}) or {}),
        output_dir=str(data.get("output_dir", ".")),
        tolerances=dict(data.get("tolerances", {}) or {}),
        raw=data,
    )


def load_config(path) -> RunConfig:
    """Parse a YAML config file; errors carry the line number when known."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"invalid YAML{where}: {exc}") from exc
    return parse_config(data)


def serialize_config(config: RunConfig) -> str:
    """YAML text that parses back to an equivalent RunConfig."""
    if config.raw:
        return yaml.safe_dump(config.raw, sort_keys=True)
    m = config.model
    data = {
        "model": {
            "name": m.model.value, "j": m.j, "parity": m.parity.value,
            "gamma_x": m.gamma_x, "gamma_y": m.gamma_y,
            "omega": m.omega, "omega0": m.omega0, "gamma": m.gamma,
            **({"nmax": m.nmax} if m.nmax is not None else {}),
        },
        "states": [
            {"jz0_over_j": s.jz0_over_j, "phi0": s.phi0,
             "q0": s.q0, "p0": s.p0}
            for s in config.states
        ],
        "time_grid": {"kind": config.grid, "t_max": config.t_max,
                      "n_points": config.n_points},
        "j_ladder": list(config.j_ladder),
        "jz_values": list(config.jz_values),
        "prefer_larger_q0": config.prefer_larger_q0,
        "analyses": config.analyses,
        "detection": config.detection,
        "output_dir": config.output_dir,
        "tolerances": config.tolerances,
    }
    if config.target_energy is not None:
        data["target_energy"] = config.target_energy
    return yaml.safe_dump(data, sort_keys=True)
