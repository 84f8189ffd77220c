"""Scenario files (YAML) in, JSON reports out.

A scenario file holds one instance plus optional objective, solver and
oracle settings; see ``docs/scenario_schema.md``.  Parsing goes through the
YAML node graph so every error can name the offending key and its line.
Reports are plain JSON.  Floats are written with Python's shortest
round-trip representation, so reading a report back gives the identical
binary values; non-finite values become ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from . import __version__
from .exceptions import ValidationError
from .model import GainBand, Objective, Scenario

__all__ = [
    "ScenarioFile",
    "load_scenario",
    "parse_scenario",
    "scenario_to_dict",
    "to_jsonable",
    "dump_report",
    "load_report",
    "tool_metadata",
]

_TOP_KEYS = {"bandwidth", "users", "gain", "gain_bands", "objective", "solver", "oracle"}
_USER_KEYS = {"power", "noise", "weight"}
_BAND_KEYS = {"start", "end", "gain"}
_OBJECTIVE_KEYS = {"kind", "log_base"}
_SOLVER_KEYS = {"width_rule", "sigma2_samples", "scan_samples", "tol", "subcases"}
_ORACLE_KEYS = {"channels", "levels", "budget", "method"}


@dataclass
class ScenarioFile:
    """A parsed scenario file: the instance plus the settings it carries."""

    scenario: Scenario
    objective: Objective = field(default_factory=Objective)
    solver: Dict[str, Any] = field(default_factory=dict)
    oracle: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None


def _line(node) -> int:
    return node.start_mark.line + 1


def _mapping(node, allowed, where):
    if not isinstance(node, yaml.MappingNode):
        raise ValidationError(f"{where} must be a mapping", field=where, line=_line(node))
    out = {}
    for key_node, value_node in node.value:
        key = key_node.value
        name = f"{where}.{key}" if where else key
        if key not in allowed:
            raise ValidationError(f"unknown key {key!r}; expected one of {sorted(allowed)}",
                                  field=name, line=_line(key_node))
        if key in out:
            raise ValidationError("duplicate key", field=name, line=_line(key_node))
        out[key] = value_node
    return out


def _sequence(node, name, length=None):
    if not isinstance(node, yaml.SequenceNode):
        raise ValidationError("expected a list", field=name, line=_line(node))
    if length is not None and len(node.value) != length:
        raise ValidationError(f"expected {length} entries, got {len(node.value)}", field=name,
                              line=_line(node))
    return node.value


def _number(node, name, positive=False, nonnegative=False):
    if not isinstance(node, yaml.ScalarNode):
        raise ValidationError("expected a number", field=name, line=_line(node))
    try:
        value = float(node.value)
    except ValueError:
        raise ValidationError(f"expected a number, got {node.value!r}", field=name,
                              line=_line(node)) from None
    if not math.isfinite(value):
        raise ValidationError("must be finite", field=name, line=_line(node))
    if positive and value <= 0:
        raise ValidationError(f"must be > 0, got {value!r}", field=name, line=_line(node))
    if nonnegative and value < 0:
        raise ValidationError(f"must be >= 0, got {value!r}", field=name, line=_line(node))
    return value


def _integer(node, name, minimum=1):
    value = _number(node, name)
    if value != int(value) or value < minimum:
        raise ValidationError(f"must be an integer >= {minimum}", field=name, line=_line(node))
    return int(value)


def _string(node, name, choices):
    if not isinstance(node, yaml.ScalarNode) or node.value not in choices:
        got = getattr(node, "value", None)
        raise ValidationError(f"must be one of {list(choices)}, got {got!r}", field=name,
                              line=_line(node))
    return node.value


def _boolean(node, name):
    if not isinstance(node, yaml.ScalarNode) or node.value.lower() not in ("true", "false"):
        raise ValidationError("expected true or false", field=name, line=_line(node))
    return node.value.lower() == "true"


def _matrix(node, name):
    rows = _sequence(node, name, 2)
    out = []
    for i, row in enumerate(rows):
        cells = _sequence(row, f"{name}[{i}]", 2)
        out.append(tuple(_number(c, f"{name}[{i}][{j}]", nonnegative=True)
                         for j, c in enumerate(cells)))
    for i in range(2):
        if out[i][i] <= 0:
            raise ValidationError("direct gains must be > 0", field=f"{name}[{i}][{i}]",
                                  line=_line(rows[i]))
    return tuple(out)


def parse_scenario(text: str, source: Optional[str] = None) -> ScenarioFile:
    """Parse scenario YAML text.

    Raises
    ------
    ValidationError
        On syntax errors, unknown or missing keys and out-of-range values;
        ``field`` and ``line`` locate the problem.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ValidationError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                              line=mark.line + 1 if mark else None) from None
    if root is None:
        raise ValidationError("empty scenario file")
    top = _mapping(root, _TOP_KEYS, "")
    for key in ("bandwidth", "users"):
        if key not in top:
            raise ValidationError("missing required key", field=key, line=_line(root))
    if "gain" not in top and "gain_bands" not in top:
        raise ValidationError("need 'gain' or 'gain_bands'", field="gain", line=_line(root))

    W = _number(top["bandwidth"], "bandwidth", positive=True)
    users = _sequence(top["users"], "users", 2)
    power, noise, weight = [], [], []
    for i, unode in enumerate(users):
        where = f"users[{i}]"
        u = _mapping(unode, _USER_KEYS, where)
        for key in ("power", "noise"):
            if key not in u:
                raise ValidationError("missing required key", field=f"{where}.{key}",
                                      line=_line(unode))
        power.append(_number(u["power"], f"{where}.power", positive=True))
        noise.append(_number(u["noise"], f"{where}.noise", positive=True))
        weight.append(_number(u["weight"], f"{where}.weight", positive=True)
                      if "weight" in u else 1.0)

    bands = None
    if "gain_bands" in top:
        bands = []
        for i, bnode in enumerate(_sequence(top["gain_bands"], "gain_bands")):
            where = f"gain_bands[{i}]"
            b = _mapping(bnode, _BAND_KEYS, where)
            missing = _BAND_KEYS - set(b)
            if missing:
                raise ValidationError(f"missing keys {sorted(missing)}", field=where,
                                      line=_line(bnode))
            try:
                bands.append(GainBand(_number(b["start"], f"{where}.start", nonnegative=True),
                                      _number(b["end"], f"{where}.end", positive=True),
                                      _matrix(b["gain"], f"{where}.gain")))
            except ValidationError as exc:
                if exc.line is not None:
                    raise
                raise ValidationError(str(exc), field=where, line=_line(bnode)) from None
    gain = _matrix(top["gain"], "gain") if "gain" in top else bands[0].gain

    try:
        scenario = Scenario(W, tuple(power), tuple(noise), gain, tuple(weight),
                            tuple(bands) if bands else None)
    except ValidationError as exc:
        node = top.get(exc.field or "", root)
        raise ValidationError(str(exc), field=exc.field, line=_line(node)) from None

    objective = Objective()
    if "objective" in top:
        o = _mapping(top["objective"], _OBJECTIVE_KEYS, "objective")
        kind = _string(o["kind"], "objective.kind", ("sum", "product")) if "kind" in o else "sum"
        base: Any = 2.0
        if "log_base" in o:
            base = _string(o["log_base"], "objective.log_base", ("2", "e"))
            base = 2.0 if base == "2" else "e"
        objective = Objective(kind=kind, base=base)

    solver: Dict[str, Any] = {}
    if "solver" in top:
        s = _mapping(top["solver"], _SOLVER_KEYS, "solver")
        if "width_rule" in s:
            solver["width_rule"] = _string(s["width_rule"], "solver.width_rule",
                                           ("exclusive_density", "total_power"))
        for key in ("sigma2_samples", "scan_samples"):
            if key in s:
                solver[key] = _integer(s[key], f"solver.{key}", minimum=8)
        if "tol" in s:
            solver["tol"] = _number(s["tol"], "solver.tol", positive=True)
        if "subcases" in s:
            solver["subcases"] = _boolean(s["subcases"], "solver.subcases")

    oracle: Dict[str, Any] = {}
    if "oracle" in top:
        o = _mapping(top["oracle"], _ORACLE_KEYS, "oracle")
        for key in ("channels", "levels", "budget"):
            if key in o:
                oracle[key] = _integer(o[key], f"oracle.{key}")
        if "method" in o:
            oracle["method"] = _string(o["method"], "oracle.method", ("dp", "enumerate"))

    return ScenarioFile(scenario, objective, solver, oracle, source)


def load_scenario(path: str) -> ScenarioFile:
    """Read and parse a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file: {exc.strerror}", field=path) from None
    return parse_scenario(text, source=path)


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Plain-data echo of a scenario, in scenario-file layout."""
    out: Dict[str, Any] = {
        "bandwidth": scenario.bandwidth,
        "users": [{"power": scenario.power[i], "noise": scenario.noise[i],
                   "weight": scenario.weights[i]} for i in range(2)],
        "gain": [list(r) for r in scenario.gain],
    }
    if scenario.gain_bands is not None:
        out["gain_bands"] = [{"start": b.start, "end": b.end, "gain": [list(r) for r in b.gain]}
                             for b in scenario.gain_bands]
    return out


def to_jsonable(obj):
    """Recursively convert numpy values to JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def tool_metadata() -> Dict[str, str]:
    return {"name": "sapd", "version": __version__}


def dump_report(report: Dict[str, Any]) -> str:
    """Serialise a report dict to deterministic JSON text (newline-terminated)."""
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False) + "\n"


def load_report(text: str) -> Dict[str, Any]:
    return json.loads(text)


def psd_to_dict(psd) -> Dict[str, List]:
    return {"edges": psd.edges, "density": psd.density}
