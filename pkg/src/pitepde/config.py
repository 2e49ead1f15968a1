"""JSON run configuration.

A config has the blocks ``equation``, ``pite``, ``time``, ``reference``,
``compare``, ``output`` and ``system``.  Missing blocks take defaults.  Any
problem raises :class:`ConfigError` naming the offending key and, when the
config came from a file, its line.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Optional

from .variants import ConfigError as _VariantError
from .variants import PiteConfig

REFERENCE_KINDS = ("none", "analytic", "exact_pite", "dense", "fdm")
SYSTEM_MODELS = ("turing", "burgers")


class ConfigError(ValueError):
    def __init__(self, message, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


DEFAULTS = {
    "equation": {"d": 1, "n": 6, "L": 1.0, "a": 0.5, "v": [5.0],
                 "potential": None, "initial": {"kind": "sine"}},
    "pite": {"variant": "aapite", "order": 1, "m0": 1.0, "trotter_order": 1,
             "potential_variant": None, "mode": "direct"},
    "time": {"T": 0.1, "dtau": 1e-3, "schedule": None, "snapshots": []},
    "reference": {"kind": "none", "n_trun": 1000, "fdm_n": 10, "fdm_dtau": "t/1000",
                  "scheme": "BE"},
    "compare": {"apite": {"dtau": 5e-5, "m0": 0.9},
                "vs_apite": {"schedule": [1e-4, 9e-4], "m0": 0.9},
                "hhl": {"dtau": None}},
    "output": {"N_f": 256, "divide_by_N": False, "dump_states": False},
    "system": None,
}

SYSTEM_DEFAULTS = {"model": "turing", "n": 4, "L": 6.283185307179586, "dtau": 0.05, "T": 30.0,
                   "snapshots": [], "variant": "aapite", "order": 1, "reversed_order": False}

PRESETS = {
    "advection_1d": {
        "equation": {"d": 1, "n": 6, "L": 1.0, "a": 0.5, "v": [5.0], "initial": {"kind": "sine"}},
        "time": {"T": 0.1, "dtau": 1e-3, "snapshots": [0.002, 0.05]},
        "reference": {"kind": "analytic", "n_trun": 1000},
    },
    "absorption_2d": {
        "equation": {"d": 2, "n": 4, "L": 6.283185307179586, "a": 0.5, "v": [20.0, 0.0],
                     "potential": {"kind": "box2d", "height": 10.0},
                     "initial": {"kind": "gaussian", "A": 1.0,
                                 "x0": [1.5707963267948966, 1.5707963267948966],
                                 "sigma": 0.5}},
        "pite": {"trotter_order": 2, "potential_variant": "exact"},
        "time": {"T": 0.1, "dtau": 0.005, "snapshots": [0.05]},
        "reference": {"kind": "exact_pite"},
        "output": {"N_f": 128},
    },
    "absorbing_box_1d": {
        "equation": {"d": 1, "n": 6, "L": 1.0, "a": 0.5, "v": [5.0],
                     "potential": {"kind": "box1d", "height": 10.0},
                     "initial": {"kind": "sine"}},
        "time": {"T": 0.1, "dtau": 5e-4, "snapshots": [0.02, 0.05]},
        "reference": {"kind": "fdm", "fdm_n": 12, "fdm_dtau": "t/1000"},
    },
    "delta_1d": {
        "equation": {"d": 1, "n": 4, "L": 1.0, "a": 1.0, "v": [10.0], "initial": {"kind": "delta"}},
        "time": {"T": 0.04, "dtau": 1e-3, "snapshots": [0.005, 0.01, 0.02, 0.03]},
        "reference": {"kind": "analytic", "n_trun": 1000},
        "output": {"N_f": 16, "divide_by_N": True},
    },
    "turing": {"system": {"model": "turing", "n": 4, "dtau": 0.05, "T": 30.0,
                          "snapshots": [10.0, 20.0]}},
    "burgers": {"system": {"model": "burgers", "n": 4, "dtau": 0.04, "T": 1.0,
                           "snapshots": [0.2, 0.4, 0.6, 0.8]}},
}


def _line_of(text: Optional[str], path) -> Optional[int]:
    """Line of the last key in ``path``, searching each key after the previous one."""
    if not text or not path:
        return None
    pos = 0
    for key in path:
        if isinstance(key, int):
            continue
        hit = text.find(f'"{key}"', pos)
        if hit < 0:
            return None
        pos = hit
    return text.count("\n", 0, pos) + 1


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("potential", "initial"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    equation: dict
    pite: dict
    time: dict
    reference: dict
    compare: dict
    output: dict
    system: Optional[dict] = None
    raw: dict = field(default_factory=dict)
    text: Optional[str] = field(default=None, repr=False)
    source: str = "<config>"

    def error(self, message: str, *path) -> ConfigError:
        return ConfigError(message, _line_of(self.text, path), self.source)

    def pite_config(self, **overrides) -> PiteConfig:
        kw = dict(self.pite)
        kw["dtau"] = self.time["dtau"]
        sched = self.time.get("schedule")
        kw["vs_dtau"] = tuple(sched) if sched else None
        kw.update(overrides)
        try:
            return PiteConfig(**kw)
        except (_VariantError, TypeError) as exc:
            raise self.error(str(exc), "pite") from None

    def to_dict(self) -> dict:
        out = {k: copy.deepcopy(getattr(self, k)) for k in DEFAULTS}
        if out["system"] is None:
            del out["system"]
        return out


def _check_number(cfg: RunConfig, block: str, key: str, positive=True, integer=False):
    val = getattr(cfg, block).get(key)
    bad = isinstance(val, bool) or not isinstance(val, (int, float))
    if integer and not bad:
        bad = int(val) != val
    if not bad and positive:
        bad = not val > 0
    if bad:
        kind = "a positive " if positive else "a "
        kind += "integer" if integer else "number"
        raise cfg.error(f"{block}.{key} must be {kind}, got {val!r}", block, key)


def validate(cfg: RunConfig) -> RunConfig:
    eq = cfg.equation
    for key in ("d", "n"):
        _check_number(cfg, "equation", key, integer=True)
    _check_number(cfg, "equation", "L")
    if eq["d"] not in (1, 2, 3):
        raise cfg.error("equation.d must be 1, 2 or 3", "equation", "d")
    v = eq["v"]
    v = [v] if isinstance(v, (int, float)) else v
    if not isinstance(v, list) or len(v) != eq["d"]:
        raise cfg.error(f"equation.v needs {eq['d']} components", "equation", "v")
    eq["v"] = [float(x) for x in v]
    a = eq["a"]
    if isinstance(a, list):
        if len(a) != eq["d"] or min(a) <= 0:
            raise cfg.error("equation.a needs one positive value per axis", "equation", "a")
    elif not (isinstance(a, (int, float)) and a > 0):
        raise cfg.error("equation.a must be positive", "equation", "a")
    pot = eq.get("potential")
    if pot is not None and not (isinstance(pot, dict) and ("kind" in pot or "table" in pot)):
        raise cfg.error("equation.potential needs a 'kind' or a 'table'", "equation", "potential")
    init = eq.get("initial")
    if not (isinstance(init, dict) and "kind" in init):
        raise cfg.error("equation.initial needs a 'kind'", "equation", "initial")

    _check_number(cfg, "time", "T")
    _check_number(cfg, "time", "dtau")
    snaps = cfg.time.get("snapshots") or []
    if not isinstance(snaps, list) or any(not 0 <= s <= cfg.time["T"] for s in snaps):
        raise cfg.error("time.snapshots must be a list of times in [0, T]", "time", "snapshots")
    cfg.pite_config()

    ref = cfg.reference
    if ref["kind"] not in REFERENCE_KINDS:
        raise cfg.error(f"reference.kind must be one of {REFERENCE_KINDS}", "reference", "kind")
    if ref["kind"] == "analytic" and not (eq["d"] == 1 and pot is None
                                          and init["kind"] in ("sine", "delta")):
        raise cfg.error("an analytic reference exists only for 1D sine or delta data without a "
                        "potential", "reference", "kind")
    if ref["kind"] == "fdm" and eq["d"] != 1:
        raise cfg.error("the finite-difference reference is one-dimensional", "reference", "kind")
    fd = ref.get("fdm_dtau")
    if not (fd == "t/1000" or (isinstance(fd, (int, float)) and fd > 0)):
        raise cfg.error("reference.fdm_dtau must be 't/1000' or a positive number",
                        "reference", "fdm_dtau")

    N_f = cfg.output["N_f"]
    if not isinstance(N_f, int) or N_f < 2 ** eq["n"] or N_f & (N_f - 1):
        raise cfg.error(f"output.N_f must be a power of two >= {2 ** eq['n']}", "output", "N_f")

    if cfg.system is not None:
        sys_cfg = _merge(SYSTEM_DEFAULTS, cfg.system)
        cfg.system = sys_cfg
        if sys_cfg["model"] not in SYSTEM_MODELS:
            raise cfg.error(f"system.model must be one of {SYSTEM_MODELS}", "system", "model")
        for key in ("dtau", "T", "L"):
            _check_number(cfg, "system", key)
        _check_number(cfg, "system", "n", integer=True)
    return cfg


def from_dict(data: dict, text: Optional[str] = None, source: str = "<config>") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", 1 if text else None, source)
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown block {key!r}", _line_of(text, [key]), source)
    blocks = {}
    for name, default in DEFAULTS.items():
        given = data.get(name)
        if given is not None and not isinstance(given, dict):
            raise ConfigError(f"{name} must be an object", _line_of(text, [name]), source)
        if default is None:
            blocks[name] = copy.deepcopy(given)
            continue
        extra = set(given or {}) - set(default)
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"unknown key {name}.{key}", _line_of(text, [name, key]), source)
        blocks[name] = _merge(default, given or {})
    cfg = RunConfig(**blocks, raw=copy.deepcopy(data), text=text, source=source)
    return validate(cfg)


def loads(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, source) from None
    return from_dict(data, text, source)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return loads(text, str(path))


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return from_dict(copy.deepcopy(PRESETS[name]), source=f"<preset {name}>")


def set_field(cfg: RunConfig, dotted: str, value) -> RunConfig:
    """Copy of ``cfg`` with ``block.key = value`` (used by sweeps)."""
    block, _, key = dotted.partition(".")
    if block not in DEFAULTS or not key:
        raise ConfigError(f"sweep field must look like block.key, got {dotted!r}")
    data = cfg.to_dict()
    target = data.setdefault(block, {}) or {}
    data[block] = target
    if key not in target and block != "system":
        raise ConfigError(f"unknown sweep field {dotted!r}")
    target[key] = value
    return from_dict(data, source=f"{cfg.source} [{dotted}={value!r}]")
