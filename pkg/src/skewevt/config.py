"""Experiment configuration: schema, validation, defaults, object builders.

Config files are YAML (JSON is valid YAML, so the resolved-config JSON that
every run echoes can be re-ingested verbatim). A config describes exactly one
experiment. Validation happens in two layers: a published JSON schema that
rejects unknown keys and wrong types, and semantic checks that collect every
constraint violation (profile shape, exponent conjugacy, grid monotonicity)
without running anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import jsonschema
import yaml

from . import maps
from .errors import ConfigError

EXPERIMENT_KINDS = ("evt", "en-measure", "decay", "density", "thresholds")

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}
_NULL_INT = {"type": ["integer", "null"], "minimum": 0}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}

_TESTFN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["form"],
    "properties": {
        "form": {"enum": ["cos", "sin", "sawtooth", "bump", "const"]},
        "slot": {"type": "integer", "minimum": 0},
        "freq": _POS_INT,
        "center": _NUM_LIST,
        "radius": _NUM,
        "value": _NUM,
    },
}

_SYSTEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["map"],
    "properties": {
        "map": {"enum": list(maps.SYSTEM_KINDS)},
        "d": _POS_INT,
        "strength": _NUM,
        "omega": _NUM,
        "base": {"$ref": "#/$defs/system"},
        "cocycle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["form"],
            "properties": {
                "form": {"enum": ["linear", "trig", "table"]},
                "amplitude": _NUM,
                "table": _NUM_LIST,
                "holder_exponent": _NUM,
            },
        },
        "profile": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha_min", "alpha_max"],
            "properties": {"alpha_min": _NUM, "alpha_max": _NUM},
        },
        "alpha": _NUM,
        "a0": _NUM,
        "trap": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    },
}

_PARAMS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "beta": _NUM,
        "gamma_prime": _NUM,
        "alpha": _NUM,
        "alpha_hat": _NUM,
        "delta": _NUM,
        "kappa": {"type": ["number", "null"]},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"system": _SYSTEM_SCHEMA},
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "schema_version": {"const": 1},
        "kind": {"enum": list(EXPERIMENT_KINDS)},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "threads": {"type": "integer", "minimum": 0},
        "label": {"type": "string"},
        "system": {"$ref": "#/$defs/system"},
        "evt": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "ensemble"],
            "properties": {
                "n": {"type": "integer", "minimum": 0},
                "ensemble": _POS_INT,
                "burn_in": _NULL_INT,
                "v_grid": {
                    "oneOf": [
                        _NUM_LIST,
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["start", "stop", "step"],
                            "properties": {"start": _NUM, "stop": _NUM, "step": _NUM},
                        },
                    ]
                },
                "target": {"oneOf": [{"type": "null"}, _NUM_LIST]},
                "radii": _NUM_LIST,
                "density_samples": _NULL_INT,
                "pair": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "samples": {"type": "integer", "minimum": 0},
                        "gamma_prime": _NUM,
                        "v": _NUM,
                    },
                },
            },
        },
        "en_measure": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_list", "gamma_prime", "samples"],
            "properties": {
                "n_list": {"type": "array", "items": _POS_INT, "minItems": 1},
                "gamma_prime": _NUM,
                "samples": _POS_INT,
                "product": {"type": "boolean"},
                "fit_range": {
                    "oneOf": [{"type": "null"},
                              {"type": "array", "items": _NUM,
                               "minItems": 2, "maxItems": 2}]
                },
                "burn_in": _NULL_INT,
                "window": _NULL_INT,
            },
        },
        "decay": {
            "type": "object",
            "additionalProperties": False,
            "required": ["j_list", "samples", "upsilon", "psi"],
            "properties": {
                "j_list": {"type": "array", "items": _POS_INT, "minItems": 1},
                "samples": _POS_INT,
                "upsilon": _TESTFN_SCHEMA,
                "psi": _TESTFN_SCHEMA,
                "alpha_hat": _NUM,
                "fit_range": {
                    "oneOf": [{"type": "null"},
                              {"type": "array", "items": _NUM,
                               "minItems": 2, "maxItems": 2}]
                },
                "burn_in": _NULL_INT,
                "params": _PARAMS_SCHEMA,
            },
        },
        "density": {
            "type": "object",
            "additionalProperties": False,
            "required": ["radii", "samples"],
            "properties": {
                "targets": {
                    "oneOf": [{"type": "null"},
                              {"type": "array", "items": _NUM_LIST, "minItems": 1}]
                },
                "radii": _NUM_LIST,
                "samples": _POS_INT,
                "burn_in": _NULL_INT,
                "fit_profile": {"type": "boolean"},
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "required": ["D", "gamma_prime"],
            "properties": {
                "D": _POS_INT,
                "gamma_prime": _NUM,
                "kappa": {"type": ["number", "null"]},
                "delta": {"type": ["number", "null"]},
                "alpha": {"type": ["number", "null"]},
                "alpha_max": {"type": ["number", "null"]},
                "beta": {"type": ["number", "null"]},
            },
        },
    },
}

_BLOCK_FOR_KIND = {
    "evt": "evt",
    "en-measure": "en_measure",
    "decay": "decay",
    "density": "density",
    "thresholds": "thresholds",
}

_SYSTEM_KEYS = {
    "linear-expanding": {"map", "d"},
    "piecewise-c2": {"map", "d", "strength"},
    "lsv": {"map", "omega"},
    "circle-extension": {"map", "base", "cocycle"},
    "gouezel": {"map", "profile", "d"},
    "viana": {"map", "d", "alpha", "a0", "trap"},
}

_SYSTEM_REQUIRED = {
    "linear-expanding": {"d"},
    "piecewise-c2": {"d"},
    "lsv": {"omega"},
    "circle-extension": {"base", "cocycle"},
    "gouezel": {"profile"},
    "viana": set(),
}


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)
    resolved: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# loading and validation
# ---------------------------------------------------------------------------

def load_raw(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def schema_violations(raw: dict) -> List[str]:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path)):
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        out.append(f"{loc}: {err.message}")
    return out


def _system_violations(block: dict, prefix: str = "system") -> List[str]:
    out = []
    kind = block.get("map")
    if kind not in _SYSTEM_KEYS:
        return [f"{prefix}: unknown map {kind!r}"]
    extra = set(block) - _SYSTEM_KEYS[kind]
    if extra:
        out.append(f"{prefix}: keys {sorted(extra)} do not apply to {kind}")
    missing = _SYSTEM_REQUIRED[kind] - set(block)
    if missing:
        out.append(f"{prefix}: {kind} requires {sorted(missing)}")
        return out
    if kind == "linear-expanding" and block["d"] < 2:
        out.append(f"{prefix}: d must be >= 2")
    if kind == "piecewise-c2":
        d = block["d"]
        s = block.get("strength", 0.5)
        if d < 2:
            out.append(f"{prefix}: d must be >= 2")
        elif not (0 <= s < d - 1):
            out.append(f"{prefix}: strength must satisfy 0 <= strength < d-1")
    if kind == "lsv" and not (0 < block["omega"] < 1):
        out.append(f"{prefix}: omega must lie in (0, 1)")
    if kind == "circle-extension":
        base = block["base"]
        out.extend(_system_violations(base, prefix + "/base"))
        if base.get("map") not in ("linear-expanding", "piecewise-c2", "lsv"):
            out.append(f"{prefix}/base: cannot extend a {base.get('map')!r} system")
        coc = block["cocycle"]
        he = coc.get("holder_exponent", 1.0)
        if not (0 < he <= 1):
            out.append(f"{prefix}/cocycle: holder_exponent must lie in (0, 1]")
        if coc["form"] == "table" and len(coc.get("table", [])) < 2:
            out.append(f"{prefix}/cocycle: table form needs at least 2 samples")
    if kind == "gouezel":
        prof = block["profile"]
        amin, amax = prof["alpha_min"], prof["alpha_max"]
        if not (0 < amin < amax < 1):
            out.append(f"{prefix}/profile: need 0 < alpha_min < alpha_max < 1")
        elif not amax < 1.5 * amin:
            out.append(f"{prefix}/profile: alpha_max={amax} violates "
                       f"alpha_max < 1.5*alpha_min={1.5 * amin}")
    if kind == "viana":
        trap = block.get("trap", [-2.0, 2.0])
        if not trap[0] < trap[1]:
            out.append(f"{prefix}: trap interval needs lo < hi")
    return out


def _conjugacy_violation(block: dict, prefix: str) -> List[str]:
    kappa = block.get("kappa")
    delta = block.get("delta")
    if kappa is None or delta is None:
        return []
    if delta <= 0:
        return [f"{prefix}: delta must be positive"]
    conj = (1 + delta) / delta
    if not math.isclose(kappa, conj, rel_tol=1e-9):
        return [f"{prefix}: kappa={kappa} is not conjugate to 1+delta={1 + delta} "
                f"(expected {conj})"]
    return []


def semantic_violations(raw: dict) -> List[str]:
    out = []
    kind = raw.get("kind")
    block_key = _BLOCK_FOR_KIND.get(kind)
    if kind != "thresholds" and "system" not in raw:
        out.append(f"<root>: experiment kind {kind!r} requires a system block")
    if block_key and block_key not in raw:
        out.append(f"<root>: experiment kind {kind!r} requires a {block_key!r} block")
    for other_kind, other_block in _BLOCK_FOR_KIND.items():
        if other_block != block_key and other_block in raw:
            out.append(f"<root>: block {other_block!r} does not apply to kind {kind!r}")
    if "system" in raw:
        out.extend(_system_violations(raw["system"]))

    evt_block = raw.get("evt")
    if evt_block is not None:
        vg = evt_block.get("v_grid")
        if isinstance(vg, list) and any(b <= a for a, b in zip(vg, vg[1:])):
            out.append("evt/v_grid: must be strictly increasing")
        rr = evt_block.get("radii")
        if isinstance(rr, list):
            if any(r <= 0 for r in rr) or any(b >= a for a, b in zip(rr, rr[1:])):
                out.append("evt/radii: must be strictly decreasing and positive")
        tgt = evt_block.get("target")
        if isinstance(tgt, list) and "system" in raw and not _system_violations(raw["system"]):
            dim = _system_dim(raw["system"])
            if len(tgt) != dim:
                out.append(f"evt/target: needs {dim} coordinates")
        pair = evt_block.get("pair", {})
        if pair.get("gamma_prime", 0.4) <= 0:
            out.append("evt/pair/gamma_prime: must be positive")

    en = raw.get("en_measure")
    if en is not None and en.get("gamma_prime", 1) <= 0:
        out.append("en_measure/gamma_prime: must be positive")

    dec = raw.get("decay")
    if dec is not None:
        if not (0 < dec.get("alpha_hat", 1.0) <= 1):
            out.append("decay/alpha_hat: must lie in (0, 1]")
        params = dec.get("params")
        if params:
            out.extend(_conjugacy_violation(params, "decay/params"))

    dens = raw.get("density")
    if dens is not None:
        rr = dens.get("radii")
        if isinstance(rr, list):
            if any(r <= 0 for r in rr) or any(b >= a for a, b in zip(rr, rr[1:])):
                out.append("density/radii: must be strictly decreasing and positive")

    th = raw.get("thresholds")
    if th is not None:
        if th.get("gamma_prime", 1) <= 0:
            out.append("thresholds/gamma_prime: must be positive")
        out.extend(_conjugacy_violation(th, "thresholds"))
        beta = th.get("beta")
        gp = th.get("gamma_prime")
        D = th.get("D")
        if beta is not None and gp is not None and D and not gp < beta / D:
            out.append(f"thresholds: gamma_prime={gp} violates gamma_prime < "
                       f"beta/D={beta / D}")
    return out


def _system_dim(block: dict) -> int:
    kind = block["map"]
    if kind in ("linear-expanding", "piecewise-c2", "lsv"):
        return 1
    return 2


def validate_config(path) -> ValidationReport:
    """Collect every schema and semantic violation without running anything."""
    try:
        raw = load_raw(path)
    except (OSError, yaml.YAMLError, ConfigError) as e:
        return ValidationReport(violations=[f"unreadable config: {e}"])
    violations = schema_violations(raw)
    if violations:
        return ValidationReport(violations=violations)
    violations = semantic_violations(raw)
    if violations:
        return ValidationReport(violations=violations)
    return ValidationReport(resolved=resolve(raw))


def load_config(path) -> dict:
    """Validated, fully-defaulted config dict; raises ConfigError otherwise."""
    report = validate_config(path)
    if not report.ok:
        raise ConfigError(report.violations)
    return report.resolved


# ---------------------------------------------------------------------------
# defaults resolution
# ---------------------------------------------------------------------------

_DEFAULT_V_GRID = {"start": -1.0, "stop": 3.0, "step": 0.5}
_DEFAULT_RADII = [0.04, 0.02, 0.01]


def _expand_v_grid(vg) -> List[float]:
    if isinstance(vg, list):
        return [float(v) for v in vg]
    n = int(math.floor((vg["stop"] - vg["start"]) / vg["step"] + 1e-9)) + 1
    return [float(vg["start"] + i * vg["step"]) for i in range(n)]


def _resolved_system(block: dict) -> dict:
    kind = block["map"]
    out = {"map": kind}
    if kind == "linear-expanding":
        out["d"] = int(block["d"])
    elif kind == "piecewise-c2":
        out["d"] = int(block["d"])
        out["strength"] = float(block.get("strength", 0.5))
    elif kind == "lsv":
        out["omega"] = float(block["omega"])
    elif kind == "circle-extension":
        out["base"] = _resolved_system(block["base"])
        coc = dict(block["cocycle"])
        out["cocycle"] = {
            "form": coc["form"],
            "amplitude": float(coc.get("amplitude", 1.0)),
            "holder_exponent": float(coc.get("holder_exponent", 1.0)),
        }
        if coc["form"] == "table":
            out["cocycle"]["table"] = [float(t) for t in coc["table"]]
    elif kind == "gouezel":
        out["d"] = int(block.get("d", 4))
        out["profile"] = {"alpha_min": float(block["profile"]["alpha_min"]),
                          "alpha_max": float(block["profile"]["alpha_max"])}
    elif kind == "viana":
        out["d"] = int(block.get("d", 16))
        out["alpha"] = float(block.get("alpha", 0.01))
        out["a0"] = float(block.get("a0", 2.0))
        out["trap"] = [float(t) for t in block.get("trap", [-2.0, 2.0])]
    return out


def resolve(raw: dict) -> dict:
    """Materialize every default; idempotent, so resolved configs round-trip.

    Execution knobs (out_dir, threads) are not part of the result: they never
    influence the numbers, so the echoed config stays byte-identical across
    reruns with different thread counts or output locations.
    """
    from . import orbit

    kind = raw["kind"]
    out = {
        "schema_version": 1,
        "kind": kind,
        "seed": int(raw.get("seed", 0)),
    }
    if "label" in raw:
        out["label"] = raw["label"]
    system = None
    if "system" in raw:
        out["system"] = _resolved_system(raw["system"])
        system = build_system(out["system"])

    if kind == "evt":
        b = raw["evt"]
        burn = b.get("burn_in")
        pair = b.get("pair", {})
        out["evt"] = {
            "n": int(b["n"]),
            "ensemble": int(b["ensemble"]),
            "burn_in": int(burn) if burn is not None else orbit.default_burn_in(system),
            "v_grid": _expand_v_grid(b.get("v_grid", _DEFAULT_V_GRID)),
            "target": ([float(t) for t in b["target"]]
                       if b.get("target") is not None else None),
            "radii": [float(r) for r in b.get("radii", _DEFAULT_RADII)],
            "density_samples": int(b["density_samples"]
                                   if b.get("density_samples") is not None
                                   else b["ensemble"]),
            "pair": {
                "samples": int(pair.get("samples", 2000)),
                "gamma_prime": float(pair.get("gamma_prime", 0.4)),
                "v": float(pair.get("v", 0.0)),
            },
        }
    elif kind == "en-measure":
        b = raw["en_measure"]
        burn = b.get("burn_in")
        out["en_measure"] = {
            "n_list": [int(n) for n in b["n_list"]],
            "gamma_prime": float(b["gamma_prime"]),
            "samples": int(b["samples"]),
            "product": bool(b.get("product", False)),
            "fit_range": ([float(x) for x in b["fit_range"]]
                          if b.get("fit_range") is not None else None),
            "burn_in": int(burn) if burn is not None else orbit.default_burn_in(
                maps.base_system(system) if not b.get("product", False) else system),
            "window": int(b["window"]) if b.get("window") is not None else None,
        }
    elif kind == "decay":
        b = raw["decay"]
        burn = b.get("burn_in")
        out["decay"] = {
            "j_list": [int(j) for j in b["j_list"]],
            "samples": int(b["samples"]),
            "upsilon": _resolved_testfn(b["upsilon"]),
            "psi": _resolved_testfn(b["psi"]),
            "alpha_hat": float(b.get("alpha_hat", 1.0)),
            "fit_range": ([float(x) for x in b["fit_range"]]
                          if b.get("fit_range") is not None else None),
            "burn_in": int(burn) if burn is not None else orbit.default_burn_in(system),
        }
        if b.get("params"):
            p = dict(b["params"])
            delta = float(p.get("delta", 1.0))
            out["decay"]["params"] = {
                "beta": float(p.get("beta", 1.0)),
                "gamma_prime": float(p.get("gamma_prime", 0.5)),
                "alpha": float(p.get("alpha", 0.0)),
                "alpha_hat": float(p.get("alpha_hat", 1.0)),
                "delta": delta,
                "kappa": float(p["kappa"]) if p.get("kappa") is not None
                         else (1 + delta) / delta,
            }
    elif kind == "density":
        b = raw["density"]
        burn = b.get("burn_in")
        out["density"] = {
            "targets": ([[float(c) for c in t] for t in b["targets"]]
                        if b.get("targets") is not None else None),
            "radii": [float(r) for r in b["radii"]],
            "samples": int(b["samples"]),
            "burn_in": int(burn) if burn is not None else orbit.default_burn_in(system),
            "fit_profile": bool(b.get("fit_profile", False)),
        }
    elif kind == "thresholds":
        b = raw["thresholds"]
        delta = b.get("delta")
        kappa = b.get("kappa")
        if kappa is None and delta is not None:
            kappa = (1 + delta) / delta
        out["thresholds"] = {
            "D": int(b["D"]),
            "gamma_prime": float(b["gamma_prime"]),
            "kappa": float(kappa) if kappa is not None else 2.0,
            "delta": float(delta) if delta is not None else None,
            "alpha": float(b["alpha"]) if b.get("alpha") is not None else None,
            "alpha_max": float(b["alpha_max"]) if b.get("alpha_max") is not None else None,
            "beta": float(b["beta"]) if b.get("beta") is not None else None,
        }
    return out


def _resolved_testfn(block: dict) -> dict:
    out = {"form": block["form"], "slot": int(block.get("slot", 0))}
    if block["form"] in ("cos", "sin"):
        out["freq"] = int(block.get("freq", 1))
    if block["form"] == "bump":
        out["center"] = [float(c) for c in block["center"]]
        out["radius"] = float(block.get("radius", 0.1))
    if block["form"] == "const":
        out["value"] = float(block.get("value", 1.0))
    return out


# ---------------------------------------------------------------------------
# object builders
# ---------------------------------------------------------------------------

def build_system(block: dict) -> maps.SystemDescriptor:
    kind = block["map"]
    if kind == "linear-expanding":
        return maps.linear_expanding(block["d"])
    if kind == "piecewise-c2":
        return maps.piecewise_c2(block["d"], block.get("strength", 0.5))
    if kind == "lsv":
        return maps.lsv(block["omega"])
    if kind == "circle-extension":
        coc = block["cocycle"]
        return maps.circle_extension(
            build_system(block["base"]),
            maps.CocycleSpec(
                form=coc["form"],
                amplitude=coc.get("amplitude", 1.0),
                table=tuple(coc["table"]) if coc.get("table") else None,
                holder_exponent=coc.get("holder_exponent", 1.0),
            ))
    if kind == "gouezel":
        prof = block["profile"]
        return maps.gouezel(maps.AlphaProfile(prof["alpha_min"], prof["alpha_max"]),
                            d=block.get("d", 4))
    if kind == "viana":
        return maps.viana(alpha=block.get("alpha", 0.01), d=block.get("d", 16),
                          a0=block.get("a0", 2.0),
                          trap=tuple(block.get("trap", (-2.0, 2.0))))
    raise ConfigError(f"unknown system map {kind!r}")


def build_testfn(block: dict):
    from .hypotheses import TestFunction
    return TestFunction(
        form=block["form"], slot=block.get("slot", 0),
        freq=block.get("freq", 1),
        center=tuple(block["center"]) if block.get("center") else None,
        radius=block.get("radius", 0.1), value=block.get("value", 1.0))
