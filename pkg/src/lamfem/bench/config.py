"""Run configuration: JSON schema, validation and object construction.

A configuration is validated against :data:`SCHEMA` before anything is
allocated; unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .. import geometry as geo
from ..errors import ConfigError
from ..materials import J2Plastic, LinearElastic, NeoHookean

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC2 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_VEC23 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3}
_MAT = {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3},
        "minItems": 2, "maxItems": 3}


# top-level keys needed by simulations and by the laminate path driver
RUN_KEYS = ("method", "mesh", "levelset", "materials", "bc")
LAMINATE_KEYS = ("materials", "laminate", "bc")


def _obj(required, **props):
    return {"type": "object", "required": list(required), "properties": props, "additionalProperties": False}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lamfem run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": list(RUN_KEYS),
    "properties": {
        "name": {"type": "string"},
        "method": {"enum": ["ELA", "GPLA", "LET"]},
        "mesh": _obj(
            ["nx", "ny"],
            nx={"type": "integer", "minimum": 1},
            ny={"type": "integer", "minimum": 1},
            box={"type": "array", "items": _VEC2, "minItems": 2, "maxItems": 2},
        ),
        "levelset": {"$ref": "#/$defs/levelset"},
        "materials": _obj(["phase1", "phase2"], phase1={"$ref": "#/$defs/material"},
                          phase2={"$ref": "#/$defs/material"}),
        "bc": {"oneOf": [
            _obj(["type", "grad"], type={"const": "affine"}, grad=_MAT),
            _obj(["type", "grad"], type={"const": "periodic"}, grad=_MAT),
            _obj(["type", "grad"], type={"const": "planar_exact"}, grad=_MAT),
            _obj(["type", "strain"], type={"const": "uniaxial"}, strain=_NUM),
        ]},
        "load": _obj(
            [],
            n_steps={"type": "integer", "minimum": 1},
            path={"type": "array", "items": _NUM, "minItems": 2},
            amplitude=_NUM,
        ),
        "output": {"type": "string"},
        "n_sub": {"type": "integer", "minimum": 1},
        "tolerances": _obj(
            [],
            newton=_POS,
            max_iter={"type": "integer", "minimum": 1},
            max_cuts={"type": "integer", "minimum": 0},
        ),
        "reference": {"oneOf": [
            _obj(["type"], type={"const": "analytic"}),
            _obj(["type"], type={"const": "overkill"}, factor={"type": "integer", "minimum": 2},
                 resolution={"type": "integer", "minimum": 1}),
        ]},
        "study": _obj(
            ["resolutions"],
            resolutions={"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            methods={"type": "array", "items": {"enum": ["ELA", "GPLA", "LET"]}, "minItems": 1},
        ),
        "laminate": _obj(["eta", "normal"], eta={"type": "number", "minimum": 0, "maximum": 1},
                         normal=_VEC23),
    },
    "$defs": {
        "levelset": {"oneOf": [
            _obj(["type", "center", "radius"], type={"const": "circle"}, center=_VEC2, radius=_POS),
            _obj(["type", "point", "normal"], type={"const": "plane"}, point=_VEC2, normal=_VEC2),
            _obj(["type", "parts"], type={"const": "union"},
                 parts={"type": "array", "items": {"$ref": "#/$defs/levelset"}, "minItems": 1}),
            _obj(["type", "parts"], type={"const": "intersection"},
                 parts={"type": "array", "items": {"$ref": "#/$defs/levelset"}, "minItems": 1}),
            _obj(["type", "of"], type={"const": "complement"}, of={"$ref": "#/$defs/levelset"}),
            _obj(["type", "file"], type={"const": "sampled"}, file={"type": "string"}),
        ]},
        "material": {"oneOf": [
            _obj(["model", "E", "nu"], model={"const": "linear_elastic"}, E=_POS,
                 nu={"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 0.5},
                 eigenstrain={"oneOf": [
                     _MAT,
                     _obj(["amplitude", "direction", "normal"], amplitude=_NUM, direction=_VEC23,
                          normal=_VEC23),
                 ]}),
            _obj(["model", "mu", "lam"], model={"const": "neo_hookean"}, mu=_POS,
                 lam={"type": "number", "minimum": 0}),
            _obj(["model", "mu", "lam", "sigma0"], model={"const": "j2_plastic"}, mu=_POS,
                 lam={"type": "number", "minimum": 0}, sigma0=_POS, H={"type": "number", "minimum": 0}),
        ]},
    },
}

DEFAULTS = {
    "name": "run",
    "load": {"n_steps": 1, "path": [0.0, 1.0], "amplitude": 1.0},
    "output": "lamfem-out",
    "n_sub": 32,
    "tolerances": {"newton": 1e-10, "max_iter": 25, "max_cuts": 8},
}


def _branch(err):
    """Context errors of the ``oneOf`` branch selected by the instance's ``model``/``type``."""
    inst = err.instance
    if not isinstance(inst, dict):
        return err.context
    for idx, sub in enumerate(err.validator_value):
        props = sub.get("properties", {})
        for key in ("model", "type"):
            if key in inst and props.get(key, {}).get("const") == inst[key]:
                return [e for e in err.context if e.relative_schema_path[0] == idx]
    return err.context


def _best_error(err):
    # oneOf failures hide the useful message in a sub-branch
    best = jsonschema.exceptions.best_match([err])
    while best.context:
        ctx = _branch(best) if best.validator == "oneOf" else best.context
        best = jsonschema.exceptions.best_match(ctx or best.context)
    return best


def validate(raw, required=RUN_KEYS):
    """Raise :class:`ConfigError` naming the offending field if ``raw`` is invalid.

    ``required`` lists the top-level keys the calling command needs.
    """
    schema = {**SCHEMA, "required": list(required)}
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = _best_error(errors[0])
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")


def _with_defaults(raw):
    cfg = copy.deepcopy(raw)
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            cfg[key] = {**value, **cfg.get(key, {})}
        else:
            cfg.setdefault(key, value)
    if "mesh" in cfg:
        cfg["mesh"].setdefault("box", [[0.0, 0.0], [1.0, 1.0]])
    return cfg


@dataclass
class RunConfig:
    """Validated run configuration (the raw dict plus its source directory)."""

    data: dict
    base_dir: Path
    required: tuple = RUN_KEYS

    @classmethod
    def from_dict(cls, raw, base_dir=".", required=RUN_KEYS):
        validate(raw, required)
        return cls(_with_defaults(raw), Path(base_dir), tuple(required))

    @classmethod
    def load(cls, path, required=RUN_KEYS):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, path.parent, required)

    def override(self, method=None, mesh=None, out=None):
        """Copy with command-line overrides applied (``mesh`` is ``n`` or ``(nx, ny)``)."""
        data = copy.deepcopy(self.data)
        if method is not None:
            data["method"] = method
        if mesh is not None:
            nx, ny = (mesh, mesh) if np.isscalar(mesh) else mesh
            data["mesh"]["nx"], data["mesh"]["ny"] = int(nx), int(ny)
        if out is not None:
            data["output"] = str(out)
        validate(data, self.required)
        return RunConfig(data, self.base_dir, self.required)

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def box(self):
        return tuple(tuple(p) for p in self.data["mesh"]["box"])

    def macro_gradient(self):
        """Displacement gradient of the boundary condition at unit load factor."""
        bc = self.data["bc"]
        H = np.zeros((3, 3))
        if bc["type"] == "uniaxial":
            H[0, 0] = bc["strain"]
        else:
            H = grad3(bc["grad"])
        return self.data["load"]["amplitude"] * H

    def levelset(self):
        return build_levelset(self.data["levelset"], self.base_dir)

    def materials(self):
        m = self.data["materials"]
        return build_material(m["phase1"]), build_material(m["phase2"])


def grad3(rows):
    """Pad a 2x2 (or pass a 3x3) nested list to a 3x3 array."""
    a = np.asarray(rows, dtype=float)
    out = np.zeros((3, 3))
    out[: a.shape[0], : a.shape[1]] = a
    return out


def _vec3(v):
    out = np.zeros(3)
    out[: len(v)] = v
    return out


def build_levelset(spec, base_dir="."):
    kind = spec["type"]
    if kind == "circle":
        return geo.Circle(tuple(spec["center"]), float(spec["radius"]))
    if kind == "plane":
        return geo.Plane(tuple(spec["point"]), tuple(spec["normal"]))
    if kind == "union":
        return geo.Union(*(build_levelset(p, base_dir) for p in spec["parts"]))
    if kind == "intersection":
        return geo.Intersection(*(build_levelset(p, base_dir) for p in spec["parts"]))
    if kind == "complement":
        return geo.Complement(build_levelset(spec["of"], base_dir))
    path = Path(base_dir) / spec["file"]
    try:
        return geo.Sampled.from_file(path)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"levelset.file: cannot load {path}: {exc}") from exc


def rank_one_eigenstrain(amplitude, direction, normal):
    """``ε* = ½ s (a⊗N + N⊗a)`` with unit ``N``."""
    a, N = _vec3(direction), _vec3(normal)
    N = N / np.linalg.norm(N)
    return 0.5 * amplitude * (np.outer(a, N) + np.outer(N, a))


def build_material(spec):
    model = spec["model"]
    try:
        if model == "linear_elastic":
            eig = spec.get("eigenstrain")
            if eig is None:
                eps0 = np.zeros((3, 3))
            elif isinstance(eig, dict):
                eps0 = rank_one_eigenstrain(eig["amplitude"], eig["direction"], eig["normal"])
            else:
                eps0 = grad3(eig)
            return LinearElastic(spec["E"], spec["nu"], eps0)
        if model == "neo_hookean":
            return NeoHookean(spec["mu"], spec["lam"])
        return J2Plastic(spec["mu"], spec["lam"], spec["sigma0"], spec.get("H", 0.0))
    except ValueError as exc:
        raise ConfigError(f"materials: {exc}") from exc
