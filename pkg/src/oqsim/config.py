"""Experiment configuration: YAML loading and strict schema validation.

Configs are YAML documents with a published JSON-schema equivalent
(``oqsim schema --print``). Unknown keys are rejected everywhere so a
typo cannot silently change an experiment, and all physical rates carry
``minimum: 0`` constraints.
"""

from __future__ import annotations

import jsonschema
import yaml

EXPERIMENTS = ("relax", "spectrum", "pauli", "collision_converge",
               "transport", "rainbow", "loss", "xxz_ness")

_MATRIX = {
    "type": "object",
    "required": ["dim", "re", "im"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

_BLOCH = {"type": "array", "items": {"type": "number"},
          "minItems": 3, "maxItems": 3}

_TIMES = {
    "type": "object",
    "properties": {
        "start": {"type": "number", "minimum": 0},
        "stop": {"type": "number", "exclusiveMinimum": 0},
        "num": {"type": "integer", "minimum": 2},
        "spacing": {"enum": ["linear", "log"]},
    },
    "additionalProperties": False,
}

_RHO0_NAME = {"enum": ["excited", "ground", "mixed", "plus"]}

_MODEL_SCHEMAS = {
    "relax": {
        "type": "object",
        "required": ["omega0", "gamma_down", "beta"],
        "properties": {
            "omega0": {"type": "number"},
            "gamma_down": {"type": "number", "exclusiveMinimum": 0},
            "beta": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "spectrum": {
        "type": "object",
        "required": ["type"],
        "properties": {
            "type": {"enum": ["thermal_qubit", "amplitude_damping", "explicit"]},
            "omega0": {"type": "number"},
            "gamma": {"type": "number", "minimum": 0},
            "gamma_down": {"type": "number", "minimum": 0},
            "beta": {"type": "number", "minimum": 0},
            "hamiltonian": _MATRIX,
            "jumps": {"type": "array", "items": _MATRIX},
        },
        "additionalProperties": False,
    },
    "pauli": {
        "type": "object",
        "required": ["omega0", "gamma_down", "beta"],
        "properties": {
            "omega0": {"type": "number"},
            "gamma_down": {"type": "number", "exclusiveMinimum": 0},
            "beta": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "collision_converge": {
        "type": "object",
        "required": ["g", "tau0"],
        "properties": {
            "g": {"type": "number", "minimum": 0},
            "tau0": {"type": "number", "exclusiveMinimum": 0},
            "n_ancilla": {"type": "number", "minimum": 0, "maximum": 1},
            "omega0": {"type": "number"},
        },
        "additionalProperties": False,
    },
    "transport": {
        "type": "object",
        "required": ["L", "J", "g", "n_left", "n_right"],
        "properties": {
            "L": {"type": "integer", "minimum": 2},
            "J": {"type": "number"},
            "g": {"type": "number", "minimum": 0},
            "n_left": {"type": "number", "minimum": 0, "maximum": 1},
            "n_right": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "additionalProperties": False,
    },
    "rainbow": {
        "type": "object",
        "required": ["L", "J", "g", "bell_phase"],
        "properties": {
            "L": {"type": "integer", "minimum": 1},
            "J": {"type": "number"},
            "g": {"type": "number", "exclusiveMinimum": 0},
            "bell_phase": {"type": "number"},
            "entangled": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "loss": {
        "type": "object",
        "required": ["L", "J", "K", "Gamma"],
        "properties": {
            "L": {"type": "integer", "minimum": 1, "maximum": 12},
            "J": {"type": "number"},
            "K": {"type": "integer", "minimum": 1},
            "Gamma": {"type": "number", "minimum": 0},
            "boundary": {"enum": ["open", "periodic"]},
            "trap": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "xxz_ness": {
        "type": "object",
        "required": ["L", "J", "Delta"],
        "properties": {
            "L": {"type": "integer", "minimum": 2, "maximum": 6},
            "J": {"type": "number"},
            "Delta": {"type": "number"},
            "left_target": _BLOCH,
            "right_target": _BLOCH,
            "gamma_left": {"type": "number", "minimum": 0},
            "gamma_right": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
}

_PARAMS_SCHEMAS = {
    "relax": {
        "type": "object",
        "properties": {"times": _TIMES, "rho0": _RHO0_NAME},
        "additionalProperties": False,
    },
    "spectrum": {"type": "object", "additionalProperties": False},
    "pauli": {
        "type": "object",
        "properties": {
            "times": _TIMES,
            "p0": {"type": "array", "items": {"type": "number", "minimum": 0}},
        },
        "additionalProperties": False,
    },
    "collision_converge": {
        "type": "object",
        "properties": {
            "tau_factors": {"type": "array",
                            "items": {"type": "number", "exclusiveMinimum": 0},
                            "minItems": 2},
            "t_final": {"type": "number", "exclusiveMinimum": 0},
            "rho0": _RHO0_NAME,
            "scaled": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "transport": {
        "type": "object",
        "properties": {
            "lengths": {"type": "array",
                        "items": {"type": "integer", "minimum": 2}},
        },
        "additionalProperties": False,
    },
    "rainbow": {
        "type": "object",
        "properties": {
            "mode": {"enum": ["steady", "collisions"]},
            "n_collisions": {"type": "integer", "minimum": 0},
            "tau": {"type": "number", "exclusiveMinimum": 0},
            "threshold": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "additionalProperties": False,
    },
    "loss": {
        "type": "object",
        "properties": {
            "times": _TIMES,
            "rho0": {"oneOf": [
                {"enum": ["full", "half"]},
                {"type": "array", "items": {"type": "integer",
                                            "minimum": 0, "maximum": 1}},
            ]},
            "fit_window": {"type": "array", "items": {"type": "number"},
                           "minItems": 2, "maxItems": 2},
        },
        "additionalProperties": False,
    },
    "xxz_ness": {"type": "object", "additionalProperties": False},
}


def experiment_schema() -> dict:
    """Full JSON schema of a config document (all experiments)."""
    branches = []
    for name in EXPERIMENTS:
        branches.append({
            "if": {"properties": {"experiment": {"const": name}}},
            "then": {"properties": {"model": _MODEL_SCHEMAS[name],
                                    "params": _PARAMS_SCHEMAS[name]}},
        })
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "oqsim experiment configuration",
        "type": "object",
        "required": ["experiment", "output", "model"],
        "properties": {
            "experiment": {"enum": list(EXPERIMENTS)},
            "output": {"type": "string", "minLength": 1},
            "seed": {"type": "integer", "minimum": 0},
            "plot": {"type": "boolean"},
            "tolerances": {"type": "object",
                           "additionalProperties": {"type": "number"}},
            "model": {"type": "object"},
            "params": {"type": "object"},
        },
        "additionalProperties": False,
        "allOf": branches,
    }


class ConfigError(Exception):
    """Raised when a config file fails schema validation."""


def validate_config(doc: dict) -> dict:
    """Validate against the schema and fill in defaults; raises ConfigError."""
    try:
        jsonschema.validate(doc, experiment_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"config invalid at '{path}': {exc.message}") from exc
    out = dict(doc)
    out.setdefault("seed", 0)
    out.setdefault("plot", True)
    out.setdefault("tolerances", {})
    out.setdefault("params", {})
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} does not contain a mapping")
    return validate_config(doc)
