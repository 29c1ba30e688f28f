"""Strict JSON run configuration.

Every key has a declared type and default.  Unknown keys, wrong types and
malformed JSON raise :class:`ConfigError` carrying the JSON path of the
offending value (``$.regression.svr.C``).
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from . import data as D
from .errors import ConfigError

SUITES = ("regress", "pinn", "classify")
SEED_ENV = "THERMOFORGE_SEED"

INT = (int,)
NUM = (int, float)
OPT_INT = (int, type(None))
OPT_NUM = (int, float, type(None))
BOOL = (bool,)
STR = (str,)
INT_LIST = ("int_list",)
STR_LIST = ("str_list",)

_FOREST = {"n_trees": (INT, 100), "max_depth": (OPT_INT, 6), "min_samples_leaf": (INT, 1),
           "feature_subset_size": (OPT_INT, None)}
_SVM = {"C": (NUM, 1.0), "kernel": (STR, "rbf"), "gamma": (OPT_NUM, None), "tolerance": (NUM, 1e-3),
        "max_passes": (INT, 1000)}

SCHEMA = {
    "data": (("data",), None),
    "suite": (STR, "all"),
    "seed": (INT, 0),
    "output": (STR, "out"),
    "split": {"train_fraction": (NUM, 0.8), "seed": (OPT_INT, None)},
    "features": {"regression": (STR_LIST, list(D.REGRESSION_FEATURES)),
                 "classification": (STR_LIST, list(D.CLASSIFICATION_FEATURES))},
    "regression": {
        "svr": dict(_SVM, epsilon=(NUM, 0.1)),
        "decision_tree": {"max_depth": (OPT_INT, None), "min_samples_leaf": (INT, 1)},
        "random_forest": dict(_FOREST, bootstrap=(BOOL, True)),
        "second_order_boosting": {"n_stages": (INT, 100), "learning_rate": (NUM, 0.1), "max_depth": (OPT_INT, 3),
                                  "min_samples_leaf": (INT, 1), "lambda_l2": (NUM, 1.0), "gamma": (NUM, 0.0)},
        "ordered_boosting": {"n_stages": (INT, 100), "learning_rate": (NUM, 0.1), "max_depth": (INT, 4),
                             "lambda_l2": (NUM, 1.0), "n_permutations": (INT, 4)},
        "adaboost": {"n_stages": (INT, 50), "max_depth": (INT, 3)},
        "extra_trees": dict(_FOREST, bootstrap=(BOOL, False)),
        "gradient_boosting": {"n_stages": (INT, 100), "learning_rate": (NUM, 0.1), "max_depth": (OPT_INT, 3),
                              "min_samples_leaf": (INT, 1), "subsample": (NUM, 1.0)},
    },
    "pinn": {"epochs": (INT, 2000), "learning_rate": (NUM, 1e-3), "physics_weight": (NUM, 1.0),
             "hidden": (INT_LIST, [32, 32]), "c": (NUM, 1.0), "k": (NUM, 1.0), "hbar": (NUM, 1.0),
             "mass": (NUM, 1.0), "collocation": (STR, "training"), "grid_size": (INT, 16),
             "textbook_wave": (BOOL, False), "surface_grid": (INT, 25)},
    "classification": {
        "logistic": {"learning_rate": (NUM, 0.1), "n_epochs": (INT, 500), "l2": (NUM, 0.0), "threshold": (NUM, 0.5)},
        "knn": {"k": (INT, 5)},
        "svc": dict(_SVM),
        "sgd": {"learning_rate": (NUM, 0.1), "n_epochs": (INT, 500)},
        "decision_tree": {"max_depth": (OPT_INT, None), "min_samples_leaf": (INT, 1)},
        "random_forest": dict(_FOREST, bootstrap=(BOOL, True)),
        "adaboost": {"n_stages": (INT, 50), "max_depth": (INT, 1)},
        "gradient_boosting": {"n_stages": (INT, 100), "learning_rate": (NUM, 0.1), "max_depth": (OPT_INT, 3),
                              "min_samples_leaf": (INT, 1)},
        "stochastic_gradient_boosting": {"n_stages": (INT, 100), "learning_rate": (NUM, 0.1),
                                         "max_depth": (OPT_INT, 3), "min_samples_leaf": (INT, 1),
                                         "subsample": (NUM, 0.5)},
    },
}


def _type_name(types):
    if types == ("data",):
        return "string or object of per-suite paths"
    if types in (INT_LIST, STR_LIST):
        return "list of " + ("integers" if types == INT_LIST else "strings")
    names = {int: "integer", float: "number", bool: "boolean", str: "string", type(None): "null"}
    return " or ".join(names[t] for t in types if not (t is int and float in types))


def _check(value, types, path):
    if types == ("data",):
        if isinstance(value, str):
            return value
        if isinstance(value, dict):
            for k, v in value.items():
                if k not in SUITES:
                    raise ConfigError(f"unknown key {k!r}", f"{path}.{k}")
                if not isinstance(v, str):
                    raise ConfigError("expected a string path", f"{path}.{k}")
            return dict(value)
        raise ConfigError(f"expected {_type_name(types)}", path)
    if types in (INT_LIST, STR_LIST):
        want = int if types == INT_LIST else str
        if not isinstance(value, list) or not all(isinstance(v, want) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"expected {_type_name(types)}", path)
        return list(value)
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"expected {_type_name(types)}, got boolean", path)
    if not isinstance(value, types):
        raise ConfigError(f"expected {_type_name(types)}, got {type(value).__name__}", path)
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _merge(schema, given, path):
    if not isinstance(given, dict):
        raise ConfigError("expected an object", path)
    for key in given:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}")
    out = {}
    for key, spec in schema.items():
        sub = f"{path}.{key}"
        if isinstance(spec, dict):
            out[key] = _merge(spec, given.get(key, {}), sub)
        else:
            types, default = spec
            out[key] = _check(given[key], types, sub) if key in given else copy.deepcopy(default)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Effective settings after defaults and seed overrides.

    ``settings`` is the full nested dict; ``base_dir`` resolves relative
    data and output paths (the directory of the config file).
    """

    settings: dict
    base_dir: Path

    def __getitem__(self, key):
        return self.settings[key]

    @property
    def seed(self) -> int:
        return self.settings["seed"]

    @property
    def split_seed(self) -> int:
        s = self.settings["split"]["seed"]
        return self.seed if s is None else s

    @property
    def suites(self) -> tuple:
        s = self.settings["suite"]
        return SUITES if s == "all" else (s,)

    def data_path(self, suite: str) -> Path:
        d = self.settings["data"]
        if isinstance(d, dict):
            if suite not in d:
                raise ConfigError(f"no data path configured for suite {suite!r}", f"$.data.{suite}")
            d = d[suite]
        p = Path(d)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        p = Path(self.settings["output"])
        return p if p.is_absolute() else self.base_dir / p

    def fingerprint_payload(self) -> dict:
        # the output directory decides where files go, not what they contain
        return {k: v for k, v in self.settings.items() if k != "output"}

    @property
    def fingerprint(self) -> str:
        text = json.dumps(self.fingerprint_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, seed=None, output=None) -> "RunConfig":
        s = copy.deepcopy(self.settings)
        if seed is not None:
            s["seed"] = _seed_value(seed, "--seed")
        if output is not None:
            # command-line paths are relative to the working directory
            s["output"] = str(Path(output).resolve())
        return RunConfig(s, self.base_dir)


def _seed_value(v, source):
    try:
        seed = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {v!r}", source) from None
    if seed < 0:
        raise ConfigError("seed must be non-negative", source)
    return seed


def build_config(raw: dict, base_dir=".", env=None) -> RunConfig:
    """Validate ``raw`` against the schema and apply defaults.

    ``THERMOFORGE_SEED`` in ``env`` (default ``os.environ``) replaces the
    configured seed.
    """
    settings = _merge(SCHEMA, raw, "$")
    if settings["data"] is None:
        raise ConfigError("missing required key 'data'", "$.data")
    if settings["suite"] not in SUITES + ("all",):
        raise ConfigError(f"suite must be one of {', '.join(SUITES + ('all',))}", "$.suite")
    if settings["seed"] < 0:
        raise ConfigError("seed must be non-negative", "$.seed")
    if not 0.0 < settings["split"]["train_fraction"] < 1.0:
        raise ConfigError("train_fraction must lie in (0, 1)", "$.split.train_fraction")
    for key in ("regression", "classification"):
        for name in settings["features"][key]:
            if name not in D.FEATURE_COLUMNS:
                raise ConfigError(f"unknown feature {name!r}", f"$.features.{key}")
    if settings["pinn"]["collocation"] not in ("training", "grid"):
        raise ConfigError("collocation must be 'training' or 'grid'", "$.pinn.collocation")
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        settings["seed"] = _seed_value(env[SEED_ENV], SEED_ENV)
    return RunConfig(settings, Path(base_dir))


def load_config(path, env=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "$") from None
    return build_config(raw, path.parent, env)
