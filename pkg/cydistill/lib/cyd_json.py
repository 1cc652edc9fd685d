# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Load, check and write the JSON run configuration."""
import copy
import dataclasses
import json
import logging

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_symreg as cyd_symreg
from cydistill.lib.cyd_common import CYDValidationError


def _section_defaults(cls):
    return {f.name: f.default for f in dataclasses.fields(cls)
            if f.name != "seed"}


DEFAULTS = {
    "psi"                : 0.0,
    "psi_grid"           : [0.0, 0.2, 0.4, 0.6, 0.8],
    "k"                  : 3,
    "n_points"           : 10000,
    "validation_points"  : 2000,
    "seed"               : 0,
    "seeds"              : list(range(10)),
    "split_fraction"     : 0.8,
    "bootstrap_resamples": 1000,
    "permutations"       : 1000,
    "volume_batches"     : 10,
    "volume_calibration" : 10.0,
    "degree_scan"        : [],
    "heavy"              : False,
    "n_jobs"             : 1,
    "output_dir"         : "cydistill-out",
    "training"           : _section_defaults(cyd_donaldson.TrainingConfig),
    "symreg"             : _section_defaults(cyd_symreg.SymregConfig),
}

# Accepted JSON types per key; bool is kept apart from int on purpose.
PROPS = {
    "psi"                : (int, float),
    "psi_grid"           : ("list", (int, float)),
    "k"                  : (int,),
    "n_points"           : (int,),
    "validation_points"  : (int,),
    "seed"               : (int,),
    "seeds"              : ("list", (int,)),
    "split_fraction"     : (int, float),
    "bootstrap_resamples": (int,),
    "permutations"       : (int,),
    "volume_batches"     : (int,),
    "volume_calibration" : (int, float),
    "degree_scan"        : ("list", (int,)),
    "heavy"              : (bool,),
    "n_jobs"             : (int,),
    "output_dir"         : (str,),
}


@dataclasses.dataclass
class RunConfig:
    psi: float
    psi_grid: list
    k: int
    n_points: int
    validation_points: int
    seed: int
    seeds: list
    split_fraction: float
    bootstrap_resamples: int
    permutations: int
    volume_batches: int
    volume_calibration: float
    degree_scan: list
    heavy: bool
    n_jobs: int
    output_dir: str
    training: cyd_donaldson.TrainingConfig
    symreg: cyd_symreg.SymregConfig

    @classmethod
    def from_dict(cls, conf):
        conf = dict(conf)
        conf["training"] = cyd_donaldson.TrainingConfig(**conf["training"])
        conf["symreg"] = cyd_symreg.SymregConfig(**conf["symreg"])

        return cls(**conf)

    def to_dict(self):
        conf = dataclasses.asdict(self)

        for section in ("training", "symreg"):
            conf[section].pop("seed")

        return conf

    @property
    def hash(self):
        return cyd_common.config_hash(self.to_dict())

    def training_for(self, seed):
        return dataclasses.replace(self.training, seed=int(seed))


def _type_ok(value, types):
    if isinstance(value, bool) and bool not in types:
        return False

    return isinstance(value, types)


class CYDJson(object):
    """Reads a config file, fills defaults and rejects unknown keys."""

    def __init__(self, location="", silent=False, exit_on_error=False,
                 callback=None):
        self.location = location
        self.lgr = logging.getLogger("cyd_json")
        self.silent = silent
        self.exit_on_error = exit_on_error
        self.callback = callback

    def json_load(self):
        """Return the merged config dict; no location means all defaults."""
        if not self.location:
            return self.json_check_config({})

        try:
            with open(self.location, "r") as conf:
                conf = json.load(conf)
        except FileNotFoundError:
            raise CYDValidationError(f"config {self.location} not found")
        except json.JSONDecodeError as err:
            raise CYDValidationError(f"config {self.location} is not valid"
                                     f" JSON: {err}")

        if not isinstance(conf, dict):
            raise CYDValidationError(f"config {self.location} must hold a"
                                     " JSON object")

        return self.json_check_config(conf)

    def json_check_config(self, conf):
        """Merge conf over the defaults, checking every key on the way."""
        merged = copy.deepcopy(DEFAULTS)
        errors = []

        for key, value in conf.items():
            if key in ("training", "symreg"):
                if not isinstance(value, dict):
                    errors.append(f"{key} must be an object")
                    continue

                for sub_key, sub_value in value.items():
                    err = self.json_check_prop(f"{key}.{sub_key}", sub_value)

                    if err:
                        errors.append(err)
                    else:
                        merged[key][sub_key] = sub_value
                continue

            err = self.json_check_prop(key, value)

            if err:
                errors.append(err)
            else:
                merged[key] = value

        if errors:
            raise CYDValidationError("; ".join(errors))

        self.lgr.debug("config loaded from %s", self.location or "defaults")

        return merged

    def json_check_prop(self, key, value):
        """Return an error message for a bad key or value, else None."""
        if "." in key:
            section, sub_key = key.split(".", 1)

            if sub_key not in DEFAULTS[section]:
                return f"unknown config key {key}"

            default = DEFAULTS[section][sub_key]
            types = (int, float) if isinstance(default, float) else \
                (type(default),)

            if not _type_ok(value, types):
                return f"{key} must be {types[-1].__name__}, got {value!r}"

            return None

        if key not in PROPS:
            return f"unknown config key {key}"

        types = PROPS[key]

        if types[0] == "list":
            if not isinstance(value, list) or not all(
                    _type_ok(v, types[1]) for v in value):
                return f"{key} must be a list of {types[1][-1].__name__}"
        elif not _type_ok(value, types):
            return f"{key} must be {types[-1].__name__}, got {value!r}"

        return None

    def json_get_value(self, prop, conf=None):
        """Value of a possibly dotted key, e.g. ``training.lr0``."""
        conf = self.json_load() if conf is None else conf
        value = conf

        for part in prop.split("."):
            try:
                value = value[part]
            except (KeyError, TypeError):
                raise CYDValidationError(f"unknown config key {prop}")

        return value

    def run_config(self, seed=None, output_dir=None, heavy=None):
        """RunConfig with CLI flag overrides applied over the file."""
        conf = self.json_load()

        for key, value in (("seed", seed), ("output_dir", output_dir),
                           ("heavy", heavy)):
            if value is not None:
                err = self.json_check_prop(key, value)

                if err:
                    raise CYDValidationError(err)

                conf[key] = value

        return RunConfig.from_dict(conf)

    @staticmethod
    def json_write(data, _file):
        """Write a JSON file atomically with sorted keys."""
        with cyd_common.open_atomic(_file, "w") as out:
            json.dump(data, out, sort_keys=True, indent=4,
                      ensure_ascii=False)
