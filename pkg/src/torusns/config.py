"""INI-file round-tripping for run configurations.

A single ``[run]`` section maps one-to-one onto the fields of
``RunConfig``; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, fields

from .driver import RunConfig

_SECTION = "run"


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section(_SECTION):
        raise ValueError(f"config file {path} has no [{_SECTION}] section")
    known = {f.name: f.type for f in fields(RunConfig)}
    kwargs = {}
    for key, raw in parser.items(_SECTION):
        if key not in known:
            raise ValueError(f"unknown config key {key!r} in {path}")
        tp = known[key]
        if tp == "bool":
            kwargs[key] = parser.getboolean(_SECTION, key)
        elif tp == "int":
            kwargs[key] = parser.getint(_SECTION, key)
        elif tp == "float":
            kwargs[key] = parser.getfloat(_SECTION, key)
        else:
            kwargs[key] = raw
    return RunConfig(**kwargs)


def save_config(path: str, config: RunConfig) -> None:
    parser = configparser.ConfigParser()
    parser[_SECTION] = {k: str(v) for k, v in asdict(config).items()}
    with open(path, "w") as fh:
        parser.write(fh)
