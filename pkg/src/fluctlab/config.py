"""Experiment configuration and the append-only result store.

A config names one operation, the law or kernel it acts on, its numeric
parameters, and a seed.  Configs parse from TOML or JSON and serialise
back to JSON without loss; probabilities written as fraction strings
("2/3") stay exact all the way into the step-law constructor.  Results
append to a JSONL store under an exclusive file lock, one record per
line, so concurrent invocations interleave whole records only.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

from .errors import ConfigError

try:
    import tomllib as _toml
except ImportError:  # pragma: no cover - 3.10 ships without tomllib
    import tomli as _toml

_FIELDS = ("operation", "law", "kernel", "params", "seed", "out")


def _plain(value: Any, where: str) -> Any:
    # Restrict configs to JSON-representable scalars and containers so the
    # canonical form is unambiguous.
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float, str)):
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v, where) for v in value]
    if isinstance(value, Mapping):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise ConfigError(f"{where}: mapping key {k!r} is not a string")
            out[k] = _plain(v, f"{where}.{k}")
        return out
    raise ConfigError(f"{where}: unsupported value type {type(value).__name__}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an operation plus everything needed to rerun it.

    law is a builtin name, an inline atom string ("-1:2/3,2:1/3"), or a
    mapping {"atoms": [[v, p], ...], "kind": ...}; kernel is a mapping
    understood by chain.kernel_from_spec.  Exactly the fields below are
    accepted; anything else in a config file is an error, not a warning.
    """

    operation: str
    seed: int = 0
    law: Any = None
    kernel: Any = None
    params: Mapping[str, Any] = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.operation, str) or not self.operation:
            raise ConfigError("operation must be a non-empty string")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.out is not None and not isinstance(self.out, str):
            raise ConfigError(f"out must be a path string, got {self.out!r}")
        if self.law is not None and not isinstance(self.law, (str, Mapping)):
            raise ConfigError(f"law must be a name or mapping, got {self.law!r}")
        if self.kernel is not None and not isinstance(self.kernel, (str, Mapping)):
            raise ConfigError(f"kernel must be a name or mapping, got {self.kernel!r}")
        object.__setattr__(self, "params", _plain(self.params, "params"))
        if self.law is not None:
            object.__setattr__(self, "law", _plain(self.law, "law"))
        if self.kernel is not None:
            object.__setattr__(self, "kernel", _plain(self.kernel, "kernel"))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        if "operation" not in data:
            raise ConfigError("config is missing required field 'operation'")
        return cls(**{k: data[k] for k in _FIELDS if k in data})

    def to_dict(self) -> dict:
        d: dict = {"operation": self.operation, "seed": self.seed}
        if self.law is not None:
            d["law"] = self.law
        if self.kernel is not None:
            d["kernel"] = self.kernel
        if self.params:
            d["params"] = dict(self.params)
        if self.out is not None:
            d["out"] = self.out
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def canonical(self) -> str:
        """Key-sorted minimal JSON; the hashing and equality basis."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def inputs_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def experiment_id(self) -> str:
        return f"{self.operation}-{self.inputs_hash()[:12]}"

    def resolve_law(self):
        from . import steplaw

        if self.law is None:
            raise ConfigError(f"operation {self.operation!r} needs a law")
        try:
            if isinstance(self.law, str):
                return steplaw.parse_law(self.law)
            return steplaw.law_from_config(self.law)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad law spec {self.law!r}: {exc}") from exc

    def resolve_kernel(self):
        from . import chain

        if self.kernel is None:
            raise ConfigError(f"operation {self.operation!r} needs a kernel")
        spec = {"family": self.kernel} if isinstance(self.kernel, str) else self.kernel
        try:
            return chain.kernel_from_spec(spec)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad kernel spec {self.kernel!r}: {exc}") from exc


def loads(text: str) -> ExperimentConfig:
    """Parse a config document; JSON if it opens with '{', TOML otherwise."""
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            data = json.loads(text)
        else:
            data = _toml.loads(text)
    except (json.JSONDecodeError, _toml.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def load(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


@dataclass
class ResultRecord:
    """One completed experiment, as stored.

    outputs maps names to scalars or tables ({"columns": [...], "rows":
    [...]}); bounds carries a certified error bound or MC sigma for each
    scalar that has one; criteria is the pass/fail verdict per declared
    check.  Two runs with the same config and seed produce the same
    record apart from the timestamp; DP-route outputs are bit-identical.
    """

    experiment: str
    inputs: str
    backend: str
    outputs: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    criteria: dict = field(default_factory=dict)
    created: float = field(default_factory=time.time)

    @classmethod
    def for_config(cls, cfg: ExperimentConfig, backend: str) -> "ResultRecord":
        return cls(experiment=cfg.experiment_id(), inputs=cfg.inputs_hash(),
                   backend=backend)

    def put(self, name: str, value, bound=None) -> None:
        self.outputs[name] = value
        if bound is not None:
            self.bounds[name] = bound

    def put_table(self, name: str, columns, rows) -> None:
        self.outputs[name] = {"columns": list(columns),
                              "rows": [list(r) for r in rows]}

    def passed(self) -> bool:
        return all(self.criteria.values())

    def core(self) -> dict:
        """Everything except the timestamp; the reproducibility contract
        is equality of cores, not of files."""
        return {"experiment": self.experiment, "inputs": self.inputs,
                "backend": self.backend, "outputs": self.outputs,
                "bounds": self.bounds, "criteria": self.criteria}

    def to_json(self) -> str:
        doc = dict(self.core(), created=self.created)
        return json.dumps(doc, sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        doc = json.loads(line)
        return cls(experiment=doc["experiment"], inputs=doc["inputs"],
                   backend=doc["backend"], outputs=doc["outputs"],
                   bounds=doc["bounds"], criteria=doc["criteria"],
                   created=doc["created"])


class ResultStore:
    """Append-only JSONL result log with advisory locking.

    Appends take an exclusive fcntl lock for the write+flush, so records
    from concurrent processes never shear.  Nothing ever rewrites the
    file; rerunning an experiment appends a fresh record.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)

    def append(self, record: ResultRecord) -> None:
        line = record.to_json() + "\n"
        with open(self.path, "a", encoding="utf-8") as fh:
            _lock(fh)
            try:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            finally:
                _unlock(fh)

    def __iter__(self) -> Iterator[ResultRecord]:
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                if line.strip():
                    yield ResultRecord.from_json(line)

    def last(self) -> ResultRecord | None:
        rec = None
        for rec in self:
            pass
        return rec


if os.name == "posix":
    import fcntl

    def _lock(fh):
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)

    def _unlock(fh):
        fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
else:  # pragma: no cover - windows fallback, advisory only
    def _lock(fh):
        pass

    def _unlock(fh):
        pass
