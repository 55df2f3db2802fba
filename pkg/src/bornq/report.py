"""Solver reports and the versioned JSON schema used by the command line."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    note: str = ""


@dataclass
class SolveReport:
    """Outcome of one solve or verification run.

    ``timing`` holds wall-clock data and is the only field allowed to differ
    between two runs with identical configuration and seed.
    """

    mode: str = ""
    energy_initial: float = float("nan")
    energy_final: float = float("nan")
    iterations: int = 0
    converged: bool = False
    grad_norm: float = float("nan")
    energy_decrease: float = float("nan")
    energy_history: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def add_check(self, name, value, tol, passed=None, note=""):
        value = float(value)
        if passed is None:
            passed = value <= tol
        self.checks.append(Check(name, value, float(tol), bool(passed), note))
        return self.checks[-1]

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), default=_jsonable, **kw)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown report keys: {sorted(unknown)}")
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {data['schema_version']}")
        data = dict(data)
        check_keys = {f.name for f in fields(Check)}
        checks = []
        for c in data.pop("checks", []):
            if set(c) - check_keys:
                raise ValueError(f"unknown check keys: {sorted(set(c) - check_keys)}")
            checks.append(Check(**c))
        return cls(checks=checks, **data)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _jsonable(o):
    # numpy scalars and arrays
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
