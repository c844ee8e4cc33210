"""Search space definition: function sets, terminals and tree-count bound."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

from srurgs.errors import ConfigurationError

BINARY_FUNCTIONS = ("add", "sub", "mul", "div", "pow")
UNARY_FUNCTIONS = ("exp", "sin", "sinh")
ARITY = {**{name: 2 for name in BINARY_FUNCTIONS}, **{name: 1 for name in UNARY_FUNCTIONS}}

ALIASES = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow", "**": "pow"}

SIMPLE_BINARY = ("add", "sub", "div", "mul")
EXTENDED_BINARY = ("add", "sub", "div", "mul", "pow")

_PARAM_RE = re.compile(r"^p\d+$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def canonical_function_name(name: str) -> str:
    name = name.strip()
    return ALIASES.get(name, name)


def parse_function_list(text: str) -> tuple[str, ...]:
    """Parse a comma separated list such as ``"+,-,*,/"`` or ``"add,sin"``."""
    if not text.strip():
        return ()
    return tuple(canonical_function_name(part) for part in text.split(","))


def parameter_names(count: int) -> tuple[str, ...]:
    return tuple(f"p{k}" for k in range(count))


@dataclass(frozen=True)
class SearchSpaceConfig:
    """Ordered function sets and terminals; the ordering is part of the space.

    Terminal slots are filled from ``variables + parameters`` in that order.
    ``mode`` defaults to ``"mixed"`` when any unary function is permitted and
    ``"binary"`` otherwise.
    """

    binary_funcs: tuple[str, ...]
    variables: tuple[str, ...]
    parameters: tuple[str, ...] = ()
    unary_funcs: tuple[str, ...] = ()
    N: int = 1
    mode: str = field(default="")

    def __post_init__(self):
        for attr in ("binary_funcs", "variables", "parameters", "unary_funcs"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "binary_funcs", tuple(canonical_function_name(f) for f in self.binary_funcs))
        object.__setattr__(self, "unary_funcs", tuple(canonical_function_name(f) for f in self.unary_funcs))
        if not self.mode:
            object.__setattr__(self, "mode", "mixed" if self.unary_funcs else "binary")
        self._validate()

    def _validate(self):
        if self.mode not in ("binary", "mixed"):
            raise ConfigurationError(f"unknown enumeration mode {self.mode!r}")
        if self.N < 1:
            raise ConfigurationError("N must be at least 1")
        if not self.binary_funcs:
            raise ConfigurationError("at least one binary function is required")
        for name in self.binary_funcs:
            if ARITY.get(name) != 2:
                raise ConfigurationError(f"unsupported binary function {name!r}")
        for name in self.unary_funcs:
            if ARITY.get(name) != 1:
                raise ConfigurationError(f"unsupported unary function {name!r}")
        if self.unary_funcs and self.mode == "binary":
            raise ConfigurationError("unary functions require mixed mode")
        for group in (self.binary_funcs, self.unary_funcs):
            if len(set(group)) != len(group):
                raise ConfigurationError("duplicate function names")
        if self.m < 1:
            raise ConfigurationError("at least one terminal is required")
        for name in self.variables:
            if not _IDENT_RE.match(name) or _PARAM_RE.match(name) or name in ARITY:
                raise ConfigurationError(f"invalid variable name {name!r}")
        for name in self.parameters:
            if not _PARAM_RE.match(name):
                raise ConfigurationError(f"invalid parameter name {name!r}")
        if len(set(self.terminals)) != self.m:
            raise ConfigurationError("duplicate terminal names")

    @classmethod
    def create(cls, binary, variables, n_params: int = 0, unary=(), N: int = 1, mode: str = "") -> SearchSpaceConfig:
        if isinstance(binary, str):
            binary = parse_function_list(binary)
        if isinstance(unary, str):
            unary = parse_function_list(unary)
        return cls(
            binary_funcs=tuple(binary),
            variables=tuple(variables),
            parameters=parameter_names(n_params),
            unary_funcs=tuple(unary),
            N=N,
            mode=mode,
        )

    @property
    def f(self) -> int:
        return len(self.unary_funcs)

    @property
    def n(self) -> int:
        return len(self.binary_funcs)

    @property
    def m(self) -> int:
        return len(self.variables) + len(self.parameters)

    @property
    def terminals(self) -> tuple[str, ...]:
        return self.variables + self.parameters

    def with_N(self, N: int) -> SearchSpaceConfig:
        return SearchSpaceConfig(self.binary_funcs, self.variables, self.parameters, self.unary_funcs, N, self.mode)

    def to_dict(self) -> dict:
        return {
            "binary_funcs": list(self.binary_funcs),
            "unary_funcs": list(self.unary_funcs),
            "variables": list(self.variables),
            "parameters": list(self.parameters),
            "N": self.N,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SearchSpaceConfig:
        return cls(
            binary_funcs=tuple(data["binary_funcs"]),
            variables=tuple(data["variables"]),
            parameters=tuple(data.get("parameters", ())),
            unary_funcs=tuple(data.get("unary_funcs", ())),
            N=int(data["N"]),
            mode=data.get("mode", ""),
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
