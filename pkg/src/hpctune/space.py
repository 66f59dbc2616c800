"""Mixed ordinal/categorical parameter spaces: definition, sampling, encoding, enumeration.

Parameter values are opaque strings; an ordinal parameter's sequence order is
meaningful, a categorical parameter's order is arbitrary but fixed. Spaces are
immutable after construction and safe to share; all randomness comes from a
caller-owned ``random.Random``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterator

Configuration = dict[str, str]
EncodedPoint = tuple[float, ...]

KINDS = ("ordinal", "categorical")


class CapExceededError(RuntimeError):
    """Enumeration refused: space cardinality exceeds the caller-supplied cap."""


@dataclass(frozen=True)
class Parameter:
    """One tunable parameter with a finite, ordered list of string values."""

    name: str
    kind: str
    values: tuple[str, ...]
    default: str

    def __post_init__(self) -> None:
        if not self.name or not self.name.isidentifier():
            raise ValueError(f"parameter name {self.name!r} is not an identifier")
        if self.kind not in KINDS:
            raise ValueError(f"parameter {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError(f"parameter {self.name!r}: values must be non-empty")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"parameter {self.name!r}: duplicate values")
        if self.default not in self.values:
            raise ValueError(f"parameter {self.name!r}: default {self.default!r} not in values")

    def index_of(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ValueError(
                f"value {value!r} is not legal for parameter {self.name!r}"
            ) from None


@dataclass(frozen=True)
class ParamSpace:
    """Ordered set of parameters plus the sampling seed that owns the search domain."""

    parameters: tuple[Parameter, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(self.parameters))
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def parameter(self, name: str) -> Parameter:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(f"no parameter named {name!r}")

    def cardinality(self) -> int:
        """Number of distinct configurations: product of the per-parameter value counts.

        Where a named parameter is substituted at several code sites it still
        counts once here; a published size that multiplies repeated sites will
        exceed this product.
        """
        n = 1
        for p in self.parameters:
            n *= len(p.values)
        return n

    def default_configuration(self) -> Configuration:
        return {p.name: p.default for p in self.parameters}

    def validate(self, config: Configuration) -> None:
        """Raise ValueError unless config assigns a legal value to every parameter."""
        if set(config) != set(self.names):
            extra = set(config) - set(self.names)
            missing = set(self.names) - set(config)
            raise ValueError(
                f"configuration keys do not match space: missing={sorted(missing)} extra={sorted(extra)}"
            )
        for p in self.parameters:
            p.index_of(config[p.name])

    def key(self, config: Configuration) -> tuple[str, ...]:
        """Hashable identity of a configuration (values in parameter order)."""
        return tuple(config[p.name] for p in self.parameters)

    def sample(self, rng: random.Random) -> Configuration:
        """Draw one configuration, each parameter uniform over its values."""
        return {p.name: p.values[rng.randrange(len(p.values))] for p in self.parameters}

    def encode(self, config: Configuration) -> EncodedPoint:
        """Index-encode a configuration: coordinate i is the value's position in
        parameter i's sequence. Preserves ordinal order; categorical indices are
        just the fixed listing order (the surrogate is tree-based, so axis splits
        on indices suffice)."""
        return tuple(float(p.index_of(config[p.name])) for p in self.parameters)

    def decode(self, coords: EncodedPoint) -> Configuration:
        if len(coords) != len(self.parameters):
            raise ValueError(f"expected {len(self.parameters)} coordinates, got {len(coords)}")
        config: Configuration = {}
        for p, c in zip(self.parameters, coords):
            i = int(c)
            if i != c or not 0 <= i < len(p.values):
                raise ValueError(f"coordinate {c!r} invalid for parameter {p.name!r}")
            config[p.name] = p.values[i]
        return config

    def enumerate_configs(self, cap: int) -> Iterator[Configuration]:
        """Yield every configuration exactly once, in lexicographic order of the
        encoded coordinates. Refuses outright when cardinality exceeds ``cap``."""
        card = self.cardinality()
        if card > cap:
            raise CapExceededError(f"cardinality {card} exceeds cap {cap}")
        names = self.names
        for combo in itertools.product(*(p.values for p in self.parameters)):
            yield dict(zip(names, combo))

    def fingerprint(self) -> str:
        """Stable digest of the space definition, recorded in result logs."""
        doc = {
            "seed": self.seed,
            "parameters": [
                {"name": p.name, "kind": p.kind, "values": list(p.values), "default": p.default}
                for p in self.parameters
            ],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
