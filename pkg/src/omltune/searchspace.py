"""Typed hyperparameter spaces and the vector <-> config encoding.

A search space is an ordered list of hyperparameter definitions; the
order fixes the layout of the tuner-internal continuous vectors.
Internal coordinates live on the pre-transform scale (a parameter with
the power-of-two transform is tuned over its exponent), and factors are
tuned as rounded indices over their selected level subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

PARAM_KINDS = ("int", "float", "factor")
# "power_10" extends the transform set for log-scale float parameters
# (used by the logistic learning rate); "power_2_int" stays int-only.
TRANSFORMS = ("none", "power_2_int", "power_10")

MODEL_IDS = ("hoeffding_tree", "logistic_regression")


class SpaceError(ValueError):
    """Raised for malformed definitions, vectors, or configs."""


@dataclass(frozen=True)
class HyperParamDef:
    name: str
    kind: str  # int | float | factor
    default: object  # effective value (level name for factors)
    lower: float
    upper: float
    transform: str = "none"
    levels: tuple = ()  # factor only: full ordered level set
    selected_levels: tuple = ()  # factor only: non-empty subset being tuned

    def __post_init__(self):
        if self.kind not in PARAM_KINDS:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.transform not in TRANSFORMS:
            raise SpaceError(f"{self.name}: unknown transform {self.transform!r}")
        if self.transform == "power_2_int" and self.kind != "int":
            raise SpaceError(f"{self.name}: power_2_int applies to int parameters only")
        if self.transform == "power_10" and self.kind != "float":
            raise SpaceError(f"{self.name}: power_10 applies to float parameters only")
        if self.kind == "factor":
            if not self.levels:
                raise SpaceError(f"{self.name}: factor needs a level set")
            if not self.selected_levels:
                object.__setattr__(self, "selected_levels", tuple(self.levels))
            extra = [lv for lv in self.selected_levels if lv not in self.levels]
            if extra:
                raise SpaceError(f"{self.name}: levels {extra} not in the full set")
            object.__setattr__(self, "lower", 0.0)
            object.__setattr__(self, "upper", float(len(self.selected_levels) - 1))
            if self.default not in self.selected_levels:
                raise SpaceError(
                    f"{self.name}: default {self.default!r} not among selected levels"
                )
        else:
            if self.levels or self.selected_levels:
                raise SpaceError(f"{self.name}: only factors carry levels")
            if not (self.lower <= self.upper):
                raise SpaceError(f"{self.name}: lower {self.lower} > upper {self.upper}")
            d = self.internal_default()
            if not (self.lower <= d <= self.upper):
                raise SpaceError(
                    f"{self.name}: default {self.default!r} (internal {d}) outside "
                    f"[{self.lower}, {self.upper}]"
                )

    def internal_default(self) -> float:
        """Default value in internal (pre-transform) coordinates."""
        if self.kind == "factor":
            return float(self.selected_levels.index(self.default))
        if self.transform == "power_2_int":
            return float(round(math.log2(self.default)))
        if self.transform == "power_10":
            return float(math.log10(self.default))
        return float(self.default)


def apply_transform(p: HyperParamDef, x: float) -> object:
    """Internal coordinate -> effective value for one parameter."""
    if p.kind == "factor":
        idx = int(round(x))
        idx = min(max(idx, 0), len(p.selected_levels) - 1)
        return p.selected_levels[idx]
    if p.kind == "int":
        k = int(round(x))
        if p.transform == "power_2_int":
            return 2**k
        return k
    if p.transform == "power_10":
        return 10.0**x
    return float(x)


def invert_transform(p: HyperParamDef, value: object) -> float:
    """Effective value -> internal coordinate (inverse of apply_transform)."""
    if p.kind == "factor":
        try:
            return float(p.selected_levels.index(value))
        except ValueError:
            raise SpaceError(f"{p.name}: unknown level {value!r}") from None
    if p.kind == "int":
        if p.transform == "power_2_int":
            x = math.log2(value)
            if 2 ** round(x) != value:
                raise SpaceError(f"{p.name}: {value!r} is not a power of two")
            return float(round(x))
        return float(value)
    if p.transform == "power_10":
        return float(math.log10(value))
    return float(value)


@dataclass(frozen=True)
class SearchSpace:
    model_id: str
    params: tuple[HyperParamDef, ...]

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SpaceError("parameter names must be unique")

    def __len__(self) -> int:
        return len(self.params)

    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def lower_bounds(self) -> np.ndarray:
        return np.array([p.lower for p in self.params], dtype=float)

    def upper_bounds(self) -> np.ndarray:
        return np.array([p.upper for p in self.params], dtype=float)

    def default_vector(self) -> np.ndarray:
        return np.array([p.internal_default() for p in self.params], dtype=float)

    def check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (len(self.params),):
            raise SpaceError(f"vector length {v.shape} does not match space size {len(self)}")
        for p, x in zip(self.params, v):
            if not (p.lower - 1e-9 <= x <= p.upper + 1e-9):
                raise SpaceError(f"{p.name}: coordinate {x} outside [{p.lower}, {p.upper}]")
        return v

    def normalize(self, v) -> np.ndarray:
        """Internal coordinates -> [0, 1]^d (constant dims map to 0)."""
        v = np.asarray(v, dtype=float)
        lo, hi = self.lower_bounds(), self.upper_bounds()
        width = hi - lo
        out = np.zeros_like(v, dtype=float)
        active = width > 0
        out[..., active] = (v[..., active] - lo[active]) / width[active]
        return np.clip(out, 0.0, 1.0)

    def denormalize(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo, hi = self.lower_bounds(), self.upper_bounds()
        return lo + np.clip(u, 0.0, 1.0) * (hi - lo)


def decode(space: SearchSpace, v) -> dict:
    """ConfigVector -> effective model configuration."""
    v = space.check_vector(v)
    return {p.name: apply_transform(p, x) for p, x in zip(space.params, v)}


def encode(space: SearchSpace, config: dict) -> np.ndarray:
    """Effective model configuration -> ConfigVector (inverse of decode)."""
    unknown = set(config) - set(space.names())
    if unknown:
        raise SpaceError(f"unknown hyperparameters: {sorted(unknown)}")
    missing = set(space.names()) - set(config)
    if missing:
        raise SpaceError(f"missing hyperparameters: {sorted(missing)}")
    return space.check_vector(
        [invert_transform(p, config[p.name]) for p in space.params]
    )


def builtin_space(model_id: str) -> SearchSpace:
    """Registry of tunable hyperparameters per model.

    Defaults and transforms are fixed here; user configs may narrow the
    numeric bounds or the factor level subsets but cannot change defaults
    or transforms.
    """
    if model_id == "hoeffding_tree":
        params = (
            HyperParamDef("grace_period", "int", 200, 10.0, 1000.0),
            HyperParamDef("max_depth", "int", 2**20, 2.0, 20.0, transform="power_2_int"),
            HyperParamDef("delta", "float", 1e-7, 1e-8, 1e-6),
            HyperParamDef("tau", "float", 0.05, 0.01, 0.1),
            HyperParamDef(
                "leaf_prediction", "factor", "nba", 0.0, 2.0, levels=("mc", "nb", "nba")
            ),
            HyperParamDef("nb_threshold", "int", 0, 0.0, 10.0),
            HyperParamDef(
                "splitter", "factor", "GaussianSplitter", 0.0, 0.0,
                levels=("GaussianSplitter",),
            ),
            HyperParamDef("binary_split", "factor", "0", 0.0, 1.0, levels=("0", "1")),
        )
    elif model_id == "logistic_regression":
        params = (
            HyperParamDef("lr", "float", 1e-2, -4.0, 0.0, transform="power_10"),
            HyperParamDef("l2", "float", 0.0, 0.0, 1.0),
        )
    else:
        raise SpaceError(f"unknown model id {model_id!r}")
    return SearchSpace(model_id=model_id, params=params)


def customize_space(
    base: SearchSpace,
    bounds: dict[str, tuple[float, float]] | None = None,
    level_subsets: dict[str, list] | None = None,
) -> SearchSpace:
    """Narrow numeric bounds or factor level subsets of a builtin space.

    Defaults and transforms are registry-owned and stay fixed.
    """
    bounds = bounds or {}
    level_subsets = level_subsets or {}
    for name in list(bounds) + list(level_subsets):
        if name not in base.names():
            raise SpaceError(f"unknown hyperparameter {name!r} for {base.model_id}")
    new_params = []
    for p in base.params:
        if p.name in level_subsets:
            if p.kind != "factor":
                raise SpaceError(f"{p.name}: level subsets apply to factors only")
            p = replace(p, selected_levels=tuple(level_subsets[p.name]), lower=0.0, upper=0.0)
        if p.name in bounds:
            if p.kind == "factor":
                raise SpaceError(f"{p.name}: factors take level subsets, not bounds")
            lo, hi = bounds[p.name]
            p = replace(p, lower=float(lo), upper=float(hi))
        new_params.append(p)
    return SearchSpace(model_id=base.model_id, params=tuple(new_params))
