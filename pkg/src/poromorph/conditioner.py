"""Gradual Gaussian deformation conditioned on a simulated rock property.

Each outer iteration draws an independent standard-normal vector u and
searches the one-parameter family z(t) = z cos t + u sin t, which stays
standard normal for every t. The property error |target - simulated| is
evaluated on a coarse t-grid over [0, 2pi) that always contains t = 0 (the
unperturbed latent, so an iteration can never regress), then refined by
golden-section around the best grid point. The best t is accepted and the
loop repeats until the error is within tolerance.

The line search replaces a gradient step on t: the forward model (network
extraction plus flow solve) is not differentiable, and a bounded number of
simulator calls per iteration keeps run cost predictable. Candidates whose
evaluation fails (for instance a non-percolating volume) score infinite
error, so the search routes around them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatchError,
    EvaluationFailedError,
    PoromorphError,
)
from . import morphometrics
from .pnm import (
    ExtractionParams,
    extract_network,
    network_stats,
    simulate_permeability,
)
from .volume import BINARY, VoxelVolume

POROSITY = "porosity"
ABSOLUTE_PERMEABILITY = "absolute_permeability"
MEAN_PORE_SIZE = "mean_pore_size"
MEAN_THROAT_SIZE = "mean_throat_size"

_UNITS = {
    POROSITY: "fraction",
    ABSOLUTE_PERMEABILITY: "mD",
    MEAN_PORE_SIZE: "m",
    MEAN_THROAT_SIZE: "m",
}

#: Stock acceptance tolerances per property kind (same units as the value).
DEFAULT_TOLERANCES = {
    POROSITY: 0.01,
    ABSOLUTE_PERMEABILITY: 15.0,
    MEAN_PORE_SIZE: 1.0e-7,
    MEAN_THROAT_SIZE: 5.0e-8,
}

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PropertyTarget:
    """A target property value with its acceptance tolerance (same units).

    Omitting the tolerance picks the stock one for the kind from
    :data:`DEFAULT_TOLERANCES`.
    """

    kind: str
    value: float
    tolerance: float | None = None

    def __post_init__(self):
        if self.kind not in _UNITS:
            raise ValueError(f"unknown property kind {self.kind!r}")
        if self.tolerance is None:
            object.__setattr__(self, "tolerance", DEFAULT_TOLERANCES[self.kind])
        if not (math.isfinite(self.value)):
            raise ValueError("target value must be finite")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.kind == POROSITY:
            if not (0.0 < self.value < 1.0):
                raise ValueError("porosity target must lie in (0, 1)")
        elif self.value <= 0:
            raise ValueError(f"{self.kind} target must be > 0")

    @property
    def units(self) -> str:
        return _UNITS[self.kind]

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value,
                "units": self.units, "tolerance": self.tolerance}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PropertyTarget":
        target = cls(kind=d["kind"], value=float(d["value"]),
                     tolerance=float(d["tolerance"]))
        units = d.get("units")
        if units is not None and units != target.units:
            raise ValueError(
                f"units {units!r} do not match {target.kind} ({target.units})")
        return target


@dataclass(frozen=True)
class ConditionerConfig:
    """Search-loop settings.

    ``t_grid`` coarse samples of t over [0, 2pi) plus ``refine_iters``
    golden-section evaluations per outer iteration, so every iteration costs
    exactly ``t_grid + refine_iters`` simulator calls. ``learning_rate`` is
    reserved for a finite-difference descent strategy and unused by the
    default line search.
    """

    max_outer_iters: int = 50
    t_grid: int = 8
    refine_iters: int = 6
    rng_seed: int = 0
    learning_rate: float | None = None
    extraction: ExtractionParams = field(default_factory=ExtractionParams)
    flow_axis: str = "z"
    viscosity_pa_s: float = 1.0e-3
    delta_p_pa: float = 101325.0

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.t_grid < 4:
            raise ValueError("t_grid must be >= 4")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    best_t: float
    error: float
    simulator_calls: int


@dataclass(frozen=True)
class ConditionResult:
    z_final: np.ndarray
    volume: VoxelVolume
    achieved: float
    error_trace: tuple[IterationRecord, ...]
    total_simulator_calls: int
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "z_final": [float(v) for v in self.z_final],
            "achieved": None if not math.isfinite(self.achieved) else self.achieved,
            "converged": self.converged,
            "total_simulator_calls": self.total_simulator_calls,
            "error_trace": [{
                "iter": r.iter,
                "best_t": r.best_t,
                "error": None if not math.isfinite(r.error) else r.error,
                "simulator_calls": r.simulator_calls,
            } for r in self.error_trace],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def combine_gaussian(z1: np.ndarray, z2: np.ndarray, t: float) -> np.ndarray:
    """z1 cos t + z2 sin t, elementwise; standard normal if z1, z2 are.

    Trig factors below one part in 1e15 are snapped to zero so that
    quarter-turn angles return the other operand bit-exactly (cos(pi/2)
    rounds to 6e-17, not 0, in IEEE arithmetic).
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise DimMismatchError(f"latent shapes differ: {z1.shape} vs {z2.shape}")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    c, s = math.cos(t), math.sin(t)
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    if s == 0.0:
        return z1 * c
    if c == 0.0:
        return z2 * s
    return z1 * c + z2 * s


def evaluate_property(vol: VoxelVolume, kind: str,
                      extraction: ExtractionParams | None = None,
                      flow_axis: str = "z",
                      viscosity_pa_s: float = 1.0e-3,
                      delta_p_pa: float = 101325.0) -> float:
    """Simulate one property of a binary volume.

    Porosity needs no network build; the other properties extract a network
    first. Failures (empty pore phase, no percolating path, ...) raise
    :class:`EvaluationFailedError` carrying the cause.
    """
    if vol.encoding != BINARY:
        raise ValueError("evaluate_property requires a binary volume")
    if kind == POROSITY:
        return morphometrics.porosity(vol)
    try:
        net = extract_network(vol, extraction, axis=flow_axis)
        if kind == ABSOLUTE_PERMEABILITY:
            nx, ny, nz = vol.dims
            a_m = vol.voxel_size_m
            sizes = {"x": nx, "y": ny, "z": nz}
            length = sizes[flow_axis] * a_m
            area = (vol.voxel_count // sizes[flow_axis]) * a_m ** 2
            result = simulate_permeability(
                net, axis=flow_axis, viscosity=viscosity_pa_s, delta_p=delta_p_pa,
                domain_length_m=length, domain_area_m2=area)
            return result.k_mD
        stats = network_stats(net)
        if kind == MEAN_PORE_SIZE:
            return stats.mean_pore_diameter_m
        if kind == MEAN_THROAT_SIZE:
            if stats.mean_throat_diameter_m is None:
                raise EvaluationFailedError("network has no throats")
            return stats.mean_throat_diameter_m
        raise ValueError(f"unknown property kind {kind!r}")
    except EvaluationFailedError:
        raise
    except PoromorphError as exc:
        raise EvaluationFailedError(f"{kind} evaluation failed: {exc}") from exc


def condition(generator, target: PropertyTarget,
              config: ConditionerConfig | None = None,
              z0: np.ndarray | None = None) -> ConditionResult:
    """Search the latent space until the generated volume hits the target.

    ``generator`` is any deterministic callable from a latent vector to a
    binary :class:`VoxelVolume` exposing ``latent_dim``. Returns the full
    error trace; a run that exhausts ``max_outer_iters`` comes back with
    ``converged=False`` and the best latent found (the accepted chain never
    regresses, so the final latent is the best one).
    """
    config = config or ConditionerConfig()
    rng = np.random.default_rng(config.rng_seed)
    dim = generator.latent_dim
    if z0 is None:
        z = rng.standard_normal(dim)
    else:
        z = np.asarray(z0, dtype=np.float64)
        if z.shape != (dim,):
            raise DimMismatchError(
                f"z0 has shape {z.shape}, generator expects ({dim},)")

    calls_total = 0
    trace: list[IterationRecord] = []
    best_achieved = math.nan
    converged = False

    def error_of(candidate: np.ndarray) -> tuple[float, float]:
        nonlocal calls_total
        calls_total += 1
        try:
            achieved = evaluate_property(
                generator(candidate), target.kind,
                extraction=config.extraction, flow_axis=config.flow_axis,
                viscosity_pa_s=config.viscosity_pa_s, delta_p_pa=config.delta_p_pa)
        except EvaluationFailedError:
            return math.inf, math.nan
        return abs(target.value - achieved), achieved

    for n in range(1, config.max_outer_iters + 1):
        u = rng.standard_normal(dim)
        evaluated: dict[float, tuple[float, float]] = {}

        def eval_t(t: float) -> float:
            # always a fresh simulator call, so call counts stay exact
            evaluated[t] = error_of(combine_gaussian(z, u, t))
            return evaluated[t][0]

        grid = [2.0 * math.pi * j / config.t_grid for j in range(config.t_grid)]
        for t in grid:
            eval_t(t)
        t_best_grid = min(grid, key=lambda t: (evaluated[t][0], abs(t)))

        # golden-section refinement around the best grid point
        delta = 2.0 * math.pi / config.t_grid
        a, b = t_best_grid - delta, t_best_grid + delta
        budget = config.refine_iters
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1 = eval_t(x1) if budget >= 1 else None
        f2 = eval_t(x2) if budget >= 2 else None
        budget -= min(budget, 2)
        while budget > 0:
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = eval_t(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = eval_t(x2)
            budget -= 1

        # prefer zero perturbation once the current latent already satisfies
        # the target; otherwise take the best candidate seen this iteration
        if evaluated[0.0][0] <= target.tolerance:
            t_star = 0.0
        else:
            t_star = min(evaluated, key=lambda t: (evaluated[t][0], abs(t)))
        err, achieved = evaluated[t_star]

        z = combine_gaussian(z, u, t_star)
        best_achieved = achieved
        trace.append(IterationRecord(
            iter=n, best_t=t_star, error=err,
            simulator_calls=config.t_grid + config.refine_iters))
        if err <= target.tolerance:
            converged = True
            break

    return ConditionResult(
        z_final=z,
        volume=generator(z),
        achieved=best_achieved,
        error_trace=tuple(trace),
        total_simulator_calls=calls_total,
        converged=converged,
    )
