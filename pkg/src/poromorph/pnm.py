"""Pore-network extraction and single-phase flow simulation.

Extraction is watershed-based: distance transform, Gaussian smoothing,
local-maxima markers merged by a minimum separation, then marker-based
watershed of the negated distance map restricted to the pore phase. One
pore per watershed region; throats where regions share voxel faces.

Flow reduces the Stokes system to its Darcy form on the network: each
throat is a Hagen-Poiseuille tube with conductance g = pi d^4 / (128 mu l),
node conservation holds at interior pores, and pressure is fixed at inlet
and outlet faces. The resulting symmetric positive-definite system is
solved by Jacobi-preconditioned conjugate gradient.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as graph_components
from skimage.segmentation import watershed

from .errors import (
    EmptyNetworkError,
    EmptyPorePhaseError,
    NoPercolatingPathError,
    NoPoresFoundError,
    SingularSystemError,
    SolverDivergedError,
)
from .imageops import distance_transform_edt
from .volume import BINARY, VoxelVolume

#: 1 millidarcy in m^2.
MILLIDARCY_M2 = 9.869233e-16

INTERIOR = "interior"
INLET = "inlet"
OUTLET = "outlet"

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class Pore:
    id: int
    center_m: tuple[float, float, float]
    inscribed_diameter_m: float
    region_volume_m3: float
    boundary: str = INTERIOR

    def __post_init__(self):
        if self.inscribed_diameter_m <= 0:
            raise ValueError(f"pore {self.id}: inscribed diameter must be > 0")
        if self.region_volume_m3 <= 0:
            raise ValueError(f"pore {self.id}: region volume must be > 0")
        if self.boundary not in (INTERIOR, INLET, OUTLET):
            raise ValueError(f"pore {self.id}: unknown boundary label {self.boundary!r}")


@dataclass(frozen=True)
class Throat:
    pore_a: int
    pore_b: int
    diameter_m: float
    length_m: float

    def __post_init__(self):
        if self.pore_a == self.pore_b:
            raise ValueError(f"self-loop throat at pore {self.pore_a}")
        if self.diameter_m <= 0 or self.length_m <= 0:
            raise ValueError(
                f"throat {self.pore_a}-{self.pore_b}: diameter and length must be > 0")


@dataclass(frozen=True)
class PoreNetwork:
    pores: tuple[Pore, ...]
    throats: tuple[Throat, ...]

    def __post_init__(self):
        object.__setattr__(self, "pores", tuple(self.pores))
        object.__setattr__(self, "throats", tuple(self.throats))
        ids = [p.id for p in self.pores]
        if len(set(ids)) != len(ids):
            raise ValueError("pore ids are not unique")
        known = set(ids)
        seen_pairs = set()
        for t in self.throats:
            if t.pore_a not in known or t.pore_b not in known:
                raise ValueError(f"throat {t.pore_a}-{t.pore_b} references unknown pore")
            pair = (min(t.pore_a, t.pore_b), max(t.pore_a, t.pore_b))
            if pair in seen_pairs:
                raise ValueError(f"duplicate throat between pores {pair}")
            seen_pairs.add(pair)

    @property
    def pore_count(self) -> int:
        return len(self.pores)

    @property
    def throat_count(self) -> int:
        return len(self.throats)

    def pores_with(self, boundary: str) -> list[Pore]:
        return [p for p in self.pores if p.boundary == boundary]

    def to_json_dict(self) -> dict:
        return {
            "pores": [{
                "id": p.id,
                "center_m": list(p.center_m),
                "inscribed_diameter_m": p.inscribed_diameter_m,
                "region_volume_m3": p.region_volume_m3,
                "boundary": p.boundary,
            } for p in self.pores],
            "throats": [{
                "pore_a": t.pore_a,
                "pore_b": t.pore_b,
                "diameter_m": t.diameter_m,
                "length_m": t.length_m,
            } for t in self.throats],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "PoreNetwork":
        pores = tuple(Pore(
            id=int(p["id"]),
            center_m=tuple(float(c) for c in p["center_m"]),
            inscribed_diameter_m=float(p["inscribed_diameter_m"]),
            region_volume_m3=float(p["region_volume_m3"]),
            boundary=p.get("boundary", INTERIOR),
        ) for p in d["pores"])
        throats = tuple(Throat(
            pore_a=int(t["pore_a"]),
            pore_b=int(t["pore_b"]),
            diameter_m=float(t["diameter_m"]),
            length_m=float(t["length_m"]),
        ) for t in d["throats"])
        return cls(pores, throats)


@dataclass(frozen=True)
class NetworkStats:
    mean_pore_diameter_m: float
    mean_throat_diameter_m: float | None
    pore_count: int
    throat_count: int
    mean_coordination: float


@dataclass(frozen=True)
class PermeabilityResult:
    k_m2: float
    k_mD: float
    flow_rate_m3_s: float
    delta_p_pa: float
    viscosity_pa_s: float
    axis: str
    pressure_pa: np.ndarray  # per pore, network order; NaN for pruned pores
    solver_residual: float
    solver_iterations: int

    def to_json_dict(self) -> dict:
        pressures = [None if not math.isfinite(p) else p for p in self.pressure_pa]
        return {
            "k_m2": self.k_m2,
            "k_mD": self.k_mD,
            "flow_rate_m3_s": self.flow_rate_m3_s,
            "delta_p_pa": self.delta_p_pa,
            "viscosity_pa_s": self.viscosity_pa_s,
            "axis": self.axis,
            "pressure_pa": pressures,
            "solver_residual": self.solver_residual,
            "solver_iterations": self.solver_iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


@dataclass(frozen=True)
class ExtractionParams:
    """Knobs of the watershed extraction, both in voxel units."""

    smoothing_sigma: float = 0.4
    min_peak_separation: float = 4.0

    def __post_init__(self):
        if self.smoothing_sigma < 0:
            raise ValueError("smoothing_sigma must be >= 0")
        if self.min_peak_separation < 0:
            raise ValueError("min_peak_separation must be >= 0")


def extract_network(vol: VoxelVolume,
                    params: ExtractionParams | None = None,
                    axis: str = "z") -> PoreNetwork:
    """Extract a pore-throat network from a binary volume.

    Regions touching the low/high domain face along ``axis`` are labeled
    inlet/outlet (inlet wins when a region spans both). Pore and throat
    diameters come from the raw distance map: 2 * max(EDT) over the region
    voxels resp. over the shared-face voxels, times the voxel size.
    Deterministic: peak merging keeps the larger smoothed-distance value,
    ties broken by lexicographic voxel index.
    """
    if vol.encoding != BINARY:
        raise ValueError("extract_network requires a binary volume")
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")
    params = params or ExtractionParams()
    pore = vol.data.astype(bool)
    if not pore.any():
        raise EmptyPorePhaseError("volume has no pore voxels")

    dt = distance_transform_edt(vol, exterior="solid").data
    sm = ndi.gaussian_filter(dt, params.smoothing_sigma) if params.smoothing_sigma > 0 else dt

    local_max = (ndi.maximum_filter(sm, size=3, mode="nearest") == sm) & pore & (dt > 1.0)
    coords = np.argwhere(local_max)
    if coords.shape[0] == 0:
        raise NoPoresFoundError("no distance-map maxima above one voxel")

    peaks = _merge_peaks(coords, sm, params.min_peak_separation)

    markers = np.zeros(vol.dims, dtype=np.int32)
    markers[peaks[:, 0], peaks[:, 1], peaks[:, 2]] = np.arange(1, peaks.shape[0] + 1)
    labels = watershed(-sm, markers, mask=pore)
    n_regions = peaks.shape[0]

    a_m = vol.voxel_size_m
    index = np.arange(1, n_regions + 1)
    counts = ndi.sum_labels(np.ones_like(dt), labels, index=index)
    max_dt = ndi.maximum(dt, labels, index=index)
    cx = ndi.mean(np.arange(vol.dims[0], dtype=np.float64)[:, None, None] *
                  np.ones(vol.dims), labels, index=index)
    cy = ndi.mean(np.arange(vol.dims[1], dtype=np.float64)[None, :, None] *
                  np.ones(vol.dims), labels, index=index)
    cz = ndi.mean(np.arange(vol.dims[2], dtype=np.float64)[None, None, :] *
                  np.ones(vol.dims), labels, index=index)

    ax = _AXES[axis]
    lo_face = np.take(labels, 0, axis=ax)
    hi_face = np.take(labels, -1, axis=ax)
    inlet_labels = set(np.unique(lo_face)) - {0}
    outlet_labels = set(np.unique(hi_face)) - {0}

    pores = []
    for i in range(n_regions):
        lab = i + 1
        if lab in inlet_labels:
            boundary = INLET
        elif lab in outlet_labels:
            boundary = OUTLET
        else:
            boundary = INTERIOR
        pores.append(Pore(
            id=i,
            center_m=((cx[i] + 0.5) * a_m, (cy[i] + 0.5) * a_m, (cz[i] + 0.5) * a_m),
            inscribed_diameter_m=2.0 * float(max_dt[i]) * a_m,
            region_volume_m3=float(counts[i]) * a_m ** 3,
            boundary=boundary,
        ))

    throats = _find_throats(labels, dt, pores, a_m, n_regions)
    return PoreNetwork(tuple(pores), tuple(throats))


def _merge_peaks(coords: np.ndarray, sm: np.ndarray, min_sep: float) -> np.ndarray:
    """Greedy peak thinning: visit peaks by decreasing smoothed distance
    (lexicographic index on ties) and drop any peak within ``min_sep`` of an
    already accepted one. Result is re-sorted lexicographically."""
    values = sm[coords[:, 0], coords[:, 1], coords[:, 2]]
    flat = np.ravel_multi_index((coords[:, 0], coords[:, 1], coords[:, 2]), sm.shape)
    order = np.lexsort((flat, -values))
    ordered = coords[order].astype(np.float64)
    accepted: list[np.ndarray] = []
    min_sep_sq = min_sep * min_sep
    for row in ordered:
        if accepted:
            diff = np.asarray(accepted) - row
            if (np.einsum("ij,ij->i", diff, diff) < min_sep_sq).any():
                continue
        accepted.append(row)
    result = np.asarray(accepted, dtype=np.int64)
    lex = np.lexsort((result[:, 2], result[:, 1], result[:, 0]))
    return result[lex]


def _find_throats(labels: np.ndarray, dt: np.ndarray, pores: list[Pore],
                  a_m: float, n_regions: int) -> list[Throat]:
    keys_all = []
    vals_all = []
    for ax in range(3):
        la = np.swapaxes(labels, 0, ax)
        da = np.swapaxes(dt, 0, ax)
        l0, l1 = la[:-1], la[1:]
        contact = (l0 > 0) & (l1 > 0) & (l0 != l1)
        if not contact.any():
            continue
        lo = np.minimum(l0[contact], l1[contact]).astype(np.int64)
        hi = np.maximum(l0[contact], l1[contact]).astype(np.int64)
        keys_all.append(lo * (n_regions + 1) + hi)
        vals_all.append(np.maximum(da[:-1][contact], da[1:][contact]))
    if not keys_all:
        return []
    keys = np.concatenate(keys_all)
    vals = np.concatenate(vals_all)
    uniq, inverse = np.unique(keys, return_inverse=True)
    max_vals = np.zeros(uniq.size, dtype=np.float64)
    np.maximum.at(max_vals, inverse, vals)

    centers = np.asarray([p.center_m for p in pores])
    throats = []
    for key, fval in zip(uniq, max_vals):
        lo = int(key // (n_regions + 1)) - 1
        hi = int(key % (n_regions + 1)) - 1
        length = float(np.linalg.norm(centers[lo] - centers[hi]))
        if length <= 0:  # coincident centroids; fall back to one voxel
            length = a_m
        throats.append(Throat(
            pore_a=lo, pore_b=hi,
            diameter_m=2.0 * float(fval) * a_m,
            length_m=length,
        ))
    return throats


def network_stats(net: PoreNetwork) -> NetworkStats:
    """Arithmetic means of pore and throat diameters plus coordination."""
    if net.pore_count == 0:
        raise EmptyNetworkError("network has no pores")
    mean_pore = float(np.mean([p.inscribed_diameter_m for p in net.pores]))
    mean_throat = (float(np.mean([t.diameter_m for t in net.throats]))
                   if net.throats else None)
    return NetworkStats(
        mean_pore_diameter_m=mean_pore,
        mean_throat_diameter_m=mean_throat,
        pore_count=net.pore_count,
        throat_count=net.throat_count,
        mean_coordination=2.0 * net.throat_count / net.pore_count,
    )


def throat_conductance(throat: Throat, viscosity: float) -> float:
    """Hagen-Poiseuille conductance g = pi d^4 / (128 mu l), in m^3/(Pa s)."""
    return math.pi * throat.diameter_m ** 4 / (128.0 * viscosity * throat.length_m)


def simulate_permeability(net: PoreNetwork, axis: str = "z",
                          viscosity: float = 1.0e-3,
                          delta_p: float = 101325.0,
                          domain_length_m: float = 1.0,
                          domain_area_m2: float = 1.0,
                          rtol: float = 1.0e-8,
                          max_iter: int | None = None) -> PermeabilityResult:
    """Absolute permeability along ``axis`` from a network flow solve.

    Inlet pores are held at ``delta_p``, outlets at 0. Pores in components
    that do not connect an inlet to an outlet are pruned (pressure NaN).
    ``max_iter`` truncates the conjugate gradient, useful for diagnostics;
    by default the solve runs to relative residual ``rtol``.
    """
    n = net.pore_count
    if n == 0:
        raise EmptyNetworkError("network has no pores")
    index_of = {p.id: i for i, p in enumerate(net.pores)}
    inlet = np.array([index_of[p.id] for p in net.pores_with(INLET)], dtype=np.int64)
    outlet = np.array([index_of[p.id] for p in net.pores_with(OUTLET)], dtype=np.int64)
    if inlet.size == 0 or outlet.size == 0:
        raise NoPercolatingPathError("network lacks an inlet or an outlet pore")

    ta = np.array([index_of[t.pore_a] for t in net.throats], dtype=np.int64)
    tb = np.array([index_of[t.pore_b] for t in net.throats], dtype=np.int64)
    g = np.array([throat_conductance(t, viscosity) for t in net.throats])

    adj = coo_matrix((np.ones(ta.size * 2), (np.r_[ta, tb], np.r_[tb, ta])), shape=(n, n))
    n_comp, comp = graph_components(adj.tocsr(), directed=False)
    has_in = np.zeros(n_comp, dtype=bool)
    has_out = np.zeros(n_comp, dtype=bool)
    has_in[comp[inlet]] = True
    has_out[comp[outlet]] = True
    active = has_in[comp] & has_out[comp]
    if not active.any():
        raise NoPercolatingPathError("no component contains both inlet and outlet pores")

    pressure = np.full(n, np.nan)
    is_dirichlet = np.zeros(n, dtype=bool)
    is_dirichlet[inlet] = True
    is_dirichlet[outlet] = True
    pressure[inlet] = delta_p
    pressure[outlet] = 0.0
    pressure[~active] = np.nan

    unknown = np.flatnonzero(active & ~is_dirichlet)
    residual, iterations = 0.0, 0
    if unknown.size:
        both_active = active[ta] & active[tb]
        ga, ra, rb = g[both_active], ta[both_active], tb[both_active]
        lap = coo_matrix(
            (np.r_[ga, ga, -ga, -ga],
             (np.r_[ra, rb, ra, rb], np.r_[ra, rb, rb, ra])),
            shape=(n, n)).tocsr()
        sub = lap[unknown][:, unknown]
        if np.any(sub.diagonal() <= 0):
            raise SingularSystemError("interior pore without conductance after pruning")
        fixed = np.flatnonzero(active & is_dirichlet)
        b = -lap[unknown][:, fixed] @ pressure[fixed]
        x, residual, iterations = _conjugate_gradient(sub, b, rtol, max_iter)
        pressure[unknown] = x

    # total flux leaving the inlet face
    flow = 0.0
    inlet_set = set(int(i) for i in inlet)
    for t, cond in zip(net.throats, g):
        ia, ib = index_of[t.pore_a], index_of[t.pore_b]
        if not (active[ia] and active[ib]):
            continue
        if ia in inlet_set and ib not in inlet_set:
            flow += cond * (pressure[ia] - pressure[ib])
        elif ib in inlet_set and ia not in inlet_set:
            flow += cond * (pressure[ib] - pressure[ia])

    k_m2 = viscosity * domain_length_m * flow / (domain_area_m2 * delta_p)
    return PermeabilityResult(
        k_m2=float(k_m2),
        k_mD=float(k_m2 / MILLIDARCY_M2),
        flow_rate_m3_s=float(flow),
        delta_p_pa=float(delta_p),
        viscosity_pa_s=float(viscosity),
        axis=axis,
        pressure_pa=pressure,
        solver_residual=float(residual),
        solver_iterations=int(iterations),
    )


def mass_balance_check(result: PermeabilityResult, net: PoreNetwork) -> float:
    """Max relative node imbalance |sum_j g_ij (p_i - p_j)| / (Q + eps) over
    interior pores with solved pressure. At most 1e-6 for a converged solve."""
    index_of = {p.id: i for i, p in enumerate(net.pores)}
    p = result.pressure_pa
    net_flux = np.zeros(net.pore_count)
    for t in net.throats:
        ia, ib = index_of[t.pore_a], index_of[t.pore_b]
        if not (math.isfinite(p[ia]) and math.isfinite(p[ib])):
            continue
        q = throat_conductance(t, result.viscosity_pa_s) * (p[ia] - p[ib])
        net_flux[ia] += q
        net_flux[ib] -= q
    worst = 0.0
    for i, pore in enumerate(net.pores):
        if pore.boundary != INTERIOR or not math.isfinite(p[i]):
            continue
        worst = max(worst, abs(net_flux[i]))
    return worst / (abs(result.flow_rate_m3_s) + 1e-30)


def _conjugate_gradient(A, b: np.ndarray, rtol: float,
                        max_iter: int | None) -> tuple[np.ndarray, float, int]:
    """Jacobi-preconditioned CG. Returns (x, relative residual, iterations).

    Stops at ``rtol`` or after ``max_iter`` steps; raises only on non-finite
    iterates so that deliberately truncated solves stay inspectable.
    """
    n = b.size
    x = np.zeros(n)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return x, 0.0, 0
    diag = A.diagonal()
    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    limit = max_iter if max_iter is not None else 10 * n + 100
    iterations = 0
    while iterations < limit:
        if float(np.linalg.norm(r)) / b_norm <= rtol:
            break
        Ap = A @ p
        denom = float(p @ Ap)
        if denom <= 0 or not math.isfinite(denom):
            raise SolverDivergedError("conjugate gradient lost positive definiteness")
        alpha = rz / denom
        x = x + alpha * p
        r = r - alpha * Ap
        if not np.isfinite(r).all():
            raise SolverDivergedError("non-finite residual in conjugate gradient")
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        iterations += 1
    return x, float(np.linalg.norm(r)) / b_norm, iterations
