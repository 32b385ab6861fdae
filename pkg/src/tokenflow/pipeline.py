"""Scenario construction pipeline: registry -> capacities, arcs, demand.

Turns a hub registry (metro sites with estimated power, electricity price,
and a demand weight) into a full Scenario: class capacities proportional to
site power, bidirectional arcs between hubs within a distance cutoff with a
fiber-propagation latency model, and population-weighted demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .network import Arc, NetworkError, Node, Scenario, WorkloadClass

EARTH_RADIUS_KM = 6371.0
GBPS_TO_GB_PER_S = 1.0 / 8.0  # decimal convention, no 1024 factors


@dataclass(frozen=True)
class HubRegistryEntry:
    """One registry row: a data-center hub and its demand weight."""

    hub: str
    metro: str = ""
    state: str = ""
    lat: float = 0.0
    lon: float = 0.0
    facility_count: int = 0
    est_power_mw: float = 1.0
    elec_price: float = 0.0
    population_weight: float = 0.0

    def __post_init__(self):
        if self.est_power_mw <= 0:
            raise NetworkError(f"hub {self.hub}: est_power_mw must be > 0")
        if self.population_weight < 0:
            raise NetworkError(f"hub {self.hub}: population_weight must be >= 0")


@dataclass(frozen=True)
class PipelineParams:
    """Knobs of the scenario generator.

    throughput maps class id -> tokens/s per MW of site power;
    base_demand maps class id -> tokens/s at population weight 1.0.
    Hubs listed in backbone_hubs are pairwise connected at backbone_gbps,
    every other qualifying pair gets default_gbps.
    """

    throughput: Mapping[str, float]
    base_demand: Mapping[str, float]
    max_arc_km: float = 2500.0
    backbone_hubs: frozenset[str] = frozenset()
    backbone_gbps: float = 100.0
    default_gbps: float = 10.0
    per_hop_overhead_ms: float = 5.0
    fiber_km_per_ms: float = 200.0
    transfer_tariff: float = 0.01
    demand_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "backbone_hubs", frozenset(self.backbone_hubs))
        for name in ("max_arc_km", "backbone_gbps", "default_gbps",
                     "per_hop_overhead_ms", "fiber_km_per_ms"):
            if getattr(self, name) <= 0:
                raise NetworkError(f"pipeline params: {name} must be > 0")
        if self.transfer_tariff < 0:
            raise NetworkError("pipeline params: transfer_tariff must be >= 0")
        if any(v <= 0 for v in self.throughput.values()):
            raise NetworkError("pipeline params: throughput coefficients must be > 0")
        if any(v < 0 for v in self.base_demand.values()):
            raise NetworkError("pipeline params: base demand rates must be >= 0")


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km on a 6371 km sphere."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def derive_capacity(entry: HubRegistryEntry, params: PipelineParams) -> dict[str, float]:
    """Class id -> tokens/s: site power times the class throughput coefficient."""
    return {cls: entry.est_power_mw * rate for cls, rate in params.throughput.items()}


def arc_latency_ms(distance_km: float, params: PipelineParams) -> float:
    """Fiber propagation plus the fixed per-hop overhead."""
    return distance_km / params.fiber_km_per_ms + params.per_hop_overhead_ms


def build_arcs(registry: Sequence[HubRegistryEntry], params: PipelineParams) -> list[Arc]:
    """Create two directed arcs per unordered hub pair within max_arc_km.

    A pair runs at backbone capacity only when both endpoints are backbone
    hubs. Capacities are converted from Gbps to GB/s by /8.
    """
    unknown = params.backbone_hubs - {e.hub for e in registry}
    if unknown:
        raise NetworkError(f"backbone hubs not in registry: {sorted(unknown)}")
    arcs: list[Arc] = []
    ordered = sorted(registry, key=lambda e: e.hub)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            dist = haversine_km(a.lat, a.lon, b.lat, b.lon)
            if dist > params.max_arc_km:
                continue
            backbone = a.hub in params.backbone_hubs and b.hub in params.backbone_hubs
            gbps = params.backbone_gbps if backbone else params.default_gbps
            for src, dst in ((a.hub, b.hub), (b.hub, a.hub)):
                arcs.append(Arc(
                    src=src,
                    dst=dst,
                    distance_km=dist,
                    latency_ms=arc_latency_ms(dist, params),
                    physical_capacity=gbps * GBPS_TO_GB_PER_S,
                    transfer_tariff=params.transfer_tariff,
                ))
    return arcs


def generate_demand(
    registry: Sequence[HubRegistryEntry],
    params: PipelineParams,
    classes: Sequence[WorkloadClass],
) -> np.ndarray:
    """Hub x class token demand at scale 1: weight * base rate per class.

    Rows follow the registry order sorted by hub id, columns the class order
    sorted by class id (the Scenario layout).
    """
    ordered = sorted(registry, key=lambda e: e.hub)
    cls_sorted = sorted(classes, key=lambda c: c.id)
    out = np.zeros((len(ordered), len(cls_sorted)))
    for j, entry in enumerate(ordered):
        for k, cls in enumerate(cls_sorted):
            out[j, k] = entry.population_weight * params.base_demand.get(cls.id, 0.0)
    return out


def build_scenario(
    registry: Sequence[HubRegistryEntry],
    params: PipelineParams,
    classes: Sequence[WorkloadClass],
    name: str = "",
) -> Scenario:
    """Run the full pipeline and assemble an immutable Scenario."""
    if not registry:
        raise NetworkError("registry is empty")
    missing = [c.id for c in classes if c.id not in params.throughput]
    if missing:
        raise NetworkError(f"throughput coefficients missing for classes: {missing}")
    nodes = [
        Node(
            id=e.hub,
            metro=e.metro,
            lat=e.lat,
            lon=e.lon,
            site_power_mw=e.est_power_mw,
            elec_price=e.elec_price,
            capacity=derive_capacity(e, params),
        )
        for e in registry
    ]
    demand = generate_demand(registry, params, classes)
    return Scenario(
        nodes=tuple(sorted(nodes, key=lambda n: n.id)),
        arcs=tuple(build_arcs(registry, params)),
        classes=tuple(sorted(classes, key=lambda c: c.id)),
        demand=demand,
        demand_scale=params.demand_scale,
        name=name,
    )
