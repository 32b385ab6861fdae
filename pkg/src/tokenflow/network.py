"""Domain types for a capacitated token-flow network.

Nodes process class-labelled token demand, directed arcs carry it between
metros, and the derived coefficient matrices feed the clearing LPs. All
orderings are deterministic (sorted by id) so that LP variable indices are
reproducible across runs.

Unit conventions: demand and capacity in tokens/s, costs internally in
$/token, payloads internally in GB/token. Constructors and reports use the
human-scale units ($/M tokens, GB/M tokens) and convert at the boundary.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

TOKENS_PER_MTOK = 1.0e6


class NetworkError(ValueError):
    """Structural problem in a network definition (bad reference, bad value)."""


@dataclass(frozen=True)
class WorkloadClass:
    """One service class (chat, image generation, ...).

    Attributes:
        id: symbolic identifier, used for ordering and lookups.
        energy_intensity: kWh per M tokens.
        payload: GB per M tokens of useful output.
        latency_bound_ms: class latency limit; None means unconstrained.
        label: display name.
    """

    id: str
    energy_intensity: float
    payload: float
    latency_bound_ms: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.energy_intensity <= 0:
            raise NetworkError(f"class {self.id}: energy_intensity must be > 0")
        if self.payload <= 0:
            raise NetworkError(f"class {self.id}: payload must be > 0")
        if self.latency_bound_ms is not None and self.latency_bound_ms <= 0:
            raise NetworkError(f"class {self.id}: latency bound must be > 0 or None")

    @property
    def latency_unbounded(self) -> bool:
        return self.latency_bound_ms is None


@dataclass(frozen=True)
class Node:
    """Compute site with class-specific capacity and a local electricity price.

    capacity maps class id -> tokens/s; classes absent from the mapping have
    zero capacity. energy_override supplies site-specific kWh/M tokens for
    selected classes (otherwise the class-level intensity applies).
    opex_adder is a uniform non-energy charge in $/M tokens.
    """

    id: str
    metro: str = ""
    lat: float = 0.0
    lon: float = 0.0
    site_power_mw: float = 0.0
    elec_price: float = 0.0
    capacity: Mapping[str, float] = field(default_factory=dict)
    energy_override: Mapping[str, float] = field(default_factory=dict)
    opex_adder: float = 0.0

    def __post_init__(self):
        if self.elec_price < 0:
            raise NetworkError(f"node {self.id}: elec_price must be >= 0")
        if self.opex_adder < 0:
            raise NetworkError(f"node {self.id}: opex_adder must be >= 0")
        if not -90.0 <= self.lat <= 90.0:
            raise NetworkError(f"node {self.id}: latitude out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise NetworkError(f"node {self.id}: longitude out of range")
        for cls, cap in self.capacity.items():
            if cap < 0 or not np.isfinite(cap):
                raise NetworkError(f"node {self.id}: capacity[{cls}] must be finite and >= 0")
        for cls, e in self.energy_override.items():
            if e <= 0 or not np.isfinite(e):
                raise NetworkError(f"node {self.id}: energy_override[{cls}] must be finite and > 0")

    def energy_intensity(self, cls: WorkloadClass) -> float:
        """kWh per M tokens for a class at this node (override wins)."""
        return self.energy_override.get(cls.id, cls.energy_intensity)

    def marginal_cost(self, cls: WorkloadClass) -> float:
        """Marginal processing cost in $/M tokens: price x intensity + opex."""
        return self.elec_price * self.energy_intensity(cls) + self.opex_adder


@dataclass(frozen=True)
class Arc:
    """Directed link. Antiparallel arcs are distinct entries.

    physical_capacity is in GB/s, transfer_tariff in $/GB, routing_cost maps
    class id -> private per-token delivery cost in $/M tokens (default 0).
    overhead_factor inflates the per-token transfer volume (protocol framing).
    """

    src: str
    dst: str
    distance_km: float = 0.0
    latency_ms: float = 1.0
    physical_capacity: float = 1.0
    transfer_tariff: float = 0.0
    routing_cost: Mapping[str, float] = field(default_factory=dict)
    overhead_factor: float = 1.0

    def __post_init__(self):
        if self.src == self.dst:
            raise NetworkError(f"arc {self.src}->{self.dst}: self-loops not allowed")
        if self.latency_ms <= 0:
            raise NetworkError(f"arc {self.src}->{self.dst}: latency must be > 0")
        if self.physical_capacity <= 0:
            raise NetworkError(f"arc {self.src}->{self.dst}: physical capacity must be > 0")
        if self.transfer_tariff < 0:
            raise NetworkError(f"arc {self.src}->{self.dst}: transfer tariff must be >= 0")
        if self.overhead_factor < 1.0:
            raise NetworkError(f"arc {self.src}->{self.dst}: overhead factor must be >= 1")
        if self.distance_km < 0:
            raise NetworkError(f"arc {self.src}->{self.dst}: distance must be >= 0")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)

    def transfer_intensity(self, cls: WorkloadClass) -> float:
        """Effective GB moved per token of a class on this arc (gamma)."""
        return self.overhead_factor * cls.payload / TOKENS_PER_MTOK


@dataclass(frozen=True)
class Scenario:
    """Full market instance: nodes, arcs, classes, and a demand matrix.

    demand is node x class in tokens/s at demand_scale 1.0; the effective
    demand used by the clearing problems is demand * demand_scale. The
    constructor re-sorts nodes and classes by id and arcs by (src, dst) so
    index positions are stable whatever order the caller supplies.
    """

    nodes: tuple[Node, ...]
    arcs: tuple[Arc, ...]
    classes: tuple[WorkloadClass, ...]
    demand: np.ndarray
    demand_scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        node_order = np.argsort([n.id for n in self.nodes], kind="stable")
        class_order = np.argsort([c.id for c in self.classes], kind="stable")
        nodes = tuple(self.nodes[i] for i in node_order)
        classes = tuple(self.classes[i] for i in class_order)
        arcs = tuple(sorted(self.arcs, key=lambda a: a.key))
        demand = np.asarray(self.demand, dtype=float)[np.ix_(node_order, class_order)]
        demand.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "demand", demand)
        self._validate()

    def _validate(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate node ids")
        cids = [c.id for c in self.classes]
        if len(set(cids)) != len(cids):
            raise NetworkError("duplicate class ids")
        known = set(ids)
        seen_arcs = set()
        for a in self.arcs:
            if a.src not in known:
                raise NetworkError(f"arc {a.src}->{a.dst}: unknown source node {a.src!r}")
            if a.dst not in known:
                raise NetworkError(f"arc {a.src}->{a.dst}: unknown destination node {a.dst!r}")
            if a.key in seen_arcs:
                raise NetworkError(f"duplicate arc {a.src}->{a.dst}")
            seen_arcs.add(a.key)
        if self.demand.shape != (len(self.nodes), len(self.classes)):
            raise NetworkError(
                f"demand shape {self.demand.shape} does not match "
                f"{len(self.nodes)} nodes x {len(self.classes)} classes"
            )
        if np.any(self.demand < 0) or not np.all(np.isfinite(self.demand)):
            raise NetworkError("demand entries must be finite and >= 0")
        if self.demand_scale < 0 or not np.isfinite(self.demand_scale):
            raise NetworkError("demand_scale must be finite and >= 0")

    @classmethod
    def build(
        cls,
        nodes,
        arcs,
        classes,
        demand: Mapping[tuple[str, str], float] | np.ndarray,
        demand_scale: float = 1.0,
        name: str = "",
    ) -> "Scenario":
        """Assemble a scenario; demand may be a {(node, class): rate} mapping."""
        nodes = tuple(nodes)
        classes = tuple(classes)
        if isinstance(demand, Mapping):
            nidx = {n.id: i for i, n in enumerate(nodes)}
            kidx = {c.id: i for i, c in enumerate(classes)}
            mat = np.zeros((len(nodes), len(classes)))
            for (nid, kid), rate in demand.items():
                if nid not in nidx:
                    raise NetworkError(f"demand references unknown node {nid!r}")
                if kid not in kidx:
                    raise NetworkError(f"demand references unknown class {kid!r}")
                mat[nidx[nid], kidx[kid]] = rate
            demand = mat
        return cls(nodes, tuple(arcs), classes, np.asarray(demand, float), demand_scale, name)

    # -- index lookups ------------------------------------------------------

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.classes)

    @property
    def arc_keys(self) -> tuple[tuple[str, str], ...]:
        return tuple(a.key for a in self.arcs)

    def node_index(self, node_id: str) -> int:
        try:
            return self.node_ids.index(node_id)
        except ValueError:
            raise NetworkError(f"unknown node {node_id!r}") from None

    def class_index(self, class_id: str) -> int:
        try:
            return self.class_ids.index(class_id)
        except ValueError:
            raise NetworkError(f"unknown class {class_id!r}") from None

    def arc_index(self, src: str, dst: str) -> int:
        try:
            return self.arc_keys.index((src, dst))
        except ValueError:
            raise NetworkError(f"unknown arc {src}->{dst}") from None

    # -- derived quantities -------------------------------------------------

    @property
    def scaled_demand(self) -> np.ndarray:
        """Effective node x class demand in tokens/s."""
        return self.demand * self.demand_scale

    @property
    def min_payload(self) -> float:
        """Smallest class payload in GB/M tokens (token-equivalence base)."""
        return min(c.payload for c in self.classes)

    def capacity_matrix(self) -> np.ndarray:
        """Node x class processing capacity in tokens/s."""
        out = np.zeros((len(self.nodes), len(self.classes)))
        for i, n in enumerate(self.nodes):
            for k, c in enumerate(self.classes):
                out[i, k] = n.capacity.get(c.id, 0.0)
        return out

    def with_demand_scale(self, scale: float) -> "Scenario":
        return dataclasses.replace(self, demand_scale=float(scale))

    def with_latency_bounds(self, bounds: Mapping[str, float | None]) -> "Scenario":
        """Copy with selected class latency bounds replaced."""
        classes = tuple(
            dataclasses.replace(c, latency_bound_ms=bounds.get(c.id, c.latency_bound_ms))
            for c in self.classes
        )
        return dataclasses.replace(self, classes=classes)


def incidence_matrix(scenario: Scenario) -> np.ndarray:
    """Node x arc incidence matrix: +1 at the sending node, -1 at the receiver.

    With flows stacked in arc order, A @ f is the net outbound token rate per
    node, so the balance constraint reads A f + x = d.
    """
    n, m = len(scenario.nodes), len(scenario.arcs)
    nidx = {node_id: i for i, node_id in enumerate(scenario.node_ids)}
    A = np.zeros((n, m))
    for j, arc in enumerate(scenario.arcs):
        A[nidx[arc.src], j] = 1.0
        A[nidx[arc.dst], j] = -1.0
    return A


def marginal_cost_matrix(scenario: Scenario) -> np.ndarray:
    """Node x class marginal processing cost in $/M tokens.

    Entry (j, k) is elec_price_j * e_{j,k} + opex_adder_j, with the node's
    energy override taking precedence over the class intensity.
    """
    out = np.zeros((len(scenario.nodes), len(scenario.classes)))
    for j, node in enumerate(scenario.nodes):
        for k, cls in enumerate(scenario.classes):
            out[j, k] = node.marginal_cost(cls)
    return out


def routing_cost_matrix(scenario: Scenario) -> np.ndarray:
    """Arc x class full per-token delivery cost in $/M tokens.

    The coefficient is the private routing cost plus tariff * payload, the
    scalar form used by the token-equivalent clearing objective.
    """
    out = np.zeros((len(scenario.arcs), len(scenario.classes)))
    for e, arc in enumerate(scenario.arcs):
        for k, cls in enumerate(scenario.classes):
            out[e, k] = arc.routing_cost.get(cls.id, 0.0) + arc.transfer_tariff * cls.payload
    return out


def transfer_intensity_matrix(scenario: Scenario) -> np.ndarray:
    """Arc x class effective GB per token (gamma), overhead included."""
    out = np.zeros((len(scenario.arcs), len(scenario.classes)))
    for e, arc in enumerate(scenario.arcs):
        for k, cls in enumerate(scenario.classes):
            out[e, k] = arc.transfer_intensity(cls)
    return out
