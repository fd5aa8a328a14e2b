"""Microspine engagement, spine load capacity and the stochastic grip attempt."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .terrain import TerrainModel

SPINE_CAPACITY = 1.7  # N per spine/asperity contact; inside the 1-2 N band, gives 28 spines for 47 N
ANCHORED_ROBOTS = 3  # one robot moves while three hold


@dataclass(frozen=True)
class SpineSpec:
    tip_radius: float = 20e-6  # m, 12-25 um range
    shaft_diameter: float = 250e-6  # m, 200-300 um range
    max_stress: float = 1.5e9  # Pa, hardened steel
    elastic_modulus: float = 200e9  # Pa, steel
    poisson_ratio: float = 0.3  # steel
    capacity: float = SPINE_CAPACITY
    load_angle: float = math.radians(20.0)

    def __post_init__(self):
        for name in ("tip_radius", "shaft_diameter", "max_stress", "elastic_modulus", "capacity", "load_angle"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in [0, 0.5)")


@dataclass(frozen=True)
class AsperitySpec:
    radius: float
    normal_angle: float
    friction: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("asperity radius must be > 0")
        if not self.friction > 0.0:
            raise ValueError("asperity friction must be > 0")

    def engages(self, spine: SpineSpec) -> bool:
        """Hook fits the asperity and the surface is steep enough to hold it."""
        return self.radius >= spine.tip_radius and self.normal_angle > min_engagement_angle(
            spine.load_angle, self.friction
        )


@dataclass(frozen=True)
class GripModel:
    spine_count: int = 200  # spines on one robot's skin ("hundreds")
    p_grip: float = 0.9
    seed: int = 0
    capacity: float = SPINE_CAPACITY

    def __post_init__(self):
        if self.spine_count < 0:
            raise ValueError("spine_count must be >= 0")
        if not 0.0 <= self.p_grip <= 1.0:
            raise ValueError("p_grip must lie in [0, 1]")
        if not self.capacity > 0.0:
            raise ValueError("capacity must be > 0")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def min_engagement_angle(load_angle: float, friction: float) -> float:
    """Smallest asperity normal angle a spine loaded at ``load_angle`` can hold."""
    if not friction > 0.0:
        raise ValueError(f"friction coefficient must be > 0, got {friction}")
    return load_angle + math.atan2(1.0, friction)


def contact_radius(tip_radius: float, asperity_radius: float) -> float:
    return 1.0 / (1.0 / tip_radius + 1.0 / asperity_radius)


def max_spine_load(spec: SpineSpec, asperity_radius: float) -> float:
    """Largest load a spine tip can carry on an asperity before the hook yields.

    ``f = (pi sigma / (1 - 2 nu))^3 / (2 E^2) * R^2`` with ``R`` the series
    combination of tip and asperity radii. ``nu`` is the hook's Poisson ratio.
    """
    if asperity_radius < spec.tip_radius:
        raise ValueError(
            f"asperity radius {asperity_radius} smaller than spine tip radius {spec.tip_radius}: no engagement"
        )
    nu = spec.poisson_ratio
    if nu >= 0.5:
        raise ValueError("Poisson ratio >= 0.5 makes the strength term singular")
    r = contact_radius(spec.tip_radius, asperity_radius) if math.isfinite(asperity_radius) else spec.tip_radius
    return (math.pi * spec.max_stress / (1.0 - 2.0 * nu)) ** 3 / (2.0 * spec.elastic_modulus**2) * r * r


def required_spines(total_load: float, capacity: float) -> int:
    if not capacity > 0.0:
        raise ValueError("capacity must be > 0")
    if total_load <= 0.0:
        return 0
    n = math.ceil(total_load / capacity)
    # guard against ceil landing one short through round-off
    return n + 1 if n * capacity < total_load else n


@dataclass(frozen=True)
class GripBudget:
    system_mass: float
    gravity: float
    slope: float
    total_load: float
    capacity: float
    total_spines: int
    share_load: float
    spines_per_robot: int


def grip_budget(
    system_mass: float = 12.6,
    gravity: float = 3.7,
    slope: float = 0.5 * math.pi,
    capacity: float = SPINE_CAPACITY,
    anchored: int = ANCHORED_ROBOTS,
) -> GripBudget:
    from .terrain import slope_load

    load = slope_load(system_mass, gravity, slope)
    share = load / anchored
    return GripBudget(
        system_mass, gravity, slope, load, capacity,
        required_spines(load, capacity), share, required_spines(share, capacity),
    )


@dataclass(frozen=True)
class GripOutcome:
    engaged: bool
    spines: int


def attempt_grip(
    model: GripModel,
    terrain: TerrainModel,
    rng: np.random.Generator,
    share_load: float = 0.0,
) -> GripOutcome:
    """One Bernoulli grip trial; ``rng`` is advanced in place.

    On success the engaged count is drawn uniformly between the count needed
    for ``share_load`` and twice that, capped by the robot's spine count.
    ``terrain`` is accepted for interface symmetry; a uniform plane does not
    change the odds.
    """
    need = required_spines(share_load, model.capacity)
    if rng.random() >= model.p_grip:
        return GripOutcome(False, 0)
    if need > model.spine_count:
        return GripOutcome(False, 0)
    hi = min(model.spine_count, max(need, 2 * need))
    return GripOutcome(True, int(rng.integers(need, hi + 1)))
