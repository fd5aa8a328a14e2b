"""Inclined-plane terrain.

The climb is simulated in a slope-aligned frame: ``x`` runs across the face,
``y`` up the face and ``z`` along the outward surface normal. Gravity is
therefore tilted in this frame rather than the plane. The plane sits at
``z = -offset`` so that a sphere of radius ``offset`` resting on it has its
centre at ``z = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TerrainModel:
    slope: float = math.radians(40.0)
    friction: float = 0.5
    asperity_radius: float = 50e-6
    asperity_density: float = 1e6  # per m^2
    offset: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.slope <= 0.5 * math.pi:
            raise ValueError(f"slope must lie in [0, pi/2], got {self.slope}")
        if self.friction < 0.0:
            raise ValueError("friction must be >= 0")
        if not self.asperity_radius > 0.0:
            raise ValueError("asperity_radius must be > 0")
        if self.asperity_density < 0.0:
            raise ValueError("asperity_density must be >= 0")

    @property
    def normal(self) -> np.ndarray:
        return np.array([0.0, 0.0, 1.0])

    @property
    def upslope(self) -> np.ndarray:
        return np.array([0.0, 1.0, 0.0])

    def gravity_vector(self, g: float) -> np.ndarray:
        """Gravity of magnitude ``g`` expressed in the slope frame."""
        return g * np.array([0.0, -math.sin(self.slope), -math.cos(self.slope)])

    def surface_query(self, position) -> tuple[float, np.ndarray]:
        """Signed distance from the plane (negative inside) and its unit normal."""
        p = np.asarray(position, dtype=float)
        return float(p[2] + self.offset), self.normal


def slope_load(system_mass: float, g: float, slope: float) -> float:
    """Weight component along the face that the engaged spines must hold."""
    if not system_mass > 0.0 or not g > 0.0:
        raise ValueError("system mass and gravity must be positive")
    return system_mass * g * math.sin(slope)
