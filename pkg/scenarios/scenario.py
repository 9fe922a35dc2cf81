"""
Scenario: the complete, validated description of one run.

Sections mirror the INI layout. Weight and solver sections reuse the
module dataclasses so each default is defined once.
"""

from dataclasses import dataclass, field
from typing import Tuple

from collision.kernel import AngularQuadrature, KernelSpec
from geometry.domains import get_domain
from geometry.domains.base import BaseDomain
from solver.config import SolverConfig
from solver.field import SpatialGrid
from velocity.grid import VelocityGrid, WeightSpec

KNOWN_CHECKS = (
    "kernel_bounds",
    "gain_bound",
    "cycle_bound",
    "cycle_constants",
    "R_lower_bound",
    "l2_growth",
    "decay_rate",
    "equilibrium_nullspace",
    "vacuum_relaxation",
    "smallness_boundary",
)


@dataclass(frozen=True)
class ScenarioSection:
    name: str = "scenario"
    seed: int = 0
    theorem_mode: bool = True
    march: bool = True


@dataclass(frozen=True)
class GeometrySection:
    shape: str = "slab"
    half_width: float = 1.0


@dataclass(frozen=True)
class VelocitySection:
    radius: float = 6.0
    spacing: float = 0.75


@dataclass(frozen=True)
class CollisionSection:
    kappa: float = 1.0
    b0: float = 1.0
    n_polar: int = 4
    n_azimuth: int = 8


@dataclass(frozen=True)
class InitialDataSection:
    recipe: str = "equilibrium"
    factor: float = 2.0
    amplitude: float = 0.1
    hole_half_width: float = 0.3

    def params(self) -> dict:
        return {"factor": self.factor, "amplitude": self.amplitude, "hole_half_width": self.hole_half_width}


@dataclass(frozen=True)
class OutputSection:
    interval: float = 0.0
    directory: str = ""


@dataclass(frozen=True)
class VerifySection:
    checks: Tuple[str, ...] = ()
    sample_count: int = 16
    n_samples: int = 10000
    shards: int = 4
    T0: float = 1.0
    T0_list: Tuple[float, ...] = (0.5, 1.0, 2.0)
    k_list: Tuple[int, ...] = (1, 2, 4, 8, 16, 32, 50)
    epsilon: float = 0.01
    c_tilde: float = 4.0
    C4: float = 1.0
    ratio_floor: float = 0.5
    gauss_threshold: float = 0.1
    fit_window_start: float = 0.2
    fit_window_end: float = 1.0
    drift_bound: float = 0.1
    refine: bool = False
    nullspace_tol: float = 1e-3
    l2_safety: float = 2.0
    density_time: float = 0.5
    amplitudes: Tuple[float, ...] = (0.01, 0.05, 0.1)


@dataclass(frozen=True)
class Scenario:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    velocity: VelocitySection = field(default_factory=VelocitySection)
    collision: CollisionSection = field(default_factory=CollisionSection)
    weight: WeightSpec = field(default_factory=WeightSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial_data: InitialDataSection = field(default_factory=InitialDataSection)
    output: OutputSection = field(default_factory=OutputSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def velocity_grid(self) -> VelocityGrid:
        return VelocityGrid(radius=self.velocity.radius, spacing=self.velocity.spacing)

    def kernel(self) -> KernelSpec:
        return KernelSpec(
            kappa=self.collision.kappa,
            b0=self.collision.b0,
            quadrature=AngularQuadrature(n_polar=self.collision.n_polar, n_azimuth=self.collision.n_azimuth),
        )

    def domain(self) -> BaseDomain:
        if self.geometry.shape == "slab":
            return get_domain("slab", half_width=self.geometry.half_width)
        return get_domain(self.geometry.shape)

    def spatial_grid(self) -> SpatialGrid:
        return SpatialGrid(half_width=self.geometry.half_width, n_cells=self.solver.n_cells)
