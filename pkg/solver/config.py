"""
Solver parameters and per-step reports.
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from velocity.services import NormsRecord

MODES = ("nonlinear", "linear")


@dataclass(frozen=True)
class SolverConfig:
    """
    Time-stepping parameters.

    Attributes:
        dt: Optional fixed step; None uses min(t_hat_0, 0.5 dx / R_v)
        picard_tol: Stop when sup w|F^{m+1} - F^m| / sqrt(mu) <= picard_tol
        picard_max_iters: Sweeps before the step is rejected
        C_hat_rho: Local-time constant in t_hat_0 = 1 / (C_hat_rho (1 + ||h||))
        delta_target: Smallness level delta monitored for ||w f||
        M0_cap: Upper bound accepted for ||w f_0||
        T_end: Final time of the march
        conservation_projection: Rescale to the initial mass after each step
        n_cells: Slab cells
        mode: 'nonlinear' (Picard on R(f), Q+) or 'linear' (R = nu, equilibrium source)
        gain_renormalization: Apply the equilibrium-preserving gain factor
        lattice_wall_constant: Use 1/flux(mu) on the lattice instead of sqrt(2 pi)
        max_halvings: dt halvings allowed before a rejected step aborts
        threads: Worker threads for the gain sweep
    """

    dt: Optional[float] = None
    picard_tol: float = 1e-10
    picard_max_iters: int = 30
    C_hat_rho: float = 10.0
    delta_target: float = 1e-3
    M0_cap: float = 1e3
    T_end: float = 1.0
    conservation_projection: bool = True
    n_cells: int = 32
    mode: str = "nonlinear"
    gain_renormalization: bool = True
    lattice_wall_constant: bool = True
    max_halvings: int = 6
    threads: int = 1

    def violations(self) -> List[str]:
        problems = []
        if self.dt is not None and not self.dt > 0.0:
            problems.append(f"dt must be > 0, got {self.dt}")
        if not self.picard_tol > 0.0:
            problems.append(f"picard_tol must be > 0, got {self.picard_tol}")
        if self.picard_max_iters < 1:
            problems.append(f"picard_max_iters must be >= 1, got {self.picard_max_iters}")
        if not self.C_hat_rho > 0.0:
            problems.append(f"C_hat_rho must be > 0, got {self.C_hat_rho}")
        if not self.delta_target > 0.0:
            problems.append(f"delta_target must be > 0, got {self.delta_target}")
        if not self.T_end > 0.0:
            problems.append(f"T_end must be > 0, got {self.T_end}")
        if self.n_cells < 2:
            problems.append(f"n_cells must be >= 2, got {self.n_cells}")
        if self.mode not in MODES:
            problems.append(f"mode must be one of {', '.join(MODES)}, got {self.mode}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        return problems

    def t_hat_0(self, h_sup: float) -> float:
        return 1.0 / (self.C_hat_rho * (1.0 + h_sup))


@dataclass
class StepReport:
    """Outcome of one accepted substep."""

    time: float
    dt: float
    iteration_count: int
    final_contraction_ratio: float
    mass_drift: float
    min_F: float
    norms: NormsRecord
    integrating_factor_range: Tuple[float, float]
    min_R_over_nu: float
    relative_entropy: float
    min_density: float
    clipped_negatives: int = 0
    differences: List[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["norms"] = self.norms.as_dict()
        return data
