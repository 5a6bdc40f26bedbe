"""
NV Centre Dynamics

Five-level density-matrix model of an NV centre under incoherent optical
pumping and coherent microwave driving of the ground spin sublevels.

Levels: |1> ground m_s = 0, |2> ground m_s = +-1, |3> and |4> the
spin-conserving excited states, |5> the singlet shelving level. Only the
ground-state coherence rho12 is kept, so the state is carried as the real
vector (rho11, rho22, rho33, rho44, rho55, Re rho12, Im rho12).
"""
import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from ..errors import InvalidParameter, NonConvergent, SingularSystem

logger = logging.getLogger(__name__)

STATE_DIM = 7
N_LEVELS = 5

_TRACE_ROW = 0
_STATE_TOL = 1e-10
_CLIP_TOL = 1e-9
_RESIDUAL_TOL = 1e-10
_RCOND_MIN = 1e-12
# duration x spectral radius above which the explicit scheme hands over to Radau
_STIFF_LIMIT = 1e6
# quoted Rabi frequency -> Omega_d of the master equation
RABI_COUPLING = 2.0


@dataclass(frozen=True)
class NVRates:
    """Internal transition rates R_ij (s^-1)"""

    r31: float = 66.16e6
    r42: float = 66.16e6
    r35: float = 11.1e6
    r45: float = 91.8e6
    r51: float = 4.87e6
    r52: float = 2.04e6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameter(f"NVRates.{name} must be positive and finite, got {value}")

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DriveField:
    """
    Microwave drive, dephasing and optical pump rate (s^-1).

    `rabi` is the Rabi frequency as quoted (e.g. "18 MHz" -> 18e6); the
    generator uses omega_d = RABI_COUPLING * rabi.
    """

    rabi: float = 0.0
    detuning: float = 0.0
    dephasing: float = 0.0
    pump_rate: float = 0.0

    def __post_init__(self):
        for name in ("rabi", "dephasing", "pump_rate"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParameter(f"DriveField.{name} must be non-negative and finite, got {value}")
        if not math.isfinite(self.detuning):
            raise InvalidParameter(f"DriveField.detuning must be finite, got {self.detuning}")

    @property
    def omega_d(self) -> float:
        """Drive strength entering the master equation: RABI_COUPLING x the quoted Rabi frequency"""
        return RABI_COUPLING * self.rabi

    def with_pump(self, pump_rate: float) -> "DriveField":
        return replace(self, pump_rate=pump_rate)

    def without_pump(self) -> "DriveField":
        return replace(self, pump_rate=0.0)

    def with_detuning(self, detuning: float) -> "DriveField":
        return replace(self, detuning=detuning)


@dataclass(frozen=True)
class DensityMatrixState:
    """Populations rho_ii and the ground-state coherence rho12"""

    pop: Tuple[float, float, float, float, float]
    coh12: complex = 0j

    def __post_init__(self):
        pop = tuple(float(p) for p in self.pop)
        if len(pop) != N_LEVELS:
            raise InvalidParameter(f"expected {N_LEVELS} populations, got {len(pop)}")
        object.__setattr__(self, "pop", pop)
        object.__setattr__(self, "coh12", complex(self.coh12))

        if any(not math.isfinite(p) or p < -_STATE_TOL or p > 1 + _STATE_TOL for p in pop):
            raise InvalidParameter(f"populations must lie in [0, 1]: {pop}")
        trace = math.fsum(pop)
        if abs(trace - 1.0) > _STATE_TOL:
            raise InvalidParameter(f"populations must sum to 1, got {trace!r}")
        if abs(self.coh12) ** 2 > pop[0] * pop[1] + _STATE_TOL:
            raise InvalidParameter("|rho12|^2 exceeds rho11*rho22")

    @classmethod
    def pure(cls, level: int) -> "DensityMatrixState":
        """All population in one level (1-based, as in |1> ... |5>)"""
        if not 1 <= level <= N_LEVELS:
            raise InvalidParameter(f"level must be in 1..{N_LEVELS}, got {level}")
        pop = [0.0] * N_LEVELS
        pop[level - 1] = 1.0
        return cls(tuple(pop))

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "DensityMatrixState":
        """Build a state from the 7-real vector, clipping round-off negatives"""
        vector = np.asarray(vector, dtype=float)
        pop = vector[:N_LEVELS].copy()
        pop[(pop < 0) & (pop > -_CLIP_TOL)] = 0.0
        return cls(tuple(pop), complex(vector[5], vector[6]))

    def as_vector(self) -> np.ndarray:
        return np.array([*self.pop, self.coh12.real, self.coh12.imag])

    @property
    def ground_population(self) -> float:
        return self.pop[0] + self.pop[1]


@dataclass(frozen=True)
class NVEnsemble:
    """Absorption cross-section sigma (cm^2) and number density D (cm^-3)"""

    cross_section: float = 1.3e-17
    density: float = 1.77e18

    def __post_init__(self):
        if not math.isfinite(self.cross_section) or self.cross_section <= 0:
            raise InvalidParameter(f"NVEnsemble.cross_section must be positive, got {self.cross_section}")
        # zero density is the absorption-free limit of the laser model
        if not math.isfinite(self.density) or self.density < 0:
            raise InvalidParameter(f"NVEnsemble.density must be non-negative, got {self.density}")

    @property
    def cross_section_m2(self) -> float:
        return self.cross_section * 1e-4

    @property
    def density_m3(self) -> float:
        return self.density * 1e6


def build_generator(rates: NVRates, drive: DriveField) -> np.ndarray:
    """
    Real 7x7 generator G with d(state)/dt = G @ state.

    Columns of the population rows (0..4) sum to zero, so the trace is conserved.
    """
    lam = drive.pump_rate
    omega = drive.omega_d
    delta = drive.detuning
    gamma = lam + drive.dephasing

    G = np.zeros((STATE_DIM, STATE_DIM))

    # rho11
    G[0, 0] = -lam
    G[0, 2] = rates.r31
    G[0, 4] = rates.r51
    G[0, 6] = -omega
    # rho22
    G[1, 1] = -lam
    G[1, 3] = rates.r42
    G[1, 4] = rates.r52
    G[1, 6] = omega
    # rho33, rho44
    G[2, 0] = lam
    G[2, 2] = -(rates.r31 + rates.r35)
    G[3, 1] = lam
    G[3, 3] = -(rates.r42 + rates.r45)
    # rho55
    G[4, 2] = rates.r35
    G[4, 3] = rates.r45
    G[4, 4] = -(rates.r51 + rates.r52)
    # Re rho12
    G[5, 5] = -gamma
    G[5, 6] = -delta
    # Im rho12
    G[6, 0] = omega / 2
    G[6, 1] = -omega / 2
    G[6, 5] = delta
    G[6, 6] = -gamma

    return G


def steady_state(rates: NVRates, drive: DriveField) -> DensityMatrixState:
    """
    Stationary state of the master equation.

    One population row of G is replaced by the trace constraint and the 7x7
    system is solved by LU with partial pivoting.

    Raises:
        SingularSystem: the stationary state is not unique (e.g. no pump and no
            drive) or the residual check fails.
    """
    G = build_generator(rates, drive)
    scale = float(np.max(np.abs(G)))

    A = G / scale
    A[_TRACE_ROW, :] = 0.0
    A[_TRACE_ROW, :N_LEVELS] = 1.0
    b = np.zeros(STATE_DIM)
    b[_TRACE_ROW] = 1.0

    singular_values = scipy.linalg.svdvals(A)
    rcond = singular_values[-1] / singular_values[0]
    if rcond < _RCOND_MIN:
        raise SingularSystem(f"steady state is not unique for {drive} (rcond {rcond:.2e})")

    lu_piv = scipy.linalg.lu_factor(A)
    x = scipy.linalg.lu_solve(lu_piv, b)

    residual = float(np.max(np.abs(G @ x))) / scale
    if residual > _RESIDUAL_TOL:
        raise SingularSystem(f"steady-state residual {residual:.2e} exceeds {_RESIDUAL_TOL:.0e}")

    return DensityMatrixState.from_vector(x)


def population_balance(rates: NVRates, pump_rate: float) -> DensityMatrixState:
    """
    Closed-form stationary populations without microwave drive.

    At zero pump the limit pump_rate -> 0+ is returned: all population in the
    ground manifold, split by the singlet branching of each spin channel.
    """
    if pump_rate < 0:
        raise InvalidParameter(f"pump_rate must be non-negative, got {pump_rate}")

    # shelving efficiency of each spin channel
    shelve_0 = rates.r35 / (rates.r31 + rates.r35)
    shelve_1 = rates.r45 / (rates.r42 + rates.r45)

    if pump_rate == 0:
        w1 = rates.r51 / shelve_0
        w2 = rates.r52 / shelve_1
        return DensityMatrixState((w1 / (w1 + w2), w2 / (w1 + w2), 0.0, 0.0, 0.0))

    p5 = 1.0
    p1 = rates.r51 * p5 / (pump_rate * shelve_0)
    p2 = rates.r52 * p5 / (pump_rate * shelve_1)
    p3 = pump_rate * p1 / (rates.r31 + rates.r35)
    p4 = pump_rate * p2 / (rates.r42 + rates.r45)
    total = p1 + p2 + p3 + p4 + p5
    return DensityMatrixState(tuple(p / total for p in (p1, p2, p3, p4, p5)))


def relaxation_rates(rates: NVRates, drive: DriveField) -> np.ndarray:
    """Sorted non-zero decay rates |Re lambda| of the generator eigenvalues"""
    eigenvalues = np.linalg.eigvals(build_generator(rates, drive))
    decay = np.abs(eigenvalues.real)
    floor = 1e-9 * float(np.max(decay)) if decay.size else 0.0
    return np.sort(decay[decay > floor])


def time_evolve(
    rates: NVRates,
    drive: DriveField,
    initial: DensityMatrixState,
    duration: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: Optional[str] = None,
) -> DensityMatrixState:
    """
    Integrate d(state)/dt = G @ state over `duration` seconds.

    Uses DOP853 (explicit, embedded error control) unless the problem is so
    stiff over the requested duration that an explicit scheme would need
    millions of steps; then Radau with the exact Jacobian is used.

    Raises:
        NonConvergent: step control failed or the trace drifted by more than 1e-8.
    """
    if not math.isfinite(duration) or duration < 0:
        raise InvalidParameter(f"duration must be non-negative, got {duration}")
    if duration == 0:
        return initial

    G = build_generator(rates, drive)
    y0 = initial.as_vector()

    if method is None:
        radius = float(np.max(np.abs(np.linalg.eigvals(G))))
        method = "Radau" if duration * radius > _STIFF_LIMIT else "DOP853"

    extra = {"jac": G} if method in ("Radau", "BDF", "LSODA") else {}
    logger.debug(f"time_evolve: method={method}, duration={duration:.3e}s")

    solution = solve_ivp(
        lambda t, y: G @ y, (0.0, duration), y0, method=method, rtol=rtol, atol=atol, **extra
    )
    if not solution.success:
        raise NonConvergent(f"{method} integration failed: {solution.message}")

    y = solution.y[:, -1]
    drift = abs(math.fsum(y[:N_LEVELS]) - math.fsum(y0[:N_LEVELS]))
    if drift > 1e-8:
        raise NonConvergent(f"trace drifted by {drift:.2e} during integration")

    return DensityMatrixState.from_vector(y)


def ground_population(state: DensityMatrixState) -> float:
    """rho_g = rho11 + rho22"""
    return state.ground_population


def absorption_coefficient(ensemble: NVEnsemble, rho_g: float) -> float:
    """Base-e pump absorption beta = sigma * D * rho_g, in cm^-1"""
    if not -_STATE_TOL <= rho_g <= 1 + _STATE_TOL:
        raise InvalidParameter(f"rho_g must lie in [0, 1], got {rho_g}")
    return ensemble.cross_section * ensemble.density * rho_g
