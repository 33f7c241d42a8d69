"""
Flow integration and closed-orbit scanning.

Grid fields are integrated in torus coordinates with trigonometric
interpolation. Frame fields are left-invariant, so their flows are integrated
on a matrix realization of the group:

    abelian      R^3 modulo the unit lattice
    heisenberg   unipotent 3x3 matrices modulo integer matrices, e_3 = -d/dz
    su2          2x2 unitary matrices, e_k = i sigma_k

A scan never asserts the absence of periodic orbits; it reports
"none-detected-up-to-horizon".
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np
from scipy.linalg import expm
from scipy.spatial import cKDTree

from conformal_reeb.config import settings
from conformal_reeb.core.exceptions import CorollaryViolation, StepTooLarge, UnsupportedRealization
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import Metric, VectorField
from conformal_reeb.services.spectral import TrigonometricInterpolant

logger = get_logger(__name__)

HEISENBERG_CONSTANTS = np.zeros((3, 3, 3))
HEISENBERG_CONSTANTS[2, 0, 1], HEISENBERG_CONSTANTS[2, 1, 0] = -1.0, 1.0

SU2_CONSTANTS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    SU2_CONSTANTS[_k, _i, _j], SU2_CONSTANTS[_k, _j, _i] = -2.0, 2.0

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)

EXIT_FACTOR = 10.0
DISTINCT_FACTOR = 2.0
RICHARDSON_DIVISOR = 15.0


# ============================================================================
# Group realizations
# ============================================================================


class FlowRealization:
    """
    Phase space for the flow of one field.

    Subclasses provide the velocity, a reduction to a fundamental domain and an
    embedding in which recurrence distances are measured.
    """

    name: str = "realization"
    state_dim: int = 3
    boxsize: np.ndarray | None = None

    def __init__(self, R: VectorField, period: float):
        self.R = R
        self.period = period

    def velocity(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reduce(self, states: np.ndarray) -> np.ndarray:
        return states

    def embed(self, states: np.ndarray) -> np.ndarray:
        """Points for recurrence search, reduced into [0, boxsize) when periodic."""
        points = self.reduce(states)
        if self.boxsize is not None:
            points = np.mod(points, self.boxsize)
            points = np.where(points >= self.boxsize, 0.0, points)
        return points

    def samples(self, per_axis: int) -> np.ndarray:
        raise NotImplementedError

    def origin(self) -> np.ndarray:
        return np.zeros(self.state_dim)


class TorusRealization(FlowRealization):
    """Flat torus with the given periods; field components interpolated on grids."""

    name = "torus"

    def __init__(self, R: VectorField, periods: tuple[float, ...]):
        self.periods = np.asarray(periods, dtype=float)
        self.boxsize = self.periods
        direction = R.mean()
        drifting = np.flatnonzero(np.abs(direction) > 1e-12)
        if drifting.size:
            period = float(self.periods[drifting[0]] / abs(direction[drifting[0]]))
        else:
            # zero mean drift: time to cross the shortest cycle at peak speed
            period = float(np.min(self.periods) / R.max_norm())
        super().__init__(R, period)
        if R.space.kind == "grid" and not R.is_constant():
            self._interpolants = [TrigonometricInterpolant(R.components[i], R.space.periods) for i in range(3)]
        else:
            self._interpolants = None
            self._direction = direction

    def velocity(self, states: np.ndarray) -> np.ndarray:
        if self._interpolants is None:
            return np.broadcast_to(self._direction, states.shape)
        points = np.mod(states, self.periods)
        return np.stack([interpolant(points) for interpolant in self._interpolants], axis=-1)

    def reduce(self, states: np.ndarray) -> np.ndarray:
        return np.mod(states, self.periods)

    def samples(self, per_axis: int) -> np.ndarray:
        axes = [np.arange(per_axis) * period / per_axis for period in self.periods]
        return np.array(list(product(*axes)))


class HeisenbergRealization(FlowRealization):
    """
    (x, y, z) <-> [[1, x, z], [0, 1, y], [0, 0, 1]], left-invariant frame
    e_1 = d/dx, e_2 = d/dy + x d/dz, e_3 = -d/dz, so [e_1, e_2] = -e_3.
    """

    name = "heisenberg"

    def __init__(self, R: VectorField):
        super().__init__(R, 1.0 / max(abs(float(R.components[2])), 1e-300) if not np.any(R.components[:2]) else 1.0)
        self.boxsize = np.ones(3)
        self._r = np.asarray(R.components, dtype=float)

    def velocity(self, states: np.ndarray) -> np.ndarray:
        r1, r2, r3 = self._r
        x = states[..., 0]
        return np.stack([np.full_like(x, r1), np.full_like(x, r2), r2 * x - r3], axis=-1)

    def reduce(self, states: np.ndarray) -> np.ndarray:
        """Left multiplication by the integer matrix (a, b, c) moving (x, y) into [0, 1)^2."""
        x, y, z = states[..., 0], states[..., 1], states[..., 2]
        a, b = -np.floor(x), -np.floor(y)
        shifted = z + a * y
        c = -np.floor(shifted)
        return np.stack([x + a, y + b, shifted + c], axis=-1)

    def samples(self, per_axis: int) -> np.ndarray:
        axis = np.arange(per_axis) / per_axis
        return np.array([(x, y, 0.0) for x, y in product(axis, axis)])


class SU2Realization(FlowRealization):
    """
    Left-invariant flow X' = X A on SU(2), A = sum R^k i sigma_k.

    States are 2x2 complex matrices stored as 8 reals; recurrence uses the first
    column (Re a, Im a, Re b, Im b) on the unit 3-sphere.
    """

    name = "su2"
    state_dim = 8

    def __init__(self, R: VectorField):
        self._generator = np.einsum("k,kab->ab", np.asarray(R.components, dtype=float), 1j * PAULI)
        speed = float(np.sqrt(np.sum(np.asarray(R.components) ** 2)))
        super().__init__(R, 2.0 * np.pi / speed)

    @staticmethod
    def to_matrices(states: np.ndarray) -> np.ndarray:
        return (states[..., :4] + 1j * states[..., 4:]).reshape(states.shape[:-1] + (2, 2))

    @staticmethod
    def to_states(matrices: np.ndarray) -> np.ndarray:
        flat = matrices.reshape(matrices.shape[:-2] + (4,))
        return np.concatenate([flat.real, flat.imag], axis=-1)

    def velocity(self, states: np.ndarray) -> np.ndarray:
        return self.to_states(self.to_matrices(states) @ self._generator)

    def embed(self, states: np.ndarray) -> np.ndarray:
        column = self.to_matrices(states)[..., :, 0]
        return np.concatenate([column.real, column.imag], axis=-1)[..., [0, 2, 1, 3]]

    def origin(self) -> np.ndarray:
        return self.to_states(np.eye(2, dtype=complex))

    def samples(self, per_axis: int) -> np.ndarray:
        values = np.arange(per_axis) / per_axis
        return np.array(
            [self.to_states(expm(a * 1j * PAULI[0] + b * 1j * PAULI[1])) for a, b in product(values, values)]
        )


def realization_for(R: VectorField) -> FlowRealization:
    """
    Pick the phase space for a field.

    Raises:
        UnsupportedRealization: frame algebra with no bundled realization
    """
    space = R.space
    if space.kind == "grid":
        return TorusRealization(R, space.periods)

    c = space.structure_constants
    group = getattr(space, "group", None)
    if not np.any(c):
        return TorusRealization(R, (1.0, 1.0, 1.0))
    if group == "heisenberg" and np.array_equal(c, HEISENBERG_CONSTANTS):
        return HeisenbergRealization(R)
    if group == "su2" and np.array_equal(c, SU2_CONSTANTS):
        return SU2Realization(R)
    raise UnsupportedRealization(f"No group realization for algebra tagged {group!r} with these structure constants")


# ============================================================================
# Integration
# ============================================================================


@dataclass(frozen=True)
class Trajectory:
    """
    Fixed-step RK4 samples.

    Properties:
        times: Shape (steps + 1,)
        states: Shape (steps + 1, samples, state_dim), unreduced
        step: The step actually used
        norm_drift: max |g^(R,R) along the trajectory - 1|, None without a metric
        error_estimate: Richardson step-doubling estimate of the endpoint error
    """

    times: np.ndarray
    states: np.ndarray
    step: float
    norm_drift: float | None
    error_estimate: float

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]


def _rk4(velocity, start: np.ndarray, step: float, steps: int) -> np.ndarray:
    states = np.empty((steps + 1,) + start.shape)
    states[0] = current = start
    for index in range(1, steps + 1):
        k1 = velocity(current)
        k2 = velocity(current + 0.5 * step * k1)
        k3 = velocity(current + 0.5 * step * k2)
        k4 = velocity(current + step * k3)
        current = current + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[index] = current
    return states


def _unit_drift(realization: FlowRealization, g_hat: Metric | None, states: np.ndarray) -> float | None:
    if g_hat is None:
        return None
    values = g_hat(realization.R, realization.R).values
    if np.ndim(values) == 0:
        return abs(float(values) - 1.0)
    interpolant = TrigonometricInterpolant(values, g_hat.space.periods)
    points = realization.reduce(states).reshape(-1, states.shape[-1])
    return float(np.max(np.abs(interpolant(points) - 1.0)))


def integrate_flow(
    R: VectorField,
    x0: np.ndarray,
    horizon: float,
    step: float,
    g_hat: Metric | None = None,
    error_bound: float | None = None,
    realization: FlowRealization | None = None,
) -> Trajectory:
    """
    Fixed-step fourth-order integration of the flow of R.

    Args:
        R: The field
        x0: Initial state(s), shape (state_dim,) or (samples, state_dim)
        horizon: Final time T
        step: Requested step; shortened so that it divides T
        g_hat: Metric in which the unit-length drift is measured
        error_bound: StepTooLarge gate; 0.1 * orbit threshold by default
        realization: Phase space; chosen from R when omitted

    Raises:
        StepTooLarge: the error estimate or the drift exceeds the bound
    """
    if step <= 0 or horizon <= 0:
        raise ValueError("step and horizon must be positive")
    realization = realization or realization_for(R)
    bound = error_bound if error_bound is not None else 0.1 * settings.orbit_threshold
    start = np.atleast_2d(np.asarray(x0, dtype=float))

    steps = int(np.ceil(horizon / step - 1e-9))
    h = horizon / steps
    states = _rk4(realization.velocity, start, h, steps)
    refined = _rk4(realization.velocity, start, 0.5 * h, 2 * steps)
    estimate = float(np.max(np.abs(states[-1] - refined[-1]))) / RICHARDSON_DIVISOR
    if estimate > bound:
        raise StepTooLarge(h, estimate, bound)

    drift = _unit_drift(realization, g_hat, states)
    if drift is not None and drift > bound:
        raise StepTooLarge(h, drift, bound)

    return Trajectory(
        times=np.linspace(0.0, horizon, steps + 1),
        states=states,
        step=h,
        norm_drift=drift,
        error_estimate=estimate,
    )


# ============================================================================
# Orbit scan
# ============================================================================


class Verdict(str, Enum):
    ORBITS_FOUND = "orbits-found"
    NONE_DETECTED = "none-detected-up-to-horizon"


@dataclass(frozen=True)
class OrbitDetection:
    initial_point: tuple[float, ...]
    period: float
    recurrence_distance: float


@dataclass(frozen=True)
class OrbitScan:
    """
    Outcome of a closed-orbit scan.

    Properties:
        horizon: Integration time T
        threshold: Recurrence threshold in the embedding
        step: Integration step
        samples: Initial points, sorted
        detections: One per sample that returned, in sample order
        distinct_orbits: Detections whose orbits are pairwise separated
        realization: Name of the phase space
    """

    horizon: float
    threshold: float
    step: float
    samples: tuple[tuple[float, ...], ...]
    detections: tuple[OrbitDetection, ...]
    distinct_orbits: int
    realization: str
    paths: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def verdict(self) -> Verdict:
        return Verdict.ORBITS_FOUND if self.detections else Verdict.NONE_DETECTED

    def summary(self) -> str:
        if self.verdict is Verdict.ORBITS_FOUND:
            return f"orbits-found({self.distinct_orbits})"
        return self.verdict.value


def _first_return(points: np.ndarray, times: np.ndarray, threshold: float, boxsize) -> tuple[float, float] | None:
    """Earliest time the path comes back within threshold after leaving a 10x neighborhood."""
    start = points[0]
    offsets = np.abs(points - start)
    if boxsize is not None:
        offsets = np.minimum(offsets, boxsize - offsets)
    distances = np.sqrt(np.sum(offsets**2, axis=-1))
    left = np.flatnonzero(distances > EXIT_FACTOR * threshold)
    if left.size == 0:
        return None
    exit_index = int(left[0])
    tree = cKDTree(points[exit_index:], boxsize=boxsize)
    hits = tree.query_ball_point(start, threshold)
    if not hits:
        return None
    index = exit_index + min(hits)
    return float(times[index]), float(distances[index])


def _distinct(paths: list[np.ndarray], threshold: float, boxsize) -> int:
    """Greedy count of orbits whose start points stay 2 * threshold away from earlier orbits."""
    kept: list[cKDTree] = []
    for path in paths:
        start = path[0]
        if all(tree.query(start)[0] > DISTINCT_FACTOR * threshold for tree in kept):
            kept.append(cKDTree(path, boxsize=boxsize))
    return len(kept)


def closed_orbit_scan(
    R: VectorField,
    samples: np.ndarray | None = None,
    horizon_periods: float | None = None,
    threshold: float | None = None,
    step: float | None = None,
    g_hat: Metric | None = None,
    samples_per_axis: int | None = None,
    steps_per_period: int | None = None,
) -> OrbitScan:
    """
    Integrate from each sample and record the first close return.

    Args:
        R: The field
        samples: Initial states; a per-axis lattice of the realization by default
        horizon_periods: T in units of the realization's nominal period
        threshold: Recurrence threshold
        step: Integration step; period / steps_per_period by default
        g_hat: Metric for the drift report
        samples_per_axis: Lattice density when samples are omitted
        steps_per_period: Used for the default step
    """
    realization = realization_for(R)
    threshold = threshold or settings.orbit_threshold
    horizon = (horizon_periods or settings.orbit_horizon_periods) * realization.period
    step = step or realization.period / (steps_per_period or settings.orbit_steps_per_period)
    if samples is None:
        samples = realization.samples(samples_per_axis or settings.orbit_samples_per_axis)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    order = np.lexsort(samples.T[::-1])
    samples = samples[order]

    trajectory = integrate_flow(R, samples, horizon, step, g_hat=g_hat, error_bound=0.1 * threshold, realization=realization)
    boxsize = realization.boxsize
    detections: list[OrbitDetection] = []
    closed_paths: list[np.ndarray] = []
    paths = np.stack([realization.embed(trajectory.states[:, s]) for s in range(len(samples))])
    for s, points in enumerate(paths):
        found = _first_return(points, trajectory.times, threshold, boxsize)
        if found is None:
            continue
        period, distance = found
        detections.append(OrbitDetection(tuple(float(v) for v in samples[s]), period, distance))
        closed_paths.append(points[: int(np.searchsorted(trajectory.times, period)) + 1])

    scan = OrbitScan(
        horizon=horizon,
        threshold=threshold,
        step=trajectory.step,
        samples=tuple(tuple(float(v) for v in sample) for sample in samples),
        detections=tuple(detections),
        distinct_orbits=_distinct(closed_paths, threshold, boxsize),
        realization=realization.name,
        paths=paths,
    )
    logger.info(f"Orbit scan on {realization.name}: {scan.summary()} from {len(samples)} samples up to T={horizon:.6g}")
    return scan


# ============================================================================
# Corollary gates
# ============================================================================


@dataclass(frozen=True)
class BettiVerdict:
    b1: int
    case: str
    passed: bool


def betti_consistency(b1: int, report) -> BettiVerdict:
    """
    Even b1 requires the Sasakian case and odd b1 the co-Kahler case.

    Args:
        b1: First Betti number from the fixture metadata
        report: A ClassificationReport, a Case or its string value

    Raises:
        CorollaryViolation: the parity contradicts the classification
    """
    case = getattr(report, "case", report)
    case = getattr(case, "value", case)
    expected = "sasakian" if b1 % 2 == 0 else "co-kahler"
    if case != expected:
        raise CorollaryViolation(f"b1 = {b1} requires a {expected} structure, classified as {case}")
    return BettiVerdict(b1=b1, case=case, passed=True)


def orbit_consistency(case: str, scan: OrbitScan) -> None:
    """
    Raises:
        CorollaryViolation: a Sasakian Reeb field with fewer than two detected closed orbits
    """
    if case == "sasakian" and scan.distinct_orbits < 2:
        raise CorollaryViolation(
            f"Sasakian Reeb field shows {scan.distinct_orbits} closed orbit(s) up to T={scan.horizon:.6g}; at least two are required"
        )
