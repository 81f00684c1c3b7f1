"""Neutral-atom Rydberg gates.

Each atom has levels ``|0>, |1>, |r>`` (indices 0, 1, 2); the two-atom basis
is ordered control-major, ``|ct> -> 3 c + t``.  Rates are angular and times
are in matching inverse units.  The laser couples ``|1> <-> |r>`` only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .core import StateVector, TimeGrid, projector, propagator, tensor
from .errors import IncompleteReturnError, InvalidParameterError, InvalidStateError

LEVELS = 3
COMPUTATIONAL = (0, 1, 3, 4)  # |00>, |01>, |10>, |11>
DOUBLE_RYDBERG = 8
CZ_TARGET = np.diag([1, -1, -1, -1]).astype(complex)

TIMING_NOTE = ("d = cT gives about 21 m for T = 70 ns; a delay of 'a few meters' "
               "corresponds to T of order 10 ns")


def wrap_phase(phi):
    """Map angles onto ``(-pi, pi]``."""
    out = np.mod(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TwoAtomState(StateVector):
    """Normalised ket on the nine-dimensional two-atom space."""

    def __post_init__(self):
        super().__post_init__()
        if self.dim != LEVELS**2:
            raise InvalidStateError(f"two-atom state needs 9 amplitudes, got {self.dim}")

    @classmethod
    def product(cls, control: int, target: int) -> "TwoAtomState":
        amps = np.zeros(LEVELS**2, dtype=complex)
        amps[LEVELS * control + target] = 1
        return cls(amps)


@dataclass(frozen=True)
class BlockadeParams:
    """Square-pulse blockade gate.

    ``blockade_shift = inf`` selects the hard-blockade limit, where ``|rr>``
    is removed from the dynamics.
    """

    rabi: float
    blockade_shift: float = math.inf
    detuning: float = 0.0

    def __post_init__(self):
        if not self.rabi > 0:
            raise InvalidParameterError("rabi frequency must be positive")
        if not self.blockade_shift >= 0:
            raise InvalidParameterError("blockade shift must be non-negative")

    @property
    def hard(self) -> bool:
        return math.isinf(self.blockade_shift)


@dataclass(frozen=True)
class LevinePichlerParams:
    """Two global pulses of length ``duration``; the second carries phase ``xi``.

    ``duration`` defaults to ``2 pi / sqrt(detuning^2 + 2 rabi^2)``.
    """

    rabi: float
    detuning: float
    xi: float = 0.0
    duration: float | None = None
    blockade_shift: float = math.inf

    def __post_init__(self):
        if not self.rabi > 0:
            raise InvalidParameterError("rabi frequency must be positive")
        if self.duration is None:
            object.__setattr__(self, "duration", 2 * math.pi / math.hypot(self.detuning, math.sqrt(2) * self.rabi))
        if not self.duration > 0:
            raise InvalidParameterError("pulse duration must be positive")


@dataclass(frozen=True)
class ConditionalPhaseTable:
    """Diagonal action of a gate on the computational basis.

    ``phases`` and ``leakage`` are ordered ``(00, 01, 10, 11)``; ``block`` is
    the 4x4 computational block of the propagator.
    """

    phases: tuple[float, float, float, float]
    leakage: tuple[float, float, float, float]
    block: np.ndarray

    @property
    def relative_phases(self) -> tuple[float, ...]:
        return tuple(wrap_phase(p - self.phases[0]) for p in self.phases)

    @property
    def conditional_phase(self) -> float:
        p00, p01, p10, p11 = self.phases
        return wrap_phase(p00 + p11 - p01 - p10)

    def fidelity(self, target: np.ndarray = CZ_TARGET) -> float:
        return average_gate_fidelity(self.block, target)

    def corrected_fidelity(self, target: np.ndarray = CZ_TARGET) -> float:
        """Fidelity after single-qubit Z rotations that bring the ``01`` and ``10`` phases to pi."""
        p00, p01, p10, _ = self.phases
        a, b = p01 - p00 - math.pi, p10 - p00 - math.pi
        local = np.diag(np.exp(-1j * np.array([p00, p00 + a, p00 + b, p00 + a + b])))
        return average_gate_fidelity(local @ self.block, target)


def average_gate_fidelity(block: np.ndarray, target: np.ndarray) -> float:
    """Average gate fidelity of a (possibly non-unitary) block to a unitary target.

    ``F = (|Tr(U^dag M)|^2 + Tr(M^dag M)) / (d (d + 1))``; insensitive to a
    global phase.
    """
    d = target.shape[0]
    overlap = np.trace(target.conj().T @ block)
    return float((abs(overlap) ** 2 + np.trace(block.conj().T @ block).real) / (d * (d + 1)))


def _table(U: np.ndarray) -> ConditionalPhaseTable:
    block = U[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]
    diag = np.diag(block)
    # leakage counts everything not returned to the input state
    leak = tuple(float(np.clip(1 - abs(x) ** 2, 0, 1)) for x in diag)
    return ConditionalPhaseTable(tuple(float(np.angle(x)) for x in diag), leak, block)


def _single(op: np.ndarray, atom: int) -> np.ndarray:
    eye = np.eye(LEVELS)
    return tensor(op, eye) if atom == 0 else tensor(eye, op)


def _drive(atom: int, rabi: float, detuning: float, phase: float = 0.0) -> np.ndarray:
    up = projector(LEVELS, 2, 1)  # |r><1|
    h = 0.5 * rabi * (np.exp(1j * phase) * up + np.exp(-1j * phase) * up.conj().T)
    h = h - detuning * projector(LEVELS, 2, 2)
    return _single(h, atom)


def _blockade_term(shift: float) -> np.ndarray:
    h = np.zeros((LEVELS**2, LEVELS**2), dtype=complex)
    if not math.isinf(shift):
        h[DOUBLE_RYDBERG, DOUBLE_RYDBERG] = shift
    return h


def _restrict(H: np.ndarray, hard: bool) -> tuple[np.ndarray, np.ndarray]:
    keep = np.array([k for k in range(LEVELS**2) if not (hard and k == DOUBLE_RYDBERG)])
    return H[np.ix_(keep, keep)], keep


def blockade_pulses(params: BlockadeParams) -> list[tuple[np.ndarray, float]]:
    """``(H, duration)`` for the pi (control), 2 pi (target), pi (control) sequence."""
    shift = _blockade_term(params.blockade_shift)
    t_pi = math.pi / params.rabi
    hc = _drive(0, params.rabi, params.detuning) + shift
    ht = _drive(1, params.rabi, params.detuning) + shift
    return [(hc, t_pi), (ht, 2 * t_pi), (hc, t_pi)]


def _sequence_unitary(pulses, hard: bool, step: float) -> np.ndarray:
    """Product of RK4 propagators for piecewise-constant pulses (``|rr>`` frozen in hard mode)."""
    U = np.eye(LEVELS**2, dtype=complex)
    for H, duration in pulses:
        Hs, keep = _restrict(H, hard)
        piece = np.eye(LEVELS**2, dtype=complex)
        piece[np.ix_(keep, keep)] = propagator(Hs, TimeGrid(0.0, duration, step))
        U = piece @ U
    return U


def _default_step(params: BlockadeParams) -> float:
    scale = params.rabi + abs(params.detuning) + (0 if params.hard else params.blockade_shift)
    return 0.02 / scale


def blockade_cz(params: BlockadeParams, psi0=None, step: float | None = None):
    """Run the three-pulse blockade sequence.

    Returns the final :class:`TwoAtomState` for ``psi0`` (default ``|11>``)
    and the conditional-phase table built from each computational input.
    """
    step = _default_step(params) if step is None else step
    psi0 = TwoAtomState.product(1, 1) if psi0 is None else TwoAtomState(getattr(psi0, "amplitudes", psi0))
    psi = psi0.amplitudes
    if params.hard and abs(psi[DOUBLE_RYDBERG]) > 0:
        raise InvalidStateError("hard-blockade mode cannot start with |rr> population")
    U = _sequence_unitary(blockade_pulses(params), params.hard, step)
    return TwoAtomState(U @ psi, normalize=False), _table(U)


def levine_pichler_unitary(params: LevinePichlerParams) -> np.ndarray:
    """Full 9x9 propagator of the two-pulse sequence (``|rr>`` frozen in hard mode)."""
    hard = math.isinf(params.blockade_shift)
    out = np.eye(LEVELS**2, dtype=complex)
    for phase in (0.0, params.xi):
        H = (_drive(0, params.rabi, params.detuning, phase) + _drive(1, params.rabi, params.detuning, phase)
             + _blockade_term(params.blockade_shift))
        Hs, keep = _restrict(H, hard)
        step_u = np.eye(LEVELS**2, dtype=complex)
        step_u[np.ix_(keep, keep)] = expm(-1j * Hs * params.duration)
        out = step_u @ out
    return out


def levine_pichler(params: LevinePichlerParams, leakage_threshold: float = 1e-3) -> ConditionalPhaseTable:
    """Conditional-phase table of the global two-pulse gate.

    Raises :class:`IncompleteReturnError` if any computational state leaks
    more than ``leakage_threshold``.
    """
    table = _table(levine_pichler_unitary(params))
    worst = max(table.leakage)
    if worst > leakage_threshold:
        raise IncompleteReturnError(f"population leakage {worst:.2e} exceeds {leakage_threshold:g}")
    return table


def solve_phase_offset(rabi: float, detuning: float, duration: float | None = None) -> float:
    """Second-pulse phase returning ``|01>`` to itself.

    Minimises the residual Rydberg population of the single-excitation
    sector over ``xi``: a coarse grid locates the basin, a bounded scalar
    search refines it.
    """
    base = LevinePichlerParams(rabi, detuning, 0.0, duration)

    def residual(xi):
        U = levine_pichler_unitary(LevinePichlerParams(rabi, detuning, xi, base.duration))
        return abs(U[2, 1]) ** 2  # <0r|U|01>

    grid = np.linspace(-math.pi, math.pi, 181)
    vals = [residual(x) for x in grid]
    k = int(np.argmin(vals))
    h = grid[1] - grid[0]
    res = minimize_scalar(residual, bounds=(grid[k] - h, grid[k] + h), method="bounded",
                          options={"xatol": 1e-12})
    return wrap_phase(res.x)


def rabi_from_duration(duration: float, detuning_ratio: float = 0.377) -> float:
    """Rabi frequency for which ``2 pi / sqrt(Delta^2 + 2 Omega^2)`` equals ``duration``."""
    if not duration > 0:
        raise InvalidParameterError("duration must be positive")
    return 2 * math.pi / duration / math.sqrt(detuning_ratio**2 + 2)


def ultrafast_phase(coupling: float, t: float) -> tuple[complex, complex]:
    """Amplitudes on ``|dd>`` and ``|pf>`` after resonant dipole exchange for time ``t``."""
    if not coupling > 0:
        raise InvalidParameterError("exchange coupling must be positive")
    return complex(math.cos(coupling * t)), -1j * math.sin(coupling * t)


def clock_laser_distance(delay: float, refractive_index: float = 1.0) -> float:
    """Path length ``c T / n`` (metres) that delays a pulse by ``delay`` seconds."""
    if delay < 0:
        raise InvalidParameterError("delay must be non-negative")
    if refractive_index < 1:
        raise InvalidParameterError("refractive index must be at least 1")
    return SPEED_OF_LIGHT * delay / refractive_index
