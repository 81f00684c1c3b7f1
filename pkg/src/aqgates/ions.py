"""Trapped-ion gates: Molmer-Sorensen dynamics, slide exposure and ring-trap schedules.

Everything is in SI units with angular frequencies in rad/s, except where a
docstring says otherwise.  Spin index 0 is ``|down>`` (ground).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import (
    SIGMA_MINUS,
    SIGMA_X,
    LindbladModel,
    Operator,
    TimeGrid,
    basis,
    destroy,
    integrate_schrodinger,
    liouvillian,
    state_fidelity,
    tensor,
)
from .errors import GeometryError, InvalidParameterError, TruncationError

TWO_PI = 2 * math.pi
EDGE_TOL = 1e-4

BELL_TARGET = (tensor(basis(2, 0), basis(2, 0)) + 1j * tensor(basis(2, 1), basis(2, 1))) / math.sqrt(2)


@dataclass(frozen=True)
class MSParams:
    """Bichromatic gate on two ions sharing one motional mode.

    ``rabi`` defaults to the single-loop closure value ``delta / (2 eta)``.
    ``n_max`` is the number of retained Fock levels.  ``qubit_gap`` and
    ``mode_frequency`` only fix the laser tones; the interaction-picture
    dynamics depend on ``detuning``, ``eta`` and ``rabi``.
    """

    qubit_gap: float = TWO_PI * 411e12
    mode_frequency: float = TWO_PI * 1.23e6
    detuning: float = TWO_PI * 20e3
    eta: float = 0.05
    rabi: float | None = None
    n_max: int = 10

    def __post_init__(self):
        if self.n_max < 2:
            raise InvalidParameterError("n_max must be at least 2")
        if self.eta < 0:
            raise InvalidParameterError("Lamb-Dicke parameter must be non-negative")
        if self.detuning == 0:
            raise InvalidParameterError("sideband detuning must be non-zero")
        if self.rabi is None:
            rabi = abs(self.detuning) / (2 * self.eta) if self.eta > 0 else 0.0
            object.__setattr__(self, "rabi", rabi)

    @property
    def coupling(self) -> float:
        """Sideband coupling ``eta * rabi / 2``."""
        return 0.5 * self.eta * self.rabi

    @property
    def gate_time(self) -> float:
        """One phase-space loop, ``2 pi / |delta|``."""
        return TWO_PI / abs(self.detuning)

    @property
    def tones(self) -> tuple[float, float]:
        """Blue and red laser frequencies ``w0 +- (nu - delta)``."""
        off = self.mode_frequency - self.detuning
        return self.qubit_gap + off, self.qubit_gap - off


@dataclass(frozen=True)
class MSResult:
    times: np.ndarray
    fidelity: np.ndarray
    motional_purity: np.ndarray
    mean_phonons: np.ndarray
    odd_parity: np.ndarray
    final_state: np.ndarray

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.fidelity, self.motional_purity])


def ms_hamiltonian(params: MSParams):
    """``H(t) = g sum_j sigma_x^j (a e^{-i delta t} + a^dag e^{i delta t})``, spins first."""
    n = params.n_max
    a = tensor(np.eye(4), destroy(n))
    jx = tensor(tensor(SIGMA_X, np.eye(2)) + tensor(np.eye(2), SIGMA_X), np.eye(n))
    sa = jx @ a
    sad = sa.conj().T
    g, d = params.coupling, params.detuning

    def H(t):
        ph = np.exp(-1j * d * t)
        return g * (sa * ph + sad * np.conj(ph))

    return H


def _split(psi: np.ndarray, n: int) -> np.ndarray:
    return psi.reshape(4, n)


def ms_evolve(params: MSParams, psi0=None, t_end: float | None = None,
              steps: int | None = None) -> MSResult:
    """Integrate the spin-motion dynamics up to ``t_end`` (default one loop).

    Raises :class:`TruncationError` if the top retained Fock level ever
    holds more than 1e-4 population.
    """
    n = params.n_max
    if psi0 is None:
        psi0 = tensor(basis(2, 0), basis(2, 0), basis(n, 0))
    t_end = params.gate_time if t_end is None else t_end
    steps = 2000 if steps is None else steps
    grid = TimeGrid(0.0, t_end, t_end / steps)
    traj = integrate_schrodinger(ms_hamiltonian(params), psi0, grid, check_hermitian=False)

    blocks = traj.states.reshape(len(grid.times), 4, n)
    edge = np.max(np.sum(np.abs(blocks[:, :, -1]) ** 2, axis=1))
    if edge > EDGE_TOL:
        raise TruncationError(f"top Fock level population {edge:.2e} exceeds {EDGE_TOL:g}")

    rho_spin = np.einsum("tin,tjn->tij", blocks, blocks.conj())
    rho_mot = np.einsum("tin,tim->tnm", blocks, blocks.conj())
    fid = np.einsum("i,tij,j->t", BELL_TARGET.conj(), rho_spin, BELL_TARGET).real
    purity = np.einsum("tnm,tmn->t", rho_mot, rho_mot).real
    nbar = np.einsum("tnn,n->t", rho_mot, np.arange(n)).real
    odd = (np.abs(blocks[:, 1]) ** 2 + np.abs(blocks[:, 2]) ** 2).sum(axis=1)
    return MSResult(grid.times, fid, purity, nbar, odd, traj.final)


@dataclass(frozen=True)
class SlideParams:
    speed: float
    beam_diameter: float

    def __post_init__(self):
        if not self.speed > 0 or not self.beam_diameter > 0:
            raise InvalidParameterError("speed and beam diameter must be positive")


def slide_exposure(speed: float, beam_diameter: float) -> float:
    """Time an ion moving at ``speed`` spends crossing a beam, ``D / v``."""
    if not speed > 0 or beam_diameter < 0:
        raise InvalidParameterError("need a positive speed and a non-negative diameter")
    return beam_diameter / speed


def slide_diameter(speed: float, exposure: float) -> float:
    """Beam diameter giving an exposure time ``exposure`` at ``speed``, ``v t``."""
    if not speed > 0 or exposure < 0:
        raise InvalidParameterError("need a positive speed and a non-negative exposure")
    return speed * exposure


def light_shift(rabi: float, detuning: float) -> float:
    """Off-resonant AC Stark shift ``rabi^2 / (2 detuning)``."""
    if detuning == 0:
        raise InvalidParameterError("detuning must be non-zero")
    return rabi**2 / (2 * detuning)


@dataclass(frozen=True)
class RingParams:
    """Ions circulating on a ring through a beam that cuts a chord of length ``chord``.

    ``rotation_frequency`` is cyclic (Hz); ``decay_rate`` is an energy
    relaxation rate (1/s); ``rabi`` is angular and defaults to the value that
    accumulates a pi pulse over the gate.
    """

    radius: float
    rotation_frequency: float
    chord: float
    duration: float
    decay_rate: float = 0.0
    rabi: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParameterError("ring radius must be positive")
        if self.chord < 0:
            raise InvalidParameterError("chord length must be non-negative")
        if self.chord > 2 * self.radius * (1 + 1e-12):
            raise GeometryError(f"chord {self.chord} exceeds ring diameter {2 * self.radius}")
        if self.rotation_frequency <= 0 or self.duration <= 0 or self.decay_rate < 0:
            raise InvalidParameterError("frequency and duration must be positive, decay non-negative")

    @property
    def angle(self) -> float:
        return 2 * math.asin(min(1.0, self.chord / (2 * self.radius)))

    @property
    def illuminated_fraction(self) -> float:
        return 2 * self.angle / TWO_PI

    @property
    def drive(self) -> float:
        if self.rabi is not None:
            return self.rabi
        frac = self.illuminated_fraction
        return math.pi / (self.duration * frac) if frac > 0 else 0.0


@dataclass(frozen=True)
class RingSchedule:
    passes: float
    angle: float
    illuminated_fraction: float
    pulse_area: float


def ring_schedule(params: RingParams) -> RingSchedule:
    """Passes per gate, subtended angle, illuminated fraction and accumulated pulse area."""
    frac = params.illuminated_fraction
    return RingSchedule(
        passes=params.duration * params.rotation_frequency,
        angle=params.angle,
        illuminated_fraction=frac,
        pulse_area=params.drive * params.duration * frac,
    )


def _illumination_segments(params: RingParams) -> list[tuple[float, bool]]:
    """``(length, lit)`` pieces covering the gate; arcs are centred at 0 and pi."""
    period = 1.0 / params.rotation_frequency
    half = params.angle / 2
    # lit intervals within one period, as fractions of a turn
    edges = sorted({0.0, half / TWO_PI, (math.pi - half) / TWO_PI, (math.pi + half) / TWO_PI,
                    (TWO_PI - half) / TWO_PI, 1.0})
    marks = []
    t = 0.0
    k = 0
    while t < params.duration:
        for lo, hi in zip(edges[:-1], edges[1:]):
            a = (k + lo) * period
            b = min((k + hi) * period, params.duration)
            if b <= a or a >= params.duration:
                continue
            mid = ((lo + hi) / 2) * TWO_PI
            lit = min(mid, TWO_PI - mid) <= half or abs(mid - math.pi) <= half
            marks.append((b - a, lit))
        k += 1
        t = k * period
    return marks


def _two_level_model(rabi: float, decay: float) -> LindbladModel:
    return LindbladModel(Operator(0.5 * rabi * SIGMA_X), ((Operator(SIGMA_MINUS), decay),))


@dataclass(frozen=True)
class RingRabiResult:
    excited_population: float
    reference_population: float
    fidelity: float


def ring_pulsed_rabi(params: RingParams, rho0=None) -> RingRabiResult:
    """Duty-cycled Rabi drive on the ring versus a continuous drive of equal area.

    Both evolutions include the same energy relaxation; each constant piece
    is propagated exactly with the matrix exponential of its Liouvillian.
    """
    rho = np.diag([1.0, 0.0]).astype(complex) if rho0 is None else np.asarray(rho0, dtype=complex)
    lit = liouvillian(_two_level_model(params.drive, params.decay_rate))
    dark = liouvillian(_two_level_model(0.0, params.decay_rate))
    vec = rho.reshape(-1)
    for length, on in _illumination_segments(params):
        vec = expm((lit if on else dark) * length) @ vec
    pulsed = vec.reshape(2, 2)

    eff = params.drive * params.illuminated_fraction
    cont = (expm(liouvillian(_two_level_model(eff, params.decay_rate)) * params.duration)
            @ rho.reshape(-1)).reshape(2, 2)
    return RingRabiResult(float(pulsed[1, 1].real), float(cont[1, 1].real), state_fidelity(pulsed, cont))
