"""Autonomous quantum clock: a Lambda system pumped by a two-qubit heat engine.

Hilbert space ``Lambda (g, e, s) x cold qubit x hot qubit`` (dimension 12),
ordered as written.  In the frame rotating with the bare level energies the
only coherent term is the three-body exchange ``|g 0 1> <-> |e 1 0>`` plus
the residual detuning ``omega_C + omega_ge - omega_H`` on ``|e>``.  The
engine qubits thermalise locally with their baths; ``e -> s`` emission is
the tick and ``s -> g`` closes the cycle.

Energies, rates and temperatures share one unit (``k_B = hbar = 1``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .core import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    LindbladModel,
    Operator,
    TimeGrid,
    embed,
    jump_ensemble,
    projector,
    steady_state,
)
from .errors import InsufficientDataError, InvalidParameterError, ResonanceWarning

G, E, S = 0, 1, 2
DIMS = (3, 2, 2)
TICK_LABEL = "emission"
ACCURACY_CAP = 1e12


def thermal_occupation(gap: float, temperature: float) -> float:
    """Bose occupation ``1 / (exp(gap / T) - 1)``; zero at ``T = 0``."""
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(gap / temperature)


def excited_probability(gap: float, temperature: float) -> float:
    """Gibbs excited-state population of a qubit, ``1 / (1 + exp(gap / T))``."""
    if temperature == 0:
        return 0.0
    return 1.0 / (1.0 + math.exp(gap / temperature))


@dataclass(frozen=True)
class ClockParams:
    """Clock and engine parameters.

    ``cold_rate`` defaults to ten times ``coupling``; the cold qubit must dump
    heat faster than the engine pumps.
    """

    omega_ge: float = 5.0
    omega_se: float = 3.0
    omega_c: float = 1.0
    omega_h: float = 6.0
    temp_c: float = 0.5
    temp_h: float = 5.0
    coupling: float = 1.0
    cold_rate: float | None = None
    hot_rate: float = 1.0
    emission_rate: float = 1.0
    decay_rate: float = 0.05
    resonance_tol: float = 1e-9

    def __post_init__(self):
        if not self.temp_c > 0 or not self.temp_h >= self.temp_c:
            raise InvalidParameterError("need 0 < T_C <= T_H")
        if min(self.omega_ge, self.omega_se, self.omega_c, self.omega_h) <= 0:
            raise InvalidParameterError("level spacings must be positive")
        if self.cold_rate is None:
            object.__setattr__(self, "cold_rate", 10.0 * self.coupling)
        rates = (self.coupling, self.cold_rate, self.hot_rate, self.emission_rate, self.decay_rate)
        if min(rates) < 0:
            raise InvalidParameterError("rates must be non-negative")

    @property
    def resonance_residual(self) -> float:
        return self.omega_c + self.omega_ge - self.omega_h


@dataclass(frozen=True)
class ClockModel(LindbladModel):
    params: ClockParams | None = field(default=None, repr=False)

    @property
    def tick_channel(self) -> int:
        return self.channel_index(TICK_LABEL)

    def initial_distribution(self) -> np.ndarray:
        """Diagonal of ``|g><g| x rho_C(T_C) x rho_H(T_H)``."""
        p = self.params
        pc = excited_probability(p.omega_c, p.temp_c)
        ph = excited_probability(p.omega_h, p.temp_h)
        lam = np.zeros(3)
        lam[G] = 1.0
        return np.kron(lam, np.kron([1 - pc, pc], [1 - ph, ph]))

    def initial_state(self) -> np.ndarray:
        return np.diag(self.initial_distribution()).astype(complex)


def build_clock_model(params: ClockParams) -> ClockModel:
    """Lindblad model of the clock; a :class:`ResonanceWarning` is attached if off resonance."""
    lam = lambda i, j: embed(projector(3, i, j), 0, DIMS)
    cold = lambda op: embed(op, 1, DIMS)
    hot = lambda op: embed(op, 2, DIMS)

    pump = lam(E, G) @ cold(SIGMA_PLUS) @ hot(SIGMA_MINUS)
    H = params.coupling * (pump + pump.conj().T) + params.resonance_residual * lam(E, E)

    nc = thermal_occupation(params.omega_c, params.temp_c)
    nh = thermal_occupation(params.omega_h, params.temp_h)
    channels = (
        (Operator(cold(SIGMA_MINUS)), params.cold_rate * (nc + 1)),
        (Operator(cold(SIGMA_PLUS)), params.cold_rate * nc),
        (Operator(hot(SIGMA_MINUS)), params.hot_rate * (nh + 1)),
        (Operator(hot(SIGMA_PLUS)), params.hot_rate * nh),
        (Operator(lam(S, E)), params.emission_rate),
        (Operator(lam(G, S)), params.decay_rate),
    )
    labels = ("cold_down", "cold_up", "hot_down", "hot_up", TICK_LABEL, "relax")
    notes = ()
    if abs(params.resonance_residual) > params.resonance_tol:
        msg = f"resonance residual omega_C + omega_ge - omega_H = {params.resonance_residual:g}"
        warnings.warn(msg, ResonanceWarning, stacklevel=2)
        notes = (msg,)
    return ClockModel(Operator(H), channels, labels, notes, params)


def excited_projector() -> np.ndarray:
    return embed(projector(3, E, E), 0, DIMS)


def steady_state_flux(model: ClockModel) -> float:
    """Tick rate ``emission_rate * P_e`` in the Lindblad steady state."""
    rho = steady_state(model)
    return float(model.params.emission_rate * np.trace(excited_projector() @ rho).real)


def gibbs_baseline_flux(params: ClockParams) -> float:
    """Tick rate from rate equations with the engine frozen in its Gibbs state.

    The exchange ``|g01> <-> |e10>`` is treated as an incoherent hop with the
    golden-rule rate ``2 g^2 G / (G^2 + r^2)``, where ``G`` is half the total
    decay rate out of the two coupled states and ``r`` the resonance
    residual.  Valid when the engine relaxes much faster than ``g``.
    """
    p = params
    nc = thermal_occupation(p.omega_c, p.temp_c)
    nh = thermal_occupation(p.omega_h, p.temp_h)
    out_g01 = p.cold_rate * nc + p.hot_rate * (nh + 1)
    out_e10 = p.cold_rate * (nc + 1) + p.hot_rate * nh + p.emission_rate
    width = 0.5 * (out_g01 + out_e10)
    hop = 2 * p.coupling**2 * width / (width**2 + p.resonance_residual**2)
    pc = excited_probability(p.omega_c, p.temp_c)
    ph = excited_probability(p.omega_h, p.temp_h)
    up = hop * (1 - pc) * ph
    down = hop * pc * (1 - ph)
    rates = np.array([
        [-up, down, p.decay_rate],
        [up, -(down + p.emission_rate), 0.0],
        [0.0, p.emission_rate, -p.decay_rate],
    ])
    # steady state: null vector of the rate matrix, normalised
    w, v = np.linalg.eig(rates)
    pop = np.real(v[:, np.argmin(np.abs(w))])
    pop = pop / pop.sum()
    return float(p.emission_rate * pop[E])


@dataclass(frozen=True)
class TickRecord:
    times: np.ndarray
    seed: int

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvalidParameterError("tick times must be strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size


def _basis_sampler(probs: np.ndarray):
    def sample(rng, n):
        idx = rng.choice(probs.size, size=n, p=probs)
        kets = np.zeros((n, probs.size), dtype=complex)
        kets[np.arange(n), idx] = 1
        return kets

    return sample


def _steady_sampler(model: ClockModel):
    w, v = np.linalg.eigh(steady_state(model))
    w = np.clip(w, 0, None)
    w = w / w.sum()

    def sample(rng, n):
        return v[:, rng.choice(w.size, size=n, p=w)].T.copy()

    return sample


def tick_ensemble(model: ClockModel, duration: float, seed: int, n_traj: int,
                  step: float = 0.01, start: str = "thermal") -> list[TickRecord]:
    """Tick times of ``n_traj`` quantum-jump trajectories.

    ``start`` is ``"thermal"`` (Lambda in ``g``, engine qubits at their bath
    temperatures) or ``"steady"`` (an exact unravelling of the Lindblad
    steady state).
    """
    if start == "thermal":
        sampler = _basis_sampler(model.initial_distribution())
    elif start == "steady":
        sampler = _steady_sampler(model)
    else:
        raise InvalidParameterError(f"unknown start {start!r}")
    ens = jump_ensemble(model, None, TimeGrid(0.0, duration, step), seed, n_traj=n_traj,
                        initial_sampler=sampler)
    k = model.tick_channel
    return [TickRecord(r.of_channel(k), seed) for r in ens.records]


def simulate_ticks(model: ClockModel, duration: float, seed: int, step: float = 0.01,
                   start: str = "thermal") -> TickRecord:
    """Tick times of one quantum-jump trajectory; identical for identical seeds."""
    return tick_ensemble(model, duration, seed, 1, step, start)[0]


def ensemble_rate(records: Sequence[TickRecord], t_from: float, t_to: float) -> float:
    """Mean ticks per unit time per trajectory inside ``[t_from, t_to)``."""
    count = sum(int(np.sum((r.times >= t_from) & (r.times < t_to))) for r in records)
    return count / (len(records) * (t_to - t_from))


@dataclass(frozen=True)
class TickStatistics:
    mean_interval: float
    variance: float
    accuracy: float
    intervals: int
    capped: bool = False


def tick_statistics(records: TickRecord | Sequence[TickRecord]) -> TickStatistics:
    """Mean and unbiased variance of the waiting times between ticks.

    Intervals are pooled over all records.  Accuracy ``N = mean^2 / var`` is
    reported as :data:`ACCURACY_CAP` (with ``capped=True``) for a perfectly
    periodic record.  A single interval has no sample variance; it is
    reported as ``nan``.
    """
    if isinstance(records, TickRecord):
        records = [records]
    gaps = [np.diff(r.times) for r in records if len(r) >= 2]
    if not gaps:
        raise InsufficientDataError("need at least two ticks")
    gaps = np.concatenate(gaps)
    mean = float(gaps.mean())
    if gaps.size < 2:
        return TickStatistics(mean, math.nan, math.nan, 1)
    var = float(gaps.var(ddof=1))
    if var <= 1e-24 * mean**2:
        return TickStatistics(mean, 0.0, ACCURACY_CAP, gaps.size, capped=True)
    return TickStatistics(mean, var, mean**2 / var, gaps.size)


@dataclass(frozen=True)
class MarginCheck:
    ratio: float
    passed: bool


def metastable_margin(s_lifetime: float, gate_time: float, threshold: float = 10.0) -> MarginCheck:
    """How many gate durations fit inside the metastable-state lifetime."""
    if not s_lifetime > 0 or not gate_time > 0:
        raise InvalidParameterError("lifetime and gate time must be positive")
    ratio = s_lifetime / gate_time
    return MarginCheck(ratio, ratio >= threshold)


@dataclass(frozen=True)
class FractionalPlan:
    target_angle: float
    per_tick_angle: float
    ticks: int
    overshoot: bool = False


@dataclass(frozen=True)
class AngleSpread:
    plan: FractionalPlan
    tick_counts: np.ndarray
    errors: np.ndarray

    @property
    def rms_error(self) -> float:
        return float(np.sqrt(np.mean(self.errors**2)))


def plan_fractional_gate(target_angle: float, coupling: float, tick_time: float) -> FractionalPlan:
    """Number of ticks so that ``n`` rotations by ``2 g t`` approximate ``target_angle``."""
    if not target_angle > 0:
        raise InvalidParameterError("target angle must be positive")
    per_tick = 2 * coupling * tick_time
    if not per_tick > 0:
        raise InvalidParameterError("per-tick angle must be positive")
    if per_tick > target_angle:
        return FractionalPlan(target_angle, per_tick, 1, overshoot=True)
    return FractionalPlan(target_angle, per_tick, max(1, round(target_angle / per_tick)))


def tick_count_pmf(mean: float, variance: float, k_max: int) -> np.ndarray:
    """Probabilities of ``0..k_max`` ticks for a normal budget rounded to integers and clipped at 0."""
    sd = math.sqrt(variance)
    edges = norm.cdf((np.arange(k_max + 2) - 0.5 - mean) / sd)
    pmf = np.diff(edges)
    pmf[0] = edges[1]
    return pmf


def fractional_gate_plan(target_angle: float, coupling: float, tick_time: float,
                         budget: tuple[float, float] | None = None, samples: int = 100_000,
                         seed: int = 0) -> AngleSpread:
    """Plan a fractional gate and sample the total rotation error.

    ``budget = (mean, variance)`` models a finite bath as a random number of
    delivered ticks (normal, rounded, non-negative); ``None`` delivers
    exactly the planned count.
    """
    plan = plan_fractional_gate(target_angle, coupling, tick_time)
    if budget is None:
        counts = np.full(samples, plan.ticks)
    else:
        mean, var = budget
        if var < 0:
            raise InvalidParameterError("budget variance must be non-negative")
        rng = np.random.default_rng(seed)
        counts = np.maximum(np.rint(rng.normal(mean, math.sqrt(var), samples)), 0).astype(int)
    errors = counts * plan.per_tick_angle - target_angle
    return AngleSpread(plan, counts, errors)
