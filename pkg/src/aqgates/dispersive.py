"""Photon-triggered Z rotation of a transmon dispersively coupled to a cavity.

A single-photon Gaussian wavepacket reflects off a cavity whose frequency
depends on the qubit state.  The qubit coherence picks up a relative phase
while the populations stay fixed.  The dynamics reduce to three coupled
linear ODEs for the coherence ``c(t)`` and the two qubit-conditioned cavity
amplitudes ``a_up(t)``, ``a_down(t)``::

    i dc/dt      = chi * c(-inf) * a_up * conj(a_down)
    i da_up/dt   = [delta + (chi - i gamma)/2] a_up   - i sqrt(gamma) u(t)
    i da_down/dt = [delta - (chi + i gamma)/2] a_down - i sqrt(gamma) u(t)

Sign convention
---------------
``c`` is the matrix element ``<0|rho|1>`` of the qubit state ``a|0> + b|1>``,
so ``c(-inf) = a conj(b)``.  A rotation ``|1> -> e^{i phi}|1>`` multiplies it
by ``e^{-i phi}``; the accumulated rotation angle is therefore
``phi(t) = -arg(c(t) / c(-inf))``, which tends to ``2 arctan(2 chi / gamma)``
at ``delta = chi / 2``.

All rates are in units of ``gamma`` by default (``gamma = 1``); times are in
``1 / gamma``.  The photon is emitted at ``t = 0`` and its envelope is centred
at ``t0`` (default ``100 / gamma``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateParameterError,
    IncompleteScatteringError,
    InvalidParameterError,
    InvalidStateError,
    NoSteadyStateError,
)

DEFAULT_BANDWIDTH_RATIO = 0.03
DEFAULT_T0 = 100.0
PULSE_HALF_WIDTH = 6.0  # in units of 1/bandwidth
MIN_TAIL = 300.0  # in units of 1/gamma
SETTLE_WINDOW = 50.0  # in units of 1/gamma
CHI_SWEEP_MAX = 30.0
CHI_SWEEP_SAMPLES = 601
AMPLITUDE_TOL = 1e-4


@dataclass(frozen=True)
class DispersiveZParams:
    """Physical parameters of the gate.

    ``delta`` defaults to ``chi / 2``, ``bandwidth`` to ``0.03 * gamma`` and
    ``t0`` to ``100 / gamma``.
    """

    chi: float
    gamma: float = 1.0
    delta: float | None = None
    bandwidth: float | None = None
    t0: float | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")
        if self.delta is None:
            object.__setattr__(self, "delta", self.chi / 2)
        if self.bandwidth is None:
            object.__setattr__(self, "bandwidth", DEFAULT_BANDWIDTH_RATIO * self.gamma)
        if not self.bandwidth > 0:
            raise InvalidParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.t0 is None:
            object.__setattr__(self, "t0", DEFAULT_T0 / self.gamma)

    @property
    def window(self) -> tuple[float, float]:
        """Default integration window ``[t0 - 6/W, t0 + max(6/W, 300/gamma)]``."""
        half = PULSE_HALF_WIDTH / self.bandwidth
        return self.t0 - half, self.t0 + max(half, MIN_TAIL / self.gamma)


@dataclass(frozen=True)
class CoherenceTrajectory:
    times: np.ndarray
    sigma_minus: np.ndarray
    a_up: np.ndarray
    a_down: np.ndarray
    params: DispersiveZParams = field(repr=False, default=None)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.sigma_minus)

    @property
    def phase(self) -> np.ndarray:
        """Accumulated rotation angle ``-arg(c(t)/c(t_start))``, unwrapped."""
        ph = -np.unwrap(np.angle(self.sigma_minus))
        return ph - ph[0]

    @property
    def final_phase(self) -> float:
        return float(self.phase[-1])

    def table(self) -> np.ndarray:
        """Rows ``(t, re c, im c, phase, |c|)``."""
        s = self.sigma_minus
        return np.column_stack([self.times, s.real, s.imag, self.phase, np.abs(s)])


@dataclass(frozen=True)
class ZGateReport:
    phi_target: float
    phi_final: float
    coherence_final: float
    fidelity: float
    chi_used: float
    settle_time: float
    gamma: float = 1.0
    bandwidth: float = DEFAULT_BANDWIDTH_RATIO

    def settle_time_si(self, gamma_si: float) -> float:
        """Settling time in seconds for a physical decay rate ``gamma_si`` (1/s)."""
        return self.settle_time * self.gamma / gamma_si


def analytic_phase(chi: float, gamma: float) -> float:
    """Narrow-band rotation angle ``2 arctan(2 chi / gamma)``.

    Lies in ``[0, pi)`` for ``chi >= 0``.
    """
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    return 2.0 * math.atan(2.0 * chi / gamma)


def long_time_coherence(chi: float, gamma: float, delta: float) -> complex:
    """Adiabatic (``bandwidth -> 0``) limit of ``c(+inf) / c(-inf)``.

    Equals ``1 - i chi gamma / [(delta + (chi - i gamma)/2)(delta - (chi - i gamma)/2)]``.
    """
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    z = 0.5 * (chi - 1j * gamma)
    den = (delta + z) * (delta - z)
    if abs(den) < 1e-12:
        raise DegenerateParameterError("coherence formula denominator vanishes")
    return 1.0 - 1j * chi * gamma / den


def gate_fidelity(coherence: complex, a: complex, b: complex, target_phi: float) -> float:
    """Fidelity of the final qubit state to ``a|0> + e^{i phi} b|1>``.

    Populations are unchanged by a dispersive interaction, so only the
    coherence ``c = <0|rho|1>`` enters:
    ``F = |a|^4 + |b|^4 + 2 Re(conj(a) b e^{i phi} c)``.
    """
    a, b = complex(a), complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-9:
        raise InvalidStateError("amplitudes must satisfy |a|^2 + |b|^2 = 1")
    return float(abs(a) ** 4 + abs(b) ** 4
                 + 2 * np.real(np.conj(a) * b * np.exp(1j * target_phi) * coherence))


def _default_step(chi, delta, gamma, bandwidth) -> float:
    chi = np.abs(np.atleast_1d(chi))
    delta = np.abs(np.atleast_1d(delta))
    lam = float(np.max(delta + chi / 2)) + gamma / 2
    return min(0.05 / gamma, 0.2 / lam, 0.05 / bandwidth)


def _integrate(chi, delta, gamma, bandwidth, t0, t_start, t_end, step, keep):
    """Vectorised RK4 over a batch of ``(chi, delta)`` pairs with ``c(-inf) = 1``.

    Returns ``(times, c, a_up, a_down)``; when ``keep`` is false only the
    final values are returned (arrays of shape ``(batch,)``).
    """
    chi = np.atleast_1d(np.asarray(chi, dtype=float))
    delta = np.broadcast_to(np.asarray(delta, dtype=float), chi.shape)
    n = max(1, math.ceil((t_end - t_start) / step - 1e-9))
    h = (t_end - t_start) / n
    half = t_start + 0.5 * h * np.arange(2 * n + 1)
    u = (bandwidth**2 / (2 * math.pi)) ** 0.25 * np.exp(-(bandwidth**2) / 4 * (half - t0) ** 2)
    sg = math.sqrt(gamma)
    k_up = -1j * (delta + 0.5 * (chi - 1j * gamma))
    k_dn = -1j * (delta - 0.5 * (chi + 1j * gamma))
    mix = -1j * chi

    c = np.ones(chi.shape, dtype=complex)
    au = np.zeros(chi.shape, dtype=complex)
    ad = np.zeros(chi.shape, dtype=complex)
    if keep:
        out = np.empty((3, n + 1) + chi.shape, dtype=complex)
        out[:, 0] = c, au, ad

    for k in range(n):
        u0, u1, u2 = u[2 * k], u[2 * k + 1], u[2 * k + 2]
        # the coherence equation has no feedback, so only the cavity stages matter
        du1 = k_up * au - sg * u0
        dd1 = k_dn * ad - sg * u0
        au2 = au + 0.5 * h * du1
        ad2 = ad + 0.5 * h * dd1
        du2 = k_up * au2 - sg * u1
        dd2 = k_dn * ad2 - sg * u1
        au3 = au + 0.5 * h * du2
        ad3 = ad + 0.5 * h * dd2
        du3 = k_up * au3 - sg * u1
        dd3 = k_dn * ad3 - sg * u1
        au4 = au + h * du3
        ad4 = ad + h * dd3
        du4 = k_up * au4 - sg * u2
        dd4 = k_dn * ad4 - sg * u2
        c = c + (h / 6) * mix * (au * ad.conj() + 2 * au2 * ad2.conj()
                                 + 2 * au3 * ad3.conj() + au4 * ad4.conj())
        au = au + (h / 6) * (du1 + 2 * du2 + 2 * du3 + du4)
        ad = ad + (h / 6) * (dd1 + 2 * dd2 + 2 * dd3 + dd4)
        if keep:
            out[:, k + 1] = c, au, ad

    if keep:
        times = t_start + h * np.arange(n + 1)
        return times, out[0], out[1], out[2]
    return None, c, au, ad


def _check_scattered(au, ad):
    worst = float(max(np.max(np.abs(au)), np.max(np.abs(ad))))
    if worst >= AMPLITUDE_TOL:
        raise IncompleteScatteringError(
            f"cavity amplitude {worst:.2e} has not decayed below {AMPLITUDE_TOL:g}; "
            "extend the integration window")


def evolve_effective_eoms(params: DispersiveZParams, initial_coherence: complex = 0.5,
                          t_end: float | None = None, step: float | None = None) -> CoherenceTrajectory:
    """Integrate the coherence and cavity-amplitude equations over the pulse.

    The window starts at ``t0 - 6/bandwidth`` and by default ends at
    ``t0 + max(6/bandwidth, 300/gamma)``.  Raises
    :class:`IncompleteScatteringError` if either cavity amplitude is still
    above 1e-4 at the final time.
    """
    t_start, default_end = params.window
    t_end = default_end if t_end is None else t_end
    if t_end <= t_start:
        raise InvalidParameterError("t_end must follow the start of the pulse window")
    if step is None:
        step = _default_step(params.chi, params.delta, params.gamma, params.bandwidth)
    times, c, au, ad = _integrate(params.chi, params.delta, params.gamma, params.bandwidth,
                                  params.t0, t_start, t_end, step, keep=True)
    _check_scattered(au[-1], ad[-1])
    return CoherenceTrajectory(times, initial_coherence * c[:, 0], au[:, 0], ad[:, 0], params)


def coherence_sweep(chis, gamma: float = 1.0, bandwidth: float | None = None,
                    delta_rule=lambda chi: chi / 2, t0: float | None = None,
                    step: float | None = None) -> np.ndarray:
    """Final ``c(+inf)/c(-inf)`` for every ``chi`` in ``chis``, integrated as one batch."""
    chis = np.asarray(chis, dtype=float)
    if chis.size == 0:
        raise InvalidParameterError("empty chi sweep")
    ref = DispersiveZParams(chi=float(chis.max()), gamma=gamma, bandwidth=bandwidth, t0=t0)
    deltas = np.array([delta_rule(x) for x in chis], dtype=float)
    t_start, t_end = ref.window
    if step is None:
        step = _default_step(chis, deltas, gamma, ref.bandwidth)
    _, c, au, ad = _integrate(chis, deltas, gamma, ref.bandwidth, ref.t0, t_start, t_end, step,
                              keep=False)
    _check_scattered(au, ad)
    return c


def steady_state_time(traj: CoherenceTrajectory, tol: float = 1e-3,
                      window: float | None = None) -> float:
    """First time after which ``|c|`` and the phase each vary by less than ``tol``.

    The variation is measured over the rest of the trajectory, which must
    still span at least ``window`` (default ``50/gamma``) after the returned
    time; otherwise :class:`NoSteadyStateError` is raised.
    """
    p = traj.params
    gamma = p.gamma if p is not None else 1.0
    if p is not None and traj.times[-1] < p.t0 + MIN_TAIL / gamma - 1e-9:
        raise InvalidParameterError("trajectory must extend at least 300/gamma past t0")
    window = SETTLE_WINDOW / gamma if window is None else window

    def spread(x):
        rmax = np.maximum.accumulate(x[::-1])[::-1]
        rmin = np.minimum.accumulate(x[::-1])[::-1]
        return rmax - rmin

    settled = (spread(traj.magnitude) < tol) & (spread(traj.phase) < tol)
    # settled is monotone in time: once true it stays true
    idx = int(np.argmax(settled)) if settled[-1] else len(settled)
    if idx >= len(settled) or traj.times[-1] - traj.times[idx] < window:
        raise NoSteadyStateError(f"coherence did not settle to within {tol:g}")
    return float(traj.times[idx])


def optimize_rotation(target_phi: float, chi_max: float = CHI_SWEEP_MAX,
                      samples: int = CHI_SWEEP_SAMPLES, gamma: float = 1.0,
                      bandwidth: float | None = None, a: complex = 1 / math.sqrt(2),
                      b: complex = 1 / math.sqrt(2), settle_tol: float = 1e-3,
                      sweep: tuple[np.ndarray, np.ndarray] | None = None) -> ZGateReport:
    """Best-fidelity rotation by ``target_phi`` over a uniform ``chi`` sweep.

    ``chi`` runs over ``[0, chi_max * gamma]`` with ``delta = chi / 2``.  The
    reported ``chi_used`` is the smallest ``chi`` reaching the maximum
    fidelity.  A precomputed ``(chis, ratios)`` pair from
    :func:`coherence_sweep` may be passed as ``sweep`` to reuse one batch
    for many targets.
    """
    if not 0 <= target_phi <= math.pi:
        raise InvalidParameterError("target angle must lie in [0, pi]")
    if sweep is None:
        if samples < 1:
            raise InvalidParameterError("empty chi sweep")
        chis = np.linspace(0.0, chi_max * gamma, samples)
        ratios = coherence_sweep(chis, gamma=gamma, bandwidth=bandwidth)
    else:
        chis, ratios = sweep
        if len(chis) == 0:
            raise InvalidParameterError("empty chi sweep")
    c0 = complex(a) * np.conj(complex(b))
    fids = np.array([gate_fidelity(c0 * r, a, b, target_phi) for r in ratios])
    best = int(np.flatnonzero(fids >= fids.max() - 1e-15)[0])
    chi = float(chis[best])
    params = DispersiveZParams(chi=chi, gamma=gamma, bandwidth=bandwidth)
    traj = evolve_effective_eoms(params, initial_coherence=c0)
    return ZGateReport(
        phi_target=float(target_phi),
        phi_final=traj.final_phase,
        coherence_final=float(traj.magnitude[-1]),
        fidelity=float(fids[best]),
        chi_used=chi,
        settle_time=steady_state_time(traj, settle_tol),
        gamma=gamma,
        bandwidth=params.bandwidth,
    )


def fidelity_curve(targets, gamma: float = 1.0, bandwidth: float | None = None,
                   chi_max: float = CHI_SWEEP_MAX, samples: int = CHI_SWEEP_SAMPLES,
                   settle_tol: float = 1e-3) -> list[ZGateReport]:
    """Optimised report for each target angle, sharing a single ``chi`` sweep."""
    chis = np.linspace(0.0, chi_max * gamma, samples)
    ratios = coherence_sweep(chis, gamma=gamma, bandwidth=bandwidth)
    return [optimize_rotation(phi, gamma=gamma, bandwidth=bandwidth, settle_tol=settle_tol,
                              sweep=(chis, ratios)) for phi in targets]
