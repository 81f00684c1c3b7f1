"""Numerical substrate: states, operators, Lindblad models and integrators.

Everything here works with dense ``numpy`` arrays on Hilbert spaces of at most
a few hundred dimensions.  The integrators are fixed-step classical RK4 so that
results are deterministic and reproducible bit for bit; quantum-jump
unravelings draw from seeded :class:`numpy.random.Generator` streams.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import expm, null_space

from .errors import (
    InvalidModelError,
    InvalidParameterError,
    InvalidStateError,
    PositivityWarning,
)

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-12
POSITIVITY_WARN = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Operator:
    """Dense square matrix, optionally flagged (and checked) as Hermitian.

    When ``hermitian`` is left as ``None`` the flag is inferred from the
    matrix itself.
    """

    matrix: np.ndarray
    hermitian: bool | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidModelError(f"operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidModelError("operator has non-finite entries")
        herm = _is_hermitian(m)
        if self.hermitian is None:
            object.__setattr__(self, "hermitian", herm)
        elif self.hermitian and not herm:
            raise InvalidModelError("operator flagged Hermitian but is not")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return StateVector(self.matrix @ other.amplitudes, normalize=False)
        return self.matrix @ other

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + _as_matrix(other))

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix - _as_matrix(other))

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.matrix * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class StateVector:
    """Ket on a ``dim``-dimensional Hilbert space.

    The constructor normalises by default; pass ``normalize=False`` to keep
    raw amplitudes (e.g. for unnormalised intermediate vectors).
    """

    amplitudes: np.ndarray
    normalize: bool = field(default=True, repr=False)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise InvalidStateError("state vector must be finite and non-empty")
        if self.normalize:
            nrm = np.linalg.norm(a)
            if nrm == 0:
                raise InvalidStateError("cannot normalise the zero vector")
            a = a / nrm
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix (checked to 1e-9)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density operator must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > NORM_TOL:
            raise InvalidStateError("density operator is not Hermitian")
        if abs(np.trace(m) - 1) > NORM_TOL:
            raise InvalidStateError(f"density operator has trace {np.trace(m).real:.12g}")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -NORM_TOL:
            raise InvalidStateError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expect(self, op) -> complex:
        return complex(np.trace(_as_matrix(op) @ self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class LindbladModel:
    """Static Hamiltonian plus collapse channels ``(operator, rate)``.

    Each channel contributes ``rate * (L rho L^+ - {L^+ L, rho}/2)``.  Labels
    are optional names used to identify channels in jump records.
    """

    hamiltonian: Operator
    channels: tuple = ()
    labels: tuple = ()
    warnings: tuple = ()

    def __post_init__(self):
        H = self.hamiltonian
        if not isinstance(H, Operator):
            H = Operator(H)
        if not H.hermitian:
            raise InvalidModelError("Hamiltonian must be Hermitian")
        chans = []
        for op, rate in self.channels:
            op = op if isinstance(op, Operator) else Operator(op)
            rate = float(rate)
            if not math.isfinite(rate) or rate < 0:
                raise InvalidModelError(f"collapse rate must be >= 0, got {rate}")
            if op.dim != H.dim:
                raise InvalidModelError("collapse operator dimension mismatch")
            chans.append((op, rate))
        labels = tuple(self.labels) or tuple(f"L{k}" for k in range(len(chans)))
        if len(labels) != len(chans):
            raise InvalidModelError("one label per channel required")
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "channels", tuple(chans))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def channel_index(self, label: str) -> int:
        return self.labels.index(label)

    def scaled_collapse(self) -> list[np.ndarray]:
        """Collapse matrices multiplied by ``sqrt(rate)``."""
        return [math.sqrt(r) * op.matrix for op, r in self.channels]

    def effective_hamiltonian(self) -> np.ndarray:
        """``H - (i/2) sum_k rate_k L_k^+ L_k``."""
        H = self.hamiltonian.matrix.copy()
        for L in self.scaled_collapse():
            H = H - 0.5j * (L.conj().T @ L)
        return H


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex drive amplitude ``t -> u(t)``, identically zero outside its support."""

    rule: Callable[[np.ndarray], np.ndarray]
    t_start: float
    t_end: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_start) & (t <= self.t_end)
        out = np.zeros(t.shape, dtype=complex)
        if np.any(inside):
            out[inside] = self.rule(t[inside])
        return out if out.ndim else complex(out)

    def energy(self, n: int = 20001) -> float:
        """``int |u|^2 dt`` over the support (composite Simpson rule)."""
        from scipy.integrate import simpson

        t = np.linspace(self.t_start, self.t_end, n)
        return float(simpson(np.abs(self(t)) ** 2, x=t))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[t_start, t_end]``.

    The requested ``step`` is an upper bound: the interval is split into
    ``ceil(span / step)`` equal steps so the final time is hit exactly.
    """

    t_start: float
    t_end: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidParameterError("time step must be positive")
        if not self.t_end > self.t_start:
            raise InvalidParameterError("t_end must exceed t_start")

    @property
    def num_steps(self) -> int:
        return max(1, math.ceil((self.t_end - self.t_start) / self.step - 1e-9))

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.num_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.num_steps + 1)

    @classmethod
    def from_points(cls, t_start, t_end, points: int) -> "TimeGrid":
        return cls(t_start, t_end, (t_end - t_start) / (points - 1))


# ---------------------------------------------------------------------------
# Operator construction helpers
# ---------------------------------------------------------------------------


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, Operator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def _as_vector(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex).reshape(-1)


def _is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol * scale


def tensor(*ops) -> np.ndarray:
    """Kronecker product of matrices or kets, left factor most significant."""
    out = np.array([[1.0 + 0j]]) if np.ndim(_raw(ops[0])) == 2 else np.array([1.0 + 0j])
    for op in ops:
        out = np.kron(out, _raw(op))
    return out


def _raw(x):
    if isinstance(x, Operator):
        return x.matrix
    if isinstance(x, StateVector):
        return x.amplitudes
    return np.asarray(x, dtype=complex)


def embed(op, index: int, dims: Sequence[int]) -> np.ndarray:
    """Place a single-subsystem operator at position ``index`` of a product space."""
    factors = [np.eye(d) for d in dims]
    factors[index] = _as_matrix(op)
    return tensor(*factors)


def basis(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def destroy(n_levels: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on ``n_levels`` Fock states."""
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


def number(n_levels: int) -> np.ndarray:
    return np.diag(np.arange(n_levels)).astype(complex)


def projector(dim: int, i: int, j: int | None = None) -> np.ndarray:
    """``|i><j|`` (``j`` defaults to ``i``)."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, i if j is None else j] = 1.0
    return m


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
# Qubit convention: index 0 = |0> (ground, sigma_z = -1), index 1 = |1> (excited).
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def coherent_state(n_levels: int, alpha: complex) -> np.ndarray:
    n = np.arange(n_levels)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    amps = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * np.power(complex(alpha), n)
    return amps / np.linalg.norm(amps)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in ``keep``."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    # trace out from the highest index so axis numbers stay valid
    for i in sorted(drop, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Either argument may be a ket, in which case the overlap formula is used.
    """
    r = _raw(rho)
    s = _raw(sigma)
    if r.ndim == 1 and s.ndim == 1:
        return float(abs(np.vdot(r, s)) ** 2)
    if r.ndim == 1:
        return float(np.real(r.conj() @ s @ r))
    if s.ndim == 1:
        return float(np.real(s.conj() @ r @ s))
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    ev = np.linalg.eigvalsh(sq @ s @ sq)
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


# ---------------------------------------------------------------------------
# Pulses
# ---------------------------------------------------------------------------


def gaussian_envelope(bandwidth: float, center: float, width: float = 12.0) -> PulseEnvelope:
    """Normalised Gaussian single-photon profile.

    ``u(t) = (W^2 / 2pi)^(1/4) exp(-W^2 (t - t0)^2 / 4)`` with bandwidth ``W``.
    The support spans ``width / W`` centred on ``t0`` (default +-6/W, which
    discards under 1e-15 of the pulse energy).
    """
    if not bandwidth > 0:
        raise InvalidParameterError(f"bandwidth must be positive, got {bandwidth}")
    pref = (bandwidth**2 / (2 * math.pi)) ** 0.25
    half = 0.5 * width / bandwidth

    def rule(t):
        return pref * np.exp(-(bandwidth**2) / 4 * (t - center) ** 2) + 0j

    return PulseEnvelope(rule, center - half, center + half)


# ---------------------------------------------------------------------------
# Fixed-step integration
# ---------------------------------------------------------------------------


def rk4(rhs, y0, times: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Classical fourth-order Runge–Kutta on an explicit time grid.

    ``rhs(t, y)`` returns ``dy/dt``; ``y`` may be any complex ndarray.  Each
    interval of ``times`` is divided into ``substeps`` equal RK4 steps and the
    solution is stored at every entry of ``times``.
    """
    y = np.array(y0, dtype=complex, copy=True)
    out = np.empty((len(times),) + y.shape, dtype=complex)
    out[0] = y
    for k in range(len(times) - 1):
        t = times[k]
        h = (times[k + 1] - t) / substeps
        for _ in range(substeps):
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t + h
        out[k + 1] = y
    return out


@dataclass(frozen=True)
class Trajectory:
    """Time samples and the corresponding kets (``(n, d)``) or density matrices (``(n, d, d)``)."""

    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def expect(self, op) -> np.ndarray:
        m = _as_matrix(op)
        if self.states.ndim == 2:
            return np.einsum("ti,ij,tj->t", self.states.conj(), m, self.states)
        return np.einsum("ij,tji->t", m, self.states)

    def populations(self) -> np.ndarray:
        if self.states.ndim == 2:
            return np.abs(self.states) ** 2
        return np.real(np.einsum("tii->ti", self.states))


HamiltonianLike = Union[Operator, np.ndarray, Callable[[float], Union[Operator, np.ndarray]]]


def _hamiltonian_fn(H: HamiltonianLike, check: bool):
    if callable(H) and not isinstance(H, (Operator, np.ndarray)):

        def fn(t):
            m = _as_matrix(H(t))
            if check and not _is_hermitian(m, 1e-10):
                raise InvalidModelError(f"H(t) is not Hermitian at t={t}")
            return m

        return fn
    m = _as_matrix(H)
    if not _is_hermitian(m, 1e-10):
        raise InvalidModelError("Hamiltonian is not Hermitian")
    return lambda t: m


def integrate_schrodinger(H: HamiltonianLike, psi0, grid: TimeGrid, substeps: int = 1,
                          check_hermitian: bool = True) -> Trajectory:
    """Solve ``i d|psi>/dt = H(t)|psi>`` with RK4 on ``grid``.

    ``H`` is a static :class:`Operator`/array or a callable ``t -> H(t)``.
    The initial ket must be normalised to within 1e-9.
    """
    psi = _as_vector(psi0)
    if abs(np.linalg.norm(psi) - 1) > NORM_TOL:
        raise InvalidStateError("initial state is not normalised")
    hfn = _hamiltonian_fn(H, check_hermitian)
    if hfn(grid.t_start).shape != (psi.size, psi.size):
        raise InvalidModelError("Hamiltonian and state dimensions differ")
    states = rk4(lambda t, y: -1j * (hfn(t) @ y), psi, grid.times, substeps)
    return Trajectory(grid.times, states)


def propagator(H: HamiltonianLike, grid: TimeGrid, check_hermitian: bool = True) -> np.ndarray:
    """Time-ordered propagator ``U(t_end, t_start)`` by RK4 on the identity.

    All basis columns are advanced together; only the final matrix is kept.
    """
    hfn = _hamiltonian_fn(H, check_hermitian)
    dim = hfn(grid.t_start).shape[0]
    ends = np.array([grid.t_start, grid.t_end])
    return rk4(lambda t, y: -1j * (hfn(t) @ y), np.eye(dim, dtype=complex), ends, grid.num_steps)[-1]


def _lindblad_rhs(model: LindbladModel):
    Heff = model.effective_hamiltonian()
    Heff_dag = Heff.conj().T
    Ls = model.scaled_collapse()
    Ls = [(L, L.conj().T) for L in Ls if np.any(L)]

    def rhs(t, rho):
        d = -1j * (Heff @ rho - rho @ Heff_dag)
        for L, Ld in Ls:
            d = d + L @ rho @ Ld
        return d

    return rhs


def integrate_lindblad(model: LindbladModel, rho0, grid: TimeGrid, substeps: int = 1) -> Trajectory:
    """Integrate the Lindblad master equation with RK4.

    No positivity repair is applied; if any stored state has an eigenvalue
    below ``-1e-6`` a :class:`PositivityWarning` is emitted.
    """
    rho = _as_density_matrix(rho0)
    if rho.shape[0] != model.dim:
        raise InvalidModelError("model and state dimensions differ")
    states = rk4(_lindblad_rhs(model), rho, grid.times, substeps)
    herm = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    worst = float(np.min(np.linalg.eigvalsh(herm)[:, 0]))
    if worst < -POSITIVITY_WARN:
        warnings.warn(f"density operator eigenvalue reached {worst:.3g}", PositivityWarning,
                      stacklevel=2)
    return Trajectory(grid.times, states)


def _as_density_matrix(rho0) -> np.ndarray:
    if isinstance(rho0, DensityOperator):
        return np.array(rho0.matrix)
    if isinstance(rho0, StateVector):
        return np.outer(rho0.amplitudes, rho0.amplitudes.conj())
    a = np.asarray(rho0, dtype=complex)
    if a.ndim == 1:
        a = np.outer(a, a.conj())
    return np.array(DensityOperator(a).matrix)


def liouvillian(model: LindbladModel) -> np.ndarray:
    """Superoperator acting on row-major ``vec(rho)`` (``rho.reshape(-1)``)."""
    d = model.dim
    eye = np.eye(d)
    Heff = model.effective_hamiltonian()
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    sup = -1j * (np.kron(Heff, eye) - np.kron(eye, Heff.conj()))
    for L in model.scaled_collapse():
        sup = sup + np.kron(L, L.conj())
    return sup


def steady_state(model: LindbladModel) -> np.ndarray:
    """Null vector of the Liouvillian, normalised to unit trace.

    Raises :class:`InvalidModelError` when the fixed point is not unique.
    """
    d = model.dim
    ns = null_space(liouvillian(model), rcond=1e-10)
    if ns.shape[1] != 1:
        raise InvalidModelError(f"steady state is not unique ({ns.shape[1]} null vectors)")
    rho = ns[:, 0].reshape(d, d)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


# ---------------------------------------------------------------------------
# Quantum-jump unraveling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpRecord:
    """One trajectory's jumps: sorted times and the channel index of each."""

    times: np.ndarray
    channels: np.ndarray

    def __iter__(self):
        return iter(zip(self.times.tolist(), self.channels.tolist()))

    def __len__(self):
        return len(self.times)

    def of_channel(self, k: int) -> np.ndarray:
        return self.times[self.channels == k]


@dataclass(frozen=True)
class JumpEnsemble:
    times: np.ndarray
    mean_populations: np.ndarray
    records: list
    final_states: np.ndarray
    expectations: np.ndarray | None = None


def jump_ensemble(model: LindbladModel, psi0, grid: TimeGrid, seed, n_traj: int | None = None,
                  e_ops=(), refine: int = 16, keep_states: bool = False,
                  initial_sampler=None):
    """Run a batch of quantum-jump trajectories in lock step.

    Uses the waiting-time algorithm: each trajectory propagates its
    unnormalised ket with the exact no-jump propagator ``exp(-i H_eff dt)``
    and jumps when the squared norm falls below a uniform threshold.  Steps
    containing a jump are re-run on a ``refine``-times finer sub-grid so jump
    instants are resolved to ``dt/refine``.

    ``psi0`` is one ket (shared) or an ``(n_traj, d)`` array.  Alternatively
    ``initial_sampler(rng, n)`` returns the ``(n, d)`` initial kets.  All
    randomness comes from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(seed)
    d = model.dim
    if initial_sampler is not None:
        if n_traj is None:
            raise InvalidParameterError("n_traj required with initial_sampler")
        psi = np.array(initial_sampler(rng, n_traj), dtype=complex)
    else:
        p = np.asarray(_as_vector(psi0) if np.ndim(_raw(psi0)) == 1 else _raw(psi0), dtype=complex)
        if p.ndim == 1:
            n_traj = 1 if n_traj is None else n_traj
            psi = np.tile(p, (n_traj, 1))
        else:
            psi = p.copy()
            n_traj = psi.shape[0]
    if psi.shape != (n_traj, d):
        raise InvalidModelError("initial kets do not match model dimension")
    if np.max(np.abs(np.linalg.norm(psi, axis=1) - 1)) > NORM_TOL:
        raise InvalidStateError("initial kets must be normalised")

    times = grid.times
    dt = grid.dt
    Heff = model.effective_hamiltonian()
    P = expm(-1j * Heff * dt).T  # row-vector convention: psi @ P
    Pf = expm(-1j * Heff * (dt / refine)).T
    Ls = np.array(model.scaled_collapse()) if model.channels else np.zeros((0, d, d))
    e_ops = [_as_matrix(e) for e in e_ops]

    thresh = rng.random(n_traj)
    jump_t: list[list[float]] = [[] for _ in range(n_traj)]
    jump_c: list[list[int]] = [[] for _ in range(n_traj)]
    pops = np.empty((len(times), d))
    exps = np.empty((len(times), len(e_ops)), dtype=complex) if e_ops else None
    states = [] if keep_states else None

    def record(k, psi):
        nrm = np.linalg.norm(psi, axis=1, keepdims=True)
        phi = psi / nrm
        pops[k] = np.mean(np.abs(phi) ** 2, axis=0)
        if exps is not None:
            for j, e in enumerate(e_ops):
                exps[k, j] = np.mean(np.einsum("ni,ij,nj->n", phi.conj(), e, phi))
        if states is not None:
            states.append(phi)

    def do_jump(idx, phi, tj):
        # phi: (m, d) unnormalised kets at the jump instant
        if Ls.shape[0] == 0:
            return phi
        cand = np.einsum("kij,mj->mki", Ls, phi)
        w = np.sum(np.abs(cand) ** 2, axis=2)
        tot = w.sum(axis=1)
        r = rng.random(len(idx)) * tot
        ch = np.minimum((np.cumsum(w, axis=1) < r[:, None]).sum(axis=1), Ls.shape[0] - 1)
        new = cand[np.arange(len(idx)), ch]
        new = new / np.linalg.norm(new, axis=1, keepdims=True)
        thresh[idx] = rng.random(len(idx))
        for i, c, t in zip(idx, ch, tj):
            jump_t[i].append(float(t))
            jump_c[i].append(int(c))
        return new

    record(0, psi)
    for k in range(len(times) - 1):
        nxt = psi @ P
        nn = np.sum(np.abs(nxt) ** 2, axis=1)
        hit = np.nonzero(nn < thresh)[0]
        if hit.size:
            sub = psi[hit]
            t = times[k]
            h = dt / refine
            for s in range(refine):
                n_prev = np.sum(np.abs(sub) ** 2, axis=1)
                sub = sub @ Pf
                n_now = np.sum(np.abs(sub) ** 2, axis=1)
                th = thresh[hit]
                j = np.nonzero(n_now < th)[0]
                if j.size:
                    # log-linear interpolation of the crossing inside the substep
                    frac = np.log(n_prev[j] / th[j]) / np.log(n_prev[j] / n_now[j])
                    tj = t + s * h + h * np.clip(frac, 0.0, 1.0)
                    sub[j] = do_jump(hit[j], sub[j], tj)
            nxt[hit] = sub
        psi = nxt
        record(k + 1, psi)

    records = [JumpRecord(np.array(jt, dtype=float), np.array(jc, dtype=int))
               for jt, jc in zip(jump_t, jump_c)]
    final = psi / np.linalg.norm(psi, axis=1, keepdims=True)
    ens = JumpEnsemble(times, pops, records, final, exps)
    if keep_states:
        return ens, np.stack(states, axis=1)
    return ens


def quantum_jump_trajectory(model: LindbladModel, psi0, grid: TimeGrid, seed: int):
    """Single quantum-jump trajectory.

    Returns ``(trajectory, jumps)`` where ``trajectory`` holds the normalised
    ket at each grid time and ``jumps`` is a list of ``(time, channel_index)``.
    """
    ens, states = jump_ensemble(model, psi0, grid, seed, n_traj=1, keep_states=True)
    return Trajectory(grid.times, states[0]), list(ens.records[0])
