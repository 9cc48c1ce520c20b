"""Time evolution of the coupled Schrodinger-KdV system on the periodic box.

    i u_t + u_xx = alpha v u + beta |u|^2 u
    v_t + v v_x + v_xxx = gamma (|u|^2)_x

In Fourier space the stiff parts are diagonal: ``u_hat' = -i xi^2 u_hat + ...``
and ``v_hat' = i xi^3 v_hat + ...``.  Both are integrated exactly by ETDRK4
(Cox-Matthews, with the contour-mean evaluation of Kassam-Trefethen).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BlowUpError, ConfigurationError
from .spectral import ComplexField, RealField, SpectralGrid

# Recorded in run manifests.
SIGN_CONVENTIONS = {
    "schrodinger_propagator": "u_hat(k) -> exp(-i xi_k^2 t) u_hat(k)  (solves i u_t + u_xx = 0)",
    "airy_propagator": "v_hat(k) -> exp(+i xi_k^3 t) v_hat(k)  (solves v_t + v_xxx = 0)",
    "fourier_convention": "f(x) = sum_k f_hat(k) exp(i xi_k x), xi_k = 2 pi k / L",
}

CONTOUR_POINTS = 32


@dataclass(frozen=True)
class PhysParams:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite", field=name)


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    dealias: bool = True
    blowup_threshold: float = 1e8
    nonlinear: bool = True  # False integrates the free flows only

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive", field="dt")
        if not self.blowup_threshold > 0:
            raise ConfigurationError("blowup_threshold must be positive", field="blowup_threshold")


@dataclass(frozen=True)
class State:
    t: float
    u: ComplexField
    v: RealField

    def __post_init__(self):
        if not isinstance(self.v, RealField):
            raise ConfigurationError("v must be a RealField", field="v")
        if not isinstance(self.u, ComplexField):
            object.__setattr__(self, "u", ComplexField(self.u.grid, self.u.values))
        if self.u.grid != self.v.grid:
            raise ConfigurationError("u and v must share one grid", field="grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: SpectralGrid, u, v, t: float = 0.0) -> "State":
        return cls(t, ComplexField(grid, u), RealField(grid, v))

    @classmethod
    def zeros(cls, grid: SpectralGrid, t: float = 0.0) -> "State":
        return cls(t, ComplexField.zeros(grid), RealField.zeros(grid))


# ---------------------------------------------------------------------------
# array-level kernels (storage-order spectral coefficients, convention / n)


def linear_symbols(grid: SpectralGrid):
    """Generators of the free flows; ``i xi^3`` is odd so the ``k = -n/2``
    entry is zero (the unpaired mode is left untouched)."""
    xi = grid.wavenumbers
    lu = -1j * xi**2
    lv = 1j * xi**3
    lv[grid.nyquist_index] = 0.0
    return lu, lv


def _odd_derivative(grid: SpectralGrid) -> np.ndarray:
    ik = 1j * grid.wavenumbers
    ik[grid.nyquist_index] = 0.0
    return ik


def _phys(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifft(coeffs) * coeffs.shape[0]


def _spec(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values) / values.shape[0]


class _Kernel:
    """Per-grid nonlinear operator in spectral space."""

    def __init__(self, grid: SpectralGrid, p: PhysParams, dealias: bool, active: bool = True):
        self.grid = grid
        self.p = p
        self.active = active
        self.ik = _odd_derivative(grid)
        if dealias:
            self.mask = grid.dealias_mask.astype(float)
        else:
            self.mask = np.ones(grid.n)
            self.mask[grid.nyquist_index] = 0.0

    def __call__(self, uh: np.ndarray, vh: np.ndarray):
        p = self.p
        if not self.active:
            return np.zeros_like(uh), np.zeros_like(vh)
        u = _phys(uh)
        v = _phys(vh).real
        abs2 = (u * u.conj()).real
        nu = np.zeros_like(uh)
        if p.alpha or p.beta:
            nu = -1j * self.mask * _spec(p.alpha * v * u + p.beta * abs2 * u)
        nv = self.mask * self.ik * _spec(-0.5 * v * v + p.gamma * abs2)
        return nu, nv


def _phi_coefficients(lam: np.ndarray, h: float):
    """ETDRK4 weights via the mean over a radius-1 circle around each ``lam*h``."""
    r = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
    z = lam[:, None] * h + r[None, :]
    ez = np.exp(z)
    ez2 = np.exp(z / 2)
    q = h * np.mean((ez2 - 1) / z, axis=1)
    f1 = h * np.mean((-4 - z + ez * (4 - 3 * z + z * z)) / z**3, axis=1)
    f2 = h * np.mean((2 + z + ez * (z - 2)) / z**3, axis=1)
    f3 = h * np.mean((-4 - 3 * z - z * z + ez * (4 - z)) / z**3, axis=1)
    return np.exp(lam * h), np.exp(lam * h / 2), q, f1, f2, f3


class _ETDRK4:
    def __init__(self, grid: SpectralGrid, h: float):
        lu, lv = linear_symbols(grid)
        self.h = h
        self.cu = _phi_coefficients(lu, h)
        self.cv = _phi_coefficients(lv, h)

    def step(self, kernel: _Kernel, uh, vh):
        Eu, E2u, Qu, f1u, f2u, f3u = self.cu
        Ev, E2v, Qv, f1v, f2v, f3v = self.cv
        nu, nv = kernel(uh, vh)
        au, av = E2u * uh + Qu * nu, E2v * vh + Qv * nv
        nau, nav = kernel(au, av)
        bu, bv = E2u * uh + Qu * nau, E2v * vh + Qv * nav
        nbu, nbv = kernel(bu, bv)
        cu, cv = E2u * au + Qu * (2 * nbu - nu), E2v * av + Qv * (2 * nbv - nv)
        ncu, ncv = kernel(cu, cv)
        uh = Eu * uh + f1u * nu + 2 * f2u * (nau + nbu) + f3u * ncu
        vh = Ev * vh + f1v * nv + 2 * f2v * (nav + nbv) + f3v * ncv
        return uh, vh


_SCHEMES: dict = {}


def _scheme(grid: SpectralGrid, h: float) -> _ETDRK4:
    key = (grid, float(h))
    s = _SCHEMES.get(key)
    if s is None:
        if len(_SCHEMES) > 64:
            _SCHEMES.clear()
        s = _SCHEMES[key] = _ETDRK4(grid, h)
    return s


def _norms(grid: SpectralGrid, uh, vh):
    L = grid.box_length
    w = 1.0 + grid.wavenumbers**2
    pu, pv = np.abs(uh) ** 2, np.abs(vh) ** 2
    l2 = math.sqrt(L * (pu.sum() + pv.sum()))
    h1 = math.sqrt(L * ((w * pu).sum() + (w * pv).sum()))
    return l2, h1


def _check_blowup(t, grid, uh, vh, threshold):
    l2, h1 = _norms(grid, uh, vh)
    if not math.isfinite(l2) or l2 > threshold:
        raise BlowUpError(t, "L2", l2)
    if not math.isfinite(h1) or h1 > threshold:
        raise BlowUpError(t, "H1", h1)


# ---------------------------------------------------------------------------
# public operations


def nonlinear_rhs(state: State, p: PhysParams, dealias: bool = True):
    """Non-dispersive part of the right-hand side, ``(du, dv)``."""
    kernel = _Kernel(state.grid, p, dealias)
    nu, nv = kernel(state.u.coeffs, state.v.coeffs)
    return ComplexField.from_coeffs(state.grid, nu), RealField.from_coeffs(state.grid, nv)


def free_schrodinger(u: ComplexField, t: float) -> ComplexField:
    lu, _ = linear_symbols(u.grid)
    return ComplexField.from_coeffs(u.grid, u.coeffs * np.exp(lu * t))


def free_airy(v: RealField, t: float) -> RealField:
    _, lv = linear_symbols(v.grid)
    return RealField.from_coeffs(v.grid, v.coeffs * np.exp(lv * t))


def step(state: State, p: PhysParams, cfg: StepperConfig) -> State:
    """Advance one ETDRK4 step of size ``cfg.dt``."""
    grid = state.grid
    uh, vh = _scheme(grid, cfg.dt).step(
        _Kernel(grid, p, cfg.dealias, cfg.nonlinear), state.u.coeffs, state.v.coeffs
    )
    t = state.t + cfg.dt
    _check_blowup(t, grid, uh, vh, cfg.blowup_threshold)
    return State(t, ComplexField.from_coeffs(grid, uh), RealField.from_coeffs(grid, vh))


@dataclass
class Trajectory:
    """Samples recorded by :func:`simulate`."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    observations: dict = field(default_factory=dict)
    final: State | None = None
    steps: int = 0
    max_imag_v: float = 0.0

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.observations[name])


Observer = Callable[[State], object]


def _named_observers(observers) -> dict:
    if observers is None:
        return {}
    if isinstance(observers, Mapping):
        return dict(observers)
    return {getattr(f, "__name__", f"obs{i}"): f for i, f in enumerate(observers)}


def step_schedule(t0: float, t_end: float, dt: float):
    """Number of full steps and the final partial step (0 if none)."""
    span = t_end - t0
    nfull = int(math.floor(span / dt * (1 + 1e-12)))
    rest = span - nfull * dt
    if rest <= 1e-9 * dt:
        rest = 0.0
    return nfull, rest


def simulate(
    initial: State,
    p: PhysParams,
    cfg: StepperConfig,
    t_end: float,
    observers: Sequence[Observer] | Mapping[str, Observer] | None = None,
    stride: int = 1,
    keep_states: bool = True,
) -> Trajectory:
    """Integrate from ``initial`` to exactly ``t_end``.

    Observers are evaluated on the initial state, every ``stride`` steps and
    on the final state.
    """
    if not math.isfinite(t_end):
        raise ConfigurationError("t_end must be finite", field="t_end")
    if t_end < initial.t:
        raise ConfigurationError("t_end must not precede the initial time", field="t_end")
    if stride < 1:
        raise ConfigurationError("stride must be >= 1", field="stride")
    obs = _named_observers(observers)
    traj = Trajectory(observations={k: [] for k in obs})
    if t_end == initial.t:
        traj.final = initial
        return traj

    grid = initial.grid
    kernel = _Kernel(grid, p, cfg.dealias, cfg.nonlinear)
    nfull, rest = step_schedule(initial.t, t_end, cfg.dt)
    schedule = [cfg.dt] * nfull + ([rest] if rest else [])
    t0 = initial.t

    def record(state):
        traj.times.append(state.t)
        if keep_states:
            traj.states.append(state)
        for name, fn in obs.items():
            traj.observations[name].append(fn(state))

    record(initial)
    uh, vh = initial.u.coeffs, initial.v.coeffs
    state = initial
    for i, h in enumerate(schedule, start=1):
        uh, vh = _scheme(grid, h).step(kernel, uh, vh)
        t = t_end if i == len(schedule) else t0 + i * cfg.dt
        _check_blowup(t, grid, uh, vh, cfg.blowup_threshold)
        last = i == len(schedule)
        if last or i % stride == 0:
            v_phys = _phys(vh)
            traj.max_imag_v = max(traj.max_imag_v, float(np.max(np.abs(v_phys.imag))))
            state = State(t, ComplexField.from_coeffs(grid, uh), RealField(grid, v_phys.real))
            record(state)
    traj.steps = len(schedule)
    traj.final = state
    return traj
