"""Conserved quantities, modified functionals and their rates of change.

All integrals use the rectangle rule ``dx * sum`` on the periodic grid, which
is consistent with the Parseval convention of :mod:`schkdv.spectral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhysParams, State
from .spectral import Field, IParams, SpectralGrid, i_multiplier

# ---------------------------------------------------------------------------
# array helpers


def _phys(c):
    return np.fft.ifft(c) * c.shape[0]


def _spec(f):
    return np.fft.fft(f) / f.shape[0]


class _Fields:
    """Physical-space arrays and spectral tools for one state."""

    def __init__(self, grid: SpectralGrid, uh: np.ndarray, vh: np.ndarray):
        self.grid = grid
        self.dx = grid.dx
        ik = 1j * grid.wavenumbers
        ik[grid.nyquist_index] = 0.0
        self.ik = ik
        self.mask = grid.dealias_mask
        self.uh, self.vh = uh, vh
        self.u = _phys(uh)
        self.v = _phys(vh).real
        self.ux = _phys(ik * uh)
        self.vx = _phys(ik * vh).real

    def integral(self, f):
        return self.dx * np.sum(f)

    def dxr(self, f):
        """Spectral derivative of a real array."""
        return _phys(self.ik * _spec(f)).real

    def dxc(self, f):
        return _phys(self.ik * _spec(f))

    def project(self, f, real=False):
        """Dealiased product: drop the top third of its spectrum."""
        out = _phys(self.mask * _spec(f))
        return out.real if real else out


def _norm2(grid: SpectralGrid, coeffs, weight=None) -> float:
    p = np.abs(coeffs) ** 2
    if weight is not None:
        p = p * weight
    return grid.box_length * float(np.sum(p))


# ---------------------------------------------------------------------------
# conserved quantities


def mass(u: Field) -> float:
    return math.sqrt(_norm2(u.grid, u.coeffs))


def sobolev_norm(f: Field, s: float) -> float:
    w = (1.0 + f.grid.wavenumbers**2) ** s
    return math.sqrt(_norm2(f.grid, f.coeffs, w))


def _l_from(F: _Fields, p: PhysParams) -> float:
    l2v = F.integral(F.v * F.v)
    mom = F.integral((F.u * np.conj(F.ux)).imag)
    return p.alpha * l2v + 2 * p.gamma * mom


def _e_from(F: _Fields, p: PhysParams) -> float:
    a, b, g = p.alpha, p.beta, p.gamma
    abs2 = (F.u * np.conj(F.u)).real
    return (
        a * g * F.integral(F.v * abs2)
        + g * F.integral(np.abs(F.ux) ** 2)
        + 0.5 * a * F.integral(F.vx * F.vx)
        - a / 6 * F.integral(F.v**3)
        + 0.5 * b * g * F.integral(abs2 * abs2)
    )


def _check_grids(u: Field, v: Field):
    if u.grid != v.grid:
        from .errors import ConfigurationError

        raise ConfigurationError("u and v must share one grid", field="grid")


def l_functional(u: Field, v: Field, p: PhysParams) -> float:
    """``alpha ||v||^2 + 2 gamma int Im(u conj(u_x)) dx``."""
    _check_grids(u, v)
    return _l_from(_Fields(u.grid, u.coeffs, v.coeffs), p)


def energy(u: Field, v: Field, p: PhysParams) -> float:
    _check_grids(u, v)
    return _e_from(_Fields(u.grid, u.coeffs, v.coeffs), p)


def _i_symbol(grid: SpectralGrid, ip: IParams) -> np.ndarray:
    return i_multiplier(grid.wavenumbers, ip)


def modified_l(u: Field, v: Field, p: PhysParams, ip: IParams) -> float:
    _check_grids(u, v)
    m = _i_symbol(u.grid, ip)
    return _l_from(_Fields(u.grid, m * u.coeffs, m * v.coeffs), p)


def modified_e(u: Field, v: Field, p: PhysParams, ip: IParams) -> float:
    _check_grids(u, v)
    m = _i_symbol(u.grid, ip)
    return _e_from(_Fields(u.grid, m * u.coeffs, m * v.coeffs), p)


@dataclass(frozen=True)
class FunctionalReport:
    t: float
    M: float
    L: float
    E: float
    Hs_u: float
    Hs_v: float
    H1_u: float
    H1_v: float


def functional_report(state: State, p: PhysParams, s: float = 1.0) -> FunctionalReport:
    F = _Fields(state.grid, state.u.coeffs, state.v.coeffs)
    return FunctionalReport(
        t=state.t,
        M=mass(state.u),
        L=_l_from(F, p),
        E=_e_from(F, p),
        Hs_u=sobolev_norm(state.u, s),
        Hs_v=sobolev_norm(state.v, s),
        H1_u=sobolev_norm(state.u, 1.0),
        H1_v=sobolev_norm(state.v, 1.0),
    )


# ---------------------------------------------------------------------------
# rate expansions


@dataclass(frozen=True)
class RateReport:
    t: float
    e_terms: tuple
    e_sum: float
    l_terms: tuple
    l_sum: float


class _Commutators:
    """I-images and dealiased commutators ``I P(fg) - P(If Ig)``."""

    def __init__(self, state: State, ip: IParams):
        grid = state.grid
        m = _i_symbol(grid, ip)
        self.raw = _Fields(grid, state.u.coeffs, state.v.coeffs)
        self.I = F = _Fields(grid, m * state.u.coeffs, m * state.v.coeffs)
        R = self.raw
        mask = grid.dealias_mask

        def icomm(raw_prod, img_prod, real):
            a = _phys(m * mask * _spec(raw_prod))
            b = _phys(mask * _spec(img_prod))
            d = a - b
            return d.real if real else d

        self.U, self.V = F.u, F.v
        self.Ux, self.Vx = F.ux, F.vx
        self.Vxx = F.dxr(F.vx)
        self.absU2 = (F.u * np.conj(F.u)).real
        # C1 = I(v v_x) - Iv Iv_x,  C2 = I(|u|^2) - |Iu|^2
        self.C1 = icomm(R.v * R.vx, F.v * F.vx, real=True)
        self.C2 = icomm((R.u * np.conj(R.u)).real, self.absU2, real=True)
        # D1 = I(uv) - Iu Iv,  D2 = I(|u|^2 u) - |Iu|^2 Iu
        self.D1 = icomm(R.u * R.v, F.u * F.v, real=False)
        self.D2 = icomm((R.u * np.conj(R.u)).real * R.u, self.absU2 * F.u, real=False)


def energy_rate_terms(state: State, p: PhysParams, ip: IParams, literal: bool = False) -> tuple:
    """Twelve integrals whose sum is ``d/dt E(Iu, Iv)``.

    Grouping follows the bracket structure 2+1+4+1+1+1+2.  ``literal=True``
    reproduces the printed signs of the fifth and ninth terms, which do not
    match ``d/dt E(Iu, Iv)``; it exists only for comparison.
    """
    a, b, g = p.alpha, p.beta, p.gamma
    c = _Commutators(state, ip)
    F = c.I
    U, V, Ux, Vx, Vxx = c.U, c.V, c.Ux, c.Vx, c.Vxx
    Ubar, Uxbar = np.conj(U), np.conj(Ux)
    C2x = F.dxr(c.C2)
    s5 = -1.0 if literal else 1.0
    s9 = -1.0 if literal else 1.0
    terms = (
        a * F.integral(c.C1 * Vxx),
        0.5 * a * F.integral(V * V * c.C1),
        2 * b * g * F.integral(F.dxc(c.D2) * Uxbar).imag,
        -a * g * F.integral(c.absU2 * c.C1),
        s5 * a * g * F.integral(c.C2 * V * Vx),
        -a * g * F.integral(Vxx * C2x),
        2 * a * g * F.integral(Uxbar * F.dxc(c.D1)).imag,
        a * g * g * F.integral(C2x * c.absU2),
        s9 * 2 * a * a * g * F.integral(V * Ubar * c.D1).imag,
        2 * b * b * g * F.integral(c.absU2 * Ubar * c.D2).imag,
        2 * a * b * g * F.integral(V * Ubar * c.D2).imag,
        2 * a * b * g * F.integral(c.absU2 * Ubar * c.D1).imag,
    )
    return tuple(float(x) for x in terms)


def l_rate_terms(state: State, p: PhysParams, ip: IParams, literal: bool = False) -> tuple:
    """Four integrals whose sum is ``d/dt L(Iu, Iv)``.

    ``literal=True`` uses the printed coefficient ``2 beta gamma`` on the last
    term instead of ``4 beta gamma``.
    """
    a, b, g = p.alpha, p.beta, p.gamma
    c = _Commutators(state, ip)
    F = c.I
    Uxbar = np.conj(c.Ux)
    k4 = 2.0 if literal else 4.0
    terms = (
        -2 * a * F.integral(c.V * c.C1),
        2 * a * g * F.integral(c.V * F.dxr(c.C2)),
        -4 * a * g * F.integral(Uxbar * c.D1).real,
        -k4 * b * g * F.integral(Uxbar * c.D2).real,
    )
    return tuple(float(x) for x in terms)


def rate_report(state: State, p: PhysParams, ip: IParams, literal: bool = False) -> RateReport:
    e = energy_rate_terms(state, p, ip, literal)
    l_ = l_rate_terms(state, p, ip, literal)
    return RateReport(state.t, e, float(sum(e)), l_, float(sum(l_)))


# ---------------------------------------------------------------------------
# a-priori inequalities


@dataclass
class InequalityRecord:
    tag: str
    lhs: float
    rhs: float
    ratio: float | None
    asserted: bool
    flag: str | None = None


@dataclass
class AprioriReport:
    decaying: bool
    records: list = field(default_factory=list)
    omitted: str | None = None

    def get(self, tag: str) -> InequalityRecord:
        for r in self.records:
            if r.tag == tag:
                return r
        raise KeyError(tag)


DEGENERATE = "rhs degenerate - inequality only claimed for decaying fields"
NOT_DECAYING = "input not decaying at the box edge; line inequality may fail on the torus"


def is_decaying(f: Field, tol: float = 1e-10, fraction: float = 0.10) -> bool:
    """True when ``|f| < tol`` on the outer ``fraction`` of the box (both edges)."""
    x, L = f.grid.x, f.grid.box_length
    edge = (x < 0.5 * fraction * L) | (x >= (1 - 0.5 * fraction) * L)
    return bool(np.all(np.abs(f.values[edge]) < tol))


def _record(tag, lhs, rhs, asserted, decaying):
    flag = None
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = None
        if lhs > 0 or not decaying:
            flag = DEGENERATE
    if flag is None and asserted and not decaying:
        flag = NOT_DECAYING
    return InequalityRecord(tag, float(lhs), float(rhs), ratio, asserted, flag)


def apriori_report(u: Field, v: Field, p: PhysParams) -> AprioriReport:
    """Gagliardo-Nirenberg checks (constant 1) and the raw ratio chain of the
    global H^1 bound.  The chain constants are unspecified, so those entries
    are reported with ``asserted=False``."""
    _check_grids(u, v)
    F = _Fields(u.grid, u.coeffs, v.coeffs)
    decaying = is_decaying(u) and is_decaying(v)
    M = mass(u)
    nv = math.sqrt(F.integral(F.v * F.v))
    nux = math.sqrt(F.integral(np.abs(F.ux) ** 2))
    nvx = math.sqrt(F.integral(F.vx * F.vx))
    abs2 = np.abs(F.u) ** 2
    rep = AprioriReport(decaying=decaying)
    rec = rep.records
    rec.append(_record("gn_u4", F.integral(abs2 * abs2), M**3 * nux, True, decaying))
    rec.append(_record("gn_v3", F.integral(np.abs(F.v) ** 3), nv**2.5 * nvx**0.5, True, decaying))
    rec.append(_record("gn_uinf", float(np.max(abs2)), M * nux, True, decaying))
    rec.append(_record("gn_vu2", F.integral(np.abs(F.v) * abs2), nv * M**1.5 * nux**0.5, True, decaying))

    if not p.alpha * p.gamma > 0:
        rep.omitted = "alpha*gamma <= 0: E/L bounds require alpha*gamma > 0"
        return rep
    L = abs(_l_from(F, p))
    E = abs(_e_from(F, p))
    h1 = M**2 + nux**2 + nv**2 + nvx**2
    chain = [
        ("l_by_v_mass", L, nv**2 + M * nux),
        ("v_by_l_mass", nv**2, L + M * nux),
        ("h1_by_energy", nux**2 + nvx**2, E + L ** (5 / 3) + M**8 + 1),
        ("energy_by_h1", E, nux**2 + nvx**2 + L ** (5 / 3) + M**8 + 1),
        ("energy_by_h1_v", E, nux**2 + nvx**2 + nv ** (10 / 3) + M**10 + 1),
        ("v_by_energy", nv**2, L + M * math.sqrt(E) + M**6 + 1),
        ("h1_total", h1, E + L ** (5 / 3) + M**8 + 1),
    ]
    for tag, lhs, rhs in chain:
        rec.append(_record(tag, lhs, rhs, False, decaying))
    return rep
