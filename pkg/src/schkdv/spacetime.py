"""Discrete X^{s,b} / Y^{s,b} norms on a space-time torus and a ratio
harness for the bilinear and trilinear estimates.

Space-time coefficients follow ``f(x,t) = sum f_hat(xi,tau) e^{i(xi x + tau t)}``
with Parseval factor ``L * T``.  In this convention free Schrodinger waves sit
on ``tau = -xi^2`` and free Airy waves on ``tau = xi^3``; the modulation
weights measure the distance to those surfaces, ``<tau + xi^2>`` and
``<tau - xi^3>``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractError
from .spectral import SpectralGrid, bilinear_diff_coeffs

DISPERSIONS = ("schrodinger", "airy", "none")
GATE_TOL = 1e-12


@dataclass(frozen=True)
class SpaceTimeGrid:
    space: SpectralGrid
    n_t: int
    t_length: float

    def __post_init__(self):
        if self.n_t % 2 or self.n_t < 8:
            raise ConfigurationError("n_t must be even and >= 8", field="n_t")
        if not self.t_length > 0:
            raise ConfigurationError("t_length must be positive", field="t_length")

    @property
    def shape(self):
        return (self.space.n, self.n_t)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Modulation-variable frequencies ``tau_j = 2 pi j / T`` (storage order)."""
        return 2 * np.pi * np.fft.fftfreq(self.n_t, d=1.0 / self.n_t) / self.t_length

    @property
    def cell(self) -> float:
        return self.space.dx * self.t_length / self.n_t

    @property
    def volume(self) -> float:
        return self.space.box_length * self.t_length


def make_spacetime_grid(n: int, box_length: float, n_t: int, t_length: float) -> SpaceTimeGrid:
    return SpaceTimeGrid(SpectralGrid(n, box_length), n_t, t_length)


def surface(tag: str, xi):
    """Free-wave frequency ``tau(xi)`` for a dispersion tag."""
    if tag == "schrodinger":
        return -np.asarray(xi) ** 2
    if tag == "airy":
        return np.asarray(xi) ** 3
    if tag == "none":
        return np.zeros_like(np.asarray(xi, dtype=float))
    raise ConfigurationError(f"unknown dispersion tag {tag!r}", field="dispersion")


class SpaceTimeField:
    def __init__(self, grid: SpaceTimeGrid, values, dispersion: str = "none"):
        if dispersion not in DISPERSIONS:
            raise ConfigurationError(f"unknown dispersion tag {dispersion!r}", field="dispersion")
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise ConfigurationError(f"expected shape {grid.shape}, got {values.shape}", field="values")
        self.grid = grid
        self.values = values
        self.dispersion = dispersion
        self._coeffs = None

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            n, nt = self.grid.shape
            self._coeffs = np.fft.fft2(self.values) / (n * nt)
        return self._coeffs

    @classmethod
    def from_coeffs(cls, grid: SpaceTimeGrid, coeffs, dispersion="none"):
        n, nt = grid.shape
        f = cls(grid, np.fft.ifft2(coeffs) * (n * nt), dispersion)
        f._coeffs = np.asarray(coeffs, dtype=np.complex128)
        return f

    def retag(self, dispersion: str) -> "SpaceTimeField":
        f = SpaceTimeField(self.grid, self.values, dispersion)
        f._coeffs = self._coeffs
        return f

    def conj(self) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, np.conj(self.values), self.dispersion)

    def __mul__(self, c):
        if isinstance(c, SpaceTimeField):
            return NotImplemented
        return SpaceTimeField(self.grid, self.values * c, self.dispersion)

    __rmul__ = __mul__


@dataclass(frozen=True)
class XsbParams:
    s: float
    b: float
    epsilon: float = 0.01

    def __post_init__(self):
        if not (0 < self.epsilon <= 0.1):
            raise ConfigurationError("epsilon must lie in (0, 0.1]", field="epsilon")


def _bracket(x):
    return np.sqrt(1.0 + x * x)


def weighted_norm(f: SpaceTimeField, s: float, b: float, tag: str) -> float:
    """``|| <xi>^s <tau - tau_tag(xi)>^b f_hat ||`` with Parseval factor ``L T``."""
    g = f.grid
    xi = g.space.wavenumbers[:, None]
    tau = g.frequencies[None, :]
    w = _bracket(xi) ** (2 * s) * _bracket(tau - surface(tag, xi)) ** (2 * b)
    return math.sqrt(g.volume * float(np.sum(w * np.abs(f.coeffs) ** 2)))


def xsb_norm(f: SpaceTimeField, p: XsbParams) -> float:
    if f.dispersion != "schrodinger":
        raise ContractError(f"X^(s,b) norm needs a schrodinger-tagged field, got {f.dispersion!r}")
    return weighted_norm(f, p.s, p.b, "schrodinger")


def ysb_norm(f: SpaceTimeField, p: XsbParams) -> float:
    if f.dispersion != "airy":
        raise ContractError(f"Y^(s,b) norm needs an airy-tagged field, got {f.dispersion!r}")
    return weighted_norm(f, p.s, p.b, "airy")


def l2_norm(f: SpaceTimeField) -> float:
    return math.sqrt(f.grid.cell * float(np.sum(np.abs(f.values) ** 2)))


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """Random fields on the lattice of a fixed box ``L x T``.

    Coefficients are i.i.d. complex normals on lattice points with
    ``xi_min <= |xi| <= xi_max`` and ``|tau - tau_tag(xi)| <= modulation_width``,
    damped by ``<tau - tau_tag(xi)>^(-concentration)``.  Draws are keyed on
    lattice points, so the same sample appears at every resolution.
    """

    dispersion: str
    xi_min: float
    xi_max: float
    modulation_width: float
    concentration: float = 1.0
    sign: str = "both"
    real: bool | None = None  # default: real for airy, complex for schrodinger
    count: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.dispersion not in ("schrodinger", "airy"):
            raise ConfigurationError("ensembles need a schrodinger or airy tag", field="dispersion")
        if self.concentration < 0:
            raise ConfigurationError("concentration must be >= 0", field="concentration")
        if self.sign not in ("both", "positive", "negative"):
            raise ConfigurationError("sign must be both, positive or negative", field="sign")
        if self.count < 0:
            raise ConfigurationError("count must be >= 0", field="count")
        if self.real is None:
            object.__setattr__(self, "real", self.dispersion == "airy")


def _lattice(spec: EnsembleSpec, box_length: float, t_length: float):
    dxi = 2 * np.pi / box_length
    dtau = 2 * np.pi / t_length
    kmax = int(math.floor(spec.xi_max / dxi + 1e-9))
    ks = np.arange(-kmax, kmax + 1)
    xi = ks * dxi
    keep = (np.abs(xi) >= spec.xi_min - 1e-12) & (np.abs(xi) <= spec.xi_max + 1e-12)
    if spec.sign == "positive":
        keep &= xi > 0
    elif spec.sign == "negative":
        keep &= xi < 0
    pts = []
    for k in ks[keep]:
        centre = float(surface(spec.dispersion, k * dxi)) / dtau
        lo = int(math.ceil(centre - spec.modulation_width / dtau - 1e-9))
        hi = int(math.floor(centre + spec.modulation_width / dtau + 1e-9))
        for j in range(lo, hi + 1):
            pts.append((int(k), j))
    return np.array(pts, dtype=np.int64).reshape(-1, 2)


def random_ensemble(grid: SpaceTimeGrid, spec: EnsembleSpec, stream: int = 0) -> list:
    """Deterministic list of ``spec.count`` fields; ``stream`` separates
    independent inputs drawn from the same spec."""
    if spec.count == 0:
        return []
    L, T = grid.space.box_length, grid.t_length
    pts = _lattice(spec, L, T)
    if len(pts) == 0:
        raise ConfigurationError("ensemble band contains no lattice points", field="band")
    n, nt = grid.shape
    if np.any(np.abs(pts[:, 0]) >= n // 2) or np.any(np.abs(pts[:, 1]) >= nt // 2):
        raise ConfigurationError(
            f"ensemble band is not resolved on a {n}x{nt} grid", field="band"
        )
    xi = pts[:, 0] * 2 * np.pi / L
    tau = pts[:, 1] * 2 * np.pi / T
    damp = _bracket(tau - surface(spec.dispersion, xi)) ** (-spec.concentration)
    rows, cols = pts[:, 0] % n, pts[:, 1] % nt
    out = []
    for i in range(spec.count):
        rng = np.random.default_rng([spec.seed, stream, i])
        z = rng.standard_normal(len(pts)) + 1j * rng.standard_normal(len(pts))
        c = np.zeros((n, nt), dtype=np.complex128)
        c[rows, cols] = z * damp
        if spec.real:
            mirror = np.conj(c[(-np.arange(n)) % n][:, (-np.arange(nt)) % nt])
            c = 0.5 * (c + mirror)
        f = SpaceTimeField.from_coeffs(grid, c, spec.dispersion)
        if spec.real:
            f = SpaceTimeField(grid, f.values.real, spec.dispersion)
        out.append(f)
    return out


def support_radius(f: SpaceTimeField, tol: float = 1e-20):
    """``(min |xi|, max |xi|)`` over spatial modes carrying energy above
    ``tol`` relative to the strongest mode (round-off is ignored)."""
    p = np.sum(np.abs(f.coeffs) ** 2, axis=1)
    live = p > tol * max(p.max(), 1e-300)
    if not live.any():
        return (math.inf, 0.0)
    a = np.abs(f.grid.space.wavenumbers[live])
    return (float(a.min()), float(a.max()))


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class EstimateParams:
    """Exponents for the catalog.  ``None`` means: use the entry default."""

    s: float | None = None
    b: float | None = None
    bprime: float | None = None
    epsilon: float = 0.01
    gamma1: float | None = None
    gamma2: float | None = None
    separation: float = 2.0
    dominance: float = 16.0
    conj: tuple = (False, False)

    def __post_init__(self):
        if not (0 < self.epsilon <= 0.1):
            raise ConfigurationError("epsilon must lie in (0, 0.1]", field="epsilon")


def _xcoef(f, mult):
    return SpaceTimeField.from_coeffs(f.grid, f.coeffs * mult, f.dispersion)


def _dx(f):
    xi = f.grid.space.wavenumbers.copy()
    xi[f.grid.space.nyquist_index] = 0.0
    return _xcoef(f, 1j * xi[:, None])


def _dpow(f, a):
    xi = np.abs(f.grid.space.wavenumbers)
    w = np.where(xi > 0, xi**a if a else 1.0, 0.0)
    return _xcoef(f, w[:, None])


def _prod(*fs, tag="none"):
    vals = fs[0].values
    for f in fs[1:]:
        vals = vals * f.values
    return SpaceTimeField(fs[0].grid, vals, tag)


def _maybe_conj(f, flag):
    return f.conj() if flag else f


def diff_multiplier(f: SpaceTimeField, g: SpaceTimeField, a: float) -> SpaceTimeField:
    """Space-time ``I_-^a``: the spatial weight ``|xi1 - xi2|^a`` does not
    involve ``tau``, so the double sum is taken at each time sample."""
    n = f.grid.space.n
    fh = np.fft.fft(f.values, axis=0) / n
    gh = np.fft.fft(g.values, axis=0) / n
    hh = bilinear_diff_coeffs(fh, gh, f.grid.space.box_length, a)
    return SpaceTimeField(f.grid, np.fft.ifft(hh, axis=0) * n, "none")


class GateError(ConfigurationError):
    pass


def _require(cond: bool, entry: str, hypothesis: str, detail: str):
    if not cond:
        raise GateError(f"{entry} requires {hypothesis}; {detail}", field=entry)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    statement: str
    inputs: tuple
    ensembles: tuple
    resolved: Callable
    check: Callable
    lhs: Callable
    rhs: Callable
    geometry: tuple
    variants: tuple = ((False, False),)
    support_gate: Callable | None = None


def _b(p, eps):
    return 0.5 + eps if p.b is None else p.b


def _half_plus(p: EstimateParams):
    return 0.5 + p.epsilon


def _resolve(p: EstimateParams, **defaults) -> EstimateParams:
    upd = {k: v for k, v in defaults.items() if getattr(p, k) is None}
    return replace(p, **upd)


# -- gates


def _check_L11(p):
    lim = max(0.25 - p.s / 3, 0.0)
    _require(p.s >= 0, "L11", "s ≥ 0", f"got s={p.s}")
    _require(p.b > 0.5, "L11", "b > 1/2", f"got b={p.b}")
    _require(p.bprime >= lim - GATE_TOL, "L11", "b' ≥ max(1/4 − s/3, 0)",
             f"got b'={p.bprime}, s={p.s}")


def _check_L12(p):
    lim = max(1 / 6, 0.5 - p.s)
    _require(p.s >= 0, "L12", "s ≥ 0", f"got s={p.s}")
    _require(p.b > 0.5, "L12", "b > 1/2", f"got b={p.b}")
    _require(p.bprime > lim + GATE_TOL, "L12", "b' > max(1/6, 1/2 − s)",
             f"got b'={p.bprime}, s={p.s}")


def _check_L12b(p):
    _require(p.b > 0.5 and p.bprime > 0.5, "L12b", "b, b' > 1/2",
             f"got b={p.b}, b'={p.bprime}")


def _check_b(entry):
    def check(p):
        _require(p.b > 0.5, entry, "b > 1/2", f"got b={p.b}")
        if p.s is not None:
            _require(p.s >= 0, entry, "s ≥ 0", f"got s={p.s}")

    return check


def _check_EC(p):
    _require(p.b > 0.5, "EC", "b > 1/2", f"got b={p.b}")
    _require(p.separation > 1, "EC", "|ξ₁| ≥ β|ξ₂| with β > 1", f"got β={p.separation}")


def _check_EE(p):
    pass


def _check_EF(p):
    g1, g2 = p.gamma1, p.gamma2
    _require(g1 + g2 > -0.75 + GATE_TOL, "EF", "γ₁+γ₂ > −3/4", f"got γ₁={g1}, γ₂={g2}")
    _require(g1 > -0.5 and g2 > -0.5, "EF", "γ₁, γ₂ > −1/2", f"got γ₁={g1}, γ₂={g2}")


# -- support gates (checked on every sample)


def _support_L13(fields, p):
    u, v = fields
    r1 = support_radius(u)[1]
    r2 = support_radius(v)[0]
    _require(r2 * r2 >= p.dominance * r1 - GATE_TOL, "L13", "|ξ₂|² >> |ξ₁| (resolved as |ξ₂|² ≥ 16|ξ₁|)",
             f"support has max|ξ₁|={r1}, min|ξ₂|={r2}")


def _support_EC(fields, p):
    u1, u2 = fields
    r1 = support_radius(u1)[0]
    r2 = support_radius(u2)[1]
    _require(r1 >= p.separation * r2 - GATE_TOL, "EC", "|ξ₁| ≥ β|ξ₂| for ξ_j in supp û_j (β > 1)",
             f"support has min|ξ₁|={r1}, max|ξ₂|={r2}, β={p.separation}")


def _support_EF(fields, p):
    for f in fields:
        _require(support_radius(f)[0] > 1.0, "EF", "v̂_i supported outside |ξ| ≤ 1",
                 f"support reaches |ξ|={support_radius(f)[0]}")


# -- catalog definition


def _ens(tag, lo, hi, width, conc=1.0, sign="both"):
    return EnsembleSpec(tag, lo, hi, width, conc, sign)


_S = "schrodinger"
_A = "airy"


def _build_catalog() -> dict:
    c = {}

    def add(e):
        c[e.id] = e

    # Geometry: (box_length, t_length).  Chosen so every band and every
    # product is resolved without aliasing from n = n_t = 64 on.
    add(CatalogEntry(
        "L11", "‖∂_x(v₁v₂)‖_{Y^{s,−b'}} ≤ c‖v₁‖_{Y^{s,b}}‖v₂‖_{Y^{s,b}}",
        (_A, _A), (_ens(_A, 0.25, 3.0, 16.0), _ens(_A, 0.25, 3.0, 16.0)),
        lambda p: _resolve(p, s=0.3, b=_half_plus(p), bprime=max(0.25 - (0.3 if p.s is None else p.s) / 3, 0.0)),
        _check_L11,
        lambda f, p: weighted_norm(_dx(_prod(f[0], f[1])), p.s, -p.bprime, _A),
        lambda f, p: weighted_norm(f[0], p.s, p.b, _A) * weighted_norm(f[1], p.s, p.b, _A),
        (8 * np.pi, np.pi / 2),
    ))
    add(CatalogEntry(
        "L12", "‖∂_x(u₁ū₂)‖_{Y^{s,−b'}} ≤ c‖u₁‖_{X^{s,b}}‖u₂‖_{X^{s,b}}",
        (_S, _S), (_ens(_S, 0.0, 3.5, 8.0), _ens(_S, 0.0, 3.5, 8.0)),
        lambda p: _resolve(p, s=0.3, b=_half_plus(p),
                           bprime=max(1 / 6, 0.5 - (0.3 if p.s is None else p.s)) + p.epsilon),
        _check_L12,
        lambda f, p: weighted_norm(_dx(_prod(_maybe_conj(f[0], p.conj[0]), _maybe_conj(f[1], not p.conj[1]))),
                                   p.s, -p.bprime, _A),
        lambda f, p: weighted_norm(f[0], p.s, p.b, _S) * weighted_norm(f[1], p.s, p.b, _S),
        (8 * np.pi, np.pi / 2),
        variants=((False, False), (True, False)),
    ))
    add(CatalogEntry(
        "L12b", "‖∂_x(u₁ū₂)‖_{Y^{0,−b'}} ≤ c‖u₁‖_{X^{0,b}}‖u₂‖_{X^{0,b}}",
        (_S, _S), (_ens(_S, 0.0, 3.5, 8.0), _ens(_S, 0.0, 3.5, 8.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p), bprime=_half_plus(p)),
        _check_L12b,
        lambda f, p: weighted_norm(_dx(_prod(f[0], f[1].conj())), 0.0, -p.bprime, _A),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _S) * weighted_norm(f[1], 0.0, p.b, _S),
        (8 * np.pi, np.pi / 2),
    ))
    add(CatalogEntry(
        "L13", "‖u D_x v‖_{L²_{xt}} ≤ c‖u‖_{X^{0,b}}‖v‖_{Y^{0,b}}",
        (_S, _A), (_ens(_S, 0.0, 4.0, 48.0), _ens(_A, 16.0, 24.0, 2048.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p)),
        _check_b("L13"),
        lambda f, p: l2_norm(_prod(_maybe_conj(f[0], p.conj[0]), _dpow(f[1], 1.0))),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _S) * weighted_norm(f[1], 0.0, p.b, _A),
        (2 * np.pi, np.pi / 256),
        variants=((False, False), (True, False)),
        support_gate=_support_L13,
    ))
    add(CatalogEntry(
        "EA", "‖uv‖_{X^{s,0}} ≤ c‖u‖_{X^{s,b}}‖v‖_{Y^{s,b}}",
        (_S, _A), (_ens(_S, 0.0, 3.5, 8.0), _ens(_A, 0.0, 3.0, 16.0)),
        lambda p: _resolve(p, s=0.3, b=_half_plus(p)),
        _check_b("EA"),
        lambda f, p: weighted_norm(_prod(_maybe_conj(f[0], p.conj[0]), f[1]), p.s, 0.0, _S),
        lambda f, p: weighted_norm(f[0], p.s, p.b, _S) * weighted_norm(f[1], p.s, p.b, _A),
        (8 * np.pi, np.pi / 2),
        variants=((False, False), (True, False)),
    ))
    add(CatalogEntry(
        "EB", "‖|u|²u‖_{X^{s,0}} ≤ c‖u‖³_{X^{s,b}}",
        (_S,), (_ens(_S, 0.0, 2.5, 8.0),),
        lambda p: _resolve(p, s=0.3, b=_half_plus(p)),
        _check_b("EB"),
        lambda f, p: weighted_norm(_prod(f[0], f[0].conj(), f[0]), p.s, 0.0, _S),
        lambda f, p: weighted_norm(f[0], p.s, p.b, _S) ** 3,
        (8 * np.pi, np.pi / 2),
    ))
    add(CatalogEntry(
        "EG", "‖D_x^{1/2} I_−^{1/2}(v₁,v₂)‖_{L²_{xt}} ≤ c‖v₁‖_{Y^{0,b}}‖v₂‖_{Y^{0,b}}",
        (_A, _A), (_ens(_A, 0.25, 3.0, 16.0), _ens(_A, 0.25, 3.0, 16.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p)),
        _check_b("EG"),
        lambda f, p: l2_norm(_dpow(diff_multiplier(f[0], f[1], 0.5), 0.5)),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _A) * weighted_norm(f[1], 0.0, p.b, _A),
        (8 * np.pi, np.pi / 2),
    ))
    add(CatalogEntry(
        "EH", "‖I_−^{1/2}(u₁,u₂)‖_{L²_{xt}} ≤ c‖u₁‖_{X^{0,b}}‖u₂‖_{X^{0,b}}",
        (_S, _S), (_ens(_S, 0.0, 3.5, 8.0), _ens(_S, 0.0, 3.5, 8.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p)),
        _check_b("EH"),
        lambda f, p: l2_norm(diff_multiplier(_maybe_conj(f[0], p.conj[0]), _maybe_conj(f[1], p.conj[1]), 0.5)),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _S) * weighted_norm(f[1], 0.0, p.b, _S),
        (8 * np.pi, np.pi / 2),
        variants=((False, False), (True, False), (False, True), (True, True)),
    ))
    add(CatalogEntry(
        "EC", "‖(D_x^{1/2}u₁)u₂‖_{L²_{xt}} ≤ c‖u₁‖_{X^{0,b}}‖u₂‖_{X^{0,b}}",
        (_S, _S), (_ens(_S, 2.0, 3.5, 8.0), _ens(_S, 0.0, 1.0, 8.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p)),
        _check_EC,
        lambda f, p: l2_norm(_prod(_dpow(_maybe_conj(f[0], p.conj[0]), 0.5), _maybe_conj(f[1], p.conj[1]))),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _S) * weighted_norm(f[1], 0.0, p.b, _S),
        (8 * np.pi, np.pi / 2),
        variants=((False, False), (True, False), (False, True), (True, True)),
        support_gate=_support_EC,
    ))
    add(CatalogEntry(
        "ED", "‖D_x^{1/2}(u₁ū₂)‖_{L²_{xt}} ≤ c‖u₁‖_{X^{0,b}}‖u₂‖_{X^{0,b}}",
        (_S, _S), (_ens(_S, 0.0, 3.5, 8.0), _ens(_S, 0.0, 3.5, 8.0)),
        lambda p: _resolve(p, s=0.0, b=_half_plus(p)),
        _check_b("ED"),
        lambda f, p: l2_norm(_dpow(_prod(_maybe_conj(f[0], p.conj[0]), _maybe_conj(f[1], not p.conj[1])), 0.5)),
        lambda f, p: weighted_norm(f[0], 0.0, p.b, _S) * weighted_norm(f[1], 0.0, p.b, _S),
        (8 * np.pi, np.pi / 2),
        variants=((False, False), (True, False)),
    ))
    add(CatalogEntry(
        "EE", "‖v₁v₂‖_{L²_{xt}} ≤ c‖v₁‖_{Y^{−1/2,1/2−}}‖v₂‖_{Y^{1/4,1/2+}}",
        (_A, _A), (_ens(_A, 0.25, 3.0, 16.0), _ens(_A, 0.25, 3.0, 16.0)),
        lambda p: p,
        _check_EE,
        lambda f, p: l2_norm(_prod(f[0], f[1])),
        lambda f, p: weighted_norm(f[0], -0.5, 0.5 - p.epsilon, _A) * weighted_norm(f[1], 0.25, 0.5 + p.epsilon, _A),
        (8 * np.pi, np.pi / 2),
    ))
    add(CatalogEntry(
        "EF", "‖∂_x(v₁v₂)‖_{X^{0,−1/2+}} ≤ c‖v₁‖_{Y^{γ₁,1/2+}}‖v₂‖_{Y^{γ₂,1/2+}}",
        (_A, _A), (_ens(_A, 1.25, 3.0, 16.0), _ens(_A, 1.25, 3.0, 16.0)),
        lambda p: _resolve(p, gamma1=-0.35, gamma2=-0.35),
        _check_EF,
        lambda f, p: weighted_norm(_dx(_prod(f[0], f[1])), 0.0, -0.5 + p.epsilon, _S),
        lambda f, p: weighted_norm(f[0], p.gamma1, 0.5 + p.epsilon, _A) * weighted_norm(f[1], p.gamma2, 0.5 + p.epsilon, _A),
        (8 * np.pi, np.pi / 2),
        support_gate=_support_EF,
    ))
    return c


CATALOG = _build_catalog()
ACCEPTANCE_IDS = ("L11", "L12", "L13", "EA", "EB", "EC", "ED", "EE", "EF", "EG", "EH")
TORUS_CAVEAT = (
    "measured on a space-time torus; the estimates are stated on R x R and the "
    "periodic analogue can differ near xi = 0"
)


def check_gates(catalog_id: str, params: EstimateParams | None = None) -> EstimateParams:
    """Resolve defaults and enforce the parameter hypotheses of an entry."""
    entry = _entry(catalog_id)
    p = entry.resolved(params or EstimateParams())
    entry.check(p)
    return p


def _entry(catalog_id: str) -> CatalogEntry:
    try:
        return CATALOG[catalog_id]
    except KeyError:
        raise ConfigurationError(f"unknown catalog entry {catalog_id!r}", field="catalog") from None


@dataclass
class EstimateReport:
    catalog_id: str
    statement: str
    conj: tuple
    params: dict
    epsilon: float
    ensemble_size: int
    resolutions: list
    ratios: dict = field(default_factory=dict)
    max_ratio: dict = field(default_factory=dict)
    growth: list = field(default_factory=list)
    caveat: str = TORUS_CAVEAT

    @property
    def max_growth(self) -> float:
        return max(self.growth) if self.growth else 1.0

    def to_dict(self) -> dict:
        return {
            "catalog_id": self.catalog_id,
            "statement": self.statement,
            "conj": list(self.conj),
            "params": self.params,
            "epsilon": self.epsilon,
            "ensemble_size": self.ensemble_size,
            "resolutions": list(self.resolutions),
            "max_ratio": {str(k): v for k, v in self.max_ratio.items()},
            "growth": list(self.growth),
            "caveat": self.caveat,
        }


def sample_ratio(catalog_id: str, fields: Sequence[SpaceTimeField], params: EstimateParams | None = None) -> tuple:
    """``(lhs, rhs)`` for one tuple of inputs."""
    entry = _entry(catalog_id)
    p = check_gates(catalog_id, params)
    if entry.support_gate is not None:
        entry.support_gate(fields, p)
    return entry.lhs(fields, p), entry.rhs(fields, p)


def measure_estimate(
    catalog_id: str,
    params: EstimateParams | None = None,
    ensembles: Sequence[EnsembleSpec] | None = None,
    resolutions: Sequence[int] = (64, 128, 256),
    count: int = 100,
    seed: int = 0,
    geometry: tuple | None = None,
) -> EstimateReport:
    """Max of lhs/rhs over a random ensemble at each resolution (``n_t = n``)."""
    entry = _entry(catalog_id)
    p = check_gates(catalog_id, params)
    specs = ensembles or entry.ensembles
    specs = [replace(s, count=count, seed=seed) for s in specs]
    L, T = geometry or entry.geometry
    report = EstimateReport(
        catalog_id, entry.statement, tuple(p.conj),
        {k: v for k, v in asdict(p).items() if k != "conj"},
        p.epsilon, count, list(resolutions),
    )
    for n in resolutions:
        grid = make_spacetime_grid(n, L, n, T)
        inputs = [random_ensemble(grid, s, stream=j) for j, s in enumerate(specs)]
        ratios = []
        for i in range(count):
            fields = [inp[i] for inp in inputs]
            if entry.support_gate is not None:
                entry.support_gate(fields, p)
            lhs, rhs = entry.lhs(fields, p), entry.rhs(fields, p)
            ratios.append(lhs / rhs if rhs > 0 else 0.0)
        report.ratios[n] = ratios
        report.max_ratio[n] = max(ratios) if ratios else 0.0
    maxes = [report.max_ratio[n] for n in resolutions]
    report.growth = [b / a if a > 0 else 1.0 for a, b in zip(maxes, maxes[1:])]
    return report


def acceptance_sweep(count: int = 100, seed: int = 0, resolutions=(64, 128, 256)) -> list:
    """Every acceptance entry and every conjugate variant with default gates."""
    out = []
    for cid in ACCEPTANCE_IDS:
        for conj in CATALOG[cid].variants:
            out.append(measure_estimate(cid, EstimateParams(conj=conj), count=count, seed=seed,
                                        resolutions=resolutions))
    return out
