"""Periodic-box spectral infrastructure.

Coefficient convention: ``f(x) = sum_k fhat_k exp(i xi_k x)`` with
``x_j = j * dx`` and ``xi_k = 2 pi k / L``.  Under this convention
``sum |f|^2 dx = L * sum |fhat|^2``; every norm in the package is measured
against it so that functional values do not depend on ``n``.

Arrays of coefficients are kept in FFT storage order (``numpy.fft.fftfreq``),
so the unpaired mode ``k = -n/2`` sits at index ``n // 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import ConfigurationError, ContractError, NumericalDomainError

Symbol = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform grid on the periodic box ``[0, box_length)``."""

    n: int
    box_length: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ConfigurationError("n must be an integer", field="n")
        if self.n % 2:
            raise ConfigurationError("n must be even", field="n")
        if self.n < 8:
            raise ConfigurationError("n must be at least 8", field="n")
        if not (math.isfinite(self.box_length) and self.box_length > 0):
            raise ConfigurationError("box_length must be positive", field="box_length")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(np.arange(self.n) * self.dx)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers ``k`` in storage order."""
        return _frozen(np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return _frozen(2.0 * np.pi * self.modes / self.box_length)

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps ``|k| < n/3`` (which also drops ``k = -n/2``)."""
        return _frozen(3 * np.abs(self.modes) < self.n)

    @property
    def resolved_max(self) -> float:
        """Largest |xi| kept by the dealiasing mask."""
        return 2.0 * np.pi * ((self.n - 1) // 3) / self.box_length


def make_grid(n: int, box_length: float) -> SpectralGrid:
    return SpectralGrid(n, box_length)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Field:
    """Samples of a function on a :class:`SpectralGrid`.

    Values are read-only; spectral coefficients are computed on first access
    and cached.  Operations always return new fields.
    """

    dtype = np.complex128

    def __init__(self, grid: SpectralGrid, values):
        values = np.array(values, dtype=self.dtype)
        if values.shape != (grid.n,):
            raise ConfigurationError(
                f"field needs {grid.n} samples, got shape {values.shape}", field="values"
            )
        self.grid = grid
        self._values = _frozen(values)
        self._coeffs = None

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = _frozen(np.fft.fft(self._values) / self.grid.n)
        return self._coeffs

    @classmethod
    def from_coeffs(cls, grid: SpectralGrid, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        f = cls(grid, _to_physical(coeffs, cls.dtype))
        if cls is ComplexField:
            f._coeffs = _frozen(coeffs.copy())
        return f

    @classmethod
    def zeros(cls, grid: SpectralGrid):
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: SpectralGrid, fn: Callable[[np.ndarray], np.ndarray]):
        return cls(grid, fn(grid.x))

    def _check_same_grid(self, other: "Field"):
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids", field="grid")

    def _binary(self, other, op):
        if isinstance(other, Field):
            self._check_same_grid(other)
            out = op(self._values, other._values)
        else:
            out = op(self._values, other)
        kind = RealField if np.isrealobj(out) else ComplexField
        return kind(self.grid, out)

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(self.grid, -self._values)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.grid.n}, L={self.grid.box_length:g})"


class ComplexField(Field):
    dtype = np.complex128

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self._values))


class RealField(Field):
    dtype = np.float64

    def as_complex(self) -> ComplexField:
        return ComplexField(self.grid, self._values)

    def conj(self) -> "RealField":
        return self


def _to_physical(coeffs: np.ndarray, dtype) -> np.ndarray:
    values = np.fft.ifft(coeffs, axis=0) * coeffs.shape[0]
    if dtype is np.float64:
        return values.real.copy()
    return values


def symbol_on_grid(grid: SpectralGrid, sigma: Symbol) -> np.ndarray:
    """Evaluate a symbol at the grid wavenumbers (storage order).

    The unpaired mode ``k = -n/2`` receives the even part
    ``(sigma(xi) + sigma(-xi)) / 2``, so odd symbols annihilate it and
    Hermitian symbols keep it real.
    """
    xi = grid.wavenumbers
    if callable(sigma):
        vals = np.asarray(sigma(xi), dtype=np.complex128)
        if vals.shape != xi.shape:
            vals = np.broadcast_to(vals, xi.shape).copy()
        else:
            vals = vals.copy()
        j = grid.nyquist_index
        other = np.asarray(sigma(np.array([-xi[j]])), dtype=np.complex128).reshape(-1)[0]
        vals[j] = 0.5 * (vals[j] + other)
    else:
        vals = np.array(sigma, dtype=np.complex128)
        if vals.shape != xi.shape:
            raise ConfigurationError("symbol array must match the grid", field="sigma")
    if not np.all(np.isfinite(vals)):
        bad = xi[~np.isfinite(vals)]
        raise NumericalDomainError(f"symbol is not finite at xi = {bad[:4].tolist()}")
    if not np.any(vals.imag):
        return vals.real
    return vals


def _is_hermitian(grid: SpectralGrid, vals: np.ndarray) -> bool:
    if np.isrealobj(vals):
        rev = vals[(-grid.modes) % grid.n]
        return bool(np.allclose(vals, rev, rtol=1e-13, atol=0.0))
    rev = vals[(-grid.modes) % grid.n]
    return bool(np.allclose(vals, np.conj(rev), rtol=1e-13, atol=1e-300))


def apply_multiplier(f: Field, sigma: Symbol) -> Field:
    """Multiply the spectral coefficients of ``f`` by ``sigma(xi_k)``.

    A :class:`RealField` stays real when the symbol is Hermitian
    (``sigma(-xi) = conj(sigma(xi))``); any other symbol on a real field
    raises :class:`ContractError`.
    """
    vals = symbol_on_grid(f.grid, sigma)
    if isinstance(f, RealField):
        if not _is_hermitian(f.grid, vals):
            raise ContractError("symbol does not preserve reality; use as_complex() first")
        return RealField.from_coeffs(f.grid, f.coeffs * vals)
    return ComplexField.from_coeffs(f.grid, f.coeffs * vals)


def derivative(f: Field) -> Field:
    return apply_multiplier(f, lambda xi: 1j * xi)


def abs_power_symbol(a: float):
    """Symbol of ``D_x^a``: ``|xi|^a`` with the value 0 at ``xi = 0``."""

    def sigma(xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi)
        nz = xi > 0
        out[nz] = xi[nz] ** a
        return out

    return sigma


def d_op(f: Field, a: float) -> Field:
    return apply_multiplier(f, abs_power_symbol(a))


def bessel_symbol(s: float):
    return lambda xi: (1.0 + np.asarray(xi, dtype=float) ** 2) ** (0.5 * s)


def bessel(f: Field, s: float) -> Field:
    return apply_multiplier(f, bessel_symbol(s))


@dataclass(frozen=True)
class IParams:
    """Cutoff ``N`` and regularity ``s`` of the smoothing multiplier."""

    N: float
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.N) and self.N >= 1):
            raise ConfigurationError("N must be >= 1", field="N")
        if not (0 < self.s <= 1):
            raise ConfigurationError("s must lie in (0, 1]", field="s")


# Transition on (N, 2N): cubic Hermite in log|xi| for log m, endpoint values
# 0 and -(1-s) log 2, endpoint slopes 0 and -(1-s).  With t = log2(|xi|/N)
# this reduces to log m = -(1-s) log 2 * t^2 (2 - t).
M_TRANSITION = "cubic Hermite in (log|xi|, log m) on (N, 2N), C1, slopes 0 and -(1-s)"


def i_multiplier(xi, p: IParams):
    """The smoothing symbol ``m_N(xi)``; accepts scalars or arrays."""
    a = np.abs(np.asarray(xi, dtype=float))
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    out = np.ones_like(a)
    e = 1.0 - p.s
    if e != 0.0:
        N = float(p.N)
        hi = a >= 2 * N
        out[hi] = (N / a[hi]) ** e
        mid = (a > N) & ~hi
        t = np.log2(a[mid] / N)
        out[mid] = np.exp(-e * np.log(2.0) * t * t * (2.0 - t))
    return float(out[0]) if scalar else out


def apply_I(f: Field, p: IParams) -> Field:
    return apply_multiplier(f, lambda xi: i_multiplier(xi, p))


def bilinear_diff_coeffs(fhat: np.ndarray, ghat: np.ndarray, box_length: float, a: float) -> np.ndarray:
    """Direct double sum ``h(k) = sum_{k1+k2=k} |xi1-xi2|^a f(k1) g(k2)``.

    ``fhat`` and ``ghat`` have shape ``(n, ...)`` in storage order; trailing
    axes are carried pointwise.  Pairs whose true sum leaves
    ``[-n/2, n/2 - 1]`` are dropped, never wrapped.
    """
    if a < 0:
        raise ConfigurationError("difference exponent must be >= 0", field="a")
    n = fhat.shape[0]
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    scale = 2.0 * np.pi / box_length
    out = np.zeros(np.broadcast_shapes(fhat.shape, ghat.shape), dtype=np.complex128)
    gnz = np.flatnonzero(np.any(ghat.reshape(n, -1) != 0, axis=1))
    if gnz.size == 0:
        return out
    k2 = modes[gnz]
    for i1 in np.flatnonzero(np.any(fhat.reshape(n, -1) != 0, axis=1)):
        k1 = modes[i1]
        s = k1 + k2
        keep = (s >= -(n // 2)) & (s < n // 2)
        if not keep.any():
            continue
        d = np.abs(k1 - k2[keep]) * scale
        if a == 0:
            w = np.ones_like(d)
        else:
            w = np.where(d > 0, d**a, 0.0)
        w = w.reshape((-1,) + (1,) * (fhat.ndim - 1))
        out[s[keep] % n] += w * fhat[i1] * ghat[gnz[keep]]
    return out


def bilinear_diff_multiplier(f: Field, g: Field, a: float) -> ComplexField:
    if f.grid != g.grid:
        raise ConfigurationError("fields live on different grids", field="grid")
    h = bilinear_diff_coeffs(f.coeffs, g.coeffs, f.grid.box_length, a)
    return ComplexField.from_coeffs(f.grid, h)
