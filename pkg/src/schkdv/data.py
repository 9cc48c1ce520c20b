"""Initial-data families and closed-form reference solutions."""

from __future__ import annotations

import numpy as np

from .dynamics import State
from .errors import ConfigurationError
from .spectral import ComplexField, RealField, SpectralGrid


def _centre(grid: SpectralGrid, x0):
    return 0.5 * grid.box_length if x0 is None else x0


def gaussian_bump(grid: SpectralGrid, amplitude=1.0, width=1.0, k0=0.0, x0=None,
                  v_amplitude=None, v_width=None) -> State:
    """``u = A exp(-((x-x0)/w)^2) e^{i k0 x}``, ``v`` a real Gaussian mid-box."""
    x = grid.x - _centre(grid, x0)
    va = amplitude if v_amplitude is None else v_amplitude
    vw = width if v_width is None else v_width
    u = amplitude * np.exp(-((x / width) ** 2)) * np.exp(1j * k0 * grid.x)
    v = va * np.exp(-((x / vw) ** 2))
    return State.from_arrays(grid, u, v)


def sech_bump(grid: SpectralGrid, amplitude=1.0, k0=0.0, x0=None, v_amplitude=None) -> State:
    x = grid.x - _centre(grid, x0)
    va = amplitude if v_amplitude is None else v_amplitude
    u = amplitude / np.cosh(x) * np.exp(1j * k0 * grid.x)
    v = va / np.cosh(x) ** 2
    return State.from_arrays(grid, u, v)


def kdv_soliton(grid: SpectralGrid, c=1.0, x0=None, t=0.0) -> np.ndarray:
    """``3c sech^2(sqrt(c)/2 (x - c t - x0))``, wrapped onto the box."""
    if c <= 0:
        raise ConfigurationError("soliton speed must be positive", field="c")
    L = grid.box_length
    x0 = 0.5 * L if x0 is None else x0
    xi = (grid.x - c * t - x0 + 0.5 * L) % L - 0.5 * L
    return 3 * c / np.cosh(0.5 * np.sqrt(c) * xi) ** 2


def plane_wave(grid: SpectralGrid, amplitude=1.0, k=2.0, beta=0.0, t=0.0) -> np.ndarray:
    """Cubic-NLS plane wave ``A e^{i(kx - w t)}`` with ``w = k^2 + beta A^2``."""
    omega = k * k + beta * amplitude**2
    return amplitude * np.exp(1j * (k * grid.x - omega * t))


def rough_noise(grid: SpectralGrid, s: float, rng: np.random.Generator, complex_valued=True,
                envelope_width=None, x0=None) -> np.ndarray:
    """Localised noise whose spectrum decays like ``<xi>^{-s-1/2-0.01}``.

    Coefficients are drawn only inside the dealiased band; the result is
    multiplied by a smooth envelope so it decays towards the seam, then
    truncated back to the band.
    """
    xi = grid.wavenumbers
    mask = grid.dealias_mask
    decay = (1 + xi**2) ** (-(s + 0.5 + 0.01) / 2)
    re = rng.standard_normal(grid.n)
    im = rng.standard_normal(grid.n) if complex_valued else np.zeros(grid.n)
    coeffs = np.where(mask, (re + 1j * im) * decay, 0.0)
    noise = np.fft.ifft(coeffs) * grid.n
    if not complex_valued:
        noise = noise.real
    width = grid.box_length / 16 if envelope_width is None else envelope_width
    env = np.exp(-(((grid.x - _centre(grid, x0)) / width) ** 2))
    noise = noise * env
    spec = np.fft.fft(noise) * mask
    out = np.fft.ifft(spec)
    return out if complex_valued else out.real


def rough_family(grid: SpectralGrid, s: float, seed: int, amplitude=1.0, k0=1.0,
                 noise_level=0.5, x0=None) -> State:
    """Sech profiles plus seeded rough noise that is barely in ``H^s``."""
    rng = np.random.default_rng(seed)
    base = sech_bump(grid, amplitude=amplitude, k0=k0, x0=x0)
    nu = rough_noise(grid, s, rng, complex_valued=True, x0=x0)
    nv = rough_noise(grid, s, rng, complex_valued=False, x0=x0)
    scale_u = noise_level * amplitude / max(np.max(np.abs(nu)), 1e-300)
    scale_v = noise_level * amplitude / max(np.max(np.abs(nv)), 1e-300)
    u = base.u.values + scale_u * nu
    v = base.v.values + scale_v * nv
    return State(0.0, ComplexField(grid, u), RealField(grid, v))
