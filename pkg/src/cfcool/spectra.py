"""Normalized radiation-pressure noise spectra and sideband scattering rates.

The working quantity is the rate spectrum Sigma(omega) = g^2 |chi_cl(omega)|^2
referred to the loop's external vacuum input; the zero-point amplitude and
hbar cancel against the rate normalization and never appear.  Phonon-creating
(Stokes) scattering samples Sigma at -omega_m, phonon-annihilating
(anti-Stokes) scattering at +omega_m.  The optical input is vacuum with unit
flat spectral density; thermal or squeezed drives are out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidParam, NoNetCooling

ResponseFn = Callable[[float], complex]


@dataclass(frozen=True)
class MechanicalBath:
    """Intrinsic mechanical damping gamma_m >= 0 and thermal occupation n_th >= 0."""

    gamma_m: float
    n_th: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma_m) and self.gamma_m >= 0):
            raise InvalidParam(f"gamma_m must be finite and >= 0, got {self.gamma_m!r}")
        if not (math.isfinite(self.n_th) and self.n_th >= 0):
            raise InvalidParam(f"n_th must be finite and >= 0, got {self.n_th!r}")


@dataclass(frozen=True)
class Spectrum:
    """Rate spectrum Sigma(omega) sampled on a monotone frequency grid."""

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if omegas.ndim != 1 or omegas.shape != values.shape:
            raise InvalidParam("omegas and values must be 1-d arrays of equal length")
        diffs = np.diff(omegas)
        if omegas.size > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise InvalidParam("frequency grid must be strictly monotone")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidParam("spectrum values must be finite and >= 0")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class RateResult:
    """Stokes/anti-Stokes rate pair and the cooling figures derived from it.

    ``gamma_opt = a_minus - a_plus`` is the optically induced damping (may be
    negative, meaning net heating); ``n_min = a_plus / gamma_opt`` is the
    occupation floor in the vanishing-mechanical-damping limit, defined only
    when gamma_opt > 0 (``None`` otherwise).
    """

    a_plus: float
    a_minus: float
    gamma_opt: float = field(init=False)
    n_min: float | None = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.a_plus) and self.a_plus >= 0):
            raise InvalidParam(f"a_plus must be finite and >= 0, got {self.a_plus!r}")
        if not (math.isfinite(self.a_minus) and self.a_minus >= 0):
            raise InvalidParam(f"a_minus must be finite and >= 0, got {self.a_minus!r}")
        gamma_opt = self.a_minus - self.a_plus
        object.__setattr__(self, "gamma_opt", gamma_opt)
        object.__setattr__(
            self, "n_min", self.a_plus / gamma_opt if gamma_opt > 0 else None
        )


@dataclass(frozen=True)
class LindbladRates:
    """Dissipator coefficients: gamma_minus multiplies D[b], gamma_plus D[b^dag]."""

    gamma_minus: float
    gamma_plus: float


def rate_spectrum(chi_cl: ResponseFn, g: float, grid: Iterable[float]) -> Spectrum:
    """Evaluate Sigma(omega) = g^2 |chi_cl(omega)|^2 on a frequency grid.

    ``chi_cl`` may raise :class:`~cfcool.errors.SingularLoop`; the exception
    (carrying the offending frequency) propagates unchanged.
    """
    if g < 0:
        raise InvalidParam(f"g must be >= 0, got {g}")
    omegas = np.asarray(list(grid), dtype=float)
    values = np.array([g * g * abs(chi_cl(w)) ** 2 for w in omegas], dtype=float)
    return Spectrum(omegas=omegas, values=values)


def scattering_rates(chi_cl: ResponseFn, g: float, omega_m: float) -> RateResult:
    """Sideband rates from the loop response.

    The phonon-creating rate samples the spectrum at -omega_m and the
    phonon-annihilating rate at +omega_m; the sign crossing is deliberate and
    locked by tests, since swapping it turns cooling into heating.
    """
    if omega_m <= 0:
        raise InvalidParam(f"omega_m must be > 0, got {omega_m}")
    if g < 0:
        raise InvalidParam(f"g must be >= 0, got {g}")
    a_plus = g * g * abs(chi_cl(-omega_m)) ** 2
    a_minus = g * g * abs(chi_cl(+omega_m)) ** 2
    return RateResult(a_plus=a_plus, a_minus=a_minus)


def n_min(r: RateResult) -> float:
    """Occupation floor a_plus / (a_minus - a_plus) for net cooling."""
    if r.gamma_opt <= 0:
        raise NoNetCooling(
            f"no net cooling: a_plus={r.a_plus!r}, a_minus={r.a_minus!r}"
        )
    return r.a_plus / r.gamma_opt


def steady_phonon(r: RateResult, bath: MechanicalBath) -> float:
    """Stationary occupation (a_plus + gamma_m n_th) / (gamma_opt + gamma_m).

    Standard rate-equation balance of optical scattering against the
    mechanical bath; reduces to :func:`n_min` as gamma_m -> 0.
    """
    den = r.gamma_opt + bath.gamma_m
    if den <= 0:
        raise NoNetCooling(
            f"rate-equation denominator {den!r} <= 0: no stationary occupation"
        )
    return (r.a_plus + bath.gamma_m * bath.n_th) / den


def lindblad_rates(r: RateResult) -> LindbladRates:
    """Map the scattering rates onto dissipator coefficients.

    The anti-Stokes rate drives the jump-down channel D[b] and the Stokes rate
    the jump-up channel D[b^dag].
    """
    return LindbladRates(gamma_minus=r.a_minus, gamma_plus=r.a_plus)
