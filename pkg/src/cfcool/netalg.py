"""Frequency-domain elements and interconnection algebra for coherent-feedback
loops around a driven cavity.

Everything is evaluated pointwise at real frequencies in the rotating frame of
the drive laser.  The frequency-domain convention is

    x(omega) = integral x(t) exp(+i omega t) dt,   i.e.  d/dt -> -i omega,

so a mode obeying  adot = (i*delta - kappa/2) a - sqrt(kappa) a_in  has the
intracavity response  sqrt(kappa) / (i (delta + omega) - kappa/2),  and a
propagation delay tau multiplies a signal by exp(+i omega tau)
(``DELAY_PHASE_SIGN``).  Frequencies map to the lab frame as
omega_lab = omega_L + omega; a cavity resonant at omega_f sits at
omega = -delta_f on this axis.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Union

import numpy as np

from .errors import ClosedFormInapplicable, InvalidParam, SingularLoop

#: Sign s in the delay phase exp(s * 1j * omega * tau) implied by the
#: d/dt -> -i*omega convention above.  A single constant keeps every element
#: on the same Fourier convention.
DELAY_PHASE_SIGN = +1.0

#: Reciprocal-condition threshold below which (I - M(omega)) is treated as
#: singular (an algebraic loop sitting on resonance) instead of returning a
#: huge, meaningless gain.
RCOND_SINGULAR = 1e-13


def _check_finite(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not math.isfinite(value):
            raise InvalidParam(f"{type(obj).__name__}.{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OptoCavityParams:
    """Drive-referenced one-port optomechanical cavity.

    Attributes
    ----------
    kappa : float
        Decay rate through the coupling mirror (rad/s, > 0).
    delta : float
        Drive detuning omega_L - omega_c (rad/s).
    g : float
        Linearized optomechanical coupling g0 * x_zpf (rad/s, >= 0).
    omega_m : float
        Mechanical frequency (rad/s, > 0).
    """

    kappa: float
    delta: float
    g: float
    omega_m: float

    def __post_init__(self):
        _check_finite(self, ("kappa", "delta", "g", "omega_m"))
        if self.kappa <= 0:
            raise InvalidParam(f"kappa must be > 0, got {self.kappa}")
        if self.omega_m <= 0:
            raise InvalidParam(f"omega_m must be > 0, got {self.omega_m}")
        if self.g < 0:
            raise InvalidParam(f"g must be >= 0, got {self.g}")

    @property
    def is_sideband_resolved(self) -> bool:
        """True when the cavity linewidth fits under the mechanical frequency."""
        return self.kappa < self.omega_m


@dataclass(frozen=True)
class FilterCavityParams:
    """Two-sided controller cavity with optional internal loss.

    ``kappa1`` and ``kappa2`` are the per-mirror coupling rates, ``kappa_loss``
    an internal loss rate, and ``delta_f = omega_L - omega_f`` the detuning of
    the controller resonance from the drive.  The symmetric lossless case
    (kappa1 == kappa2, kappa_loss == 0) is the ideal two-sided cavity with
    per-mirror rate ``kappa_f`` and total linewidth 2*kappa_f.
    """

    kappa1: float
    kappa2: float
    kappa_loss: float = 0.0
    delta_f: float = 0.0

    def __post_init__(self):
        _check_finite(self, ("kappa1", "kappa2", "kappa_loss", "delta_f"))
        if self.kappa1 < 0 or self.kappa2 < 0 or self.kappa_loss < 0:
            raise InvalidParam("mirror and loss rates must be >= 0")
        if self.kappa1 + self.kappa2 <= 0:
            raise InvalidParam("at least one mirror must couple (kappa1 + kappa2 > 0)")

    @classmethod
    def symmetric(cls, kappa_f: float, delta_f: float) -> "FilterCavityParams":
        """Ideal two-sided cavity with identical mirror rates and no loss."""
        return cls(kappa1=kappa_f, kappa2=kappa_f, kappa_loss=0.0, delta_f=delta_f)

    @property
    def kappa_total(self) -> float:
        return self.kappa1 + self.kappa2 + self.kappa_loss

    @property
    def is_symmetric_ideal(self) -> bool:
        return self.kappa1 == self.kappa2 and self.kappa_loss == 0.0

    @property
    def kappa_f(self) -> float:
        """Per-mirror rate of the symmetric-ideal case."""
        if not self.is_symmetric_ideal:
            raise InvalidParam("kappa_f is defined only for symmetric lossless filters")
        return self.kappa1


def chi(cav: OptoCavityParams, omega: float) -> complex:
    """Intracavity response sqrt(kappa) / (i*(delta + omega) - kappa/2).

    Transfer gain from the field incident on the coupling mirror to the
    intracavity field (units rad^-1/2 s^1/2); its squared modulus is the
    Lorentzian kappa / ((delta + omega)^2 + kappa^2/4).
    """
    return math.sqrt(cav.kappa) / (1j * (cav.delta + omega) - cav.kappa / 2.0)


def reflection_sys(cav: OptoCavityParams, omega: float) -> complex:
    """Reflection off the cavity coupling mirror, 1 + sqrt(kappa)*chi(omega).

    The one-port cavity is lossless, so this has unit modulus at every real
    frequency; only the phase winds through resonance.
    """
    return 1.0 + math.sqrt(cav.kappa) * chi(cav, omega)


def delay_response(tau: float, omega: float) -> complex:
    """Phase factor of a propagation delay tau >= 0 (unit modulus)."""
    if not math.isfinite(tau) or tau < 0:
        raise InvalidParam(f"tau must be finite and >= 0, got {tau!r}")
    return cmath.exp(DELAY_PHASE_SIGN * 1j * omega * tau)


def scattering(f: FilterCavityParams, omega: float) -> np.ndarray:
    """2x2 port scattering [[R11, T12], [T21, R22]] of the controller cavity.

    With d(omega) = i*(omega + delta_f) - kappa_total/2:

        R11 = 1 + kappa1/d,  R22 = 1 + kappa2/d,  T12 = T21 = sqrt(kappa1*kappa2)/d.

    In the symmetric lossless case this reduces to
    R = i*(omega + delta_f) / (i*(omega + delta_f) - kappa_f) and
    T = kappa_f / (i*(omega + delta_f) - kappa_f), with |R|^2 + |T|^2 = 1.
    The internal-loss channel enters only through kappa_total; its vacuum
    input and outgoing field are not part of the 2x2 block.
    """
    d = 1j * (omega + f.delta_f) - f.kappa_total / 2.0
    t = math.sqrt(f.kappa1 * f.kappa2) / d
    return np.array(
        [[1.0 + f.kappa1 / d, t], [t, 1.0 + f.kappa2 / d]], dtype=complex
    )


def closed_form_notch(cav: OptoCavityParams, f: FilterCavityParams, omega: float) -> complex:
    """Loop response chi*R / (1 - (sqrt(kappa)*chi + 1)*T) of the band-blocking wiring.

    Valid for symmetric lossless controllers; the controller reflection feeds
    the cavity, so the response has an exact zero at omega = -delta_f.
    """
    if not f.is_symmetric_ideal:
        raise ClosedFormInapplicable(
            "the band-blocking closed form assumes kappa1 == kappa2 and no loss"
        )
    s = scattering(f, omega)
    den = 1.0 - reflection_sys(cav, omega) * s[0, 1]
    if abs(den) < 1e-13:
        raise SingularLoop(omega)
    return chi(cav, omega) * s[0, 0] / den


def closed_form_bandpass(cav: OptoCavityParams, f: FilterCavityParams, omega: float) -> complex:
    """Loop response chi*T / (1 - (sqrt(kappa)*chi + 1)*R) of the band-passing wiring.

    Valid for symmetric lossless controllers; only the band transmitted by the
    controller (centred at omega = -delta_f) reaches the cavity.
    """
    if not f.is_symmetric_ideal:
        raise ClosedFormInapplicable(
            "the band-passing closed form assumes kappa1 == kappa2 and no loss"
        )
    s = scattering(f, omega)
    den = 1.0 - reflection_sys(cav, omega) * s[0, 0]
    if abs(den) < 1e-13:
        raise SingularLoop(omega)
    return chi(cav, omega) * s[0, 1] / den


# ---------------------------------------------------------------------------
# Generic interconnection solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CavityReflection:
    """One-port cavity element; the network taps its intracavity field."""

    cav: OptoCavityParams
    n_inputs: ClassVar[int] = 1
    n_outputs: ClassVar[int] = 1

    def s_matrix(self, omega: float) -> np.ndarray:
        return np.array([[reflection_sys(self.cav, omega)]], dtype=complex)

    def tap_gain(self, omega: float) -> complex:
        return chi(self.cav, omega)


@dataclass(frozen=True)
class FilterTwoPort:
    """Two-sided controller cavity as a 2x2 scattering element."""

    filt: FilterCavityParams
    n_inputs: ClassVar[int] = 2
    n_outputs: ClassVar[int] = 2

    def s_matrix(self, omega: float) -> np.ndarray:
        return scattering(self.filt, omega)


@dataclass(frozen=True)
class DelayLine:
    """Pure propagation delay."""

    tau: float
    n_inputs: ClassVar[int] = 1
    n_outputs: ClassVar[int] = 1

    def s_matrix(self, omega: float) -> np.ndarray:
        return np.array([[delay_response(self.tau, omega)]], dtype=complex)


@dataclass(frozen=True)
class Identity:
    """Transparent connector."""

    n_inputs: ClassVar[int] = 1
    n_outputs: ClassVar[int] = 1

    def s_matrix(self, omega: float) -> np.ndarray:
        return np.array([[1.0 + 0.0j]], dtype=complex)


Element = Union[CavityReflection, FilterTwoPort, DelayLine, Identity]
Port = tuple[str, int]
Edge = tuple[Port, Port]


@dataclass(frozen=True)
class NetworkSpec:
    """Directed signal-flow graph with one external input and one tapped cavity.

    ``elements`` is an ordered (name, element) tuple; ``wiring`` directs each
    edge from an element output port to an element input port.  Every element
    input port must be driven exactly once, either by an edge or by being the
    designated external ``input_port``.  ``tap`` names the
    :class:`CavityReflection` whose intracavity field the solver reports.
    """

    elements: tuple[tuple[str, Element], ...]
    wiring: tuple[Edge, ...]
    input_port: Port
    tap: str

    def __post_init__(self):
        names = [name for name, _ in self.elements]
        if len(set(names)) != len(names):
            raise InvalidParam(f"duplicate element names in {names}")
        by_name = dict(self.elements)

        def check_port(port, is_output):
            name, idx = port
            if name not in by_name:
                raise InvalidParam(f"unknown element {name!r} in port {port!r}")
            count = by_name[name].n_outputs if is_output else by_name[name].n_inputs
            if not 0 <= idx < count:
                raise InvalidParam(f"port index out of range: {port!r}")

        driven: dict[Port, int] = {}
        for src, dst in self.wiring:
            check_port(src, is_output=True)
            check_port(dst, is_output=False)
            driven[dst] = driven.get(dst, 0) + 1

        check_port(self.input_port, is_output=False)
        if self.input_port in driven:
            raise InvalidParam(f"external input port {self.input_port!r} is also edge-driven")
        for name, el in self.elements:
            for k in range(el.n_inputs):
                port = (name, k)
                n_drivers = driven.get(port, 0) + (1 if port == self.input_port else 0)
                if n_drivers != 1:
                    raise InvalidParam(
                        f"input port {port!r} must have exactly one driver, has {n_drivers}"
                    )
        if self.tap not in by_name or not isinstance(by_name[self.tap], CavityReflection):
            raise InvalidParam(f"tap {self.tap!r} must name a CavityReflection element")

    def element(self, name: str) -> Element:
        return dict(self.elements)[name]


def solve_network(net: NetworkSpec, omega: float) -> complex:
    """Response of the tapped intracavity field to a unit-amplitude external input.

    Stacks all element input signals into x, assembles x = M(omega) x + e_in,
    solves the linear system, and applies the tap cavity's internal gain
    chi(omega) to its port signal.  Raises :class:`SingularLoop` when the
    reciprocal condition number of (I - M) falls below ``RCOND_SINGULAR``.
    """
    index: dict[Port, int] = {}
    for name, el in net.elements:
        for k in range(el.n_inputs):
            index[(name, k)] = len(index)
    n = len(index)

    M = np.zeros((n, n), dtype=complex)
    smats = {name: el.s_matrix(omega) for name, el in net.elements}
    for (src, p_out), dst_port in net.wiring:
        row = index[dst_port]
        s = smats[src]
        for j in range(s.shape[1]):
            M[row, index[(src, j)]] += s[p_out, j]

    b = np.zeros(n, dtype=complex)
    b[index[net.input_port]] = 1.0

    A = np.eye(n, dtype=complex) - M
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < RCOND_SINGULAR:
        raise SingularLoop(omega)
    x = np.linalg.solve(A, b)

    tap_el = net.element(net.tap)
    assert isinstance(tap_el, CavityReflection)
    return complex(tap_el.tap_gain(omega) * x[index[(net.tap, 0)]])


# ---------------------------------------------------------------------------
# Preset networks
# ---------------------------------------------------------------------------


def single_cavity_network(cav: OptoCavityParams) -> NetworkSpec:
    """The driven cavity alone; the solver then reproduces chi(omega)."""
    return NetworkSpec(
        elements=(("sys", CavityReflection(cav)),),
        wiring=(),
        input_port=("sys", 0),
        tap="sys",
    )


def _loop_network(cav, filt, tau, feed_output):
    # feed_output selects which controller output drives the cavity:
    # port 0 (reflection side) blocks the band at -delta_f, port 1
    # (transmission side) passes only that band.
    elements = [("ctrl", FilterTwoPort(filt)), ("sys", CavityReflection(cav))]
    wiring = [(("ctrl", feed_output), ("sys", 0))]
    if tau > 0:
        elements.append(("lag", DelayLine(tau)))
        wiring += [(("sys", 0), ("lag", 0)), (("lag", 0), ("ctrl", 1))]
    else:
        wiring.append((("sys", 0), ("ctrl", 1)))
    return NetworkSpec(
        elements=tuple(elements),
        wiring=tuple(wiring),
        input_port=("ctrl", 0),
        tap="sys",
    )


def notch_network(cav: OptoCavityParams, filt: FilterCavityParams, tau: float = 0.0) -> NetworkSpec:
    """Band-blocking loop: input -> controller port 1; the reflected output
    drives the cavity; the cavity output returns into controller port 2
    (through an optional delay) and leaves through the far side."""
    return _loop_network(cav, filt, tau, feed_output=0)


def bandpass_network(cav: OptoCavityParams, filt: FilterCavityParams, tau: float = 0.0) -> NetworkSpec:
    """Band-passing loop: as the band-blocking wiring but the transmitted
    output of the controller drives the cavity."""
    return _loop_network(cav, filt, tau, feed_output=1)


ResponseFn = Callable[[float], complex]
