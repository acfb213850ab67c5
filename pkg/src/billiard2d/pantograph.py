"""Exact dynamics for shape-preserving (pantographic) wall motion at constant
speed: closed-form solutions on the fixed disk, the boundary-contact energy
rate, and mean energy by quadrature.

The closed forms below hold for lambda(t) = 1 + kappa t only (zero wall
acceleration); DomainSpec cannot express accelerating dilations, so there is
no silent wrong-formula path -- general boundaries go through the grid
propagator in :mod:`billiard2d.oracle`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainSpec
from .specfun import (
    BesselMode,
    bessel_j,
    bessel_j_derivative,
    eigenmode_value,
    gauss_legendre,
)

__all__ = [
    "PantographicState",
    "alpha",
    "beta",
    "phi_exact",
    "psi_exact",
    "energy_rate",
    "mean_energy",
]


def alpha(spec: DomainSpec, t) -> float:
    """Quadratic phase coefficient mu * lam * lamdot / (2 hbar).

    Mode independent: every exact solution carries the same e^{i alpha r^2}
    dressing.
    """
    return spec.mu * spec.lam(t) * spec.kappa / (2.0 * spec.hbar)


def beta(mode: BesselMode, spec: DomainSpec, t, beta0: float = 0.0) -> float:
    """Accumulated mode phase beta0 - (E/hbar) * t / (1 + kappa t).

    Closed antiderivative of -E / (hbar lam(s)^2); reduces to the static-box
    phase beta0 - E t / hbar when kappa = 0.
    """
    t = np.asarray(t, dtype=float)
    return beta0 - (mode.energy / spec.hbar) * t / (1.0 + spec.kappa * t)


def phi_exact(mode: BesselMode, spec: DomainSpec, r, theta, t, beta0: float = 0.0):
    """Fixed-picture exact solution e^{i(alpha r^2 + beta)} chi_{mn}(r, theta)."""
    phase = alpha(spec, t) * np.asarray(r, dtype=float) ** 2 + beta(mode, spec, t, beta0)
    return np.exp(1j * phase) * eigenmode_value(mode, r, theta)


def psi_exact(mode: BesselMode, spec: DomainSpec, r, theta, t, beta0: float = 0.0):
    """Moving-picture solution; vanishes on the moving wall r = lam(t) r0."""
    lam = spec.lam(t)
    s = np.asarray(r, dtype=float) / lam
    phase = beta(mode, spec, t, beta0) + alpha(spec, t) * s**2
    return np.exp(1j * phase) * eigenmode_value(mode, s, theta) / lam


@dataclass(frozen=True)
class PantographicState:
    """Superposition over exact pantographic solutions with fixed weights.

    Amplitudes are constants of motion; only the phases alpha(t), beta_k(t)
    evolve.  Provides pointwise value and analytic derivatives of the
    fixed-picture wavefunction, which is what the energy diagnostics need.
    """

    modes: tuple
    amplitudes: tuple
    beta0: tuple = field(default=())

    def __post_init__(self):
        if len(self.modes) != len(self.amplitudes):
            raise ValueError("one amplitude per mode")
        if not self.beta0:
            object.__setattr__(self, "beta0", tuple(0.0 for _ in self.modes))
        total = sum(abs(a) ** 2 for a in self.amplitudes)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: sum |c|^2 = {total!r}")

    @staticmethod
    def single(mode: BesselMode) -> "PantographicState":
        return PantographicState((mode,), (1.0 + 0.0j,))

    @staticmethod
    def superposition(modes, amplitudes) -> "PantographicState":
        amps = np.asarray(amplitudes, dtype=complex)
        amps = amps / math.sqrt(float(np.sum(np.abs(amps) ** 2)))
        return PantographicState(tuple(modes), tuple(amps))

    def _phases(self, spec, t):
        return [beta(m, spec, t, b0) for m, b0 in zip(self.modes, self.beta0)]

    def value(self, spec: DomainSpec, r, theta, t):
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast(r, np.asarray(theta)).shape, dtype=complex)
        for mode, c, b in zip(self.modes, self.amplitudes, self._phases(spec, t)):
            out = out + c * np.exp(1j * b) * eigenmode_value(mode, r, theta)
        return out * np.exp(1j * alpha(spec, t) * r**2)

    def d_dr(self, spec: DomainSpec, r, theta, t):
        """Radial derivative, analytic: phase term plus k A J' e^{im theta}."""
        r = np.asarray(r, dtype=float)
        a = alpha(spec, t)
        base = np.zeros(np.broadcast(r, np.asarray(theta)).shape, dtype=complex)
        dbase = np.zeros_like(base)
        pref = (2.0 * math.pi) ** -0.5
        for mode, c, b in zip(self.modes, self.amplitudes, self._phases(spec, t)):
            ang = np.exp(1j * (mode.m * np.asarray(theta, dtype=float) + b))
            base = base + c * ang * pref * mode.norm * bessel_j(abs(mode.m), mode.k * r)
            dbase = dbase + c * ang * pref * mode.norm * mode.k * bessel_j_derivative(
                abs(mode.m), mode.k * r)
        return np.exp(1j * a * r**2) * (dbase + 2j * a * r * base)

    def d_dtheta(self, spec: DomainSpec, r, theta, t):
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast(r, np.asarray(theta)).shape, dtype=complex)
        for mode, c, b in zip(self.modes, self.amplitudes, self._phases(spec, t)):
            out = out + 1j * mode.m * c * np.exp(1j * b) * eigenmode_value(mode, r, theta)
        return out * np.exp(1j * alpha(spec, t) * r**2)


def energy_rate(state, spec: DomainSpec, t, ntheta: int = 512) -> float:
    """Boundary-contact energy rate for pantographic dilation.

    Edot = -(hbar^2 lamdot / (2 mu lam^3)) * int_0^{2pi} r0^2 |d_r phi|^2 dtheta
    evaluated on the fixed-disk rim.  The gradient at the rim comes from the
    state's analytic radial derivative (one-sided finite differences are
    ill-conditioned exactly where this integrand lives).  Nonpositive for a
    dilating box.
    """
    theta = np.arange(ntheta) * (2.0 * math.pi / ntheta)
    rim = np.abs(state.value(spec, spec.r0, theta, t))
    if rim.max() > 1e-8:
        warnings.warn(
            "state does not vanish on the fixed boundary; contact-term "
            "energy rate is meaningless", stacklevel=2)
    grad = state.d_dr(spec, np.full_like(theta, spec.r0), theta, t)
    integral = float(np.sum(np.abs(grad) ** 2) * (2.0 * math.pi / ntheta)) * spec.r0**2
    lam = float(spec.lam(t))
    pref = -(spec.hbar**2) * spec.kappa / (2.0 * spec.mu * lam**3)
    return pref * integral


def mean_energy(state, spec: DomainSpec, t, nr: int = 128, ntheta: int = 256) -> float:
    """<phi| -hbar^2/(2 mu lam^2) nabla^2 |phi> by quadrature.

    Computed in the integrated-by-parts form hbar^2/(2 mu lam^2) * int
    ||grad phi||^2 so only first derivatives of the state are needed.
    """
    rule = gauss_legendre(nr, 0.0, spec.r0)
    theta = np.arange(ntheta) * (2.0 * math.pi / ntheta)
    rr, tt = np.meshgrid(rule.nodes, theta, indexing="ij")
    dr = state.d_dr(spec, rr, tt, t)
    dth = state.d_dtheta(spec, rr, tt, t)
    dens = (np.abs(dr) ** 2 + np.abs(dth) ** 2 / rr**2) * rr
    integral = float((dens * rule.weights[:, None]).sum() * (2.0 * math.pi / ntheta))
    lam = float(spec.lam(t))
    return spec.hbar**2 / (2.0 * spec.mu * lam**2) * integral
