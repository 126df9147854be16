"""Dilute-instanton-gas closed forms for the n-well circle.

Tunneling between adjacent wells is carried by fractional instantons of
real action S = 8 omega / n^2 whose amplitudes interfere with phases
e^{+- i theta / n}. Summing the gas gives an n-level effective model whose
spectrum is

    E_k(theta) = omega/2 - 2 omega d cos((2 pi k + theta)/n),

with instanton density d = (4/n) e^{-S} sqrt(omega/pi). All real-time
quantities here descend from the single general-n amplitude sum

    <l'| e^{-i H t} |l> = (1/n) sum_k exp[i 2 pi k (l - l')/n - i E_k t];

the printed two- and three-well special cases live in the test suite as
oracles, not as separate code paths.

Quantities are dimensionless; multiply frequencies by 1/inertia_ns for
laboratory ns^-1 units.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from dataclasses import dataclass, field

from .model import HermitianOperator

__all__ = [
    "SemiclassicsError",
    "DigaPrediction",
    "instanton_quantities",
    "diga_spectrum",
    "diga_effective_hamiltonian",
    "diga_hop_amplitude",
    "diga_hop_probability",
    "diga_circle_expectations",
    "instanton_profile",
    "instanton_action_quadrature",
]


class SemiclassicsError(ValueError):
    """Parameters outside the domain of the semiclassical formulas."""


class DilutenessWarning(UserWarning):
    """The instanton action is too small for the gas to be dilute."""


def _check(n: int, omega: float):
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise SemiclassicsError(f"need at least two wells, got n={n!r}")
    if not (math.isfinite(omega) and omega > 0):
        raise SemiclassicsError(f"omega must be positive and finite, got {omega!r}")


def instanton_density(n: int, omega: float) -> float:
    """d = (4/n) exp(-8 omega/n^2) sqrt(omega/pi)."""
    _check(n, omega)
    return (4.0 / n) * math.exp(-8.0 * omega / n**2) * math.sqrt(omega / math.pi)


def diga_spectrum(n: int, omega: float, theta: float) -> np.ndarray:
    """The n energies E_k(theta), k = 0..n-1 in branch order (not sorted)."""
    _check(n, omega)
    d = instanton_density(n, omega)
    k = np.arange(n)
    return omega / 2.0 - 2.0 * omega * d * np.cos((2.0 * math.pi * k + theta) / n)


@dataclass(frozen=True)
class DigaPrediction:
    """Semiclassical outputs for one (n, omega, theta)."""

    n: int
    omega: float
    theta: float
    action_real: float
    density: float
    spectrum: np.ndarray
    chi_t: float

    def hopping_amplitude(self) -> complex:
        """Single-instanton amplitude omega * d * e^{i theta / n}."""
        return self.omega * self.density * np.exp(1j * self.theta / self.n)


def instanton_quantities(n: int, omega: float, theta: float = 0.0) -> DigaPrediction:
    """Action, density, n-branch spectrum, and topological susceptibility.

    chi_t = 2 omega d / n^2 is the curvature of E_0(theta) at theta = 0.
    Emits DilutenessWarning when the action 8 omega/n^2 drops below 1,
    where well-separated instantons are no longer a good description.
    """
    _check(n, omega)
    action = 8.0 * omega / n**2
    if action < 1.0:
        warnings.warn(
            f"instanton action {action:.3f} < 1: dilute-gas results are unreliable here",
            DilutenessWarning,
            stacklevel=2,
        )
    d = instanton_density(n, omega)
    return DigaPrediction(
        n=n,
        omega=omega,
        theta=theta,
        action_real=action,
        density=d,
        spectrum=diga_spectrum(n, omega, theta),
        chi_t=2.0 * omega * d / n**2,
    )


def diga_effective_hamiltonian(n: int, omega: float, theta: float) -> HermitianOperator:
    """The n-well effective model: (omega/2) I minus hops between adjacent
    wells with amplitude omega d e^{+- i theta/n} (cyclic, corners included).

    Its eigenvalues reproduce `diga_spectrum` identically.
    """
    _check(n, omega)
    d = instanton_density(n, omega)
    hop = omega * d * np.exp(1j * theta / n)  # I = omega d e^{i theta/n}
    H = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    # -Ibar on the superdiagonal (and corner), -I on the subdiagonal
    H[idx, (idx + 1) % n] += -np.conj(hop)
    H[(idx + 1) % n, idx] += -hop
    H[idx, idx] += omega / 2.0
    return HermitianOperator(H)


def diga_hop_amplitude(n: int, omega: float, theta: float, from_well: int,
                       to_well: int, t_dimless) -> np.ndarray:
    """<to| e^{-i H t} |from> from the general-n mode sum."""
    _check(n, omega)
    if not (0 <= from_well < n and 0 <= to_well < n):
        raise SemiclassicsError("well index out of range")
    t = np.asarray(t_dimless, dtype=float)
    E = diga_spectrum(n, omega, theta)
    k = np.arange(n)
    phase = np.exp(
        2j * math.pi * k[None, :] * (from_well - to_well) / n
        - 1j * np.outer(t, E)
    )
    return phase.sum(axis=1) / n


def diga_hop_probability(n: int, omega: float, theta: float, from_well: int,
                         to_well: int, t_dimless) -> np.ndarray:
    """|amplitude|^2 to find the particle in `to_well` at dimensionless time t."""
    amp = diga_hop_amplitude(n, omega, theta, from_well, to_well, t_dimless)
    out = np.abs(amp) ** 2
    return out if out.ndim else float(out)


def diga_circle_expectations(n: int, omega: float, theta: float, t_dimless):
    """<cos x> and <sin x> for evolution started in well 0.

    Computed from the amplitude sum for any theta; the high-symmetry
    printed forms (n = 3 at theta in {0, pi/2, pi}) are recovered exactly.
    """
    t = np.asarray(t_dimless, dtype=float)
    x_wells = 2.0 * math.pi * np.arange(n) / n
    probs = np.stack(
        [diga_hop_probability(n, omega, theta, 0, l, t) for l in range(n)], axis=-1
    )
    cos_x = probs @ np.cos(x_wells)
    sin_x = probs @ np.sin(x_wells)
    if cos_x.ndim == 0:
        return float(cos_x), float(sin_x)
    return cos_x, sin_x


def instanton_profile(tau, tau0: float, n: int, omega: float, sign: int = +1):
    """Classical tunneling path x(tau) = sign * (4/n) arctan(e^{omega (tau - tau0)}).

    Runs from 0 at tau -> -inf to sign * 2 pi / n at tau -> +inf; the
    crossover rate is n sqrt(lam) = omega.
    """
    _check(n, omega)
    if sign not in (+1, -1):
        raise SemiclassicsError("sign must be +1 (instanton) or -1 (anti-instanton)")
    tau = np.asarray(tau, dtype=float)
    out = sign * (4.0 / n) * np.arctan(np.exp(omega * (tau - tau0)))
    return out if out.ndim else float(out)


def instanton_action_quadrature(n: int, omega: float, half_width: float = 40.0) -> float:
    """Euclidean action of the instanton profile by quadrature (theta = 0).

    Integrates (1/2) xdot^2 + lam (1 - cos(n x)) along the classical path;
    the analytic value is 8 omega / n^2.
    """
    from scipy.integrate import quad

    _check(n, omega)
    lam = (omega / n) ** 2
    w = half_width / omega

    def integrand(tau):
        x = instanton_profile(tau, 0.0, n, omega)
        xdot = (4.0 / n) * omega * np.exp(omega * tau) / (1.0 + np.exp(2.0 * omega * tau))
        return 0.5 * xdot**2 + lam * (1.0 - np.cos(n * x))

    val, _ = quad(integrand, -w, w, limit=400)
    return float(val)
