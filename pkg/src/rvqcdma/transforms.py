"""Spectral transforms of discrete power profiles and of S A S^H spectra.

Conventions: ``S`` is N x K with i.i.d. entries of variance 1/N, ``A`` is
diagonal with entries distributed as a :class:`PowerProfile` and
``kbar = K / N``.  All logarithms are natural.

The eta- and Shannon transforms of the N x N matrix ``S A S^H`` are obtained
through the fixed point

    kbar = (1 - theta) / (1 - eta_A(x * theta)),    theta = eta_{SAS}(x)

and, below the spectrum, through the equivalent Stieltjes form

    z = -1/m + kbar * E[A / (1 + A m)],             m = int dF(t) / (t - z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize

from .errors import NoConvergence, OutOfDomain

_XTOL = 1e-300
_RTOL = 4 * np.finfo(float).eps
_MAXITER = 10_000


@dataclass(frozen=True)
class PowerProfile:
    """Discrete distribution of received powers (atoms sorted by power)."""

    powers: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.powers) != len(self.weights) or not self.powers:
            raise OutOfDomain("profile needs at least one (power, weight) atom")
        p = np.asarray(self.powers, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise OutOfDomain("powers must be finite and >= 0")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise OutOfDomain("weights must be > 0")
        if abs(w.sum() - 1.0) > 1e-12:
            raise OutOfDomain(f"weights sum to {w.sum():.15g}, expected 1")
        if np.any(np.diff(p) <= 0):
            raise OutOfDomain("powers must be strictly increasing; use from_atoms")

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]], normalize=False):
        """Build a profile from ``(power, weight)`` pairs, merging duplicates."""
        merged: dict[float, float] = {}
        for power, weight in atoms:
            power = float(power)
            merged[power] = merged.get(power, 0.0) + float(weight)
        if not merged:
            raise OutOfDomain("profile needs at least one atom")
        powers = sorted(merged)
        weights = np.array([merged[p] for p in powers])
        if normalize:
            weights = weights / weights.sum()
        else:
            total = weights.sum()
            if abs(total - 1.0) > 1e-12:
                raise OutOfDomain(f"weights sum to {total:.15g}, expected 1")
            # absorb rounding so the stored weights sum to 1 to machine precision
            weights = weights / total
        return cls(tuple(powers), tuple(float(x) for x in weights))

    @classmethod
    def equal(cls, power=1.0):
        return cls((float(power),), (1.0,))

    @classmethod
    def from_text(cls, text: str):
        """Parse one ``power weight`` pair per line; ``#`` starts a comment."""
        atoms = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise OutOfDomain(f"line {lineno}: expected 'power weight', got {raw!r}")
            try:
                atoms.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise OutOfDomain(f"line {lineno}: non-numeric entry in {raw!r}") from None
        return cls.from_atoms(atoms)

    def to_text(self) -> str:
        lines = ["# power weight"]
        lines += [f"{p!r} {w!r}" for p, w in zip(self.powers, self.weights)]
        return "\n".join(lines) + "\n"

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.powers)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights)

    def mean(self) -> float:
        return float(np.dot(self.p, self.w))

    def positive_mass(self) -> float:
        return float(self.w[self.p > 0].sum())

    def scaled(self, factor: float) -> "PowerProfile":
        return PowerProfile.from_atoms(zip(self.p * factor, self.weights))


@dataclass(frozen=True)
class MpSupport:
    a: float
    b: float
    zero_mass: float


def mp_support(kbar: float) -> MpSupport:
    if kbar <= 0:
        raise OutOfDomain("kbar must be > 0")
    r = math.sqrt(kbar)
    return MpSupport((1 - r) ** 2, (1 + r) ** 2, max(0.0, 1 - kbar))


# -- transforms of the power profile itself --------------------------------


def eta_atoms(profile: PowerProfile, gamma: float) -> float:
    if gamma < 0:
        raise OutOfDomain("gamma must be >= 0")
    return float(np.dot(profile.w, 1.0 / (1.0 + gamma * profile.p)))


def shannon_atoms(profile: PowerProfile, gamma: float) -> float:
    if gamma < 0:
        raise OutOfDomain("gamma must be >= 0")
    return float(np.dot(profile.w, np.log1p(gamma * profile.p)))


# -- S A S^H spectrum --------------------------------------------------------


def theta_fixed_point(profile: PowerProfile, kbar: float, x: float, tol=1e-12) -> float:
    """eta-transform of the S A S^H spectrum at ``x``.

    The residual ``kbar*(1 - eta_A(x*theta)) - (1 - theta)`` is strictly
    increasing in theta, negative at the lower end of
    ``(max(0, 1 - kbar), 1]`` and nonnegative at 1, so a bracketed root
    search is unconditionally safe.
    """
    if kbar <= 0:
        raise OutOfDomain("kbar must be > 0")
    if x < 0:
        raise OutOfDomain("x must be >= 0")
    if x == 0:
        return 1.0
    p, w = profile.p, profile.w

    def residual(theta):
        return kbar * float(np.dot(w, (x * theta * p) / (1.0 + x * theta * p))) - (1.0 - theta)

    hi = 1.0
    if residual(hi) <= 0.0:
        # all powers zero (or x*p underflows): spectrum is a point mass at 0
        return 1.0
    lo = max(0.0, 1.0 - kbar)
    try:
        theta, info = optimize.brentq(
            residual, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=_MAXITER, full_output=True
        )
    except (ValueError, RuntimeError) as exc:
        raise NoConvergence(f"theta fixed point failed at x={x}: {exc}") from exc
    res = abs(residual(theta))
    if not info.converged or res > tol:
        raise NoConvergence(f"theta fixed point residual {res:.3g} at x={x}")
    return theta


def shannon_sas(profile: PowerProfile, kbar: float, w: float) -> float:
    """Shannon transform of the S A S^H spectrum."""
    if w < 0:
        raise OutOfDomain("w must be >= 0")
    if w == 0:
        return 0.0
    theta = theta_fixed_point(profile, kbar, w)
    return kbar * shannon_atoms(profile, w * theta) - math.log(theta) + theta - 1.0


def eta_sas(profile: PowerProfile, kbar: float, w: float) -> float:
    return theta_fixed_point(profile, kbar, w)


def _inverse_stieltjes(profile, kbar, m):
    # z(m) = -1/m + kbar * E[A / (1 + A m)], increasing on (0, m_edge)
    p, w = profile.p, profile.w
    return -1.0 / m + kbar * float(np.dot(w, p / (1.0 + p * m)))


def sas_lower_edge(profile: PowerProfile, kbar: float) -> tuple[float, float]:
    """Infimum of the S A S^H spectrum and the Stieltjes value there.

    Returns ``(edge, m_edge)``.  The edge is the critical value of the
    inverse Stieltjes map, where ``kbar * E[(A m / (1 + A m))^2] = 1``.
    When the effective load ``kbar * P(A > 0)`` is at most 1 the spectrum
    touches zero and ``m_edge`` is ``inf``.
    """
    p, w = profile.p, profile.w
    if kbar * profile.positive_mass() <= 1.0:
        return 0.0, math.inf

    def crit(m):
        r = p * m / (1.0 + p * m)
        return kbar * float(np.dot(w, r * r)) - 1.0

    hi = 1.0
    while crit(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise NoConvergence("could not bracket the spectral edge")
    m_edge = optimize.brentq(crit, 0.0, hi, xtol=_XTOL, rtol=_RTOL, maxiter=_MAXITER)
    edge = _inverse_stieltjes(profile, kbar, m_edge)
    return max(edge, 0.0), m_edge


def stieltjes_sas(profile: PowerProfile, kbar: float, z: float, edge=None) -> float:
    """Stieltjes transform ``int dF(t) / (t - z)`` of S A S^H for real ``z`` below the spectrum."""
    if edge is None:
        edge = sas_lower_edge(profile, kbar)
    lo_edge, m_edge = edge
    if z > lo_edge or (z == lo_edge and math.isinf(m_edge)):
        raise OutOfDomain(f"z={z} is not below the spectrum (edge {lo_edge})")
    if z == lo_edge:
        return m_edge
    mean = kbar * profile.mean()
    lo = 1.0 / (mean - z)
    hi = m_edge if z >= 0 else min(-1.0 / z, m_edge)
    f_lo = _inverse_stieltjes(profile, kbar, lo) - z
    if f_lo >= 0:
        return lo
    try:
        return optimize.brentq(
            lambda m: _inverse_stieltjes(profile, kbar, m) - z,
            lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=_MAXITER,
        )
    except (ValueError, RuntimeError) as exc:
        raise NoConvergence(f"Stieltjes solve failed at z={z}: {exc}") from exc


def log_potential_sas(profile: PowerProfile, kbar: float, t: float, edge=None) -> float:
    """``int log(t + x) dF_SAS(x)`` for ``t`` above minus the spectral edge.

    For ``t > 0`` this is ``log t + shannon_sas(1/t)``.  For ``t <= 0`` (only
    reachable when the spectrum is bounded away from zero) the Shannon
    formula is continued through the Stieltjes transform ``m = m(-t)``:
    ``-log m + kbar E log(1 + A m) + t m - 1``.
    """
    if t > 0:
        return math.log(t) + shannon_sas(profile, kbar, 1.0 / t)
    if edge is None:
        edge = sas_lower_edge(profile, kbar)
    if -t > edge[0] or math.isinf(edge[1]):
        raise OutOfDomain(f"log potential undefined at t={t} (edge {edge[0]})")
    m = stieltjes_sas(profile, kbar, -t, edge)
    return -math.log(m) + kbar * shannon_atoms(profile, m) + t * m - 1.0


# -- Marchenko-Pastur (equal unit powers) -----------------------------------


def mp_density(kbar: float, x: float) -> float:
    """Continuous part of the Marchenko-Pastur density of S S^H."""
    s = mp_support(kbar)
    if x <= s.a or x >= s.b or x <= 0:
        return 0.0
    return math.sqrt((x - s.a) * (s.b - x)) / (2 * math.pi * x)


def mp_stieltjes(kbar: float, y: float) -> float:
    """Closed-form Stieltjes transform of S S^H (zero atom included).

    Of the two roots of ``y m^2 + (y + 1 - kbar) m + 1 = 0`` the one with the
    minus sign in front of the square root is the physical branch for every
    real ``y`` below the support.
    """
    s = mp_support(kbar)
    if s.a <= y:
        raise OutOfDomain(f"y={y} is not below the support [{s.a}, {s.b}]")
    if y == 0:
        if kbar <= 1:
            raise OutOfDomain("y=0 hits the zero atom")
        return 1.0 / (kbar - 1.0)
    disc = math.sqrt(y * y - 2 * (kbar + 1) * y + (kbar - 1) ** 2)
    return (-1 + kbar - y - disc) / (2 * y)


def _wv_root(kbar, alpha):
    s = 1 + kbar + alpha
    disc = s * s - 4 * kbar
    if disc < 0:
        # alpha = -(1 - sqrt(kbar))^2 puts the root at zero; allow rounding there
        if disc < -1e-12 * s * s or s <= 0:
            raise OutOfDomain(f"alpha={alpha} lies inside the MP support")
        disc = 0.0
    return s, math.sqrt(disc)


def mp_w(kbar: float, alpha: float) -> float:
    s, root = _wv_root(kbar, alpha)
    return 0.5 * (s + root)


def mp_v(kbar: float, alpha: float) -> float:
    s, root = _wv_root(kbar, alpha)
    # rationalized form of (s - root) / 2, free of cancellation
    return 2 * kbar / (s + root)


def lemma1_log_integral(kbar: float, alpha: float) -> float:
    """``int log(x + alpha) f_MP(x) dx`` for ``kbar >= 1`` (closed form)."""
    if kbar < 1:
        raise OutOfDomain("closed form holds only for kbar >= 1")
    if alpha <= 0:
        raise OutOfDomain("alpha must be > 0")
    w, v = mp_w(kbar, alpha), mp_v(kbar, alpha)
    return math.log(w) - (kbar - 1) * math.log1p(-v / kbar) - v


def mp_expectation(kbar: float, func: Callable[[float], float], epsabs=1e-12, epsrel=1e-12):
    """Quadrature of ``func`` against the continuous MP part plus its zero atom.

    Uses ``x = a + (b - a) sin^2(u)`` so the square-root edges become smooth.
    The zero atom contributes ``zero_mass * func(0)`` only when it is present.
    """
    s = mp_support(kbar)
    span = s.b - s.a

    def integrand(u):
        x = s.a + span * math.sin(u) ** 2
        # density * dx/du with the sqrt((x-a)(b-x)) factor cancelled analytically
        return func(x) * (span * math.sin(u) * math.cos(u)) ** 2 / (math.pi * x)

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=epsabs, epsrel=epsrel, limit=500)
    if s.zero_mass > 0:
        val += s.zero_mass * func(0.0)
    return val
