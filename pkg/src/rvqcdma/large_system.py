"""Large-system interference and SINR of RVQ-selected signatures.

Every solver finds the feedback-limited value as the root of

    sup_rho  F(rho, value) = bbar * log(2)

where F is the log-moment function of the interference-plus-noise spectrum
(``psi_mf`` for the matched filter, ``phi_mmse`` for the MMSE receiver).
The inner supremum is concave in rho; the outer root is monotone in the
value.  Closed forms for equal powers and orthogonal interferers live next to
the general solvers and serve as independent checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import NoConvergence, OutOfDomain
from .transforms import (
    PowerProfile,
    log_potential_sas,
    mp_v,
    mp_w,
    sas_lower_edge,
    shannon_sas,
    stieltjes_sas,
    theta_fixed_point,
)

LOG2 = math.log(2.0)
RESIDUAL_TOL = 1e-10
MAX_ITER = 10_000
# log(rho / rho_max) search window for the inner maximization
_S_MIN = -80.0


class Ensemble(enum.Enum):
    IID_GAUSSIAN = "iid"
    ORTHOGONAL = "orthogonal"


class Regime(enum.Enum):
    INTERIOR = "interior"
    SATURATED = "saturated"


class ChannelKind(enum.Enum):
    IDEAL = "ideal"
    FLAT_RAYLEIGH = "flat"
    MULTIPATH = "multipath"


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind = ChannelKind.IDEAL
    path_vars: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind is ChannelKind.IDEAL:
            if self.path_vars:
                raise OutOfDomain("ideal channel takes no path variances")
            return
        if not self.path_vars:
            raise OutOfDomain("fading channel needs at least one path variance")
        if self.kind is ChannelKind.FLAT_RAYLEIGH and len(self.path_vars) != 1:
            raise OutOfDomain("flat Rayleigh channel has exactly one path")
        if any(not math.isfinite(v) or v <= 0 for v in self.path_vars):
            raise OutOfDomain("path variances must be finite and > 0")

    @classmethod
    def ideal(cls):
        return cls()

    @classmethod
    def flat(cls, var=1.0):
        return cls(ChannelKind.FLAT_RAYLEIGH, (float(var),))

    @classmethod
    def multipath(cls, path_vars):
        return cls(ChannelKind.MULTIPATH, tuple(float(v) for v in path_vars))

    @property
    def n_paths(self) -> int:
        return len(self.path_vars)

    @property
    def mean_gain(self) -> float:
        """E sum_l |h_l|^2 (1 for the ideal channel)."""
        return 1.0 if self.kind is ChannelKind.IDEAL else float(sum(self.path_vars))


@dataclass(frozen=True)
class ScenarioParams:
    kbar: float
    bbar: float
    noise_var: float
    desired_power: float = 1.0
    desired_gain: float = 1.0
    interferer_profile: PowerProfile = field(default_factory=PowerProfile.equal)
    ensemble: Ensemble = Ensemble.IID_GAUSSIAN

    def __post_init__(self):
        if not self.kbar > 0:
            raise OutOfDomain("kbar must be > 0")
        if not self.bbar >= 0:
            raise OutOfDomain("bbar must be >= 0")
        if not self.noise_var > 0:
            raise OutOfDomain("noise_var must be > 0")
        if not self.desired_power > 0:
            raise OutOfDomain("desired_power must be > 0")
        if not self.desired_gain > 0:
            raise OutOfDomain("desired_gain must be > 0")
        if self.ensemble is Ensemble.ORTHOGONAL and not self.kbar < 1:
            raise OutOfDomain("orthogonal interferers require 0 < kbar < 1")

    @classmethod
    def from_snr_db(cls, kbar, bbar, snr_db, **kwargs):
        """SNR is desired_power / noise_var in dB."""
        power = kwargs.get("desired_power", 1.0)
        return cls(kbar, bbar, power * 10 ** (-snr_db / 10), **kwargs)

    def with_bbar(self, bbar) -> "ScenarioParams":
        return _replace(self, bbar=bbar)

    @property
    def effective_power(self) -> float:
        return self.desired_power * self.desired_gain

    @property
    def single_user_sinr(self) -> float:
        return self.effective_power / self.noise_var


def _replace(obj, **changes):
    from dataclasses import replace

    return replace(obj, **changes)


@dataclass(frozen=True)
class AsymptoticResult:
    value: float
    rho_star: float
    bracket: tuple[float, float]
    residual: float
    iterations: int
    regime: Regime = Regime.INTERIOR
    # distance to the unlimited-feedback limit, |value - limit|, kept exactly
    limit_gap: float = math.nan


# -- fading ------------------------------------------------------------------


def _gain_cdf_and_partial_mean(path_vars):
    """CDF and partial first moment of sum_l |h_l|^2, h_l ~ CN(0, v_l)."""
    v = np.asarray(path_vars, dtype=float)
    if np.all(v == v[0]):
        shape, scale = len(v), v[0]
        dist, dist1 = stats.gamma(shape, scale=scale), stats.gamma(shape + 1, scale=scale)
        return dist.cdf, lambda g: shape * scale * dist1.cdf(g)
    if len(np.unique(v)) != len(v):
        raise OutOfDomain("path variances must be all equal or all distinct")
    # hypoexponential: partial-fraction weights of prod_l 1 / (1 + s v_l)
    c = np.array([np.prod([vl / (vl - vj) for j, vj in enumerate(v) if j != l]) for l, vl in enumerate(v)])

    def cdf(g):
        return float(np.dot(c, -np.expm1(-g / v)))

    def partial_mean(g):
        if math.isinf(g):
            return float(np.dot(c, v))
        return float(np.dot(c, v - np.exp(-g / v) * (g + v)))

    return cdf, partial_mean


def gain_quantization(channel: ChannelModel, points: int) -> np.ndarray:
    """Equal-probability atoms of the combined gain sum_l |h_l|^2.

    Each atom is the conditional mean of the gain over one of ``points``
    quantile bins, so the quantized law keeps the exact mean.
    """
    if points < 1:
        raise OutOfDomain("quantization_points must be >= 1")
    mean = channel.mean_gain
    if channel.kind is ChannelKind.IDEAL:
        return np.array([1.0])
    if points == 1:
        return np.array([mean])
    cdf, partial_mean = _gain_cdf_and_partial_mean(channel.path_vars)
    edges = [0.0]
    for j in range(1, points):
        target = j / points
        hi = max(edges[-1], mean)
        while cdf(hi) < target:
            hi *= 2.0
        edges.append(optimize.brentq(lambda g: cdf(g) - target, edges[-1], hi, xtol=1e-14, rtol=1e-14))
    edges.append(math.inf)
    pm = np.array([partial_mean(e) if e > 0 else 0.0 for e in edges])
    atoms = np.diff(pm) * points
    # rounding can leave the quantized mean off by a few ulps; keep it exact
    return atoms * (mean / atoms.mean())


def fold_fading(base_powers: PowerProfile, channel: ChannelModel, quantization_points: int = 64) -> PowerProfile:
    """Fold per-user fading gains into the interferer power profile."""
    if channel.kind is ChannelKind.IDEAL:
        if quantization_points < 1:
            raise OutOfDomain("quantization_points must be >= 1")
        return base_powers
    gains = gain_quantization(channel, quantization_points)
    atoms = [(a * g, w / len(gains)) for a, w in zip(base_powers.powers, base_powers.weights) for g in gains]
    return PowerProfile.from_atoms(atoms, normalize=True)


# -- interference spectrum -----------------------------------------------------


class _IidSpectrum:
    """Limit spectrum of S A S^H with i.i.d. signatures."""

    def __init__(self, profile: PowerProfile, kbar: float):
        self.profile = profile
        self.kbar = kbar
        self.edge, self.m_edge = sas_lower_edge(profile, kbar)
        self.mean = kbar * profile.mean()

    def shannon(self, w):
        return shannon_sas(self.profile, self.kbar, w)

    def eta(self, w):
        return theta_fixed_point(self.profile, self.kbar, w)

    def log_potential(self, t):
        return log_potential_sas(self.profile, self.kbar, t, (self.edge, self.m_edge))

    def stieltjes(self, z):
        return stieltjes_sas(self.profile, self.kbar, z, (self.edge, self.m_edge))


class _DiscreteSpectrum:
    """Spectrum with finitely many atoms (orthogonal interferers)."""

    def __init__(self, taus, omegas):
        self.taus = np.asarray(taus, dtype=float)
        self.omegas = np.asarray(omegas, dtype=float)
        self.edge = float(self.taus.min())
        self.m_edge = math.inf
        self.mean = float(np.dot(self.taus, self.omegas))

    def shannon(self, w):
        return float(np.dot(self.omegas, np.log1p(w * self.taus)))

    def eta(self, w):
        return float(np.dot(self.omegas, 1.0 / (1.0 + w * self.taus)))

    def log_potential(self, t):
        arg = t + self.taus
        if np.any(arg <= 0):
            raise OutOfDomain(f"log potential undefined at t={t}")
        return float(np.dot(self.omegas, np.log(arg)))

    def stieltjes(self, z):
        if z >= self.edge:
            raise OutOfDomain(f"z={z} is not below the spectrum")
        return float(np.dot(self.omegas, 1.0 / (self.taus - z)))


def interference_spectrum(scenario: ScenarioParams):
    prof, kbar = scenario.interferer_profile, scenario.kbar
    if scenario.ensemble is Ensemble.IID_GAUSSIAN:
        return _IidSpectrum(prof, kbar)
    # S^H S = I: nonzero eigenvalues of S A S^H are the powers themselves
    taus = np.concatenate([[0.0], prof.p])
    omegas = np.concatenate([[1.0 - kbar], kbar * prof.w])
    return _DiscreteSpectrum(taus, omegas)


def lambda_min(scenario: ScenarioParams, spectrum=None) -> float:
    """Infimum of the limiting spectrum of R_1."""
    spectrum = spectrum or interference_spectrum(scenario)
    return scenario.noise_var + spectrum.edge


def mean_interference(scenario: ScenarioParams) -> float:
    return scenario.noise_var + scenario.kbar * scenario.interferer_profile.mean()


# -- matched filter ------------------------------------------------------------


def _psi_q(spectrum, gap, q):
    """psi_mf at I = lambda_min + gap and rho = q / gap, for 0 < q <= 1."""
    if not 0 < q < 1 and not (q == 1 and math.isfinite(spectrum.m_edge)):
        raise OutOfDomain(f"rho*(I - lambda_min) = {q} outside (0, 1)")
    rho = q / gap
    u = 1.0 - q - rho * spectrum.edge  # 1 + rho*(noise_var - I)
    if u > 0:
        return math.log(u) + spectrum.shannon(rho / u)
    return math.log(rho) + spectrum.log_potential((1.0 - q) / rho - spectrum.edge)


def psi_mf(scenario: ScenarioParams, rho: float, I: float, spectrum=None) -> float:
    """``E log(1 + rho (lambda - I))`` over the limiting spectrum of R_1.

    Defined for ``0 <= rho < 1/(I - lambda_min)``.  Where
    ``u = 1 + rho*(noise_var - I) > 0`` this equals
    ``log(u) + nu_SAS(rho/u)``; beyond that point (possible only when the
    interference spectrum is bounded away from zero) the log potential of the
    spectrum continues it.
    """
    spectrum = spectrum or interference_spectrum(scenario)
    if rho < 0:
        raise OutOfDomain("rho must be >= 0")
    if rho == 0:
        return 0.0
    gap = I - scenario.noise_var - spectrum.edge
    if gap <= 0:
        raise OutOfDomain(f"I={I} must exceed lambda_min")
    return _psi_q(spectrum, gap, rho * gap)


def _maximize_q(func):
    """Maximize a unimodal function of q on (0, 1); returns (value, q*).

    Searches in log q so arbitrarily small maximizers keep relative accuracy.
    """

    def neg(s):
        try:
            return -func(math.exp(s))
        except OutOfDomain:
            return math.inf

    res = optimize.minimize_scalar(neg, bounds=(_S_MIN, 0.0), method="bounded",
                                   options={"xatol": 1e-11, "maxiter": 500})
    value = -res.fun
    if not np.isfinite(value):
        raise NoConvergence("inner maximization found no finite value")
    if value <= 0.0:
        return 0.0, 0.0
    return value, math.exp(res.x)


def _psi_star(spectrum, gap):
    """(sup_rho psi_mf, rho*, regime) at I = lambda_min + gap."""
    if math.isfinite(spectrum.m_edge) and gap * spectrum.m_edge <= 1.0:
        # d psi / d rho >= 0 at the boundary: supremum sits on it
        return spectrum.log_potential(-spectrum.edge) - math.log(gap), 1.0 / gap, Regime.SATURATED
    value, q = _maximize_q(lambda q: _psi_q(spectrum, gap, q))
    return value, q / gap, Regime.INTERIOR


def _solve_gap(sup_of_gap, target, gap_hi, xtol=1e-13):
    """Root of ``sup_of_gap(gap) = target`` for a sup decreasing in the gap.

    Works in ``s = log(gap)`` so that exponentially small gaps are resolved to
    full relative precision.  Returns (gap, iterations).
    """
    s_hi = math.log(gap_hi)
    step = 1.0
    s_lo = s_hi - step
    iterations = 0
    while sup_of_gap(math.exp(s_lo)) <= target:
        iterations += 1
        step *= 2.0
        s_lo = s_hi - step
        if step > 1e4:
            raise NoConvergence("could not bracket the feedback fixed point")
    s, info = optimize.brentq(lambda s: sup_of_gap(math.exp(s)) - target, s_lo, s_hi,
                              xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER,
                              full_output=True)
    if not info.converged:
        raise NoConvergence("outer root search did not converge")
    return math.exp(s), iterations + info.iterations


def solve_mf_interference(scenario: ScenarioParams) -> AsymptoticResult:
    """Large-system interference power after RVQ selection (matched filter)."""
    spectrum = interference_spectrum(scenario)
    lam_min = lambda_min(scenario, spectrum)
    i_mean = scenario.noise_var + spectrum.mean
    target = scenario.bbar * LOG2
    if target == 0:
        return AsymptoticResult(i_mean, 0.0, (lam_min, i_mean), 0.0, 0, limit_gap=i_mean - lam_min)

    gap, iters = _solve_gap(lambda g: _psi_star(spectrum, g)[0], target, i_mean - lam_min)
    psi, rho, regime = _psi_star(spectrum, gap)
    residual = psi - target
    if abs(residual) > RESIDUAL_TOL:
        raise NoConvergence(f"matched-filter residual {residual:.3g}")
    return AsymptoticResult(lam_min + gap, rho, (lam_min, i_mean), residual, iters, regime, gap)


def mf_sinr(scenario: ScenarioParams, I_infinity: float) -> float:
    if not I_infinity > 0:
        raise OutOfDomain("interference must be > 0")
    return scenario.effective_power / I_infinity


def mf_bstar(kbar: float) -> float:
    """Feedback threshold of the saturated matched-filter regime (equal powers)."""
    if kbar <= 1:
        return math.inf
    r = math.sqrt(kbar)
    return (-kbar * math.log1p(-1.0 / r) - r) / LOG2


def mf_closed_form_equal_power(kbar: float, bbar: float, noise_var: float) -> AsymptoticResult:
    """Equal unit powers, i.i.d. interferers: explicit/implicit closed form."""
    if kbar <= 0 or bbar < 0 or noise_var <= 0:
        raise OutOfDomain("need kbar > 0, bbar >= 0, noise_var > 0")
    r = math.sqrt(kbar)
    edge = (1 - r) ** 2 if kbar > 1 else 0.0
    bracket = (noise_var + edge, noise_var + kbar)
    if kbar > 1 and bbar > mf_bstar(kbar):
        gap = r * (1 - 1 / r) ** (1 - kbar) * math.exp(-r - bbar * LOG2)
        return AsymptoticResult(noise_var + edge + gap, 1.0 / gap, bracket, 0.0, 0, Regime.SATURATED, gap)
    if bbar == 0:
        return AsymptoticResult(noise_var + kbar, 0.0, bracket, 0.0, 0, limit_gap=kbar - edge)

    # Q = kbar exp((Q - kbar)/kbar) 2^(-bbar/kbar), written in log form
    def h(q):
        return math.log(q) - math.log(kbar) - (q - kbar) / kbar + bbar * LOG2 / kbar

    # h(kbar) = bbar log2/kbar > 0; h -> -inf as q -> 0
    lo = kbar * 2.0 ** (-bbar / kbar) * math.exp(-1.0) * 0.5
    q, info = optimize.brentq(h, lo, kbar, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                              maxiter=MAX_ITER, full_output=True)
    if not info.converged:
        raise NoConvergence("closed-form Q equation did not converge")
    return AsymptoticResult(noise_var + q, kbar / q - 1.0, bracket, h(q), info.iterations,
                            limit_gap=q - edge)


def mf_orthogonal(kbar: float, bbar: float, noise_var: float) -> AsymptoticResult:
    """Orthogonal equal-power interferers, 0 < kbar < 1."""
    if not 0 < kbar < 1:
        raise OutOfDomain("orthogonal interferers require 0 < kbar < 1")
    if bbar < 0 or noise_var <= 0:
        raise OutOfDomain("need bbar >= 0 and noise_var > 0")
    bracket = (noise_var, noise_var + kbar)
    if bbar == 0:
        return AsymptoticResult(noise_var + kbar, 0.0, bracket, 0.0, 0, limit_gap=kbar)
    base = kbar * math.log(kbar) + (1 - kbar) * math.log1p(-kbar)

    # x = I - noise_var on (0, kbar], where the left side is increasing
    def h(x):
        return kbar * math.log(x) + (1 - kbar) * math.log1p(-x) - base + bbar * LOG2

    lo = kbar
    while h(lo) >= 0:
        lo *= 0.5
    x, info = optimize.brentq(h, lo, kbar, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                              maxiter=MAX_ITER, full_output=True)
    return AsymptoticResult(noise_var + x, (kbar - x) / (x * (1 - x)), bracket, h(x), info.iterations,
                            limit_gap=x)


# -- MMSE receiver -----------------------------------------------------------


def _phi_q(spectrum, sigma2, power, gap, q):
    """phi_mmse at beta = beta_max - gap and rho = q / gap, for 0 < q <= 1."""
    if not 0 < q < 1 and not (q == 1 and math.isfinite(spectrum.m_edge)):
        raise OutOfDomain(f"rho*(beta_max - beta) = {q} outside (0, 1)")
    lam = sigma2 + spectrum.edge
    bmax = power / lam
    rho = q / gap
    beta = bmax - gap
    # c = 1 + rho*(beta - power/sigma2); c > 0 iff zeta > 0
    c = 1.0 - q - rho * bmax * spectrum.edge / sigma2
    if c > 0:
        zeta = (1.0 + rho * beta) / (sigma2 * c)
        return spectrum.shannon(zeta) - spectrum.shannon(1.0 / sigma2) + math.log(c)
    t = lam * (1.0 - q) / (1.0 + rho * beta) - spectrum.edge
    return math.log1p(rho * beta) + spectrum.log_potential(t) - spectrum.log_potential(sigma2)


def phi_mmse(scenario: ScenarioParams, rho: float, beta: float, spectrum=None) -> float:
    """``E log(1 + rho (beta - P / lambda))`` over the limiting spectrum of R_1.

    ``P`` is the desired user's effective power.  Defined for
    ``0 <= rho < 1/(beta_max - beta)``; equals
    ``nu(zeta) - nu(1/noise_var) + log(1 + rho (beta - P/noise_var))`` while
    the last argument is positive.
    """
    spectrum = spectrum or interference_spectrum(scenario)
    if rho < 0:
        raise OutOfDomain("rho must be >= 0")
    if rho == 0:
        return 0.0
    gap = beta_max(scenario, spectrum) - beta
    if gap <= 0:
        raise OutOfDomain("beta must be below beta_max")
    return _phi_q(spectrum, scenario.noise_var, scenario.effective_power, gap, rho * gap)


def beta_max(scenario: ScenarioParams, spectrum=None) -> float:
    """SINR with unlimited feedback: P / lambda_min(R_1)."""
    return scenario.effective_power / lambda_min(scenario, spectrum)


def random_signature_mmse_baseline(scenario: ScenarioParams, spectrum=None) -> float:
    """Large-system MMSE SINR of a random signature (zero feedback)."""
    spectrum = spectrum or interference_spectrum(scenario)
    sigma2 = scenario.noise_var
    return scenario.effective_power / sigma2 * spectrum.eta(1.0 / sigma2)


def _phi_star(scenario, spectrum, gap, cache):
    """(sup_rho phi_mmse, rho*, regime) at beta = beta_max - gap."""
    power, sigma2 = scenario.effective_power, scenario.noise_var
    bmax = power / (sigma2 + spectrum.edge)
    m = spectrum.m_edge
    # boundary derivative >= 0  <=>  beta >= P m bmax / (bmax + P m)
    if math.isfinite(m) and gap * (bmax + power * m) <= bmax * bmax:
        if "sat" not in cache:
            cache["sat"] = spectrum.log_potential(-spectrum.edge) - spectrum.log_potential(sigma2)
        return math.log(bmax / gap) + cache["sat"], 1.0 / gap, Regime.SATURATED
    value, q = _maximize_q(lambda q: _phi_q(spectrum, sigma2, power, gap, q))
    return value, q / gap, Regime.INTERIOR


def solve_mmse_sinr(scenario: ScenarioParams) -> AsymptoticResult:
    """Large-system MMSE SINR after RVQ selection."""
    spectrum = interference_spectrum(scenario)
    bmax = beta_max(scenario, spectrum)
    base = random_signature_mmse_baseline(scenario, spectrum)
    target = scenario.bbar * LOG2
    if target == 0:
        return AsymptoticResult(base, 0.0, (base, bmax), 0.0, 0, limit_gap=bmax - base)
    cache: dict = {}
    gap, iters = _solve_gap(lambda g: _phi_star(scenario, spectrum, g, cache)[0], target, bmax - base)
    phi, rho, regime = _phi_star(scenario, spectrum, gap, cache)
    residual = phi - target
    if abs(residual) > RESIDUAL_TOL:
        raise NoConvergence(f"MMSE residual {residual:.3g}")
    return AsymptoticResult(bmax - gap, rho, (base, bmax), residual, iters, regime, gap)


def mmse_equal_power_baseline(kbar: float, noise_var: float) -> float:
    """Random-signature MMSE SINR for equal unit powers (Tse-Hanly quadratic)."""
    b = kbar - 1 + noise_var
    return (-b + math.sqrt(b * b + 4 * noise_var)) / (2 * noise_var)


def mmse_beta_star(kbar: float, noise_var: float) -> float:
    """SINR at which the optimal rho reaches its upper limit (kbar > 1)."""
    d = kbar - math.sqrt(kbar)
    return (d + noise_var) / (d * d + 2 * noise_var * d + noise_var ** 2)


def mmse_bstar(kbar: float, noise_var: float) -> float:
    """Feedback threshold of the saturated MMSE regime (equal powers)."""
    if kbar <= 1:
        return math.inf
    r = math.sqrt(kbar)
    w, v = mp_w(kbar, noise_var), mp_v(kbar, noise_var)
    return (math.log(kbar - r + noise_var) + kbar * math.log(r) - kbar * math.log(r - 1) - r
            - math.log(w) + (kbar - 1) * math.log1p(-v / kbar) + v) / LOG2


def _mmse_equal_power_rho(kbar, noise_var, beta):
    return kbar / (beta * (1 - beta * noise_var)) - 1 / beta ** 2 - 1 / beta


def mmse_equal_power_phi(kbar: float, noise_var: float, beta: float) -> float:
    """Closed-form sup_rho Phi on the interior branch (equal unit powers)."""
    s2 = noise_var
    p = (1 - beta * s2) / (kbar * beta - 1 + beta * s2) - 1 / beta + s2
    head = math.log(kbar / (1 - beta * s2) - 1 / beta)
    wp, ws, vp, vs = mp_w(kbar, p), mp_w(kbar, s2), mp_v(kbar, p), mp_v(kbar, s2)
    if kbar > 1:
        return (head + math.log(wp / ws) - (kbar - 1) * math.log((kbar - vp) / (kbar - vs))
                - vp + vs)
    return (head + (1 - kbar) * math.log(p / s2) + kbar * math.log(wp / ws)
            - (1 - kbar) * math.log((1 - vp) / (1 - vs)) - vp + vs)


def mmse_equal_power(kbar: float, bbar: float, noise_var: float) -> AsymptoticResult:
    """Equal unit powers, i.i.d. interferers: three-branch closed form."""
    if kbar <= 0 or bbar < 0 or noise_var <= 0:
        raise OutOfDomain("need kbar > 0, bbar >= 0, noise_var > 0")
    r = math.sqrt(kbar)
    bmax = 1.0 / (noise_var + ((1 - r) ** 2 if kbar > 1 else 0.0))
    base = mmse_equal_power_baseline(kbar, noise_var)
    bracket = (base, bmax)
    if bbar == 0:
        return AsymptoticResult(base, 0.0, bracket, 0.0, 0, limit_gap=bmax - base)
    if kbar > 1 and bbar > mmse_bstar(kbar, noise_var):
        w, v = mp_w(kbar, noise_var), mp_v(kbar, noise_var)
        expo = (0.5 * kbar * math.log(kbar) - (kbar - 1) * math.log((kbar * r - kbar) / (kbar - v))
                - math.log(w) + v - r)
        gap = bmax * 2.0 ** (-bbar) * math.exp(expo)
        return AsymptoticResult(bmax - gap, 1.0 / gap, bracket, 0.0, 0, Regime.SATURATED, gap)

    target = bbar * LOG2
    hi = mmse_beta_star(kbar, noise_var) if kbar > 1 else bmax

    def h(gap):
        return mmse_equal_power_phi(kbar, noise_var, hi - gap) - target

    # solve in the gap to the upper end so that beta -> beta_max stays resolved
    gap_hi = hi - base
    if kbar > 1:
        # bbar <= bbar*: the interior branch reaches the target by beta*
        gap_lo = 0.0
    else:
        gap_lo = gap_hi
        while h(gap_lo) <= 0:
            gap_lo *= 0.5
    gap, info = optimize.brentq(h, gap_lo, gap_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=MAX_ITER, full_output=True)
    iterations = info.iterations
    beta = hi - gap
    return AsymptoticResult(beta, _mmse_equal_power_rho(kbar, noise_var, beta), bracket, h(gap), iterations,
                            limit_gap=bmax - hi + gap)


def mmse_orthogonal(kbar: float, bbar: float, noise_var: float, A1: float = 1.0) -> AsymptoticResult:
    """Orthogonal equal (unit) power interferers, 0 < kbar < 1."""
    if not 0 < kbar < 1:
        raise OutOfDomain("orthogonal interferers require 0 < kbar < 1")
    if bbar < 0 or noise_var <= 0 or A1 <= 0:
        raise OutOfDomain("need bbar >= 0, noise_var > 0, A1 > 0")
    s2 = noise_var
    bmax = A1 / s2
    # B = 0 root is the maximizer of the left side
    base = A1 * (kbar / (1 + s2) + (1 - kbar) / s2)
    bracket = (base, bmax)
    rhs0 = kbar * math.log(A1 * kbar / (1 + s2)) + (1 - kbar) * math.log(A1 * (1 - kbar) / s2)

    def rho_of(gap):
        # from u1 = kbar*D/gap with u1 = 1 + rho*(beta - A1/(1+s2))
        d = A1 / (s2 * (1 + s2))
        return (kbar * d / gap - 1) / (bmax - gap - A1 / (1 + s2))

    if bbar == 0:
        return AsymptoticResult(base, 0.0, bracket, 0.0, 0, limit_gap=bmax - base)
    # left side decreases from its maximum at base to 0 at bmax; g(gap_hi) = bbar log2 > 0
    gap_hi = bmax - base

    def g(gap):
        # A1 - beta*s2 = gap*s2 exactly; keeps tiny gaps resolved
        y = gap * s2
        return kbar * math.log(y) + (1 - kbar) * math.log(bmax - gap - y) - rhs0 + bbar * LOG2

    gap_lo = gap_hi
    while g(gap_lo) >= 0:
        gap_lo *= 0.5
    gap, info = optimize.brentq(g, gap_lo, gap_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=MAX_ITER, full_output=True)
    beta = bmax - gap
    return AsymptoticResult(beta, rho_of(gap), bracket, g(gap), info.iterations, limit_gap=gap)
