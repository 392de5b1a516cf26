import math

import numpy as np
import pytest
from scipy import integrate

from rvqcdma.transforms import mp_support


def mp_quad(kbar, func):
    """E func(x) under the MP law, by algebraic-weight quadrature (independent oracle)."""
    s = mp_support(kbar)
    if s.a > 0:
        val, _ = integrate.quad(lambda x: func(x) / (2 * math.pi * x), s.a, s.b,
                                weight="alg", wvar=(0.5, 0.5), epsabs=1e-13, epsrel=1e-13, limit=200)
    else:
        # density sqrt(x (b - x)) / (2 pi x) = x^-1/2 (b - x)^1/2 / (2 pi)
        val, _ = integrate.quad(lambda x: func(x) / (2 * math.pi), 0.0, s.b,
                                weight="alg", wvar=(-0.5, 0.5), epsabs=1e-13, epsrel=1e-13, limit=200)
    return val + s.zero_mass * (func(0.0) if s.zero_mass > 0 else 0.0)


def random_logdet(profile, kbar, w, n=512, seed=0):
    """(1/N) log det(I + w S A S^H) for one draw with N = n, K = round(kbar n)."""
    rng = np.random.default_rng(seed)
    k = int(round(kbar * n))
    s = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2 * n)
    a = rng.choice(profile.p, size=k, p=profile.w)
    m = np.eye(n) + w * (s * a) @ s.conj().T
    sign, logdet = np.linalg.slogdet(m)
    return logdet / n


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines are collected here and echoed in the terminal summary so
# they show up in plain `pytest -v` output
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
