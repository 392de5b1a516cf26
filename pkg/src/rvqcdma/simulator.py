"""Finite-size Monte Carlo for RVQ signature selection in DS-CDMA.

One trial draws interfering signatures, channel matrices for every user and
a fresh RVQ codebook, then picks the codeword that maximizes the desired
user's SINR (exhaustive search) and records that SINR.

Per-trial random streams come from ``np.random.SeedSequence(master_seed,
spawn_key=(trial,))`` so a trial's draws depend only on the master seed and
its index, never on execution order.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import BudgetExceeded, OutOfDomain, Singular
from .large_system import ChannelKind, ChannelModel, Ensemble

DEFAULT_MAX_BITS = 24
# codewords evaluated per block; bounds memory for large B
_BLOCK = 1 << 14


class Receiver(enum.Enum):
    MATCHED_FILTER = "mf"
    MMSE = "mmse"


class Objective(enum.Enum):
    MAX_SINR = "max_sinr"
    MIN_INTERFERENCE = "min_interference"


@dataclass(frozen=True)
class SimConfig:
    n: int
    k: int
    b: int
    noise_var: float
    powers: tuple[float, ...]
    channel: ChannelModel = field(default_factory=ChannelModel.ideal)
    ensemble: Ensemble = Ensemble.IID_GAUSSIAN
    receiver: Receiver = Receiver.MMSE
    trials: int = 1000
    master_seed: int = 0
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if self.n < 1 or self.k < 1:
            raise OutOfDomain("n and k must be >= 1")
        if self.b < 0:
            raise OutOfDomain("b must be >= 0")
        if len(self.powers) != self.k:
            raise OutOfDomain(f"expected {self.k} powers, got {len(self.powers)}")
        if any(not p > 0 for p in self.powers):
            raise OutOfDomain("powers must be > 0")
        if not self.noise_var > 0:
            raise OutOfDomain("noise_var must be > 0")
        if self.trials < 1:
            raise OutOfDomain("trials must be >= 1")
        if self.ensemble is Ensemble.ORTHOGONAL and self.k - 1 > self.n:
            raise OutOfDomain("orthogonal interferers need k - 1 <= n")
        if self.channel.n_paths > self.n:
            raise OutOfDomain("more channel paths than chips")
        if not 0 <= self.master_seed < 2 ** 64:
            raise OutOfDomain("master_seed must be an unsigned 64-bit integer")

    @classmethod
    def equal_power(cls, n, k, b, noise_var, power=1.0, **kwargs):
        return cls(n, k, b, noise_var, (power,) * k, **kwargs)

    def digest(self) -> str:
        """Short stable identifier of everything that determines the result."""
        text = repr((self.n, self.k, self.b, self.noise_var, self.powers, self.channel.kind.value,
                     self.channel.path_vars, self.ensemble.value, self.receiver.value,
                     self.trials, self.master_seed))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrialEstimate:
    mean_sinr: float
    std_error: float
    trials: int
    config_digest: str
    master_seed: int


@dataclass(frozen=True)
class Codebook:
    """RVQ codebook stored column-wise as an N x 2^B array."""

    vectors: np.ndarray

    @classmethod
    def random(cls, n, b, rng, count=None):
        count = 2 ** b if count is None else count
        v = complex_gaussian(rng, (n, count))
        return cls(v / np.linalg.norm(v, axis=0))

    @property
    def size(self) -> int:
        return self.vectors.shape[1]


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def complex_gaussian(rng, shape, var=1.0):
    """Circular complex Gaussian with E|z|^2 = var."""
    scale = math.sqrt(var / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def gen_signatures(config: SimConfig, rng) -> np.ndarray:
    """N x (K-1) interfering signatures with unit-norm columns."""
    n, m = config.n, config.k - 1
    if config.ensemble is Ensemble.ORTHOGONAL:
        if m > n:
            raise OutOfDomain("orthogonal interferers need k - 1 <= n")
        g = complex_gaussian(rng, (n, m))
        q, r = np.linalg.qr(g)
        # fix the phase ambiguity so the columns are Haar distributed
        d = np.diagonal(r)
        return q * (d / np.abs(d))
    s = complex_gaussian(rng, (n, m), 1.0 / n)
    return s / np.linalg.norm(s, axis=0)


def build_channel(config: SimConfig, rng) -> np.ndarray:
    """Lower-banded Toeplitz channel matrix of one user."""
    n = config.n
    ch = config.channel
    if ch.kind is ChannelKind.IDEAL:
        return np.eye(n, dtype=complex)
    if ch.n_paths > n:
        raise OutOfDomain("more channel paths than chips")
    taps = complex_gaussian(rng, ch.n_paths) * np.sqrt(ch.path_vars)
    if ch.kind is ChannelKind.FLAT_RAYLEIGH:
        return taps[0] * np.eye(n, dtype=complex)
    h = np.zeros((n, n), dtype=complex)
    for lag, tap in enumerate(taps):
        idx = np.arange(n - lag)
        h[idx + lag, idx] = tap
    return h


def interference_covariance(S1, powers, channels, noise_var) -> np.ndarray:
    """R_1 = sum_k A_k (H_k s_k)(H_k s_k)^H + noise_var I."""
    n = S1.shape[0]
    r = noise_var * np.eye(n, dtype=complex)
    if S1.shape[1] == 0:
        return r
    eff = np.column_stack([h @ S1[:, i] for i, h in enumerate(channels)])
    r += (eff * np.asarray(powers, dtype=float)) @ eff.conj().T
    return 0.5 * (r + r.conj().T)


class MatchedFilterEvaluator:
    """Batched SINR of a matched filter for candidate signatures (columns)."""

    def __init__(self, H1, R1, A1):
        self.A1 = float(A1)
        self.gram = H1.conj().T @ H1
        self.quad = H1.conj().T @ R1 @ H1

    def _forms(self, V):
        energy = np.einsum("ij,ij->j", V.conj(), self.gram @ V).real
        quad = np.einsum("ij,ij->j", V.conj(), self.quad @ V).real
        return energy, quad

    def sinr(self, V):
        energy, quad = self._forms(V)
        return self.A1 * energy ** 2 / quad

    def interference(self, V):
        energy, quad = self._forms(V)
        return quad / energy ** 2


class MmseEvaluator:
    """Batched MMSE SINR; R_1 is factorized once at construction."""

    def __init__(self, H1, R1, A1):
        self.A1 = float(A1)
        try:
            chol = linalg.cholesky(R1, lower=True)
        except linalg.LinAlgError as exc:
            raise Singular("interference covariance is not positive definite") from exc
        # whitened channel L^-1 H_1: one solve per instance, one product per codeword
        self.white = linalg.solve_triangular(chol, H1, lower=True)

    def sinr(self, V):
        W = self.white @ V
        return self.A1 * np.einsum("ij,ij->j", W.conj(), W).real

    def interference(self, V):
        return self.A1 / self.sinr(V)


def mf_sinr_eval(v, H1, R1, A1) -> float:
    return float(MatchedFilterEvaluator(H1, R1, A1).sinr(np.asarray(v).reshape(-1, 1))[0])


def mmse_sinr_eval(v, H1, R1, A1) -> float:
    return float(MmseEvaluator(H1, R1, A1).sinr(np.asarray(v).reshape(-1, 1))[0])


def make_evaluator(receiver: Receiver, H1, R1, A1):
    if receiver is Receiver.MMSE:
        return MmseEvaluator(H1, R1, A1)
    return MatchedFilterEvaluator(H1, R1, A1)


def select_best(codebook: Codebook, evaluator, objective=Objective.MAX_SINR):
    """Exhaustive search; ties go to the lowest index.  Returns (index, value)."""
    if codebook.size == 0:
        raise OutOfDomain("empty codebook")
    if objective is Objective.MAX_SINR:
        values = evaluator.sinr(codebook.vectors)
        idx = int(np.argmax(values))
    else:
        values = evaluator.interference(codebook.vectors)
        idx = int(np.argmin(values))
    return idx, float(values[idx])


def draw_instance(config: SimConfig, rng):
    """Signatures, channels and R_1 for one trial.  Returns (H1, R1)."""
    S1 = gen_signatures(config, rng)
    channels = [build_channel(config, rng) for _ in range(config.k)]
    R1 = interference_covariance(S1, config.powers[1:], channels[1:], config.noise_var)
    return channels[0], R1


def run_trial(config: SimConfig, trial: int):
    """One trial: (selected codeword index, its SINR)."""
    rng = trial_rng(config.master_seed, trial)
    H1, R1 = draw_instance(config, rng)
    evaluator = make_evaluator(config.receiver, H1, R1, config.powers[0])
    total = 2 ** config.b
    best_idx, best_val = -1, -math.inf
    for start in range(0, total, _BLOCK):
        book = Codebook.random(config.n, 0, rng, count=min(_BLOCK, total - start))
        idx, val = select_best(book, evaluator)
        # strict comparison keeps the earliest index on ties
        if val > best_val:
            best_idx, best_val = start + idx, val
    return best_idx, best_val


def _run_range(args):
    config, trials = args
    return [run_trial(config, t) for t in trials]


def run_trial_records(config: SimConfig, workers: int = 1) -> np.ndarray:
    """Per-trial records as a structured array (trial_index, selected_index, sinr)."""
    if config.b > config.max_bits:
        raise BudgetExceeded(f"2^{config.b} codewords exceeds the cap 2^{config.max_bits}")
    indices = range(config.trials)
    if workers > 1 and config.trials > 1:
        chunks = [(config, list(indices[i::workers])) for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_range, chunks))
        results = [None] * config.trials
        for i, part in enumerate(parts):
            results[i::workers] = part
    else:
        results = _run_range((config, indices))
    rec = np.zeros(config.trials, dtype=[("trial_index", "i8"), ("selected_index", "i8"),
                                         ("sinr", "f8")])
    rec["trial_index"] = np.arange(config.trials)
    rec["selected_index"] = [r[0] for r in results]
    rec["sinr"] = [r[1] for r in results]
    return rec


def summarize(config: SimConfig, records) -> TrialEstimate:
    sinr = np.asarray(records["sinr"], dtype=float)
    se = float(sinr.std(ddof=1) / math.sqrt(sinr.size)) if sinr.size >= 2 else math.nan
    return TrialEstimate(float(sinr.mean()), se, int(sinr.size), config.digest(), config.master_seed)


def write_trial_dump(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial_index", "selected_index", "sinr"])
        for r in records:
            w.writerow([int(r["trial_index"]), int(r["selected_index"]), repr(float(r["sinr"]))])


def run_trials(config: SimConfig, workers: int = 1, dump_path=None) -> TrialEstimate:
    records = run_trial_records(config, workers)
    if dump_path is not None:
        write_trial_dump(dump_path, records)
    return summarize(config, records)
