"""Sweep orchestration: config parsing, analytic/simulated grids, CSV output.

Config files are line-oriented ``key = value`` with four sections::

    [scenario]
    kbar = 0.25, 0.5, 1, 1.25      # list = one curve per value
    snr_db = 5
    receiver = mmse                # mmse | mf, or both as a list
    [sweep]
    bbar_grid = 0:4:1/4            # list, or start:stop:step (fractions ok)
    [simulation]
    n = 12
    trials = 2000
    [output]
    path = loads.csv

Numbers accept fractions such as ``1/12``.  ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import ConfigError, OutOfDomain, RvqError, Unreachable
from .large_system import (
    ChannelKind,
    ChannelModel,
    Ensemble,
    ScenarioParams,
    beta_max,
    fold_fading,
    lambda_min,
    solve_mf_interference,
    solve_mmse_sinr,
)
from .simulator import DEFAULT_MAX_BITS, Receiver, SimConfig, run_trials
from .transforms import PowerProfile


class Mode(enum.Enum):
    ANALYZE = "analyze"
    SIMULATE = "simulate"
    COMPARE = "compare"


CSV_COLUMNS = ["kbar", "bbar", "snr_db", "ensemble", "receiver", "channel",
               "analytic_value", "analytic_db", "sim_mean", "sim_db", "sim_stderr",
               "n", "trials", "seed", "status", "flag"]
FEEDBACK_COLUMNS = ["kbar", "snr_db", "ensemble", "receiver", "channel", "target_db",
                    "required_bbar", "limit_db", "status"]


@dataclass(frozen=True)
class SweepSpec:
    kbar: tuple[float, ...]
    snr_db: float
    receivers: tuple[Receiver, ...]
    bbar_grid: tuple[float, ...] = ()
    mode: Mode = Mode.ANALYZE
    ensembles: tuple[Ensemble, ...] = (Ensemble.IID_GAUSSIAN,)
    channel: ChannelModel = field(default_factory=ChannelModel.ideal)
    interferer_powers: tuple[float, ...] = (1.0,)
    interferer_weights: tuple[float, ...] | None = None
    desired_power: float = 1.0
    desired_gain: float | None = None
    quantization_points: int = 64
    target_db: float = 0.5
    n: int | None = None
    trials: int = 1000
    seed: int = 0
    max_bits: int = DEFAULT_MAX_BITS
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        _require(len(self.kbar) > 0, "kbar", "needs at least one value")
        _require(all(k > 0 for k in self.kbar), "kbar", "must be > 0")
        _require(_increasing(self.kbar), "kbar", "must be strictly increasing")
        _require(all(b >= 0 for b in self.bbar_grid), "bbar_grid", "must be >= 0")
        _require(_increasing(self.bbar_grid), "bbar_grid", "must be strictly increasing")
        _require(math.isfinite(self.snr_db), "snr_db", "must be finite")
        _require(len(self.receivers) > 0, "receiver", "needs at least one value")
        _require(len(self.ensembles) > 0, "ensemble", "needs at least one value")
        _require(all(p > 0 for p in self.interferer_powers), "interferer_powers", "must be > 0")
        if self.interferer_weights is not None:
            _require(len(self.interferer_weights) == len(self.interferer_powers),
                     "interferer_weights", "must match interferer_powers in length")
            _require(all(w > 0 for w in self.interferer_weights), "interferer_weights", "must be > 0")
        _require(self.desired_power > 0, "desired_power", "must be > 0")
        _require(self.desired_gain is None or self.desired_gain > 0, "desired_gain", "must be > 0")
        _require(self.quantization_points >= 1, "quantization_points", "must be >= 1")
        _require(self.target_db > 0, "target_db", "must be > 0")
        _require(self.n is None or self.n >= 1, "n", "must be >= 1")
        _require(self.trials >= 1, "trials", "must be >= 1")
        _require(0 <= self.seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
        _require(self.max_bits >= 0, "max_bits", "must be >= 0")
        _require(self.workers >= 1, "workers", "must be >= 1")
        if Ensemble.ORTHOGONAL in self.ensembles:
            _require(all(k < 1 for k in self.kbar), "kbar", "must be < 1 for orthogonal interferers")
        if self.mode is not Mode.ANALYZE:
            self.check_simulatable()

    def check_simulatable(self):
        _require(self.n is not None, "n", "is required to simulate")
        _require(len(self.bbar_grid) > 0, "bbar_grid", "needs at least one value")
        for k in self.kbar:
            _require(_is_integral(k * self.n), "kbar", f"kbar*n = {k * self.n:g} is not an integer")
            _require(round(k * self.n) >= 1, "kbar", "kbar*n must be >= 1")
        for b in self.bbar_grid:
            _require(_is_integral(b * self.n), "bbar_grid", f"bbar*n = {b * self.n:g} is not an integer")

    @property
    def noise_var(self) -> float:
        return self.desired_power * 10 ** (-self.snr_db / 10)

    @property
    def base_profile(self) -> PowerProfile:
        weights = self.interferer_weights or (1.0,) * len(self.interferer_powers)
        return PowerProfile.from_atoms(zip(self.interferer_powers, weights), normalize=True)

    @property
    def gain(self) -> float:
        return self.channel.mean_gain if self.desired_gain is None else self.desired_gain

    def scenario(self, kbar, bbar, ensemble) -> ScenarioParams:
        profile = fold_fading(self.base_profile, self.channel, self.quantization_points)
        return ScenarioParams(kbar, bbar, self.noise_var, self.desired_power, self.gain,
                              profile, ensemble)

    def sim_config(self, kbar, bbar, ensemble, receiver) -> SimConfig:
        k = round(kbar * self.n)
        b = round(bbar * self.n)
        powers = (self.desired_power,) + interferer_powers(self.base_profile, k - 1)
        return SimConfig(self.n, k, b, self.noise_var, powers, self.channel, ensemble, receiver,
                         self.trials, self.seed, self.max_bits)


def _require(ok, key, message):
    if not ok:
        raise ConfigError(f"{key} {message}", key=key)


def _increasing(values):
    return all(b > a for a, b in zip(values, values[1:]))


def _is_integral(x):
    return abs(x - round(x)) <= 1e-9 * max(1.0, abs(x))


def interferer_powers(profile: PowerProfile, count: int) -> tuple[float, ...]:
    """Split ``count`` interferers over the profile atoms (largest remainder)."""
    if count <= 0:
        return ()
    share = np.asarray(profile.w) * count
    base = np.floor(share).astype(int)
    order = sorted(range(len(share)), key=lambda i: (-(share[i] - base[i]), i))
    for i in order[: count - base.sum()]:
        base[i] += 1
    out = []
    for p, c in zip(profile.p, base):
        out.extend([float(p)] * int(c))
    return tuple(out)


# -- config text ---------------------------------------------------------------


def _num(text):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text.strip()!r}") from None


def _int(text):
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text.strip()!r}") from None
    if value.denominator != 1:
        raise ValueError(f"not an integer: {text.strip()!r}")
    return int(value)


def _num_list(text):
    text = text.strip()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must be start:stop:step")
        start, stop, step = (Fraction(p.strip()) for p in parts)
        if step <= 0:
            raise ValueError("range step must be > 0")
        count = int((stop - start) / step) + 1
        return tuple(float(start + i * step) for i in range(count))
    return tuple(_num(t) for t in text.split(",") if t.strip())


def _enum_list(enum_cls, aliases=None):
    aliases = aliases or {}

    def parse(text):
        out = []
        for t in text.split(","):
            t = t.strip().lower()
            t = aliases.get(t, t)
            try:
                out.append(enum_cls(t))
            except ValueError:
                valid = ", ".join(e.value for e in enum_cls)
                raise ValueError(f"unknown value {t!r} (expected one of {valid})") from None
        return tuple(out)

    return parse


def _optional(parser):
    def parse(text):
        return None if text.strip().lower() in ("", "none") else parser(text)
    return parse


# key -> (section, spec field, parser)
_KEYS = {
    "kbar": ("scenario", "kbar", _num_list),
    "snr_db": ("scenario", "snr_db", _num),
    "receiver": ("scenario", "receivers", _enum_list(Receiver, {"matched_filter": "mf"})),
    "ensemble": ("scenario", "ensembles", _enum_list(Ensemble, {"iid_gaussian": "iid"})),
    "channel": ("scenario", "channel", lambda t: t.strip().lower()),
    "path_vars": ("scenario", "channel", _num_list),
    "interferer_powers": ("scenario", "interferer_powers", _num_list),
    "interferer_weights": ("scenario", "interferer_weights", _optional(_num_list)),
    "desired_power": ("scenario", "desired_power", _num),
    "desired_gain": ("scenario", "desired_gain", _optional(_num)),
    "quantization_points": ("scenario", "quantization_points", _int),
    "mode": ("sweep", "mode", lambda t: Mode(t.strip().lower())),
    "bbar_grid": ("sweep", "bbar_grid", _num_list),
    "target_db": ("sweep", "target_db", _num),
    "n": ("simulation", "n", _optional(_int)),
    "trials": ("simulation", "trials", _int),
    "seed": ("simulation", "seed", _int),
    "max_bits": ("simulation", "max_bits", _int),
    "workers": ("simulation", "workers", _int),
    "path": ("output", "out", _optional(lambda t: t.strip())),
}
SECTIONS = ("scenario", "sweep", "simulation", "output")
REQUIRED = ("kbar", "snr_db", "receiver")

_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def _build_channel(kind, path_vars):
    try:
        kind = ChannelKind(kind)
    except ValueError:
        raise ConfigError(f"unknown channel {kind!r} (expected ideal, flat or multipath)",
                          key="channel") from None
    try:
        if kind is ChannelKind.IDEAL:
            if path_vars:
                raise OutOfDomain("ideal channel takes no path_vars")
            return ChannelModel.ideal()
        if kind is ChannelKind.FLAT_RAYLEIGH:
            return ChannelModel.flat(*(path_vars or (1.0,)))
        return ChannelModel.multipath(path_vars)
    except (OutOfDomain, TypeError) as exc:
        raise ConfigError(str(exc), key="path_vars") from None


def parse_config(text: str, overrides=()) -> SweepSpec:
    """Parse config text, then apply ``key=value`` overrides in order."""
    raw = {}
    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in SECTIONS:
                raise ConfigError(f"unknown section {line}", line=lineno)
            section = line[1:-1].strip()
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = m.group(1).lower(), m.group(2)
        if key not in _KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if section is None:
            raise ConfigError("key outside any section", key=key, line=lineno)
        if _KEYS[key][0] != section:
            raise ConfigError(f"belongs in [{_KEYS[key][0]}], not [{section}]", key=key, line=lineno)
        if key in raw:
            raise ConfigError("duplicate key", key=key, line=lineno)
        raw[key], lines[key] = value, lineno
    for item in overrides:
        key, sep, value = item.partition("=")
        key = key.strip().lower().split(".")[-1]
        if not sep or key not in _KEYS:
            raise ConfigError(f"bad override {item!r}", key=key or None)
        raw[key], lines[key] = value, None
    return _spec_from_raw(raw, lines)


def _spec_from_raw(raw, lines):
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError("is required", key=key)
    kwargs = {}
    channel_kind, path_vars = "ideal", ()
    for key, value in raw.items():
        _, name, parser = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=lines[key]) from None
        if key == "channel":
            channel_kind = parsed
        elif key == "path_vars":
            path_vars = parsed
        else:
            kwargs[name] = parsed
    kwargs["channel"] = _build_channel(channel_kind, path_vars)
    return SweepSpec(**kwargs)


def _fmt(x):
    return repr(float(x))


def emit_spec(spec: SweepSpec) -> str:
    """Config text that parses back to ``spec``."""
    def join(values):
        return ", ".join(_fmt(v) for v in values)

    def opt(value, fmt=str):
        return "none" if value is None else fmt(value)

    ch = spec.channel
    lines = [
        "[scenario]",
        f"kbar = {join(spec.kbar)}",
        f"snr_db = {_fmt(spec.snr_db)}",
        f"receiver = {', '.join(r.value for r in spec.receivers)}",
        f"ensemble = {', '.join(e.value for e in spec.ensembles)}",
        f"channel = {ch.kind.value}",
    ]
    if ch.path_vars:
        lines.append(f"path_vars = {join(ch.path_vars)}")
    lines += [
        f"interferer_powers = {join(spec.interferer_powers)}",
        f"interferer_weights = {opt(spec.interferer_weights, join)}",
        f"desired_power = {_fmt(spec.desired_power)}",
        f"desired_gain = {opt(spec.desired_gain, _fmt)}",
        f"quantization_points = {spec.quantization_points}",
        "",
        "[sweep]",
        f"mode = {spec.mode.value}",
    ]
    if spec.bbar_grid:
        lines.append(f"bbar_grid = {join(spec.bbar_grid)}")
    lines += [
        f"target_db = {_fmt(spec.target_db)}",
        "",
        "[simulation]",
        f"n = {opt(spec.n)}",
        f"trials = {spec.trials}",
        f"seed = {spec.seed}",
        f"max_bits = {spec.max_bits}",
        f"workers = {spec.workers}",
        "",
        "[output]",
        f"path = {opt(spec.out)}",
    ]
    return "\n".join(lines) + "\n"


# -- sweeps ----------------------------------------------------------------------


def analytic_sinr(scenario: ScenarioParams, receiver: Receiver) -> float:
    if receiver is Receiver.MMSE:
        return solve_mmse_sinr(scenario).value
    return scenario.effective_power / solve_mf_interference(scenario).value


def sinr_limit(scenario: ScenarioParams, receiver: Receiver) -> float:
    """SINR with unlimited feedback (the same for both receivers)."""
    if receiver is Receiver.MMSE:
        return beta_max(scenario)
    return scenario.effective_power / lambda_min(scenario)


def _db(x):
    return 10 * math.log10(x)


def finite_size_flag(analytic, sim_mean, sim_stderr) -> bool:
    return abs(sim_mean - analytic) > 5 * sim_stderr + 0.1 * abs(analytic)


@dataclass
class SweepResult:
    rows: list
    failures: int

    def to_csv(self, columns=CSV_COLUMNS) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()


def _points(spec):
    for kbar in spec.kbar:
        for ensemble in spec.ensembles:
            for receiver in spec.receivers:
                for bbar in spec.bbar_grid:
                    yield kbar, ensemble, receiver, bbar


def run_sweep(spec: SweepSpec) -> SweepResult:
    """One row per (kbar, ensemble, receiver, bbar); failures do not stop the sweep."""
    if not spec.bbar_grid:
        raise ConfigError("needs at least one value", key="bbar_grid")
    do_analytic = spec.mode in (Mode.ANALYZE, Mode.COMPARE)
    do_sim = spec.mode in (Mode.SIMULATE, Mode.COMPARE)
    if do_sim:
        spec.check_simulatable()
    rows, failures = [], 0
    for kbar, ensemble, receiver, bbar in _points(spec):
        row = dict.fromkeys(CSV_COLUMNS, "")
        row.update(kbar=_fmt(kbar), bbar=_fmt(bbar), snr_db=_fmt(spec.snr_db),
                   ensemble=ensemble.value, receiver=receiver.value,
                   channel=spec.channel.kind.value, status="ok")
        errors = []
        analytic = sim = None
        if do_analytic:
            try:
                analytic = analytic_sinr(spec.scenario(kbar, bbar, ensemble), receiver)
                row.update(analytic_value=_fmt(analytic), analytic_db=_fmt(_db(analytic)))
            except RvqError as exc:
                row["analytic_value"] = exc.code
                errors.append(exc.code)
        if do_sim:
            row.update(n=spec.n, trials=spec.trials, seed=spec.seed)
            try:
                sim = run_trials(spec.sim_config(kbar, bbar, ensemble, receiver), spec.workers)
                row.update(sim_mean=_fmt(sim.mean_sinr), sim_db=_fmt(_db(sim.mean_sinr)),
                           sim_stderr="" if math.isnan(sim.std_error) else _fmt(sim.std_error))
            except RvqError as exc:
                row["sim_mean"] = exc.code
                errors.append(exc.code)
        if errors:
            failures += 1
            row["status"] = "failed:" + "+".join(errors)
        elif analytic is not None and sim is not None and not math.isnan(sim.std_error):
            if finite_size_flag(analytic, sim.mean_sinr, sim.std_error):
                row["flag"] = "finite_size_gap"
        rows.append(row)
    return SweepResult(rows, failures)


def required_feedback(scenario: ScenarioParams, target_db: float, receiver=Receiver.MMSE,
                      resolution: float = 1e-3, bbar_cap: float = 64.0) -> float:
    """Smallest bbar (to ``resolution``) whose SINR is within ``target_db`` of single user."""
    if not target_db > 0:
        raise OutOfDomain("target offset must be > 0 dB")
    target = scenario.single_user_sinr * 10 ** (-target_db / 10)
    limit = sinr_limit(scenario, receiver)
    if limit < target:
        gap = _db(target) - _db(limit)
        raise Unreachable(f"unlimited-feedback SINR is {gap:.3f} dB short of the target", gap)

    def reached(bbar):
        return analytic_sinr(scenario.with_bbar(bbar), receiver) >= target

    if reached(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not reached(hi):
        lo, hi = hi, 2 * hi
        if hi > bbar_cap:
            raise Unreachable(f"target not met below bbar = {bbar_cap:g}", _db(target) - _db(limit))
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


def run_required_feedback(spec: SweepSpec) -> SweepResult:
    rows, failures = [], 0
    for kbar in spec.kbar:
        for ensemble in spec.ensembles:
            for receiver in spec.receivers:
                row = dict.fromkeys(FEEDBACK_COLUMNS, "")
                row.update(kbar=_fmt(kbar), snr_db=_fmt(spec.snr_db), ensemble=ensemble.value,
                           receiver=receiver.value, channel=spec.channel.kind.value,
                           target_db=_fmt(spec.target_db), status="ok")
                try:
                    scenario = spec.scenario(kbar, 0.0, ensemble)
                    row["limit_db"] = _fmt(_db(sinr_limit(scenario, receiver)))
                    row["required_bbar"] = _fmt(required_feedback(scenario, spec.target_db, receiver))
                except RvqError as exc:
                    failures += 1
                    row["required_bbar"] = exc.code
                    row["status"] = "failed:" + exc.code
                rows.append(row)
    return SweepResult(rows, failures)


def with_mode(spec: SweepSpec, mode: Mode) -> SweepSpec:
    return replace(spec, mode=mode)
