"""Deterministic Monte Carlo experiments: error rates, bias, calibration, regret slopes.

Replicate ``i`` of a cell draws its generating family and its sample from
SplitMix64 streams whose seeds depend only on ``(master_seed, label, i)``.
Replicates are processed in fixed-size chunks, optionally in worker
processes, and reduced in chunk order, so results do not depend on the
number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

from mdlsel import batch, codes, rng
from mdlsel.codes import Criterion
from mdlsel.models import Family, invert_uniforms, variance

CHUNK = 8192
WORKERS_ENV = "MDLSEL_WORKERS"

ERROR = "error-curve"
CALIBRATION = "calibration"
REGRET_SLOPE = "regret-slope"
EXPERIMENTS = (ERROR, CALIBRATION, REGRET_SLOPE)


class ConfigError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid experiment config: " + "; ".join(self.violations))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# Seeds
# --------------------------------------------------------------------------

def derive_replicate_seed(master_seed: int, stream_label: str, replicate_index: int) -> int:
    """Seed of replicate ``replicate_index`` in the stream named ``stream_label``.

    ``base = mix64(master_seed ^ fnv1a64(stream_label))`` and the seed is the
    ``replicate_index``-th SplitMix64 output from state ``base``.  Since mix64
    is a bijection, distinct indices under one label give distinct seeds.
    """
    base = rng.mix64((master_seed & rng.MASK64) ^ rng.fnv1a64(stream_label))
    return rng.stream_output(base, replicate_index)


def derive_replicate_seeds(master_seed: int, stream_label: str, indices: np.ndarray) -> np.ndarray:
    base = rng.mix64((master_seed & rng.MASK64) ^ rng.fnv1a64(stream_label))
    idx = np.asarray(indices, dtype=np.uint64)
    return rng.mix64_array(np.uint64(base) + (idx + np.uint64(1)) * np.uint64(rng.GOLDEN_GAMMA))


def cell_label(experiment: str, mu: float, n: int) -> str:
    return f"{experiment}|mu={float(mu)!r}|n={n}"


def draw_cell(master_seed: int, label: str, mu: float, n: int, pi: float,
              start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Generating-family flags and samples for replicates ``start..stop-1`` of one cell.

    Returns ``(is_poisson, x)``; row ``i`` of ``x`` equals
    ``sample_from(family_i, mu, n, derive_replicate_seed(master_seed, label + "|sample", start + i))``.
    """
    idx = np.arange(start, stop, dtype=np.uint64)
    fam_u = rng.uniforms(derive_replicate_seeds(master_seed, label + "|family", idx), 1)[:, 0]
    is_poisson = fam_u < pi
    u = rng.uniforms(derive_replicate_seeds(master_seed, label + "|sample", idx), n)
    x = np.where(is_poisson[:, None],
                 invert_uniforms(Family.POISSON, mu, u),
                 invert_uniforms(Family.GEOMETRIC, mu, u))
    return is_poisson, x


def _chunks(replicates: int) -> list[tuple[int, int]]:
    return [(a, min(a + CHUNK, replicates)) for a in range(0, replicates, CHUNK)]


def _map(fn: Callable, tasks: list, workers: int | None) -> list:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str = ERROR
    means: list[float] = field(default_factory=lambda: [4.0])
    n_values: list[int] = field(default_factory=lambda: list(range(4, 31)))
    replicates: int = 100_000
    poisson_prior: float = 0.5
    criteria: list[str] = field(default_factory=lambda: [c.label for c in codes.STANDARD_CRITERIA])
    master_seed: int = 0
    calibration_bins: int = 40
    model_family: str = "poisson"
    generating_family: str = "geometric"

    @classmethod
    def defaults(cls, experiment: str) -> "ExperimentConfig":
        if experiment == CALIBRATION:
            return cls(experiment=CALIBRATION, means=[8.0], n_values=[8])
        if experiment == REGRET_SLOPE:
            return cls(experiment=REGRET_SLOPE, means=[4.0], n_values=[16, 32, 64, 128, 256, 512],
                       replicates=10_000, criteria=[codes.PLUG_IN])
        return cls()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError([f"unknown field {k!r}" for k in sorted(unknown)])
        cfg = cls.defaults(data.get("experiment", ERROR))
        for k, v in data.items():
            setattr(cfg, k, v)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def violations(self) -> list[str]:
        out = []
        if self.experiment not in EXPERIMENTS:
            out.append(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        if not isinstance(self.means, list) or not self.means or any(not _is_pos_real(m) for m in self.means):
            out.append("means must be a nonempty list of positive reals")
        if not isinstance(self.n_values, list) or not self.n_values or any(not _is_pos_int(n) for n in self.n_values):
            out.append("n_values must be a nonempty list of positive integers")
        if not _is_pos_int(self.replicates):
            out.append("replicates must be a positive integer")
        if not (isinstance(self.poisson_prior, (int, float)) and 0.0 <= self.poisson_prior <= 1.0):
            out.append("poisson_prior must lie in [0, 1]")
        elif self.experiment == CALIBRATION and not 0.0 < self.poisson_prior < 1.0:
            out.append("calibration needs poisson_prior strictly inside (0, 1)")
        if (not isinstance(self.master_seed, int) or isinstance(self.master_seed, bool)
                or not 0 <= self.master_seed <= rng.MASK64):
            out.append("master_seed must be an integer in [0, 2**64)")
        if not _is_pos_int(self.calibration_bins):
            out.append("calibration_bins must be a positive integer")
        if not isinstance(self.criteria, list) or not self.criteria:
            out.append("criteria must be nonempty")
        for c in self.criteria or []:
            try:
                Criterion.parse(c)
            except (ValueError, AttributeError, TypeError):
                out.append(f"unknown criterion {c!r}")
        for name in ("model_family", "generating_family"):
            try:
                Family.parse(getattr(self, name))
            except ValueError:
                out.append(f"{name} must be 'poisson' or 'geometric'")
        if self.experiment == REGRET_SLOPE and isinstance(self.n_values, list) and self.n_values and all(_is_pos_int(n) for n in self.n_values):
            if max(self.n_values) < 10 * min(self.n_values):
                out.append("regret-slope n_values must span at least one decade")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.violations()
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def parsed_criteria(self) -> list[Criterion]:
        return [Criterion.parse(c) for c in self.criteria]


def _is_pos_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _is_pos_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 and math.isfinite(v)


# --------------------------------------------------------------------------
# Error-rate experiment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorCurvePoint:
    criterion: str
    mean: float
    n: int
    pi: float
    reps: int
    reps_p: int
    reps_g: int
    errors_p: int
    errors_g: int
    ties_p: int
    ties_g: int
    degenerate: int
    fallback: int

    @property
    def ties(self) -> int:
        return self.ties_p + self.ties_g

    @property
    def log10_error_poisson_generated(self) -> float | None:
        return censored_log10(self.errors_p, self.ties_p, self.reps_p)

    @property
    def log10_error_geometric_generated(self) -> float | None:
        return censored_log10(self.errors_g, self.ties_g, self.reps_g)

    @property
    def log10_error_mixture(self) -> float | None:
        return censored_log10(self.errors_p + self.errors_g, self.ties, self.reps)

    @property
    def bias(self) -> float | None:
        p, g = self.log10_error_poisson_generated, self.log10_error_geometric_generated
        if p is None or g is None:
            return None
        return p - g


def censored_log10(errors: int, ties: int, reps: int) -> float | None:
    """``log10((errors + ties/2) / reps)``, or ``None`` when nothing went wrong."""
    score = errors + 0.5 * ties
    if reps == 0 or score == 0:
        return None
    return math.log10(score / reps)


def _error_chunk(master_seed, label, mu, n, pi, criteria, start, stop):
    is_p, x = draw_cell(master_seed, label, mu, n, pi, start, stop)
    b = batch.Batch(x)
    out = np.zeros((len(criteria), 2, 5), dtype=np.int64)
    for j, c in enumerate(criteria):
        d, deg, fb = batch.delta(c, b, mu if c.kind == codes.KNOWN_MU else None)
        wrong = np.where(is_p, d > 0, d < 0)
        tie = d == 0
        for g, mask in enumerate((is_p, ~is_p)):
            out[j, g] = (mask.sum(), (wrong & mask).sum(), (tie & mask).sum(),
                         (deg & mask).sum(), (fb & mask).sum())
    return out


def run_error_experiment(config: ExperimentConfig, workers: int | None = None) -> list[ErrorCurvePoint]:
    """Error counts per (criterion, mean, n); all criteria see the same samples."""
    config.validate()
    criteria = config.parsed_criteria
    points = []
    for mu in config.means:
        for n in config.n_values:
            label = cell_label(ERROR, mu, n)
            tasks = [(config.master_seed, label, float(mu), n, float(config.poisson_prior), criteria, a, z)
                     for a, z in _chunks(config.replicates)]
            counts = sum(_map(_error_chunk, tasks, workers))
            for j, c in enumerate(criteria):
                (rp, ep, tp, dp, fp), (rg, eg, tg, dg, fg) = counts[j].tolist()
                points.append(ErrorCurvePoint(c.label, float(mu), n, float(config.poisson_prior),
                                              config.replicates, rp, rg, ep, eg, tp, tg, dp + dg, fp + fg))
    return points


@dataclass(frozen=True)
class BiasPoint:
    criterion: str
    mean: float
    n: int
    bias: float | None


def bias_points(points: Iterable[ErrorCurvePoint]) -> list[BiasPoint]:
    return [BiasPoint(p.criterion, p.mean, p.n, p.bias) for p in points]


def baseline_subtracted(points: Sequence[ErrorCurvePoint], baseline: str = codes.KNOWN_MU) -> list[dict]:
    """log10 error of each criterion minus that of ``baseline`` in the same cell."""
    base = {(p.mean, p.n): p for p in points if p.criterion == baseline}
    rows = []
    for p in points:
        ref = base.get((p.mean, p.n))

        def diff(attr):
            a = getattr(p, attr)
            r = getattr(ref, attr) if ref is not None else None
            return None if a is None or r is None else a - r

        rows.append({
            "criterion": p.criterion, "mean": p.mean, "n": p.n,
            "bl_err_p_gen": diff("log10_error_poisson_generated"),
            "bl_err_g_gen": diff("log10_error_geometric_generated"),
            "bl_err_mix": diff("log10_error_mixture"),
        })
    return rows


# --------------------------------------------------------------------------
# Calibration experiment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationBin:
    criterion: str
    mean: float
    n: int
    index: int
    lower: float
    upper: float
    count: int
    poisson_count: int
    posterior_sum: float = 0.0

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def mean_assessed_probability(self) -> float | None:
        return self.posterior_sum / self.count if self.count else None

    @property
    def empirical_poisson_frequency(self) -> float | None:
        return self.poisson_count / self.count if self.count else None


def bin_index(prob: np.ndarray, bins: int) -> np.ndarray:
    """Bin ``[k/bins, (k+1)/bins)`` for each probability; 1 goes to the last bin."""
    return np.minimum((np.asarray(prob) * bins).astype(np.int64), bins - 1)


def _calibration_chunk(master_seed, label, mu, n, pi, criteria, bins, start, stop):
    is_p, x = draw_cell(master_seed, label, mu, n, pi, start, stop)
    b = batch.Batch(x)
    out = np.zeros((len(criteria), 3, bins))
    for j, c in enumerate(criteria):
        d, _, _ = batch.delta(c, b, mu if c.kind == codes.KNOWN_MU else None)
        post = expit(-d)
        k = bin_index(post, bins)
        out[j, 0] = np.bincount(k, minlength=bins)
        out[j, 1] = np.bincount(k[is_p], minlength=bins)
        out[j, 2] = np.bincount(k, weights=post, minlength=bins)
    return out


def run_calibration_experiment(config: ExperimentConfig, workers: int | None = None) -> list[CalibrationBin]:
    """Bin each replicate's posterior probability of Poisson and count true Poisson samples per bin."""
    config.validate()
    if not 0.0 < config.poisson_prior < 1.0:
        raise ConfigError(["calibration needs poisson_prior strictly inside (0, 1)"])
    criteria = config.parsed_criteria
    bins = config.calibration_bins
    out = []
    for mu in config.means:
        for n in config.n_values:
            label = cell_label(CALIBRATION, mu, n)
            tasks = [(config.master_seed, label, float(mu), n, float(config.poisson_prior), criteria, bins, a, z)
                     for a, z in _chunks(config.replicates)]
            counts = sum(_map(_calibration_chunk, tasks, workers))
            for j, c in enumerate(criteria):
                for k in range(bins):
                    out.append(CalibrationBin(c.label, float(mu), n, k, k / bins, (k + 1) / bins,
                                              int(counts[j, 0, k]), int(counts[j, 1, k]),
                                              float(counts[j, 2, k])))
    return out


# --------------------------------------------------------------------------
# Plug-in regret slope
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegretPoint:
    n: int
    mean_regret: float
    stderr: float


@dataclass(frozen=True)
class RegretSlopeResult:
    model_family: str
    generating_family: str
    mu: float
    replicates: int
    points: list[RegretPoint]
    slope: float
    intercept: float
    predicted_slope: float


def _regret_chunk(master_seed, label, model, generating, mu, n, start, stop):
    pi = 1.0 if generating is Family.POISSON else 0.0
    _, x = draw_cell(master_seed, label, mu, n, pi, start, stop)
    r = batch.plugin_regret(batch.Batch(x), model)
    return np.array([r.sum(), np.square(r).sum()])


def run_regret_slope_experiment(model_family, generating_family, mu: float, n_values: Sequence[int],
                                replicates: int, seed: int, workers: int | None = None) -> RegretSlopeResult:
    """Mean plug-in regret per ``n`` and its least-squares slope against ``ln n``.

    The predicted slope is ``0.5 * Var_generating(mu) / Var_model(mu)``; the
    best model element has the generating mean, since the ML mean is consistent.
    """
    model = Family.parse(model_family)
    gen = Family.parse(generating_family)
    pts = []
    for n in n_values:
        label = f"{REGRET_SLOPE}|gen={gen.value}|mu={float(mu)!r}|n={n}"
        tasks = [(seed, label, model, gen, float(mu), n, a, z) for a, z in _chunks(replicates)]
        parts = _map(_regret_chunk, tasks, workers)
        total = math.fsum(p[0] for p in parts)
        total_sq = math.fsum(p[1] for p in parts)
        mean = total / replicates
        var = max(total_sq / replicates - mean * mean, 0.0)
        pts.append(RegretPoint(n, mean, math.sqrt(var / replicates)))
    slope, intercept = np.polyfit(np.log([p.n for p in pts]), [p.mean_regret for p in pts], 1)
    predicted = 0.5 * variance(gen, mu) / variance(model, mu)
    return RegretSlopeResult(model.value, gen.value, float(mu), replicates, pts,
                             float(slope), float(intercept), predicted)
