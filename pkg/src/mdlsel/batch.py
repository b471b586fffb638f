"""Vectorised codelength differences over many samples at once.

A batch is an integer matrix with one sample per row, all of the same length
``n``.  For each criterion :func:`delta` returns ``L_P - L_G`` per row, along
with masks for degenerate rows (scored as ties) and for approximate-Bayes rows
that fell back to the exact code.  Terms common to both families (startup
codes, hyper-parameter codes, ``k/2 ln(n/2pi)``) are left out, since they
cancel in the difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from mdlsel import codes
from mdlsel.codes import Criterion
from mdlsel.models import Family


@dataclass
class Batch:
    x: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.int64))
        if self.x.size and self.x.min() < 0:
            raise ValueError("outcomes must be nonnegative")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @cached_property
    def log_fact(self) -> np.ndarray:
        """``ln(x!)`` elementwise, by table lookup."""
        table = gammaln(np.arange(int(self.x.max(initial=0)) + 2, dtype=np.float64))
        return table[self.x + 1]

    @cached_property
    def sum_log_fact(self) -> np.ndarray:
        return self.log_fact.sum(axis=1)

    @cached_property
    def s(self) -> np.ndarray:
        return self.x.sum(axis=1)

    @cached_property
    def mu_hat(self) -> np.ndarray:
        return self.s / self.n

    @cached_property
    def zero(self) -> np.ndarray:
        return self.s == 0

    @cached_property
    def glrt(self) -> np.ndarray:
        """``L_P(x | mu_hat) - L_G(x | mu_hat)``; 0 on all-zero rows."""
        s = self.s.astype(np.float64)
        return self.sum_log_fact + s - (self.n + s) * np.log1p(self.mu_hat)


def known_mu_delta(b: Batch, mu: float) -> np.ndarray:
    s = b.s.astype(np.float64)
    return b.sum_log_fact + b.n * mu - (b.n + s) * math.log1p(mu)


def two_part_complexity_gap(mu_hat: np.ndarray) -> np.ndarray:
    """``ln C_P(b) - ln C_G(b)`` over the two-part range containing each ``mu_hat > 0``."""
    m, e = np.frexp(mu_hat)
    b = e - (m == 0.5)
    lo = np.sqrt(np.ldexp(1.0, b - 1))
    hi = np.sqrt(np.ldexp(1.0, b))
    c_p = 2.0 * (hi - lo)
    c_g = 2.0 * (np.arcsinh(hi) - np.arcsinh(lo))
    return np.log(c_p) - np.log(c_g)


def plugin_terms(b: Batch, family: Family | None = None) -> np.ndarray:
    """Per-position plug-in codelengths, zero on the startup prefix.

    With ``family=None`` the Poisson-minus-geometric difference is returned.
    """
    x = b.x.astype(np.float64)
    prev = np.cumsum(b.x, axis=1)[:, :-1].astype(np.float64)
    i = np.arange(1, b.n, dtype=np.float64)
    active = prev > 0
    mu = np.where(active, prev / i, 1.0)
    xs, lf = x[:, 1:], b.log_fact[:, 1:]
    if family is None:
        terms = lf + mu - (xs + 1.0) * np.log1p(mu)
    elif family is Family.POISSON:
        terms = lf + mu - xs * np.log(mu)
    else:
        terms = (xs + 1.0) * np.log1p(mu) - xs * np.log(mu)
    out = np.zeros_like(x)
    out[:, 1:] = np.where(active, terms, 0.0)
    return out


def bayes_exact_delta(b: Batch) -> np.ndarray:
    if b.n == 1:
        return np.zeros(b.x.shape[0])
    x1 = b.x[:, 0].astype(np.float64)
    s = b.s.astype(np.float64)
    n = b.n
    rest_log_fact = b.sum_log_fact - b.log_fact[:, 0]
    return (np.log(x1 + 0.5) + math.lgamma(n) - gammaln(n + s + 0.5)
            + gammaln(x1 + 0.5) + (s + 0.5) * math.log(n) + rest_log_fact)


def bayes_approx_delta(b: Batch, corrected: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Approximate-Bayes delta and the mask of rows with an all-zero ``x_2..x_n``."""
    if b.n == 1:
        return np.zeros(b.x.shape[0]), np.ones(b.x.shape[0], dtype=bool)
    x1 = b.x[:, 0].astype(np.float64)
    s_rest = (b.s - b.x[:, 0]).astype(np.float64)
    n_rest = b.n - 1
    fallback = s_rest == 0
    m = np.where(fallback, 1.0, s_rest / n_rest)
    rest_log_fact = b.sum_log_fact - b.log_fact[:, 0]
    glrt_rest = rest_log_fact + s_rest - (n_rest + s_rest) * np.log1p(m)
    extra_p = m - x1 * np.log(m) + gammaln(x1 + 0.5)
    tail = np.log1p(m) if corrected else 0.5 * np.log(m)
    extra_g = x1 * np.log1p(1.0 / m) + tail - np.log(x1 + 0.5)
    delta = glrt_rest + extra_p - extra_g
    return np.where(fallback, bayes_exact_delta(b), delta), fallback


def delta(criterion: Criterion, b: Batch, mu_true: float | None = None):
    """Return ``(delta, degenerate, fallback)`` arrays for ``criterion`` on batch ``b``."""
    kind = criterion.kind
    rows = b.x.shape[0]
    no_rows = np.zeros(rows, dtype=bool)
    if kind == codes.KNOWN_MU:
        if mu_true is None:
            raise ValueError("the known-mu criterion needs the true mean")
        return known_mu_delta(b, mu_true), no_rows, no_rows
    if kind == codes.BAYES_EXACT:
        return bayes_exact_delta(b), no_rows, no_rows
    if kind == codes.BAYES_APPROX:
        d, fallback = bayes_approx_delta(b)
        return d, no_rows, fallback
    if kind == codes.BIC:
        d = b.glrt
    elif kind == codes.ANML:
        d = b.glrt + codes.delta_threshold(criterion.mu_star)
    elif kind == codes.ANML_TWO_PART:
        safe = np.where(b.zero, 1.0, b.mu_hat)
        d = b.glrt + two_part_complexity_gap(safe)
    elif kind == codes.PLUG_IN:
        d = plugin_terms(b).sum(axis=1)
    else:  # pragma: no cover - Criterion validates kinds
        raise ValueError(kind)
    return np.where(b.zero, 0.0, d), b.zero.copy(), no_rows


def plugin_regret(b: Batch, family: Family) -> np.ndarray:
    """Plug-in regret against the ML codelength of the post-startup suffix.

    Rows whose suffix is empty or all-zero use the limiting ML codelength 0.
    """
    family = Family.parse(family)
    model = plugin_terms(b, family).sum(axis=1)
    nonzero = b.x > 0
    first = np.where(nonzero.any(axis=1), nonzero.argmax(axis=1), b.n - 1)
    rows = np.arange(b.x.shape[0])
    x_first = b.x[rows, first]
    n_suf = (b.n - 1 - first).astype(np.float64)
    s_suf = (b.s - x_first).astype(np.float64)
    lf_suf = b.sum_log_fact - b.log_fact[rows, first]
    has = s_suf > 0
    mu = np.where(has, s_suf / np.where(n_suf > 0, n_suf, 1.0), 1.0)
    if family is Family.POISSON:
        ml = lf_suf + n_suf * mu - s_suf * np.log(mu)
    else:
        ml = (n_suf + s_suf) * np.log1p(mu) - s_suf * np.log(mu)
    return model - np.where(has, ml, 0.0)
