"""Analytic non-Markovianity bounds for Haar and approximate-design dynamics.

Constants that involve ``d_E`` (up to ``2**60``) are formed as exact
``Fraction`` objects; conversion to floating point happens once, either to a
bounded float or to a base-2 logarithm.  The design tail bound is assembled
term by term in the log2 domain since factors such as ``d_ES**t`` overflow
double precision at the parameter ranges of interest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal, Union

import numpy as np

from .errors import DomainError

GRID_POINTS = 512
GRID_LOW_FRACTION = 1e-6
GOLDEN_RTOL = 1e-6
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def log2_fraction(q: Fraction) -> float:
    """Base-2 logarithm of a positive rational, accurate for huge terms."""
    if q <= 0:
        return -math.inf if q == 0 else math.nan
    return math.log2(q.numerator) - math.log2(q.denominator)


def _check_dims(d_E: int, d_S: int, k: int) -> None:
    if d_E < 1 or d_S < 2 or k < 0:
        raise DomainError(f"need d_E >= 1, d_S >= 2, k >= 0; got {d_E}, {d_S}, {k}")


def expected_purity_haar(d_E: int, d_S: int, k: int) -> Fraction:
    """Haar average of ``tr(Y^2)`` for independently drawn step unitaries."""
    _check_dims(d_E, d_S, k)
    d_ES = d_E * d_S
    ratio = Fraction(d_E * d_E - 1, d_ES * d_ES - 1)
    return Fraction(d_E * d_E - 1, d_E * (d_ES + 1)) * ratio ** k + Fraction(1, d_E)


def haar_B_parts(d_E: int, d_S: int, k: int, branch: str | None = None) -> tuple[Fraction, Fraction]:
    """Exact ``(radicand, offset)`` with ``B = (sqrt(radicand) + offset) / 2``.

    ``branch`` selects ``"large"`` (``d_E >= d_S^(2k+1)``) or ``"small"``
    explicitly; by default it follows ``d_E``.
    """
    _check_dims(d_E, d_S, k)
    D = d_S ** (2 * k + 1)
    E = expected_purity_haar(d_E, d_S, k)
    if branch is None:
        branch = "large" if d_E >= D else "small"
    if branch == "large":
        return D * E - 1, Fraction(0)
    if branch == "small":
        y = 1 - Fraction(d_E, D)
        x = Fraction(d_E, D) * (1 + y)
        return d_E * E - x, y
    raise ValueError(f"unknown branch {branch!r}")


def haar_B(d_E: int, d_S: int, k: int) -> float:
    """Upper bound on the Haar-expected trace-norm non-Markovianity."""
    rad, off = haar_B_parts(d_E, d_S, k)
    if rad < 0:
        raise ArithmeticError(f"negative radicand {float(rad)!r} in haar_B")
    return 0.5 * (math.sqrt(rad) + float(off))


def haar_C(d_E: int, d_S: int, k: int) -> Fraction:
    """Concentration constant ``d_ES (k+1)/16 * ((d_S-1)/(d_S^(k+1)-1))^2``."""
    _check_dims(d_E, d_S, k)
    return Fraction(d_E * d_S * (k + 1), 16) * Fraction(d_S - 1, d_S ** (k + 1) - 1) ** 2


def haar_C_scaled(d_E: int, d_S: int, k: int) -> Fraction:
    """The same constant with a ``/4`` normalisation, i.e. ``4 * haar_C``."""
    return 4 * haar_C(d_E, d_S, k)


def eta_exact(d_E: int, d_S: int, k: int) -> Fraction:
    _check_dims(d_E, d_S, k)
    return (d_E ** 4 * d_S ** (2 * (k + 2)) + Fraction(1, d_S ** (2 * k + 1))) / 4


def eta_bound(d_E: int, d_S: int, k: int) -> float:
    """log2 of the coefficient-sum bound ``(d_E^4 d_S^(2k+4) + d_S^-(2k+1)) / 4``."""
    return log2_fraction(eta_exact(d_E, d_S, k))


def _log2_sum(*terms: float) -> float:
    out = -math.inf
    for t in terms:
        out = float(np.logaddexp2(out, t))
    return out


def log2_haar_moment_bound(m: float, d_E: int, d_S: int, k: int) -> float:
    if m <= 0:
        raise DomainError("moment order must be positive")
    c = log2_fraction(haar_C(d_E, d_S, k))
    b = haar_B(d_E, d_S, k)
    t1 = m * (math.log2(m) - c)
    t2 = 2 * m * math.log2(2 * b) if b > 0 else -math.inf
    return _log2_sum(t1, t2)


def haar_moment_bound(m: float, d_E: int, d_S: int, k: int) -> float:
    """``(m/C)^m + (2B)^(2m)``, bounding the Haar moment of the squared 2-norm measure."""
    return 2.0 ** log2_haar_moment_bound(m, d_E, d_S, k)


# -- design tail bound -------------------------------------------------------

@dataclass(frozen=True)
class BoundParams:
    d_S: int
    log2_dE: int
    k: int
    t: int
    epsilon: float
    delta: float
    m: Union[float, Literal["optimize"]] = "optimize"

    def __post_init__(self):
        if self.d_S < 2 or self.log2_dE < 0 or self.k < 0:
            raise DomainError("need d_S >= 2, log2_dE >= 0, k >= 0")
        if self.t < 1:
            raise DomainError("design order must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise DomainError("epsilon must lie in [0, 1]")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if self.m != "optimize":
            check_m(self.m, self.t)

    @property
    def d_E(self) -> int:
        return 1 << self.log2_dE


@dataclass(frozen=True)
class BoundBreakdown:
    m_used: float
    log2_term_moment: float
    log2_term_B: float
    log2_term_eps: float
    log2_total: float
    total_clamped: float


def check_m(m: float, t: int) -> None:
    if not 0 < m <= t / 4:
        raise DomainError(f"m = {m!r} outside (0, t/4] = (0, {t / 4}]")


@dataclass(frozen=True)
class _Consts:
    log2_C: float
    log2_2B: float
    log2_eta: float
    log2_dES: float


@lru_cache(maxsize=4096)
def _consts(d_S: int, log2_dE: int, k: int) -> _Consts:
    d_E = 1 << log2_dE
    b = haar_B(d_E, d_S, k)
    return _Consts(
        log2_C=log2_fraction(haar_C(d_E, d_S, k)),
        log2_2B=math.log2(2 * b) if b > 0 else -math.inf,
        log2_eta=eta_bound(d_E, d_S, k),
        log2_dES=log2_dE + math.log2(d_S),
    )


def _log2_terms(params: BoundParams, m):
    """log2 of the three summands (prefactor included), elementwise in ``m``."""
    c = _consts(params.d_S, params.log2_dE, params.k)
    m = np.asarray(m, dtype=float)
    pre = m * (3 * (2 * params.k + 1) * math.log2(params.d_S) - 2 * math.log2(params.delta))
    moment = pre + m * (np.log2(m) - c.log2_C)
    with np.errstate(invalid="ignore"):
        term_b = pre + 2 * m * c.log2_2B if c.log2_2B > -math.inf else np.full_like(m, -np.inf)
    if params.epsilon > 0:
        eps = pre + math.log2(params.epsilon) - params.t * c.log2_dES + 2 * m * c.log2_eta
    else:
        eps = np.full_like(m, -np.inf)
    return moment, term_b, eps


def _log2_total(params: BoundParams, m):
    a, b, c = _log2_terms(params, m)
    return np.logaddexp2(np.logaddexp2(a, b), c)


def design_tail_bound(params: BoundParams, m: float) -> BoundBreakdown:
    """Large-deviation bound on non-Markovianity for an approximate t-design."""
    check_m(m, params.t)
    a, b, c = (float(x) for x in _log2_terms(params, m))
    total = _log2_sum(a, b, c)
    return BoundBreakdown(
        m_used=float(m),
        log2_term_moment=a,
        log2_term_B=b,
        log2_term_eps=c,
        log2_total=total,
        total_clamped=1.0 if total >= 0 else 2.0 ** total,
    )


def _golden_section(f, a: float, b: float, rtol: float) -> float:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * 0.5 * (a + b):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def optimize_m(params: BoundParams) -> tuple[float, BoundBreakdown]:
    """Minimise the log2 bound over ``m`` in ``(0, t/4]``.

    A geometric grid guards against local minima; golden-section search in
    the bracket around the best grid point refines it.  The refined point is
    only accepted if it strictly improves on the grid.
    """
    hi = params.t / 4
    grid = np.geomspace(hi * GRID_LOW_FRACTION, hi, GRID_POINTS)
    grid[-1] = hi
    vals = _log2_total(params, grid)
    i = int(np.argmin(vals))
    best_m, best_v = float(grid[i]), float(vals[i])
    lo_b, hi_b = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, GRID_POINTS - 1)])

    def f(m: float) -> float:
        return float(_log2_total(params, m))

    m_ref = min(max(_golden_section(f, lo_b, hi_b, GOLDEN_RTOL), grid[0]), hi)
    if f(m_ref) < best_v:
        best_m = m_ref
    return best_m, design_tail_bound(params, best_m)


def haar_tail_bound(delta: float, d_E: int, d_S: int, k: int,
                    variant: Literal["quadratic", "linear"] = "quadratic") -> tuple[float, float]:
    """Haar large-deviation bound: ``(threshold, probability bound)``.

    ``variant="quadratic"`` uses ``exp(-4 C delta^2 d_S^(-2(2k+1)))``;
    ``"linear"`` uses the linear-in-delta form ``exp(-eta delta)`` with
    ``eta = d_S^(-2(2k+1)) * 4C``.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    D = d_S ** (2 * k + 1)
    threshold = D * haar_B(d_E, d_S, k) + delta
    c = haar_C(d_E, d_S, k)
    if variant == "quadratic":
        rate = float(4 * c / (D * D)) * delta * delta
    elif variant == "linear":
        rate = float(4 * c / (D * D)) * delta
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return threshold, min(1.0, math.exp(-rate))


def epsilon_condition(params: BoundParams, m: float, margin_bits: float = 10.0) -> tuple[float, bool]:
    """log2 of the largest admissible design error and whether ``epsilon`` clears it.

    ``satisfied`` requires ``log2(epsilon)`` to sit at least ``margin_bits``
    below the returned value.
    """
    check_m(m, params.t)
    lde, lds, k = params.log2_dE, math.log2(params.d_S), params.k
    inner = 2 * math.log2(params.delta) + 4 * (1 - 2 * lde - (10 * k + 11) / 4 * lds)
    required = m * inner + params.t * (lde + lds)
    log2_eps = math.log2(params.epsilon) if params.epsilon > 0 else -math.inf
    return required, log2_eps <= required - margin_bits
