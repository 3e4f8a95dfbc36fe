"""Rate sequences, averaged-sum certificates, and summability gates.

The contraction schemes for countable map families hand each iteration step a
rate term built from a coefficient delta_i in [0, 1).  Convergence needs the
running averages of those terms to fall under some lambda < 1 eventually:

    sum_{i=1}^{L} a_i <= lambda * L   for all L >= n(lambda).

certify_alpha_series searches a lambda grid for the smallest index n(lambda)
at which the property provably holds over the checked horizon, preferring
certificates that kick in earliest.  Terms are kept as exact rationals
whenever the inputs allow it, so certificates at the horizon are decided by
integer arithmetic, not float accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import InputError

DEFAULT_LAMBDA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)

Number = float | Fraction


@dataclass(frozen=True)
class RateSequence:
    """Finite prefix of a nonnegative term sequence, 1-indexed conceptually."""

    terms: tuple[Number, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.terms:
            raise InputError("a rate sequence needs at least one term")
        for t in self.terms:
            if isinstance(t, Fraction):
                if t < 0:
                    raise InputError(f"negative rate term {t}")
            else:
                tf = float(t)
                if not math.isfinite(tf) or tf < 0.0:
                    raise InputError(f"invalid rate term {t!r}")

    @property
    def horizon(self) -> int:
        return len(self.terms)


def _exact_pow(base: Fraction, s: float) -> Fraction | None:
    """base**s as an exact rational when s is an integer or half-integer.

    Half-integer powers stay exact only when numerator and denominator are
    perfect squares; otherwise None signals the caller to fall back to float.
    """
    fs = Fraction(s).limit_denominator(10**6)
    if float(fs) != float(s):
        return None
    if fs.denominator == 1:
        return base ** int(fs)
    if fs.denominator == 2:
        num, den = base.numerator, base.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd) ** fs.numerator
        return None
    return None


def _pow(base: Number, s: float) -> Number:
    if isinstance(base, Fraction):
        exact = _exact_pow(base, s)
        if exact is not None:
            return exact
        return float(base) ** s
    return float(base) ** s


def kannan_rate_terms(
    deltas: Sequence[Number],
    s: float,
    with_2s_factor: bool = False,
) -> RateSequence:
    """Per-step rate terms delta^s / (1 - delta^s), optionally times 2^s.

    Each delta must lie in [0, 1).  Fraction inputs stay exact whenever the
    exponent allows; the optional 2^s factor is exact for integer s and
    multiplies through a float square root otherwise.
    """
    if not (s > 0.0):
        raise InputError(f"exponent s must be positive, got {s}")
    factor: Number = 1
    if with_2s_factor:
        fs = Fraction(s).limit_denominator(10**6)
        if fs.denominator == 1 and float(fs) == float(s):
            factor = Fraction(2) ** int(fs)
        else:
            factor = 2.0**s
    terms: list[Number] = []
    for d in deltas:
        if isinstance(d, Fraction):
            if not (0 <= d < 1):
                raise InputError(f"delta must lie in [0, 1), got {d}")
            ds = _pow(d, s)
        else:
            df = float(d)
            if not (0.0 <= df < 1.0):
                raise InputError(f"delta must lie in [0, 1), got {d!r}")
            ds = df**s
        if isinstance(ds, Fraction):
            ratio: Number = ds / (1 - ds)
        else:
            ratio = ds / (1.0 - ds)
        if isinstance(factor, Fraction) and isinstance(ratio, Fraction):
            terms.append(factor * ratio)
        elif isinstance(factor, int) and isinstance(ratio, Fraction):
            terms.append(factor * ratio)
        else:
            terms.append(float(factor) * float(ratio))
    return RateSequence(tuple(terms), provenance=f"delta^s/(1-delta^s), s={s}, factor2s={with_2s_factor}")


def product_terms_Cn(deltas: Sequence[Number], s: float) -> tuple[Number, ...]:
    """Cumulative products C_n = prod_{i<=n} delta_i^s / (1 - delta_i^s)."""
    base = kannan_rate_terms(deltas, s, with_2s_factor=False).terms
    out: list[Number] = []
    acc: Number = 1
    for t in base:
        if isinstance(acc, (int, Fraction)) and isinstance(t, Fraction):
            acc = acc * t
        else:
            acc = float(acc) * float(t)
        out.append(acc)
    return tuple(out)


@dataclass(frozen=True)
class AlphaSeriesCertificate:
    """Outcome of the averaged-sum search over a finite horizon.

    status is "certified", "refuted_at_horizon", or "inconclusive".  For a
    certificate, lam and n_lambda give the witnessing pair; for a refutation,
    witness_L is the largest checked L whose average exceeds every grid
    lambda.
    """

    status: str
    lam: float | None
    n_lambda: int | None
    horizon_checked: int
    witness_L: int | None = None

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "lambda": self.lam,
            "n_lambda": self.n_lambda,
            "horizon_checked": self.horizon_checked,
            "witness_L": self.witness_L,
        }


def certify_alpha_series(
    seq: RateSequence,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
) -> AlphaSeriesCertificate:
    """Search for (lambda, n) with sum_{i<=L} a_i <= lambda L for all L >= n.

    Candidates are required to stabilize within the first half of the
    horizon, so the certified tail is at least as long as the ramp-up it
    excuses.  Among grid values that certify, the earliest kick-in index
    wins, with the smaller lambda breaking ties.  When nothing certifies,
    the tail of running averages decides between a horizon refutation
    (averages flat or rising above the whole grid) and an inconclusive
    verdict (still strictly descending).
    """
    grid = sorted(set(float(l) for l in lambda_grid))
    if not grid or grid[0] <= 0.0 or grid[-1] >= 1.0:
        raise InputError(f"lambda grid must lie strictly inside (0, 1), got {lambda_grid!r}")
    terms = seq.terms
    H = len(terms)
    all_fraction = all(isinstance(t, Fraction) for t in terms)

    prefix: list[Number] = []
    acc: Number = Fraction(0) if all_fraction else 0.0
    for t in terms:
        acc = acc + t if all_fraction else float(acc) + float(t)
        prefix.append(acc)

    candidates: list[tuple[int, float]] = []
    for lam in grid:
        lam_cmp: Number = Fraction(lam).limit_denominator(10**9) if all_fraction else lam
        last_violation = 0
        for L in range(1, H + 1):
            if prefix[L - 1] > lam_cmp * L:
                last_violation = L
        n0 = last_violation + 1
        if n0 <= H // 2:
            candidates.append((n0, lam))
    if candidates:
        n0, lam = min(candidates)
        return AlphaSeriesCertificate("certified", lam, n0, H)

    lam_max = grid[-1]
    lam_max_cmp: Number = Fraction(lam_max).limit_denominator(10**9) if all_fraction else lam_max
    averages = [float(prefix[L - 1]) / L for L in range(1, H + 1)]
    window = max(2, min(50, H // 4))
    tail = averages[-window:]
    descending = all(tail[i + 1] < tail[i] for i in range(len(tail) - 1))
    if descending and averages[-1] > float(lam_max):
        return AlphaSeriesCertificate("inconclusive", None, None, H)
    witness = None
    for L in range(H, 0, -1):
        if prefix[L - 1] > lam_max_cmp * L:
            witness = L
            break
    if witness is None:
        # every grid value fails only on kick-in speed, not on the tail
        return AlphaSeriesCertificate("inconclusive", None, None, H)
    return AlphaSeriesCertificate("refuted_at_horizon", None, None, H, witness_L=witness)


@dataclass(frozen=True)
class RelaxedReport:
    """Sampled evidence for the weaker family hypotheses.

    limsup_ok: per fixed second index j, the large-i coefficients stay
    bounded away from 1.  cn_summable: the product terms C_n pass a ratio
    test (True), provably diverge (False), or resist the horizon (None).
    """

    limsup_ok: bool
    limsup_estimates: tuple[float, ...]
    cn_summable: bool | None
    horizon: int

    @property
    def accepted(self) -> bool:
        return self.limsup_ok and self.cn_summable is not False

    def to_json_dict(self) -> dict:
        return {
            "limsup_ok": self.limsup_ok,
            "limsup_estimates": [float(e) for e in self.limsup_estimates],
            "cn_summable": self.cn_summable,
            "horizon": self.horizon,
        }


def check_relaxed_hypotheses(
    delta_matrix: Callable[[int, int], Number],
    s: float,
    horizon: int = 200,
    j_probes: Sequence[int] = (1, 2, 3, 5, 8, 13, 21),
) -> RelaxedReport:
    """Estimate limsup_i delta(i, j)^s per probed j and test C_n summability.

    The limsup estimate is the maximum over the upper half of the horizon.
    Summability uses the C_n ratio tail: all ratios < 1 passes, all >= 1
    fails, and a flat plateau of equal values counts as convergence of the
    partial sums only when the plateau value is below 1.
    """
    if horizon < 8:
        raise InputError(f"horizon too small: {horizon}")
    estimates: list[float] = []
    lo = max(1, horizon // 2)
    for j in j_probes:
        worst = 0.0
        for i in range(lo, horizon + 1):
            if i == j:
                continue
            v = float(_pow(_as_number(delta_matrix(i, j)), s))
            if v > worst:
                worst = v
        estimates.append(worst)
    limsup_ok = all(e < 1.0 for e in estimates)

    diag = [_as_number(delta_matrix(i, i + 1)) for i in range(1, horizon + 1)]
    for d in diag:
        dv = float(d)
        if not (0.0 <= dv < 1.0):
            return RelaxedReport(limsup_ok, tuple(estimates), False, horizon)
    cns = product_terms_Cn(diag, s)
    tail_lo = max(1, horizon // 2)
    ratios: list[float] = []
    for n in range(tail_lo, len(cns)):
        prev, cur = float(cns[n - 1]), float(cns[n])
        if prev == 0.0:
            ratios.append(0.0)
        else:
            ratios.append(cur / prev)
    summable: bool | None
    if not ratios:
        summable = None
    elif max(ratios) < 1.0 - 1e-9:
        summable = True
    elif min(ratios) >= 1.0:
        summable = False
    else:
        spread = max(ratios) - min(ratios)
        if spread <= 1e-12 and max(ratios) < 1.0:
            summable = True
        else:
            summable = None
    return RelaxedReport(limsup_ok, tuple(estimates), summable, horizon)


def _as_number(v) -> Number:
    if isinstance(v, Fraction):
        return v
    return float(v)
