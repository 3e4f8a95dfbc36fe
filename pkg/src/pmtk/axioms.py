"""Sampled axiom verification for distance oracles.

A "pass" here means no counterexample was found among the sampled points,
pairs, and chains; it is evidence, not proof.  A "fail" is definitive and
comes with concrete witness points that re-evaluate to the violation.

Axioms for a weighted distance p with relaxation coefficient K and polygon
order n:

  pm1  x = y  iff  p(x,x) = p(x,y) = p(y,y)
  pm2  p(x,x) <= p(x,y)
  pm3  p(x,y) = p(y,x)
  pm4  p(x,y) + sum_i p(z_i,z_i) <= K [p(x,z_1) + p(z_1,z_2) + ... + p(z_n,y)]

and for an unweighted metric-type distance D with the same K, n:

  D1   D(x,x) = 0
  D2   D(x,y) = D(y,x)
  D3   D(x,y) <= K [D(x,z_1) + ... + D(z_n,y)]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import InputError
from .spaces import (
    DEFAULT_TOL,
    Point,
    Sampler,
    SpaceClass,
    SpaceDescriptor,
    chebyshev,
    eval_distance,
)

# Cap stored witnesses per axiom; counts are still exact.
MAX_WITNESSES = 16


@dataclass(frozen=True)
class Witness:
    """Concrete points violating one axiom, with both sides of the inequality."""

    axiom: str
    points: tuple[Point, ...]
    lhs: float
    rhs: float


@dataclass(frozen=True)
class AxiomCheck:
    axiom: str
    verdict: str  # "pass" or "fail"
    witnesses: tuple[Witness, ...]
    samples_checked: int

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class ClassLabel:
    kind: SpaceClass
    polygon_order_n: int
    coeff_K: float


@dataclass
class AxiomReport:
    """Aggregate of every axiom check run against one space."""

    space_class_claim: SpaceClass
    checks: dict[str, AxiomCheck] = field(default_factory=dict)
    min_K_estimate: float | None = None
    chain_mode: str = "exact"
    labels: tuple[ClassLabel, ...] = ()

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def witnesses(self) -> tuple[Witness, ...]:
        out: list[Witness] = []
        for c in self.checks.values():
            out.extend(c.witnesses)
        return tuple(out)

    def claim_checks(self) -> dict[str, AxiomCheck]:
        """The subset of checks that substantiate the claimed class."""
        claim = self.space_class_claim
        if claim in (SpaceClass.KPMS, SpaceClass.PARTIAL_B_METRIC, SpaceClass.PARTIAL_RECTANGULAR):
            names = ("pm1", "pm2", "pm3", "pm4")
        elif claim is SpaceClass.METRIC_TYPE:
            names = ("D1", "D2", "D3")
        else:
            names = ("D1", "D2", "D3", "positivity")
        return {k: v for k, v in self.checks.items() if k in names}

    @property
    def claim_supported(self) -> bool:
        subset = self.claim_checks()
        return bool(subset) and all(c.passed for c in subset.values())

    def to_json_dict(self) -> dict:
        return {
            "claim": self.space_class_claim.value,
            "claim_supported": self.claim_supported,
            "all_passed": self.all_passed,
            "chain_mode": self.chain_mode,
            "min_K_estimate": self.min_K_estimate,
            "labels": [
                {"kind": lb.kind.value, "n": lb.polygon_order_n, "K": lb.coeff_K}
                for lb in self.labels
            ],
            "checks": {
                name: {
                    "verdict": c.verdict,
                    "samples": c.samples_checked,
                    "witnesses": [
                        {
                            "points": [list(p.coords) for p in w.points],
                            "lhs": w.lhs,
                            "rhs": w.rhs,
                        }
                        for w in c.witnesses
                    ],
                }
                for name, c in sorted(self.checks.items())
            },
        }


def _collect(axiom: str, witnesses: list[Witness], samples: int) -> AxiomCheck:
    verdict = "fail" if witnesses else "pass"
    return AxiomCheck(axiom, verdict, tuple(witnesses[:MAX_WITNESSES]), samples)


def check_pm1(space: SpaceDescriptor, sampler: Sampler, tol: float = DEFAULT_TOL) -> AxiomCheck:
    """Indistinguishability: x = y iff all three distances coincide.

    The forward direction on sampled diagonals only exercises evaluation
    determinism.  The converse witness is a pair of clearly distinct points
    whose three distances are bitwise equal.  Equality is exact on purpose:
    every continuous oracle admits near-equal triples arbitrarily close to
    the diagonal, so a tolerance here would flag artifacts of continuity
    rather than genuine plateaus.  Collapses that sampling can actually
    certify (constant patches, zeroed-out regions) are exact in floats.
    """
    witnesses: list[Witness] = []
    n = 0
    for x in sampler.points(count=256):
        n += 1
        a = eval_distance(space, x, x)
        b = eval_distance(space, x, x)
        if abs(a - b) > tol:
            witnesses.append(Witness("pm1", (x, x), a, b))
    for x, y in sampler.pairs():
        n += 1
        if chebyshev(x, y) <= 10.0 * tol:
            continue  # too close to call distinct at this tolerance
        pxy = eval_distance(space, x, y)
        if eval_distance(space, x, x) == pxy and eval_distance(space, y, y) == pxy:
            witnesses.append(Witness("pm1", (x, y), pxy, pxy))
    return _collect("pm1", witnesses, n)


def check_pm2(space: SpaceDescriptor, sampler: Sampler, tol: float = DEFAULT_TOL) -> AxiomCheck:
    """Small self-distances: p(x,x) <= p(x,y)."""
    witnesses: list[Witness] = []
    n = 0
    for x, y in sampler.pairs():
        n += 1
        self_d = eval_distance(space, x, x)
        cross = eval_distance(space, x, y)
        if self_d > cross + tol:
            witnesses.append(Witness("pm2", (x, y), self_d, cross))
    return _collect("pm2", witnesses, n)


def check_pm3(space: SpaceDescriptor, sampler: Sampler, tol: float = DEFAULT_TOL) -> AxiomCheck:
    """Symmetry in both arguments."""
    witnesses: list[Witness] = []
    n = 0
    for x, y in sampler.pairs():
        n += 1
        a = eval_distance(space, x, y)
        b = eval_distance(space, y, x)
        if abs(a - b) > tol:
            witnesses.append(Witness("pm3", (x, y), a, b))
    return _collect("pm3", witnesses, n)


def _chain_lengths(space: SpaceDescriptor, chain_len: int | None, chain_mode: str) -> list[int]:
    top = space.polygon_order_n if chain_len is None else chain_len
    if top < 1:
        raise InputError(f"chain length must be >= 1, got {top}")
    if chain_mode == "exact":
        return [top]
    if chain_mode == "upto":
        return list(range(1, top + 1))
    raise InputError(f"chain mode must be 'exact' or 'upto', got {chain_mode!r}")


def check_pm4(
    space: SpaceDescriptor,
    sampler: Sampler,
    chain_len: int | None = None,
    K: float | None = None,
    chain_mode: str = "exact",
    tol: float = DEFAULT_TOL,
) -> AxiomCheck:
    """Polygon inequality over sampled chains x, z_1, ..., z_n, y."""
    coeff = space.coeff_K if K is None else float(K)
    witnesses: list[Witness] = []
    n = 0
    for length in _chain_lengths(space, chain_len, chain_mode):
        for chain in sampler.chains(length):
            n += 1
            x, *mid, y = chain
            lhs = eval_distance(space, x, y) + sum(eval_distance(space, z, z) for z in mid)
            legs = [x, *mid, y]
            bracket = sum(
                eval_distance(space, legs[i], legs[i + 1]) for i in range(len(legs) - 1)
            )
            if lhs > coeff * bracket + tol:
                witnesses.append(Witness("pm4", chain, lhs, coeff * bracket))
    return _collect("pm4", witnesses, n)


def check_metric_type(
    space: SpaceDescriptor,
    sampler: Sampler,
    chain_len: int | None = None,
    K: float | None = None,
    chain_mode: str = "exact",
    tol: float = DEFAULT_TOL,
) -> dict[str, AxiomCheck]:
    """The unweighted axioms D1 through D3 for the same oracle."""
    coeff = space.coeff_K if K is None else float(K)
    d1: list[Witness] = []
    n1 = 0
    for x in sampler.points(count=512):
        n1 += 1
        v = eval_distance(space, x, x)
        if v > tol:
            d1.append(Witness("D1", (x,), v, 0.0))
    d2: list[Witness] = []
    n2 = 0
    for x, y in sampler.pairs():
        n2 += 1
        a = eval_distance(space, x, y)
        b = eval_distance(space, y, x)
        if abs(a - b) > tol:
            d2.append(Witness("D2", (x, y), a, b))
    d3: list[Witness] = []
    n3 = 0
    for length in _chain_lengths(space, chain_len, chain_mode):
        for chain in sampler.chains(length):
            n3 += 1
            x, *mid, y = chain
            lhs = eval_distance(space, x, y)
            legs = [x, *mid, y]
            bracket = sum(
                eval_distance(space, legs[i], legs[i + 1]) for i in range(len(legs) - 1)
            )
            if lhs > coeff * bracket + tol:
                d3.append(Witness("D3", chain, lhs, coeff * bracket))
    return {
        "D1": _collect("D1", d1, n1),
        "D2": _collect("D2", d2, n2),
        "D3": _collect("D3", d3, n3),
    }


def check_positivity(space: SpaceDescriptor, sampler: Sampler, tol: float = DEFAULT_TOL) -> AxiomCheck:
    """Distinct points must have strictly positive distance (metric claim)."""
    witnesses: list[Witness] = []
    n = 0
    for x, y in sampler.pairs():
        n += 1
        if chebyshev(x, y) <= 10.0 * tol:
            continue
        v = eval_distance(space, x, y)
        if v <= tol:
            witnesses.append(Witness("positivity", (x, y), v, 0.0))
    return _collect("positivity", witnesses, n)


def estimate_min_K(
    space: SpaceDescriptor,
    sampler: Sampler,
    chain_len: int | None = None,
    chain_mode: str = "exact",
    tol: float = DEFAULT_TOL,
) -> float:
    """Smallest K consistent with the sampled chains (weighted inequality).

    Returns at least 1.0.  A chain with zero bracket but positive left side
    is incompatible with every finite K and yields inf.
    """
    best = 1.0
    for length in _chain_lengths(space, chain_len, chain_mode):
        for chain in sampler.chains(length):
            x, *mid, y = chain
            lhs = eval_distance(space, x, y) + sum(eval_distance(space, z, z) for z in mid)
            legs = [x, *mid, y]
            bracket = sum(
                eval_distance(space, legs[i], legs[i + 1]) for i in range(len(legs) - 1)
            )
            if bracket <= 0.0:
                if lhs > tol:
                    return float("inf")
                continue
            ratio = lhs / bracket
            if ratio > best:
                best = ratio
    return best


def classify(
    space: SpaceDescriptor,
    sampler: Sampler,
    chain_mode: str = "exact",
    tol: float = DEFAULT_TOL,
) -> tuple[ClassLabel, ...]:
    """Every class label consistent with the samples, most specific first.

    Weighted labels need pm1 through pm4; the polygon order and K come from
    the descriptor for the general label, with the order-1 and the
    rectangular specializations probed separately.  Unweighted labels need
    D1 through D3, plus positivity for the plain metric label.
    """
    labels: list[ClassLabel] = []
    pm1 = check_pm1(space, sampler, tol)
    pm2 = check_pm2(space, sampler, tol)
    pm3 = check_pm3(space, sampler, tol)
    weighted_core = pm1.passed and pm2.passed and pm3.passed

    if weighted_core:
        pm4_declared = check_pm4(space, sampler, chain_mode=chain_mode, tol=tol)
        if pm4_declared.passed:
            labels.append(ClassLabel(SpaceClass.KPMS, space.polygon_order_n, space.coeff_K))
        if space.polygon_order_n == 1:
            if pm4_declared.passed:
                labels.append(ClassLabel(SpaceClass.PARTIAL_B_METRIC, 1, space.coeff_K))
        elif check_pm4(space, sampler, chain_len=1, chain_mode="exact", tol=tol).passed:
            labels.append(ClassLabel(SpaceClass.PARTIAL_B_METRIC, 1, space.coeff_K))
        if check_pm4(space, sampler, chain_len=2, K=1.0, chain_mode="exact", tol=tol).passed:
            labels.append(ClassLabel(SpaceClass.PARTIAL_RECTANGULAR, 2, 1.0))

    d_checks = check_metric_type(space, sampler, chain_mode=chain_mode, tol=tol)
    if all(c.passed for c in d_checks.values()):
        labels.append(ClassLabel(SpaceClass.METRIC_TYPE, space.polygon_order_n, space.coeff_K))
        pos = check_positivity(space, sampler, tol)
        tri = check_pm4(space, sampler, chain_len=1, K=1.0, chain_mode="exact", tol=tol)
        if pos.passed and tri.passed:
            labels.append(ClassLabel(SpaceClass.METRIC, 1, 1.0))
    return tuple(labels)


def build_report(
    space: SpaceDescriptor,
    sampler: Sampler,
    chain_mode: str = "exact",
    tol: float = DEFAULT_TOL,
    with_labels: bool = False,
) -> AxiomReport:
    """Run every axiom family against the space and aggregate the results."""
    report = AxiomReport(space_class_claim=space.class_claim, chain_mode=chain_mode)
    report.checks["pm1"] = check_pm1(space, sampler, tol)
    report.checks["pm2"] = check_pm2(space, sampler, tol)
    report.checks["pm3"] = check_pm3(space, sampler, tol)
    report.checks["pm4"] = check_pm4(space, sampler, chain_mode=chain_mode, tol=tol)
    for name, check in check_metric_type(space, sampler, chain_mode=chain_mode, tol=tol).items():
        report.checks[name] = check
    if space.class_claim is SpaceClass.METRIC:
        report.checks["positivity"] = check_positivity(space, sampler, tol)
    if all(report.checks[k].passed for k in ("pm1", "pm2", "pm3")):
        report.min_K_estimate = estimate_min_K(space, sampler, chain_mode=chain_mode, tol=tol)
    if with_labels:
        report.labels = classify(space, sampler, chain_mode=chain_mode, tol=tol)
    return report
