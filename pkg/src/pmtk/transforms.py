"""Constructions that derive new spaces from existing ones.

Each constructor verifies the documented preconditions by sampling before it
builds anything, and re-checks the construction's claimed axioms afterwards
where the theory only covers part of the parameter range.  Checks that the
theory does not require but prudence suggests are recorded as warnings in
the derived descriptor's provenance instead of failing the construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .axioms import check_metric_type, check_pm1, check_pm2, check_pm3, check_pm4
from .errors import ConstructionError, InputError
from .spaces import (
    DEFAULT_TOL,
    Point,
    Sampler,
    SpaceClass,
    SpaceDescriptor,
    as_point,
    build_oracle,
    eval_distance,
)


def _default_check_sampler(space: SpaceDescriptor, seed: int = 0) -> Sampler:
    # construction-time checks favour speed over exhaustiveness
    return Sampler(seed=seed, region=space.domain, grid_density=12, random_count=600)


def _require_weighted_core(space: SpaceDescriptor, sampler: Sampler, tol: float, what: str) -> None:
    for check in (check_pm1(space, sampler, tol), check_pm2(space, sampler, tol), check_pm3(space, sampler, tol)):
        if not check.passed:
            w = check.witnesses[0]
            raise InputError(
                f"{what} needs axiom {check.axiom} on the input; "
                f"violated at {tuple(p.coords for p in w.points)} (lhs={w.lhs}, rhs={w.rhs})"
            )


def _require_polygon(space: SpaceDescriptor, sampler: Sampler, tol: float, what: str,
                     K: float | None = None, chain_len: int | None = None) -> None:
    check = check_pm4(space, sampler, chain_len=chain_len, K=K, tol=tol)
    if not check.passed:
        w = check.witnesses[0]
        raise InputError(
            f"{what} needs the polygon inequality on the input; "
            f"violated at {tuple(p.coords for p in w.points)} (lhs={w.lhs}, rhs={w.rhs})"
        )


def _merge_provenance(base: Mapping | None, extra: dict) -> dict:
    doc = dict(base) if base else {}
    doc.update(extra)
    return doc


def to_pt(space: SpaceDescriptor, sampler: Sampler | None = None, tol: float = DEFAULT_TOL) -> SpaceDescriptor:
    """Weighted-to-unweighted transform p^t(x,y) = 2p(x,y) - p(x,x) - p(y,y).

    For K = 1 the result is a true metric-type distance with the same
    polygon order.  For K > 1 that implication is unverified, so the
    construction always samples the unweighted axioms on the result and
    stores the verdict; a violation there is reported, not hidden.
    """
    if sampler is None:
        sampler = _default_check_sampler(space)
    _require_weighted_core(space, sampler, tol, "the weighted-to-unweighted transform")

    if space.oracle.spec is None:
        raise InputError("input oracle is not serializable; the transform needs an expression or registered name")
    oracle = build_oracle({"op": "pt", "source": space.oracle.spec})

    # negativity scan: pm2 failures on unsampled points surface here
    for x, y in sampler.pairs(count=400):
        v = oracle.fn(x, y)  # raises ConstructionError on clearly negative values
        if v < 0.0:
            raise ConstructionError("weighted transform went negative", witness=(x, y, v))

    derived = SpaceDescriptor(
        oracle=oracle,
        coeff_K=space.coeff_K,
        polygon_order_n=space.polygon_order_n,
        domain=space.domain,
        class_claim=SpaceClass.METRIC_TYPE,
        hausdorff_asserted=space.hausdorff_asserted,
        complete_asserted=space.complete_asserted,
        provenance=_merge_provenance(space.provenance, {"construction": "pt"}),
    )
    if space.coeff_K > 1.0:
        checks = check_metric_type(derived, sampler, tol=tol)
        verdicts = {name: c.verdict for name, c in checks.items()}
        note = {
            "construction": "pt",
            "coefficient_above_one": True,
            "posthoc_unweighted_axioms": verdicts,
        }
        if not all(c.passed for c in checks.values()):
            note["warning"] = "sampled unweighted axioms failed on the derived distance"
        derived = SpaceDescriptor(
            oracle=oracle,
            coeff_K=space.coeff_K,
            polygon_order_n=space.polygon_order_n,
            domain=space.domain,
            class_claim=SpaceClass.METRIC_TYPE,
            hausdorff_asserted=space.hausdorff_asserted,
            complete_asserted=space.complete_asserted,
            provenance=_merge_provenance(space.provenance, note),
        )
    return derived


def from_metric_with_basepoint(
    space: SpaceDescriptor,
    x0,
    sampler: Sampler | None = None,
    tol: float = DEFAULT_TOL,
) -> SpaceDescriptor:
    """Build a weighted distance from an unrelaxed metric-type distance:

        p(x,y) = [d(x,y) + d(x,x0) + d(y,x0)] / 2.

    The input must satisfy D1 through D3 at K = 1.  The classical
    sufficient condition d(x0, x) <= d(x, y) for all x != y is sampled; a
    violation downgrades to a provenance warning because the weighted
    axioms can still hold without it.
    """
    if sampler is None:
        sampler = _default_check_sampler(space)
    base = as_point(x0, space.dim)
    if not space.domain.contains(base):
        raise InputError(f"basepoint {base.coords} outside the domain")
    checks = check_metric_type(space, sampler, K=1.0, chain_len=1, tol=tol)
    for name, check in checks.items():
        if not check.passed:
            w = check.witnesses[0]
            raise InputError(
                f"the basepoint construction needs axiom {name} at coefficient 1; "
                f"violated at {tuple(p.coords for p in w.points)} (lhs={w.lhs}, rhs={w.rhs})"
            )
    hypothesis_violations = 0
    witness = None
    for x, y in sampler.pairs(count=600):
        if x.coords == y.coords:
            continue
        if eval_distance(space, base, x) > eval_distance(space, x, y) + tol:
            hypothesis_violations += 1
            if witness is None:
                witness = (list(x.coords), list(y.coords))
    note: dict = {"construction": "basepoint", "x0": list(base.coords)}
    if hypothesis_violations:
        note["warning"] = "sampled basepoint domination hypothesis failed"
        note["hypothesis_violations"] = hypothesis_violations
        note["hypothesis_witness"] = witness

    if space.oracle.spec is None:
        raise InputError("input oracle is not serializable; the construction needs an expression or registered name")
    oracle = build_oracle({"op": "basepoint", "source": space.oracle.spec, "x0": list(base.coords)})
    return SpaceDescriptor(
        oracle=oracle,
        coeff_K=1.0,
        polygon_order_n=space.polygon_order_n,
        domain=space.domain,
        class_claim=SpaceClass.KPMS,
        hausdorff_asserted=space.hausdorff_asserted,
        complete_asserted=space.complete_asserted,
        provenance=_merge_provenance(space.provenance, note),
    )


def induced_dp(space: SpaceDescriptor, sampler: Sampler | None = None, tol: float = DEFAULT_TOL) -> SpaceDescriptor:
    """Zero out the diagonal: d_p(x,y) = 0 when x = y, else p(x,y).

    Equality means exact coordinate equality.  The result satisfies the
    unweighted axioms with the same coefficient and polygon order.
    """
    if sampler is None:
        sampler = _default_check_sampler(space)
    _require_weighted_core(space, sampler, tol, "the induced unweighted distance")
    _require_polygon(space, sampler, tol, "the induced unweighted distance")
    if space.oracle.spec is None:
        raise InputError("input oracle is not serializable; the construction needs an expression or registered name")
    oracle = build_oracle({"op": "dp", "source": space.oracle.spec})
    return SpaceDescriptor(
        oracle=oracle,
        coeff_K=space.coeff_K,
        polygon_order_n=space.polygon_order_n,
        domain=space.domain,
        class_claim=SpaceClass.METRIC_TYPE,
        hausdorff_asserted=space.hausdorff_asserted,
        complete_asserted=space.complete_asserted,
        provenance=_merge_provenance(space.provenance, {"construction": "dp"}),
    )


def power_pms(space: SpaceDescriptor, q: float, sampler: Sampler | None = None, tol: float = DEFAULT_TOL) -> SpaceDescriptor:
    """Raise an order-1, coefficient-1 weighted distance to the power q >= 1.

    Convexity of t^q gives the relaxed inequality with coefficient 2^(q-1)
    on the result.
    """
    if not (q >= 1.0):
        raise InputError(f"power exponent must be >= 1, got {q}")
    if sampler is None:
        sampler = _default_check_sampler(space)
    _require_weighted_core(space, sampler, tol, "the power construction")
    _require_polygon(space, sampler, tol, "the power construction", K=1.0, chain_len=1)
    if space.oracle.spec is None:
        raise InputError("input oracle is not serializable; the construction needs an expression or registered name")
    oracle = build_oracle({"op": "power", "base": space.oracle.spec, "q": q})
    return SpaceDescriptor(
        oracle=oracle,
        coeff_K=2.0 ** (q - 1.0),
        polygon_order_n=1,
        domain=space.domain,
        class_claim=SpaceClass.KPMS,
        hausdorff_asserted=space.hausdorff_asserted,
        complete_asserted=space.complete_asserted,
        provenance=_merge_provenance(space.provenance, {"construction": "power", "q": q}),
    )


def sum_pm_bm(
    first: SpaceDescriptor,
    second: SpaceDescriptor,
    sampler: Sampler | None = None,
    tol: float = DEFAULT_TOL,
) -> SpaceDescriptor:
    """Sum a weighted distance with an unweighted one on the same domain.

    The first input must satisfy the weighted axioms at coefficient 1 and
    order 1, the second the unweighted axioms at its own coefficient.  The
    sum keeps the weights of the first and inherits the larger coefficient.
    The combined polygon inequality is re-sampled post hoc; failures become
    provenance warnings because the sum is still a useful distance when only
    the claimed coefficient is off.
    """
    if first.domain != second.domain:
        raise InputError("summands must share one domain")
    if sampler is None:
        sampler = _default_check_sampler(first)
    _require_weighted_core(first, sampler, tol, "the sum construction")
    _require_polygon(first, sampler, tol, "the sum construction", K=1.0, chain_len=1)
    d_checks = check_metric_type(second, sampler, chain_len=1, tol=tol)
    for name, check in d_checks.items():
        if not check.passed:
            w = check.witnesses[0]
            raise InputError(
                f"the sum construction needs axiom {name} on the second input; "
                f"violated at {tuple(p.coords for p in w.points)} (lhs={w.lhs}, rhs={w.rhs})"
            )
    if first.oracle.spec is None or second.oracle.spec is None:
        raise InputError("both oracles must be serializable for the sum construction")
    oracle = build_oracle({"op": "sum", "args": [first.oracle.spec, second.oracle.spec]})
    coeff = max(1.0, second.coeff_K)
    derived = SpaceDescriptor(
        oracle=oracle,
        coeff_K=coeff,
        polygon_order_n=1,
        domain=first.domain,
        class_claim=SpaceClass.KPMS,
        hausdorff_asserted=first.hausdorff_asserted,
        complete_asserted=first.complete_asserted and second.complete_asserted,
        provenance=_merge_provenance(first.provenance, {"construction": "sum"}),
    )
    posthoc = check_pm4(derived, sampler, tol=tol)
    if not posthoc.passed:
        w = posthoc.witnesses[0]
        derived = SpaceDescriptor(
            oracle=oracle,
            coeff_K=coeff,
            polygon_order_n=1,
            domain=first.domain,
            class_claim=SpaceClass.KPMS,
            hausdorff_asserted=derived.hausdorff_asserted,
            complete_asserted=derived.complete_asserted,
            provenance=_merge_provenance(
                first.provenance,
                {
                    "construction": "sum",
                    "warning": "sampled polygon inequality failed on the sum",
                    "polygon_witness": [list(p.coords) for p in w.points],
                },
            ),
        )
    return derived


@dataclass(frozen=True)
class TransformSpec:
    """Parsed command-line request for one construction."""

    kind: str
    basepoint: tuple[float, ...] | None = None
    exponent: float | None = None
    second: SpaceDescriptor | None = None


def apply_transform(space: SpaceDescriptor, spec: TransformSpec,
                    sampler: Sampler | None = None, tol: float = DEFAULT_TOL) -> SpaceDescriptor:
    if spec.kind == "pt":
        return to_pt(space, sampler, tol)
    if spec.kind == "basepoint":
        if spec.basepoint is None:
            raise InputError("the basepoint construction needs --x0")
        return from_metric_with_basepoint(space, Point(spec.basepoint), sampler, tol)
    if spec.kind == "dp":
        return induced_dp(space, sampler, tol)
    if spec.kind == "power":
        if spec.exponent is None:
            raise InputError("the power construction needs --q")
        return power_pms(space, spec.exponent, sampler, tol)
    if spec.kind == "sum":
        if spec.second is None:
            raise InputError("the sum construction needs --space2")
        return sum_pm_bm(space, spec.second, sampler, tol)
    raise InputError(f"unknown transform kind {spec.kind!r}")
