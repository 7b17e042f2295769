"""Strong-interference condition checks and Gaussian cross-validation.

The discrete checker searches product input distributions for a violation of
the strong-interference inequalities; a negative minimum gap certifies a
violation, while a nonnegative minimum over a finite search is evidence only
(not a proof).  The Gaussian checker evaluates the closed-form conditions in
squared-gain units and cross-validates the scalar log form of each side
against a 2x2 covariance log-determinant evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import Channel, GaussianIFRC
from .dist import cond_mutual_info, input_product_joint
from .errors import NumericsError, TopologyError, ValidationError
from .regions import SearchConfig
from .simplex import sample_simplex, simplex_grid

HOLD_TOL = 1e-9
EQUIV_TOL = 1e-10
# seven-point geometric sweep of power scale factors over [0.1, 10]
DEFAULT_POWER_SWEEP = tuple(float(p) for p in np.geomspace(0.1, 10.0, 7))


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a strong-interference check.

    ``min_gap`` holds, per condition, the minimum over the searched set of
    (cross-link term) - (own-link term); both must be >= -1e-9 for ``holds``.
    ``certified`` is "violation" when a negative gap was found and
    "evidence_only" otherwise — a finite search cannot prove the condition.
    """

    holds: bool
    min_gap: tuple[float, float]
    witnesses: tuple[dict, dict]
    units: str
    certified: str
    resolution: int | None = None
    samples: int | None = None
    seed: int | None = None
    note: str = ""


def strong_interference_dmc(channel: Channel, config: SearchConfig) -> ConditionReport:
    """Search product inputs p(x1)p(x2) for strong-interference violations.

    gap_1 = I(X1;Y2|X2) - I(X1;Y1,YR|X2) and symmetrically
    gap_2 = I(X2;Y1|X1) - I(X2;Y2,YR|X1); the searched set is the full
    resolution-r grid on both input simplices plus `samples` random draws.
    """
    if channel.kind != "pifrc":
        raise TopologyError(
            f"strong_interference_dmc needs a pifrc channel, got {channel.kind!r}"
        )

    def gaps(p1: np.ndarray, p2: np.ndarray) -> tuple[float, float]:
        joint = input_product_joint(channel, (p1, p2))
        g1 = cond_mutual_info(joint, {"X1"}, {"Y2"}, {"X2"}) - cond_mutual_info(
            joint, {"X1"}, {"Y1", "YR"}, {"X2"}
        )
        g2 = cond_mutual_info(joint, {"X2"}, {"Y1"}, {"X1"}) - cond_mutual_info(
            joint, {"X2"}, {"Y2", "YR"}, {"X1"}
        )
        return g1, g2

    best = [math.inf, math.inf]
    witness: list[dict] = [{}, {}]
    for p1 in simplex_grid(channel.input_sizes[0], config.resolution):
        a1 = np.asarray(p1)
        for p2 in simplex_grid(channel.input_sizes[1], config.resolution):
            a2 = np.asarray(p2)
            for i, g in enumerate(gaps(a1, a2)):
                if g < best[i]:
                    best[i] = g
                    witness[i] = {"p_x1": list(map(float, a1)), "p_x2": list(map(float, a2))}
    rng = np.random.default_rng(config.seed)
    for _ in range(config.samples):
        a1 = sample_simplex(rng, channel.input_sizes[0])
        a2 = sample_simplex(rng, channel.input_sizes[1])
        for i, g in enumerate(gaps(a1, a2)):
            if g < best[i]:
                best[i] = g
                witness[i] = {"p_x1": list(map(float, a1)), "p_x2": list(map(float, a2))}

    holds = best[0] >= -HOLD_TOL and best[1] >= -HOLD_TOL
    return ConditionReport(
        holds=holds,
        min_gap=(best[0], best[1]),
        witnesses=(witness[0], witness[1]),
        units="bits",
        certified="evidence_only" if holds else "violation",
        resolution=config.resolution,
        samples=config.samples,
        seed=config.seed,
        note="finite search: a nonnegative minimum gap is not a proof",
    )


def recompute_dmc_gap(channel: Channel, witness: dict, condition: int) -> float:
    """Re-evaluate one strong-interference gap at a reported witness input."""
    p1 = np.asarray(witness["p_x1"], dtype=float)
    p2 = np.asarray(witness["p_x2"], dtype=float)
    joint = input_product_joint(channel, (p1, p2))
    if condition == 1:
        return cond_mutual_info(joint, {"X1"}, {"Y2"}, {"X2"}) - cond_mutual_info(
            joint, {"X1"}, {"Y1", "YR"}, {"X2"}
        )
    if condition == 2:
        return cond_mutual_info(joint, {"X2"}, {"Y1"}, {"X1"}) - cond_mutual_info(
            joint, {"X2"}, {"Y2", "YR"}, {"X1"}
        )
    raise ValidationError(f"condition must be 1 or 2, got {condition}")


def strong_interference_gaussian(g: GaussianIFRC) -> ConditionReport:
    """Closed-form strong-interference test in squared-gain units.

    Condition 1 requires h12^2 >= h11^2 + h1R^2; condition 2 requires
    h21^2 >= h22^2 + h2R^2.  Boundary equality counts as holding.
    """
    gap1 = g.h12**2 - (g.h11**2 + g.h1R**2)
    gap2 = g.h21**2 - (g.h22**2 + g.h2R**2)
    holds = gap1 >= -HOLD_TOL and gap2 >= -HOLD_TOL
    return ConditionReport(
        holds=holds,
        min_gap=(gap1, gap2),
        witnesses=(
            {"lhs_gain_sq": g.h11**2 + g.h1R**2, "rhs_gain_sq": g.h12**2},
            {"lhs_gain_sq": g.h22**2 + g.h2R**2, "rhs_gain_sq": g.h21**2},
        ),
        units="gain_squared",
        certified="evidence_only" if holds else "violation",
        note="closed form; power-independent",
    )


@dataclass(frozen=True)
class GaussianEquivalenceReport:
    """Scalar-vs-covariance cross-check of the Gaussian condition sides."""

    powers: tuple[float, ...]
    lhs_scalar: tuple[tuple[float, ...], tuple[float, ...]]
    lhs_logdet: tuple[tuple[float, ...], tuple[float, ...]]
    rhs: tuple[tuple[float, ...], tuple[float, ...]]
    max_route_gap: float
    holds: bool
    consistent: bool


def _logdet_rate(gains: tuple[float, float], power: float) -> float:
    """0.5*log2 det(I + P h h^T) for a two-observation Gaussian channel."""
    h = np.asarray(gains, dtype=float)
    sign, logdet = np.linalg.slogdet(np.eye(2) + power * np.outer(h, h))
    if sign <= 0:
        raise NumericsError("covariance matrix lost positive definiteness")
    return 0.5 * logdet / math.log(2.0)


def gaussian_equivalence_check(
    g: GaussianIFRC, powers: Sequence[float] | None = None
) -> GaussianEquivalenceReport:
    """Cross-validate both sides of the Gaussian conditions over a power sweep.

    For each condition the left side (own channel plus relay view) is computed
    two ways — scalar combined-gain form and 2x2 log-determinant form — and
    must agree within 1e-10; the right side is the cross-channel rate.  The
    report records whether side comparisons across the sweep are consistent
    with the squared-gain verdict.
    """
    sweep = tuple(float(p) for p in (powers if powers is not None else DEFAULT_POWER_SWEEP))
    if not sweep or any(p <= 0 or not math.isfinite(p) for p in sweep):
        raise ValidationError("power sweep must contain positive finite values")
    combos = (
        ((g.h11, g.h1R), g.h12, g.P1),
        ((g.h22, g.h2R), g.h21, g.P2),
    )
    lhs_scalar, lhs_logdet, rhs = [], [], []
    max_gap = 0.0
    for gains, cross, base_power in combos:
        s_row, d_row, r_row = [], [], []
        for p in sweep:
            power = p * base_power
            s = 0.5 * math.log2(1.0 + (gains[0] ** 2 + gains[1] ** 2) * power)
            d = _logdet_rate(gains, power)
            gap = abs(s - d)
            if gap > EQUIV_TOL:
                raise NumericsError(
                    f"scalar and log-det evaluations disagree by {gap:.3e} bits"
                )
            max_gap = max(max_gap, gap)
            s_row.append(s)
            d_row.append(d)
            r_row.append(0.5 * math.log2(1.0 + cross**2 * power))
        lhs_scalar.append(tuple(s_row))
        lhs_logdet.append(tuple(d_row))
        rhs.append(tuple(r_row))

    verdict = strong_interference_gaussian(g).holds
    consistent = True
    for cond in range(2):
        for lhs_v, rhs_v in zip(lhs_scalar[cond], rhs[cond]):
            if verdict and lhs_v > rhs_v + HOLD_TOL:
                consistent = False
    return GaussianEquivalenceReport(
        powers=sweep,
        lhs_scalar=(lhs_scalar[0], lhs_scalar[1]),
        lhs_logdet=(lhs_logdet[0], lhs_logdet[1]),
        rhs=(rhs[0], rhs[1]),
        max_route_gap=max_gap,
        holds=verdict,
        consistent=consistent,
    )


def condition_report_to_dict(report: ConditionReport) -> dict:
    return {
        "holds": report.holds,
        "min_gap": list(report.min_gap),
        "witnesses": list(report.witnesses),
        "units": report.units,
        "certified": report.certified,
        "search": {
            "resolution": report.resolution,
            "samples": report.samples,
            "seed": report.seed,
        },
        "note": report.note,
    }


def condition_report_to_json(report: ConditionReport) -> str:
    return json.dumps(condition_report_to_dict(report), sort_keys=True)


def equivalence_report_to_dict(report: GaussianEquivalenceReport) -> dict:
    return {
        "powers": list(report.powers),
        "lhs_scalar": [list(r) for r in report.lhs_scalar],
        "lhs_logdet": [list(r) for r in report.lhs_logdet],
        "rhs": [list(r) for r in report.rhs],
        "max_route_gap": report.max_route_gap,
        "holds": report.holds,
        "consistent": report.consistent,
    }
