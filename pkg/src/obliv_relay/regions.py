"""Achievable/capacity rate regions for oblivious-relay networks.

Every region is a table of subset-sum constraint classes; each class carries
all of its competing upper bounds and the effective bound is their minimum.
Bounds come in two families:

* ``joint_decoding`` — the rate cost of decoding messages jointly with the
  relay's compressed observation, I(X_S; Yhat Y | X_{S^c} Q);
* ``link_limited``  — the direct-channel rate plus digital-link capacity
  minus the compression residual that the link must also carry,
  I(X_S; Y | X_{S^c} Q) + C - I(Y_R; Yhat | X_all Y Q).

Negative computed bounds are clamped to 0 and flagged.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import brentq, linprog

from .channels import Channel, Policy
from .dist import JointDistribution, build_joint, cond_mutual_info
from .errors import ResourceLimitError, TopologyError, ValidationError
from .simplex import sample_simplex, simplex_grid

CF_FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class Bound:
    """One named upper bound on a subset-sum of rates, in bits."""

    name: str
    value: float
    raw: float
    clamped: bool

    @staticmethod
    def make(name: str, raw: float) -> "Bound":
        clamped = raw < 0.0
        return Bound(name=name, value=max(raw, 0.0), raw=raw, clamped=clamped)


@dataclass(frozen=True)
class ConstraintClass:
    """All competing bounds on one subset-sum of rates."""

    label: str
    members: tuple[int, ...]
    bounds: tuple[Bound, ...]

    @property
    def effective(self) -> float:
        return min(b.value for b in self.bounds)


@dataclass(frozen=True)
class RateRegion:
    num_sources: int
    classes: tuple[ConstraintClass, ...]
    scheme: str
    claim: str
    empty: bool = False

    def class_map(self) -> dict[str, ConstraintClass]:
        return {c.label: c for c in self.classes}

    def effective_bounds(self) -> dict[str, float]:
        return {c.label: c.effective for c in self.classes}


@dataclass(frozen=True)
class CompareResult:
    verdict: str  # equal | a_subset_b | b_subset_a | incomparable
    witness: str | None
    max_gap_bits: float


@dataclass(frozen=True)
class SearchConfig:
    """Configuration for policy-space searches (grids + random samples)."""

    resolution: int
    samples: int = 0
    seed: int = 0
    weights: tuple[float, ...] = ()
    q_size: int = 1
    compression_sizes: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.resolution < 1:
            raise ValidationError(
                f"search space empty: resolution must be >= 1, got {self.resolution}"
            )
        if self.samples < 0:
            raise ValidationError(f"samples must be >= 0, got {self.samples}")
        if self.q_size < 1:
            raise ValidationError(f"q_size must be >= 1, got {self.q_size}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.weights:
            if any(w < 0 or not math.isfinite(w) for w in self.weights):
                raise ValidationError("weights must be finite and >= 0")
            if not any(w > 0 for w in self.weights):
                raise ValidationError("weights must not all be zero")
        if self.compression_sizes is not None:
            object.__setattr__(
                self,
                "compression_sizes",
                tuple(int(s) for s in self.compression_sizes),
            )


def _subset_label(subset: Sequence[int]) -> str:
    return "+".join(f"R{i}" for i in subset)


def _nonempty_subsets(m: int) -> Iterator[tuple[int, ...]]:
    for r in range(1, m + 1):
        yield from combinations(range(1, m + 1), r)


def _x_names(indices: Iterable[int]) -> set[str]:
    return {f"X{i}" for i in indices}


# ---------------------------------------------------------------------------
# GCF regions
# ---------------------------------------------------------------------------

def _require_kind(channel: Channel, ok: tuple[str, ...], op: str) -> None:
    if channel.kind not in ok:
        raise TopologyError(
            f"{op} needs a channel of kind {ok}, got {channel.kind!r} "
            f"(M={channel.M}, K={channel.K}, mode={channel.mode})"
        )


def _gcf_classes_single_destination(
    joint: JointDistribution, M: int, C: float, dest: int = 1, suffix: str = ""
) -> list[ConstraintClass]:
    """Constraint classes for one destination: every nonempty source subset
    gets a joint-decoding bound and a link-limited bound."""
    y = f"Y{dest}"
    yh = f"Yhat{dest}"
    all_x = _x_names(range(1, M + 1))
    residual = cond_mutual_info(joint, {"YR"}, {yh}, all_x | {y, "Q"})
    classes = []
    for subset in _nonempty_subsets(M):
        xs = _x_names(subset)
        xc = all_x - xs
        jd = cond_mutual_info(joint, xs, {yh, y}, xc | {"Q"})
        ll = cond_mutual_info(joint, xs, {y}, xc | {"Q"}) + C - residual
        classes.append(
            ConstraintClass(
                label=_subset_label(subset),
                members=subset,
                bounds=(
                    Bound.make("joint_decoding" + suffix, jd),
                    Bound.make("link_limited" + suffix, ll),
                ),
            )
        )
    return classes


def gcf_region_marc_m(channel: Channel, policy: Policy) -> RateRegion:
    """Compress-and-forward-with-joint-decoding region, M sources, one destination."""
    _require_kind(channel, ("pmarc", "marc"), "gcf_region_marc_m")
    joint = build_joint(channel, policy)
    classes = _gcf_classes_single_destination(
        joint, channel.M, channel.link_capacities[0]
    )
    return RateRegion(
        num_sources=channel.M,
        classes=tuple(classes),
        scheme="gcf",
        claim="capacity (GCF)",
    )


def gcf_region_pmarc(channel: Channel, policy: Policy) -> RateRegion:
    """Two-source single-destination region: three classes, two bounds each."""
    _require_kind(channel, ("pmarc",), "gcf_region_pmarc")
    return gcf_region_marc_m(channel, policy)


def gcf_region_pifrc(
    channel: Channel, policy: Policy, condition_report=None
) -> RateRegion:
    """Two-source interference region with per-destination relay links.

    Each individual rate is bounded only at its own destination; the sum rate
    is bounded at both.  The region is labelled achievable unless a passed
    strong-interference report is supplied by the caller.
    """
    _require_kind(channel, ("pifrc",), "gcf_region_pifrc")
    joint = build_joint(channel, policy)
    all_x = {"X1", "X2"}
    residual = [
        cond_mutual_info(joint, {"YR"}, {f"Yhat{d}"}, all_x | {f"Y{d}", "Q"})
        for d in (1, 2)
    ]

    def dest_bounds(xs: set[str], d: int) -> tuple[Bound, Bound]:
        xc = all_x - xs
        y, yh = f"Y{d}", f"Yhat{d}"
        jd = cond_mutual_info(joint, xs, {yh, y}, xc | {"Q"})
        ll = (
            cond_mutual_info(joint, xs, {y}, xc | {"Q"})
            + channel.link_capacities[d - 1]
            - residual[d - 1]
        )
        return (
            Bound.make(f"joint_decoding_d{d}", jd),
            Bound.make(f"link_limited_d{d}", ll),
        )

    classes = (
        ConstraintClass("R1", (1,), dest_bounds({"X1"}, 1)),
        ConstraintClass("R2", (2,), dest_bounds({"X2"}, 2)),
        ConstraintClass(
            "R1+R2", (1, 2), dest_bounds(all_x, 1) + dest_bounds(all_x, 2)
        ),
    )
    claim = "achievable (GCF)"
    if condition_report is not None and getattr(condition_report, "holds", False):
        claim = "capacity (GCF, strong interference)"
    return RateRegion(num_sources=2, classes=classes, scheme="gcf", claim=claim)


def gcf_region_multicast(channel: Channel, policy: Policy) -> RateRegion:
    """M-source K-destination multicast region: every destination bounds every
    subset-sum, so each class carries 2K competing bounds."""
    if channel.mode != "multicast":
        raise TopologyError(
            f"gcf_region_multicast needs a multicast channel, got mode={channel.mode!r}"
        )
    joint = build_joint(channel, policy)
    M, K = channel.M, channel.K
    all_x = _x_names(range(1, M + 1))
    residual = [
        cond_mutual_info(joint, {"YR"}, {f"Yhat{d}"}, all_x | {f"Y{d}", "Q"})
        for d in range(1, K + 1)
    ]
    classes = []
    for subset in _nonempty_subsets(M):
        xs = _x_names(subset)
        xc = all_x - xs
        bounds = []
        for d in range(1, K + 1):
            y, yh = f"Y{d}", f"Yhat{d}"
            jd = cond_mutual_info(joint, xs, {yh, y}, xc | {"Q"})
            ll = (
                cond_mutual_info(joint, xs, {y}, xc | {"Q"})
                + channel.link_capacities[d - 1]
                - residual[d - 1]
            )
            bounds.append(Bound.make(f"joint_decoding_d{d}", jd))
            bounds.append(Bound.make(f"link_limited_d{d}", ll))
        classes.append(
            ConstraintClass(_subset_label(subset), subset, tuple(bounds))
        )
    return RateRegion(
        num_sources=M, classes=tuple(classes), scheme="gcf", claim="capacity (GCF)"
    )


# ---------------------------------------------------------------------------
# CF and NNC references
# ---------------------------------------------------------------------------

def cf_feasibility_gap(channel: Channel, policy: Policy) -> float:
    """C - I(Y_R; Yhat | Y, Q): nonnegative iff the compression index can be
    recovered before message decoding (sequential decoding)."""
    _require_kind(channel, ("pmarc",), "cf_feasibility_gap")
    joint = build_joint(channel, policy)
    return channel.link_capacities[0] - cond_mutual_info(
        joint, {"YR"}, {"Yhat1"}, {"Y1", "Q"}
    )


def cf_region_pmarc(channel: Channel, policy: Policy) -> RateRegion:
    """Sequential-decoding compress-and-forward region.

    Feasible only when the digital link can carry the compression index given
    the destination's side information; then the three joint-decoding bounds
    apply.  Otherwise the region is empty for this policy.
    """
    _require_kind(channel, ("pmarc",), "cf_region_pmarc")
    joint = build_joint(channel, policy)
    C = channel.link_capacities[0]
    wz = cond_mutual_info(joint, {"YR"}, {"Yhat1"}, {"Y1", "Q"})
    if wz > C + CF_FEASIBILITY_SLACK:
        return RateRegion(
            num_sources=2,
            classes=(),
            scheme="cf",
            claim="empty (CF infeasible: compression index not sequentially decodable)",
            empty=True,
        )
    classes = []
    for subset in _nonempty_subsets(2):
        xs = _x_names(subset)
        xc = {"X1", "X2"} - xs
        jd = cond_mutual_info(joint, xs, {"Yhat1", "Y1"}, xc | {"Q"})
        classes.append(
            ConstraintClass(
                _subset_label(subset),
                subset,
                (Bound.make("joint_decoding", jd),),
            )
        )
    return RateRegion(
        num_sources=2, classes=tuple(classes), scheme="cf", claim="achievable (CF)"
    )


def _entropy_matched_dist(bits: float) -> np.ndarray:
    """A pmf whose entropy equals `bits` exactly (to root-finder tolerance).

    Uses the one-parameter family (theta, (1-theta)/(m-1), ...) on the
    smallest adequate alphabet; uniform when `bits` is the log of an integer.
    """
    if bits < 0:
        raise ValidationError(f"entropy target must be >= 0, got {bits}")
    if bits == 0.0:
        return np.ones(1)
    m = max(2, math.ceil(2.0**bits - 1e-12))
    if abs(math.log2(m) - bits) < 1e-12:
        return np.full(m, 1.0 / m)
    if math.log2(m) < bits:  # guard against float dust in the ceil
        m += 1

    def h(theta: float) -> float:
        rest = (1.0 - theta) / (m - 1)
        val = -theta * math.log2(theta)
        if rest > 0:
            val -= (m - 1) * rest * math.log2(rest)
        return val

    theta = brentq(lambda t: h(t) - bits, 1.0 / m, 1.0 - 1e-15, xtol=1e-16, rtol=1e-15)
    dist = np.full(m, (1.0 - theta) / (m - 1))
    dist[0] = theta
    return dist


def nnc_region_pmarc(channel: Channel, policy: Policy) -> RateRegion:
    """Noisy-network-coding region specialized to a primitive relay link.

    Independent route from the GCF evaluation: the digital link is realized
    as an explicit relay-input variable XR with H(XR) equal to the link
    capacity, observed losslessly as YL, and the NNC cut expressions are
    evaluated on that extended joint.  The link capacity and residual terms
    emerge numerically instead of being substituted algebraically.
    """
    _require_kind(channel, ("pmarc",), "nnc_region_pmarc")
    base = build_joint(channel, policy)
    xr = _entropy_matched_dist(channel.link_capacities[0])
    nxr = xr.size
    # extend: joint over (Q, X1, X2, Y1, YR, Yhat1, XR, YL) with YL == XR
    probs = np.einsum("...,r->...r", base.probs, xr)
    probs = np.einsum("...r,rl->...rl", probs, np.eye(nxr))
    variables = base.variables + (("XR", nxr), ("YL", nxr))
    ext = JointDistribution(variables=variables, probs=probs)

    link = {"YL"}
    resid = cond_mutual_info(
        ext, {"YR"}, {"Yhat1"}, {"X1", "X2", "XR", "Y1", "Q"} | link
    )
    b_r1_jd = cond_mutual_info(ext, {"X1"}, {"Yhat1", "Y1"} | link, {"X2", "XR", "Q"})
    b_r1_ll = cond_mutual_info(ext, {"X1", "XR"}, {"Y1"} | link, {"X2", "Q"}) - resid
    b_r2_jd = cond_mutual_info(ext, {"X2"}, {"Yhat1", "Y1"} | link, {"X1", "XR", "Q"})
    b_r2_ll = cond_mutual_info(ext, {"X2", "XR"}, {"Y1"} | link, {"X1", "Q"}) - resid
    b_s_jd = cond_mutual_info(ext, {"X1", "X2"}, {"Yhat1", "Y1"} | link, {"XR", "Q"})
    b_s_ll = cond_mutual_info(ext, {"X1", "X2", "XR"}, {"Y1"} | link, {"Q"}) - resid

    classes = (
        ConstraintClass(
            "R1", (1,),
            (Bound.make("joint_decoding", b_r1_jd), Bound.make("link_limited", b_r1_ll)),
        ),
        ConstraintClass(
            "R2", (2,),
            (Bound.make("joint_decoding", b_r2_jd), Bound.make("link_limited", b_r2_ll)),
        ),
        ConstraintClass(
            "R1+R2", (1, 2),
            (Bound.make("joint_decoding", b_s_jd), Bound.make("link_limited", b_s_ll)),
        ),
    )
    return RateRegion(
        num_sources=2, classes=classes, scheme="nnc", claim="achievable (NNC)"
    )


# ---------------------------------------------------------------------------
# comparison, optimization, search
# ---------------------------------------------------------------------------

def region_compare(a: RateRegion, b: RateRegion, tol: float = 1e-9) -> CompareResult:
    """Compare per-class effective bounds.  Regions must share class labels."""
    if a.empty or b.empty:
        if a.empty and b.empty:
            return CompareResult("equal", None, 0.0)
        return CompareResult(
            "a_subset_b" if a.empty else "b_subset_a", None, math.inf
        )
    if a.num_sources != b.num_sources:
        raise ValidationError(
            f"regions have different source counts: {a.num_sources} vs {b.num_sources}"
        )
    ea, eb = a.effective_bounds(), b.effective_bounds()
    if set(ea) != set(eb):
        raise ValidationError(
            f"regions have different constraint classes: {sorted(ea)} vs {sorted(eb)}"
        )
    labels = sorted(ea, key=lambda s: (len(s), s))
    a_low = b_low = False
    witness = None
    max_gap = 0.0
    for label in labels:
        d = ea[label] - eb[label]
        if abs(d) > tol and abs(d) > max_gap:
            witness, max_gap = label, abs(d)
        if d < -tol:
            a_low = True
        elif d > tol:
            b_low = True
    if not a_low and not b_low:
        return CompareResult("equal", None, max_gap)
    if a_low and not b_low:
        return CompareResult("a_subset_b", witness, max_gap)
    if b_low and not a_low:
        return CompareResult("b_subset_a", witness, max_gap)
    return CompareResult("incomparable", witness, max_gap)


def max_weighted_rate(region: RateRegion, weights: Sequence[float]) -> float:
    """max over the region of sum_i weights[i] * R_i (linear program)."""
    if region.empty:
        return -math.inf
    w = np.asarray(weights, dtype=float)
    if w.size != region.num_sources:
        raise ValidationError(
            f"need {region.num_sources} weights, got {w.size}"
        )
    A = np.zeros((len(region.classes), region.num_sources))
    b = np.zeros(len(region.classes))
    for row, cls in enumerate(region.classes):
        for i in cls.members:
            A[row, i - 1] = 1.0
        b[row] = cls.effective
    res = linprog(-w, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    if not res.success:
        raise ValidationError(f"weighted-rate optimization failed: {res.message}")
    return float(-res.fun)


def region_for(channel: Channel, policy: Policy, scheme: str) -> RateRegion:
    """Dispatch a scheme name to the region evaluator matching the channel kind."""
    if scheme == "gcf":
        if channel.kind == "pmarc":
            return gcf_region_pmarc(channel, policy)
        if channel.kind == "marc":
            return gcf_region_marc_m(channel, policy)
        if channel.kind == "pifrc":
            return gcf_region_pifrc(channel, policy)
        return gcf_region_multicast(channel, policy)
    if scheme == "cf":
        return cf_region_pmarc(channel, policy)
    if scheme == "nnc":
        return nnc_region_pmarc(channel, policy)
    raise ValidationError(f"unknown scheme {scheme!r}; expected gcf, cf, or nnc")


@dataclass(frozen=True)
class FrontierResult:
    policy: Policy
    region: RateRegion
    value: float
    weights: tuple[float, ...]
    evaluated: int


def _policy_from_blocks(
    channel: Channel,
    q_size: int,
    comp_sizes: tuple[int, ...],
    blocks: tuple[tuple[float, ...], ...],
) -> Policy:
    """Rebuild a Policy from the flat tuple-of-simplex-points encoding."""
    idx = 0
    q_dist = np.asarray(blocks[idx])
    idx += 1
    input_dists = []
    for s in channel.input_sizes:
        rows = [np.asarray(blocks[idx + r]) for r in range(q_size)]
        idx += q_size
        input_dists.append(np.stack(rows))
    comp_dists = []
    for m in comp_sizes:
        rows = []
        for _ in range(q_size * channel.relay_size):
            rows.append(np.asarray(blocks[idx]))
            idx += 1
        comp_dists.append(
            np.stack(rows).reshape(q_size, channel.relay_size, m)
        )
    return Policy(
        q_size=q_size,
        q_dist=q_dist,
        input_dists=tuple(input_dists),
        compression_sizes=comp_sizes,
        compression_dists=tuple(comp_dists),
    )


def _policy_block_dims(
    channel: Channel, q_size: int, comp_sizes: tuple[int, ...]
) -> list[int]:
    dims = [q_size]
    for s in channel.input_sizes:
        dims.extend([s] * q_size)
    for m in comp_sizes:
        dims.extend([m] * (q_size * channel.relay_size))
    return dims


def iter_policy_grid(
    channel: Channel,
    q_size: int,
    comp_sizes: tuple[int, ...],
    resolution: int,
) -> Iterator[Policy]:
    """All policies whose every factor lies on the resolution-r simplex grid."""
    dims = _policy_block_dims(channel, q_size, comp_sizes)
    grids = [list(simplex_grid(d, resolution)) for d in dims]
    for combo in product(*grids):
        yield _policy_from_blocks(channel, q_size, comp_sizes, combo)


def _policy_key(policy: Policy) -> tuple[float, ...]:
    parts: list[float] = list(policy.q_dist)
    for d in policy.input_dists:
        parts.extend(d.ravel())
    for d in policy.compression_dists:
        parts.extend(d.ravel())
    return tuple(parts)


def frontier_search(
    channel: Channel,
    scheme: str,
    config: SearchConfig,
    threads: int = 1,
) -> FrontierResult:
    """Maximize the weighted rate over a policy grid plus random samples.

    Deterministic for a given seed; exact value ties break toward the
    lexicographically smallest policy encoding.
    """
    if not config.weights:
        raise ValidationError("frontier_search needs a nonempty weight vector")
    if len(config.weights) != channel.M:
        raise ValidationError(
            f"need {channel.M} weights for M={channel.M} sources, got "
            f"{len(config.weights)}"
        )
    comp_sizes = config.compression_sizes or (channel.relay_size,) * channel.K
    if len(comp_sizes) != channel.K:
        raise ValidationError(
            f"need {channel.K} compression sizes, got {len(comp_sizes)}"
        )

    def candidates() -> Iterator[Policy]:
        yield from iter_policy_grid(channel, config.q_size, comp_sizes, config.resolution)
        rng = np.random.default_rng(config.seed)
        dims = _policy_block_dims(channel, config.q_size, comp_sizes)
        for _ in range(config.samples):
            blocks = tuple(tuple(sample_simplex(rng, d)) for d in dims)
            yield _policy_from_blocks(channel, config.q_size, comp_sizes, blocks)

    def evaluate(policy: Policy) -> tuple[float, tuple[float, ...], Policy, RateRegion]:
        region = region_for(channel, policy, scheme)
        value = max_weighted_rate(region, config.weights)
        return value, _policy_key(policy), policy, region

    best: tuple[float, tuple[float, ...], Policy, RateRegion] | None = None
    count = 0

    def consider(item) -> None:
        nonlocal best
        value, key, policy, region = item
        if best is None:
            best = item
            return
        if value > best[0] or (value == best[0] and key < best[1]):
            best = item

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for item in pool.map(evaluate, candidates(), chunksize=64):
                consider(item)
                count += 1
    else:
        for policy in candidates():
            consider(evaluate(policy))
            count += 1

    if best is None or not math.isfinite(best[0]):
        raise ValidationError(
            "search space contained no feasible policy for the requested scheme"
        )
    return FrontierResult(
        policy=best[2],
        region=best[3],
        value=best[0],
        weights=config.weights,
        evaluated=count,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def region_to_dict(region: RateRegion) -> dict:
    return {
        "num_sources": region.num_sources,
        "scheme": region.scheme,
        "claim": region.claim,
        "empty": region.empty,
        "classes": [
            {
                "label": c.label,
                "members": list(c.members),
                "bounds": [
                    {
                        "name": b.name,
                        "value_bits": b.value,
                        "raw_bits": b.raw,
                        "clamped": b.clamped,
                    }
                    for b in c.bounds
                ],
                "effective_bits": c.effective,
            }
            for c in region.classes
        ],
    }


def region_to_json(region: RateRegion) -> str:
    return json.dumps(region_to_dict(region), sort_keys=True)


def region_to_csv(region: RateRegion) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "bound_name", "value_bits"])
    for c in region.classes:
        for b in c.bounds:
            writer.writerow([c.label, b.name, repr(b.value)])
        writer.writerow([c.label, "effective", repr(c.effective)])
    return buf.getvalue()
