"""Dense joint distributions, marginalization, and information measures.

All information quantities are in bits (base-2 logs) with the convention
0*log(0) = 0.  Joints are dense numpy arrays whose axes follow the declared
variable order; the flattened row-major order therefore matches the variable
list.  Alphabet products are capped at 10**7 cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .channels import Channel, Policy
from .errors import NumericsError, ResourceLimitError, ValidationError

MI_NEGATIVE_TRIPWIRE = -1e-12
DENSE_CELL_CAP = 10**7


@dataclass(frozen=True)
class JointDistribution:
    """A joint pmf over named finite variables.

    ``variables`` is an ordered tuple of (name, alphabet_size); ``probs`` has
    one axis per variable, in that order.
    """

    variables: tuple[tuple[str, int], ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        variables = tuple((str(n), int(s)) for n, s in self.variables)
        object.__setattr__(self, "variables", variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate variable names: {names}")
        if any(s < 1 for _, s in variables):
            raise ValidationError("alphabet sizes must be >= 1")
        sizes = tuple(s for _, s in variables)
        if int(np.prod(sizes)) > DENSE_CELL_CAP:
            raise ResourceLimitError(
                f"joint would need {int(np.prod(sizes))} cells (cap {DENSE_CELL_CAP})"
            )
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != sizes:
            if probs.size == int(np.prod(sizes)):
                probs = probs.reshape(sizes)
            else:
                raise ValidationError(
                    f"probs shape {probs.shape} does not match variable sizes {sizes}"
                )
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be finite and nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total:.12g}, expected 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s for _, s in self.variables)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown variable {name!r}; have {self.names}"
            ) from None


def _trusted_joint(
    variables: tuple[tuple[str, int], ...], probs: np.ndarray
) -> JointDistribution:
    """Construct without re-validation; only for arrays derived from an
    already-validated joint (marginal sums preserve all pmf invariants)."""
    obj = object.__new__(JointDistribution)
    object.__setattr__(obj, "variables", variables)
    probs.setflags(write=False)
    object.__setattr__(obj, "probs", probs)
    return obj


def marginalize(joint: JointDistribution, keep: Iterable[str]) -> JointDistribution:
    """Sum out all variables not in `keep`; kept axes stay in original order."""
    keep_set = set(keep)
    unknown = keep_set - set(joint.names)
    if unknown:
        raise ValidationError(f"unknown variables {sorted(unknown)}; have {joint.names}")
    if not keep_set:
        raise ValidationError("must keep at least one variable")
    drop_axes = tuple(i for i, n in enumerate(joint.names) if n not in keep_set)
    probs = joint.probs.sum(axis=drop_axes) if drop_axes else joint.probs.copy()
    variables = tuple(v for v in joint.variables if v[0] in keep_set)
    return _trusted_joint(variables, probs)


def _group_axes(joint: JointDistribution, names: Iterable[str]) -> tuple[int, ...]:
    return tuple(joint.axis(n) for n in names)


def cond_mutual_info(
    joint: JointDistribution,
    a: Iterable[str],
    b: Iterable[str],
    given: Iterable[str] = (),
) -> float:
    """I(A;B|C) in bits, computed by direct summation over the support.

    Values in (-1e-12, 0) are rounded up to 0; anything more negative raises
    NumericsError, since conditional mutual information cannot be negative.
    """
    a, b, c = set(a), set(b), set(given)
    if not a or not b:
        raise ValidationError("both variable groups must be nonempty")
    if a & b or a & c or b & c:
        raise ValidationError(
            f"variable groups must be pairwise disjoint, got A={sorted(a)}, "
            f"B={sorted(b)}, C={sorted(c)}"
        )
    m = marginalize(joint, a | b | c)
    pabc = m.probs
    ax_a = _group_axes(m, a)
    ax_b = _group_axes(m, b)
    pac = pabc.sum(axis=ax_b, keepdims=True)
    pbc = pabc.sum(axis=ax_a, keepdims=True)
    pc = pac.sum(axis=ax_a, keepdims=True)
    # on the support pabc > 0 all three marginals are positive; off it the
    # convention 0*log(0/0) = 0 applies
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log2((pabc * pc) / (pac * pbc))
        terms = np.where(pabc > 0, pabc * ratio, 0.0)
    value = float(np.sum(terms))
    if value < MI_NEGATIVE_TRIPWIRE:
        raise NumericsError(
            f"conditional mutual information evaluated to {value}, below the "
            f"{MI_NEGATIVE_TRIPWIRE} tripwire"
        )
    return max(value, 0.0)


def entropy(
    joint: JointDistribution,
    of: Iterable[str],
    given: Iterable[str] = (),
) -> float:
    """H(A|C) in bits with 0*log(0) = 0."""
    a, c = set(of), set(given)
    if not a:
        raise ValidationError("entropy needs at least one variable")
    if a & c:
        raise ValidationError("conditioned and conditioning variables overlap")

    def _h(names: set[str]) -> float:
        p = marginalize(joint, names).probs
        p = p[p > 0]
        return float(-(p * np.log2(p)).sum())

    if not c:
        return _h(a)
    return _h(a | c) - _h(c)


@lru_cache(maxsize=256)
def _einsum_path(equation: str, shapes: tuple[tuple[int, ...], ...]):
    """Contraction order depends only on the equation and operand shapes, so
    grid searches over same-shaped policies reuse one plan."""
    dummies = [np.empty(shape) for shape in shapes]
    return np.einsum_path(equation, *dummies, optimize="optimal")[0]


def build_joint(channel: Channel, policy: Policy) -> JointDistribution:
    """Assemble the full evaluation joint over (Q, X_i, Y_k, Y_R, Yhat_k).

    The law factors as p(q) * prod_i p(x_i|q) * p(y_1..y_K, y_R | x_1..x_M)
    * prod_k p(yhat_k | y_R, q): sources are independent given Q and the
    compression variables depend only on (Y_R, Q).
    """
    policy.check_against(channel)
    M, K = channel.M, channel.K
    n_vars = 2 + M + 2 * K
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if n_vars > len(letters):
        raise ResourceLimitError(f"too many variables ({n_vars}) for dense assembly")

    q = letters[0]
    xs = letters[1 : 1 + M]
    ys = letters[1 + M : 1 + M + K]
    yr = letters[1 + M + K]
    yh = letters[2 + M + K : 2 + M + 2 * K]

    operands = [policy.q_dist]
    subs = [q]
    for i in range(M):
        operands.append(policy.input_dists[i])
        subs.append(q + xs[i])
    operands.append(channel.kernel)
    subs.append("".join(xs) + "".join(ys) + yr)
    for k in range(K):
        operands.append(policy.compression_dists[k])
        subs.append(q + yr + yh[k])
    out = q + "".join(xs) + "".join(ys) + yr + "".join(yh)

    sizes = (
        (policy.q_size,)
        + channel.input_sizes
        + channel.output_sizes
        + (channel.relay_size,)
        + policy.compression_sizes
    )
    if int(np.prod(sizes)) > DENSE_CELL_CAP:
        raise ResourceLimitError(
            f"joint would need {int(np.prod(sizes))} cells (cap {DENSE_CELL_CAP})"
        )
    equation = ",".join(subs) + "->" + out
    path = _einsum_path(equation, tuple(op.shape for op in operands))
    probs = np.einsum(equation, *operands, optimize=path)
    variables = (
        [("Q", policy.q_size)]
        + [(f"X{i + 1}", channel.input_sizes[i]) for i in range(M)]
        + [(f"Y{k + 1}", channel.output_sizes[k]) for k in range(K)]
        + [("YR", channel.relay_size)]
        + [(f"Yhat{k + 1}", policy.compression_sizes[k]) for k in range(K)]
    )
    return JointDistribution(variables=tuple(variables), probs=probs)


def input_product_joint(channel: Channel, input_dists: Iterable[np.ndarray]) -> JointDistribution:
    """Joint over (X_1..X_M, Y_1..Y_K, Y_R) under independent inputs, no Q."""
    dists = [np.asarray(d, dtype=float) for d in input_dists]
    if len(dists) != channel.M:
        raise ValidationError(
            f"need {channel.M} input distributions, got {len(dists)}"
        )
    for i, d in enumerate(dists):
        if d.shape != (channel.input_sizes[i],):
            raise ValidationError(
                f"input distribution {i} has shape {d.shape}, expected "
                f"({channel.input_sizes[i]},)"
            )
    probs = channel.kernel
    for i, d in enumerate(dists):
        shape = [1] * probs.ndim
        shape[i] = d.size
        probs = probs * d.reshape(shape)
    variables = (
        [(f"X{i + 1}", channel.input_sizes[i]) for i in range(channel.M)]
        + [(f"Y{k + 1}", channel.output_sizes[k]) for k in range(channel.K)]
        + [("YR", channel.relay_size)]
    )
    return JointDistribution(variables=tuple(variables), probs=probs)
