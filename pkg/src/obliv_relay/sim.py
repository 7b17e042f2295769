"""Monte Carlo verification of the compress-and-forward joint-decoding scheme.

Each trial draws fresh codebooks from the randomized generation law (so the
estimate targets the random-coding ensemble), transmits uniform messages,
lets the relay pick the smallest typical compression index, bins that index
onto the digital link, and joint-decodes messages together with the index at
each destination.  Failed trials are classified into exclusive error events:

E0  relay covering failure (no typical compression codeword)
E1  the transmitted tuple itself fell outside the typical set
E2  some wrong first message was typical with the true index (second correct)
E3  some wrong second message was typical with the true index (first correct)
E4  some jointly wrong message pair was typical with the true index
E5-E7  as E2-E4 but only via a wrong index from the same bin

For the two-destination interference topology the per-destination analogues
are keyed d<k>_E0 (covering), d<k>_E1 (true tuple atypical), d<k>_E2 (wrong
intended message with the true index) and d<k>_E3 (wrong intended message
only via another index); a destination errs only on its intended message.

Typicality is robust letter typicality: a tuple is epsilon-typical when every
cell's empirical frequency pi satisfies |pi - p| <= epsilon * p, which forces
pi = 0 wherever p = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Mapping, Sequence

import numpy as np

from .channels import Channel, Policy
from .dist import JointDistribution, build_joint, marginalize
from .errors import ResourceLimitError, TopologyError, ValidationError

DECODE_TUPLE_CAP = 10**7
CODEBOOK_CELL_CAP = 5 * 10**7
LEMMA_ATOM_CAP = 4096
_COUNT_FUZZ = 1e-9

TOPOLOGIES = ("pmarc", "pifrc")


def message_count(n: int, rate: float) -> int:
    """ceil(2^(n*rate)) messages, at least 1; guarded against float dust."""
    return max(1, math.ceil(2.0 ** (n * rate) - _COUNT_FUZZ))


def bin_count(n: int, capacity: float) -> int:
    """floor(2^(n*C)) bins, at least 1."""
    return max(1, math.floor(2.0 ** (n * capacity) + _COUNT_FUZZ))


@dataclass(frozen=True)
class SimConfig:
    n: int
    rates: tuple[float, float]
    compression_rates: tuple[float, ...]
    epsilon: float = 0.2
    trials: int = 1
    seed: int = 0
    topology: str = "pmarc"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"blocklength must be >= 1, got {self.n}")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(
            self, "compression_rates", tuple(float(r) for r in self.compression_rates)
        )
        if len(self.rates) != 2:
            raise ValidationError(f"need 2 message rates, got {len(self.rates)}")
        if any(r < 0 or not math.isfinite(r) for r in self.rates):
            raise ValidationError(f"rates must be finite and >= 0, got {self.rates}")
        if self.topology not in TOPOLOGIES:
            raise ValidationError(
                f"topology must be one of {TOPOLOGIES}, got {self.topology!r}"
            )
        want = 1 if self.topology == "pmarc" else 2
        if len(self.compression_rates) != want:
            raise ValidationError(
                f"{self.topology} needs {want} compression rate(s), got "
                f"{len(self.compression_rates)}"
            )
        if any(r < 0 or not math.isfinite(r) for r in self.compression_rates):
            raise ValidationError("compression rates must be finite and >= 0")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """One instance of the randomized codebook ensemble."""

    q_seq: np.ndarray
    message_codebooks: tuple[np.ndarray, ...]
    compression_codebooks: tuple[np.ndarray, ...]
    bin_counts: tuple[int, ...]

    def bin_of(self, l: int, destination: int = 1) -> int:
        return int(l) % self.bin_counts[destination - 1]

    def bin_members(self, k: int, destination: int = 1) -> np.ndarray:
        size = self.compression_codebooks[destination - 1].shape[0]
        return np.arange(k, size, self.bin_counts[destination - 1])


@dataclass(frozen=True)
class CoveringFailure:
    """Relay found no typical compression codeword (event E0); an outcome, not a fault."""

    destination: int = 1


@dataclass(frozen=True)
class DecodeResult:
    outcome: str  # decoded | ambiguous | none_typical
    messages: tuple[int, int] | None
    intended: int | None = None


@dataclass(frozen=True, eq=False)
class SimReport:
    config: SimConfig
    trials: int
    errors: int
    event_counts: dict[str, int]
    error_rate: float
    ci_half_width: float


@dataclass(frozen=True)
class LemmaReport:
    """Total-variation check of the single-letter product laws."""

    n: int
    samples: int
    seed: int
    tv_inputs: tuple[float, ...]
    tv_outputs: tuple[float, ...]
    message_rate: float


# ---------------------------------------------------------------------------
# typicality machinery
# ---------------------------------------------------------------------------

def _count_window(probs: np.ndarray, n: int, epsilon: float):
    lo = n * probs * (1.0 - epsilon) - _COUNT_FUZZ
    hi = n * probs * (1.0 + epsilon) + _COUNT_FUZZ
    return lo, hi


def is_typical(
    sequences: Mapping[str, np.ndarray],
    joint: JointDistribution,
    epsilon: float,
) -> bool:
    """Robust letter typicality of named sequences against a joint pmf."""
    if set(sequences) != set(joint.names):
        raise ValidationError(
            f"sequences cover {sorted(sequences)}, joint has {sorted(joint.names)}"
        )
    seqs = [np.asarray(sequences[name], dtype=int) for name in joint.names]
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise ValidationError("all sequences must share one length")
    for s, size in zip(seqs, joint.sizes):
        if s.min(initial=0) < 0 or s.max(initial=0) >= size:
            raise ValidationError("sequence symbol out of alphabet range")
    flat = np.ravel_multi_index(tuple(seqs), joint.sizes)
    counts = np.bincount(flat, minlength=int(np.prod(joint.sizes)))
    lo, hi = _count_window(joint.probs.ravel(), n, epsilon)
    return bool(np.all((counts >= lo) & (counts <= hi)))


def _one_hot(codebook: np.ndarray, alphabet: int) -> np.ndarray:
    """(m, n) symbol matrix -> (m, n, alphabet) float32 indicator tensor."""
    m, n = codebook.shape
    out = np.zeros((m, n, alphabet), dtype=np.float32)
    rows = np.repeat(np.arange(m), n)
    cols = np.tile(np.arange(n), m)
    out[rows, cols, codebook.ravel()] = 1.0
    return out


class _PairScanner:
    """Typicality scan over all message pairs for one destination.

    Cells of the decode joint (Q, X1, X2, Yhat_d, Y_d) are grouped by the
    per-position class (q, yhat, y); for each candidate compression word the
    pair counts per class come from one-hot matrix products.  The scanner
    holds only the (immutable) count windows, so one instance can serve
    concurrent trials.
    """

    def __init__(self, joint: JointDistribution, n: int, epsilon: float):
        # joint axes ordered (Q, X1, X2, Yhat, Y)
        self.sq, self.a1, self.a2, self.sh, self.sy = joint.sizes
        self.n = n
        p = np.moveaxis(joint.probs, (0, 3, 4, 1, 2), (0, 1, 2, 3, 4))
        # p now indexed [q, h, y, a, b]
        self.G = self.sq * self.sh * self.sy
        p = p.reshape(self.G, self.a1, self.a2)
        self.lo, self.hi = _count_window(p, n, epsilon)
        self.absent_ok = (self.lo <= 0).all(axis=(1, 2))

    def pair_mask(
        self,
        q_seq: np.ndarray,
        y_seq: np.ndarray,
        yh_seq: np.ndarray,
        oh1: np.ndarray,
        oh2: np.ndarray,
    ) -> np.ndarray:
        m1, m2 = oh1.shape[0], oh2.shape[0]
        cls = (q_seq * self.sh + yh_seq) * self.sy + y_seq
        present, inverse = np.unique(cls, return_inverse=True)
        ok_absent = self.absent_ok.copy()
        ok_absent[present] = True
        if not ok_absent.all():
            return np.zeros((m1, m2), dtype=bool)
        mask = np.ones((m1, m2), dtype=bool)
        for pi, g in enumerate(present):
            positions = np.nonzero(inverse == pi)[0]
            left = oh1[:, positions, :]  # (m1, |J|, a1)
            right = oh2[:, positions, :]  # (m2, |J|, a2)
            lmat = left.transpose(0, 2, 1).reshape(m1 * self.a1, -1)
            rmat = right.transpose(1, 0, 2).reshape(-1, m2 * self.a2)
            counts = (lmat @ rmat).reshape(m1, self.a1, m2, self.a2)
            counts = counts.transpose(0, 2, 1, 3)
            ok = (counts >= self.lo[g]) & (counts <= self.hi[g])
            mask &= ok.all(axis=(2, 3))
            if not mask.any():
                break
        return mask


class _DestinationContext:
    def __init__(self, channel: Channel, policy: Policy, cfg: SimConfig, d: int):
        joint = build_joint(channel, policy)
        names = ("Q", "X1", "X2", f"Yhat{d}", f"Y{d}")
        decode_joint = marginalize(joint, names)
        self.scanner = _PairScanner(decode_joint, cfg.n, cfg.epsilon)
        relay_joint = marginalize(joint, ("Q", "YR", f"Yhat{d}"))
        self.relay_lo, self.relay_hi = _count_window(
            relay_joint.probs.ravel(), cfg.n, cfg.epsilon
        )
        self.relay_sizes = relay_joint.sizes  # (q, yR, yhat)
        # codeword generation law: the compression marginal given q
        cond = marginalize(joint, ("Q", f"Yhat{d}")).probs
        qmass = cond.sum(axis=1, keepdims=True)
        safe = np.where(qmass > 0, qmass, 1.0)
        self.comp_given_q = cond / safe
        self.size = message_count(cfg.n, cfg.compression_rates[d - 1])
        self.bins = bin_count(cfg.n, channel.link_capacities[d - 1])


class _SimContext:
    def __init__(self, channel: Channel, policy: Policy, cfg: SimConfig):
        policy.check_against(channel)
        if cfg.topology == "pmarc" and channel.kind not in ("pmarc",):
            raise TopologyError(
                f"pmarc simulation needs a pmarc channel, got {channel.kind!r}"
            )
        if cfg.topology == "pifrc" and channel.kind != "pifrc":
            raise TopologyError(
                f"pifrc simulation needs a pifrc channel, got {channel.kind!r}"
            )
        self.channel, self.policy, self.cfg = channel, policy, cfg
        self.m = (
            message_count(cfg.n, cfg.rates[0]),
            message_count(cfg.n, cfg.rates[1]),
        )
        self.dest = [
            _DestinationContext(channel, policy, cfg, d)
            for d in range(1, channel.K + 1)
        ]
        self.input_cdfs = [np.cumsum(d, axis=1) for d in policy.input_dists]
        self.q_cdf = np.cumsum(policy.q_dist)
        out_cells = int(np.prod(channel.output_sizes)) * channel.relay_size
        flat_kernel = channel.kernel.reshape(-1, out_cells)
        self.out_cdf = np.cumsum(flat_kernel, axis=1)
        self.out_shape = tuple(channel.output_sizes) + (channel.relay_size,)

        cells = (self.m[0] + self.m[1] + sum(d.size for d in self.dest)) * cfg.n
        if cells > CODEBOOK_CELL_CAP:
            raise ResourceLimitError(
                f"codebooks would need {cells} cells (cap {CODEBOOK_CELL_CAP})"
            )
        for d in self.dest:
            largest_bin = math.ceil(d.size / d.bins)
            tuples = self.m[0] * self.m[1] * largest_bin
            if tuples > DECODE_TUPLE_CAP:
                raise ResourceLimitError(
                    f"decoding would scan {tuples} tuples per trial "
                    f"(cap {DECODE_TUPLE_CAP}); lower the rates, blocklength, "
                    f"or compression rate"
                )

    # -- sampling ----------------------------------------------------------

    def draw_codebooks(self, rng: np.random.Generator) -> CodebookSet:
        n = self.cfg.n
        q_seq = _inverse_cdf(self.q_cdf[None, :].repeat(n, axis=0), rng.random(n))
        books = []
        for i in range(2):
            cdf_rows = self.input_cdfs[i][q_seq]  # (n, |X_i|)
            u = rng.random((self.m[i], n))
            books.append(_inverse_cdf_rows(cdf_rows, u))
        comp_books = []
        for d in self.dest:
            cdf_rows = np.cumsum(d.comp_given_q, axis=1)[q_seq]
            u = rng.random((d.size, n))
            comp_books.append(_inverse_cdf_rows(cdf_rows, u))
        return CodebookSet(
            q_seq=q_seq,
            message_codebooks=(books[0], books[1]),
            compression_codebooks=tuple(comp_books),
            bin_counts=tuple(d.bins for d in self.dest),
        )

    def draw_outputs(self, rng, x1: np.ndarray, x2: np.ndarray):
        in_code = x1 * self.channel.input_sizes[1] + x2
        rows = self.out_cdf[in_code]  # (n, out_cells)
        flat = _inverse_cdf_rows_single(rows, rng.random(self.cfg.n))
        outs = np.unravel_index(flat, self.out_shape)
        ys = outs[: self.channel.K]
        yr = outs[self.channel.K]
        return ys, yr

    # -- relay operation ---------------------------------------------------

    def compress(self, d_idx: int, yr_seq, q_seq, comp_cb) -> int | None:
        d = self.dest[d_idx]
        sq, sr, sh = d.relay_sizes
        base = (q_seq * sr + yr_seq) * sh
        ncells = sq * sr * sh
        L = comp_cb.shape[0]
        chunk = max(1, (4 * 10**6) // max(1, self.cfg.n))
        for start in range(0, L, chunk):
            block = comp_cb[start : start + chunk]
            codes = base[None, :] + block
            rows = np.arange(block.shape[0])[:, None]
            flat = (rows * ncells + codes).ravel()
            counts = np.bincount(flat, minlength=block.shape[0] * ncells)
            counts = counts.reshape(block.shape[0], ncells)
            ok = ((counts >= d.relay_lo) & (counts <= d.relay_hi)).all(axis=1)
            hits = np.nonzero(ok)[0]
            if hits.size:
                return start + int(hits[0])
        return None

    def scan_bin(
        self, d_idx: int, y_seq, q_seq, members, comp_cb, oh1, oh2
    ) -> Iterator[tuple[int, np.ndarray]]:
        d = self.dest[d_idx]
        for l_hat in members:
            yield int(l_hat), d.scanner.pair_mask(
                q_seq, y_seq, comp_cb[l_hat], oh1, oh2
            )

    def message_one_hots(self, books: CodebookSet):
        a1, a2 = self.channel.input_sizes
        return (
            _one_hot(books.message_codebooks[0], a1),
            _one_hot(books.message_codebooks[1], a2),
        )


def _inverse_cdf(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise inverse CDF: cdf_rows is (n, k), u is (n,)."""
    idx = (cdf_rows < u[:, None]).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def _inverse_cdf_rows(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """cdf_rows is (n, k); u is (m, n); returns (m, n) integer samples."""
    idx = (u[:, :, None] > cdf_rows[None, :, :]).sum(axis=2)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def _inverse_cdf_rows_single(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = (u[:, None] > cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def build_codebooks(
    channel: Channel,
    policy: Policy,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> CodebookSet:
    """Draw one codebook set: a shared time-sharing sequence, per-source
    message codebooks of ceil(2^{nR_i}) words drawn i.i.d. from p(x_i|q_j),
    and per-destination compression codebooks with round-robin binning."""
    ctx = _SimContext(channel, policy, cfg)
    return ctx.draw_codebooks(rng)


def relay_compress(
    yr_seq: Sequence[int],
    q_seq: Sequence[int],
    codebooks: CodebookSet,
    channel: Channel,
    policy: Policy,
    epsilon: float,
    destination: int = 1,
):
    """Pick the smallest compression index jointly typical with (y_R, q).

    Returns (index, bin); a CoveringFailure outcome when no index is typical.
    """
    cfg = _single_shot_config(channel, codebooks, epsilon)
    ctx = _SimContext(channel, policy, cfg)
    yr = np.asarray(yr_seq, dtype=int)
    q = np.asarray(q_seq, dtype=int)
    l = ctx.compress(
        destination - 1, yr, q, codebooks.compression_codebooks[destination - 1]
    )
    if l is None:
        return CoveringFailure(destination=destination)
    return l, codebooks.bin_of(l, destination)


def joint_decode(
    y_seq: Sequence[int],
    q_seq: Sequence[int],
    bin_index: int,
    codebooks: CodebookSet,
    channel: Channel,
    policy: Policy,
    epsilon: float,
    destination: int = 1,
) -> DecodeResult:
    """Exhaustively scan message pairs and the bin's compression words.

    Returns the unique typical message pair, `ambiguous` when several
    distinct pairs are typical, `none_typical` when none is.  For the
    interference topology `intended` carries the destination's own message
    when all typical tuples agree on it, even if the pair is ambiguous.
    """
    cfg = _single_shot_config(channel, codebooks, epsilon)
    ctx = _SimContext(channel, policy, cfg)
    d_idx = destination - 1
    oh1, oh2 = ctx.message_one_hots(codebooks)
    y = np.asarray(y_seq, dtype=int)
    q = np.asarray(q_seq, dtype=int)
    members = codebooks.bin_members(bin_index, destination)
    union = np.zeros((ctx.m[0], ctx.m[1]), dtype=bool)
    for _, mask in ctx.scan_bin(
        d_idx, y, q, members, codebooks.compression_codebooks[d_idx], oh1, oh2
    ):
        union |= mask
    pairs = np.argwhere(union)
    if pairs.shape[0] == 0:
        return DecodeResult(outcome="none_typical", messages=None)
    intended_values = set(int(p[d_idx]) for p in pairs)
    intended = intended_values.pop() if len(intended_values) == 1 else None
    if pairs.shape[0] == 1:
        w = (int(pairs[0][0]), int(pairs[0][1]))
        return DecodeResult(outcome="decoded", messages=w, intended=w[d_idx])
    return DecodeResult(outcome="ambiguous", messages=None, intended=intended)


def _single_shot_config(
    channel: Channel, codebooks: CodebookSet, epsilon: float
) -> SimConfig:
    """Recover a SimConfig consistent with an existing codebook set."""
    n = codebooks.q_seq.size
    rates = tuple(
        math.log2(cb.shape[0]) / n for cb in codebooks.message_codebooks
    )
    comp_rates = tuple(
        math.log2(cb.shape[0]) / n for cb in codebooks.compression_codebooks
    )
    topology = "pmarc" if channel.K == 1 else "pifrc"
    return SimConfig(
        n=n,
        rates=rates,  # type: ignore[arg-type]
        compression_rates=comp_rates,
        epsilon=epsilon,
        trials=1,
        seed=0,
        topology=topology,
    )


_PMARC_EVENTS = tuple(f"E{i}" for i in range(8))
_PIFRC_EVENTS = tuple(
    f"d{d}_E{i}" for d in (1, 2) for i in range(4)
)


def _classify_pmarc(truth, union, at_true, at_other) -> str | None:
    """Return the earliest applicable event name, or None on success."""
    w1, w2 = truth
    pairs = np.argwhere(union)
    if pairs.shape[0] == 1 and (int(pairs[0][0]), int(pairs[0][1])) == (w1, w2):
        return None
    if not at_true[w1, w2]:
        return "E1"
    for mask, first in ((at_true, 2), (at_other, 5)):
        wrong1 = mask[:, w2].copy()
        wrong1[w1] = False
        wrong2 = mask[w1, :].copy()
        wrong2[w2] = False
        both = mask.copy()
        both[w1, :] = False
        both[:, w2] = False
        if wrong1.any():
            return f"E{first}"
        if wrong2.any():
            return f"E{first + 1}"
        if both.any():
            return f"E{first + 2}"
    # unreachable: a failed trial with a typical true tuple always has some
    # wrong pair typical somewhere in the bin
    return None


def _run_trial_pmarc(ctx: _SimContext, trial: int) -> tuple[bool, str | None]:
    rng = np.random.default_rng(np.random.SeedSequence([ctx.cfg.seed, trial]))
    books = ctx.draw_codebooks(rng)
    w1 = int(rng.integers(ctx.m[0]))
    w2 = int(rng.integers(ctx.m[1]))
    x1 = books.message_codebooks[0][w1]
    x2 = books.message_codebooks[1][w2]
    ys, yr = ctx.draw_outputs(rng, x1, x2)
    y = ys[0]
    comp_cb = books.compression_codebooks[0]
    l = ctx.compress(0, yr, books.q_seq, comp_cb)
    if l is None:
        return True, "E0"
    k = books.bin_of(l, 1)
    members = books.bin_members(k, 1)
    oh1, oh2 = ctx.message_one_hots(books)
    union = np.zeros((ctx.m[0], ctx.m[1]), dtype=bool)
    at_true = np.zeros_like(union)
    at_other = np.zeros_like(union)
    for l_hat, mask in ctx.scan_bin(0, y, books.q_seq, members, comp_cb, oh1, oh2):
        union |= mask
        if l_hat == l:
            at_true |= mask
        else:
            at_other |= mask
    event = _classify_pmarc((w1, w2), union, at_true, at_other)
    return event is not None, event


def _run_trial_pifrc(ctx: _SimContext, trial: int) -> tuple[bool, str | None]:
    rng = np.random.default_rng(np.random.SeedSequence([ctx.cfg.seed, trial]))
    books = ctx.draw_codebooks(rng)
    w = (int(rng.integers(ctx.m[0])), int(rng.integers(ctx.m[1])))
    x1 = books.message_codebooks[0][w[0]]
    x2 = books.message_codebooks[1][w[1]]
    ys, yr = ctx.draw_outputs(rng, x1, x2)
    oh1, oh2 = ctx.message_one_hots(books)
    first_event = None
    for d_idx in (0, 1):
        comp_cb = books.compression_codebooks[d_idx]
        l = ctx.compress(d_idx, yr, books.q_seq, comp_cb)
        if l is None:
            if first_event is None:
                first_event = f"d{d_idx + 1}_E0"
            continue
        k = books.bin_of(l, d_idx + 1)
        members = books.bin_members(k, d_idx + 1)
        union = np.zeros((ctx.m[0], ctx.m[1]), dtype=bool)
        at_true = np.zeros_like(union)
        at_other = np.zeros_like(union)
        for l_hat, mask in ctx.scan_bin(
            d_idx, ys[d_idx], books.q_seq, members, comp_cb, oh1, oh2
        ):
            union |= mask
            if l_hat == l:
                at_true |= mask
            else:
                at_other |= mask
        event = _classify_pifrc(d_idx, w, union, at_true, at_other)
        if event is not None and first_event is None:
            first_event = event
    return first_event is not None, first_event


def _classify_pifrc(d_idx, w, union, at_true, at_other) -> str | None:
    intended = w[d_idx]
    axis = 1 - d_idx  # collapse the non-intended message axis
    present = union.any(axis=axis)
    values = np.nonzero(present)[0]
    if values.size == 1 and int(values[0]) == intended:
        return None
    tag = f"d{d_idx + 1}"
    if not at_true[w[0], w[1]]:
        return f"{tag}_E1"
    wrong_true = at_true.any(axis=axis).copy()
    wrong_true[intended] = False
    if wrong_true.any():
        return f"{tag}_E2"
    return f"{tag}_E3"


def simulate(
    channel: Channel,
    policy: Policy,
    cfg: SimConfig,
    threads: int = 1,
) -> SimReport:
    """Run cfg.trials independent trials; deterministic for a given seed.

    Trial t draws its randomness from a substream derived from (seed, t), so
    the report is identical for any worker count.
    """
    ctx = _SimContext(channel, policy, cfg)
    runner = _run_trial_pmarc if cfg.topology == "pmarc" else _run_trial_pifrc
    event_names = _PMARC_EVENTS if cfg.topology == "pmarc" else _PIFRC_EVENTS
    counts = {name: 0 for name in event_names}
    errors = 0
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda t: runner(ctx, t), range(cfg.trials))
            )
    else:
        results = [runner(ctx, t) for t in range(cfg.trials)]
    for failed, event in results:
        if failed:
            errors += 1
            counts[event] += 1
    rate = errors / cfg.trials
    half = 1.96 * math.sqrt(rate * (1.0 - rate) / cfg.trials)
    return SimReport(
        config=cfg,
        trials=cfg.trials,
        errors=errors,
        event_counts=counts,
        error_rate=rate,
        ci_half_width=half,
    )


# ---------------------------------------------------------------------------
# product-law verification
# ---------------------------------------------------------------------------

def verify_lemma1(
    channel: Channel,
    policy: Policy,
    n: int,
    samples: int,
    seed: int,
    message_rate: float = 1.0,
) -> LemmaReport:
    """Check that randomized encoding induces i.i.d. single-letter laws.

    Draws `samples` independent (codebook, message) realizations, records the
    transmitted x_i^n for every source and the channel outputs y_k^n, and
    reports the total-variation distance between each empirical sequence law
    (jointly with q^n) and the corresponding product law prod_j p(.|q_j).
    """
    if n < 1:
        raise ValidationError(f"blocklength must be >= 1, got {n}")
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    policy.check_against(channel)
    for i, size in enumerate(channel.input_sizes):
        if (policy.q_size * size) ** n > LEMMA_ATOM_CAP:
            raise ResourceLimitError(
                f"sequence alphabet for source {i + 1} has "
                f"{(policy.q_size * size) ** n} atoms (cap {LEMMA_ATOM_CAP})"
            )
    for k, size in enumerate(channel.output_sizes):
        if (policy.q_size * size) ** n > LEMMA_ATOM_CAP:
            raise ResourceLimitError(
                f"sequence alphabet for destination {k + 1} has "
                f"{(policy.q_size * size) ** n} atoms (cap {LEMMA_ATOM_CAP})"
            )

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    q_cdf = np.cumsum(policy.q_dist)
    q = (rng.random((samples, n))[:, :, None] > q_cdf[None, None, :-1]).sum(axis=2)

    # Only the codeword selected by each (uniform) message is drawn: the
    # unselected rows of a codebook are independent of everything observed,
    # so skipping them leaves every checked law unchanged.
    sent = []
    for i in range(channel.M):
        cdf = np.cumsum(policy.input_dists[i], axis=1)  # (q, |X_i|)
        rows = cdf[q]  # (samples, n, |X_i|)
        u = rng.random((samples, n))
        sent.append((u[:, :, None] > rows[:, :, :-1]).sum(axis=2))

    in_code = np.zeros((samples, n), dtype=int)
    for i in range(channel.M):
        in_code = in_code * channel.input_sizes[i] + sent[i]
    out_cells = int(np.prod(channel.output_sizes)) * channel.relay_size
    out_cdf = np.cumsum(channel.kernel.reshape(-1, out_cells), axis=1)
    rows = out_cdf[in_code]  # (samples, n, out_cells)
    u = rng.random((samples, n))
    flat = (u[:, :, None] > rows[:, :, :-1]).sum(axis=2)
    outs = np.unravel_index(
        flat, tuple(channel.output_sizes) + (channel.relay_size,)
    )

    joint = build_joint(channel, policy)

    def tv_against_product(seqs: np.ndarray, var: str) -> float:
        cond = marginalize(joint, ("Q", var)).probs  # (q, size)
        size = cond.shape[1]
        per_letter = cond.ravel()  # joint law of (q, symbol)
        base = policy.q_size * size
        atom = np.zeros(samples, dtype=np.int64)
        for j in range(n):
            atom = atom * base + (q[:, j] * size + seqs[:, j])
        counts = np.bincount(atom, minlength=base**n)
        emp = counts / samples
        prod = per_letter.copy()
        for _ in range(n - 1):
            prod = np.outer(prod, per_letter).ravel()
        return 0.5 * float(np.abs(emp - prod).sum())

    tv_inputs = tuple(
        tv_against_product(sent[i], f"X{i + 1}") for i in range(channel.M)
    )
    tv_outputs = tuple(
        tv_against_product(np.asarray(outs[k]), f"Y{k + 1}")
        for k in range(channel.K)
    )
    return LemmaReport(
        n=n,
        samples=samples,
        seed=seed,
        tv_inputs=tv_inputs,
        tv_outputs=tv_outputs,
        message_rate=message_rate,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def sim_report_to_dict(report: SimReport) -> dict:
    cfg = report.config
    return {
        "config": {
            "n": cfg.n,
            "rates": list(cfg.rates),
            "compression_rates": list(cfg.compression_rates),
            "epsilon": cfg.epsilon,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "topology": cfg.topology,
        },
        "trials": report.trials,
        "errors": report.errors,
        "event_counts": dict(report.event_counts),
        "error_rate": report.error_rate,
        "ci_half_width": report.ci_half_width,
    }


def sim_report_to_json(report: SimReport) -> str:
    return json.dumps(sim_report_to_dict(report), sort_keys=True)


def sim_report_to_csv(report: SimReport) -> str:
    cfg = report.config
    names = sorted(report.event_counts)
    header = ["n", "rate_1", "rate_2", "seed", "trials", "errors", "error_rate", "ci_half_width"]
    header += [f"count_{name}" for name in names]
    row = [
        cfg.n, repr(cfg.rates[0]), repr(cfg.rates[1]), cfg.seed,
        report.trials, report.errors, repr(report.error_rate),
        repr(report.ci_half_width),
    ]
    row += [report.event_counts[name] for name in names]
    return (
        ",".join(str(v) for v in header)
        + "\n"
        + ",".join(str(v) for v in row)
        + "\n"
    )


def lemma_report_to_dict(report: LemmaReport) -> dict:
    return {
        "n": report.n,
        "samples": report.samples,
        "seed": report.seed,
        "tv_inputs": list(report.tv_inputs),
        "tv_outputs": list(report.tv_outputs),
        "message_rate": report.message_rate,
    }


def lemma_report_to_json(report: LemmaReport) -> str:
    return json.dumps(lemma_report_to_dict(report), sort_keys=True)
