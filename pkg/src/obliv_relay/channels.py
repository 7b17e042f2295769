"""Channel and policy objects for primitive multiuser relay networks.

A network has M source encoders, K destinations, and one relay whose
observation reaches destination k over a noiseless digital link of capacity
``link_capacities[k]`` bits per channel use.  The memoryless channel law
``p(y_1..y_K, y_R | x_1..x_M)`` is stored as a dense kernel array whose axes
run inputs first (source order), then destination outputs, then the relay
output last.

A :class:`Policy` fixes the evaluation distribution: a time-sharing variable
Q, per-source input distributions p(x_i|q), and per-destination relay
compression kernels p(yhat_k | y_R, q).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError

MODES = ("multicast", "unicast")
KINDS = ("pmarc", "marc", "pifrc", "multicast")

STOCHASTIC_ATOL = 1e-9
DENSE_CELL_CAP = 10**7


def _as_prob_array(values: Any, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size != int(np.prod(shape)):
        raise ValidationError(
            f"{what}: expected {int(np.prod(shape))} entries for shape {shape}, got {arr.size}"
        )
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: entries must be finite")
    if np.any(arr < 0):
        raise ValidationError(f"{what}: entries must be nonnegative")
    arr.setflags(write=False)
    return arr


def _check_rows_sum_to_one(arr: np.ndarray, what: str, row_names=None) -> None:
    """Validate that the last axis of `arr` is a probability distribution.

    No re-normalization is performed; rows off by more than STOCHASTIC_ATOL
    are an error naming the offending row.
    """
    sums = arr.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > STOCHASTIC_ATOL)
    if bad.size:
        idx = tuple(int(v) for v in bad[0])
        label = row_names(idx) if row_names else str(idx)
        raise ValidationError(
            f"{what}: row {label} sums to {float(sums[tuple(bad[0])]):.12g}, expected 1"
        )


@dataclass(frozen=True)
class Channel:
    """Memoryless relay network channel with out-of-band digital relay links."""

    M: int
    K: int
    input_sizes: tuple[int, ...]
    output_sizes: tuple[int, ...]
    relay_size: int
    kernel: np.ndarray
    link_capacities: tuple[float, ...]
    mode: str = "multicast"
    kind: str | None = None

    def __post_init__(self) -> None:
        if self.M < 1 or self.K < 1:
            raise ValidationError(f"need M >= 1 and K >= 1, got M={self.M}, K={self.K}")
        object.__setattr__(self, "input_sizes", tuple(int(s) for s in self.input_sizes))
        object.__setattr__(self, "output_sizes", tuple(int(s) for s in self.output_sizes))
        object.__setattr__(
            self, "link_capacities", tuple(float(c) for c in self.link_capacities)
        )
        if len(self.input_sizes) != self.M:
            raise ValidationError(
                f"input_sizes has {len(self.input_sizes)} entries, expected M={self.M}"
            )
        if len(self.output_sizes) != self.K:
            raise ValidationError(
                f"output_sizes has {len(self.output_sizes)} entries, expected K={self.K}"
            )
        if len(self.link_capacities) != self.K:
            raise ValidationError(
                f"link_capacities has {len(self.link_capacities)} entries, expected K={self.K}"
            )
        if any(s < 1 for s in self.input_sizes + self.output_sizes) or self.relay_size < 1:
            raise ValidationError("alphabet sizes must be >= 1")
        for c in self.link_capacities:
            if not math.isfinite(c) or c < 0:
                raise ValidationError(f"link capacities must be finite and >= 0, got {c}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "unicast" and self.M != self.K:
            raise ValidationError(
                f"unicast mode requires M == K, got M={self.M}, K={self.K}"
            )

        shape = self.input_sizes + self.output_sizes + (self.relay_size,)
        if int(np.prod(shape)) > DENSE_CELL_CAP:
            raise ResourceLimitError(
                f"kernel would need {int(np.prod(shape))} cells (cap {DENSE_CELL_CAP})"
            )
        kernel = _as_prob_array(self.kernel, shape, "channel kernel")
        object.__setattr__(self, "kernel", kernel)
        flat = kernel.reshape(self.input_sizes + (-1,))
        _check_rows_sum_to_one(
            flat,
            "channel kernel",
            row_names=lambda idx: f"input tuple {idx}",
        )

        kind = self.kind or _infer_kind(self.M, self.K, self.mode)
        if kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {kind!r}")
        _check_kind(kind, self.M, self.K, self.mode)
        object.__setattr__(self, "kind", kind)

    @property
    def num_output_tuples(self) -> int:
        return int(np.prod(self.output_sizes)) * self.relay_size


def _infer_kind(M: int, K: int, mode: str) -> str:
    if mode == "unicast":
        return "pifrc"
    if K == 1:
        return "pmarc" if M == 2 else "marc"
    return "multicast"


def _check_kind(kind: str, M: int, K: int, mode: str) -> None:
    if kind == "pmarc" and not (M == 2 and K == 1 and mode == "multicast"):
        raise ValidationError(f"kind 'pmarc' requires M=2, K=1, multicast; got M={M}, K={K}, mode={mode}")
    if kind == "marc" and not (K == 1 and mode == "multicast"):
        raise ValidationError(f"kind 'marc' requires K=1, multicast; got K={K}, mode={mode}")
    if kind == "pifrc" and not (M == 2 and K == 2 and mode == "unicast"):
        raise ValidationError(f"kind 'pifrc' requires M=2, K=2, unicast; got M={M}, K={K}, mode={mode}")
    if kind == "multicast" and mode != "multicast":
        raise ValidationError("kind 'multicast' requires multicast mode")


@dataclass(frozen=True)
class Policy:
    """Evaluation distribution: time sharing, inputs, and relay compression.

    ``input_dists[i]`` has shape (q_size, |X_i|); ``compression_dists[k]`` has
    shape (q_size, relay_size, compression_sizes[k]).  Conditioning variables
    index the leading axes; the conditioned symbol is always the last axis.
    """

    q_size: int
    q_dist: np.ndarray
    input_dists: tuple[np.ndarray, ...]
    compression_sizes: tuple[int, ...]
    compression_dists: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.q_size < 1:
            raise ValidationError(f"q_size must be >= 1, got {self.q_size}")
        q = _as_prob_array(self.q_dist, (self.q_size,), "q_dist")
        _check_rows_sum_to_one(q[None, :], "q_dist", row_names=lambda idx: "q")
        object.__setattr__(self, "q_dist", q)

        object.__setattr__(
            self, "compression_sizes", tuple(int(s) for s in self.compression_sizes)
        )
        if any(s < 1 for s in self.compression_sizes):
            raise ValidationError("compression alphabet sizes must be >= 1")

        dists = []
        for i, d in enumerate(self.input_dists):
            arr = np.asarray(d, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != self.q_size:
                raise ValidationError(
                    f"input_dists[{i}] must have shape (q_size, |X_{i + 1}|), got {arr.shape}"
                )
            arr = _as_prob_array(arr, arr.shape, f"input_dists[{i}]")
            _check_rows_sum_to_one(
                arr, f"input_dists[{i}]", row_names=lambda idx: f"q={idx[0]}"
            )
            dists.append(arr)
        object.__setattr__(self, "input_dists", tuple(dists))

        comps = []
        for k, d in enumerate(self.compression_dists):
            arr = np.asarray(d, dtype=float)
            if arr.ndim != 3 or arr.shape[0] != self.q_size:
                raise ValidationError(
                    f"compression_dists[{k}] must have shape (q_size, relay_size, m_k), got {arr.shape}"
                )
            if arr.shape[2] != self.compression_sizes[k]:
                raise ValidationError(
                    f"compression_dists[{k}] last axis {arr.shape[2]} != compression_sizes[{k}]"
                    f"={self.compression_sizes[k]}"
                )
            arr = _as_prob_array(arr, arr.shape, f"compression_dists[{k}]")
            _check_rows_sum_to_one(
                arr,
                f"compression_dists[{k}]",
                row_names=lambda idx: f"(q={idx[0]}, y_R={idx[1]})",
            )
            comps.append(arr)
        object.__setattr__(self, "compression_dists", tuple(comps))
        if len(self.compression_dists) != len(self.compression_sizes):
            raise ValidationError("compression_dists and compression_sizes disagree in length")

    @property
    def input_sizes(self) -> tuple[int, ...]:
        return tuple(d.shape[1] for d in self.input_dists)

    @property
    def relay_size(self) -> int:
        return self.compression_dists[0].shape[1] if self.compression_dists else 0

    def check_against(self, channel: Channel) -> None:
        """Raise ValidationError naming the offending factor on any dimension mismatch."""
        if len(self.input_dists) != channel.M:
            raise ValidationError(
                f"policy has {len(self.input_dists)} input distributions, channel has M={channel.M}"
            )
        for i, d in enumerate(self.input_dists):
            if d.shape[1] != channel.input_sizes[i]:
                raise ValidationError(
                    f"input_dists[{i}] covers alphabet of size {d.shape[1]}, "
                    f"channel input {i + 1} has size {channel.input_sizes[i]}"
                )
        if len(self.compression_dists) != channel.K:
            raise ValidationError(
                f"policy has {len(self.compression_dists)} compression kernels, "
                f"channel has K={channel.K} destinations"
            )
        for k, d in enumerate(self.compression_dists):
            if d.shape[1] != channel.relay_size:
                raise ValidationError(
                    f"compression_dists[{k}] conditions on relay alphabet of size {d.shape[1]}, "
                    f"channel relay alphabet has size {channel.relay_size}"
                )


@dataclass(frozen=True)
class GaussianIFRC:
    """Scalar Gaussian interference channel with a relay, unit-variance noise."""

    h11: float
    h12: float
    h21: float
    h22: float
    h1R: float
    h2R: float
    P1: float
    P2: float

    def __post_init__(self) -> None:
        for name in ("h11", "h12", "h21", "h22", "h1R", "h2R"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"gain {name} must be finite, got {v}")
        for name in ("P1", "P2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"power {name} must be finite and > 0, got {v}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def channel_to_dict(channel: Channel) -> dict:
    return {
        "kind": channel.kind,
        "mode": channel.mode,
        "M": channel.M,
        "K": channel.K,
        "input_sizes": list(channel.input_sizes),
        "output_sizes": list(channel.output_sizes),
        "relay_size": channel.relay_size,
        "link_capacities": list(channel.link_capacities),
        "kernel": [float(v) for v in channel.kernel.ravel()],
    }


def channel_to_json(channel: Channel) -> str:
    return json.dumps(channel_to_dict(channel), sort_keys=True)


def load_channel(document: str | Mapping[str, Any]) -> Channel:
    """Build a Channel from a JSON document (text or already-parsed mapping).

    Kernel rows are validated, never re-normalized.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"channel document is not valid JSON: {exc}") from exc
    else:
        doc = dict(document)
    required = {
        "kind", "mode", "M", "K", "input_sizes", "output_sizes",
        "relay_size", "link_capacities", "kernel",
    }
    missing = required - doc.keys()
    if missing:
        raise ValidationError(f"channel document missing keys: {sorted(missing)}")
    return Channel(
        M=int(doc["M"]),
        K=int(doc["K"]),
        input_sizes=tuple(doc["input_sizes"]),
        output_sizes=tuple(doc["output_sizes"]),
        relay_size=int(doc["relay_size"]),
        kernel=doc["kernel"],
        link_capacities=tuple(doc["link_capacities"]),
        mode=str(doc["mode"]),
        kind=str(doc["kind"]),
    )


def policy_to_dict(policy: Policy) -> dict:
    return {
        "q_size": policy.q_size,
        "q_dist": [float(v) for v in policy.q_dist],
        "input_sizes": list(policy.input_sizes),
        "input_dists": [[float(v) for v in d.ravel()] for d in policy.input_dists],
        "relay_size": policy.relay_size,
        "compression_sizes": list(policy.compression_sizes),
        "compression_dists": [
            [float(v) for v in d.ravel()] for d in policy.compression_dists
        ],
    }


def policy_to_json(policy: Policy) -> str:
    return json.dumps(policy_to_dict(policy), sort_keys=True)


def load_policy(document: str | Mapping[str, Any]) -> Policy:
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"policy document is not valid JSON: {exc}") from exc
    else:
        doc = dict(document)
    required = {
        "q_size", "q_dist", "input_sizes", "input_dists",
        "relay_size", "compression_sizes", "compression_dists",
    }
    missing = required - doc.keys()
    if missing:
        raise ValidationError(f"policy document missing keys: {sorted(missing)}")
    q_size = int(doc["q_size"])
    relay = int(doc["relay_size"])
    in_sizes = [int(s) for s in doc["input_sizes"]]
    comp_sizes = [int(s) for s in doc["compression_sizes"]]
    input_dists = []
    for i, flat in enumerate(doc["input_dists"]):
        input_dists.append(np.asarray(flat, dtype=float).reshape(q_size, in_sizes[i]))
    comp_dists = []
    for k, flat in enumerate(doc["compression_dists"]):
        comp_dists.append(
            np.asarray(flat, dtype=float).reshape(q_size, relay, comp_sizes[k])
        )
    return Policy(
        q_size=q_size,
        q_dist=doc["q_dist"],
        input_dists=tuple(input_dists),
        compression_sizes=tuple(comp_sizes),
        compression_dists=tuple(comp_dists),
    )


# ---------------------------------------------------------------------------
# built-in fixtures
# ---------------------------------------------------------------------------

def _deterministic_kernel(
    input_sizes: Sequence[int],
    output_sizes: Sequence[int],
    relay_size: int,
    rule,
) -> np.ndarray:
    """Kernel where outputs are a deterministic function of the input tuple."""
    shape = tuple(input_sizes) + tuple(output_sizes) + (relay_size,)
    kernel = np.zeros(shape)
    for xs in np.ndindex(*input_sizes):
        outs = rule(*xs)
        kernel[tuple(xs) + tuple(outs)] = 1.0
    return kernel


def _binary_adder_pmarc(C: float = 1.0) -> Channel:
    kernel = _deterministic_kernel((2, 2), (3,), 3, lambda a, b: (a + b, a + b))
    return Channel(
        M=2, K=1, input_sizes=(2, 2), output_sizes=(3,), relay_size=3,
        kernel=kernel, link_capacities=(C,), mode="multicast", kind="pmarc",
    )


def _degenerate_relay(C: float = 1.0) -> Channel:
    kernel = _deterministic_kernel((2, 2), (3,), 1, lambda a, b: (a + b, 0))
    return Channel(
        M=2, K=1, input_sizes=(2, 2), output_sizes=(3,), relay_size=1,
        kernel=kernel, link_capacities=(C,), mode="multicast", kind="pmarc",
    )


def _noiseless_pmarc(C: float = 1.0, input_size: int = 2) -> Channel:
    A = int(input_size)
    if A < 2:
        raise ValidationError(f"noiseless_pmarc needs input_size >= 2, got {A}")
    kernel = _deterministic_kernel((A, A), (A * A,), 1, lambda a, b: (A * a + b, 0))
    return Channel(
        M=2, K=1, input_sizes=(A, A), output_sizes=(A * A,), relay_size=1,
        kernel=kernel, link_capacities=(C,), mode="multicast", kind="pmarc",
    )


def _bsc_pmarc(C: float = 1.0, noise: float = 0.1, relay_noise: float = 0.1) -> Channel:
    for name, p in (("noise", noise), ("relay_noise", relay_noise)):
        if not 0.0 <= p <= 0.5:
            raise ValidationError(f"bsc_pmarc {name} must be in [0, 0.5], got {p}")
    kernel = np.zeros((2, 2, 2, 2))
    for a, b in np.ndindex(2, 2):
        s = a ^ b
        for y in range(2):
            for yr in range(2):
                py = noise if y != s else 1.0 - noise
                pr = relay_noise if yr != s else 1.0 - relay_noise
                kernel[a, b, y, yr] = py * pr
    return Channel(
        M=2, K=1, input_sizes=(2, 2), output_sizes=(2,), relay_size=2,
        kernel=kernel, link_capacities=(C,), mode="multicast", kind="pmarc",
    )


def _xor_pifrc(C1: float = 1.0, C2: float = 1.0) -> Channel:
    kernel = _deterministic_kernel((2, 2), (2, 2), 1, lambda a, b: (a ^ b, a ^ b, 0))
    return Channel(
        M=2, K=2, input_sizes=(2, 2), output_sizes=(2, 2), relay_size=1,
        kernel=kernel, link_capacities=(C1, C2), mode="unicast", kind="pifrc",
    )


_BUILTINS = {
    "binary_adder_pmarc": _binary_adder_pmarc,
    "noiseless_pmarc": _noiseless_pmarc,
    "bsc_pmarc": _bsc_pmarc,
    "xor_pifrc": _xor_pifrc,
    "degenerate_relay": _degenerate_relay,
}

BUILTIN_CHANNELS = tuple(sorted(_BUILTINS))


def builtin_channel(name: str, params: Mapping[str, Any] | None = None) -> Channel:
    """Construct one of the named test fixtures.

    binary_adder_pmarc:  Y = X1 + X2 over {0,1,2}, relay sees the same sum.
    noiseless_pmarc:     Y reveals (X1, X2) losslessly, relay sees nothing.
    bsc_pmarc:           Y and Y_R are X1 xor X2 through independent BSCs.
    xor_pifrc:           both destinations see X1 xor X2, relay sees nothing.
    degenerate_relay:    the adder with a constant relay observation.
    """
    if name not in _BUILTINS:
        raise ValidationError(
            f"unknown builtin channel {name!r}; available: {', '.join(BUILTIN_CHANNELS)}"
        )
    kwargs = dict(params or {})
    try:
        return _BUILTINS[name](**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for builtin {name!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# policy constructors
# ---------------------------------------------------------------------------

def _identity_like_compression(q_size: int, relay_size: int, comp_size: int) -> np.ndarray:
    """Copy y_R into yhat when the compression alphabet is large enough,
    otherwise compress to an input-independent uniform symbol."""
    arr = np.zeros((q_size, relay_size, comp_size))
    if comp_size >= relay_size:
        for yr in range(relay_size):
            arr[:, yr, yr] = 1.0
    else:
        arr[:] = 1.0 / comp_size
    return arr


def uniform_policy(
    channel: Channel,
    q_size: int = 1,
    compression_sizes: Sequence[int] | None = None,
) -> Policy:
    """Uniform Q and inputs; identity-like compression per destination."""
    if compression_sizes is None:
        compression_sizes = (channel.relay_size,) * channel.K
    comp_sizes = tuple(int(s) for s in compression_sizes)
    if len(comp_sizes) != channel.K:
        raise ValidationError(
            f"need {channel.K} compression sizes, got {len(comp_sizes)}"
        )
    policy = Policy(
        q_size=q_size,
        q_dist=np.full(q_size, 1.0 / q_size),
        input_dists=tuple(
            np.full((q_size, s), 1.0 / s) for s in channel.input_sizes
        ),
        compression_sizes=comp_sizes,
        compression_dists=tuple(
            _identity_like_compression(q_size, channel.relay_size, m)
            for m in comp_sizes
        ),
    )
    policy.check_against(channel)
    return policy


def random_policy(
    channel: Channel,
    rng: np.random.Generator,
    q_size: int = 1,
    compression_sizes: Sequence[int] | None = None,
) -> Policy:
    """Draw every policy factor from the flat density on its simplex."""
    if compression_sizes is None:
        compression_sizes = (channel.relay_size,) * channel.K
    comp_sizes = tuple(int(s) for s in compression_sizes)
    q_dist = rng.dirichlet(np.ones(q_size)) if q_size > 1 else np.ones(1)
    input_dists = tuple(
        np.stack([rng.dirichlet(np.ones(s)) for _ in range(q_size)])
        for s in channel.input_sizes
    )
    comp_dists = tuple(
        np.stack(
            [
                np.stack([rng.dirichlet(np.ones(m)) for _ in range(channel.relay_size)])
                for _ in range(q_size)
            ]
        )
        if m > 1
        else np.ones((q_size, channel.relay_size, 1))
        for m in comp_sizes
    )
    policy = Policy(
        q_size=q_size,
        q_dist=q_dist,
        input_dists=input_dists,
        compression_sizes=comp_sizes,
        compression_dists=comp_dists,
    )
    policy.check_against(channel)
    return policy
