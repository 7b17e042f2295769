"""Shared helpers: an independent dict-based probability oracle.

The oracle builds joints and information measures with plain Python loops
and dictionaries, no numpy reductions, so agreement with the package is a
genuine cross-check rather than the same code run twice.
"""

import math
from collections import defaultdict

import numpy as np

import obliv_relay as ob


def oracle_joint(channel, policy):
    """Return (names, pmf dict) for the full evaluation joint."""
    names = (
        ["Q"]
        + [f"X{i + 1}" for i in range(channel.M)]
        + [f"Y{k + 1}" for k in range(channel.K)]
        + ["YR"]
        + [f"Yhat{k + 1}" for k in range(channel.K)]
    )
    pmf = {}
    out_sizes = tuple(channel.output_sizes) + (channel.relay_size,)
    for q in range(policy.q_size):
        pq = policy.q_dist[q]
        if pq == 0:
            continue
        for xs in np.ndindex(*channel.input_sizes):
            px = 1.0
            for i, x in enumerate(xs):
                px *= policy.input_dists[i][q, x]
            if px == 0:
                continue
            for outs in np.ndindex(*out_sizes):
                pk = channel.kernel[xs + outs]
                if pk == 0:
                    continue
                yr = outs[-1]
                for yh in np.ndindex(*policy.compression_sizes):
                    ph = 1.0
                    for k, h in enumerate(yh):
                        ph *= policy.compression_dists[k][q, yr, h]
                    p = pq * px * pk * ph
                    if p > 0:
                        key = (q,) + xs + outs + yh
                        pmf[key] = pmf.get(key, 0.0) + p
    return names, pmf


def _project(pmf, names, keep):
    idx = [names.index(n) for n in keep]
    out = defaultdict(float)
    for key, p in pmf.items():
        out[tuple(key[i] for i in idx)] += p
    return out


def oracle_cmi(pmf, names, a, b, c=()):
    """I(A;B|C) in bits from the dict pmf, direct definition."""
    a, b, c = list(a), list(b), list(c)
    p_abc = _project(pmf, names, a + b + c)
    p_ac = _project(pmf, names, a + c)
    p_bc = _project(pmf, names, b + c)
    p_c = _project(pmf, names, c) if c else {(): 1.0}
    total = 0.0
    for key, p in p_abc.items():
        ka = key[: len(a)]
        kb = key[len(a) : len(a) + len(b)]
        kc = key[len(a) + len(b) :]
        total += p * math.log2(p * p_c[kc] / (p_ac[ka + kc] * p_bc[kb + kc]))
    return total


def oracle_entropy(pmf, names, of):
    proj = _project(pmf, names, list(of))
    return -sum(p * math.log2(p) for p in proj.values() if p > 0)


def random_pmarc(rng, max_alphabet=3, capacity=None):
    """A random two-source single-destination channel with small alphabets."""
    s = [int(v) for v in rng.integers(2, max_alphabet + 1, size=4)]
    kernel = rng.dirichlet(np.ones(s[2] * s[3]), size=(s[0], s[1]))
    kernel = kernel.reshape(s[0], s[1], s[2], s[3])
    C = float(rng.uniform(0.0, 2.0)) if capacity is None else float(capacity)
    return ob.Channel(
        M=2,
        K=1,
        input_sizes=(s[0], s[1]),
        output_sizes=(s[2],),
        relay_size=s[3],
        kernel=kernel,
        link_capacities=(C,),
        mode="multicast",
        kind="pmarc",
    )


def forced_violation_pifrc():
    """Interference fixture violating strong interference: Y1 = X1 noiselessly,
    Y2 carries nothing, the relay sees X2."""
    kernel = np.zeros((2, 2, 2, 1, 2))
    for a, b in np.ndindex(2, 2):
        kernel[a, b, a, 0, b] = 1.0
    return ob.Channel(
        M=2,
        K=2,
        input_sizes=(2, 2),
        output_sizes=(2, 1),
        relay_size=2,
        kernel=kernel,
        link_capacities=(1.0, 1.0),
        mode="unicast",
        kind="pifrc",
    )
