"""Batch command surface for reproducible experiments.

Every run resolves its parameters up front, runs one subcommand, writes
machine-readable output (JSON, optionally CSV), and emits exactly one run
manifest recording the command, the resolved parameters, and SHA-256
checksums of all inputs and outputs.  Re-running with the same arguments
reproduces the outputs byte for byte: all randomness flows through explicit
seeds and JSON is serialized with sorted keys.

Exit codes: 0 success, 1 validation/usage error, 2 resource-cap abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .channels import (
    GaussianIFRC,
    load_channel,
    load_policy,
    policy_to_dict,
)
from .conditions import (
    condition_report_to_dict,
    equivalence_report_to_dict,
    gaussian_equivalence_check,
    strong_interference_dmc,
    strong_interference_gaussian,
)
from .errors import ResourceLimitError, ValidationError, WorkbenchError
from .regions import (
    SearchConfig,
    frontier_search,
    gcf_region_marc_m,
    gcf_region_multicast,
    gcf_region_pifrc,
    gcf_region_pmarc,
    region_compare,
    region_for,
    region_to_csv,
    region_to_dict,
)
from .sim import (
    SimConfig,
    lemma_report_to_dict,
    sim_report_to_csv,
    sim_report_to_dict,
    simulate,
    verify_lemma1,
)

TOOL_NAME = "obliv-relay"


class _CliParser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as validation errors."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise ValidationError(f"{self.prog}: {message}")


def _sha256_file(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from exc


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("OBLIV_RELAY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(
                f"OBLIV_RELAY_THREADS must be an integer, got {env!r}"
            ) from exc
    return 1


def _read_channel(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read channel file {path}: {exc}") from exc
    return load_channel(text)


def _read_policy(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read policy file {path}: {exc}") from exc
    return load_policy(text)


def _finish(
    args,
    command: str,
    parameters: dict[str, Any],
    payload: dict,
    input_paths: list[str],
    csv_text: str | None = None,
) -> int:
    """Write outputs and the run manifest; returns the process exit code."""
    payload_text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    outputs: dict[str, str] = {}
    out_path = getattr(args, "out", None)
    if out_path:
        Path(out_path).write_text(payload_text)
        outputs[out_path] = _sha256_text(payload_text)
    else:
        sys.stdout.write(payload_text)
    csv_path = getattr(args, "csv", None)
    if csv_path:
        if csv_text is None:
            raise ValidationError(f"{command} has no CSV form")
        Path(csv_path).write_text(csv_text)
        outputs[csv_path] = _sha256_text(csv_text)
    manifest = {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "argv": list(args._argv),
        "parameters": parameters,
        "inputs": {path: _sha256_file(path) for path in input_paths},
        "outputs": outputs,
    }
    manifest_text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(str(out_path) + ".manifest.json").write_text(manifest_text)
    else:
        sys.stderr.write(manifest_text)
    return 0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_REGION_EVALUATORS = {
    "pmarc": gcf_region_pmarc,
    "marc": gcf_region_marc_m,
    "pifrc": gcf_region_pifrc,
    "multicast": gcf_region_multicast,
}


def _cmd_region(args) -> int:
    channel = _read_channel(args.channel)
    policy = _read_policy(args.policy)
    region = _REGION_EVALUATORS[args.topology](channel, policy)
    parameters = {"topology": args.topology}
    return _finish(
        args,
        f"region {args.topology}",
        parameters,
        region_to_dict(region),
        [args.channel, args.policy],
        csv_text=region_to_csv(region),
    )


def _cmd_compare(args) -> int:
    channel = _read_channel(args.channel)
    policy = _read_policy(args.policy)
    schemes = [s for s in args.schemes.split(",") if s]
    if not schemes:
        raise ValidationError("--schemes needs at least one scheme name")
    seen = set()
    for s in schemes:
        if s in seen:
            raise ValidationError(f"scheme {s!r} listed twice")
        seen.add(s)
    regions = {s: region_for(channel, policy, s) for s in schemes}
    pairwise = []
    for i, a in enumerate(schemes):
        for b in schemes[i + 1 :]:
            cmp = region_compare(regions[a], regions[b])
            pairwise.append(
                {
                    "a": a,
                    "b": b,
                    "verdict": cmp.verdict,
                    "witness": cmp.witness,
                    "max_gap_bits": cmp.max_gap_bits,
                }
            )
    payload = {
        "schemes": schemes,
        "regions": {s: region_to_dict(r) for s, r in regions.items()},
        "pairwise": pairwise,
    }
    return _finish(
        args,
        "compare",
        {"schemes": schemes},
        payload,
        [args.channel, args.policy],
    )


def _cmd_frontier(args) -> int:
    channel = _read_channel(args.channel)
    weights = tuple(_float_list(args.weights))
    comp_sizes = tuple(_int_list(args.comp_sizes)) if args.comp_sizes else None
    config = SearchConfig(
        resolution=args.resolution,
        samples=args.samples,
        seed=args.seed,
        weights=weights,
        q_size=args.q_size,
        compression_sizes=comp_sizes,
    )
    result = frontier_search(
        channel, args.kind, config, threads=_resolve_threads(args)
    )
    payload = {
        "value_bits": result.value,
        "weights": list(result.weights),
        "evaluated": result.evaluated,
        "policy": policy_to_dict(result.policy),
        "region": region_to_dict(result.region),
    }
    parameters = {
        "kind": args.kind,
        "weights": list(weights),
        "resolution": args.resolution,
        "samples": args.samples,
        "seed": args.seed,
        "q_size": args.q_size,
        "compression_sizes": list(comp_sizes) if comp_sizes else None,
    }
    return _finish(args, "frontier", parameters, payload, [args.channel])


def _cmd_check_si_dmc(args) -> int:
    channel = _read_channel(args.channel)
    config = SearchConfig(
        resolution=args.resolution, samples=args.samples, seed=args.seed
    )
    report = strong_interference_dmc(channel, config)
    parameters = {
        "resolution": args.resolution,
        "samples": args.samples,
        "seed": args.seed,
    }
    return _finish(
        args,
        "check si-dmc",
        parameters,
        condition_report_to_dict(report),
        [args.channel],
    )


def _cmd_check_si_gaussian(args) -> int:
    g = GaussianIFRC(
        h11=args.h11, h12=args.h12, h21=args.h21, h22=args.h22,
        h1R=args.h1r, h2R=args.h2r, P1=args.p1, P2=args.p2,
    )
    report = strong_interference_gaussian(g)
    equivalence = gaussian_equivalence_check(g)
    parameters = {
        "h11": args.h11, "h12": args.h12, "h21": args.h21, "h22": args.h22,
        "h1r": args.h1r, "h2r": args.h2r, "p1": args.p1, "p2": args.p2,
    }
    payload = {
        "condition": condition_report_to_dict(report),
        "equivalence": equivalence_report_to_dict(equivalence),
    }
    return _finish(args, "check si-gaussian", parameters, payload, [])


def _cmd_simulate(args) -> int:
    channel = _read_channel(args.channel)
    policy = _read_policy(args.policy)
    rates = _float_list(args.rates)
    if len(rates) != 2:
        raise ValidationError(f"--rates needs two comma-separated values, got {args.rates!r}")
    rhat = _float_list(args.rhat)
    topology = "pmarc" if channel.K == 1 else "pifrc"
    cfg = SimConfig(
        n=args.n,
        rates=(rates[0], rates[1]),
        compression_rates=tuple(rhat),
        epsilon=args.eps,
        trials=args.trials,
        seed=args.seed,
        topology=topology,
    )
    report = simulate(channel, policy, cfg, threads=_resolve_threads(args))
    parameters = {
        "n": args.n,
        "rates": rates,
        "rhat": rhat,
        "eps": args.eps,
        "trials": args.trials,
        "seed": args.seed,
        "topology": topology,
    }
    return _finish(
        args,
        "simulate",
        parameters,
        sim_report_to_dict(report),
        [args.channel, args.policy],
        csv_text=sim_report_to_csv(report),
    )


def _cmd_lemma1(args) -> int:
    channel = _read_channel(args.channel)
    policy = _read_policy(args.policy)
    report = verify_lemma1(channel, policy, n=args.n, samples=args.samples, seed=args.seed)
    parameters = {"n": args.n, "samples": args.samples, "seed": args.seed}
    return _finish(
        args,
        "lemma1",
        parameters,
        lemma_report_to_dict(report),
        [args.channel, args.policy],
    )


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def _add_common_output(parser: _CliParser, csv: bool = False) -> None:
    parser.add_argument("--out", help="write JSON here (default: stdout)")
    if csv:
        parser.add_argument("--csv", help="also write a flat CSV table here")


def build_parser() -> _CliParser:
    parser = _CliParser(prog=TOOL_NAME, description=__doc__)
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_CliParser)

    p = sub.add_parser("region", help="evaluate a rate region for one policy")
    p.add_argument("topology", choices=sorted(_REGION_EVALUATORS))
    p.add_argument("--channel", required=True)
    p.add_argument("--policy", required=True)
    _add_common_output(p, csv=True)
    p.set_defaults(func=_cmd_region)

    p = sub.add_parser("compare", help="evaluate several schemes side by side")
    p.add_argument("--channel", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--schemes", required=True, help="comma list from: gcf,cf,nnc")
    _add_common_output(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("frontier", help="search policies for the best weighted rate")
    p.add_argument("--channel", required=True)
    p.add_argument("--kind", "--scheme", dest="kind", default="gcf",
                   choices=("gcf", "cf", "nnc"))
    p.add_argument("--weights", required=True, help="comma list, one weight per source")
    p.add_argument("--resolution", type=int, required=True)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q-size", dest="q_size", type=int, default=1)
    p.add_argument("--comp-sizes", dest="comp_sizes", default=None,
                   help="comma list of compression alphabet sizes")
    p.add_argument("--threads", type=int, default=0)
    _add_common_output(p)
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("check", help="strong-interference condition checks")
    checks = p.add_subparsers(dest="check_command", required=True, parser_class=_CliParser)

    c = checks.add_parser("si-dmc", help="search input products for condition gaps")
    c.add_argument("--channel", required=True)
    c.add_argument("--resolution", type=int, required=True)
    c.add_argument("--samples", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    _add_common_output(c)
    c.set_defaults(func=_cmd_check_si_dmc)

    c = checks.add_parser("si-gaussian", help="closed-form gain-squared comparison")
    for flag in ("--h11", "--h12", "--h21", "--h22", "--h1r", "--h2r", "--p1", "--p2"):
        c.add_argument(flag, type=float, required=True)
    _add_common_output(c)
    c.set_defaults(func=_cmd_check_si_gaussian)

    p = sub.add_parser("simulate", help="Monte Carlo trials of the coding scheme")
    p.add_argument("--channel", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", required=True, help="two comma-separated bits/use")
    p.add_argument("--rhat", required=True,
                   help="compression rate(s), one per destination")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0)
    _add_common_output(p, csv=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("lemma1", help="empirical check of the product-law property")
    p.add_argument("--policy", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_common_output(p)
    p.set_defaults(func=_cmd_lemma1)

    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse and execute one subcommand; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run())
