"""Command-line entry point: ``hqcomm <subcommand> [flags]``.

Exit codes: 0 success, 1 a table or encryption check failed, 2 invalid
configuration (including an unwritable ``--out`` path).
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import HQCommError, InvalidConfig
from .harness import PROTOCOLS, ScenarioConfig, emit_report, run_scenario, write_report

SUBCOMMAND_PROTOCOL = {
    "verify-tables": "verify-tables",
    "verify-encryption": "verify-encryption",
    "attack-study": "attack-study",
}
SIMULATE_PROTOCOLS = ("hqis-perfect", "hqis-probabilistic", "hqss")

# flag dest -> config field
_FIELDS = {
    "protocol": "protocol",
    "channel": "channel",
    "receiver": "receiver",
    "a": "a",
    "b": "b",
    "n": "n",
    "adversary": "adversary",
    "intercept_prob": "intercept_prob",
    "threshold": "threshold",
    "trials": "trials",
    "seed": "seed",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON scenario file; flags override it")
    p.add_argument("--channel", choices=("omega", "cluster4", "omega-prime"))
    p.add_argument("--receiver", help="Bob, Charlie or Diana")
    p.add_argument("--lambda-re", type=float, dest="lambda_re")
    p.add_argument("--lambda-im", type=float, dest="lambda_im")
    p.add_argument("--random-lambda", action="store_true",
                   help="draw Re and Im uniformly from [-2, 2] per trial")
    p.add_argument("--a", type=float, help="channel amplitude a (probabilistic only)")
    p.add_argument("--b", type=float, help="channel amplitude b (probabilistic only)")
    p.add_argument("--n", type=int, help="channel copies per session (1-3)")
    p.add_argument("--adversary", choices=("none", "intercept-resend"))
    p.add_argument("--intercept-prob", type=float, dest="intercept_prob")
    p.add_argument("--threshold", type=float, help="abort above this decoy error rate")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("json", "csv", "human"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqcomm",
        description="Simulate hierarchical quantum information splitting and secret sharing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="seeded Monte Carlo batch of one protocol")
    sim.add_argument("--protocol", choices=SIMULATE_PROTOCOLS)
    _common(sim)
    for name, text in (
        ("verify-tables", "exhaustive check of every correction table row"),
        ("verify-encryption", "weak receiver's reduced state and the role-swap symmetry"),
        ("attack-study", "dishonest insider against bare HQIS and full HQSS"),
    ):
        _common(sub.add_parser(name, help=text))
    return parser


def _load_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidConfig("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig("config", f"{path} is not valid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InvalidConfig("config", "top level must be an object")
    return data


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    base = ScenarioConfig.from_dict(_load_file(args.config)) if args.config else ScenarioConfig()
    updates = {}
    for dest, name in _FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            updates[name] = value
    if args.command in SUBCOMMAND_PROTOCOL:
        updates["protocol"] = SUBCOMMAND_PROTOCOL[args.command]
    elif "protocol" not in updates and base.protocol not in SIMULATE_PROTOCOLS:
        raise InvalidConfig("protocol", f"simulate runs one of {', '.join(SIMULATE_PROTOCOLS)}")
    if args.random_lambda:
        updates["lam"] = "random"
    elif args.lambda_re is not None or args.lambda_im is not None:
        old = base.lam if not isinstance(base.lam, str) else 0j
        old = complex(old)
        updates["lam"] = complex(
            old.real if args.lambda_re is None else args.lambda_re,
            old.imag if args.lambda_im is None else args.lambda_im,
        )
    for key, value in updates.items():
        setattr(base, key, value)
    if base.protocol not in PROTOCOLS:
        raise InvalidConfig("protocol", f"unknown protocol {base.protocol!r}")
    return base


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report = run_scenario(config)
        if args.out:
            write_report(report, args.format, args.out)
        else:
            sys.stdout.buffer.write(emit_report(report, args.format))
            sys.stdout.flush()
    except InvalidConfig as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except HQCommError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1 if report.passed is False else 0


if __name__ == "__main__":
    sys.exit(main())
