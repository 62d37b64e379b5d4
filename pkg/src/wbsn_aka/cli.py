"""Command-line entry point: ``wbsn-aka deploy | run | bench``.

Exit codes for ``run``: 0 keys agreed, 2 protocol abort, 1 usage or
configuration error.

A scenario file is JSON::

    {
      "deployment": "deploy.json",        # relative to the scenario file
      "seed": 7,
      "policy": {"delta_t": 5, "hop_delay": 1},
      "sensor": 0, "intermediate": 0, "start": 0,
      "script": [{"action": "tamper", "hop": "HN->IN", "bits": [200]}],
      "outputs": {"transcript": "run.txt", "report": "report.json"}
    }
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import storage_account
from .nodes import FreshnessPolicy
from .registry import Deployment
from .simnet import (
    Action,
    CaptureSensor,
    Delay,
    Drop,
    Observe,
    Replay,
    Tamper,
    World,
    run_session,
)
from .wire import Hop

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2


class ConfigError(Exception):
    pass


def parse_action(d: dict) -> Action:
    try:
        kind = d["action"].lower()
        nth = d.get("nth")
        if kind == "observe":
            return Observe(Hop(d["hop"]))
        if kind == "drop":
            return Drop(Hop(d["hop"]), nth)
        if kind == "delay":
            return Delay(Hop(d["hop"]), int(d["by"]), nth)
        if kind == "tamper":
            return Tamper(Hop(d["hop"]), tuple(int(b) for b in d["bits"]), nth)
        if kind == "replay":
            return Replay(int(d["index"]), int(d["at"]))
        if kind == "capture":
            return CaptureSensor(int(d["sensor"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad script action {d!r}: {exc}") from None
    raise ConfigError(f"unknown script action {d.get('action')!r}")


@dataclass
class ScenarioConfig:
    deployment: Path
    policy: FreshnessPolicy = field(default_factory=FreshnessPolicy)
    seed: int = 0
    sensor: int = 0
    intermediate: int = 0
    start: int = 0
    script: list[Action] = field(default_factory=list)
    transcript_path: Path | None = None
    report_path: Path | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> ScenarioConfig:
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from None
        base = path.parent

        def resolve(p: str | None) -> Path | None:
            return None if p is None else base / p

        try:
            policy = FreshnessPolicy(**d.get("policy", {}))
            outputs = d.get("outputs", {})
            return cls(
                deployment=resolve(d["deployment"]),
                policy=policy,
                seed=int(d.get("seed", 0)),
                sensor=int(d.get("sensor", 0)),
                intermediate=int(d.get("intermediate", 0)),
                start=int(d.get("start", 0)),
                script=[parse_action(a) for a in d.get("script", [])],
                transcript_path=resolve(outputs.get("transcript")),
                report_path=resolve(outputs.get("report")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario {path}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wbsn-aka", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("deploy", help="generate a deployment file")
    d.add_argument("n_sensors", type=int)
    d.add_argument("m_intermediates", type=int)
    d.add_argument("--seed", type=int, default=0, help="default: %(default)s")
    d.add_argument("--out", required=True, help="deployment file to write")

    r = sub.add_parser("run", help="run one handshake scenario")
    r.add_argument("scenario", nargs="?", help="scenario JSON file")
    r.add_argument("--deployment", help="deployment file (overrides the scenario's)")
    r.add_argument("--seed", type=int, help="default: scenario value or 0")
    r.add_argument("--delta-t", type=int, help="freshness window, default 5")
    r.add_argument("--hop-delay", type=int, help="per-hop delay, default 1")
    r.add_argument("--sensor", type=int, help="sensor index, default 0")
    r.add_argument("--out", help="directory for transcript.txt and report.json")

    b = sub.add_parser("bench", help="cost table over table sizes")
    b.add_argument("--n", type=int, nargs="+", default=[1, 2, 5, 10], help="default: %(default)s")
    b.add_argument("--m", type=int, default=1, help="intermediates, default: %(default)s")
    b.add_argument("--trials", type=int, default=10, help="default: %(default)s")
    b.add_argument("--seed", type=int, default=0, help="default: %(default)s")
    b.add_argument("--out", help="CSV file (default stdout)")
    return p


def cmd_deploy(n_sensors: int, m_intermediates: int, seed: int, out: str | Path) -> dict[str, int]:
    dep = Deployment.generate(n_sensors, m_intermediates, seed)
    dep.write(out)
    return storage_account(n_sensors, m_intermediates)


def cmd_run(config: ScenarioConfig) -> tuple[int, dict]:
    try:
        dep = Deployment.read(config.deployment)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load deployment {config.deployment}: {exc}") from None
    world = World.from_deployment(dep, config.policy)
    if not 0 <= config.sensor < len(world.sensors):
        raise ConfigError(f"sensor index {config.sensor} out of range")
    if not 0 <= config.intermediate < len(world.intermediates):
        raise ConfigError(f"intermediate index {config.intermediate} out of range")
    try:
        outcome = run_session(
            world,
            config.script,
            seed=config.seed,
            sensor=config.sensor,
            intermediate=config.intermediate,
            start=config.start,
        )
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None

    report = {
        "outcome": "AgreedKeys" if outcome.agreed else "AbortedAt",
        "step": outcome.step,
        "reason": outcome.reason,
        "sessionKey": outcome.sn_key.hex() if outcome.agreed else None,
        **outcome.costs.to_dict(),
    }
    if config.transcript_path:
        outcome.transcript.write(config.transcript_path)
    if config.report_path:
        Path(config.report_path).write_text(json.dumps(report, indent=2) + "\n")
    return (EXIT_OK if outcome.agreed else EXIT_ABORT), report


BENCH_COLUMNS = [
    "n", "sn_hash", "sn_xor", "sn_ms", "sn_mj",
    "hn_hash", "hn_xor", "hn_ms", "hn_mj",
    "hn_storage_bits", "hop1_bits", "hop2_bits", "hop3_bits", "hop4_bits",
]


def _num(x: float) -> int | float:
    return int(x) if float(x).is_integer() else round(x, 9)


def cmd_bench(n_list: list[int], trials: int, seed: int, m: int = 1) -> list[dict]:
    """Per-n averages over ``trials`` honest sessions against random sensors."""
    if not n_list:
        raise ConfigError("need at least one table size")
    rows = []
    for n in sorted(set(n_list)):
        world = World.from_deployment(Deployment.generate(n, m, seed + n))
        samples = []
        for t in range(trials):
            o = run_session(world, seed=seed * 1_000_003 + t, sensor=t % n)
            if not o.agreed:
                raise RuntimeError(f"honest session failed at n={n}: {o}")
            c = o.costs
            samples.append({
                "sn_hash": c.sn.hash_count, "sn_xor": c.sn.xor_count,
                "sn_ms": c.sn.time_ms, "sn_mj": c.sn.energy_mj,
                "hn_hash": c.hn.hash_count, "hn_xor": c.hn.xor_count,
                "hn_ms": c.hn.time_ms, "hn_mj": c.hn.energy_mj,
                "hn_storage_bits": c.hn.storage_bits,
                **{f"hop{h.number}_bits": c.bits_sent[h] for h in Hop},
            })
        row: dict = {"n": n}
        for col in BENCH_COLUMNS[1:]:
            row[col] = _num(statistics.fmean(s[col] for s in samples))
        rows.append(row)
    return rows


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "deploy":
            try:
                storage = cmd_deploy(args.n_sensors, args.m_intermediates, args.seed, args.out)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            except OSError as exc:
                raise ConfigError(f"cannot write {args.out}: {exc}") from None
            print(json.dumps({"storageBits": storage}))
            return EXIT_OK

        if args.command == "run":
            if args.scenario:
                config = ScenarioConfig.from_file(args.scenario)
            elif args.deployment:
                config = ScenarioConfig(deployment=Path(args.deployment))
            else:
                raise ConfigError("run needs a scenario file or --deployment")
            if args.deployment:
                config.deployment = Path(args.deployment)
            if args.seed is not None:
                config.seed = args.seed
            if args.sensor is not None:
                config.sensor = args.sensor
            if args.delta_t is not None or args.hop_delay is not None:
                try:
                    config.policy = FreshnessPolicy(
                        args.delta_t if args.delta_t is not None else config.policy.delta_t,
                        args.hop_delay if args.hop_delay is not None else config.policy.hop_delay,
                    )
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                config.transcript_path = out / "transcript.txt"
                config.report_path = out / "report.json"
            code, report = cmd_run(config)
            if report["outcome"] == "AgreedKeys":
                print(f"AgreedKeys {report['sessionKey']}")
            else:
                print(f"AbortedAt Step{report['step']} {report['reason']}")
            return code

        rows = cmd_bench(args.n, args.trials, args.seed, args.m)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return EXIT_OK
    except ConfigError as exc:
        print(f"wbsn-aka: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
