"""Command-line front end.

Subcommands:

    qct run        one honest session, exit 0 when the verdict matches the bit
    qct attack     Monte Carlo coin tosses for a pair of strategies
    qct sweep      CSV table of honest performance against one parameter
    qct calibrate  estimate a depolarizing level from sampled pairs

Exit codes: 0 success, 1 protocol abort or mismatch, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from importlib import resources


from qct import __version__, kernels
from qct.adversary import CSV_FIELDS, AliceStrategy, BobStrategy, estimate_bias, run_batch
from qct.noise import calibrate_environment
from qct.protocol import ConfigError, ProtocolConfig, Suppression, VerdictMode, run_session, session_rng, Transcript
from qct.qsim import Side, depolarize, singlet

SCHEMA_VERSION = "1"
SWEEP_PARAMS = ("noise", "n", "theta-hi", "detector-advantage")
SWEEP_FIELDS = [
    "value", "runs", "success_rate", "abort_rate", "f_claimed_mean", "f_other_mean",
    "singlet_count_mean", "guess_accuracy", "theta_hi", "theta_lo",
]


class UsageError(Exception):
    """Bad flags or config; reported on one line with exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_schema(name: str) -> dict:
    """Published JSON schema for a report kind: run, bias or calibration."""
    text = resources.files("qct").joinpath("schemas", f"{name}_report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _seed(args, cfg_seed: int) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QCT_SEED", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"QCT_SEED must be an integer, got {env!r}") from None
    return cfg_seed


def load_config(args) -> ProtocolConfig:
    """Config file (JSON) overlaid with the command-line overrides."""
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
    cfg = ProtocolConfig.from_dict(data)
    changes = {"seed": _seed(args, int(cfg.seed))}
    if getattr(args, "noise", None) is not None:
        changes["noise"] = dataclasses.replace(cfg.noise, env_a=args.noise)
    if getattr(args, "verdict", None) is not None:
        changes["verdict_mode"] = VerdictMode(args.verdict)
    if getattr(args, "suppression", None) is not None:
        changes["suppression"] = Suppression(args.suppression)
    return cfg.with_(**changes)


# ---------------------------------------------------------------- run

def run_report(cfg: ProtocolConfig, bit: int, transcript: Transcript | None = None) -> tuple[dict, int]:
    """Run one honest session and build its report plus the exit status."""
    start = time.perf_counter()
    res = run_session(cfg, session_rng(cfg.seed), bit=bit, transcript=transcript)
    elapsed = time.perf_counter() - start
    v = res.verdict
    status = 0 if not res.aborted and v.bit == bit else 1
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "run",
        "seed": int(cfg.seed),
        "config": cfg.to_dict(),
        "bit": bit,
        "phases": {
            "source_check": None if res.source_check is None else res.source_check.to_dict(),
            "entanglement_check": None if res.entanglement_check is None else res.entanglement_check.to_dict(),
        },
        "singlet_count": v.singlet_count,
        "compared": v.compared,
        "f_direct": v.f_direct,
        "f_reverse": v.f_reverse,
        "verdict": v.kind.value,
        "abort_reason": None if v.reason is None else v.reason.value,
        "coin": res.coin,
        "exit_status": status,
        "timing": {"wall_clock_s": elapsed, "backend": kernels.BACKEND},
    }
    return report, status


def cmd_run(args) -> int:
    cfg = load_config(args)
    tx = Transcript() if args.transcript else None
    report, status = run_report(cfg, args.bit, tx)
    _write(args.out, dumps(report))
    if tx is not None:
        tx.write(args.transcript)
    print(f"verdict {report['verdict']} for bit {args.bit}"
          + (f" ({report['abort_reason']})" if report["abort_reason"] else ""), file=sys.stderr)
    return status


# ---------------------------------------------------------------- attack

def cmd_attack(args) -> int:
    cfg = load_config(args)
    if args.runs < 100:
        raise UsageError("--runs must be at least 100")
    start = time.perf_counter()
    rep = estimate_bias(args.alice, args.bob, cfg, args.runs, seed=cfg.seed, workers=args.workers)
    elapsed = time.perf_counter() - start
    report = {"schema_version": SCHEMA_VERSION, "kind": "bias", **rep.to_dict(),
              "timing": {"wall_clock_s": elapsed, "backend": kernels.BACKEND}}
    if args.json:
        _write(args.json, dumps(report))
    if args.csv:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerow(report)
        _write(args.csv, buf.getvalue())
    if not args.json and not args.csv:
        _write(None, dumps(report))
    lo_a, hi_a = rep.epsilon_interval("A")
    lo_b, hi_b = rep.epsilon_interval("B")
    print(f"{rep.alice} vs {rep.bob}: eps_A in [{lo_a:+.4f}, {hi_a:+.4f}], eps_B in [{lo_b:+.4f}, {hi_b:+.4f}], "
          f"abort {rep.abort_rate:.4f}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- sweep

def sweep_values(start: float, stop: float, step: float, integer: bool = False) -> list:
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)) or step <= 0 or stop < start:
        raise UsageError(f"empty sweep range from {start} to {stop} step {step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [round(start + i * step, 10) for i in range(count)]
    if integer:
        values = sorted({int(round(v)) for v in values})
    return values


def _swept_config(cfg: ProtocolConfig, param: str, value) -> ProtocolConfig:
    if param == "noise":
        return cfg.with_(noise=dataclasses.replace(cfg.noise, env_a=value))
    if param == "n":
        return cfg.with_(N=int(value) + cfg.n_a + cfg.n_b)
    if param == "theta-hi":
        return cfg.with_(theta_hi=value, theta_lo=None)
    return cfg.with_(noise=dataclasses.replace(cfg.noise, detector_advantage=value))


def _mean(total, count):
    return float(total / count) if count else None


def sweep_rows(cfg: ProtocolConfig, param: str, values, runs: int, alice: str, bob: str, workers: int = 1) -> list[dict]:
    rows = []
    for value in values:
        try:
            point = _swept_config(cfg, param, value)
        except (ConfigError, ValueError) as exc:
            raise UsageError(f"{param}={value}: {exc}") from None
        t = run_batch(AliceStrategy(alice), BobStrategy(bob), point, runs, seed=point.seed, coin=True, workers=workers)
        hi, lo = point.thresholds()
        rows.append({
            "value": value,
            "runs": t.runs,
            "success_rate": t.recovered / t.runs,
            "abort_rate": t.aborts / t.runs,
            "f_claimed_mean": _mean(t.f_claimed_sum, t.verified),
            "f_other_mean": _mean(t.f_other_sum, t.verified),
            "singlet_count_mean": _mean(t.singlets, t.verified),
            "guess_accuracy": _mean(t.correct_guesses, t.committed),
            "theta_hi": hi,
            "theta_lo": lo,
        })
    return rows


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(round(value, 12))
    return str(value)


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    values = sweep_values(args.start, args.stop, args.step, integer=args.param == "n")
    rows = sweep_rows(cfg, args.param, values, args.runs, args.alice, args.bob, args.workers)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    _write(args.csv, buf.getvalue())
    return 0


# ---------------------------------------------------------------- calibrate

def cmd_calibrate(args) -> int:
    if not 0.0 <= args.level <= 1.0:
        raise UsageError(f"--level must lie in [0, 1], got {args.level}")
    seed = _seed(args, 0)
    state = depolarize(singlet(), Side.ALICE, args.level)
    rep = calibrate_environment(state, args.samples, session_rng(seed), component=args.component)
    report = {"schema_version": SCHEMA_VERSION, "kind": "calibration", "seed": seed, "true_level": args.level,
              **rep.to_dict()}
    _write(args.json, dumps(report))
    return 0


# ---------------------------------------------------------------- parser

def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return value


def _common(p: argparse.ArgumentParser, noise: bool = True) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--seed", type=int, help="RNG seed (default: $QCT_SEED, then the config seed)")
    p.add_argument("--verdict", choices=[m.value for m in VerdictMode])
    p.add_argument("--suppression", choices=[s.value for s in Suppression],
                   help="which parties scramble and inject noise")
    if noise:
        p.add_argument("--noise", type=_probability, metavar="P", help="environmental depolarizing level")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qct", description="Quantum bit commitment and coin tossing simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--backend", choices=kernels.BACKENDS, help="kernel backend (default: compiled if built)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one honest commitment session")
    p.add_argument("--bit", type=int, choices=(0, 1), required=True)
    p.add_argument("--out", metavar="PATH", help="report path (default stdout)")
    p.add_argument("--transcript", metavar="PATH", help="write the message transcript as NDJSON")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="estimate coin-toss bias for a strategy pair")
    p.add_argument("--alice", choices=[s.value for s in AliceStrategy], default="honest")
    p.add_argument("--bob", choices=[s.value for s in BobStrategy], default="honest")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--json", metavar="PATH")
    _common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="tabulate performance against one parameter")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--alice", choices=[s.value for s in AliceStrategy], default="honest")
    p.add_argument("--bob", choices=[s.value for s in BobStrategy], default="honest")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", metavar="PATH", help="table path (default stdout)")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="recover a known depolarizing level by sampling")
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--component", default="pair")
    p.add_argument("--seed", type=int)
    p.add_argument("--json", metavar="PATH", help="report path (default stdout)")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep" and args.step is None:
            args.step = 40.0 if args.param == "n" else 0.05
        if args.backend:
            kernels.set_backend(args.backend)
        return args.func(args)
    except UsageError as exc:
        print(f"qct: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, ImportError) as exc:
        print(f"qct: error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
