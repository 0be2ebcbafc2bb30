"""Command-line front end.

Subcommands::

    bb84sim simulate        --config cfg.json [--seed N] [--attack ...] [--out report.json]
    bb84sim sweep           --config cfg.json [--mode ...] [--start-km A --stop-km B --step-km S]
    bb84sim optimize-mu     (--eta E | --distance-km L) [--config cfg.json]
    bb84sim decoy-estimate  observations.json [--method analytic|lp]
    bb84sim demo-otp-reuse  --m1 1100 --m2 1010 [--key 0110 | --seed N]

Every config key can be overridden with ``--set key=value`` (value parsed as
JSON, falling back to a plain string). Named flags win over ``--set``.

Output formats
--------------
simulate
    JSON object: ``seed``, ``params``, ``attack``, ``outcome``
    (``completed``/``aborted``), ``abort_reason``, ``qber`` and ``gains`` per
    intensity label (``null`` = no estimate), ``sifted_length``,
    ``test_length``, ``key_length``, ``multiphoton_fraction``,
    ``yield_bounds``, ``final_length``, ``leakage`` (``ec_bits_leaked``,
    ``pa_output_length``, ``auth_bits_consumed``, ``test_bits_revealed``),
    ``net_key_growth``, ``messages`` and, for an active attack,
    ``eve_information``.
sweep
    CSV with header ``distance_km,eta,mu_opt,Q,E,R_nondecoy,R_decoy_ideal,R_decoy_two``.
optimize-mu
    JSON ``{"eta", "mu_opt", "G"}``.
decoy-estimate
    JSON ``{"Y1_lower", "e1_upper", "method", "vacuous", "suppression_flag"}``.
    The input file must match :data:`OBSERVATIONS_SCHEMA`.

Exit status is 0 for any finished run, including aborted sessions, 2 for
usage or configuration errors and 1 for anything unexpected.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from .config import ConfigError, RunConfig
from .keyrate import MODES, decoy_bounds, lp_bounds, optimize_mu, rows_to_csv, sweep_rates
from .keyrate.decoy import DecoyObservations, IntensityObservation
from .adversary import VARIANTS
from .postprocessing.otp import as_bits, bits_to_str, key_reuse_leak, otp_encrypt
from .protocol import run_session

OBSERVATIONS_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "decoy observations",
    "type": "object",
    "properties": {
        "observations": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "mu": {"type": "number", "minimum": 0},
                    "gain": {"type": "number", "minimum": 0, "maximum": 1},
                    "qber": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "count": {"type": "integer", "minimum": 1},
                },
                "required": ["mu", "gain"],
                "additionalProperties": False,
            },
        },
        "method": {"enum": ["analytic", "lp"]},
    },
    "required": ["observations"],
    "additionalProperties": False,
}


class UsageError(Exception):
    pass


def _dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_set(items: Sequence[str]) -> dict[str, Any]:
    layer = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            layer[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            layer[key.strip()] = raw
    return layer


def build_config(args: argparse.Namespace, *, need_seed: bool) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    layer = _parse_set(getattr(args, "set", None) or [])
    if getattr(args, "seed", None) is not None:
        layer["seed"] = args.seed
    if getattr(args, "attack", None):
        layer["attack.variant"] = args.attack
    if getattr(args, "distance_km", None) is not None:
        layer["channel.distance_km"] = args.distance_km
    if getattr(args, "mu", None) is not None:
        layer["source.intensities.signal"] = args.mu
    if getattr(args, "n_pulses", None) is not None:
        layer["session.n_pulses"] = args.n_pulses
    for flag in ("start_km", "stop_km", "step_km", "workers"):
        if getattr(args, flag, None) is not None:
            layer[f"sweep.{flag}"] = getattr(args, flag)
    if getattr(args, "mode", None):
        layer["sweep.mode"] = args.mode
    if layer:
        cfg = cfg.with_overrides(layer)
    if need_seed and cfg.seed is None:
        raise ConfigError("invalid configuration:\n  seed: required (give --seed or a config file with 'seed')")
    if getattr(args, "dump_config", None):
        cfg.dump(args.dump_config)
    return cfg


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args, need_seed=True)
    transcript = run_session(cfg.session(), cfg.attack())
    _emit(_dumps(_clean(transcript.report())), args.out)
    return 0


def distance_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("step must be positive")
    if stop < start:
        raise UsageError(f"empty distance range: start {start} > stop {stop}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(args, need_seed=False)
    grid = distance_grid(cfg.get("sweep.start_km"), cfg.get("sweep.stop_km"), cfg.get("sweep.step_km"))
    rows = sweep_rates(grid, cfg.sweep_template(), cfg.get("sweep.mode"), cfg.get("sweep.workers"))
    _emit(rows_to_csv(rows), args.out)
    return 0


def cmd_optimize_mu(args: argparse.Namespace) -> int:
    if args.eta is not None and args.distance_km is not None:
        raise UsageError("give either --eta or --distance-km, not both")
    if args.eta is not None:
        eta = args.eta
        if not 0 < eta <= 1:
            raise UsageError(f"--eta must lie in (0, 1], got {eta}")
    else:
        cfg = build_config(args, need_seed=False)
        eta = cfg.rate_params().eta
    mu, gain = optimize_mu(eta, printed_variant=args.printed_p_rec)
    _emit(_dumps({"eta": eta, "mu_opt": mu, "G": gain}), args.out)
    return 0


def load_observations(path: str | Path) -> tuple[DecoyObservations, str]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    validator = jsonschema.Draft202012Validator(OBSERVATIONS_SCHEMA)
    errors = sorted(
        f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
        for e in validator.iter_errors(doc)
    )
    if errors:
        raise ConfigError(f"{path}: invalid observations:\n  " + "\n  ".join(errors))
    obs = {
        label: IntensityObservation(o["mu"], o["gain"], o.get("qber"), o.get("count", 1))
        for label, o in doc["observations"].items()
    }
    return DecoyObservations(obs), doc.get("method", "analytic")


def cmd_decoy_estimate(args: argparse.Namespace) -> int:
    obs, method = load_observations(args.observations)
    method = args.method or method
    bounds = lp_bounds(obs) if method == "lp" else decoy_bounds(obs)
    _emit(_dumps(_clean(bounds.to_dict())), args.out)
    return 0


def cmd_demo_otp_reuse(args: argparse.Namespace) -> int:
    m1, m2 = as_bits(args.m1), as_bits(args.m2)
    if len(m1) != len(m2):
        raise UsageError(f"messages differ in length: {len(m1)} vs {len(m2)}")
    if args.key is not None:
        key = as_bits(args.key)
    else:
        if args.seed is None:
            raise UsageError("give --key or --seed")
        key = np.random.default_rng(args.seed).integers(0, 2, size=len(m1), dtype=np.uint8)
    c1, c2 = otp_encrypt(m1, key), otp_encrypt(m2, key)
    leak = key_reuse_leak(c1, c2)
    lines = [
        f"m1        = {bits_to_str(m1)}",
        f"m2        = {bits_to_str(m2)}",
        f"key       = {bits_to_str(key[: len(m1)])}",
        f"c1        = {bits_to_str(c1)}",
        f"c2        = {bits_to_str(c2)}",
        f"c1 xor c2 = {bits_to_str(leak)}",
        f"m1 xor m2 = {bits_to_str(m1 ^ m2)}",
        f"leak equals message parity: {str(bool(np.array_equal(leak, m1 ^ m2))).lower()}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat JSON config (must contain 'seed')")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--dump-config", metavar="PATH", help="write the effective config here")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bb84sim", description="BB84 QKD simulator and key-rate tools")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one BB84 session and print a JSON report")
    _config_flags(s)
    s.add_argument("--seed", type=int, metavar="U64")
    s.add_argument("--attack", choices=VARIANTS)
    s.add_argument("--distance-km", type=float)
    s.add_argument("--mu", type=float, help="signal intensity")
    s.add_argument("--n-pulses", type=int)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="key rate versus distance as CSV")
    _config_flags(w)
    w.add_argument("--seed", type=int, metavar="U64", help="accepted for uniformity; the sweep is deterministic")
    w.add_argument("--mode", choices=MODES, help="mode whose optimum fills mu_opt, Q, E")
    w.add_argument("--start-km", type=float)
    w.add_argument("--stop-km", type=float)
    w.add_argument("--step-km", type=float)
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimize-mu", help="intensity maximizing p_rec - p_multi")
    _config_flags(o)
    o.add_argument("--seed", type=int, metavar="U64", help=argparse.SUPPRESS)
    o.add_argument("--eta", type=float)
    o.add_argument("--distance-km", type=float)
    o.add_argument("--printed-p-rec", action="store_true",
                   help="use p_rec = 1 - mu*eta*exp(-mu*eta) instead of 1 - exp(-mu*eta)")
    o.set_defaults(func=cmd_optimize_mu)

    d = sub.add_parser("decoy-estimate", help="single-photon bounds from an observations file")
    d.add_argument("observations", metavar="PATH")
    d.add_argument("--method", choices=("analytic", "lp"))
    d.add_argument("--out", metavar="PATH")
    d.set_defaults(func=cmd_decoy_estimate)

    m = sub.add_parser("demo-otp-reuse", help="show the parity leak of a reused one-time pad")
    m.add_argument("--m1", required=True)
    m.add_argument("--m2", required=True)
    m.add_argument("--key")
    m.add_argument("--seed", type=int, metavar="U64")
    m.add_argument("--out", metavar="PATH")
    m.set_defaults(func=cmd_demo_otp_reuse)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"bb84sim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
