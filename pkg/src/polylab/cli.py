"""Command-line front end: ``polylab compute | verify | scan``.

Exit codes: 0 success (no violation), 1 violation found, 2 usage or domain
error, 3 I/O error.  Seeds come from ``--seed``, then the config file, then
the ``POLYLAB_SEED`` environment variable, then 0.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__, lemmafn, roof, verify
from .entropy import QSParams, unified_entropy
from .exceptions import PolylabError
from .qstate import RNG_ALGORITHM, DensityMatrix, PureState, load_state
from .twoqubit import calE, coa_analytic, concurrence_pure, concurrence_wootters, f_qs

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

LOG_BASE_NOTE = "all entropies use the natural logarithm (nats); EoF of a Bell state is ln 2"

MEASURES = ("unified_entropy", "unified_entanglement", "ueoa", "eof", "eoa", "teoa", "coa",
            "concurrence", "coa_analytic", "f_qs", "calE")
_ROOF_MEASURES = {"unified_entanglement": "min", "ueoa": "max", "eof": "min", "eoa": "max",
                  "teoa": "max", "coa": "max"}
SCANS = ("m_surface", "h_region", "domain_region")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunManifest:
    command_line: list
    config_digest: str
    seed: int | None
    version: str
    log_base: str
    timestamp: str
    rng_algorithm: str = RNG_ALGORITHM

    @classmethod
    def create(cls, argv, config: dict, seed) -> "RunManifest":
        blob = json.dumps(config, sort_keys=True, default=str).encode()
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(["polylab", *argv], hashlib.sha256(blob).hexdigest(), seed, __version__,
                   LOG_BASE_NOTE, stamp)

    def to_dict(self) -> dict:
        return asdict(self)


# -- config plumbing ----------------------------------------------------------------


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return data


def _pick(flag, section: dict, key: str, default):
    if flag is not None:
        return flag
    return section.get(key, default)


def _resolve_seed(flag, config: dict) -> int:
    if flag is not None:
        return flag
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("POLYLAB_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"POLYLAB_SEED must be an integer, got {env!r}") from None
    return 0


def _roof_config(args, config: dict, seed: int) -> roof.RoofConfig:
    section = dict(config.get("roof", {}))
    section.pop("backend", None)
    kw = {
        "cardinality": _pick(args.cardinality, section, "cardinality", None),
        "restarts": _pick(args.restarts, section, "restarts", 32),
        "max_iters": _pick(args.max_iters, section, "max_iters", 2000),
        "step_tol": section.get("step_tol", 1e-8),
        "value_tol": section.get("value_tol", 1e-10),
        "initial_step": section.get("initial_step", 0.3),
        "seed": int(section.get("seed", seed)),
    }
    unknown = set(section) - set(kw)
    if unknown:
        raise UsageError(f"unknown roof config keys: {sorted(unknown)}")
    return roof.RoofConfig(**kw)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=str)
        fh.write("\n")


def _mirror_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


# -- compute --------------------------------------------------------------------------


def _need(value, name: str):
    if value is None:
        raise UsageError(f"--{name} is required for this measure")
    return value


def _need_state(args):
    if args.state is None:
        raise UsageError("--state is required for this measure")
    try:
        return load_state(args.state)
    except OSError:
        raise
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.state}: malformed state file ({exc})") from None


def cmd_compute(args, config: dict, argv) -> int:
    name = args.measure
    seed = _resolve_seed(args.seed, config)
    out = {"measure": name, "mode": "analytic"}

    if name in ("f_qs", "calE"):
        x = _need(args.x, "x")
        if name == "f_qs":
            value = f_qs(x, _need(args.q, "q"), _need(args.s, "s"))
        else:
            value = calE(x)
    else:
        state = _need_state(args)
        focus = args.focus if args.focus is not None else state.labels[0]
        if name == "unified_entropy":
            value = unified_entropy(_as_density(state), QSParams(_need(args.q, "q"), _need(args.s, "s")))
        elif name == "concurrence":
            if isinstance(state, PureState):
                from .qstate import Bipartition

                value = concurrence_pure(state, Bipartition.of(state.labels, {focus}))
            elif state.dim == 4:
                value = concurrence_wootters(state)
            else:
                raise UsageError("mixed-state concurrence is only available for two qubits")
        elif name == "coa_analytic":
            value = coa_analytic(_as_density(state))
        else:
            cfg = _roof_config(args, config, seed)
            payoff = _payoff_for(name, args, _as_density(state), focus)
            res = roof.roof_optimize(state, payoff, _ROOF_MEASURES[name], cfg)
            value = res.value
            out.update(mode="variational", bound=res.bound, roof=res.metadata(),
                       roof_config=cfg.to_dict())
    out["value"] = float(value)
    print(f"{value:.12f}")
    if args.out:
        manifest = RunManifest.create(argv, {"args": vars(args), "config": config}, seed)
        out["manifest"] = manifest.to_dict()
        _write_json(args.out, out)
    return EXIT_OK


def _as_density(state) -> DensityMatrix:
    return state.density() if isinstance(state, PureState) else state


def _payoff_for(name, args, rho: DensityMatrix, focus) -> roof.MarginalPayoff:
    position = rho.position(focus)
    if name == "coa":
        return roof.MarginalPayoff("concurrence", None, position)
    if name in ("eof", "eoa"):
        params = QSParams(1.0, 1.0)
    elif name == "teoa":
        params = QSParams(_need(args.q, "q"), 1.0)
    else:
        params = QSParams(_need(args.q, "q"), _need(args.s, "s"))
    return roof.MarginalPayoff("entropy", params, position)


# -- verify ---------------------------------------------------------------------------


def _campaign_config(args, config: dict) -> verify.CampaignConfig:
    section = dict(config.get("campaign", {}))
    section.pop("inequality", None)
    if "seed" in section:
        config = {**config, "seed": section.pop("seed")}
    seed = _resolve_seed(args.seed, config)
    qs_points = section.pop("qs_points", None)
    if (args.q is None) != (args.s is None) and args.inequality != verify.TSALLIS:
        raise UsageError("--q and --s must be given together")
    if args.q is not None:
        qs_points = [(args.q, args.s if args.s is not None else 1.0)]
    if qs_points is None:
        qs_points = verify.DEFAULT_QS_POINTS
        if args.inequality == verify.TSALLIS:
            qs_points = tuple(p for p in qs_points if p[1] == 1.0)
    rank = _pick(args.rank, section, "rank", None)
    kw = {
        "inequality": args.inequality,
        "samples": _pick(args.samples, section, "samples", 100),
        "n_qubits": _pick(args.qubits, section, "n_qubits", 3),
        "qs_points": tuple(tuple(p) for p in qs_points),
        "mode": _pick(args.mode, section, "mode", verify.ANALYTIC),
        "state_kind": section.get("state_kind", verify.INDUCED_MIXED if rank else verify.HAAR_PURE),
        "rank": rank,
        "seed": seed,
        "roof": _roof_config(args, config, seed),
        "focus": _pick(args.focus, section, "focus", 0),
        "sweep_focus": bool(args.sweep_focus or section.get("sweep_focus", False)),
        "tolerance": _pick(args.tolerance, section, "tolerance", None),
        "workers": _pick(args.threads, config, "threads", 1),
    }
    section.pop("roof", None)
    unknown = set(section) - set(kw)
    if unknown:
        raise UsageError(f"unknown campaign config keys: {sorted(unknown)}")
    return verify.CampaignConfig(**kw)


def cmd_verify(args, config: dict, argv) -> int:
    cfg = _campaign_config(args, config)
    report = verify.run_campaign(cfg)
    summary = report.summary
    if args.out:
        verify.write_report_csv(report.records, args.out)
        doc = verify.report_json(report)
        doc["manifest"] = RunManifest.create(argv, cfg.to_dict(), cfg.seed).to_dict()
        doc["report_csv"] = str(args.out)
        _write_json(_mirror_path(args.out), doc)
    print(f"{cfg.inequality}: {summary['records']} records, {summary['violations']} violations "
          f"(tol {summary['tolerance']:g}), min slack {summary['min_slack']}")
    if summary["violations"]:
        w = summary["witness"]
        print(f"violation witness: sample {w['sample_index']} state_seed {w['state_seed']} "
              f"q={w['q']} s={w['s']} slack={w['slack']:.6e}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# -- scan -----------------------------------------------------------------------------


def _grid(args, config: dict) -> lemmafn.GridSpec:
    section = dict(config.get("grid", {}))
    base = lemmafn.EXTENDED_GRID.to_dict()
    base.update(section)
    if args.q_range is not None:
        base["q_range"] = args.q_range
    if args.s_range is not None:
        base["s_range"] = args.s_range
    if args.x_steps is not None:
        base["x_steps"] = args.x_steps
    if args.domain_mode is not None:
        base["domain_mode"] = args.domain_mode
    try:
        q_lo, q_hi, q_n = base["q_range"]
        s_lo, s_hi, s_n = base["s_range"]
        base["q_range"] = (float(q_lo), float(q_hi), _steps(q_n))
        base["s_range"] = (float(s_lo), float(s_hi), _steps(s_n))
        return lemmafn.GridSpec.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"malformed grid spec: {exc}") from None


def _steps(v) -> int:
    if float(v) != int(float(v)):
        raise ValueError(f"steps must be an integer, got {v}")
    return int(float(v))


def cmd_scan(args, config: dict, argv) -> int:
    grid = _grid(args, config)
    threads = _pick(args.threads, config, "threads", 1)
    seed = _resolve_seed(args.seed, config)
    if args.scan == "m_surface":
        cells = lemmafn.m_critical_surface(grid, threads)
    elif args.scan == "h_region":
        cells = lemmafn.h_region(grid, threads)
    else:
        cells = verify.domain_region(grid, _pick(args.samples, config, "samples", 10),
                                     _pick(args.qubits, config, "n_qubits", 3), seed, threads)
    out = args.out
    if out is None:
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(lemmafn.SCAN_HEADER)
        w.writerows(lemmafn.scan_rows(cells))
        return EXIT_OK
    lemmafn.write_scan_csv(cells, out)
    manifest = RunManifest.create(argv, {"scan": args.scan, "grid": grid.to_dict()}, seed)
    doc = {
        "scan": args.scan,
        "grid": grid.to_dict(),
        "manifest": manifest.to_dict(),
        "scan_csv": str(out),
        "cells": [verify._jsonable(asdict(c)) for c in cells],
    }
    _write_json(_mirror_path(out), doc)
    print(f"{args.scan}: {len(cells)} cells -> {out}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with roof/campaign/grid sections")
    p.add_argument("--seed", type=int, default=None, help="overrides POLYLAB_SEED")
    p.add_argument("--threads", type=int, default=None, help="worker count, 0 = all cores")


def _add_roof(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cardinality", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polylab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate one measure")
    p.add_argument("measure", choices=MEASURES)
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--q", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--x", type=float, help="argument of f_qs / calE")
    p.add_argument("--focus", type=int, default=None, help="focus qubit label")
    p.add_argument("--out", help="write a JSON result here")
    _add_roof(p)
    _add_common(p)

    p = sub.add_parser("verify", help="run a verification campaign")
    p.add_argument("inequality", choices=verify.INEQUALITIES)
    p.add_argument("--samples", type=int)
    p.add_argument("--qubits", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--mode", choices=verify.MODES)
    p.add_argument("--rank", type=int, help="use induced mixed states of this rank")
    p.add_argument("--focus", type=int)
    p.add_argument("--sweep-focus", action="store_true")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--out", help="report CSV path; the JSON summary goes next to it")
    _add_roof(p)
    _add_common(p)

    p = sub.add_parser("scan", help="grid scans of the lemma functions and the domain map")
    p.add_argument("scan", choices=SCANS)
    p.add_argument("--q-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))
    p.add_argument("--s-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))
    p.add_argument("--x-steps", type=int)
    p.add_argument("--domain-mode", choices=(lemmafn.FULL_BOX, lemmafn.LEMMA2_REGION))
    p.add_argument("--samples", type=int, help="Haar states per cell (domain_region)")
    p.add_argument("--qubits", type=int, help="qubits per state (domain_region)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    return parser


_COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "scan": cmd_scan}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "threads", None) is not None and args.threads < 0:
        print("polylab: --threads must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = _load_json(args.config) if args.config else {}
        return _COMMANDS[args.command](args, config, argv)
    except OSError as exc:
        print(f"polylab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, PolylabError, ValueError, TypeError) as exc:
        print(f"polylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
