"""Command-line front end: ``mzmsim validate|run|compare``.

A run is described by one TOML file with four sections::

    [network]
    device = "coupler_array"      # or "t_junction"
    n_segments = 4
    sites = 3
    coupler = 0.6
    ramp = 1.0

    [disorder]
    seed = 1
    amplitude = 0.0

    [schedule]
    n_qubits = 2
    dt = 0.05
    target = "CNOT control 1 target 2"   # optional
    events = [
        {type = "project_pair", qubits = [1, 2]},
        {type = "braid", labels = [6, 7]},
        {type = "project_quad", qubit = 1},
    ]

    [run]
    oracle = "pfaffian"
    basis = "even"

Exit codes: 0 success, 1 configuration error, 2 numerical tolerance failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .bdg import DisorderSpec, spectrum_probe
from .devices import CouplerArrayDevice, TJunctionDevice
from .evolution import CanonicityViolation, UnitarityLoss
from .overlap import NormalizationUnderflow
from .protocol import (BraidMove, Dwell, ProjectPair, ProjectQuad, Readout, Schedule, ScheduleError,
                       aligned_deviation, dumps_result, event_probabilities, run, transition_from_dict)
from .stabilizer import EncodingLayout, glossary

log = logging.getLogger("mzmsim")

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE = 0, 1, 2
ORACLES = ("pfaffian", "exact", "stabilizer", "ideal")
#: largest Fock space the exact oracle accepts, in Majorana operators
EXACT_LIMIT = 24


class ConfigError(ValueError):
    """Schema or cross-reference problem in a run configuration."""


@dataclass
class RunConfig:
    network: dict[str, Any]
    disorder: DisorderSpec | None
    schedule: Schedule
    target: str | None = None
    run: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def layout(self) -> EncodingLayout:
        return self.schedule.layout

    def device(self):
        params = dict(self.network)
        kind = params.pop("device", "coupler_array")
        try:
            if kind == "coupler_array":
                return CouplerArrayDevice(**params, disorder=self.disorder)
            if kind == "t_junction":
                return TJunctionDevice(**params, disorder=self.disorder)
        except TypeError as exc:
            raise ConfigError(f"[network]: {exc}") from None
        raise ConfigError(f"[network]: unknown device {kind!r}")


_EVENT_KEYS = {
    "braid": {"labels", "path"},
    "dwell": {"labels", "angle"},
    "project_pair": {"qubits", "outcome"},
    "project_quad": {"qubit", "outcome"},
    "readout": {"basis"},
}


def _event(k: int, raw: dict) -> Any:
    kind = raw.get("type")
    where = f"schedule.events[{k}] ({kind})"
    if kind not in _EVENT_KEYS:
        raise ConfigError(f"schedule.events[{k}]: unknown event type {kind!r}")
    extra = set(raw) - _EVENT_KEYS[kind] - {"type"}
    if extra:
        raise ConfigError(f"{where}: unexpected keys {sorted(extra)}")
    try:
        if kind == "braid":
            i, j = raw["labels"]
            return BraidMove(int(i), int(j), raw.get("path"))
        if kind == "dwell":
            i, j = raw["labels"]
            return Dwell(int(i), int(j), float(raw["angle"]))
        if kind == "project_pair":
            qi, qj = raw["qubits"]
            return ProjectPair(int(qi), int(qj), raw.get("outcome", "even"))
        if kind == "project_quad":
            return ProjectQuad(int(raw["qubit"]), raw.get("outcome", "even"))
        basis = raw.get("basis")
        return Readout(None if basis is None else [tuple(int(c) for c in s) for s in basis])
    except KeyError as exc:
        raise ConfigError(f"{where}: missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _basis(choice, layout: EncodingLayout) -> list[tuple[int, ...]] | None:
    if choice is None or choice == "even":
        return None
    n_pairs = layout.n_majoranas // 2
    if choice == "odd":
        return [occ for occ in _all_occupations(n_pairs) if sum(occ) % 2]
    if choice == "all":
        return _all_occupations(n_pairs)
    if isinstance(choice, list):
        out = [tuple(int(c) for c in s) for s in choice]
        if any(len(o) != n_pairs for o in out):
            raise ConfigError(f"[run] basis: occupation strings need {n_pairs} digits")
        return out
    raise ConfigError(f"[run] basis: expected 'even', 'odd', 'all' or a list, got {choice!r}")


def _all_occupations(n_pairs: int) -> list[tuple[int, ...]]:
    # little-endian order: mode 1 is the least significant digit
    return [tuple((k >> b) & 1 for b in range(n_pairs)) for k in range(2 ** n_pairs)]


def load_config(path: str) -> RunConfig:
    """Parse and schema-check a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(raw) - {"network", "disorder", "schedule", "run"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    for section in ("network", "schedule"):
        if section not in raw:
            raise ConfigError(f"missing [{section}] section")
    dis = raw.get("disorder")
    disorder = None
    if dis:
        bad = set(dis) - {"seed", "amplitude"}
        if bad:
            raise ConfigError(f"[disorder]: unexpected keys {sorted(bad)}")
        disorder = DisorderSpec(int(dis.get("seed", 0)), float(dis.get("amplitude", 0.0)))
    sch = dict(raw["schedule"])
    n_qubits = int(sch.pop("n_qubits", 1))
    dt = float(sch.pop("dt", 0.1))
    target = sch.pop("target", None)
    events_raw = sch.pop("events", [])
    if sch:
        raise ConfigError(f"[schedule]: unexpected keys {sorted(sch)}")
    if not isinstance(events_raw, list):
        raise ConfigError("[schedule] events must be an array of tables")
    layout = EncodingLayout.sparse(n_qubits)
    events = [_event(k, ev) for k, ev in enumerate(events_raw)]
    run_sec = dict(raw.get("run", {}))
    basis = _basis(run_sec.get("basis"), layout)
    try:
        schedule = Schedule(events, layout, dt=dt, basis=basis)
    except ScheduleError as exc:
        msg = str(exc)
        if msg.startswith("event "):
            msg = "schedule.events[" + msg[len("event "):].replace(" ", "] ", 1)
        raise ConfigError(msg) from None
    if target is not None and target not in glossary(n_qubits):
        raise ConfigError(f"[schedule] target {target!r} is not a known gate name")
    if "oracle" in run_sec and run_sec["oracle"] not in ORACLES:
        raise ConfigError(f"[run] oracle must be one of {ORACLES}")
    return RunConfig(dict(raw["network"]), disorder, schedule, target, run_sec)


def check_spectrum(cfg: RunConfig) -> int:
    """Number of BdG eigenvalues at zero energy at ``t = 0``; adds a warning
    when braids are requested on a network without zero modes."""
    device = cfg.device()
    probe = spectrum_probe(device.base_network())
    wants_braids = any(isinstance(e, (BraidMove, Dwell)) for e in cfg.schedule.events)
    if probe.n_zero == 0 and wants_braids:
        cfg.warnings.append("0 zero modes")
    return probe.n_zero


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        n_zero = check_spectrum(cfg)
    except ConfigError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in cfg.warnings:
        print(f"warning: {w}")
    if not cfg.warnings:
        print(f"ok, {n_zero} zero modes detected")
    return EXIT_OK


def _result_payload(tm, cfg: RunConfig) -> dict:
    layout = cfg.layout
    target = glossary(len(layout.qubit_map))[cfg.target] if cfg.target else None
    out = tm.to_dict(cfg.target, target, layout)
    diag = dict(out.pop("diagnostics"))
    timing = {"utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    for key in ("runtime_s", "seconds_per_amplitude"):
        if key in diag:
            timing[key] = diag.pop(key)
    out["diagnostics"] = diag
    # ideal-backend Born probabilities of each projection, per logical input
    out["event_probabilities"] = event_probabilities(cfg.schedule.with_outcomes(
        [1] * len(cfg.schedule.projections))) if cfg.schedule.projections else []
    # every wall-clock dependent value lives here, so reruns differ only in this field
    out["timestamp"] = timing
    return out


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        oracle = args.oracle or cfg.run.get("oracle", "pfaffian")
        if oracle not in ORACLES:
            raise ConfigError(f"unknown oracle {oracle!r}")
        seed = args.seed if args.seed is not None else cfg.run.get("seed")
        device = None
        if oracle in ("pfaffian", "exact"):
            device = cfg.device()
            if oracle == "exact":
                n_sites = len(device.base_network().mu)
                if 2 * n_sites > EXACT_LIMIT:
                    raise ConfigError(f"exact oracle needs at most {EXACT_LIMIT // 2} sites, "
                                      f"network has {n_sites}")
            if check_spectrum(cfg) == 0:
                raise ConfigError("network has 0 zero modes at t = 0")
        out_dir = args.out or cfg.run.get("out", ".")
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "spectrum.csv") if cfg.run.get("csv") else None
        tm = run(cfg.schedule, device, oracle, workers=args.workers, seed=seed, csv_path=csv_path)
    except (ConfigError, ScheduleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnitarityLoss, CanonicityViolation, NormalizationUnderflow) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ValueError as exc:
        # zero-mode detection problems surface as ValueError from the frame builder
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = _result_payload(tm, cfg)
    path = os.path.join(out_dir, "result.json")
    with open(path, "w") as fh:
        fh.write(dumps_result(payload))
    if oracle == "stabilizer":
        print(tm.diagnostics.get("gate") or "not a glossary gate")
    if "fidelity" in payload:
        print(f"fidelity vs {cfg.target}: {payload['fidelity']:.12f}")
    print(f"wrote {path}")
    tol = args.tol if args.tol is not None else cfg.run.get("tol")
    residual = tm.diagnostics.get("max_unitarity_residual")
    if tol is not None and residual is not None and residual > tol:
        print(f"tolerance failure: unitarity residual {residual:.3e} > {tol:.3e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _load_result(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read result {path}: {exc}") from None


def cmd_compare(args) -> int:
    try:
        a, b = _load_result(args.result_a), _load_result(args.result_b)
        if a.get("basis") != b.get("basis"):
            raise ConfigError(f"basis mismatch: {a.get('basis')} vs {b.get('basis')}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ta, tb = transition_from_dict(a).T, transition_from_dict(b).T
    raw = float(np.max(np.abs(ta - tb), initial=0.0))
    aligned = aligned_deviation(ta, tb)
    print(f"max |dT| = {raw:.6e}")
    print(f"max |dT| after global phase = {aligned:.6e}")
    fa, fb = a.get("fidelity"), b.get("fidelity")
    if fa is not None and fb is not None:
        print(f"fidelity delta = {fa - fb:.6e}")
    if args.tol is not None and aligned > args.tol:
        print(f"tolerance failure: {aligned:.3e} > {args.tol:.3e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mzmsim", description="Majorana braiding simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="schema and zero-mode check of a config")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    r = sub.add_parser("run", help="simulate a config and write result.json")
    r.add_argument("config")
    r.add_argument("--oracle", choices=ORACLES, default=None)
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--tol", type=float, default=None, help="unitarity residual limit")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("compare", help="entrywise diff of two result files")
    c.add_argument("result_a")
    c.add_argument("result_b")
    c.add_argument("--tol", type=float, default=None)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
