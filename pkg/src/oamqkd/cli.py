"""Command-line experiment runner.

Reads a flat JSON config and/or flags (flags win), runs one session with a
fixed seed, and writes machine-readable outputs: ``stats.json`` always, a
``transcript.csv`` round log on request, and ``mode_*.csv`` grid dumps of
any requested mode profile.  All randomness flows from the single config
seed; the only non-reproducible output is the explicitly labeled
``wall_clock`` field of the stats document.

Config keys (all optional, one-to-one with the flags):

    d                 4       logical dimension (power of 2)
    photons           1000    rounds per session
    seed              0       master PRNG seed (non-negative int)
    mubs              2       number of bases used by Alice and Bob
    oam               0       common OAM offset l of the encoding
    channel           []      element specs, applied in order (see below)
    eve               null    "random" or "fixed:IDX"; appended after channel
    test_fraction     0.1     sifted fraction sacrificed for error estimation
    threshold         0.11    abort when the QBER estimate exceeds this
    emission_rate     1e6     photons per second (sets emission timestamps)
    compensate_gouy   false   enable the receiver's Gouy phase shifters
    propagation_z     0.0     link distance the compensator is set for
    detuning_epsilon  0.0     per-path phase gradient in the B2 chain
    wavenumber        2*pi/1.55e-6   beam wavenumber k
    rayleigh_range    1.0     beam Rayleigh range z_R
    out               "."     output directory
    transcript        false   also write transcript.csv
    dump_modes        []      entries [family, n, m, z] for mode_*.csv dumps
    dump_samples      128     samples per axis for mode dumps

Channel element grammar (used in config lists and repeated --channel flags):

    rotation:PHI | random_rotation | time_rotation:OMEGA | gouy:Z |
    loss:P | freq_shift:OMEGA | eve:random | eve:fixed:IDX
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (
    ChannelSpec,
    Eve,
    EveStrategy,
    FrequencyShift,
    Gouy,
    Loss,
    RandomRotation,
    Rotation,
    TimeVaryingRotation,
)
from .devices import DeviceConfig
from .exceptions import ConfigInvalid, ParseError, ValidationError
from .modes import BeamGeometry, ModeFamily, ModeLabel, mode_field, reference_grid
from .protocol import SessionConfig, SessionStats, run_session
from .states import build_mub_family

__all__ = ["RunConfig", "parse_config", "run", "main"]

SCHEMA_VERSION = 1

_DEFAULTS: dict[str, object] = {
    "d": 4,
    "photons": 1000,
    "seed": 0,
    "mubs": 2,
    "oam": 0,
    "channel": [],
    "eve": None,
    "test_fraction": 0.1,
    "threshold": 0.11,
    "emission_rate": 1e6,
    "compensate_gouy": False,
    "propagation_z": 0.0,
    "detuning_epsilon": 0.0,
    "wavenumber": 2.0 * math.pi / 1.55e-6,
    "rayleigh_range": 1.0,
    "out": ".",
    "transcript": False,
    "dump_modes": [],
    "dump_samples": 128,
}


@dataclass
class RunConfig:
    """Fully-resolved run description: session parameters plus outputs."""

    d: int = 4
    photons: int = 1000
    seed: int = 0
    mubs: int = 2
    oam: int = 0
    channel: list[str] = field(default_factory=list)
    eve: str | None = None
    test_fraction: float = 0.1
    threshold: float = 0.11
    emission_rate: float = 1e6
    compensate_gouy: bool = False
    propagation_z: float = 0.0
    detuning_epsilon: float = 0.0
    wavenumber: float = 2.0 * math.pi / 1.55e-6
    rayleigh_range: float = 1.0
    out: str = "."
    transcript: bool = False
    dump_modes: list[tuple[ModeLabel, float]] = field(default_factory=list)
    dump_samples: int = 128

    def geometry(self) -> BeamGeometry:
        return BeamGeometry(wavenumber=self.wavenumber, rayleigh_range=self.rayleigh_range)

    def channel_specs(self) -> list[str]:
        """Channel element descriptors with the --eve shortcut appended."""
        specs = list(self.channel)
        if self.eve is not None:
            specs.append(f"eve:{self.eve}")
        return specs

    def serialize(self) -> dict:
        """Canonical JSON-compatible form; parse(serialize(.)) round-trips."""
        return {
            "d": self.d,
            "photons": self.photons,
            "seed": self.seed,
            "mubs": self.mubs,
            "oam": self.oam,
            "channel": self.channel_specs(),
            "eve": None,
            "test_fraction": self.test_fraction,
            "threshold": self.threshold,
            "emission_rate": self.emission_rate,
            "compensate_gouy": self.compensate_gouy,
            "propagation_z": self.propagation_z,
            "detuning_epsilon": self.detuning_epsilon,
            "wavenumber": self.wavenumber,
            "rayleigh_range": self.rayleigh_range,
            "out": self.out,
            "transcript": self.transcript,
            "dump_modes": [
                [label.family.value, label.n, label.m, z] for label, z in self.dump_modes
            ],
            "dump_samples": self.dump_samples,
        }

    def to_session_config(self) -> SessionConfig:
        geom = self.geometry()
        device = DeviceConfig(
            d=self.d,
            geom=geom,
            compensate_gouy=self.compensate_gouy,
            propagation_z=self.propagation_z,
            detuning_epsilon=self.detuning_epsilon,
        )
        elements = [
            _build_element(spec, self) for spec in self.channel_specs()
        ]
        return SessionConfig(
            d=self.d,
            photons=self.photons,
            seed=self.seed,
            num_mubs=self.mubs,
            oam_sector=self.oam,
            channel=ChannelSpec(tuple(elements)),
            test_fraction=self.test_fraction,
            qber_abort_threshold=self.threshold,
            emission_rate=self.emission_rate,
            device=device,
        )


def _build_element(spec: str, cfg: RunConfig):
    """Instantiate one channel element from its descriptor string."""
    name, _, arg = spec.partition(":")
    try:
        if name == "rotation":
            return Rotation(angle=float(arg))
        if name == "random_rotation":
            return RandomRotation()
        if name == "time_rotation":
            return TimeVaryingRotation(omega=float(arg))
        if name == "gouy":
            return Gouy(z=float(arg), geom=cfg.geometry())
        if name == "loss":
            return Loss(probability=float(arg))
        if name == "freq_shift":
            return FrequencyShift(omega=float(arg))
        if name == "eve":
            mub = build_mub_family(cfg.d, cfg.mubs)
            if arg == "random":
                return Eve(EveStrategy(mub=mub))
            mode, _, idx = arg.partition(":")
            if mode == "fixed":
                return Eve(EveStrategy(mub=mub, fixed_basis=int(idx)))
            raise ValueError(f"eve mode must be 'random' or 'fixed:IDX', got {arg!r}")
    except (TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"bad channel element {spec!r}: {exc}") from exc
    raise ValidationError(
        f"unknown channel element {name!r} in {spec!r}; expected one of "
        "rotation, random_rotation, time_rotation, gouy, loss, freq_shift, eve"
    )


def _parse_dump_entry(entry) -> tuple[ModeLabel, float]:
    if isinstance(entry, str):
        parts = entry.split(",")
        if len(parts) == 3:
            parts.append("0.0")
    else:
        parts = list(entry)
    if len(parts) != 4:
        raise ParseError(f"dump_modes entry {entry!r} must be [family, n, m, z]")
    family_name, n, m, z = parts
    try:
        family = ModeFamily(str(family_name).upper())
        label = ModeLabel(family, int(n), int(m))
        return label, float(z)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"dump_modes entry {entry!r}: {exc}") from exc


def _coerce(key: str, value):
    """Coerce a raw config value to the type of its documented default."""
    default = _DEFAULTS[key]
    try:
        if key == "eve":
            return None if value is None else str(value)
        if key == "channel":
            return [str(v) for v in value]
        if key == "dump_modes":
            return list(value)
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            raise ValueError(f"expected true/false, got {value!r}")
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"config field {key!r}: {exc}") from exc


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(data) - set(_DEFAULTS))
    if unknown:
        raise ParseError(f"{path}: unknown config fields: {', '.join(unknown)}")
    return data


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.d < 2 or (cfg.d & (cfg.d - 1)) != 0:
        raise ValidationError(
            f"d must be a power of 2 for the sorter-cascade device model, got {cfg.d}"
        )
    if cfg.photons < 1:
        raise ValidationError(f"photons must be >= 1, got {cfg.photons}")
    if cfg.seed < 0:
        raise ValidationError(f"seed must be non-negative, got {cfg.seed}")
    if not 2 <= cfg.mubs <= cfg.d + 1:
        raise ValidationError(f"mubs must be in 2..d+1 = 2..{cfg.d + 1}, got {cfg.mubs}")
    if cfg.oam < 0:
        raise ValidationError(f"oam must be >= 0, got {cfg.oam}")
    if not 0.0 < cfg.test_fraction < 1.0:
        raise ValidationError(
            f"test_fraction must lie strictly between 0 and 1, got {cfg.test_fraction}"
        )
    if not 0.0 <= cfg.threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0, 1], got {cfg.threshold}")
    if cfg.emission_rate <= 0:
        raise ValidationError(f"emission_rate must be > 0, got {cfg.emission_rate}")
    if cfg.wavenumber <= 0:
        raise ValidationError(f"wavenumber must be > 0, got {cfg.wavenumber}")
    if cfg.rayleigh_range <= 0:
        raise ValidationError(f"rayleigh_range must be > 0, got {cfg.rayleigh_range}")
    if cfg.detuning_epsilon < 0:
        raise ValidationError(f"detuning_epsilon must be >= 0, got {cfg.detuning_epsilon}")
    if cfg.dump_samples < 2:
        raise ValidationError(f"dump_samples must be >= 2, got {cfg.dump_samples}")
    if cfg.eve is not None:
        mode, _, idx = cfg.eve.partition(":")
        if mode not in ("random", "fixed") or (mode == "fixed" and not idx.isdigit()):
            raise ValidationError(f"eve must be 'random' or 'fixed:IDX', got {cfg.eve!r}")
    for spec in cfg.channel_specs():
        _build_element(spec, cfg)
    return cfg


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamqkd",
        description="Simulate one spatial-mode BB84 session and write stats/transcripts.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON config file; flags override it")
    parser.add_argument("--d", type=int, help="logical dimension (power of 2)")
    parser.add_argument("--photons", type=int, help="rounds per session")
    parser.add_argument("--seed", type=int, help="master PRNG seed")
    parser.add_argument("--mubs", type=int, help="number of bases (2..d+1)")
    parser.add_argument("--oam", type=int, help="OAM sector l of the encoding")
    parser.add_argument(
        "--channel",
        action="append",
        metavar="SPEC",
        help="channel element (repeatable), e.g. rotation:0.7 or loss:0.1",
    )
    parser.add_argument("--eve", metavar="MODE", help="eavesdropper: random or fixed:IDX")
    parser.add_argument("--test-fraction", type=float, dest="test_fraction")
    parser.add_argument("--threshold", type=float, help="QBER abort threshold")
    parser.add_argument("--emission-rate", type=float, dest="emission_rate")
    parser.add_argument(
        "--compensate-gouy", action=argparse.BooleanOptionalAction, dest="compensate_gouy"
    )
    parser.add_argument("--propagation-z", type=float, dest="propagation_z")
    parser.add_argument("--detuning-epsilon", type=float, dest="detuning_epsilon")
    parser.add_argument("--wavenumber", type=float)
    parser.add_argument("--rayleigh-range", type=float, dest="rayleigh_range")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--transcript", action=argparse.BooleanOptionalAction)
    parser.add_argument(
        "--dump-mode",
        action="append",
        dest="dump_modes",
        metavar="FAMILY,N,M",
        help="mode profile to dump as CSV (repeatable); pair with --z",
    )
    parser.add_argument(
        "--z",
        action="append",
        type=float,
        dest="dump_z",
        help="plane for the matching --dump-mode (default 0)",
    )
    parser.add_argument("--dump-samples", type=int, dest="dump_samples")
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Resolve flags and optional config file into a validated RunConfig."""
    args = _build_arg_parser().parse_args(argv)

    merged = dict(_DEFAULTS)
    if args.config:
        for key, value in _load_config_file(args.config).items():
            merged[key] = _coerce(key, value)
    for key in _DEFAULTS:
        if key == "dump_modes":
            continue
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            # repeated --channel flags replace the file's channel list entirely
            merged[key] = _coerce(key, flag_value)

    dump_entries = [_parse_dump_entry(e) for e in merged["dump_modes"]]
    if args.dump_modes:
        zs = args.dump_z or []
        flag_entries = []
        for idx, spec in enumerate(args.dump_modes):
            label, z = _parse_dump_entry(spec)
            if idx < len(zs):
                z = zs[idx]
            flag_entries.append((label, z))
        dump_entries = flag_entries

    cfg = RunConfig(
        **{k: v for k, v in merged.items() if k != "dump_modes"},
        dump_modes=dump_entries,
    )
    return _validate(cfg)


def _stats_payload(cfg: RunConfig, stats: SessionStats) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.serialize(),
        "results": {
            "sent": stats.sent,
            "delivered": stats.delivered,
            "sifted": stats.sifted_count,
            "sacrificed": stats.sacrificed_count,
            "qber_estimate": stats.qber_estimate,
            "low_statistics": stats.low_statistics,
            "aborted": stats.aborted,
            "key_bits": stats.key_bits,
            "key_symbols": stats.key_symbols,
            "eve_mutual_information_estimate": stats.eve_mutual_information_estimate,
        },
        "wall_clock": {
            "elapsed_seconds": stats.elapsed_seconds,
            "rounds_per_second": stats.rounds_per_second,
        },
    }


def _write_transcript(path: Path, records) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "round_id",
                "t",
                "alice_basis",
                "alice_symbol",
                "delivered",
                "bob_basis",
                "bob_outcome",
                "sifted",
                "sacrificed",
            ]
        )
        for r in records:
            writer.writerow(
                [
                    r.round_id,
                    repr(r.t),
                    r.alice_basis,
                    r.alice_symbol,
                    int(r.delivered),
                    r.bob_basis,
                    "" if r.bob_outcome is None else r.bob_outcome,
                    int(r.sifted),
                    int(r.sacrificed),
                ]
            )


def _write_mode_dump(path: Path, label: ModeLabel, z: float, cfg: RunConfig) -> None:
    geom = cfg.geometry()
    grid = reference_grid(geom, z, samples_per_axis=cfg.dump_samples)
    field_vals = mode_field(label, geom, grid, z)
    xx, yy = grid.mesh()
    rows = np.column_stack(
        [xx.ravel(), yy.ravel(), field_vals.real.ravel(), field_vals.imag.ravel()]
    )
    header = "x,y,re,im"
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=header, comments="")


def run(cfg: RunConfig) -> int:
    """Execute a run: session, stats.json, optional transcript and dumps.

    Returns the process exit status: 0 for a completed session (aborted
    sessions included), nonzero for config or IO failures.
    """
    out_dir = Path(cfg.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {out_dir}: {exc}", file=sys.stderr)
        return 1

    session_cfg = cfg.to_session_config()
    stats, records = run_session(session_cfg)

    try:
        stats_path = out_dir / "stats.json"
        stats_path.write_text(json.dumps(_stats_payload(cfg, stats), indent=2, sort_keys=True) + "\n")
        if cfg.transcript:
            _write_transcript(out_dir / "transcript.csv", records)
        for label, z in cfg.dump_modes:
            name = f"mode_{label.family.value}_{label.n}_{label.m}_z{z:g}.csv"
            _write_mode_dump(out_dir / name, label, z, cfg)
    except OSError as exc:
        print(f"failed writing outputs under {out_dir}: {exc}", file=sys.stderr)
        return 1

    print(
        f"sifted={stats.sifted_count} qber={stats.qber_estimate:.4f} "
        f"aborted={stats.aborted} key_bits={stats.key_bits:.1f} -> {stats_path}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
