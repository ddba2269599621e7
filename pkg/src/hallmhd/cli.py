"""
Batch front-end: configuration parsing, experiment dispatch, binary
checkpoints, and plot-ready data emission.

Config files are flat `section.key = value` lines with `#` comments.
Outputs are deterministic for a fixed config: fixed seeds, serial
reductions, and fixed float formatting give byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import SolverFailure, SolverParams, State, cfl_report, run
from .experiments import (
    DiagnosticsCollector,
    blowup_monitor,
    budget_residuals,
    mollifier_convergence,
    smalldata_probe,
    stability_sweep,
)
from .fields import GridSpec, VectorField, random_bandlimited, single_mode, zero_field
from .calculus import derive
from .norms import seminorms

TWO_PI = 2.0 * math.pi

CSV_COLUMNS = [
    "t",
    "E",
    "D",
    "energy_residual_l0",
    "H1_u",
    "H2_u",
    "H1_b",
    "H2_b",
    "lap_b",
    "curl_lap_b",
    "div_lap_b",
    "blowup_running",
    "L_running",
]

INIT_KINDS = ("zero", "shear_u", "shear_b", "random", "random_u", "random_b")
MODES = ("run", "budget", "smalldata", "stability", "mollifier")


class ConfigError(ValueError):
    """Invalid, missing, or unknown configuration entry."""


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class RunConfig:
    grid_n: int
    grid_length: float
    grid_dealias: float
    mu: float
    gamma: float
    dt: float
    t_end: float
    scheme: str
    mollifier_level: Optional[int]
    hall_on: bool
    init_kind: str
    init_amplitude: float
    init_seed: int
    init_kmax: int
    mode: str
    deltas: tuple[float, ...]
    exp_seed: int
    levels: tuple[int, ...]
    exp_kmax: int
    out_dir: str
    sample_interval: int
    checkpoint_interval: int


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_number(key: str, raw: str, cast, constraint=None, describe=""):
    try:
        value = cast(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a {cast.__name__}, got {raw!r}") from None
    if constraint is not None and not constraint(value):
        raise ConfigError(f"{key} {describe}, got {raw}")
    return value


def _parse_list(key: str, raw: str, cast):
    try:
        return tuple(cast(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; unknown keys and bad values are errors."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key in entries:
            raise ConfigError(f"duplicate key {key}")
        entries[key] = raw

    known = {
        "grid.n", "grid.length", "grid.dealias",
        "params.mu", "params.gamma", "params.dt", "params.t_end",
        "params.scheme", "params.mollifier_level", "params.hall_on",
        "init.kind", "init.amplitude", "init.seed", "init.kmax",
        "experiment.mode", "experiment.deltas", "experiment.seed",
        "experiment.levels", "experiment.kmax",
        "output.dir", "output.sample_interval", "output.checkpoint_interval",
    }
    for key in entries:
        if key not in known:
            raise ConfigError(f"unknown key {key}")
    for key in ("grid.n", "params.mu", "params.gamma", "params.dt", "params.t_end"):
        if key not in entries:
            raise ConfigError(f"missing required key {key}")

    pos = lambda v: v > 0
    cfg = RunConfig(
        grid_n=_parse_number("grid.n", entries["grid.n"], int,
                             lambda v: v >= 8 and v % 2 == 0, "must be even and >= 8"),
        grid_length=_parse_number("grid.length", entries.get("grid.length", str(TWO_PI)),
                                  float, pos, "must be > 0"),
        grid_dealias=_parse_number("grid.dealias", entries.get("grid.dealias", str(2.0 / 3.0)),
                                   float, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        mu=_parse_number("params.mu", entries["params.mu"], float, pos, "must be > 0"),
        gamma=_parse_number("params.gamma", entries["params.gamma"], float, pos, "must be > 0"),
        dt=_parse_number("params.dt", entries["params.dt"], float, pos, "must be > 0"),
        t_end=_parse_number("params.t_end", entries["params.t_end"], float,
                            lambda v: v >= 0, "must be >= 0"),
        scheme=entries.get("params.scheme", "if_rk4"),
        mollifier_level=(
            _parse_number("params.mollifier_level", entries["params.mollifier_level"],
                          int, lambda v: v >= 1, "must be >= 1")
            if "params.mollifier_level" in entries else None
        ),
        hall_on=_parse_bool("params.hall_on", entries.get("params.hall_on", "true")),
        init_kind=entries.get("init.kind", "random"),
        init_amplitude=_parse_number("init.amplitude", entries.get("init.amplitude", "0.5"),
                                     float, lambda v: v >= 0, "must be >= 0"),
        init_seed=_parse_number("init.seed", entries.get("init.seed", "0"), int),
        init_kmax=_parse_number("init.kmax", entries.get("init.kmax", "4"), int,
                                pos, "must be > 0"),
        mode=entries.get("experiment.mode", "run"),
        deltas=_parse_list("experiment.deltas", entries.get("experiment.deltas",
                                                            "1e-2,1e-4,1e-6"), float),
        exp_seed=_parse_number("experiment.seed", entries.get("experiment.seed", "1"), int),
        levels=_parse_list("experiment.levels", entries.get("experiment.levels", "2,4,8"), int),
        exp_kmax=_parse_number("experiment.kmax", entries.get("experiment.kmax", "2"), int,
                               pos, "must be > 0"),
        out_dir=entries.get("output.dir", "out"),
        sample_interval=_parse_number("output.sample_interval",
                                      entries.get("output.sample_interval", "10"), int,
                                      pos, "must be > 0"),
        checkpoint_interval=_parse_number("output.checkpoint_interval",
                                          entries.get("output.checkpoint_interval", "0"), int,
                                          lambda v: v >= 0, "must be >= 0"),
    )
    if cfg.scheme not in ("if_rk4", "imex2"):
        raise ConfigError(f"params.scheme must be if_rk4 or imex2, got {cfg.scheme}")
    if cfg.init_kind not in INIT_KINDS:
        raise ConfigError(f"init.kind must be one of {INIT_KINDS}, got {cfg.init_kind}")
    if cfg.mode not in MODES:
        raise ConfigError(f"experiment.mode must be one of {MODES}, got {cfg.mode}")
    if cfg.checkpoint_interval and cfg.checkpoint_interval % cfg.sample_interval != 0:
        raise ConfigError(
            "output.checkpoint_interval must be a multiple of output.sample_interval"
        )
    return cfg


def _solver_params(cfg: RunConfig) -> SolverParams:
    return SolverParams(
        mu=cfg.mu, gamma=cfg.gamma, dt=cfg.dt, t_end=cfg.t_end,
        scheme=cfg.scheme, mollifier_level=cfg.mollifier_level, hall_on=cfg.hall_on,
    )


def initial_state(cfg: RunConfig, grid: GridSpec) -> State:
    kind = cfg.init_kind
    amp = cfg.init_amplitude
    if kind == "zero":
        u = b = zero_field(grid)
    elif kind == "shear_u":
        u = single_mode(grid, (0, 1, 0), direction=0, amplitude=amp)
        b = zero_field(grid)
    elif kind == "shear_b":
        u = zero_field(grid)
        b = single_mode(grid, (0, 1, 0), direction=0, amplitude=amp)
    else:
        u = random_bandlimited(grid, cfg.init_seed, cfg.init_kmax, amplitude=amp)
        bdir = derive(random_bandlimited(grid, cfg.init_seed + 1, cfg.init_kmax), "curl")
        norm = math.sqrt(grid.volume * float(np.sum(grid.k2 * np.abs(bdir.c) ** 2)))
        b = (amp / norm) * bdir if norm > 0 else zero_field(grid)
        if kind == "random_u":
            b = zero_field(grid)
        elif kind == "random_b":
            u = zero_field(grid)
    return State(u=u, b=b, t=0.0)


# ---------------------------------------------------------------------------
# Checkpoints

CHECKPOINT_MAGIC = b"HMHD"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIQ4d")


class CheckpointError(RuntimeError):
    pass


class CheckpointHeaderError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointSizeError(CheckpointError):
    pass


def write_checkpoint(state: State, path, mu: float, gamma: float) -> None:
    """Write the binary checkpoint (little-endian, bit-exact round trip)."""
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
                              grid.n, grid.length, state.t, mu, gamma))
        fh.write(np.ascontiguousarray(state.u.c, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.b.c, dtype="<c16").tobytes())


def read_checkpoint(path, dealias_fraction: float = 2.0 / 3.0):
    """Read a checkpoint; returns (state, mu, gamma)."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise CheckpointSizeError("file shorter than the header")
    magic, version, n, length, t, mu, gamma = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointHeaderError(f"bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"unsupported version {version}")
    expected = _HEADER.size + 2 * 3 * n**3 * 16
    if len(blob) != expected:
        raise CheckpointSizeError(f"expected {expected} bytes, found {len(blob)}")
    grid = GridSpec(n=int(n), length=length, dealias_fraction=dealias_fraction)
    data = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size)
    uc = data[: 3 * n**3].reshape(3, n, n, n).astype(complex)
    bc = data[3 * n**3 :].reshape(3, n, n, n).astype(complex)
    return State(u=VectorField(grid, uc), b=VectorField(grid, bc), t=t), mu, gamma


# ---------------------------------------------------------------------------
# Output files


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, records, r0_by_index) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for i, rec in enumerate(records):
        r0 = r0_by_index.get(i, math.nan)
        row = [
            rec.t, rec.E, rec.D, r0,
            rec.u_norms.h1, rec.u_norms.h2, rec.b_norms.h1, rec.b_norms.h2,
            rec.b_norms.lap_l2, rec.b_norms.curl_lap_l2, rec.b_norms.div_lap_l2,
            rec.blowup_running, rec.L_running,
        ]
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_plots(out: Path, records) -> None:
    curves = {
        "E": lambda r: r.E,
        "D": lambda r: r.D,
        "H2_u": lambda r: r.u_norms.h2,
        "H2_b": lambda r: r.b_norms.h2,
        "blowup_running": lambda r: r.blowup_running,
        "L_running": lambda r: r.L_running,
    }
    for name, get in curves.items():
        lines = [f"{_fmt(r.t)} {_fmt(get(r))}" for r in records]
        (out / f"plot_{name}.dat").write_text("\n".join(lines) + "\n")


def _write_summary(out: Path, pairs) -> None:
    lines = [f"{k} = {v}" for k, v in pairs]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Execution


def execute(cfg: RunConfig) -> int:
    """Run the selected experiment; returns the process exit status."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(n=cfg.grid_n, length=cfg.grid_length, dealias_fraction=cfg.grid_dealias)
    params = _solver_params(cfg)
    initial = initial_state(cfg, grid)
    summary: list[tuple[str, object]] = [("mode", cfg.mode)]

    if cfg.mode in ("run", "budget"):
        collector = DiagnosticsCollector(params, budget_levels=(0,))
        ckpt_stride = (
            cfg.checkpoint_interval // cfg.sample_interval if cfg.checkpoint_interval else 0
        )
        count = 0

        def observe(state: State):
            nonlocal count
            rec = collector(state)
            if ckpt_stride and count % ckpt_stride == 0:
                write_checkpoint(state, out / f"checkpoint_{count:06d}.bin",
                                 cfg.mu, cfg.gamma)
            count += 1
            return rec

        try:
            final, _ = run(initial, params, observer=observe,
                           sample_every=cfg.sample_interval)
        except SolverFailure as failure:
            _write_csv(out / "timeseries.csv", collector.records, {})
            summary += [("status", "solver_failure"), ("failure_time", _fmt(failure.t))]
            _write_summary(out, summary)
            return 2

        samples = collector.budget_samples[0]
        r0_by_index = {}
        if len(samples) >= 3:
            res = budget_residuals(samples)
            r0_by_index = {i + 1: res[i] for i in range(len(res))}
        _write_csv(out / "timeseries.csv", collector.records, r0_by_index)
        _write_plots(out, collector.records)
        write_checkpoint(final, out / "checkpoint_final.bin", cfg.mu, cfg.gamma)

        monitor = blowup_monitor(collector.records)
        cfl = cfl_report(initial, params)
        summary += [
            ("status", "ok"),
            ("t_final", _fmt(final.t)),
            ("E_final", _fmt(collector.records[-1].E)),
            ("blowup_integral", _fmt(monitor["integral_total"])),
            ("blowup_window_rate", _fmt(monitor["window_rate"])),
            ("blowup_classification", monitor["classification"]),
            ("max_div_u", _fmt(collector.max_div_u)),
            ("max_div_b_drift", _fmt(collector.max_div_b_drift)),
            ("cfl_advisory_bound", _fmt(cfl["advisory_bound"])),
            ("cfl_within_bound", cfl["within_bound"]),
        ]
        if cfg.mode == "budget" and len(samples) >= 5:
            res1 = budget_residuals(samples, stride=1)
            res2 = budget_residuals(samples, stride=2)
            summary += [
                ("budget_l0_max_residual", _fmt(float(np.max(res1)))),
                ("budget_l0_max_residual_2x", _fmt(float(np.max(res2)))),
            ]
        _write_summary(out, summary)
        return 0

    if cfg.mode == "smalldata":
        probe = smalldata_probe(grid, cfg.init_amplitude, params,
                                seed=cfg.init_seed, kmax=cfg.init_kmax,
                                sample_every=cfg.sample_interval)
        summary += [
            ("status", "ok" if probe["survived"] else "solver_failure"),
            ("initial_H2_sq", _fmt(probe["initial_H2_sq"])),
            ("max_over_time_H2", _fmt(probe["max_over_time_H2"])),
            ("bound_satisfied", probe["bound_satisfied"]),
        ]
        _write_summary(out, summary)
        return 0 if probe["survived"] else 2

    if cfg.mode == "stability":
        reports = stability_sweep(initial, params, cfg.deltas, seed=cfg.exp_seed,
                                  kmax=cfg.exp_kmax, sample_every=cfg.sample_interval)
        lines = ["delta,sup_distance,final_distance,L_total,survived"]
        for rep in reports:
            lines.append(",".join([
                _fmt(rep.delta), _fmt(rep.sup_distance), _fmt(rep.final_distance),
                _fmt(rep.L_total), str(rep.survived),
            ]))
        (out / "stability.csv").write_text("\n".join(lines) + "\n")
        ok = all(rep.survived for rep in reports)
        summary += [("status", "ok" if ok else "solver_failure"),
                    ("n_reports", len(reports))]
        for i, rep in enumerate(reports):
            summary.append((f"report_{i}",
                            f"delta={_fmt(rep.delta)} sup={_fmt(rep.sup_distance)} "
                            f"survived={rep.survived}"))
        _write_summary(out, summary)
        return 0 if ok else 2

    # mollifier
    rows = mollifier_convergence(initial, params, cfg.levels)
    lines = ["level,error"] + [f"{row.level},{_fmt(row.error)}" for row in rows]
    (out / "mollifier.csv").write_text("\n".join(lines) + "\n")
    summary += [("status", "ok")] + [(f"error_n{row.level}", _fmt(row.error)) for row in rows]
    _write_summary(out, summary)
    return 0


# ---------------------------------------------------------------------------
# Built-in verification


def verify(n: int = 32, seeds: int = 5, kmax: int = 4, quiet: bool = False) -> int:
    """Run the built-in identity/property suite; returns 0 or 3."""
    from .calculus import (
        cross, derive, hall_identity_residual, inner, l2_norm, leray_project,
    )
    from .experiments import cancellation_checks, cancellation_checks_pair
    from .norms import equivalence_residuals, seminorms as _sem

    grid = GridSpec(n=n)
    failures = 0

    def report(name: str, ok: bool) -> None:
        nonlocal failures
        if not ok:
            failures += 1
        if not quiet:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")

    for seed in range(seeds):
        a = random_bandlimited(grid, 10 * seed + 1, kmax)
        b = random_bandlimited(grid, 10 * seed + 2, kmax)
        u = random_bandlimited(grid, 10 * seed + 3, kmax, divergence_free=True)
        scale_ab = _sem(a).h3 * _sem(b).h1 + 1.0

        lap = derive(a, "laplacian")
        split = derive(a, "grad_div") - derive(a, "curl_curl")
        report(f"seed{seed} laplacian split", l2_norm(lap - split) <= 1e-12 * (_sem(a).h2 + 1))
        report(f"seed{seed} hall identity 1",
               hall_identity_residual(a, b, "first") <= 1e-10 * scale_ab)
        report(f"seed{seed} hall identity 2",
               hall_identity_residual(a, b, "second") <= 1e-10 * scale_ab)
        pa = leray_project(a)
        report(f"seed{seed} projection divergence",
               l2_norm(derive(pa, "div")) <= 1e-12 * (_sem(a).h1 + 1))
        report(f"seed{seed} projection idempotent",
               l2_norm(leray_project(pa) - pa) <= 1e-13 * (l2_norm(a) + 1))
        report(f"seed{seed} projection orthogonal",
               abs(inner(pa, a - pa)) <= 1e-12 * l2_norm(a) ** 2)
        eq = equivalence_residuals(a)
        report(f"seed{seed} seminorm split",
               eq.delta_split <= 1e-11 * (1 + _sem(a).h3**2))

        st = State(u=u, b=b, t=0.0)
        checks = cancellation_checks(st)
        scale = (_sem(u).h1 + _sem(b).h2 + 1.0) ** 3
        report(f"seed{seed} cancellations", max(checks.values()) <= 1e-10 * scale)
        other = State(u=u + random_bandlimited(grid, 10 * seed + 4, kmax, 0.3, True),
                      b=b + random_bandlimited(grid, 10 * seed + 5, kmax, 0.3), t=0.0)
        pair = cancellation_checks_pair(st, other)
        report(f"seed{seed} difference cancellations",
               max(pair.values()) <= 1e-10 * scale)
    return 0 if failures == 0 else 3


# ---------------------------------------------------------------------------
# Entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hallmhd",
        description="Pseudo-spectral periodic-box Hall-MHD solver and diagnostics harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("config", type=Path)
    sub.add_parser("verify", help="run the built-in identity/property suite")
    p_ins = sub.add_parser("inspect", help="print checkpoint header and norms")
    p_ins.add_argument("checkpoint", type=Path)
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            cfg = parse_config(args.config.read_text())
        except (OSError, ConfigError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        try:
            return execute(cfg)
        except SolverFailure as failure:
            print(f"solver failure at t={failure.t:.6g}", file=sys.stderr)
            return 2

    if args.command == "verify":
        return verify()

    # inspect
    try:
        state, mu, gamma = read_checkpoint(args.checkpoint)
    except (OSError, CheckpointError) as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 1
    un = seminorms(state.u)
    bn = seminorms(state.b)
    print(f"n = {state.grid.n}")
    print(f"length = {_fmt(state.grid.length)}")
    print(f"t = {_fmt(state.t)}")
    print(f"mu = {_fmt(mu)}")
    print(f"gamma = {_fmt(gamma)}")
    print(f"u: L2 = {_fmt(un.l2)}  H1 = {_fmt(un.h1)}  H2 = {_fmt(un.h2)}")
    print(f"b: L2 = {_fmt(bn.l2)}  H1 = {_fmt(bn.h1)}  H2 = {_fmt(bn.h2)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
