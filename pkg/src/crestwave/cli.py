"""Batch front-end: flat key=value configs, run orchestration, and
bit-stable CSV / JSON outputs.

Subcommands: simulate, verify, scale-check, pinch.
Exit codes: 0 ok, 2 config error, 3 verification failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import spectral
from .initialdata import (
    CrestSpec,
    InitialDataError,
    disc_crest_pinch,
    disc_smooth,
    disc_trivial,
    disc_rotation_reversal,
    line_wave,
)
from .model import ModelError, WaveState
from .scaling import ScalingError, ScalingParams, check_covariance
from .spectral import Field, Grid, SpectralError
from .stepper import STOP_COMPLETED, StepControl, evolve
from .verify import (
    energy_observer,
    monitor_apriori,
    pinch_experiment,
    rigidity_observer,
    run_identity_suite,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


KNOWN_KEYS = {
    "mode", "n_grid", "grid_offset", "dealias_fraction", "krasny_eps",
    "dt_init", "cfl", "dt_max", "dt_min", "t_final", "g",
    "init.kind", "init.c_re", "init.c_im", "init.R", "init.delta_re",
    "init.delta_im", "init.m", "init.vel", "init.eps", "init.a", "init.k",
    "init.vel_re", "init.vel_im", "init.nu", "init.taylor_terms",
    "init.scale", "init.path",
    "labels",
    "output.path", "output.every", "checkpoint.every",
    "suite.seeds", "suite.n", "suite.refine",
    "scale.transforms", "scale.time_check", "scale.t_final",
    "pinch.record_every",
    "debug.corrupt_hilbert",
}


def parse_config(path: str) -> dict:
    """Flat "key = value" lines; # starts a comment; unknown keys rejected."""
    cfg: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in cfg:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def _get(cfg, key, default=None, cast=str):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        if cast is bool:
            return cfg[key].lower() in ("1", "true", "yes")
        return cast(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {cfg[key]!r} ({exc})") from exc


def _parse_vel_modes(text: str) -> dict:
    # "m:re:im;m:re:im"
    modes = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        m, re_, im_ = part.split(":")
        modes[int(m)] = complex(float(re_), float(im_))
    return modes


def build_state(cfg: dict) -> WaveState:
    kind = _get(cfg, "init.kind")
    n = _get(cfg, "n_grid", 256, int)
    offset = _get(cfg, "grid_offset", 0.5, float)
    g = _get(cfg, "g", 0.0, float)
    labels = [float(x) for x in _get(cfg, "labels", "", str).split(",") if x.strip()]
    if kind == "trivial":
        c = complex(_get(cfg, "init.c_re", 0.0, float), _get(cfg, "init.c_im", 0.0, float))
        state = disc_trivial(c, n=n, offset=offset)
    elif kind == "smooth":
        state = disc_smooth(
            _get(cfg, "init.R", 1.0, float),
            complex(_get(cfg, "init.delta_re", 0.0, float),
                    _get(cfg, "init.delta_im", 0.0, float)),
            _get(cfg, "init.m", 2, int),
            _parse_vel_modes(_get(cfg, "init.vel", "", str)),
            n=n, offset=offset, labels=labels or None)
    elif kind == "rotation":
        state = disc_rotation_reversal(_get(cfg, "init.eps", 0.1, float),
                                       _get(cfg, "init.R", 1.0, float),
                                       n=n, offset=offset)
    elif kind == "line_wave":
        state = line_wave(g, _get(cfg, "init.a", 0.0, float),
                          _get(cfg, "init.k", 1, int),
                          complex(_get(cfg, "init.vel_re", 0.0, float),
                                  _get(cfg, "init.vel_im", 0.0, float)),
                          n=n, offset=_get(cfg, "grid_offset", 0.0, float),
                          labels=labels or None)
    elif kind == "crest_pinch":
        spec = CrestSpec(
            nu=_get(cfg, "init.nu", 0.3, float),
            eps=_get(cfg, "init.eps", 0.1, float),
            taylor_terms=_get(cfg, "init.taylor_terms", 200_000, int),
            scale=_get(cfg, "init.scale", 1.0, float))
        state = disc_crest_pinch(spec, n=n, offset=offset, extra_labels=labels or None)
    elif kind == "checkpoint":
        state, _ = load_checkpoint(_get(cfg, "init.path"))
    else:
        raise ConfigError(f"unknown init.kind {kind!r}")
    return state


def build_ctrl(cfg: dict) -> StepControl:
    return StepControl(
        dt_init=_get(cfg, "dt_init", 1e-2, float),
        cfl=_get(cfg, "cfl", 0.5, float),
        dt_max=_get(cfg, "dt_max", 0.1, float),
        dt_min=_get(cfg, "dt_min", 1e-9, float),
        t_final=_get(cfg, "t_final", 1.0, float),
        filter_eps=_get(cfg, "krasny_eps", 1e-13, float),
    )


# ----------------------------------------------------------------------
# Output formats
# ----------------------------------------------------------------------

CSV_COLUMNS = ["t", "dt", "E1", "E2", "E3", "Ea", "E", "Ecal",
               "blowup_B", "holo_residual"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, rows: list[dict], stop_reason: str,
              with_pinch: bool) -> None:
    cols = CSV_COLUMNS + (["d_pinch"] if with_pinch else []) + ["stop_reason"]
    lines = [",".join(cols)]
    for i, row in enumerate(rows):
        vals = [_fmt(row.get(c, float("nan"))) for c in cols[:-1]]
        vals.append(stop_reason if i == len(rows) - 1 else "")
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n")


def save_checkpoint(path: Path, state: WaveState, step: int) -> None:
    grid = state.grid
    payload = {
        "format": "crestwave-checkpoint-1",
        "mode": state.mode,
        "g": state.g,
        "t": state.t,
        "step": step,
        "n": grid.n,
        "offset": grid.offset,
        "cutoff": grid.cutoff,
        "cell_weight": state.cell_weight,
        "z_re": [float(v) for v in state.z.values.real],
        "z_im": [float(v) for v in state.z.values.imag],
        "ztbar_re": [float(v) for v in state.ztbar.values.real],
        "ztbar_im": [float(v) for v in state.ztbar.values.imag],
        "label_alphas": [float(v) for v in state.label_alphas],
        "label_pos": [float(v) for v in state.label_pos],
    }
    path.write_text(json.dumps(payload))


def load_checkpoint(path: str) -> tuple[WaveState, int]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != "crestwave-checkpoint-1":
        raise ConfigError(f"{path}: not a crestwave checkpoint")
    grid = Grid(int(data["n"]), float(data["offset"]), int(data["cutoff"]))
    z = Field(grid, np.array(data["z_re"]) + 1j * np.array(data["z_im"]))
    zt = Field(grid, np.array(data["ztbar_re"]) + 1j * np.array(data["ztbar_im"]))
    state = WaveState(t=float(data["t"]), mode=data["mode"], g=float(data["g"]),
                      z=z, ztbar=zt,
                      label_alphas=np.array(data["label_alphas"]),
                      label_pos=np.array(data["label_pos"]),
                      cell_weight=float(data["cell_weight"]))
    return state, int(data["step"])


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_simulate(cfg: dict, outdir: Path, quiet: bool) -> int:
    state = build_state(cfg)
    start_step = 0
    if _get(cfg, "init.kind") == "checkpoint":
        _, start_step = load_checkpoint(_get(cfg, "init.path"))
    ctrl = build_ctrl(cfg)
    every = _get(cfg, "output.every", 1, int)
    ck_every = _get(cfg, "checkpoint.every", 0, int)
    base = _get(cfg, "output.path", "run", str)
    with_pinch = state.label_pos.size >= 2

    observers = [energy_observer()]
    if with_pinch:
        observers.append(rigidity_observer(state))

    series = evolve(state, ctrl, observers=observers, record_every=every,
                    keep_states=ck_every > 0)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / f"{base}.csv", series.rows, series.stop_reason, with_pinch)
    if ck_every > 0:
        for st, row in zip(series.states, series.rows):
            if row["step"] % ck_every == 0:
                save_checkpoint(outdir / f"{base}_ck{row['step']:08d}.json", st, row["step"])
    save_checkpoint(outdir / f"{base}_final.json", series.final_state,
                    series.rows[-1]["step"] if series.rows else start_step)
    if not quiet:
        print(f"stop: {series.stop_reason} at t = {series.final_state.t:.6g} "
              f"({len(series.rows)} rows)")
    return EXIT_OK if series.stop_reason == STOP_COMPLETED else EXIT_NUMERICAL


def _suite_states(cfg: dict, seed_offset: int = 0):
    n = _get(cfg, "suite.n", 256, int)
    seeds = _get(cfg, "suite.seeds", 3, int)
    yield disc_rotation_reversal(0.1, n=n), "rotational-dilation"
    yield line_wave(1.0, 0.05, 2, 0.02, n=n), "line-wave"
    for seed in range(1, seeds + 1):
        rng = np.random.default_rng(seed + seed_offset)
        vel = {int(m): 0.05 * complex(rng.standard_normal(), rng.standard_normal())
               * 0.5 ** m for m in range(0, 6)}
        delta = 0.03 * complex(rng.standard_normal(), rng.standard_normal())
        yield disc_smooth(1.0, delta, 3, vel, n=n), f"random-{seed + seed_offset}"


def cmd_verify(cfg: dict, outdir: Path, quiet: bool, seed_offset: int = 0) -> int:
    if _get(cfg, "debug.corrupt_hilbert", False, bool):
        spectral._CORRUPT_HILBERT = True
    all_pass = True
    report = []
    try:
        try:
            states = list(_suite_states(cfg, seed_offset))
        except (InitialDataError, ModelError) as exc:
            print(f"suite state construction failed: {exc}", file=sys.stderr)
            return EXIT_VERIFY
        for state, desc in states:
            for r in run_identity_suite(state, desc):
                report.append(r)
                all_pass &= r.passed
                if not quiet:
                    mark = "PASS" if r.passed else "FAIL"
                    print(f"[{mark}] {desc:22s} {r.name:34s} rel={r.rel_gap:.3e} tol={r.tol:g}")
        if _get(cfg, "suite.refine", True, bool):
            ok, detail = refinement_check(_get(cfg, "suite.n", 256, int) // 4)
            all_pass &= ok
            if not quiet:
                print(f"[{'PASS' if ok else 'FAIL'}] spectral gap decay under refinement: {detail}")
    finally:
        spectral._CORRUPT_HILBERT = False
    outdir.mkdir(parents=True, exist_ok=True)
    payload = [{"name": r.name, "state": r.state_desc, "rel_gap": r.rel_gap,
                "max_abs_gap": r.max_abs_gap, "tol": r.tol, "passed": r.passed}
               for r in report]
    (outdir / "verify_report.json").write_text(json.dumps(payload, indent=1))
    return EXIT_OK if all_pass else EXIT_VERIFY


def refinement_check(n0: int = 64) -> tuple[bool, str]:
    """Identity gaps on an analytic (non-band-limited) state must drop by
    >= 8x per grid doubling, or already sit at the round-off floor."""
    from .verify import refinement_gap_decay

    gaps = refinement_gap_decay(n0)
    ok = gaps["ratio"] >= 8.0 or gaps[2 * n0] <= 1e-12
    return ok, (f"worst gap {gaps[n0]:.2e} (n={n0}) -> {gaps[2*n0]:.2e} "
                f"(n={2*n0}), ratio {gaps['ratio']:.1f}")


def cmd_scale_check(cfg: dict, quiet: bool) -> int:
    if _get(cfg, "mode", "line", str) != "line":
        print("scale-check: disc mode unsupported", file=sys.stderr)
        return EXIT_CONFIG
    state = build_state(cfg)
    transforms = _get(cfg, "scale.transforms", "2/1:0.5;2/1:1.0;1/2:0.0", str)
    worst = 0.0
    ok = True
    for part in filter(None, (p.strip() for p in transforms.split(";"))):
        lam, s = part.split(":")
        p, q = (int(x) for x in lam.split("/"))
        try:
            res = check_covariance(state, ScalingParams(p, q, float(s)))
        except ScalingError as exc:
            print(f"lossy transform {part}: {exc}", file=sys.stderr)
            return EXIT_VERIFY
        for name, (lhs, rhs, rel) in res.items():
            worst = max(worst, rel)
            if rel > 1e-5:
                ok = False
            if not quiet:
                print(f"lam={p}/{q} s={s}: {name:9s} lhs={lhs:.9e} rhs={rhs:.9e} rel={rel:.2e}")
    if not quiet:
        print(f"worst relgap {worst:.3e}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_pinch(cfg: dict, outdir: Path, quiet: bool) -> int:
    spec = CrestSpec(
        nu=_get(cfg, "init.nu", 0.3, float),
        eps=_get(cfg, "init.eps", 0.1, float),
        taylor_terms=_get(cfg, "init.taylor_terms", 200_000, int),
        scale=_get(cfg, "init.scale", 1.0, float))
    n = _get(cfg, "n_grid", 1024, int)
    record_every = _get(cfg, "pinch.record_every", 5, int)
    result = pinch_experiment(spec, n=n, record_every=record_every)
    outdir.mkdir(parents=True, exist_ok=True)
    base = _get(cfg, "output.path", "pinch", str)
    write_csv(outdir / f"{base}.csv", result["rows"], result["stop_reason"], True)
    summary = {k: v for k, v in result.items() if k != "rows"}
    (outdir / f"{base}_summary.json").write_text(json.dumps(summary, indent=1))
    if not quiet:
        print(f"pinch: d0={result['d0']:.6g} v={result['v']:.6g} "
              f"d/v={result['d_over_v']:.6g} t_stop={result['t_stop']:.6g} "
              f"stop={result['stop_reason']} line_dev={result['line_deviation']:.3%}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="crestwave",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["simulate", "verify", "scale-check", "pinch"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int, default=0, help="seed offset for randomized suite states")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out)
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, outdir, args.quiet)
        if args.command == "verify":
            return cmd_verify(cfg, outdir, args.quiet, args.seed)
        if args.command == "scale-check":
            return cmd_scale_check(cfg, args.quiet)
        return cmd_pinch(cfg, outdir, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InitialDataError, ScalingError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, SpectralError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
