"""Command-line driver: ``simulate``, ``verify``, ``sweep`` and ``inspect``.

Configuration files are line oriented::

    # comment
    grid.n = 128            # or "64, 64" for a rectangle
    grid.length = 32
    model.lambda = 3        # a bare leaf name ("lambda = 3") works too
    stepper.dt = 0.5        # or "auto"
    run.t_end = 100
    ic.type = constant      # constant | cosine | tanh | file
    ic.mean = 0.0
    ic.noise = 1e-3
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import initial, io
from .grid_ops import Grid
from .model import ModelParams
from .regularize import regularize_initial
from .stepper import StepError, StepperConfig, default_dt, run

log = logging.getLogger("chdg")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _dt(text):
    return "auto" if text == "auto" else float(text)


# key -> (converter, default); a default of ``...`` marks a required key
KEYS = {
    "grid.n": (_ints, ...),
    "grid.length": (_floats, (1.0,)),
    "model.lambda": (float, 0.0),
    "model.epsilon": (float, 0.0),
    "model.delta": (float, 0.05),
    "model.p": (float, 1.0),
    "model.K_delta": (float, None),
    "stepper.scheme": (str, "convex_splitting"),
    "stepper.dt": (_dt, ...),
    "stepper.newton_tol": (float, 1e-10),
    "stepper.newton_max_iter": (int, 30),
    "stepper.clip_margin": (float, None),
    "run.t_end": (float, ...),
    "run.stride": (int, 1),
    "run.snapshot_stride": (int, 0),
    "run.seed": (int, 0),
    "run.output": (str, None),
    "ic.type": (str, ...),
    "ic.mean": (float, 0.0),
    "ic.mode": (_ints, (1,)),
    "ic.amplitude": (float, None),
    "ic.steepness": (float, 5.0),
    "ic.path": (str, None),
    "ic.noise": (float, 0.0),
    "ic.regularize": (_bool, True),
}
IC_TYPES = ("constant", "cosine", "tanh", "file")
# a bare leaf name ("lambda") stands for its dotted key when the leaf is unique
ALIASES = {k.rsplit(".", 1)[1]: k for k in KEYS}
assert len(ALIASES) == len(KEYS)


@dataclass
class RunConfig:
    grid: Grid
    params: ModelParams
    stepper: StepperConfig
    t_end: float
    ic: dict
    stride: int = 1
    snapshot_stride: int = 0
    seed: int = 0
    output: str | None = None
    raw: dict = field(default_factory=dict)

    def initial_field(self):
        ic, g = self.ic, self.grid
        kind = ic["type"]
        if kind == "constant":
            u = initial.constant(g, ic["mean"])
        elif kind == "cosine":
            amp = 0.1 if ic["amplitude"] is None else ic["amplitude"]
            u = initial.cosine(g, ic["mode"], amp, ic["mean"])
        elif kind == "tanh":
            amp = 0.999 if ic["amplitude"] is None else ic["amplitude"]
            u = initial.tanh_front(g, ic["steepness"], ic["mean"], amp)
        else:
            u, _, _ = io.read_snapshot(ic["path"])
            if u.shape != g.shape:
                raise ConfigError(f"snapshot shape {u.shape} does not match grid {g.shape}")
        u = u + initial.smooth_noise(g, ic["noise"], self.seed)
        u = np.clip(u, -1.0, 1.0)
        if ic["regularize"]:
            u = regularize_initial(g, u, self.params.delta)
        return u


def parse_config(text, strict=True, overrides=None):
    """Parse and validate a ``key = value`` configuration."""
    values, lines = {}, {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", num)
        key, val = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in KEYS:
            if strict:
                raise ConfigError(f"unknown key {key!r}", num)
            log.warning("ignoring unknown key %r on line %d", key, num)
            continue
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", num)
        try:
            values[key] = KEYS[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", num) from None
        lines[key] = num
    for key, val in (overrides or {}).items():
        key = ALIASES.get(key, key)
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = KEYS[key][0](str(val))
    for key, (_, default) in KEYS.items():
        if key not in values:
            if default is ...:
                raise ConfigError(f"missing required key {key!r}")
            values[key] = default

    def check(cond, key, message):
        if not cond:
            raise ConfigError(f"{key}: {message}", lines.get(key))

    def build(key, fn):
        try:
            return fn()
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lines.get(key)) from None

    n, length = values["grid.n"], values["grid.length"]
    if len(length) == 1 and len(n) == 2:
        length = length * 2
    grid = build("grid.n", lambda: Grid(n, length))
    check(values["model.lambda"] >= 0, "model.lambda", "must be >= 0")
    check(values["model.epsilon"] >= 0, "model.epsilon", "must be >= 0")
    check(0 < values["model.delta"] < 1 / 6, "model.delta", "must lie in (0, 1/6)")
    params = build("model.p", lambda: ModelParams(
        lam=values["model.lambda"], eps=values["model.epsilon"], delta=values["model.delta"],
        p=values["model.p"], K_delta=values["model.K_delta"],
    ))
    dt = values["stepper.dt"]
    dt = default_dt(grid) if dt == "auto" else dt
    stepper_cfg = build("stepper.dt", lambda: StepperConfig(
        dt=dt, scheme=values["stepper.scheme"], newton_tol=values["stepper.newton_tol"],
        newton_max_iter=values["stepper.newton_max_iter"], clip_margin=values["stepper.clip_margin"],
    ))
    if values["stepper.clip_margin"] is not None:
        build("stepper.clip_margin", lambda: stepper_cfg.margin(params.delta))
    check(values["run.t_end"] >= 0, "run.t_end", "must be >= 0")
    check(values["run.stride"] >= 1, "run.stride", "must be >= 1")
    check(values["run.snapshot_stride"] >= 0, "run.snapshot_stride", "must be >= 0")
    kind = values["ic.type"]
    check(kind in IC_TYPES, "ic.type", f"must be one of {', '.join(IC_TYPES)}")
    check(-1 < values["ic.mean"] < 1, "ic.mean", "mean must lie in (-1, 1)")
    check(values["ic.noise"] >= 0, "ic.noise", "must be >= 0")
    if kind == "file":
        path = values["ic.path"]
        check(path is not None and Path(path).is_file(), "ic.path", f"file not found: {path}")
    ic = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("ic.")}
    return RunConfig(
        grid=grid, params=params, stepper=stepper_cfg, t_end=values["run.t_end"], ic=ic,
        stride=values["run.stride"], snapshot_stride=values["run.snapshot_stride"],
        seed=values["run.seed"], output=values["run.output"], raw=values,
    )


def load_config(path, strict=True, overrides=None):
    return parse_config(Path(path).read_text(encoding="utf-8"), strict, overrides)


def _manifest_config(cfg):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(cfg.raw.items())}


def run_simulation(cfg, out):
    """Run one simulation into directory ``out``; return the exit status."""
    out = Path(out)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    failed = out / "FAILED"
    if failed.exists():
        failed.unlink()
    records, snaps = [], []
    count = [0]

    def observer(state):
        k = count[0]
        count[0] += 1
        if k == 0 or (cfg.snapshot_stride and k % cfg.snapshot_stride == 0):
            name = f"snapshots/snap_{k:06d}.chdg"
            io.write_snapshot(out / name, state.u, state.t, cfg.grid.length)
            snaps.append(name)
        last[0] = state

    last = [None]
    error = None
    try:
        u0 = cfg.initial_field()
        run(cfg.grid, u0, cfg.params, cfg.stepper, cfg.t_end,
            emit=records.append, stride=cfg.stride, observer=observer)
    except (StepError, ValueError) as exc:
        error = str(exc)
    if last[0] is not None and count[0] - 1 > 0 and snaps[-1] != f"snapshots/snap_{count[0] - 1:06d}.chdg":
        name = f"snapshots/snap_{count[0] - 1:06d}.chdg"
        io.write_snapshot(out / name, last[0].u, last[0].t, cfg.grid.length)
        snaps.append(name)
    io.write_diagnostics_csv(out / "diagnostics.csv", records)

    monitors = _monitors(records, cfg)
    passed = error is None and all(m["passed"] for m in monitors.values())
    manifest = {
        "format": "chdg-run",
        "version": 1,
        "status": "ok" if error is None else "failed",
        "error": error,
        "passed": passed,
        "config": _manifest_config(cfg),
        "monitors": monitors,
        "records": len(records),
        "files": ["diagnostics.csv"] + snaps,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if error is not None:
        failed.write_text(error + "\n")
    return 0 if passed else 1


def _monitors(records, cfg):
    if not records:
        return {}
    mass = np.array([r.mass for r in records])
    E = np.array([r.energy for r in records])
    gap = np.array([r.separation_gap for r in records])
    drift = float(np.max(np.abs(mass - mass[0])))
    mon = {
        "mass_drift": {"value": drift, "limit": 1e-11 * max(1, len(records)), "passed": False},
        "min_separation_gap": {"value": float(gap.min()), "limit": 0.0, "passed": bool(gap.min() > 0)},
    }
    mon["mass_drift"]["passed"] = drift <= mon["mass_drift"]["limit"]
    if cfg.stepper.scheme == "convex_splitting" and len(E) > 1:
        inc = float(np.max(np.diff(E) / (1 + np.abs(E[:-1]))))
        mon["energy_increase"] = {"value": inc, "limit": 1e-9, "passed": inc <= 1e-9}
    return mon


def _sweep_member(args):
    text, strict, overrides, out = args
    cfg = parse_config(text, strict, overrides)
    status = run_simulation(cfg, out)
    manifest = json.loads((Path(out) / "manifest.json").read_text())
    return status, manifest


def run_sweep(config_path, axis, values, out, strict=False, seed=None, workers=None):
    """One simulation per value of ``axis`` under ``out/<axis>=<value>/``, plus ``summary.csv``."""
    text = Path(config_path).read_text(encoding="utf-8")
    axis = ALIASES.get(axis, axis)
    if axis not in KEYS:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        overrides = {axis: v}
        if seed is not None:
            overrides["run.seed"] = seed
        # validate up front so a bad value fails before any work starts
        parse_config(text, strict, overrides)
        jobs.append((text, strict, overrides, str(out / f"{axis}={v}")))
    if workers == 1 or len(jobs) == 1:
        results = [_sweep_member(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_member, jobs))
    with open(out / "summary.csv", "w") as fh:
        fh.write("value,status,passed,records,min_separation_gap,mass_drift\n")
        for v, (status, man) in zip(values, results):
            mon = man["monitors"]
            gap = mon.get("min_separation_gap", {}).get("value", float("nan"))
            drift = mon.get("mass_drift", {}).get("value", float("nan"))
            fh.write(f"{v},{man['status']},{man['passed']},{man['records']},{gap!r},{drift!r}\n")
    return 0 if all(s == 0 for s, _ in results) else 1


def run_verification(suite, out=None):
    """Run one acceptance suite (or ``all``); print one line per report."""
    from .acceptance import SUITES

    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    reports = []
    for name in names:
        for rep in SUITES[name]():
            print(rep.line(), flush=True)
            reports.append((name, rep))
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [{"suite": n, **r.as_dict()} for n, r in reports]
        (out / f"verify_{suite}.json").write_text(json.dumps(payload, indent=2) + "\n")
    return 0 if all(r.passed for _, r in reports) else 1


def inspect_snapshot(path):
    u, t, length = io.read_snapshot(path)
    print(f"file:    {path}")
    print(f"shape:   {u.shape}")
    print(f"length:  {tuple(length)}")
    print(f"time:    {t!r}")
    print(f"mean:    {float(u.mean())!r}")
    print(f"min/max: {float(u.min())!r} {float(u.max())!r}")
    print(f"gap:     {float(1 - np.max(np.abs(u)))!r}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="chdg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory")
        p.add_argument("--strict", action="store_true", help="reject unknown config keys")
        p.add_argument("--seed", type=int, help="override run.seed")

    p = sub.add_parser("simulate", help="run one simulation")
    p.add_argument("config")
    common(p)
    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("suite")
    common(p)
    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int)
    common(p)
    p = sub.add_parser("inspect", help="summarise a snapshot file")
    p.add_argument("snapshot")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            overrides = {} if args.seed is None else {"run.seed": args.seed}
            cfg = load_config(args.config, args.strict, overrides)
            out = args.out or cfg.output or "out"
            status = run_simulation(cfg, out)
            print(f"wrote {out} (status {status})")
            return status
        if args.command == "verify":
            return run_verification(args.suite, args.out)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            return run_sweep(args.config, args.axis, values, args.out or "sweep",
                             strict=args.strict, seed=args.seed, workers=args.workers)
        return inspect_snapshot(args.snapshot)
    except (ConfigError, io.FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
