"""Batch experiment runner.

One YAML config describes one experiment::

    lattice: sl2z
    vector: [1, 0]
    kind: fit
    params:
      R_grid: {start: 10, stop: 300, num: 40, spacing: log}
    seed: 0

Exit status: 0 on success, 1 on input or environment errors, 2 when a
numerical check requested by the experiment fails.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .geometry import PlaneVector
from .lattices import LatticeError, resolve_lattice
from .orbits import (
    CapExceededError, EnumerationError, EnumOptions, OrbitSet, PrimitiveOrbit, cache_key, enumerate_orbit,
    oracle_orbit, read_orbit, write_orbit,
)

KINDS = ("count", "fit", "sector", "star", "eisenstein", "residue", "selberg", "scattering", "lift",
         "wellround", "sandwich")
CSV_COLUMNS = ("lattice", "region", "R", "N", "c_fit", "residual", "exponent")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class CheckFailed(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    lattice: str
    vector: tuple
    kind: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    enumeration: dict = field(default_factory=dict)

    def digest(self) -> str:
        blob = {k: v for k, v in asdict(self).items() if k != "out"}
        text = json.dumps(blob, sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def enum_options(self) -> EnumOptions:
        try:
            return EnumOptions(**self.enumeration)
        except (TypeError, ValueError) as exc:
            raise ConfigError("enumeration", str(exc)) from None


# ---------------------------------------------------------------------------
# config parsing


def _number(value, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(path, f"expected a {'positive ' if positive else ''}finite number, got {value!r}")
    return value


def _grid(value, path: str) -> np.ndarray:
    """A list of radii or {start, stop, num, spacing: log|linear}."""
    if isinstance(value, dict):
        start = _number(value.get("start"), f"{path}.start", True)
        stop = _number(value.get("stop"), f"{path}.stop", True)
        num = value.get("num", 20)
        if not isinstance(num, int) or num < 1:
            raise ConfigError(f"{path}.num", f"expected a positive integer, got {num!r}")
        spacing = value.get("spacing", "log")
        if spacing not in ("log", "linear"):
            raise ConfigError(f"{path}.spacing", "expected 'log' or 'linear'")
        grid = np.geomspace(start, stop, num) if spacing == "log" else np.linspace(start, stop, num)
    elif isinstance(value, list) and value:
        grid = np.array([_number(x, f"{path}[{i}]", True) for i, x in enumerate(value)], dtype=float)
    else:
        raise ConfigError(path, "expected a non-empty list or a {start, stop, num} mapping")
    if len(grid) > 1 and np.any(np.diff(grid) <= 0):
        raise ConfigError(path, "radii must be strictly increasing")
    return grid


def parse_config(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = set(data) - {"lattice", "vector", "kind", "params", "out", "seed", "enumeration"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    lattice = data.get("lattice", "sl2z")
    if not isinstance(lattice, str):
        raise ConfigError("lattice", "expected a lattice id string")
    try:
        resolve_lattice(lattice)
    except LatticeError as exc:
        raise ConfigError("lattice", str(exc)) from None
    vec = data.get("vector", [1, 0])
    if not (isinstance(vec, list) and len(vec) == 2):
        raise ConfigError("vector", "expected [x, y]")
    for i, x in enumerate(vec):
        _number(x, f"vector[{i}]")
    if vec[0] == 0 and vec[1] == 0:
        raise ConfigError("vector", "base vector must be nonzero")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"expected one of {', '.join(KINDS)}, got {kind!r}")
    params = data.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params", "expected a mapping")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "expected an integer")
    enumeration = data.get("enumeration", {}) or {}
    if not isinstance(enumeration, dict):
        raise ConfigError("enumeration", "expected a mapping")
    cfg = ExperimentConfig(lattice.strip().lower(), tuple(vec), kind, params, data.get("out"), seed, enumeration)
    cfg.enum_options()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"YAML parse error: {exc}") from None
    return parse_config(data)


# ---------------------------------------------------------------------------
# orbit access with an on-disk cache


@dataclass
class RunContext:
    config: ExperimentConfig
    out_dir: Path
    cache_dir: Path | None
    workers: int

    @property
    def digest(self) -> str:
        return self.config.digest()

    def vector(self) -> PlaneVector:
        x, y = self.config.vector
        return PlaneVector(x, y)

    def orbit(self, R_cap: float) -> OrbitSet:
        cfg = self.config
        opts = cfg.enum_options()
        spec = resolve_lattice(cfg.lattice)
        v = self.vector()
        if self.cache_dir is None:
            orbit = enumerate_orbit(spec, v, R_cap, opts)
        else:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            path = self.cache_dir / f"{cache_key(cfg.lattice, v, R_cap, opts)}.orb"
            if path.exists():
                orbit = read_orbit(path)
                os.utime(path)  # recency for cache_gc
            else:
                orbit = enumerate_orbit(spec, v, R_cap, opts)
                write_orbit(path, orbit, opts.digest())
        orbit.require_stabilized()
        return orbit

    def is_primitive_sl2z(self) -> bool:
        return self.config.lattice in ("sl2z", "hecke:3") and tuple(self.config.vector) in ((1, 0), (0, 1))


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, digest: str, rows) -> Path:
    buf = io.StringIO()
    buf.write(f"# config_digest: {digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([row[0], row[1]] + [_fmt(v) for v in row[2:]])
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def write_json(path: Path, digest: str, payload: dict) -> Path:
    body = {"config_digest": digest, **_jsonable(payload)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _expect(ctx: RunContext, value: float, params: dict):
    """Optional `expect: {value, rtol}` check on the headline number."""
    spec = params.get("expect")
    if spec is None:
        return None
    target = _number(spec.get("value") if isinstance(spec, dict) else None, "params.expect.value")
    rtol = _number(spec.get("rtol", 0.01), "params.expect.rtol", True)
    rel = abs(value / target - 1.0) if target else abs(value)
    return {"target": target, "rtol": rtol, "relative_error": rel, "pass": rel <= rtol}


# ---------------------------------------------------------------------------
# experiment kinds


def _region(params: dict, default: str = "ball"):
    from .regions import RegionError, region_from_dict

    spec = params.get("region", {"type": default})
    if not isinstance(spec, dict):
        raise ConfigError("params.region", "expected a mapping")
    try:
        return region_from_dict(spec)
    except (KeyError, RegionError, TypeError, ValueError) as exc:
        raise ConfigError("params.region", f"invalid region: {exc}") from None


def _count_source(ctx: RunContext, R_cap: float):
    source = ctx.config.params.get("source", "bfs")
    if source == "oracle":
        if not ctx.is_primitive_sl2z():
            raise ConfigError("params.source", "the gcd oracle applies to sl2z with vector [1, 0] only")
        return oracle_orbit(R_cap)
    if source != "bfs":
        raise ConfigError("params.source", "expected 'bfs' or 'oracle'")
    return ctx.orbit(R_cap)


def run_count(ctx: RunContext, fit: bool = False) -> dict:
    from .regions import count_curve, fit_constant, fit_error_exponent

    params = ctx.config.params
    grid = _grid(params.get("R_grid"), "params.R_grid")
    region = _region(params)
    orbit = _count_source(ctx, float(grid[-1]) * region.outer_radius())
    curve = count_curve(orbit, region, grid)
    name = params.get("region", {}).get("type", "ball")
    report = {"R": curve.R, "N": curve.N}
    c = resid = expo = None
    if fit:
        res = fit_constant(curve)
        c, resid = res.constant, res.residual
        if len(curve) >= 10:
            expo = fit_error_exponent(curve, c).exponent
        report.update(constant=c, residual=resid, exponent=expo, R_range=res.R_range)
    rows = [(ctx.config.lattice, name, R, N, c, resid, expo) for R, N in zip(curve.R, curve.N)]
    stem = "fit" if fit else "counts"
    write_csv(ctx.out_dir / f"{stem}.csv", ctx.digest, rows)
    if fit:
        report["check"] = _expect(ctx, c, params)
        write_json(ctx.out_dir / "fit.json", ctx.digest, report)
    return report


def run_sector(ctx: RunContext) -> dict:
    from .regions import Sector, count_in_region, sector_profile

    params = ctx.config.params
    R = _number(params.get("R"), "params.R", True)
    start = _number(params.get("start", 0.0), "params.start")
    length = _number(params.get("length", math.pi / 3), "params.length", True)
    bins = params.get("bins", 6)
    orbit = _count_source(ctx, R)
    sector = count_in_region(orbit, Sector(start, length), R)
    ball = orbit.count(R)
    report = {"R": R, "start": start, "length": length, "sector_count": sector, "ball_count": ball,
              "ratio": sector / ball, "expected_ratio": length / (2 * math.pi),
              "profile": sector_profile(orbit, bins, R)}
    report["check"] = _expect(ctx, report["ratio"], params)
    rows = [(ctx.config.lattice, "sector", R, sector, None, None, None),
            (ctx.config.lattice, "ball", R, ball, None, None, None)]
    write_csv(ctx.out_dir / "sector.csv", ctx.digest, rows)
    write_json(ctx.out_dir / "sector.json", ctx.digest, report)
    return report


def run_star(ctx: RunContext) -> dict:
    from .regions import Ball, StarShape, cosine_profile, count_curve, fit_constant

    params = ctx.config.params
    grid = _grid(params.get("R_grid"), "params.R_grid")
    amp = _number(params.get("amplitude", 0.3), "params.amplitude")
    freq = params.get("frequency", 2)
    if not (0 <= abs(amp) < 1):
        raise ConfigError("params.amplitude", "need |amplitude| < 1 for a positive profile")
    star = StarShape(cosine_profile(amp, int(freq)))
    orbit = _count_source(ctx, float(grid[-1]) * star.outer_radius())
    cs, cb = count_curve(orbit, star, grid), count_curve(orbit, Ball(), grid)
    fs, fb = fit_constant(cs), fit_constant(cb)
    report = {"star_constant": fs.constant, "ball_constant": fb.constant, "ratio": fs.constant / fb.constant,
              "expected_ratio": star.area() / math.pi}
    report["check"] = _expect(ctx, report["ratio"], params)
    rows = [(ctx.config.lattice, "star", R, N, fs.constant, fs.residual, None) for R, N in zip(cs.R, cs.N)]
    rows += [(ctx.config.lattice, "ball", R, N, fb.constant, fb.residual, None) for R, N in zip(cb.R, cb.N)]
    write_csv(ctx.out_dir / "star.csv", ctx.digest, rows)
    write_json(ctx.out_dir / "star.json", ctx.digest, report)
    return report


def _s_values(value, path: str):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [complex(value)]
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a number or a list of numbers / [re, im] pairs")
    out = []
    for i, s in enumerate(value):
        if isinstance(s, list) and len(s) == 2:
            out.append(complex(_number(s[0], f"{path}[{i}][0]"), _number(s[1], f"{path}[{i}][1]")))
        else:
            out.append(complex(_number(s, f"{path}[{i}]")))
    return out


def run_eisenstein(ctx: RunContext) -> dict:
    from .eisenstein import DivergenceError, eisenstein_sum, twisted_eisenstein_sum

    params = ctx.config.params
    cap = _number(params.get("cap"), "params.cap", True)
    svals = _s_values(params.get("s", 2.0), "params.s")
    n = params.get("n", 0)
    if not isinstance(n, int):
        raise ConfigError("params.n", "expected an integer twist")
    orbit = _count_source(ctx, cap)
    rows = []
    for i, s in enumerate(svals):
        try:
            val = eisenstein_sum(orbit, s) if n == 0 else twisted_eisenstein_sum(orbit, s, n)
        except DivergenceError as exc:
            raise ConfigError(f"params.s[{i}]", str(exc)) from None
        rows.append({"s": s, "value": val.value, "tail_bound": val.tail_bound, "cutoff_radius": val.cutoff_radius})
    report = {"n": n, "values": rows}
    write_json(ctx.out_dir / "eisenstein.json", ctx.digest, report)
    return report


def run_residue(ctx: RunContext) -> dict:
    from .eisenstein import TailBoundError, residue_extrapolate

    params = ctx.config.params
    cap = _number(params.get("cap"), "params.cap", True)
    schedule = params.get("schedule", [1.5, 1.4, 1.3, 1.25])
    if not isinstance(schedule, list) or not schedule:
        raise ConfigError("params.schedule", "expected a list of sigma values")
    sched = [_number(s, f"params.schedule[{i}]") for i, s in enumerate(schedule)]
    if ctx.is_primitive_sl2z() and params.get("source", "oracle") == "oracle":
        orbit = PrimitiveOrbit(cap, workers=ctx.workers)
    else:
        orbit = ctx.orbit(cap)
    try:
        est = residue_extrapolate(orbit, sched)
    except TailBoundError as exc:
        raise ConfigError("params.cap", str(exc)) from None
    except ValueError as exc:
        raise ConfigError("params.schedule", str(exc)) from None
    report = {"value": est.value, "degree": est.degree, "error_estimate": est.error_estimate,
              "sigma": est.sigma, "products": est.products, "tail_bounds": est.tail_bounds,
              "candidates": est.candidates}
    report["check"] = _expect(ctx, est.value, params)
    write_json(ctx.out_dir / "residue.json", ctx.digest, report)
    return report


def run_selberg(ctx: RunContext) -> dict:
    from .selberg import selberg_suite

    params = ctx.config.params
    start = _number(params.get("start", 0.0), "params.start")
    length = _number(params.get("length", math.pi / 3), "params.length", True)
    degrees = params.get("degrees", [8, 16, 32, 64])
    if not isinstance(degrees, list) or not all(isinstance(d, int) and d >= 1 for d in degrees):
        raise ConfigError("params.degrees", "expected a list of positive integers")
    rep = selberg_suite(start, length, tuple(degrees), int(params.get("grid_points", 10_000)))
    rep["pass"] = rep["properties_ok"] and rep["stable"]
    write_json(ctx.out_dir / "selberg.json", ctx.digest, rep)
    return rep


def run_scattering(ctx: RunContext) -> dict:
    from .eisenstein import double_coset_multiplicities, scattering_entry_truncated, totient_multiplicities

    params = ctx.config.params
    s = _number(params.get("s", 1.25), "params.s")
    if s <= 1:
        raise ConfigError("params.s", "need s > 1 for convergence")
    C_max = _number(params.get("C_max", 1000), "params.C_max", True)
    mode = params.get("multiplicities", "enumerate")
    spec = resolve_lattice(ctx.config.lattice)
    if mode == "totient":
        if ctx.config.lattice not in ("sl2z", "hecke:3"):
            raise ConfigError("params.multiplicities", "totient multiplicities apply to sl2z only")
        mult = totient_multiplicities(int(C_max))
    elif mode == "enumerate":
        c, m, stabilized = double_coset_multiplicities(spec, C_max, ctx.config.enum_options())
        if not stabilized:
            raise EnumerationError("bottom-row enumeration did not stabilize")
        mult = (c, m)
    else:
        raise ConfigError("params.multiplicities", "expected 'enumerate' or 'totient'")
    value = scattering_entry_truncated(spec, s, C_max, mult)
    report = {"s": s, "C_max": C_max, "value": value, "multiplicities": mode}
    report["check"] = _expect(ctx, value.real, params)
    write_json(ctx.out_dir / "scattering.json", ctx.digest, report)
    return report


def _domain(spec, path: str):
    from . import lift

    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a domain name or mapping")
    kind = spec.get("type")
    if kind == "quarter_disk":
        return lift.quarter_disk()
    if kind == "half_disk":
        return lift.half_disk()
    if kind == "jump_star":
        return lift.jump_star(_number(spec.get("jump", 1.1), f"{path}.jump", True))
    if kind == "lipschitz_star":
        return lift.lipschitz_star(_number(spec.get("slope", 1.0), f"{path}.slope", True))
    raise ConfigError(f"{path}.type", "expected quarter_disk, half_disk, jump_star or lipschitz_star")


def run_lift(ctx: RunContext) -> dict:
    from .lift import LiftError, verify_lift_bijection

    params = ctx.config.params
    domains = params.get("domains", ["quarter_disk"])
    if not isinstance(domains, list) or not domains:
        raise ConfigError("params.domains", "expected a non-empty list")
    T_values = _grid(params.get("T", [5, 10]), "params.T")
    spec = resolve_lattice(ctx.config.lattice)
    rows = []
    for i, d in enumerate(domains):
        D = _domain(d, f"params.domains[{i}]")
        for T in T_values:
            try:
                rows.append(verify_lift_bijection(spec, ctx.vector(), D, float(T), opts=ctx.config.enum_options()))
            except LiftError as exc:
                raise ConfigError(f"params.domains[{i}]", str(exc)) from None
    report = {"cases": rows, "pass": all(r["pass"] for r in rows)}
    write_json(ctx.out_dir / "lift.json", ctx.digest, report)
    return report


def run_wellround(ctx: RunContext) -> dict:
    from .lift import LiftError, wellroundedness_fit

    params = ctx.config.params
    D = _domain(params.get("domain", {"type": "lipschitz_star", "slope": 1.0}), "params.domain")
    T = _number(params.get("T", 10.0), "params.T", True)
    etas = params.get("etas", [0.02, 0.01, 0.005, 0.0025])
    if not isinstance(etas, list) or len(etas) < 2:
        raise ConfigError("params.etas", "expected at least two eta values")
    etas = [_number(e, f"params.etas[{i}]", True) for i, e in enumerate(etas)]
    try:
        rep = wellroundedness_fit(D, T, etas)
    except LiftError as exc:
        raise ConfigError("params.etas", str(exc)) from None
    ratios = [etas[i + 1] / etas[i] for i in range(len(etas) - 1)]
    rep["pass"] = bool(np.isfinite(rep["fitted_c"])) and all(
        abs(h / r - 1.0) <= 0.2 for h, r in zip(rep["halving_ratios"], ratios))
    write_json(ctx.out_dir / "wellround.json", ctx.digest, rep)
    return rep


def run_sandwich(ctx: RunContext) -> dict:
    from .regions import sandwich_check

    params = ctx.config.params
    radii = _grid(params.get("R", [50, 100, 200]), "params.R")
    U_values = _grid(params.get("U", [4, 8, 16]), "params.U")
    if np.any(U_values <= 2):
        raise ConfigError("params.U", "cutoff parameters must exceed 2")
    orbit = _count_source(ctx, float(radii[-1]) * (1 + 1 / float(U_values[0])))
    rows = [sandwich_check(orbit, float(U), float(R)) for R in radii for U in U_values]
    report = {"cases": rows, "pass": all(r["pass"] for r in rows)}
    write_json(ctx.out_dir / "sandwich.json", ctx.digest, report)
    return report


RUNNERS = {
    "count": run_count, "fit": lambda ctx: run_count(ctx, fit=True), "sector": run_sector, "star": run_star,
    "eisenstein": run_eisenstein, "residue": run_residue, "selberg": run_selberg,
    "scattering": run_scattering, "lift": run_lift, "wellround": run_wellround, "sandwich": run_sandwich,
}


def _check_passed(report: dict) -> bool:
    if "pass" in report and not report["pass"]:
        return False
    check = report.get("check")
    return check is None or bool(check["pass"])


def run(config: ExperimentConfig, out_dir, cache_dir=None, workers: int | None = None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config, out_dir, Path(cache_dir) if cache_dir else None, workers or os.cpu_count() or 1)
    report = RUNNERS[config.kind](ctx)
    if not _check_passed(report):
        raise CheckFailed(f"{config.kind}: numerical check failed")
    return report


# ---------------------------------------------------------------------------
# cache maintenance


def cache_gc(directory, max_bytes: int) -> dict:
    """Remove least-recently-used ORB1 caches until the total fits max_bytes."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"cache directory {directory} does not exist")
    files = sorted((p for p in directory.glob("*.orb") if p.is_file()),
                   key=lambda p: (p.stat().st_mtime_ns, p.name))
    total = sum(p.stat().st_size for p in files)
    removed = []
    for p in files:
        if total <= max_bytes:
            break
        size = p.stat().st_size
        p.unlink()
        total -= size
        removed.append({"file": p.name, "bytes": size})
    return {"directory": str(directory), "max_bytes": max_bytes, "removed": removed,
            "remaining_bytes": total, "remaining_files": len(files) - len(removed)}


# ---------------------------------------------------------------------------
# entry point


def _error(kind: str, message: str, path: str | None, out_dir: Path | None) -> dict:
    payload = {"error": kind, "message": message, "field": path}
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return payload


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orbitcount", description="Planar lattice orbit counting experiments.")
    ap.add_argument("--config", help="YAML experiment config")
    ap.add_argument("--workers", type=int, default=None, help="worker pool size (default: all cores)")
    ap.add_argument("--cache-dir", help="directory for ORB1 orbit caches")
    ap.add_argument("--out", help="output directory (overrides the config's out field)")
    ap.add_argument("--verify", action="store_true", help="run the built-in acceptance suite")
    ap.add_argument("--only", type=int, action="append", help="with --verify: run only this criterion")
    ap.add_argument("--cache-gc", metavar="BYTES", type=int, help="trim --cache-dir to this many bytes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers is not None and args.workers < 1:
        _error("ConfigError", "--workers must be positive", "--workers", None)
        return 1
    if args.verify:
        from .acceptance import run_acceptance

        results = run_acceptance(args.only, echo=print)
        if args.out:
            from .acceptance import format_result

            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "acceptance.json", "acceptance", {"lines": [format_result(r) for r in results],
                                                               "passed": [r.passed and r.within_time for r in results]})
        return 0 if all(r.passed and r.within_time for r in results) else 2
    if args.cache_gc is not None:
        if not args.cache_dir:
            _error("ConfigError", "--cache-gc needs --cache-dir", "--cache-dir", None)
            return 1
        try:
            print(json.dumps(cache_gc(args.cache_dir, args.cache_gc), indent=2))
        except OSError as exc:
            _error(type(exc).__name__, str(exc), "--cache-dir", None)
            return 1
        return 0
    if not args.config:
        _error("ConfigError", "one of --config, --verify or --cache-gc is required", "--config", None)
        return 1
    out_dir = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        out_dir = out_dir or Path(cfg.out or "out")
        run(cfg, out_dir, args.cache_dir, args.workers)
    except ConfigError as exc:
        _error("ConfigError", exc.message, exc.path, out_dir)
        return 1
    except CheckFailed as exc:
        _error("CheckFailed", str(exc), None, out_dir)
        return 2
    except (LatticeError, CapExceededError, EnumerationError, OSError) as exc:
        _error(type(exc).__name__, str(exc), None, out_dir)
        return 1
    except ValueError as exc:
        _error(type(exc).__name__, str(exc), None, out_dir)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
