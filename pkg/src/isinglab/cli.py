"""Command-line front end: config parsing, experiment orchestration, report
emission.

Exit codes: 0 success, 2 audit failure (a minimum slack below tolerance or a
failed check), 1 usage/configuration error.  Flags can come from a TOML/JSON
config file (``--config``); command-line values win, and ISINGLAB_-prefixed
environment variables override config-file defaults for the shared flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import Region, build_rect
from .model import BoundaryCondition, FieldSpec, InteractionSpec, ModelInstance, FREE, MINUS, PLUS
from .reports import emit_report

SLACK_TOL = -1e-10

SHARED_KEYS = {
    "seed": int,
    "out": str,
    "threads": int,
    "max_exact_sites": int,
}

COMMAND_KEYS = {
    "audit": {"suite": str, "box": str, "draws": int, "semi": bool},
    "exact": {"what": str, "width": int, "height": int, "J": float, "beta": float,
              "lam_max": float, "grid": int, "m": int, "n": int, "field": str,
              "delta": float},
    "sample": {"width": int, "height": int, "J": float, "beta": float, "lam": float,
               "sweeps": int, "burn_in": int, "thin": int, "bc": str, "init": str},
    "contour": {"census_half": int, "nested": bool, "c1_alpha": float, "d": int,
                "cutoff": int, "norm": str},
    "coarse": {"lemma": str, "rect": str, "ell": int, "d": int},
    "rfield": {"what": str, "width": int, "height": int, "eps": float, "beta": float,
               "samples": int, "k_max": int, "n_seeds": int},
}


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    p = Path(path)
    text = p.read_text()
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON config: {e}")
    else:
        try:
            import tomllib  # type: ignore
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"malformed TOML config: {e}")
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    return data


def validate_config(data: dict, command: str) -> dict:
    allowed = dict(SHARED_KEYS)
    allowed.update(COMMAND_KEYS[command])
    out = {}
    for key, value in data.items():
        if key == command and isinstance(value, dict):
            for k2, v2 in value.items():
                if k2 not in allowed:
                    raise ConfigError(f"unknown config key: {command}.{k2}")
                out[k2] = _coerce(f"{command}.{k2}", v2, allowed[k2])
            continue
        if key in COMMAND_KEYS and key != command:
            continue  # sections for other commands are allowed and ignored
        if key not in allowed:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = _coerce(key, value, allowed[key])
    return out


def _coerce(name, value, typ):
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"config key {name} must be a boolean")
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {name} must be {typ.__name__}")


def _env_overrides() -> dict:
    out = {}
    for key, typ in SHARED_KEYS.items():
        env = os.environ.get("ISINGLAB_" + key.upper())
        if env is not None:
            try:
                out[key] = typ(env)
            except ValueError:
                raise ConfigError(f"environment variable ISINGLAB_{key.upper()} must be {typ.__name__}")
    return out


def parse_box(spec: str):
    try:
        w, h = spec.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"box spec must look like 2x3, got {spec!r}")


def _merged(args: argparse.Namespace, command: str) -> dict:
    cfg = {}
    if args.config:
        cfg = validate_config(load_config(args.config), command)
    cfg.update(_env_overrides())
    for key in list(SHARED_KEYS) + list(COMMAND_KEYS[command]):
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            cfg[key] = cli_val
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", "out")
    cfg.setdefault("threads", 1)
    cfg.setdefault("max_exact_sites", 24)
    return cfg


def cmd_audit(cfg: dict) -> int:
    from .exact import semi_infinite_box
    from .inequalities import SUITES, run_suite

    names = cfg.get("suite", "all")
    names = sorted(SUITES) if names == "all" else names.split(",")
    w, h = parse_box(cfg.get("box", "2x2"))
    draws = cfg.get("draws", 200)
    if cfg.get("semi"):
        box = semi_infinite_box(w, h, 2, base=1)
    else:
        box = build_rect((0, 0), (w - 1, h - 1))
    reports = run_suite(names, box, draws, cfg["seed"])
    rows = [r.to_dict() for r in reports]
    emit_report(rows, "json", Path(cfg["out"]) / "audit.json", cfg)
    failed = False
    for r in reports:
        status = "ok" if r.passed(SLACK_TOL) else "FAIL"
        print(f"audit {r.name}: min_slack={r.min_slack:.3e} n={r.n_instances} {status}")
        failed |= not r.passed(SLACK_TOL)
    return 2 if failed else 0


def cmd_exact(cfg: dict) -> int:
    from .exact import interface_free_energy_finite, wall_free_energy_exact

    what = cfg.get("what", "wallfree")
    if what == "wallfree":
        grid = np.linspace(0.0, cfg.get("lam_max", 2.0), cfg.get("grid", 101))
        rep = wall_free_energy_exact(
            cfg.get("width", 2), cfg.get("height", 2), grid,
            J=cfg.get("J", 1.0), beta=cfg.get("beta", 1.0),
            field_kind=cfg.get("field", "wall"), delta=cfg.get("delta", 1.0),
            max_exact_sites=cfg["max_exact_sites"],
        )
        rows = [
            {"lam": l, "tau_w": t, "integrand": g, "integral": c}
            for l, t, g, c in zip(rep["lam_grid"], rep["tau"], rep["integrand"], rep["integral"])
        ]
        emit_report(rows, "csv", Path(cfg["out"]) / "wallfree.csv", cfg)
        print(f"exact wallfree: quadrature_residual={rep['quadrature_residual']:.3e}")
        return 0
    if what == "interface":
        tau = interface_free_energy_finite(
            cfg.get("J", 1.0), cfg.get("m", 1), cfg.get("n", 1),
            beta=cfg.get("beta", 1.0), max_exact_sites=cfg["max_exact_sites"],
        )
        emit_report({"tau_interface": tau}, "json", Path(cfg["out"]) / "interface.json", cfg)
        print(f"exact interface: tau={tau:.6f}")
        return 0
    raise ConfigError(f"unknown exact target {what!r}")


def cmd_sample(cfg: dict) -> int:
    from .exact import semi_infinite_box
    from .sampler import LayerProfile, McRun, layer_profile

    region = semi_infinite_box(cfg.get("width", 64), cfg.get("height", 32), 2, base=1)
    bc = {"plus": PLUS, "minus": MINUS, "free": FREE}[cfg.get("bc", "minus")]
    model = ModelInstance(
        region,
        InteractionSpec(J=cfg.get("J", 1.0)),
        FieldSpec(kind="wall", lam=cfg.get("lam", 1.0), wall_layer=1),
        bc,
        cfg.get("beta", 0.5),
        half_space_base=1,
    )
    run = McRun(model, sweeps=cfg.get("sweeps", 12000), burn_in=cfg.get("burn_in", 4000),
                seed=cfg["seed"], thin=cfg.get("thin", 4), init=cfg.get("init", "bc"))
    prof = layer_profile(run)
    emit_report(prof.rows(), "csv", Path(cfg["out"]) / "profile.csv", cfg)
    print(f"sample: wall layer m={prof.mean[0]:+.4f} se={prof.se[0]:.4f} wet={prof.wall_wet()}")
    return 0


def cmd_contour(cfg: dict) -> int:
    from .census import contour_census
    from .contour import c1_alpha

    if cfg.get("c1_alpha") is not None:
        rep = c1_alpha(cfg["c1_alpha"], cfg.get("d", 2), cfg.get("cutoff", 200),
                       cfg.get("norm", "l2"))
        emit_report(rep, "json", Path(cfg["out"]) / "c1.json", cfg)
        print(f"contour c1(alpha={cfg['c1_alpha']}): certified={rep['certified']} "
              f"lower={rep['c1_certified_lower']:.4f}")
        return 0
    half = cfg.get("census_half", 1)
    cen = contour_census(half=half, include_nested=cfg.get("nested", True))
    counts = cen.counts_by_faces()
    rows = [{"n_faces": k, "count": v} for k, v in counts.items()]
    emit_report(rows, "csv", Path(cfg["out"]) / "census.csv", cfg)
    print(f"contour census: box={2*half+1}x{2*half+1} contours={len(cen)} "
          f"interiors={cen.n_interiors()}")
    return 0


def cmd_coarse(cfg: dict) -> int:
    from .coarse import GeometryConstants, geometry_lemma1_audit, geometry_lemma2_audit

    lemma = cfg.get("lemma", "geo1")
    if lemma == "geo1":
        dims = tuple(int(s) for s in cfg.get("rect", "3x3").lower().split("x"))
        rep = geometry_lemma1_audit(dims)
        emit_report({k: v for k, v in rep.items()}, "json", Path(cfg["out"]) / "geo1.json", cfg)
        print(f"coarse geo1 rect={'x'.join(map(str, dims))}: c={rep['constant']:g} "
              f"checked={rep['checked']} min_slack={rep['min_slack']:g} "
              f"{'ok' if rep['passed'] else 'FAIL'}")
        return 0 if rep["passed"] else 2
    if lemma == "geo2":
        rep = geometry_lemma2_audit(cfg.get("ell", 1), cfg.get("d", 2))
        emit_report(rep, "json", Path(cfg["out"]) / "geo2.json", cfg)
        print(f"coarse geo2 ell={cfg.get('ell', 1)}: b={rep['b']:.4f} "
              f"min_slack={rep['min_slack']:g} {'ok' if rep['passed'] else 'FAIL'}")
        return 0 if rep["passed"] else 2
    raise ConfigError(f"unknown lemma {lemma!r}")


def cmd_rfield(cfg: dict) -> int:
    from .rfield import animal_field_region, delta_tail_audit, greedy_animal, sample_field

    what = cfg.get("what", "tails")
    if what == "tails":
        w, h = cfg.get("width", 3), cfg.get("height", 3)
        box = build_rect((0, 0), (w - 1, h - 1))
        a = Region.from_points([(0, 0), (1, 0), (0, 1), (1, 1)])
        a2 = Region.from_points([(1, 1), (1, 0), (2, 0), (2, 1)])
        rep = delta_tail_audit(box, a, a2, eps=cfg.get("eps", 0.5),
                               n_samples=cfg.get("samples", 10_000),
                               beta=cfg.get("beta", 1.0), seed=cfg["seed"])
        emit_report(rep, "json", Path(cfg["out"]) / "tails.json", cfg)
        print(f"rfield tails: passed={rep['passed']} ks_p={rep['ks_pvalue']:.4f}")
        return 0 if rep["passed"] else 2
    if what == "animal":
        k = cfg.get("k_max", 8)
        rows = []
        for s in range(cfg.get("n_seeds", 5)):
            sample = sample_field(animal_field_region(k, 2), "gaussian", 1.0,
                                  seed=cfg["seed"] + s)
            res = greedy_animal(sample, k)
            rows.append({"seed": cfg["seed"] + s, "best_ratio": res.best_ratio,
                         "best_size": len(res.best_set)})
        emit_report(rows, "csv", Path(cfg["out"]) / "animal.csv", cfg)
        print(f"rfield animal: {len(rows)} seeds, k_max={k}")
        return 0
    raise ConfigError(f"unknown rfield target {what!r}")


COMMANDS = {
    "audit": cmd_audit,
    "exact": cmd_exact,
    "sample": cmd_sample,
    "contour": cmd_contour,
    "coarse": cmd_coarse,
    "rfield": cmd_rfield,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isinglab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--max-exact-sites", dest="max_exact_sites", type=int, default=None)
        for key, typ in keys.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, type=typ, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merged(args, args.command)
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
