"""Command line entry point.

Every subcommand resolves its configuration as defaults < config file < flags,
rejects unknown keys, writes ``result.json`` (a pure function of the config)
plus any tables into ``--out``, and records timestamps and host details only in
``manifest.json``. Exit status: 0 ok, 1 certificate failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import DEFAULT_QUAD_ORDER, expand
from .energy import affine_energy
from .fixed_point import (
    AffineGauge,
    GaugeBallSpec,
    NormGauge,
    W1pGauge,
    find_zero,
    identity_field,
    linear_field,
    random_coercive_field,
)
from .galerkin import (
    ProblemSpec,
    RadiusResult,
    Source,
    coercivity_check,
    convergence_study,
    estimate_constants,
    estimate_mu_sweep,
    existence_radius,
    galerkin_field,
    m_sweep,
)
from .geometry import gauge_equivalence, make_context, search_nonconvexity, search_triangle_violation
from .reports import atomic_write, csv_text, svg_line_plot, to_json
from .sphere import DEFAULT_SPHERE_POINTS

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CERT, EXIT_USAGE = 0, 1, 2

REQUIRED = object()


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _rho(text):
    return "auto" if str(text) == "auto" else float(text)


_DISCRETE = {
    "quad_order": (int, DEFAULT_QUAD_ORDER, "Gauss-Legendre points per axis"),
    "sphere_points": (int, DEFAULT_SPHERE_POINTS, "nodes of the circle rule"),
    "eps_zero": (float, 1e-12, "zero-function guard"),
}

SCHEMAS = {
    "energy": {
        "p": (float, REQUIRED, "exponent p > 1"),
        "m": (int, REQUIRED, "Galerkin dimension"),
        "zeta": (_floats, None, "coefficients, comma separated (default: first basis function)"),
        **_DISCRETE,
    },
    "geometry": {
        "p": (float, REQUIRED, "exponent p > 1"),
        "m": (int, REQUIRED, "Galerkin dimension"),
        "seed": (int, 0, "search seed"),
        "budget": (int, 10_000, "ratio evaluations per search"),
        "search": (str, "both", "triangle | nonconvexity | both"),
        "samples": (int, 200, "samples for the gauge equivalence audit"),
        **_DISCRETE,
    },
    "fixedpoint": {
        "field": (str, REQUIRED, "identity | linear | galerkin | random-coercive"),
        "m": (int, REQUIRED, "dimension"),
        "gauge": (str, "euclidean", "euclidean | max | l1 | w1p | affine"),
        "rho": (_rho, 1.0, "ball radius, or auto (galerkin only)"),
        "tol": (float, 1e-8, "sup-norm residual tolerance"),
        "seed": (int, 0, "seed for field generation and starts"),
        "p": (float, 2.0, "exponent for affine/w1p gauges and galerkin"),
        "alpha": (float, 1.5, "galerkin sublinear exponent"),
        "f": (Source.parse, Source(), "galerkin source, e.g. constant:1"),
        "excluded": (_floats, None, "puncture point y0"),
        **_DISCRETE,
    },
    "constants": {
        "p": (float, REQUIRED, "exponent p > 1"),
        "m_list": (_ints, REQUIRED, "Galerkin dimensions"),
        "q_list": (_floats, None, "exponents q (default: p)"),
        "samples": (int, 1000, "random samples per m for ratio extrema"),
        "seed": (int, 0, "seed"),
        **_DISCRETE,
    },
    "solve": {
        "p": (float, REQUIRED, "exponent p > 1"),
        "alpha": (float, REQUIRED, "exponent 1 < alpha < p"),
        "f": (Source.parse, REQUIRED, "source, e.g. constant:1 or sine:1,1,2.0"),
        "m": (int, None, "Galerkin dimension"),
        "m_list": (_ints, None, "sweep of Galerkin dimensions (overrides m)"),
        "seed": (int, 0, "seed"),
        "tol": (float, 1e-8, "sup-norm residual tolerance"),
        "rho": (_rho, "auto", "existence radius, or auto"),
        "s": (float, None, "L^s exponent for the Cauchy-difference table"),
        "svg": (_bool, True, "write an SVG plot of E^p against m"),
        **_DISCRETE,
    },
    "report": {
        "inputs": (lambda t: [s for s in (t if isinstance(t, list) else str(t).split(",")) if s], REQUIRED,
                   "run directories, comma separated"),
    },
}


class UsageError(Exception):
    pass


def load_config_file(path) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip()] = v.strip()
    return cfg


def resolve_config(cmd: str, file_cfg: dict, flag_cfg: dict) -> dict:
    schema = SCHEMAS[cmd]
    unknown = sorted(set(file_cfg) - set(schema))
    if unknown:
        raise UsageError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
    merged = {}
    for key, (conv, default, _) in schema.items():
        raw = flag_cfg.get(key)
        if raw is None:
            raw = file_cfg.get(key)
        if raw is None:
            if default is REQUIRED:
                raise UsageError(f"missing required key {key!r} for {cmd}")
            merged[key] = default
            continue
        try:
            merged[key] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from None
    return merged


def _printable(cfg: dict) -> dict:
    return {k: (str(v) if isinstance(v, Source) else v) for k, v in cfg.items()}


# -- subcommands --------------------------------------------------------------


def run_energy(cfg, out):
    ctx = make_context(cfg["m"], cfg["p"], cfg["quad_order"], cfg["sphere_points"], cfg["eps_zero"])
    zeta = np.eye(cfg["m"])[0] if cfg["zeta"] is None else np.asarray(cfg["zeta"], float)
    if zeta.shape != (cfg["m"],):
        raise UsageError(f"zeta has {zeta.size} entries, m={cfg['m']}")
    br = affine_energy(expand(zeta, ctx.basis), ctx.rule, ctx.params)
    result = {
        "E": br.energy,
        "E_p": br.energy ** cfg["p"],
        "grad_norm": br.grad_norm,
        "dir_norm_min": float(br.dir_norms.min()),
        "dir_norm_max": float(br.dir_norms.max()),
        "gamma": ctx.params.gamma,
        "zeta": zeta.tolist(),
    }
    return result, {}, EXIT_OK


def run_geometry(cfg, out):
    if cfg["search"] not in ("both", "triangle", "nonconvexity"):
        raise UsageError(f"unknown search {cfg['search']!r}")
    ctx = make_context(cfg["m"], cfg["p"], cfg["quad_order"], cfg["sphere_points"], cfg["eps_zero"])
    result = {"gauge_equivalence": gauge_equivalence(ctx, cfg["samples"], cfg["seed"])}
    if cfg["search"] in ("both", "triangle"):
        w = search_triangle_violation(ctx, cfg["seed"], cfg["budget"])
        result["triangle_violation"] = None if w is None else w.to_dict()
    if cfg["search"] in ("both", "nonconvexity"):
        w = search_nonconvexity(ctx, cfg["seed"], cfg["budget"])
        result["nonconvexity"] = None if w is None else w.to_dict()
    return result, {}, EXIT_OK


FIELD_ALIASES = {"tp2": "galerkin"}


def run_fixedpoint(cfg, out):
    m = cfg["m"]
    name = FIELD_ALIASES.get(cfg["field"], cfg["field"])
    spec = None
    needs_ctx = cfg["gauge"] in ("affine", "w1p") or name == "galerkin"
    if name == "galerkin":
        spec = ProblemSpec(
            p=cfg["p"], alpha=cfg["alpha"], source=cfg["f"], m=m, quad_order=cfg["quad_order"],
            sphere_points=cfg["sphere_points"], eps_zero=cfg["eps_zero"], tol=cfg["tol"],
        )
        ctx = spec.ctx
    elif needs_ctx:
        ctx = make_context(m, cfg["p"], cfg["quad_order"], cfg["sphere_points"], cfg["eps_zero"])
    if cfg["gauge"] == "affine":
        gauge = AffineGauge(ctx)
    elif cfg["gauge"] == "w1p":
        gauge = W1pGauge(ctx)
    elif cfg["gauge"] in ("euclidean", "max", "l1"):
        gauge = NormGauge(cfg["gauge"])
    else:
        raise UsageError(f"unknown gauge {cfg['gauge']!r}")

    rho = cfg["rho"]
    radius = None
    if name == "identity":
        F = identity_field(m)
    elif name == "linear":
        F = linear_field(m, cfg["seed"], scale=0.5 * (1.0 if rho == "auto" else rho))
    elif name == "random-coercive":
        F = random_coercive_field(m, cfg["seed"], offset=0.2 * (1.0 if rho == "auto" else rho), gauge=gauge)
    elif name == "galerkin":
        F = galerkin_field(spec)
        if rho == "auto":
            if cfg["gauge"] != "affine":
                raise UsageError("rho=auto needs gauge=affine")
            radius = existence_radius(spec, seed=cfg["seed"])
            rho = radius.rho
    else:
        raise UsageError(f"unknown field {name!r}")
    if rho == "auto":
        raise UsageError("rho=auto is only defined for field=galerkin")
    excluded = None if cfg["excluded"] is None else np.asarray(cfg["excluded"], float)
    try:
        ball = GaugeBallSpec(gauge, np.zeros(m), float(rho), excluded)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    zr = find_zero(F, ball, tol=cfg["tol"], seed=cfg["seed"], check_boundary=True)
    result = {"field": name, "gauge": gauge.name, "rho": float(rho), **zr.to_dict()}
    if radius is not None:
        result["radius"] = radius.to_dict()
    if F.expected_zero is not None:
        result["zero_error_sup"] = float(np.max(np.abs(zr.z - F.expected_zero)))
    return result, {}, EXIT_OK if zr.success else EXIT_CERT


def run_constants(cfg, out):
    p = cfg["p"]
    qs = cfg["q_list"] or [p]
    base = ProblemSpec(p=p, alpha=(1 + p) / 2, quad_order=cfg["quad_order"], sphere_points=cfg["sphere_points"],
                       eps_zero=cfg["eps_zero"], m=cfg["m_list"][0])
    mus = {q: estimate_mu_sweep(base, q, cfg["m_list"], seed=cfg["seed"]) for q in qs}
    rows, res_rows = [], []
    for i, m in enumerate(cfg["m_list"]):
        ce = estimate_constants(base.with_m(m), (), cfg["samples"], cfg["seed"])
        for q in qs:
            mu = mus[q][i]
            row = [m, q, mu.value, ce.c_m, ce.C_grad, ce.D1, ce.D2, ce.C_dir, ce.D3]
            rows.append(row)
            res_rows.append(dict(zip(
                ["m", "q", "mu", "c_m", "C_grad", "D1", "D2", "C_dir", "D3"], row), mu_converged=mu.converged))
    columns = [("m", "count"), ("q", "exponent"), ("mu", "dimensionless"), ("c_m", "ratio"), ("C_grad", "ratio"),
               ("D1", "ratio"), ("D2", "ratio"), ("C_dir", "ratio"), ("D3", "ratio")]
    table = csv_text(columns, rows, [
        f"affine Poincare-Sobolev estimates and ratio extrema, p={p!r}, samples={cfg['samples']}",
        "mu: min E/||u||_q over W_m; C_grad: min E/||grad u||_p; D1,D2: min ||grad_xi u||_p over ||u||_p, "
        "||grad u||_p; C_dir, D3: min, max E/||grad_xi u||_p; c_m: max ||z||_{1,p,m}/|z|_2",
    ])
    return {"rows": res_rows}, {"constants.csv": table}, EXIT_OK


def run_solve(cfg, out):
    m_list = cfg["m_list"] or ([cfg["m"]] if cfg["m"] is not None else None)
    if not m_list:
        raise UsageError("solve needs m or m_list")
    spec = ProblemSpec(
        p=cfg["p"], alpha=cfg["alpha"], source=cfg["f"], m=max(m_list), quad_order=cfg["quad_order"],
        sphere_points=cfg["sphere_points"], eps_zero=cfg["eps_zero"], tol=cfg["tol"],
    )
    radius = None
    if cfg["rho"] != "auto":
        rep = coercivity_check(spec, cfg["rho"], seed=cfg["seed"])
        radius = RadiusResult(cfg["rho"], cfg["rho"], float("nan"), float("nan"), "user", 0,
                              rep.min_pairing, rep.passed, rep.samples)
    sweep = m_sweep(spec, m_list, cfg["seed"], radius)
    results = [r.to_dict() for r in sweep.results]
    payload = {
        "radius": sweep.radius.to_dict(),
        "results": results,
        "max_energy_p": sweep.max_energy_p,
        "all_certified": all(r.certified or r.status == "trivial-admissible" for r in sweep.results),
    }
    files = {}
    if cfg["s"] is not None and len(m_list) > 1:
        payload["convergence"] = convergence_study(spec, m_list, cfg["s"], sweep=sweep)
    columns = [("m", "count"), ("E", "energy"), ("E^p", "energy^p"), ("Phi", "functional"),
               ("residual", "sup-norm"), ("identity_gap", "absolute")]
    rows = [[r.m, r.energy, r.energy_p, r.phi_value, r.residual_sup, r.identity_gap] for r in sweep.results]
    files["sweep.csv"] = csv_text(columns, rows, [
        f"Galerkin critical points, p={cfg['p']!r}, alpha={cfg['alpha']!r}, f={cfg['f']}, rho={sweep.radius.rho!r}",
    ])
    if cfg["svg"]:
        files["energy_p.svg"] = svg_line_plot(
            [r.m for r in sweep.results], [r.energy_p for r in sweep.results], "m", "E^p(u_m)",
            "affine energy of the Galerkin critical points",
        )
    ok = payload["all_certified"] and sweep.radius.boundary_passed
    return payload, files, EXIT_OK if ok else EXIT_CERT


def run_report(cfg, out):
    rows = []
    keys = set()
    for d in cfg["inputs"]:
        d = Path(d)
        try:
            manifest = json.loads((d / "manifest.json").read_text())
            result = json.loads((d / "result.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read run directory {d}: {exc}") from None
        row = {"run": str(d), "subcommand": manifest.get("subcommand", ""), "exit_status": manifest.get("exit_status")}
        for k, v in _flatten(result).items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                row[k] = v
        keys |= set(row) - {"run", "subcommand", "exit_status"}
        rows.append(row)
    cols = ["run", "subcommand", "exit_status"] + sorted(keys)
    table = csv_text(
        [(c, "label" if c in ("run", "subcommand") else "as in source run") for c in cols],
        [[r.get(c, "") for c in cols] for r in rows],
        ["scalar fields gathered from result.json of prior runs"],
    )
    return {"runs": len(rows), "columns": cols}, {"report.csv": table}, EXIT_OK


def _flatten(obj, prefix=""):
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        if all(isinstance(v, dict) for v in obj):
            for i, v in enumerate(obj):
                out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


RUNNERS = {
    "energy": run_energy,
    "geometry": run_geometry,
    "fixedpoint": run_fixedpoint,
    "constants": run_constants,
    "solve": run_solve,
    "report": run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affine-lp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd, help=f"{cmd} run")
        sp.add_argument("--config", help="JSON or key=value file")
        sp.add_argument("--out", help="output directory (default: out/<command>)")
        sp.add_argument("-v", "--verbose", action="store_true")
        for key, (_, default, helptext) in schema.items():
            req = " (required)" if default is REQUIRED else ""
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, help=helptext + req)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command
    flags = {k: getattr(args, k) for k in SCHEMAS[cmd]}
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(cmd, file_cfg, flags)
        out = Path(args.out or Path("out") / cmd)
        result, files, status = RUNNERS[cmd](cfg, out)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE

    payload = {"subcommand": cmd, "config": _printable(cfg), "result": result}
    text = to_json(payload)
    atomic_write(out / "result.json", text)
    for name, content in files.items():
        atomic_write(out / name, content)
    manifest = {
        "subcommand": cmd,
        "config": _printable(cfg),
        "files": ["result.json", *files],
        "exit_status": status,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "host": platform.node(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "version": __version__,
    }
    atomic_write(out / "manifest.json", to_json(manifest))
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
