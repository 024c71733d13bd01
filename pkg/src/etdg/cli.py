"""Command-line front end.

::

    etdg run <cfg>
    etdg convergence <cfg> --levels 0..3
    etdg stability --scheme etdrk3 --degree 2
    etdg verify-appendix-c

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 divergence, 4 I/O error. ``ETDG_THREADS`` caps the worker pool used for
convergence levels and stability scan points.
"""

import argparse
import configparser
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import (
    DEFAULT_C_BETA,
    assemble_1d,
    assemble_global,
    default_beta,
    diffusion_scaled_beta,
)
from .errors import ConfigError, DivergenceError, EtdgError, MeshError
from .integrators import SCHEMES, StepperConfig, integrate
from .limiter import DEFAULT_M, TriangleLimiter
from .mesh import disk_mesh, load_mesh, refine_uniform, structured_rect_mesh
from .phi import DEFAULT_M_INIT, DEFAULT_M_MAX, DEFAULT_TOL
from .problems import PROBLEMS, compute_error, disk_mesh_path, get_problem, interpolate
from .reference import MAX_DEGREE, build_reference_element
from .stability import ETD_SCHEMES, H_LIST, scan_stability, scan_to_csv, theta_threshold
from .system import SemiDiscreteSystem
from .vtk import write_vtk

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4
CONVERGENCE_HEADER = "level,h,dofs,l2_error,order"
FLOAT = "%.12e"

# section -> key -> parser
_KEYS = {
    "problem": {"name": str, "m": float},
    "mesh": {"file": str, "structured": int, "disk": int, "radius": float,
             "periodic": "bool", "domain": "floats", "level": int},
    "space": {"degree": int},
    "time": {"scheme": str, "cfl": float, "tau": float, "t0": float, "t_end": float,
             "t_end_h": float, "jacobian": str},
    "limiter": {"enabled": "bool", "M": float, "positivity": "bool"},
    "krylov": {"tol": float, "m_max": int, "m_init": int},
    "penalty": {"c_beta": float, "beta": float, "scaled": "bool"},
    "output": {"directory": str, "vtk": str, "diagnostics": str, "convergence": str,
               "summary": str, "every": int},
}


@dataclass
class RunConfig:
    problem: str
    problem_params: dict = field(default_factory=dict)
    mesh_file: str = None
    structured: int = None
    disk_rings: int = None
    radius: float = 8.0
    periodic: bool = None
    domain: tuple = None
    level: int = 0
    degree: int = 1
    scheme: str = "etdrk3"
    cfl: float = None
    tau: float = None
    t0: float = None
    t_end: float = None
    t_end_h: float = None
    jacobian: str = "exact"
    limiter: bool = False
    tvb_M: float = DEFAULT_M
    positivity: bool = False
    krylov_tol: float = DEFAULT_TOL
    m_max: int = DEFAULT_M_MAX
    m_init: int = DEFAULT_M_INIT
    c_beta: float = DEFAULT_C_BETA
    beta: float = None
    beta_scaled: bool = False
    out_dir: str = "."
    vtk: str = "final.vtk"
    diagnostics: str = "diagnostics.csv"
    convergence: str = "convergence.csv"
    summary: str = "summary.txt"
    every: int = 0
    base_dir: str = "."

    def output_path(self, name):
        return Path(self.base_dir, self.out_dir, name)


def _parse_value(kind, raw, where):
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return tuple(float(t) for t in raw.replace(",", " ").split())
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def parse_config(text, base_dir="."):
    """Parse INI text into a :class:`RunConfig`; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    vals = {}
    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in _KEYS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            vals[(sec, key)] = _parse_value(_KEYS[sec][key], raw, f"[{sec}] {key}")

    def get(sec, key, default=None):
        return vals.get((sec, key), default)

    name = get("problem", "name")
    if name is None:
        raise ConfigError("[problem] name is required")
    if name not in PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
    params = {"m": get("problem", "m")} if get("problem", "m") is not None else {}
    sources = [k for k in ("file", "structured", "disk") if get("mesh", k) is not None]
    if len(sources) > 1:
        raise ConfigError(f"give exactly one mesh source, got {', '.join(sources)}")
    cfg = RunConfig(
        problem=name, problem_params=params,
        mesh_file=get("mesh", "file"), structured=get("mesh", "structured"),
        disk_rings=get("mesh", "disk"), radius=get("mesh", "radius", 8.0),
        periodic=get("mesh", "periodic"), domain=get("mesh", "domain"),
        level=get("mesh", "level", 0), degree=get("space", "degree", 1),
        scheme=get("time", "scheme", "etdrk3"), cfl=get("time", "cfl"), tau=get("time", "tau"),
        t0=get("time", "t0"), t_end=get("time", "t_end"), t_end_h=get("time", "t_end_h"),
        jacobian=get("time", "jacobian", "exact"),
        limiter=get("limiter", "enabled", False), tvb_M=get("limiter", "M", DEFAULT_M),
        positivity=get("limiter", "positivity", False),
        krylov_tol=get("krylov", "tol", DEFAULT_TOL), m_max=get("krylov", "m_max", DEFAULT_M_MAX),
        m_init=get("krylov", "m_init", DEFAULT_M_INIT),
        c_beta=get("penalty", "c_beta", DEFAULT_C_BETA), beta=get("penalty", "beta"),
        beta_scaled=get("penalty", "scaled", False),
        out_dir=get("output", "directory", "."), vtk=get("output", "vtk", "final.vtk"),
        diagnostics=get("output", "diagnostics", "diagnostics.csv"),
        convergence=get("output", "convergence", "convergence.csv"),
        summary=get("output", "summary", "summary.txt"), every=get("output", "every", 0),
        base_dir=str(base_dir),
    )
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not 1 <= cfg.degree <= MAX_DEGREE:
        raise ConfigError(f"[space] degree must lie in 1..{MAX_DEGREE}, got {cfg.degree}")
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}; choose from {', '.join(SCHEMES)}")
    if (cfg.cfl is None) == (cfg.tau is None):
        raise ConfigError("[time] needs exactly one of cfl and tau")
    if cfg.t_end is not None and cfg.t_end_h is not None:
        raise ConfigError("[time] give at most one of t_end and t_end_h")
    if cfg.level < 0:
        raise ConfigError("[mesh] level must be >= 0")
    if cfg.structured is not None and cfg.structured < 1:
        raise ConfigError("[mesh] structured needs at least one cell per side")
    if cfg.disk_rings is not None and cfg.disk_rings < 1:
        raise ConfigError("[mesh] disk needs at least one ring")
    if cfg.domain is not None and len(cfg.domain) != 4:
        raise ConfigError("[mesh] domain is x0 x1 y0 y1")
    if cfg.every < 0:
        raise ConfigError("[output] every must be >= 0")
    if cfg.beta is not None and cfg.beta_scaled:
        raise ConfigError("[penalty] give either beta or scaled, not both")
    if cfg.jacobian not in ("exact", "lifted"):
        raise ConfigError(f"[time] jacobian must be exact or lifted, got {cfg.jacobian!r}")
    _stepper_config(cfg)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, base_dir=path.parent)


# ---------------------------------------------------------------------------
# building blocks

def build_mesh(cfg, prob, extra_levels=0):
    """Base mesh from the config, refined ``level + extra_levels`` times."""
    if cfg.mesh_file is not None:
        path = Path(cfg.base_dir, cfg.mesh_file)
        if not path.exists():
            raise FileNotFoundError(f"mesh file not found: {path}")
        mesh = load_mesh(path)
    elif cfg.structured is not None or (cfg.disk_rings is None and prob.domain[0] == "rect"):
        n = cfg.structured if cfg.structured is not None else 8
        if cfg.domain is not None:
            x0, x1, y0, y1 = cfg.domain
            dom = ((x0, x1), (y0, y1))
        else:
            dom = prob.domain[1] if prob.domain[0] == "rect" else ((0.0, 2 * np.pi),) * 2
        periodic = cfg.periodic if cfg.periodic is not None else (
            prob.domain[2] if prob.domain[0] == "rect" else False)
        mesh = structured_rect_mesh(n, n, dom, periodic=periodic)
    elif cfg.disk_rings is not None:
        mesh = disk_mesh(cfg.radius, cfg.disk_rings)
    else:
        mesh = load_mesh(disk_mesh_path())
    for _ in range(cfg.level + extra_levels):
        mesh = refine_uniform(mesh)
    return mesh


def _stepper_config(cfg):
    return StepperConfig(scheme=cfg.scheme, tau=cfg.tau, cfl=cfg.cfl, krylov_tol=cfg.krylov_tol,
                         m_max=cfg.m_max, m_init=cfg.m_init, limiter=cfg.limiter,
                         tvb_M=cfg.tvb_M, lifted_jacobian=cfg.jacobian == "lifted")


def _times(cfg, prob, base_h):
    t0 = prob.t0 if cfg.t0 is None else cfg.t0
    if cfg.t_end_h is not None:
        return t0, t0 + cfg.t_end_h * base_h
    return t0, prob.t_end if cfg.t_end is None else cfg.t_end


def simulate(cfg, extra_levels=0, base_h=None, callback=None):
    """Run one simulation; returns a dict with mesh, ref, result and errors."""
    prob = get_problem(cfg.problem, **cfg.problem_params)
    mesh = build_mesh(cfg, prob, extra_levels)
    ref = build_reference_element(cfg.degree)
    if cfg.beta is not None:
        beta = cfg.beta
    elif cfg.beta_scaled:
        xy = mesh.physical_points(ref.nodes)
        beta = diffusion_scaled_beta(mesh, cfg.degree, prob.functions.dg,
                                     prob.initial(xy[..., 0], xy[..., 1]), cfg.c_beta)
    else:
        beta = default_beta(mesh, cfg.degree, cfg.c_beta)
    ops = assemble_global(mesh, ref, beta=beta, bc=prob.bc)
    system = SemiDiscreteSystem(ops, prob.functions, mesh)
    t0, t_end = _times(cfg, prob, mesh.h_max if base_h is None else base_h)
    u0 = interpolate(prob.initial, ops)
    limiter = TriangleLimiter(mesh, ref, cfg.tvb_M, positivity=cfg.positivity) if cfg.limiter else None
    if limiter is not None:
        u0 = limiter(u0)
    result = integrate(system, u0, t0, t_end, _stepper_config(cfg), h=mesh.h_max,
                       limiter=limiter, callback=callback)
    out = dict(mesh=mesh, ref=ref, ops=ops, result=result, t_end=t_end, problem=prob)
    if prob.exact is not None:
        out["l2"] = compute_error(result.u, prob.exact, mesh, ref, "L2", t=t_end)
        out["linf"] = compute_error(result.u, prob.exact, mesh, ref, "Linf", t=t_end)
    return out


def _workers():
    raw = os.environ.get("ETDG_THREADS")
    cap = os.cpu_count() or 1
    if raw is None:
        return cap
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ETDG_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("ETDG_THREADS must be >= 1")
    return min(n, cap)


def _pool_map(fn, items, workers=None):
    """``map`` in a process pool (serial for one worker); results keep input order."""
    items = list(items)
    workers = _workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        futures = [pool.submit(fn, *it) for it in items]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# commands

def cmd_run(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    outdir = cfg.output_path("")
    outdir.mkdir(parents=True, exist_ok=True)
    snaps = []

    def snapshot(step, t, u):
        if cfg.every and step % cfg.every == 0:
            snaps.append((step, u.copy()))

    t = time.perf_counter()
    run = simulate(cfg, callback=snapshot)
    elapsed = time.perf_counter() - t
    res = run["result"]
    write_vtk(cfg.output_path(cfg.vtk), run["mesh"], run["ref"], {"u": res.u}, title=cfg.problem)
    for step, u in snaps:
        stem = Path(cfg.vtk).stem
        write_vtk(cfg.output_path(f"{stem}_{step:06d}.vtk"), run["mesh"], run["ref"], {"u": u},
                  title=f"{cfg.problem} step {step}")
    cfg.output_path(cfg.diagnostics).write_text(res.diagnostics_csv())
    line = (f"problem={cfg.problem} scheme={cfg.scheme} k={cfg.degree} "
            f"elements={run['mesh'].n_elements} steps={res.steps} t={res.t:.6g}")
    if "l2" in run:
        line += f" l2_error={FLOAT % run['l2']} linf_error={FLOAT % run['linf']}"
    line += f" runtime={elapsed:.3f}s"
    cfg.output_path(cfg.summary).write_text(line + "\n")
    print(line, file=stream)
    return run


def _convergence_level(cfg, level, base_h):
    run = simulate(cfg, extra_levels=level, base_h=base_h)
    if "l2" not in run:
        raise ConfigError(f"problem {cfg.problem!r} has no exact solution")
    return level, run["mesh"].h_max, run["ops"].n_dofs, run["l2"]


def convergence_rows(cfg, levels, workers=None):
    """Rows ``(level, h, dofs, l2_error, order)``; ``order`` is None on the first row."""
    prob = get_problem(cfg.problem, **cfg.problem_params)
    if prob.exact is None:
        raise ConfigError(f"problem {cfg.problem!r} has no exact solution")
    base_h = build_mesh(cfg, prob).h_max
    levels = sorted(set(levels))
    raw = _pool_map(_convergence_level, [(cfg, lv, base_h) for lv in levels], workers)
    rows, prev = [], None
    for level, h, dofs, err in raw:
        order = None if prev is None else float(np.log2(prev / err))
        rows.append((level, h, dofs, err, order))
        prev = err
    return rows


def convergence_csv(rows):
    out = [CONVERGENCE_HEADER]
    for level, h, dofs, err, order in rows:
        out.append(",".join([str(level), FLOAT % h, str(dofs), FLOAT % err,
                             "" if order is None else FLOAT % order]))
    return "\n".join(out) + "\n"


def cmd_convergence(cfg, levels, stream=None):
    stream = sys.stdout if stream is None else stream
    rows = convergence_rows(cfg, levels)
    text = convergence_csv(rows)
    path = cfg.output_path(cfg.convergence)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    stream.write(text)
    return rows


def _scan_point(scheme, k, theta, h, n_xi):
    return scan_stability(scheme, k, [theta], [h], n_xi)[0]


def cmd_stability(scheme, k, thetas, h_list=H_LIST, n_xi=1001, output=None, stream=None):
    stream = sys.stdout if stream is None else stream
    theta0 = theta_threshold(scheme)
    rows = _pool_map(_scan_point, [(scheme, k, th, h, n_xi) for th in thetas for h in h_list])
    text = scan_to_csv(rows)
    msg = f"theta0 {scheme} = {theta0:.6f}"
    if output is None:
        print(msg, file=sys.stderr)
        stream.write(text)
    else:
        Path(output).write_text(text)
        print(msg, file=stream)
    return theta0, rows


def verify_appendix_c(rtol=1e-10, stream=None):
    """Compare computed 1D blocks with the closed forms; returns ``(ok, worst)``."""
    stream = sys.stdout if stream is None else stream
    from .blocks1d_table import tabulated_blocks

    ok, worst = True, 0.0
    names = {-1: "D-1", 0: "D0", 1: "D1"}
    for k in range(1, 5):
        got = assemble_1d(k, 1.0, 0.0)
        table = tabulated_blocks(k)
        for off in (-1, 0, 1):
            for part, mine, ref in (("nonbeta", got.nonbeta[off], table[off][0]),
                                    ("beta", got.betapart[off], table[off][1])):
                scale = max(np.abs(ref).max(), 1.0)
                dev = float(np.abs(mine - ref).max() / scale)
                good = dev <= rtol
                ok &= good
                worst = max(worst, dev)
                print(f"k={k} {names[off]:>3} {part:<7} max_rel_dev={dev:.3e} "
                      f"{'ok' if good else 'MISMATCH'}", file=stream)
    print(f"appendix-c {'PASS' if ok else 'FAIL'} (worst {worst:.3e})", file=stream)
    return ok, worst


# ---------------------------------------------------------------------------
# argument parsing

def parse_levels(text):
    """``"0..3"`` (inclusive) or ``"0,1,2"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad --levels {text!r}; use 0..3 or 0,1,2") from None


def parse_thetas(text):
    """``"a:b:n"`` (n evenly spaced values) or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return list(np.linspace(float(a), float(b), int(n)))
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad --thetas {text!r}; use a:b:n or a comma list") from None


def build_parser():
    p = argparse.ArgumentParser(prog="etdg", description="ETD-RK discontinuous Galerkin solver")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a simulation from a config file")
    r.add_argument("config")
    c = sub.add_parser("convergence", help="refinement study with L2 errors and orders")
    c.add_argument("config")
    c.add_argument("--levels", default="0..3")
    s = sub.add_parser("stability", help="fully discrete Fourier stability scan")
    s.add_argument("--scheme", default="etdrk3", choices=ETD_SCHEMES)
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--thetas", default="0.4:1.0:13")
    s.add_argument("--h", default=None, help="comma-separated cell widths")
    s.add_argument("--xi-count", type=int, default=1001)
    s.add_argument("--output", default=None)
    sub.add_parser("verify-appendix-c", help="check the 1D blocks against the closed forms")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cmd_run(load_config(args.config))
        elif args.command == "convergence":
            cmd_convergence(load_config(args.config), parse_levels(args.levels))
        elif args.command == "stability":
            if not 1 <= args.degree <= 4:
                raise ConfigError("--degree must lie in 1..4")
            if args.xi_count < 1:
                raise ConfigError("--xi-count must be positive")
            hs = H_LIST if args.h is None else [float(t) for t in args.h.split(",")]
            cmd_stability(args.scheme, args.degree, parse_thetas(args.thetas), hs,
                          args.xi_count, args.output)
        else:
            ok, _ = verify_appendix_c()
            return EXIT_OK if ok else EXIT_FAIL
    except ConfigError as exc:
        print(f"etdg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"etdg: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, MeshError) as exc:
        print(f"etdg: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EtdgError, ValueError) as exc:
        print(f"etdg: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
