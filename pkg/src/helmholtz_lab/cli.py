"""Config-driven experiment harness with presets and CSV reports.

Configs are flat ``key = value`` text files; list values are comma
separated ("k = 1,10,100").  Every run emits one CSV row per
(method, k, h, p) combination with a fixed column set, and fitted
convergence slopes per series are printed to standard output.  Rows are
computed by a worker pool but always written in sorted order, so a given
config reproduces its CSV byte for byte.
"""

import argparse
import concurrent.futures
import math
import os
import sys
import time

import numpy as np

from . import analysis
from . import assembly
from . import meshing
from . import methods
from . import spaces

COLUMNS = [
    "method", "domain", "k", "h", "p", "L", "sigma", "dofs", "n_lambda",
    "err_h1semi_rel", "err_l2_rel", "err_1k_rel", "err_dg", "j_value",
    "nodal_max", "gamma_n", "solve_residual", "wall_ms", "error",
]

_METHODS = ("fem", "nodal", "ls", "uwvf", "infsup", "approx")
_DOMAINS = ("interval", "square", "lshape")
_EXACT = ("model1d", "pw2d", "bessel_singular")
_STRATEGIES = ("sparse_lu", "dense_lu", "truncated_svd")

# Primary error column used when fitting slopes for a method's series.
_PRIMARY_ERR = {
    "fem": "err_h1semi_rel",
    "nodal": "err_h1semi_rel",
    "ls": "err_l2_rel",
    "uwvf": "err_dg",
    "approx_pw": "err_1k_rel",
    "approx_ghp": "err_1k_rel",
}


class ConfigError(Exception):
    """Config problem attributable to a single key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"key '{key}': {message}")


# -- presets -------------------------------------------------------------------

PRESETS = {
    "fig1_1d_pollution": {
        "method": "fem", "domain": "interval", "k": "1,10,100",
        "p": "1,2,3,4",
        "n_elements": "4,6,8,12,16,24,32,48,64,96,128,192,256",
    },
    "fig2_square": {
        "method": "fem", "domain": "square", "k": "4,40", "p": "1,2,3",
        "h": "0.25,0.125,0.0625,0.03125",
    },
    "fig3_lshape_pfem": {
        "method": "fem", "domain": "lshape", "exact": "pw2d",
        "robin_sign": "-1", "k": "10", "p": "1,2,3,4,5,6,7,8", "h": "0.4",
        "sigma": "0.125", "layers": "10",
    },
    "lshape_singular": {
        "method": "fem", "domain": "lshape", "exact": "bessel_singular",
        "k": "1,10", "p": "1,2,3,4,5,6,7,8", "h": "0.35",
    },
    "uwvf_square": {
        "method": "uwvf", "domain": "square", "k": "10", "p": "3,5,7,9,11",
        "h": "0.5,0.25", "flux": "uwvf",
    },
    "ls_square": {
        "method": "ls", "domain": "square", "k": "10", "p": "3,5,7,9,11",
        "h": "0.5,0.25",
    },
    "infsup_1d": {
        "method": "infsup", "domain": "interval", "k": "4,8,16,32",
        "p": "1", "khp": "0.25",
    },
    "approx_trefftz": {
        "method": "approx", "domain": "square", "k": "8",
        "p": "1,2,3,4,5,6,7,8,9,10",
    },
    "nodal_exact_1d": {
        "method": "nodal", "domain": "interval", "k": "10",
        "n_elements": "16,32,64,128",
    },
}

PRESET_INFO = {
    "fig1_1d_pollution": ("seconds",
                          "1D impedance problem, h-FEM sweep over k and p;"
                          " the classic pollution picture"),
    "fig2_square": ("minutes",
                    "plane wave on the unit square, h-FEM at p=1..3"),
    "fig3_lshape_pfem": ("minutes",
                         "plane wave on the L-shape, p-FEM on a mesh graded"
                         " into the reentrant corner"),
    "lshape_singular": ("minutes",
                        "corner-singular Bessel solution on the L-shape,"
                        " p-FEM on a quasi-uniform mesh"),
    "uwvf_square": ("seconds",
                    "plane-wave DG with UWVF fluxes on the unit square"),
    "ls_square": ("seconds",
                  "plane-wave least squares on the unit square"),
    "infsup_1d": ("seconds",
                  "discrete inf-sup constant of the 1D model vs k at fixed"
                  " kh/p"),
    "approx_trefftz": ("seconds",
                       "best-approximation study of plane-wave and"
                       " evanescent-augmented local bases"),
    "nodal_exact_1d": ("seconds",
                       "wave-adapted 1D space; nodal errors at machine"
                       " scale"),
}


# -- config parsing ------------------------------------------------------------


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got '{text}'")


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got '{text}'")


def _parse_float_list(key, text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    return [_parse_float(key, t) for t in items]


def _parse_int_list(key, text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    return [_parse_int(key, t) for t in items]


def _parse_bool(key, text):
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(key, f"expected true/false, got '{text}'")


def _parse_choice(options):
    def parse(key, text):
        val = text.strip()
        if val not in options:
            raise ConfigError(key, f"'{val}' is not one of {list(options)}")
        return val
    return parse


def _parse_corners(key, text):
    corners = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        coords = [_parse_float(key, t) for t in chunk.split(",")]
        if len(coords) == 1:
            corners.append(coords[0])
        elif len(coords) == 2:
            corners.append((coords[0], coords[1]))
        else:
            raise ConfigError(key, f"corner '{chunk}' is not 1D or 2D")
    if not corners:
        raise ConfigError(key, "expected at least one corner")
    return corners


def _parse_str(key, text):
    return text.strip()


_KEY_PARSERS = {
    "preset": _parse_choice(tuple(PRESETS)),
    "method": _parse_choice(_METHODS),
    "domain": _parse_choice(_DOMAINS),
    "exact": _parse_choice(_EXACT),
    "k": _parse_float_list,
    "p": _parse_int_list,
    "h": _parse_float_list,
    "n_elements": _parse_int_list,
    "sigma": _parse_float,
    "layers": _parse_int,
    "corners": _parse_corners,
    "flux": _parse_choice(methods._FLUX_PRESETS),
    "alpha": _parse_float,
    "beta": _parse_float,
    "delta": _parse_float,
    "w1": _parse_float,
    "w2": _parse_float,
    "strategy": _parse_choice(_STRATEGIES),
    "svd_cutoff": _parse_float,
    "khp": _parse_float,
    "volume_factor": _parse_float,
    "volume_offset": _parse_int,
    "edge_factor": _parse_float,
    "edge_offset": _parse_int,
    "robin_sign": _parse_float,
    "out": _parse_str,
    "seed": _parse_int,
    "threads": _parse_int,
    "timing": _parse_bool,
}


def parse_config_text(text):
    """Parse flat key-value config text into a dict of raw strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(body.split()[0],
                              f"line {lineno} is not 'key = value'")
        key, value = body.split("=", 1)
        key = key.strip()
        if key not in _KEY_PARSERS:
            raise ConfigError(key, "unknown config key")
        raw[key] = value.strip()
    return raw


_DOMAIN_DEFAULT = {"fem": None, "nodal": "interval", "ls": "square",
                   "uwvf": "square", "infsup": "interval", "approx": "square"}
_EXACT_DEFAULT = {"interval": "model1d", "square": "pw2d",
                  "lshape": "bessel_singular"}


def build_config(raw):
    """Expand preset defaults, parse values, cross-validate; returns a dict."""
    raw = dict(raw)
    merged = {}
    preset = raw.get("preset")
    if preset is not None:
        preset = _KEY_PARSERS["preset"]("preset", preset)
        merged.update(PRESETS[preset])
    merged.update(raw)

    cfg = {key: None for key in _KEY_PARSERS}
    for key, value in merged.items():
        if key not in _KEY_PARSERS:
            raise ConfigError(key, "unknown config key")
        cfg[key] = _KEY_PARSERS[key](key, value)

    method = cfg["method"]
    if method is None:
        raise ConfigError("method", "required (or give a preset)")
    if cfg["domain"] is None:
        cfg["domain"] = _DOMAIN_DEFAULT[method]
        if cfg["domain"] is None:
            raise ConfigError("domain", f"required for method '{method}'")
    domain = cfg["domain"]
    if method in ("nodal", "infsup") and domain != "interval":
        raise ConfigError("domain", f"method '{method}' runs on the interval")
    if method in ("ls", "uwvf", "approx") and domain != "square":
        raise ConfigError("domain", f"method '{method}' runs on the square")

    if not cfg["k"]:
        raise ConfigError("k", "must be a non-empty list")
    if any(k < 1.0 for k in cfg["k"]):
        raise ConfigError("k", "wavenumbers below 1 are not supported")

    if cfg["exact"] is None:
        cfg["exact"] = _EXACT_DEFAULT[domain]
    if domain == "interval" and cfg["exact"] != "model1d":
        raise ConfigError("exact", "interval runs use the model1d solution")
    if domain == "square" and cfg["exact"] != "pw2d":
        raise ConfigError("exact", "square runs use the pw2d solution")
    if domain == "lshape" and cfg["exact"] == "model1d":
        raise ConfigError("exact", "model1d is one dimensional")

    if cfg["p"] is None or not cfg["p"]:
        if method in ("nodal", "infsup"):
            cfg["p"] = [1]
        else:
            raise ConfigError("p", "must be a non-empty list")
    if any(p < 1 for p in cfg["p"]):
        raise ConfigError("p", "orders must be positive")

    if cfg["h"] is not None and cfg["n_elements"] is not None:
        raise ConfigError("h", "give either h or n_elements, not both")
    if cfg["n_elements"] is not None and domain != "interval":
        raise ConfigError("n_elements", "element counts are for interval runs")
    if method in ("fem", "nodal"):
        if domain == "interval":
            if cfg["n_elements"] is None:
                if cfg["h"] is None:
                    raise ConfigError("n_elements",
                                      "interval runs need n_elements or h")
                cfg["n_elements"] = [max(1, round(1.0 / h)) for h in cfg["h"]]
                cfg["h"] = None
        elif cfg["h"] is None:
            raise ConfigError("h", f"method '{method}' needs an h list")
    if method in ("ls", "uwvf") and cfg["h"] is None:
        raise ConfigError("h", f"method '{method}' needs an h list")
    if cfg["n_elements"] is not None and any(n < 1 for n in cfg["n_elements"]):
        raise ConfigError("n_elements", "element counts must be positive")
    if cfg["h"] is not None and any(h <= 0 for h in cfg["h"]):
        raise ConfigError("h", "mesh sizes must be positive")

    if (cfg["sigma"] is None) != (cfg["layers"] is None):
        raise ConfigError("sigma", "grading needs both sigma and layers")
    if cfg["sigma"] is not None:
        if method != "fem" or domain == "interval":
            raise ConfigError("sigma", "grading applies to 2D fem runs")
        if not 0.0 < cfg["sigma"] < 1.0:
            raise ConfigError("sigma", "grading factor must be in (0, 1)")
        if cfg["layers"] < 1:
            raise ConfigError("layers", "need at least one layer")

    if cfg["robin_sign"] is None:
        cfg["robin_sign"] = -1.0 if (domain == "lshape") else 1.0
    if cfg["robin_sign"] not in (1.0, -1.0):
        raise ConfigError("robin_sign", "must be +1 or -1")
    if method in ("ls", "uwvf") and cfg["robin_sign"] != 1.0:
        raise ConfigError("robin_sign",
                          f"method '{method}' uses the +ik impedance form")

    flux_overrides = [cfg["alpha"], cfg["beta"], cfg["delta"]]
    if any(v is not None for v in flux_overrides):
        if any(v is None for v in flux_overrides):
            raise ConfigError("alpha",
                              "flux overrides need alpha, beta and delta")
        cfg["flux_params"] = assembly.FluxParams(
            alpha=cfg["alpha"], beta=cfg["beta"], delta=cfg["delta"])
    else:
        cfg["flux_params"] = None
    if cfg["flux"] is None:
        cfg["flux"] = "uwvf"

    if cfg["strategy"] is None:
        cfg["strategy"] = "truncated_svd" if method == "ls" else "sparse_lu"
    if cfg["svd_cutoff"] is None:
        cfg["svd_cutoff"] = 1e-12
    if cfg["khp"] is None:
        cfg["khp"] = 0.25
    if cfg["khp"] <= 0:
        raise ConfigError("khp", "resolution ratio must be positive")

    quad_keys = ("volume_factor", "volume_offset", "edge_factor",
                 "edge_offset")
    if any(cfg[qk] is not None for qk in quad_keys):
        defaults = assembly.QuadPolicy()
        cfg["policy"] = assembly.QuadPolicy(
            volume_factor=cfg["volume_factor"] if cfg["volume_factor"]
            is not None else defaults.volume_factor,
            volume_offset=cfg["volume_offset"] if cfg["volume_offset"]
            is not None else defaults.volume_offset,
            edge_factor=cfg["edge_factor"] if cfg["edge_factor"]
            is not None else defaults.edge_factor,
            edge_offset=cfg["edge_offset"] if cfg["edge_offset"]
            is not None else defaults.edge_offset,
        )
    else:
        cfg["policy"] = None

    if cfg["out"] is None:
        cfg["out"] = "results.csv"
    if cfg["seed"] is None:
        cfg["seed"] = 0
    if cfg["timing"] is None:
        cfg["timing"] = False
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError("threads", "worker count must be positive")
    return cfg


def _worker_count(cfg):
    env = os.environ.get("HELMHOLTZ_THREADS")
    if env:
        try:
            count = int(env)
        except ValueError:
            raise ConfigError("threads",
                              f"HELMHOLTZ_THREADS must be an integer, "
                              f"got '{env}'")
        if count < 1:
            raise ConfigError("threads", "HELMHOLTZ_THREADS must be >= 1")
        return count
    if cfg["threads"] is not None:
        return cfg["threads"]
    return os.cpu_count() or 1


# -- run expansion and execution -------------------------------------------------


def expand_runs(cfg):
    """Cartesian sweep of the config into per-run task dicts."""
    method = cfg["method"]
    tasks = []
    if method in ("fem", "nodal"):
        res_axis = (cfg["n_elements"] if cfg["n_elements"] is not None
                    else cfg["h"])
        res_key = "n" if cfg["n_elements"] is not None else "h"
        orders = [1] if method == "nodal" else cfg["p"]
        for k in cfg["k"]:
            for p in orders:
                for res in res_axis:
                    tasks.append({"method": method, "k": k, "p": p,
                                  res_key: res})
    elif method in ("ls", "uwvf"):
        for k in cfg["k"]:
            for p in cfg["p"]:
                for h in cfg["h"]:
                    tasks.append({"method": method, "k": k, "p": p, "h": h})
    elif method == "infsup":
        for k in cfg["k"]:
            for p in cfg["p"]:
                tasks.append({"method": method, "k": k, "p": p})
    elif method == "approx":
        for kind in ("pw", "ghp"):
            for k in cfg["k"]:
                tasks.append({"method": method, "kind": kind, "k": k})
    return tasks


def _blank_row(method_label, domain, k, p=None, h=None):
    row = {name: None for name in COLUMNS}
    row["method"] = method_label
    row["domain"] = domain
    row["k"] = float(k)
    row["p"] = p
    row["h"] = h
    row["error"] = ""
    return row


def _grade_mesh(cfg, mesh):
    if cfg["sigma"] is None:
        return mesh
    corners = cfg["corners"]
    if corners is None:
        corners = [(0.0, 0.0)]
    return meshing.geometric_refine(mesh, corners, cfg["sigma"],
                                    cfg["layers"])


def _build_fem_problem(cfg, k):
    domain = cfg["domain"]
    if domain == "interval":
        return methods.model_problem_1d(k, robin_sign=cfg["robin_sign"])
    if domain == "square":
        return methods.plane_wave_problem(k, robin_sign=cfg["robin_sign"])
    if cfg["exact"] == "bessel_singular":
        return methods.lshape_singular_problem(k)
    return methods.lshape_plane_wave_problem(k, robin_sign=cfg["robin_sign"])


def _report_into_row(row, out):
    rep = out.report
    row["h"] = rep.h
    row["p"] = rep.p
    row["dofs"] = rep.dofs
    row["n_lambda"] = rep.n_lambda
    row["err_h1semi_rel"] = rep.h1_semi_rel
    row["err_l2_rel"] = rep.l2_rel
    row["err_1k_rel"] = rep.norm_1k_rel
    row["err_dg"] = rep.dg_norm
    row["j_value"] = rep.j_value
    row["nodal_max"] = rep.nodal_max
    row["solve_residual"] = out.checks.get("solve_residual")


def _run_fem(cfg, task, row):
    k = task["k"]
    problem = _build_fem_problem(cfg, k)
    if cfg["domain"] == "interval":
        mesh = meshing.triangulate(problem.domain, 1.0 / task["n"])
    else:
        mesh = meshing.triangulate(problem.domain, task["h"])
        mesh = _grade_mesh(cfg, mesh)
        if cfg["sigma"] is not None:
            row["sigma"] = cfg["sigma"]
            row["L"] = cfg["layers"]
    space = spaces.h1_space(mesh, task["p"])
    out = methods.solve_fem(problem, space, strategy=cfg["strategy"],
                            policy=cfg["policy"])
    _report_into_row(row, out)


def _run_nodal(cfg, task, row):
    problem = methods.model_problem_1d(task["k"],
                                       robin_sign=cfg["robin_sign"])
    out = methods.solve_nodally_exact_1d(problem, task["n"],
                                         strategy=cfg["strategy"])
    _report_into_row(row, out)


def _trefftz_space(cfg, task):
    mesh = meshing.triangulate(meshing.unit_square(), task["h"])
    basis = spaces.PlaneWaveBasis(task["k"], task["p"])
    return spaces.trefftz_space(mesh, task["k"], basis)


def _run_ls(cfg, task, row):
    problem = methods.plane_wave_problem(task["k"])
    space = _trefftz_space(cfg, task)
    out = methods.solve_least_squares(
        problem, space, w1=cfg["w1"], w2=cfg["w2"],
        strategy=cfg["strategy"], svd_cutoff=cfg["svd_cutoff"])
    _report_into_row(row, out)


def _run_uwvf(cfg, task, row):
    problem = methods.plane_wave_problem(task["k"])
    space = _trefftz_space(cfg, task)
    flux = (cfg["flux_params"] if cfg["flux_params"] is not None
            else cfg["flux"])
    out = methods.solve_pwdg(problem, space, flux=flux,
                             strategy=cfg["strategy"])
    _report_into_row(row, out)


def _run_infsup(cfg, task, row):
    k, p = task["k"], task["p"]
    problem = methods.model_problem_1d(k, robin_sign=cfg["robin_sign"])
    n = max(p, round(k / (cfg["khp"] * p)))
    mesh = meshing.triangulate(problem.domain, 1.0 / n)
    space = spaces.h1_space(mesh, p)
    system = assembly.assemble_galerkin(
        space, k, f=problem.f, g=problem.g, bc=problem.bc,
        robin_sign=problem.robin_sign, policy=cfg["policy"])
    gram = assembly.assemble_gram_1k(space, k, policy=cfg["policy"])
    a_mat = (system.A.toarray() if hasattr(system.A, "toarray")
             else np.asarray(system.A))
    g_mat = gram.toarray() if hasattr(gram, "toarray") else np.asarray(gram)
    if system.free is not None:
        idx = np.ix_(system.free, system.free)
        a_mat, g_mat = a_mat[idx], g_mat[idx]
    nfree = a_mat.shape[0]
    row["h"] = mesh.h
    row["dofs"] = nfree
    row["n_lambda"] = meshing.n_lambda(nfree, k, 1)
    row["gamma_n"] = assembly.infsup_probe(a_mat, g_mat)


def _run_approx(cfg, task):
    k = task["k"]
    angle = 0.3
    target = methods.plane_wave_2d(
        k, direction=(math.cos(angle), math.sin(angle)))
    target_h = cfg["h"][0] if cfg["h"] else 0.35
    study = methods.approx_study(
        target, task["kind"], "p_sweep", orders=cfg["p"],
        target_h=target_h, cutoff=cfg["svd_cutoff"])
    rows = []
    for rec in study:
        row = _blank_row(f"approx_{task['kind']}", cfg["domain"], k,
                         p=rec["p"], h=rec["h"])
        row["dofs"] = rec["dofs"]
        row["n_lambda"] = meshing.n_lambda(rec["dofs"], k, 2)
        row["err_h1semi_rel"] = rec["err_h1semi_rel"]
        row["err_l2_rel"] = rec["err_l2_rel"]
        row["err_1k_rel"] = rec["err_1k_rel"]
        rows.append(row)
    return rows


def _run_task(cfg, task):
    """Execute one task; exceptions become error-flagged rows."""
    method = task["method"]
    label = method if method != "approx" else f"approx_{task['kind']}"
    row = _blank_row(label, cfg["domain"], task["k"], p=task.get("p"),
                     h=task.get("h"))
    if "n" in task:
        row["h"] = 1.0 / task["n"]
    started = time.perf_counter()
    try:
        if method == "fem":
            _run_fem(cfg, task, row)
        elif method == "nodal":
            _run_nodal(cfg, task, row)
        elif method == "ls":
            _run_ls(cfg, task, row)
        elif method == "uwvf":
            _run_uwvf(cfg, task, row)
        elif method == "infsup":
            _run_infsup(cfg, task, row)
        elif method == "approx":
            rows = _run_approx(cfg, task)
            if cfg["timing"]:
                elapsed = (time.perf_counter() - started) * 1e3
                for sub in rows:
                    sub["wall_ms"] = elapsed
            return rows
    except Exception as exc:
        row["error"] = _sanitize(f"{type(exc).__name__}: {exc}")
        return [row]
    if cfg["timing"]:
        row["wall_ms"] = (time.perf_counter() - started) * 1e3
    return [row]


def _sanitize(text):
    return str(text).replace(",", ";").replace("\n", " ").strip()


def _sort_key(row):
    return (
        row["method"], row["domain"], row["k"],
        row["p"] if row["p"] is not None else -1,
        -(row["h"] if row["h"] is not None else 0.0),
        row["dofs"] if row["dofs"] is not None else -1,
    )


def execute_runs(cfg, tasks):
    """Run all tasks on a worker pool; returns (sorted rows, failure flag)."""
    workers = _worker_count(cfg)
    rows = []
    if workers == 1 or len(tasks) <= 1:
        for task in tasks:
            rows.extend(_run_task(cfg, task))
    else:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            for chunk in pool.map(lambda t: _run_task(cfg, t), tasks):
                rows.extend(chunk)
    rows.sort(key=_sort_key)
    failed = any(row["error"] for row in rows)
    return rows, failed


# -- CSV and slope reporting ------------------------------------------------------


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return _sanitize(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def rows_to_csv_text(rows):
    lines = [",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(c)) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def _fit_line(pairs, label):
    try:
        slope, _, r2 = analysis.fit_rate(pairs)
    except ValueError:
        return None
    return f"slope {label}: {slope:+.3f} (r2={r2:.4f}, {len(pairs)} pts)"


def series_slopes(rows):
    """Fitted log-log slopes for every (k, p) series with >= 3 points."""
    lines = []
    h_groups = {}
    p_groups = {}
    k_groups = {}
    for row in rows:
        method = row["method"]
        err_name = _PRIMARY_ERR.get(method)
        if method == "infsup":
            if row["gamma_n"] is not None and row["gamma_n"] > 0:
                key = (method, row["domain"], row["p"])
                k_groups.setdefault(key, []).append(
                    (row["k"], row["gamma_n"]))
            continue
        if err_name is None:
            continue
        err = row[err_name]
        if err is None or err <= 0 or not row["n_lambda"]:
            continue
        hkey = (method, row["domain"], row["k"], row["p"], err_name)
        h_groups.setdefault(hkey, []).append((row["n_lambda"], err))
        pkey = (method, row["domain"], row["k"], row["h"], err_name)
        p_groups.setdefault(pkey, []).append((row["p"], err))

    for (method, domain, k, p, err_name), pairs in sorted(h_groups.items()):
        if len({x for x, _ in pairs}) < 3:
            continue
        pairs.sort()
        line = _fit_line(pairs, f"{err_name} vs N_lambda | method={method} "
                                f"domain={domain} k={k!r} p={p}")
        if line:
            lines.append(line)
    for (method, domain, k, h, err_name), pairs in sorted(p_groups.items()):
        if len({x for x, _ in pairs}) < 3:
            continue
        pairs.sort()
        line = _fit_line(pairs, f"{err_name} vs p | method={method} "
                                f"domain={domain} k={k!r} h={h!r}")
        if line:
            lines.append(line)
    for (method, domain, p), pairs in sorted(k_groups.items()):
        if len({x for x, _ in pairs}) < 3:
            continue
        pairs.sort()
        line = _fit_line(pairs, f"gamma_n vs k | method={method} "
                                f"domain={domain} p={p}")
        if line:
            lines.append(line)
    return lines


def run_config(cfg, echo=print):
    """Execute a built config: write its CSV, report slopes, return rows."""
    tasks = expand_runs(cfg)
    rows, failed = execute_runs(cfg, tasks)
    text = rows_to_csv_text(rows)
    out_path = cfg["out"]
    out_dir = os.path.dirname(out_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        fh.write(text)
    echo(f"wrote {len(rows)} rows to {out_path}")
    for line in series_slopes(rows):
        echo(line)
    return rows, (3 if failed else 0)


# -- commands ---------------------------------------------------------------------


def cmd_run(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: cannot read '{path}': {exc}", file=sys.stderr)
        return 2
    try:
        cfg = build_config(parse_config_text(text))
        _worker_count(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _, code = run_config(cfg)
    return code


def cmd_preset(name, out_dir):
    if name not in PRESETS:
        print(f"config error: key 'preset': unknown preset '{name}'",
              file=sys.stderr)
        return 2
    try:
        cfg = build_config({"preset": name})
        _worker_count(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cfg["out"] = os.path.join(out_dir, f"{name}.csv")
    _, code = run_config(cfg)
    return code


def cmd_list_presets():
    width = max(len(name) for name in PRESETS)
    for name in PRESETS:
        runtime, desc = PRESET_INFO[name]
        print(f"{name:<{width}}  [{runtime:<7}]  {desc}")
    return 0


def cmd_mesh_dump(domain_name, h, grade):
    builders = {
        "interval": meshing.unit_interval,
        "square": meshing.unit_square,
        "lshape": meshing.l_shape,
    }
    if domain_name not in builders:
        print(f"config error: key 'domain': '{domain_name}' is not one of "
              f"{sorted(builders)}", file=sys.stderr)
        return 2
    try:
        h = float(h)
        if h <= 0:
            raise ValueError
    except ValueError:
        print(f"config error: key 'h': expected a positive number, "
              f"got '{h}'", file=sys.stderr)
        return 2
    domain = builders[domain_name]()
    mesh = meshing.triangulate(domain, h)
    if grade:
        try:
            sigma_text, layers_text = grade.split(",")
            sigma = float(sigma_text)
            layers = int(layers_text)
        except ValueError:
            print("config error: key 'grade': expected 'sigma,layers'",
                  file=sys.stderr)
            return 2
        corner = 0.0 if domain.dim == 1 else (0.0, 0.0)
        try:
            mesh = meshing.geometric_refine(mesh, [corner], sigma, layers)
        except ValueError as exc:
            print(f"config error: key 'grade': {exc}", file=sys.stderr)
            return 2
    sys.stdout.write(meshing.mesh_to_text(mesh))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="helmholtz",
        description="Experiment harness for Helmholtz discretization "
                    "studies at large wavenumber.")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a key-value config file")
    p_run.add_argument("config")

    p_preset = sub.add_parser("preset", help="run a named preset")
    p_preset.add_argument("name")
    p_preset.add_argument("--out", default=".",
                          help="output directory for <name>.csv")

    sub.add_parser("list-presets", help="list available presets")

    p_mesh = sub.add_parser("mesh-dump",
                            help="triangulate a domain and print the mesh")
    p_mesh.add_argument("domain")
    p_mesh.add_argument("h")
    p_mesh.add_argument("--grade", default=None, metavar="SIGMA,LAYERS")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "preset":
        return cmd_preset(args.name, args.out)
    if args.command == "list-presets":
        return cmd_list_presets()
    if args.command == "mesh-dump":
        return cmd_mesh_dump(args.domain, args.h, args.grade)
    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
