"""Command-line front end.

Every run is described by one JSON document (``--config``); individual keys
can be overridden with ``--set dotted.key=value``. Results go to ``--out``
(default stdout): JSON for single results, CSV for tables.
"""

import argparse
import copy
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, EvansError, LostRoot
from .evans import (Method, MethodConfig, contour_winding, evans_eval, secant_root,
                    square_contour)
from .manifold import PatchIndex

COMMANDS = ("eval", "scan", "winding", "root", "compare", "neutral", "profile")

DEFAULTS = {
    "problem": {"name": "boussinesq"},
    "method": {"method": "ggem-lg", "swap_tol": 2.0, "scaling": True, "blowup": 1e8},
    "lam": 0.1,
    "scan": {"kind": "line", "start": 0.0, "stop": 0.2, "num": 200},
    "winding": {"center": 0.155, "half_width": 0.05, "per_edge": 16, "max_depth": 12},
    "root": {"lam0": 0.14, "tol": 1e-10, "max_iter": 60},
    "compare": {"methods": ["riccati-rk", "co-rk"], "N": [128, 256, 512, 1024, 2048, 4096],
                "reference": 0.15543141},
    "neutral": {"eps": [0.014156, 0.014156, 1], "gamma_bracket": [0.66, 0.8], "lam0": [0.0016, -0.117],
                "gamma_tol": 1e-6, "max_jump": 0.05},
}

PROBLEM_DEFAULTS = {
    "boussinesq": {"c": 0.4, "ell": 8.0, "x_star": 0.0, "N": 512},
    "autocatalysis": {"delta": 0.1, "m": 9, "ell": 10.0, "anchor": -7.0, "x_star": -7.0, "N": 512},
    "ekman": {"Re": 140.0, "eps": 0.014156, "gamma": 0.70575, "ell": 10.0, "x_star": 0.0, "N": 500},
}


# ---------------------------------------------------------------- config


def parse_complex(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError("complex values as lists need [re, im]", value=list(value))
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"cannot parse complex number {value!r}") from None
    if isinstance(value, (int, float, complex)):
        return complex(value)
    raise ConfigError(f"cannot interpret {value!r} as a complex number")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path, overrides=()):
    """Defaults, then the file, then ``--set`` overrides."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", path=str(path)) from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, doc)
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set key {key!r} descends into a non-object")
        node[parts[-1]] = _parse_value(text)
    name = cfg["problem"].get("name")
    if name not in PROBLEM_DEFAULTS:
        raise ConfigError(f"unknown problem {name!r}", choices=sorted(PROBLEM_DEFAULTS))
    cfg["problem"] = _merge(PROBLEM_DEFAULTS[name], cfg["problem"])
    return cfg


def build_problem(params):
    name = params["name"]
    if name == "boussinesq":
        from .problems.boussinesq import boussinesq_problem
        return boussinesq_problem(float(params["c"]), float(params["ell"]))
    if name == "autocatalysis":
        from .problems.autocatalysis import autocat_problem, autocat_profile
        wave = autocat_profile(float(params["delta"]), int(params["m"]), anchor=float(params["anchor"]))
        return autocat_problem(wave=wave, ell=float(params["ell"]))
    from .problems.ekman import EkmanParams, ekman_problem
    return ekman_problem(EkmanParams(float(params["Re"]), float(params["eps"]), float(params["gamma"])),
                         float(params["ell"]))


def _patch(value, n):
    if value is None:
        return None
    return PatchIndex(tuple(int(i) - 1 for i in value), n)


def build_method(cfg, problem):
    m = cfg["method"]
    p = cfg["problem"]
    try:
        method = Method(m["method"])
    except ValueError:
        raise ConfigError(f"unknown method {m['method']!r}", choices=[x.value for x in Method]) from None
    extra = {"patch_minus": _patch(m.get("patch_minus"), problem.n),
             "patch_plus": _patch(m.get("patch_plus"), problem.n),
             "swap_tol": float(m["swap_tol"]), "scaling": bool(m["scaling"]),
             "blowup": float(m["blowup"])}
    x_star = float(m.get("x_star", p["x_star"]))
    if "N_minus" in m or "N_plus" in m:
        return MethodConfig(method, int(m.get("N_minus", 1)), int(m.get("N_plus", 1)), x_star, **extra)
    N = int(m.get("N", p["N"]))
    return MethodConfig.split(method, N, problem, x_star, **extra)


class Evaluator:
    """Picklable ``lam -> EvansValue`` for the configured problem."""

    def __init__(self, problem, config):
        self.problem = problem
        self.config = config

    def __call__(self, lam):
        if self.problem.name == "ekman":
            from .problems.ekman import evans_eval_ekman
            return evans_eval_ekman(self.problem, lam, self.config)
        return evans_eval(self.problem, lam, self.config)

    def log_value(self, lam):
        return self(lam).log_value

    def phase(self, lam):
        return self(lam).phase


class _ScanPoint:
    def __init__(self, evaluator):
        self.evaluator = evaluator

    def __call__(self, lam):
        try:
            v = self.evaluator(lam)
            return v.value, "pole_suspected" if v.diagnostics.get("pole_suspected") else ""
        except EvansError as exc:
            return complex(math.nan, math.nan), exc.code


class _Phase:
    def __init__(self, evaluator):
        self.evaluator = evaluator

    def __call__(self, lam):
        return self.evaluator(lam).phase


# ---------------------------------------------------------------- output


def _fmt(x):
    return format(float(x), ".17g")


def _complex_json(z):
    return [float(z.real), float(z.imag)]


class Output:
    def __init__(self, args, command):
        self.path = args.out
        self.header = not args.no_header
        self.command = command

    def _write(self, text):
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)

    def json(self, doc):
        self._write(json.dumps(doc, indent=2) + "\n")

    def csv(self, columns, rows):
        buf = io.StringIO()
        if self.header:
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            buf.write(f"# evans {self.command} {stamp}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, int, np.floating)) and not isinstance(v, bool)
                        else v for v in row])
        self._write(buf.getvalue())


# ---------------------------------------------------------------- commands


def _mapper(jobs):
    if jobs <= 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=jobs)
    return pool.map, pool


def cmd_eval(cfg, args, out):
    problem = build_problem(cfg["problem"])
    config = build_method(cfg, problem)
    lam = parse_complex(cfg["lam"])
    v = Evaluator(problem, config)(lam)
    out.json({"lam": _complex_json(lam), "D": _complex_json(v.value),
              "log_D": _complex_json(v.log_value), "method": config.method.value,
              "x_star": config.x_star, "N_minus": config.N_minus, "N_plus": config.N_plus,
              "diagnostics": _jsonable(v.diagnostics)})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return _complex_json(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, PatchIndex):
        return list(obj.one_based())
    return obj


def scan_points(scan):
    kind = scan.get("kind", "line")
    if kind == "line":
        a, b = parse_complex(scan["start"]), parse_complex(scan["stop"])
        num = int(scan["num"])
        return [a + (b - a) * t for t in np.linspace(0.0, 1.0, num)]
    if kind == "grid":
        re = np.linspace(*map(float, scan["re"][:2]), int(scan["re"][2]))
        im = np.linspace(*map(float, scan["im"][:2]), int(scan["im"][2]))
        return [complex(x, y) for y in im for x in re]
    if kind == "contour":
        verts = [parse_complex(v) for v in scan["vertices"]]
        verts.append(verts[0])
        per = int(scan.get("per_edge", 16))
        pts = [a + (b - a) * t for a, b in zip(verts[:-1], verts[1:]) for t in np.arange(per) / per]
        return pts + [verts[0]]
    raise ConfigError(f"unknown scan kind {kind!r}", choices=["line", "grid", "contour"])


def cmd_scan(cfg, args, out):
    problem = build_problem(cfg["problem"])
    config = build_method(cfg, problem)
    pts = scan_points(cfg["scan"])
    mapper, pool = _mapper(args.jobs)
    try:
        results = list(mapper(_ScanPoint(Evaluator(problem, config)), pts))
    finally:
        if pool:
            pool.shutdown()
    out.csv(["lam_re", "lam_im", "D_re", "D_im", "flags"],
            [(z.real, z.imag, d.real, d.imag, flag) for z, (d, flag) in zip(pts, results)])


def _contour(w):
    if "vertices" in w:
        return [parse_complex(v) for v in w["vertices"]]
    return square_contour(parse_complex(w["center"]), float(w["half_width"]))


def cmd_winding(cfg, args, out):
    problem = build_problem(cfg["problem"])
    config = build_method(cfg, problem)
    w = cfg["winding"]
    mapper, pool = _mapper(args.jobs)
    try:
        res = contour_winding(_Phase(Evaluator(problem, config)), _contour(w), int(w["per_edge"]),
                              int(w["max_depth"]), mapper)
    finally:
        if pool:
            pool.shutdown()
    out.json({"winding": res.winding, "residual": res.residual, "turns": res.total,
              "evaluations": res.evaluations, "unresolved": res.unresolved})


def _root(evaluator, r, lam0=None):
    lam1 = r.get("lam1")
    return secant_root(evaluator.log_value, parse_complex(r["lam0"]) if lam0 is None else lam0,
                       None if lam1 is None else parse_complex(lam1), float(r["tol"]), int(r["max_iter"]))


def cmd_root(cfg, args, out):
    problem = build_problem(cfg["problem"])
    config = build_method(cfg, problem)
    res = _root(Evaluator(problem, config), cfg["root"])
    out.json({"root": _complex_json(res.root), "iterations": res.iterations,
              "trace": [_complex_json(z) for z in res.trace]})


def cmd_compare(cfg, args, out):
    problem = build_problem(cfg["problem"])
    comp = cfg["compare"]
    ref = parse_complex(comp["reference"]) if comp.get("reference") is not None else None
    rows = []
    for name in comp["methods"]:
        for N in comp["N"]:
            local = copy.deepcopy(cfg)
            local["method"]["method"] = name
            local["method"]["N"] = int(N)
            local["method"].pop("N_minus", None)
            local["method"].pop("N_plus", None)
            config = build_method(local, problem)
            t0 = time.perf_counter()
            try:
                res = _root(Evaluator(problem, config), cfg["root"])
                root, note = res.root, ""
            except EvansError as exc:
                root, note = complex(math.nan, math.nan), exc.code
            elapsed = time.perf_counter() - t0
            err = abs(root - ref) if ref is not None else math.nan
            rows.append((name, int(N), root.real, root.imag, err, elapsed, note))
    out.csv(["method", "N", "root_re", "root_im", "error", "wall_time", "flags"], rows)


def _tracked_root(evaluator, seed, r, max_jump):
    try:
        res = _root(evaluator, r, lam0=seed)
    except EvansError as exc:
        raise LostRoot("root tracking failed", seed=seed, cause=exc.code) from None
    if abs(res.root - seed) > max_jump:
        raise LostRoot("tracked root jumped away from its seed", seed=seed, root=res.root)
    return res.root


def cmd_neutral(cfg, args, out):
    from .problems.ekman import EkmanParams, ekman_problem
    p = cfg["problem"]
    if p["name"] != "ekman":
        raise ConfigError("neutral curves are defined for the ekman problem only")
    nc = cfg["neutral"]
    lo_e, hi_e, num = float(nc["eps"][0]), float(nc["eps"][1]), int(nc["eps"][2])
    g_lo, g_hi = map(float, nc["gamma_bracket"])
    tol = float(nc["gamma_tol"])
    max_jump = float(nc["max_jump"])
    seed = parse_complex(nc["lam0"])
    rows = []
    for eps in np.linspace(lo_e, hi_e, num):
        def growth(gamma, seed_):
            problem = ekman_problem(EkmanParams(float(p["Re"]), float(eps), gamma), float(p["ell"]))
            ev = Evaluator(problem, build_method(cfg, problem))
            return _tracked_root(ev, seed_, cfg["root"], max_jump)

        r_lo = growth(g_lo, seed)
        r_hi = growth(g_hi, r_lo)
        if (r_lo.real > 0) == (r_hi.real > 0):
            raise LostRoot("growth rate does not change sign over the gamma bracket",
                           eps=float(eps), low=r_lo, high=r_hi)
        a, b, ra = g_lo, g_hi, r_lo
        while b - a > tol:
            mid = 0.5 * (a + b)
            rm = growth(mid, ra)
            if (rm.real > 0) == (ra.real > 0):
                a, ra = mid, rm
            else:
                b = mid
        rows.append((float(eps), 0.5 * (a + b), ra.real, ra.imag))
        seed = ra
    out.csv(["eps", "gamma", "lam_re", "lam_im"], rows)


def cmd_profile(cfg, args, out):
    from .problems.autocatalysis import autocat_profile
    p = cfg["problem"]
    if p["name"] != "autocatalysis":
        raise ConfigError("profile is defined for the autocatalysis problem only")
    wave = autocat_profile(float(p["delta"]), int(p["m"]), anchor=float(p["anchor"]))
    step = max(1, int(p.get("stride", 10)))
    idx = range(0, wave.mesh.size, step)
    out.csv(["x", "u", "v", "u_x", "v_x", "c"],
            [(wave.mesh[i], *wave.values[:, i], wave.c) for i in idx])


HANDLERS = {"eval": cmd_eval, "scan": cmd_scan, "winding": cmd_winding, "root": cmd_root,
            "compare": cmd_compare, "neutral": cmd_neutral, "profile": cmd_profile}


def build_parser():
    parser = argparse.ArgumentParser(prog="evans", description="Evans-function computations on Grassmannians")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run description")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted key, JSON value)")
    parser.add_argument("--out", default="-", help="output path (default: stdout)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for scans and contours")
    parser.add_argument("--no-header", action="store_true", help="omit the timestamp comment in CSV output")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        build_parser().error("--jobs must be >= 1")
    try:
        cfg = load_config(args.config, args.set)
        HANDLERS[args.command](cfg, args, Output(args, args.command))
    except EvansError as exc:
        sys.stderr.write(json.dumps(exc.envelope()) + "\n")
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        err = ConfigError(f"invalid configuration: {exc}")
        sys.stderr.write(json.dumps(err.envelope()) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
