"""Command-line interface.

Every command resolves its arguments into a canonical ``inputs`` record (random
choices already drawn), runs a pure function of that record, and prints a JSON
report holding both.  ``replay`` re-runs a report's inputs and checks that the
outputs agree bit for bit.

Exit codes: 0 ran (pass/fail is in the JSON), 2 input error, 3 evaluation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .divisor import FlowFrame, divisor_identity_residual, upsi_residual
from .errors import InvalidPeriodMatrix, ThetaKummerError
from .kummer import (
    Gamma00Instance,
    bilinear_residual,
    gamma00_residual,
    semidegenerate_residual,
    trisecant_residual,
)
from .scenarios import (
    genus2_pipeline,
    make_rng,
    random_cell_point,
    random_direction,
    sample_siegel,
    scan_min_residual,
)
from .theta import PeriodMatrix, default_tol, theta_char_eval, theta_eval

DEFAULT_THRESHOLD = 1e-7


class InputError(Exception):
    pass


# -- serialisation ---------------------------------------------------------

def enc(x):
    """JSON-ready form: complex -> [re, im], arrays -> nested lists."""
    if isinstance(x, dict):
        return {k: enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [enc(v) for v in x]
    if isinstance(x, np.ndarray):
        return enc(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def dec_complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InputError(f"not a complex number: {x!r}")


def dec_vector(x) -> np.ndarray:
    if not isinstance(x, list):
        raise InputError(f"not a complex vector: {x!r}")
    return np.array([dec_complex(v) for v in x], dtype=complex)


def pm_to_json(pm: PeriodMatrix) -> dict:
    return {"g": pm.g, "re": pm.B.real.tolist(), "im": pm.B.imag.tolist()}


def pm_from_json(d) -> PeriodMatrix:
    try:
        g = int(d["g"])
        re = np.array(d["re"], dtype=float)
        im = np.array(d["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed period matrix: {exc}") from exc
    if re.shape != (g, g) or im.shape != (g, g):
        raise InputError(f"period matrix arrays must be {g}x{g}")
    try:
        return PeriodMatrix.from_parts(re, im)
    except InvalidPeriodMatrix as exc:
        raise InputError(str(exc)) from exc


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


# -- command-line parsing helpers -----------------------------------------

def parse_complex(s: str) -> complex:
    t = s.strip().replace(" ", "").replace("I", "j").replace("i", "j")
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    t = t.replace("+j", "+1j").replace("-j", "-1j")
    if t.startswith("j"):
        t = "1" + t
    try:
        return complex(t)
    except ValueError as exc:
        raise InputError(f"cannot parse complex number {s!r}") from exc


def parse_vector(s: str, g: int) -> np.ndarray:
    s = s.strip()
    if s.startswith("e") and s[1:].isdigit():
        k = int(s[1:])
        if not 1 <= k <= g:
            raise InputError(f"unit vector {s} out of range for g={g}")
        return np.eye(g, dtype=complex)[k - 1]
    v = np.array([parse_complex(p) for p in s.split(",")], dtype=complex)
    if v.shape != (g,):
        raise InputError(f"vector {s!r} has {v.size} entries, expected {g}")
    return v


def parse_vectors(s: str, g: int) -> list[np.ndarray]:
    return [parse_vector(p, g) for p in s.split(";") if p.strip()]


def resolve_pm(args) -> PeriodMatrix:
    if getattr(args, "pm", None):
        return pm_from_json(read_json(args.pm))
    if getattr(args, "sample", None):
        try:
            g, seed, scale = args.sample.split(",")
            return sample_siegel(int(g), int(seed), float(scale))
        except (ValueError, InvalidPeriodMatrix) as exc:
            raise InputError(f"bad --sample {args.sample!r}: {exc}") from exc
    raise InputError("one of --pm or --sample is required")


# -- pure runners: inputs dict -> outputs dict ----------------------------

def run_theta(inp: dict) -> dict:
    pm = pm_from_json(inp["pm"])
    z = dec_vector(inp["z"])
    dirs = [dec_vector(d) for d in inp["deriv"]]
    if inp["char"] is None:
        v = theta_eval(pm, z, dirs, inp["tol"])
    else:
        v = theta_char_eval(pm, inp["char"], z, dirs, inp["tol"])
    return {"value": enc(v.value), "tail_bound": v.tail_bound, "scale": v.scale, "radius": v.radius}


IDENTITIES = {
    "bilinear": "theta(z+Z) theta(z-Z) = K(z) . K(Z)",
    "gamma00": "K(P) = c K(0) + d_U d_V K(0)",
    "trisecant": "K((p+p1-p2-p3)/2), K((p+p2-p3-p1)/2), K((p+p3-p1-p2)/2) linearly dependent",
    "semidegenerate": "K((p+p1-2q)/2), K((p-p1)/2), d_U K((p-p1)/2) linearly dependent",
    "divisor-identity": "theta_UU theta(z-P) theta(z+P) = theta_U [theta_U(z-P) theta(z+P) + theta_U(z+P) theta(z-P)] on theta = 0",
    "upsi": "(c + u - T) psi = 0 with tau = theta(Ux+Vy+Pt+Z), u = 2 d_x d_y log tau, psi = tau(t)/tau(t-1)",
}


def run_check(inp: dict) -> dict:
    kind = inp["identity"]
    pm = pm_from_json(inp["pm"])
    tol = inp["tol"]
    pts = [dec_vector(p) for p in inp.get("points", [])]
    if kind == "bilinear":
        r = bilinear_residual(pm, pts[0], pts[1], tol)
    elif kind == "gamma00":
        inst = Gamma00Instance(pm, dec_vector(inp["P"]), dec_vector(inp["U"]), dec_vector(inp["V"]), dec_complex(inp["c"]))
        r = gamma00_residual(inst, tol)
    elif kind == "trisecant":
        r = trisecant_residual(pm, *pts, tol=tol)
    elif kind == "semidegenerate":
        r = semidegenerate_residual(pm, *pts, dec_vector(inp["U"]), tol)
    elif kind == "divisor-identity":
        r = divisor_identity_residual(pm, pts[0], dec_vector(inp["U"]), dec_vector(inp["P"]), tol)
    elif kind == "upsi":
        frame = FlowFrame(pm, dec_vector(inp["U"]), dec_vector(inp["V"]), dec_vector(inp["P"]),
                          dec_vector(inp["Z"]), dec_complex(inp["c"]))
        x, y, t = dec_vector(inp["xyt"])
        r = upsi_residual(frame, x, y, t, tol)
    else:
        raise InputError(f"unknown identity {kind!r}")
    return {
        "residual": r,
        "status": "pass" if r < inp["threshold"] else "fail",
        "identity": IDENTITIES[kind],
    }


def instance_to_json(inst: Gamma00Instance) -> dict:
    return {"pm": pm_to_json(inst.pm), "P": enc(inst.P), "U": enc(inst.U), "V": enc(inst.V), "c": enc(inst.c)}


def run_pipeline(inp: dict) -> dict:
    pm = pm_from_json(inp["pm"])
    if inp["mode"] == "g2":
        rep = genus2_pipeline(pm, inp["seed"], inp["tol"])
        f = rep.frame
        return {
            "z1": enc(rep.z1.z), "z2": enc(rep.z2.z), "U": enc(rep.U), "V": enc(rep.V), "P": enc(rep.P),
            "fit": {"c": enc(rep.fit.c), "b": enc(rep.fit.b), "rel_residual": rep.fit.rel_residual},
            "residuals": rep.residuals,
            "status": "pass" if max(rep.residuals.values()) < inp["threshold"] else "fail",
            "instance": instance_to_json(rep.instance),
            "frame": {"pm": pm_to_json(pm), "U": enc(f.U), "V": enc(f.V), "P": enc(f.P), "Z": enc(f.Z), "c": enc(f.c)},
            "samples": enc(rep.samples),
            "notes": rep.notes,
        }
    if inp["mode"] == "scan":
        starts = [tuple(dec_vector(v) for v in s) for s in inp.get("starts", [])]
        rep = scan_min_residual(pm, inp["iters"], inp["seed"], inp["tol"], starts=starts)
        return {
            "best_residual": rep.best_residual,
            "best_instance": instance_to_json(rep.best_instance) if rep.best_instance else None,
            "iterations": rep.iterations,
            "starts": rep.starts,
            "label": rep.label,
        }
    raise InputError(f"unknown mode {inp['mode']!r}")


RUNNERS = {"theta": run_theta, "check": run_check, "pipeline": run_pipeline}


def make_report(command: str, inputs: dict) -> dict:
    outputs = RUNNERS[command](inputs)
    return {
        "command": command,
        "version": __version__,
        "seed": inputs.get("seed"),
        "tolerances": {"tol": inputs["tol"], "threshold": inputs.get("threshold")},
        "inputs": enc(inputs),
        "outputs": enc(outputs),
    }


# -- argument resolution ---------------------------------------------------

def _tol(args, pm):
    return args.tol if args.tol is not None else default_tol(pm.g)


def inputs_theta(args) -> dict:
    pm = resolve_pm(args)
    if args.z is None:
        raise InputError("--z is required")
    z = parse_vector(args.z, pm.g)
    char = None
    if args.char is not None:
        bits = args.char.replace(",", "").strip()
        if len(bits) != pm.g or set(bits) - {"0", "1"}:
            raise InputError(f"--char must be {pm.g} bits, got {args.char!r}")
        char = [int(b) for b in bits]
    deriv = parse_vectors(args.deriv, pm.g) if args.deriv else []
    if len(deriv) > (3 if char is None else 2):
        raise InputError("too many derivative directions")
    return {"pm": pm_to_json(pm), "z": enc(z), "char": char, "deriv": enc(deriv), "tol": _tol(args, pm)}


_NPOINTS = {"bilinear": 2, "trisecant": 4, "semidegenerate": 3, "divisor-identity": 1}


def _load_instance(path, key):
    d = read_json(path)
    if "outputs" in d:
        d = d["outputs"]
    if key in d:
        d = d[key]
    if "pm" not in d:
        raise InputError(f"{path} holds no {key}")
    return d


def inputs_check(args) -> dict:
    kind = args.identity
    if args.instance:
        src = _load_instance(args.instance, "frame" if kind == "upsi" else "instance")
        pm = pm_from_json(src["pm"])
    else:
        src = {}
        pm = resolve_pm(args)
    g = pm.g
    rng = make_rng(args.seed)
    inp = {"identity": kind, "pm": pm_to_json(pm), "tol": _tol(args, pm), "threshold": args.threshold, "seed": args.seed}

    def vec(name, default):
        flag = getattr(args, name, None)
        if flag:
            return enc(parse_vector(flag, g))
        if name in src:
            return src[name]
        return enc(default())

    if kind in _NPOINTS:
        n = _NPOINTS[kind]
        pts = parse_vectors(args.points, g) if args.points else [random_cell_point(pm, rng) for _ in range(n)]
        if len(pts) != n:
            raise InputError(f"{kind} needs {n} points, got {len(pts)}")
        inp["points"] = enc(pts)
    if kind in ("gamma00", "semidegenerate", "divisor-identity", "upsi"):
        inp["U"] = vec("U", lambda: random_direction(g, rng))
    if kind in ("gamma00", "upsi"):
        inp["V"] = vec("V", lambda: random_direction(g, rng))
    if kind in ("gamma00", "divisor-identity", "upsi"):
        inp["P"] = vec("P", lambda: random_cell_point(pm, rng))
    if kind in ("gamma00", "upsi"):
        if args.c is not None:
            inp["c"] = enc(parse_complex(args.c))
        elif "c" in src:
            inp["c"] = src["c"]
        else:
            inp["c"] = enc(complex(rng.normal(), rng.normal()))
    if kind == "upsi":
        inp["Z"] = vec("Z", lambda: random_cell_point(pm, rng))
        if args.points:
            xyt = [parse_complex(p) for p in args.points.split(",")]
            if len(xyt) != 3:
                raise InputError("upsi needs --points x,y,t")
        else:
            scale = [np.linalg.norm(dec_vector(inp["U"])), np.linalg.norm(dec_vector(inp["V"])), 1.0]
            xyt = list((rng.uniform(-0.5, 0.5, 3) + 1j * rng.uniform(-0.5, 0.5, 3)) / scale)
        inp["xyt"] = enc(xyt)
    return inp


def inputs_pipeline(args) -> dict:
    pm = resolve_pm(args)
    inp = {"mode": args.mode, "pm": pm_to_json(pm), "seed": args.seed, "tol": _tol(args, pm),
           "threshold": args.threshold}
    if args.mode == "scan":
        if args.iters < 1:
            raise InputError("--iters must be at least 1")
        inp["iters"] = args.iters
        if args.start:
            d = read_json(args.start)
            out = d.get("outputs", d)
            # a pipeline report: reuse the exact triple its fit was computed from
            src = out if {"P", "U", "V", "fit"} <= out.keys() else _load_instance(args.start, "instance")
            inp["starts"] = [[src["P"], src["U"], src["V"]]]
    return inp


def run_replay(args) -> dict:
    rep = read_json(args.report)
    try:
        command, inputs, outputs = rep["command"], rep["inputs"], rep["outputs"]
    except KeyError as exc:
        raise InputError(f"not a run report: missing {exc}") from exc
    if command not in RUNNERS:
        raise InputError(f"unknown command {command!r}")
    again = enc(RUNNERS[command](inputs))
    same = json.dumps(again, sort_keys=True) == json.dumps(outputs, sort_keys=True)
    return {"command": "replay", "version": __version__, "replayed": command, "identical": same,
            "outputs": again}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="theta-kummer", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--pm", help="period matrix JSON file {g, re, im}")
        p.add_argument("--sample", help="sample a period matrix: g,seed,offdiag_scale")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("theta", help="evaluate theta or Theta[eps]")
    common(p)
    p.add_argument("--z", required=True, help='point, e.g. "0.1+0.2i,0.3"')
    p.add_argument("--char", help="characteristic bits, e.g. 01")
    p.add_argument("--deriv", help='directions separated by ";", e.g. "e1;1,1i"')

    p = sub.add_parser("check", help="residual of one identity")
    p.add_argument("identity", choices=sorted(IDENTITIES))
    common(p)
    p.add_argument("--instance", help="pipeline report or instance JSON supplying pm, P, U, V, c")
    for name in ("P", "U", "V", "Z"):
        p.add_argument(f"--{name}")
    p.add_argument("--c")
    p.add_argument("--points", help='points separated by ";" (upsi: "x,y,t")')
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    p = sub.add_parser("pipeline", help="genus-2 verification pipeline or residual scan")
    common(p)
    p.add_argument("--mode", choices=["g2", "scan"], default="g2")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--start", help="instance JSON used as the first scan start")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    p = sub.add_parser("replay", help="re-run a report's inputs and compare outputs")
    p.add_argument("report")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            report = run_replay(args)
        else:
            inputs = {"theta": inputs_theta, "check": inputs_check, "pipeline": inputs_pipeline}[args.command](args)
            report = make_report(args.command, inputs)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ThetaKummerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
