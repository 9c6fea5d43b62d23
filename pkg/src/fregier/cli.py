"""Command line driver: every experiment as a subcommand writing CSV, SVG and
JSON files.

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 documented degeneracy.
Diagnostics go to stderr; a short summary goes to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .conic_core import EllipseAxes, angle_at, ellipse_metrics, hpoint, point_residual
from .errors import (
    DegenerateInputError,
    GeometryError,
    InfiniteSolutionsError,
    NotAnEllipseError,
    NotPeriodicError,
    SamplingFailure,
)
from .figures import Canvas
from .fregier_envelope import (
    EnvelopeResult,
    area_ratio_sq,
    center_locus,
    fit_envelope,
    reverse_problem,
    tangent_angle,
    tangent_directions,
)
from .poncelet_billiard import circle_picture, conjecture_scan, orbit, phase_report
from .trilinear_frame import build_frame

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4

SCAN_COLUMNS = ["m_angle", "kx", "ky", "a1", "b1", "area", "tangent_angle"]
PHASE_COLUMNS = ["phase", "sum_cos2", "sum_area", "sum_diag2", "closure_defect"]
FORMATS = ("csv", "svg", "json")


class ConfigError(ValueError):
    pass


# ---- option handling -------------------------------------------------------

# name -> (type, default); shared by flags and --config keys
OPTIONS = {
    "a": (float, 2.0),
    "b": (float, 1.0),
    "theta": (float, math.pi / 3),
    "m_angle": (float, 0.7),
    "samples": (int, 48),
    "num_m": (int, None),
    "n": (str, None),
    "phases": (int, 32),
    "n_angle": (float, None),
    "l_angle": (float, None),
    "output": (str, None),
    "formats": (str, None),
}

COMMANDS = {
    "envelope": ("a", "b", "theta", "m_angle", "samples"),
    "area-scan": ("a", "b", "theta", "num_m", "samples"),
    "tangent-angle": ("a", "b", "theta", "num_m", "samples"),
    "locus": ("a", "b", "theta", "num_m", "samples"),
    "poncelet": ("a", "b", "n", "phases"),
    "conjecture": ("a", "b", "n", "phases"),
    "reverse": ("a", "b", "theta", "n_angle", "l_angle"),
}

DEFAULT_FORMATS = {
    "envelope": "svg,json",
    "area-scan": "csv,json",
    "tangent-angle": "csv,json",
    "locus": "csv,svg,json",
    "poncelet": "csv,svg,json",
    "conjecture": "csv,json",
    "reverse": "json",
}

DEFAULT_N = {"poncelet": "3", "conjecture": "4:8"}
DEFAULT_NUM_M = {"locus": 12}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fregier", description="Chord envelopes of ellipses and Poncelet experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMANDS.items():
        p = sub.add_parser(name)
        for key in keys:
            typ = OPTIONS[key][0]
            flag = "--" + key.replace("_", "-")
            aliases = [flag]
            if key == "n":
                aliases.append("--n-range")
            p.add_argument(*aliases, dest=key, type=typ, default=None)
        p.add_argument("-o", "--output", dest="output", default=None, help="output path prefix")
        p.add_argument("--formats", dest="formats", default=None, help="comma list of csv,svg,json")
        p.add_argument("--config", dest="config", default=None, help="JSON file with option values")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags, --config and defaults; a key set twice is an error."""
    keys = COMMANDS[args.command] + ("output", "formats")
    cfg = {k: getattr(args, k) for k in keys}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for raw, value in data.items():
            key = raw.replace("-", "_")
            if key not in keys:
                raise ConfigError(f"config key {raw!r} does not apply to {args.command}")
            if cfg[key] is not None:
                raise ConfigError(f"{raw!r} given both as a flag and in the config file")
            try:
                cfg[key] = OPTIONS[key][0](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {raw!r}: {value!r}") from exc
    for key in keys:
        if cfg[key] is None:
            cfg[key] = OPTIONS[key][1]
    if "num_m" in cfg and cfg["num_m"] is None:
        cfg["num_m"] = DEFAULT_NUM_M.get(args.command, 20)
    if "n" in cfg and cfg["n"] is None:
        cfg["n"] = DEFAULT_N[args.command]
    if cfg["formats"] is None:
        cfg["formats"] = DEFAULT_FORMATS[args.command]
    if cfg["output"] is None:
        cfg["output"] = "fregier_" + args.command.replace("-", "_")
    validate(args.command, cfg)
    return cfg


def parse_n(text: str) -> list[int]:
    """'3', '4:8' (inclusive) or '4,6,8'."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse n={text!r}") from exc
    if not values or min(values) < 3:
        raise ConfigError("n must be at least 3")
    return values


def validate(command: str, cfg: dict) -> None:
    for k in ("a", "b", "theta", "m_angle", "n_angle", "l_angle"):
        if k in cfg and not math.isfinite(cfg[k] if cfg[k] is not None else 0.0):
            raise ConfigError(f"{k} must be finite")
    if not cfg["a"] >= cfg["b"] > 0:
        raise ConfigError("need a >= b > 0")
    if "theta" in cfg and not 0 < cfg["theta"] < math.pi:
        raise ConfigError("theta must lie in (0, pi)")
    if "samples" in cfg and cfg["samples"] < 24:
        raise ConfigError("samples must be at least 24")
    if "num_m" in cfg and cfg["num_m"] < (8 if command == "locus" else 1):
        raise ConfigError("num-m too small")
    if "phases" in cfg and cfg["phases"] < 16:
        raise ConfigError("phases must be at least 16")
    if "n" in cfg:
        ns = parse_n(cfg["n"])
        if command == "poncelet" and len(ns) != 1:
            raise ConfigError("poncelet takes a single n")
    if command == "reverse" and (cfg["n_angle"] is None or cfg["l_angle"] is None):
        raise ConfigError("reverse needs --n-angle and --l-angle")
    fmts = [f for f in cfg["formats"].split(",") if f]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise ConfigError(f"unknown formats {bad}; choose from {', '.join(FORMATS)}")


# ---- writers ---------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: list[str], rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (int, float, np.floating, np.integer)) else v for v in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


class Outputs:
    def __init__(self, prefix: str, formats: str):
        self.prefix = prefix
        self.formats = set(formats.split(","))
        self.written: list[str] = []

    def write(self, kind: str, text: str, suffix: str = "") -> None:
        if kind not in self.formats:
            return
        path = Path(f"{self.prefix}{suffix}.{kind}")
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        self.written.append(str(path))


# ---- commands --------------------------------------------------------------


def _ellipse(cfg) -> EllipseAxes:
    return EllipseAxes((0.0, 0.0), cfg["a"], cfg["b"])


def _envelope_record(env: EnvelopeResult) -> dict:
    rec = {
        "classification": env.classification,
        "K": env.center,
        "residual_max": env.residual_max,
        "residual_mean": env.residual_mean,
        "theta": env.theta,
        "M": env.M,
    }
    if env.axes is not None:
        rec.update(a1=env.axes.a, b1=env.axes.b, tilt=env.axes.tilt, area=env.area, tangent_angle=tangent_angle(env))
    else:
        rec.update(a1=0.0, b1=0.0, tilt=0.0, area=0.0, tangent_angle=None)
    rec["conic_line_form"] = env.conic.normalized().m
    return rec


def _scan_rows(E: EllipseAxes, cfg) -> tuple[list, list]:
    rows, envs = [], []
    for k in range(cfg["num_m"]):
        t = 2 * math.pi * k / cfg["num_m"]
        env = fit_envelope(E, E.point(t), cfg["theta"], samples=cfg["samples"])
        rec = _envelope_record(env)
        ta = rec["tangent_angle"]
        rows.append([t, env.center[0], env.center[1], rec["a1"], rec["b1"], rec["area"], math.nan if ta is None else ta])
        envs.append(env)
    return rows, envs


def _spread(values) -> float:
    v = np.asarray(values, float)
    scale = abs(float(v.mean()))
    return float((v.max() - v.min()) / scale) if scale > 0 else float(v.max() - v.min())


def _envelope_figure(E: EllipseAxes, env: EnvelopeResult, title: str) -> str:
    cv = Canvas.fitting(E, title)
    for ch in env.chords[::2]:
        cv.line(ch.N, ch.L, stroke="#9ab", width=0.5)
    cv.ellipse(E, stroke="black")
    if env.axes is not None:
        cv.ellipse(env.axes, stroke="red", width=2.0)
        reach = 2.5 * E.a
        for d in tangent_directions(env):
            cv.line(env.M, env.M + reach * d, stroke="blue", width=1.0)
    cv.dot(env.M, "M")
    cv.dot(env.center, "K", color="red")
    return cv.render()


def cmd_envelope(cfg, out: Outputs) -> dict:
    E = _ellipse(cfg)
    env = fit_envelope(E, E.point(cfg["m_angle"]), cfg["theta"], samples=cfg["samples"])
    rec = _envelope_record(env)
    rec.update(a=cfg["a"], b=cfg["b"], m_angle=cfg["m_angle"])
    out.write("json", json_text(rec))
    cols = ["m_angle", "kx", "ky", "a1", "b1", "tilt", "area", "tangent_angle", "residual_max", "classification"]
    ta = rec["tangent_angle"]
    row = [cfg["m_angle"], env.center[0], env.center[1], rec["a1"], rec["b1"], rec["tilt"], rec["area"],
           math.nan if ta is None else ta, env.residual_max, env.classification]
    out.write("csv", csv_text(cols, [row]))
    out.write("svg", _envelope_figure(E, env, "chord envelope"))
    return {k: rec[k] for k in ("classification", "a1", "b1", "area", "residual_max")}


def _scan_summary(E, cfg, rows) -> dict:
    area = [r[5] for r in rows]
    ang = [r[6] for r in rows]
    theta = cfg["theta"]
    rho = build_frame(cfg["a"], cfg["b"]).rho
    k2 = area_ratio_sq(rho, theta)
    return {
        "a": cfg["a"],
        "b": cfg["b"],
        "theta": theta,
        "num_m": cfg["num_m"],
        "area_mean": float(np.mean(area)),
        "area_spread": _spread(area),
        "area_ratio": float(np.mean(area)) / E.area,
        "k2": k2,
        "sqrt_k2": math.sqrt(k2),
        "tangent_angle_expected": abs(math.pi - 2 * theta),
        "tangent_angle_max_dev": float(np.nanmax(np.abs(np.asarray(ang) - abs(math.pi - 2 * theta)))) if np.isfinite(ang).any() else None,
    }


def cmd_scan(cfg, out: Outputs) -> dict:
    E = _ellipse(cfg)
    rows, _ = _scan_rows(E, cfg)
    summary = _scan_summary(E, cfg, rows)
    out.write("csv", csv_text(SCAN_COLUMNS, rows))
    out.write("json", json_text(summary))
    return summary


def cmd_locus(cfg, out: Outputs) -> dict:
    E = _ellipse(cfg)
    rows, envs = _scan_rows(E, cfg)
    rep = center_locus(E, cfg["theta"], num_M=cfg["num_m"], offset=0.0)
    summary = _scan_summary(E, cfg, rows)
    summary.update(
        locus_classification=rep.classification,
        locus_center=rep.center,
        locus_center_offset=rep.center_offset,
        locus_conic=None if rep.conic is None else rep.conic.normalized().coeffs,
        point_locus=rep.point_locus,
    )
    out.write("csv", csv_text(SCAN_COLUMNS, rows))
    out.write("json", json_text(summary))
    cv = Canvas.fitting(E, "locus of envelope centers")
    cv.ellipse(E)
    for env in envs:
        if env.axes is not None:
            cv.ellipse(env.axes, stroke="#d88", width=0.6)
    if rep.classification == "ellipse":
        cv.ellipse(ellipse_metrics(rep.conic), stroke="red", width=2.0, dash="6,4")
    for c in rep.centers:
        cv.dot(c, color="red")
    out.write("svg", cv.render())
    return {k: summary[k] for k in ("locus_classification", "locus_center_offset", "area_spread")}


def _poncelet_figure(orb, title: str) -> str:
    cfg = orb.config
    R = cfg.R
    cv = Canvas(-R, R, -R, R, title)
    cv.circle((0.0, 0.0), R)
    cv.ellipse(cfg.caustic_axes, stroke="blue")
    V = np.vstack([orb.vertices, orb.vertices[:1]])
    cv.polyline(V, stroke="black", width=1.5)
    for r in orb.radii:
        cv.circle((0.0, 0.0), float(r), stroke="red", width=0.8)
    for i, P in enumerate(orb.vertices):
        cv.dot(P, f"P{i + 1}")
    return cv.render()


def _phase_rows(rep) -> list:
    return [
        [float(p), c, s, d, e]
        for p, c, s, d, e in zip(rep.phases, rep.sum_cos2, rep.sum_area, rep.sum_diag2, rep.closure_defects)
    ]


def _report_summary(rep) -> dict:
    return {
        "n": rep.n,
        "lam": rep.lam,
        "phases": len(rep.phases),
        "sum_cos2_mean": float(rep.sum_cos2.mean()),
        "sum_cos2_min": float(rep.sum_cos2.min()),
        "sum_cos2_max": float(rep.sum_cos2.max()),
        "spread": rep.spread,
        "spread_area": rep.spread_area,
        "spread_diag2": rep.spread_diag2,
        "supports_conjecture": rep.supports_conjecture,
        "max_closure_defect": float(rep.closure_defects.max()),
        "predicted_cos2": rep.predicted_cos2,
        "predicted_area": rep.predicted_area,
        "predicted_diag2": rep.predicted_diag2,
    }


def cmd_poncelet(cfg, out: Outputs) -> dict:
    (n,) = parse_n(cfg["n"])
    rep = phase_report(cfg["a"], cfg["b"], n, cfg["phases"])
    summary = _report_summary(rep)
    summary.update(a=cfg["a"], b=cfg["b"], rho=build_frame(cfg["a"], cfg["b"]).rho)
    out.write("csv", csv_text(PHASE_COLUMNS, _phase_rows(rep)))
    out.write("json", json_text(summary))
    orb = orbit(circle_picture(cfg["a"], cfg["b"], rep.lam), 0.0, n)
    out.write("svg", _poncelet_figure(orb, f"{n}-periodic Poncelet polygon"))
    return {k: summary[k] for k in ("n", "spread", "sum_cos2_mean", "predicted_cos2")}


def cmd_conjecture(cfg, out: Outputs) -> dict:
    reports = conjecture_scan(cfg["a"], cfg["b"], parse_n(cfg["n"]), cfg["phases"])
    cols = ["n", "lam", "sum_cos2_mean", "spread", "spread_area", "spread_diag2", "supports_conjecture"]
    rows = [[r.n, r.lam, float(r.sum_cos2.mean()), r.spread, r.spread_area, r.spread_diag2, str(r.supports_conjecture).lower()]
            for r in reports]
    out.write("csv", csv_text(cols, rows))
    phase_rows = [[r.n] + row for r in reports for row in _phase_rows(r)]
    out.write("csv", csv_text(["n"] + PHASE_COLUMNS, phase_rows), suffix="_phases")
    out.write("json", json_text({"a": cfg["a"], "b": cfg["b"], "reports": [_report_summary(r) for r in reports]}))
    return {f"spread_n{r.n}": r.spread for r in reports}


def cmd_reverse(cfg, out: Outputs) -> dict:
    E = _ellipse(cfg)
    N, L = E.point(cfg["n_angle"]), E.point(cfg["l_angle"])
    sols = reverse_problem(E, N, L, cfg["theta"])
    Ec = E.to_conic()
    records = [
        {
            "M": P,
            "m_angle": E.param_of(P) % (2 * math.pi),
            "angle_residual": abs(angle_at(P, N, L) - cfg["theta"]),
            "on_ellipse_residual": point_residual(Ec, hpoint(*P)),
        }
        for P in sols
    ]
    result = {"a": cfg["a"], "b": cfg["b"], "theta": cfg["theta"], "N": N, "L": L, "count": len(records), "solutions": records}
    out.write("json", json_text(result))
    out.write("csv", csv_text(["m_angle", "mx", "my", "angle_residual"],
                              [[r["m_angle"], r["M"][0], r["M"][1], r["angle_residual"]] for r in records]))
    return {"count": len(records)}


HANDLERS = {
    "envelope": cmd_envelope,
    "area-scan": cmd_scan,
    "tangent-angle": cmd_scan,
    "locus": cmd_locus,
    "poncelet": cmd_poncelet,
    "conjecture": cmd_conjecture,
    "reverse": cmd_reverse,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
        out = Outputs(cfg["output"], cfg["formats"])
        summary = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfiniteSolutionsError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (NotAnEllipseError, NotPeriodicError, SamplingFailure, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DegenerateInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GeometryError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for key in sorted(summary):
        val = summary[key]
        print(f"{key}: {fmt(val) if isinstance(val, (float, np.floating)) and val is not None else val}")
    for path in out.written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
