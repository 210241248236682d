"""Command-line front end: ``cone-exit classify | compare | map``.

Every option can also come from a ``key = value`` config file passed with
``--config``; flags override the file, the file overrides defaults. The
fully resolved configuration is written into every report.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, fields

import numpy as np

from .asymptotics import (
    ALPHA_FORM,
    AsymptoticLaw,
    alpha_label,
    asymptotic_law,
    halfline_law,
    ratio_diagnostic,
    weyl_interior_limit,
)
from .errors import ConeExitError, DomainError, QuadratureError, SeriesNotConverged
from .geometry import (
    ANGLE_TOL,
    Regime,
    Wedge,
    classify_regime,
    polar_membership,
    project_onto_cone,
    regime_boundary_distance,
)
from .kernel import KernelSpec
from .montecarlo import McConfig, mc_survival
from .spectral import SeriesTolerance
from .survival import (
    QuadratureSpec,
    survival_halfline,
    survival_quarter,
    survival_wedge_exact,
)

SCHEMA = "# cone-exit schema v1"
PROXIMITY_RAD = 1e-6

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_UNCONVERGED = 3

DOMAINS = ("wedge", "quarter", "halfline", "weyl")
METHODS = ("exact", "asym", "mc")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise DomainError(f"expected a comma-separated list of numbers, got {text!r}")


def _words(text):
    if isinstance(text, (list, tuple)):
        return tuple(str(v) for v in text)
    return tuple(p.strip().lower() for p in str(text).split(",") if p.strip())


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"expected a boolean, got {text!r}")


def _radians(text):
    v = str(text).strip().lower()
    if v.endswith(("deg", "°")) or "degree" in v:
        raise DomainError(f"angles are taken in radians only, got {text!r}")
    try:
        return float(v)
    except ValueError:
        raise DomainError(f"expected an angle in radians, got {text!r}")


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return _radians(text)


def _opt_int(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return int(text)


@dataclass(frozen=True)
class RunConfig:
    domain: str = "wedge"
    beta: float | None = None
    rotation: float = 0.0
    dim: int = 2
    drift: tuple = (0.0, 0.0)
    start: tuple = ()
    t: tuple = (1.0,)
    methods: tuple = ("exact", "asym")
    angle_tol: float = ANGLE_TOL
    form: str = "time"
    radial_nodes: int = 256
    angular_nodes: int = 128
    cutoff_sigmas: float = 12.0
    rel_tol: float = 1e-12
    max_terms: int = 10**6
    truncation: int | None = None
    paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    bridge: bool = True
    chunk: int = 2**14
    mc_sigmas: float = 4.0
    radius: float = 2.0
    resolution: int = 8
    angles: int = 72
    format: str = "csv"
    output: str = "-"

    def to_dict(self):
        return {f.name: _jsonable(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: CONVERTERS[k](v) for k, v in data.items()})

    def wedge(self):
        if self.domain == "quarter":
            return Wedge(math.pi / 2.0, self.rotation)
        if self.beta is None:
            raise DomainError("--beta is required for the wedge domain")
        return Wedge(self.beta, self.rotation)

    def quad(self):
        return QuadratureSpec(self.radial_nodes, self.angular_nodes, self.cutoff_sigmas)

    def kernel(self):
        return KernelSpec(
            truncation=self.truncation, tol=SeriesTolerance(self.rel_tol, self.max_terms)
        )

    def mc(self):
        return McConfig(self.paths, self.dt, self.seed, self.bridge, self.chunk)


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


CONVERTERS = {
    "domain": lambda v: str(v).strip().lower(),
    "beta": _opt_float,
    "rotation": _radians,
    "dim": int,
    "drift": _floats,
    "start": _floats,
    "t": _floats,
    "methods": _words,
    "angle_tol": float,
    "form": lambda v: str(v).strip().lower(),
    "radial_nodes": int,
    "angular_nodes": int,
    "cutoff_sigmas": float,
    "rel_tol": float,
    "max_terms": int,
    "truncation": _opt_int,
    "paths": int,
    "dt": float,
    "seed": int,
    "bridge": _bool,
    "chunk": int,
    "mc_sigmas": float,
    "radius": float,
    "resolution": int,
    "angles": int,
    "format": lambda v: str(v).strip().lower(),
    "output": str,
}


def read_config_file(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def resolve_config(flags, path=None):
    """Merge defaults, config file and explicit flags (highest precedence)."""
    merged = {}
    if path:
        merged.update(read_config_file(path))
    merged.update({k: v for k, v in flags.items() if v is not None})
    cfg = RunConfig.from_dict(merged)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.domain not in DOMAINS:
        raise DomainError(f"domain must be one of {DOMAINS}, got {cfg.domain!r}")
    if cfg.format not in ("csv", "json", "text"):
        raise DomainError(f"format must be csv, json or text, got {cfg.format!r}")
    if cfg.form not in ("time", "scaled"):
        raise DomainError(f"form must be time or scaled, got {cfg.form!r}")
    bad = [m for m in cfg.methods if m not in METHODS]
    if bad:
        raise DomainError(f"unknown methods {bad}; choose from {METHODS}")
    if not cfg.angle_tol >= 0.0:
        raise DomainError("angle_tol must be non-negative")
    if any(not h > 0.0 for h in cfg.t):
        raise DomainError("horizons must be positive")
    if cfg.resolution < 1 or cfg.angles < 4:
        raise DomainError("map needs resolution >= 1 and angles >= 4")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--domain", choices=DOMAINS)
    p.add_argument("--beta", help="wedge opening angle in radians")
    p.add_argument("--rotation", help="angle of the lower edge in radians")
    p.add_argument("--dim", type=int, help="Weyl chamber dimension")
    p.add_argument("--drift", help="drift vector, comma separated")
    p.add_argument("--angle-tol", dest="angle_tol", type=float, help="edge-membership tolerance (radians)")
    p.add_argument("--format", choices=("csv", "json", "text"))
    p.add_argument("--output", "-o", help="output path ('-' for stdout)")


def build_parser():
    parser = _Parser(prog="cone-exit", description="Survival of drifted Brownian motion in cones.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="regime, exponents and nearest points of a drift")
    _add_common(p)

    p = sub.add_parser("compare", help="exact, asymptotic and Monte Carlo values side by side")
    _add_common(p)
    p.add_argument("--start", help="start point, comma separated")
    p.add_argument("--t", help="horizons, comma separated")
    p.add_argument("--methods", help="two or more of exact,asym,mc")
    p.add_argument("--form", choices=("time", "scaled"))
    p.add_argument("--radial-nodes", dest="radial_nodes", type=int)
    p.add_argument("--angular-nodes", dest="angular_nodes", type=int)
    p.add_argument("--cutoff-sigmas", dest="cutoff_sigmas", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--max-terms", dest="max_terms", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--bridge", help="bridge correction on/off")
    p.add_argument("--chunk", type=int)
    p.add_argument("--mc-sigmas", dest="mc_sigmas", type=float, help="allowed exact/MC gap in standard errors")

    p = sub.add_parser("map", help="regime map over a polar grid of drifts")
    _add_common(p)
    p.add_argument("--radius", type=float, help="largest drift norm")
    p.add_argument("--resolution", type=int, help="number of drift norms")
    p.add_argument("--angles", type=int, help="number of grid directions")
    return parser


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _emit(cfg, columns, rows, verdict, extra=None):
    if cfg.format == "json":
        doc = {"config": cfg.to_dict(), "rows": rows, "verdict": verdict}
        if extra:
            doc.update(extra)
        text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    elif cfg.format == "csv":
        buf = io.StringIO()
        buf.write(SCHEMA + "\n")
        buf.write("# config " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
        buf.write(f"# verdict {verdict}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        lines = [f"verdict: {verdict}"]
        for r in rows:
            lines.append("  ".join(f"{c}={_fmt(r.get(c))}" for c in columns))
        text = "\n".join(lines) + "\n"
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)


def _drift_vec(cfg, dim):
    a = np.array(cfg.drift, dtype=float)
    if a.shape != (dim,):
        raise DomainError(f"drift must have {dim} components, got {len(cfg.drift)}")
    return a


def _proximity(wedge, a):
    if not np.any(a):
        return None
    d = regime_boundary_distance(wedge, a)
    if d < PROXIMITY_RAD:
        return f"drift lies {d:.3g} rad from a regime boundary; asymptotics change discontinuously there"
    return None


def cmd_classify(cfg):
    wedge = cfg.wedge()
    a = _drift_vec(cfg, 2)
    regime = classify_regime(wedge, a, cfg.angle_tol)
    proj = project_onto_cone(wedge, a, cfg.angle_tol)
    coef, const = ALPHA_FORM[regime]
    warning = _proximity(wedge, a)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    row = {
        "beta": wedge.beta,
        "a1": float(a[0]),
        "a2": float(a[1]),
        "regime": regime.letter,
        "polar": polar_membership(wedge, a, cfg.angle_tol).value,
        "gamma": proj.gamma,
        "alpha": _alpha(wedge, regime),
        "alpha_form": alpha_label(coef, const),
        "distance": proj.distance,
        "minimizers": ";".join(f"{_fmt(float(p[0]))} {_fmt(float(p[1]))}" for p in proj.minimizers),
        "warning": warning or "",
    }
    cols = list(row)
    _emit(cfg, cols, [row], "ok")
    return EXIT_OK


def _alpha(wedge, regime):
    coef, const = ALPHA_FORM[regime]
    return float(coef) * math.pi / wedge.beta + float(const)


def map_drifts(wedge, radius, resolution, n_angles):
    """Polar grid of drifts symmetric about the bisector, plus the boundary rays."""
    radii = [radius * (k + 1) / resolution for k in range(resolution)]
    rays = [wedge.beta / 2.0 + 2.0 * math.pi * m / n_angles for m in range(n_angles)]
    special = [0.0, wedge.beta]
    if wedge.beta <= math.pi:
        special += [wedge.beta + math.pi / 2.0, -math.pi / 2.0]
    out = [("origin", np.zeros(2))]
    for kind, angles in (("grid", rays), ("ray", special)):
        for phi in angles:
            for r in radii:
                a = wedge.from_polar(r, phi)
                out.append((kind, a))
    return out


def cmd_map(cfg):
    wedge = cfg.wedge()
    rows = []
    for kind, a in map_drifts(wedge, cfg.radius, cfg.resolution, cfg.angles):
        regime = classify_regime(wedge, a, cfg.angle_tol)
        coef, const = ALPHA_FORM[regime]
        rows.append(
            {
                "kind": kind,
                "a1": float(a[0]),
                "a2": float(a[1]),
                "regime": regime.letter,
                "alpha": _alpha(wedge, regime),
                "alpha_form": alpha_label(coef, const),
                "gamma": project_onto_cone(wedge, a, cfg.angle_tol).gamma,
            }
        )
    cols = ["kind", "a1", "a2", "regime", "alpha", "alpha_form", "gamma"]
    _emit(cfg, cols, rows, "ok")
    return EXIT_OK


def _start_vec(cfg, dim):
    if not cfg.start:
        raise DomainError("--start is required")
    x = np.array(cfg.start, dtype=float)
    if x.shape != (dim,):
        raise DomainError(f"start point must have {dim} components, got {len(cfg.start)}")
    return x


def _compare_setup(cfg):
    """Return (mc domain, drift, start, exact(t) or None, law or None, warning)."""
    dom = cfg.domain
    warning = None
    if dom in ("wedge", "quarter"):
        wedge = cfg.wedge()
        a = _drift_vec(cfg, 2)
        x = _start_vec(cfg, 2)
        warning = _proximity(wedge, a)
        if dom == "quarter" and cfg.rotation == 0.0:
            exact = lambda t: survival_quarter(x, a, t)  # noqa: E731
        else:
            exact = lambda t: survival_wedge_exact(  # noqa: E731
                wedge, a, x, t, cfg.quad(), cfg.kernel(), cfg.form
            )
        law = asymptotic_law(wedge, a, x, cfg.kernel()) if "asym" in cfg.methods else None
        return wedge, a, x, exact, law, warning
    if dom == "halfline":
        a = _drift_vec(cfg, 1)
        x = _start_vec(cfg, 1)
        exact = lambda t: survival_halfline(x[0], a[0], t)  # noqa: E731
        law = halfline_law(x[0], a[0]) if "asym" in cfg.methods else None
        return "halfline", a, x, exact, law, None
    a = _drift_vec(cfg, cfg.dim)
    x = _start_vec(cfg, cfg.dim)
    if not np.all(np.diff(x) > 0.0):
        raise DomainError("Weyl start point must be strictly increasing")
    exact = None
    if cfg.dim == 2:
        s2 = math.sqrt(2.0)
        exact = lambda t: survival_halfline((x[1] - x[0]) / s2, (a[1] - a[0]) / s2, t)  # noqa: E731
    law = None
    if "asym" in cfg.methods:
        if not np.all(np.diff(a) > 0.0):
            raise DomainError("Weyl asymptotics are only available for interior drifts")
        law = AsymptoticLaw(Regime.INTERIOR, 0.0, 0.0, weyl_interior_limit(a, x))
    if "exact" in cfg.methods and exact is None:
        raise DomainError("exact values for Weyl chambers are available in dimension 2 only")
    return f"weyl:{cfg.dim}", a, x, exact, law, None


def cmd_compare(cfg):
    methods = set(cfg.methods)
    if len(methods) < 2:
        raise DomainError("compare needs at least two of exact, asym, mc")
    mc_domain, a, x, exact, law, warning = _compare_setup(cfg)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    horizons = list(cfg.t)
    rows = []
    failed = False
    for t in horizons:
        row = {"t": t}
        if "exact" in methods:
            v = exact(t)
            row["exact"] = v.p
            row["quad_error"] = v.est_quad_error
        if "asym" in methods:
            row["asym"] = law.value(t)
        if "mc" in methods:
            est = mc_survival(mc_domain, a, x, t, cfg.mc())
            row["mc"] = est.p_hat
            row["mc_std_err"] = est.std_err
        ref = row.get("exact", row.get("mc"))
        if "asym" in methods and ref is not None:
            row["ratio"] = math.exp(math.log(ref) - law.log_value(t)) if ref > 0.0 else 0.0
        if "exact" in methods and "mc" in methods:
            gap = abs(row["exact"] - row["mc"])
            allowed = cfg.mc_sigmas * row["mc_std_err"] + 3.0 * row["quad_error"] * row["exact"]
            row["mc_z"] = gap / row["mc_std_err"] if row["mc_std_err"] > 0.0 else (0.0 if gap == 0.0 else math.inf)
            row["ok"] = bool(gap <= allowed)
            failed |= not row["ok"]
        rows.append(row)

    trend = ""
    if "asym" in methods and len(horizons) >= 3:
        src = "exact" if "exact" in methods else "mc"
        lookup = {r["t"]: r[src] for r in rows}
        diag = ratio_diagnostic(law, lambda t: lookup[t], horizons)
        trend = diag.trend
        failed |= trend != "converging"
    for r in rows:
        r["trend"] = trend
    verdict = "fail" if failed else "pass"
    cols = ["t"] + [
        c
        for c in ("exact", "quad_error", "asym", "ratio", "mc", "mc_std_err", "mc_z", "ok", "trend")
        if any(c in r for r in rows)
    ]
    extra = {"law": _law_dict(law)} if law is not None else None
    _emit(cfg, cols, rows, verdict, extra)
    if failed:
        bad = [r["t"] for r in rows if r.get("ok") is False]
        msg = f"cross-check failed at t={bad}" if bad else f"ratio trend is {trend!r}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _law_dict(law):
    return {
        "regime": law.regime.letter,
        "gamma": law.gamma,
        "alpha": law.alpha,
        "alpha_form": alpha_label(*law.alpha_form),
        "prefactor": law.prefactor,
    }


COMMANDS = {"classify": cmd_classify, "compare": cmd_compare, "map": cmd_map}


_VALUE_FLAGS = ("--drift", "--start", "--beta", "--rotation", "--t")
_NEGATIVE = re.compile(r"^-\.?\d")


def _glue_negative_values(argv):
    """Turn ``--drift -1,-1`` into ``--drift=-1,-1`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _VALUE_FLAGS and nxt is not None and _NEGATIVE.match(nxt):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(flags, args.config)
        return COMMANDS[args.command](cfg)
    except (SeriesNotConverged, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConeExitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
