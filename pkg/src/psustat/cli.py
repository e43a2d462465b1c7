"""Command-line front end: ``psustat <command> [options]``.

Every report embeds the tool version and the fully resolved configuration.
Feeding a JSON report (or its ``config`` block) back through ``--config``
re-runs the same computation and reproduces the report bit for bit.

Exit codes: 0 success, 2 configuration error, 3 numeric or resource error.
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

from . import __version__
from . import cmeasure as cm
from . import group as gr
from . import gmeasure as gm
from . import moebius as mb
from . import stationarity as st
from . import transforms as tr
from . import walk as wk
from .errors import (AccuracyError, ConfigurationError, DomainError, EvaluationError,
                     PreconditionError, ResourceError)

COMMANDS = ("identities", "enumerate", "moments", "walk", "hitting", "residual", "drift",
            "borel-norms", "aleksandrov", "gap", "operator", "contour", "stolz", "iterate")
NOT_CONFIG = ("output", "config", "func")


# -- argument parsing ---------------------------------------------------------------

def _float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _complex(text):
    parts = [float(x) for x in str(text).split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected RE,IM")
    return parts


def _group_args(p):
    g = p.add_argument_group("group measure")
    g.add_argument("--preset", default="single-hyperbolic", choices=gr.PRESETS,
                   help="generator preset (default: %(default)s)")
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="preset parameter, repeatable (e.g. ell=3, n_generators=2)")
    g.add_argument("--generators", default=None, metavar="PATH",
                   help="generator-set JSON; overrides --preset")
    g.add_argument("--measure", default=None, metavar="PATH",
                   help="group-measure JSON; overrides the uniform measure on the generators")


def _nu_args(p, default="fixed-point"):
    g = p.add_argument_group("circle measure")
    g.add_argument("--nu", default=default,
                   help="lebesgue | fixed-point | point-mass:ANGLE | smooth | hitting | PATH.json "
                        "(default: %(default)s)")
    _walk_args(g, samples=10_000)


def _walk_args(g, samples=1000):
    g.add_argument("--seed", type=int, default=0, help="64-bit seed (default: %(default)s)")
    g.add_argument("--samples", type=int, default=samples, help="number of walks (default: %(default)s)")
    g.add_argument("--tol", type=float, default=1e-6, help="boundary tolerance (default: %(default)s)")
    g.add_argument("--max-steps", type=int, default=10_000, help="step cap (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psustat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"psustat {__version__}")
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="re-run from a JSON report or config (command taken from it)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, helptext):
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
        p.add_argument("--format", default="json", choices=("json", "csv"),
                       help="report format (default: %(default)s)")
        return p

    p = add("identities", "maximum defects of the Moebius identities on random samples")
    p.add_argument("--trials", type=int, default=1000, help="random samples (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="seed (default: %(default)s)")

    p = add("enumerate", "breadth-first enumeration of a group ball")
    _group_args(p)
    p.add_argument("--radius", type=int, default=3, help="word-length radius (default: %(default)s)")
    p.add_argument("--cap", type=int, default=gr.ELEMENT_CAP,
                   help="largest admissible ball size (default: %(default)s)")

    p = add("moments", "moment, Blaschke and weight-decay statistics of mu^{*n}")
    _group_args(p)
    p.add_argument("--power", type=int, default=1, help="convolution power n (default: %(default)s)")

    p = add("walk", "empirical escape rate and mean path statistics")
    _group_args(p)
    _walk_args(p)
    p.add_argument("--steps", type=int, default=100, help="path length n (default: %(default)s)")

    p = add("hitting", "empirical hitting measure")
    _group_args(p)
    _walk_args(p)

    p = add("residual", "functional-equation residual on a disk grid")
    _group_args(p)
    _nu_args(p)
    p.add_argument("--rmax", type=float, default=0.9, help="grid radius (default: %(default)s)")
    p.add_argument("--grid-size", type=int, default=32, help="angles per circle (default: %(default)s)")
    p.add_argument("--circles", type=int, default=8, help="number of circles (default: %(default)s)")

    p = add("drift", "drift constant l = sum mu(g) p_nu(g^{-1} 0)")
    _group_args(p)
    _nu_args(p)

    p = add("borel-norms", "H^p norms of the Borel series of mu^{*n}")
    _group_args(p)
    p.add_argument("--nmax", type=int, default=10, help="largest n (default: %(default)s)")
    p.add_argument("--p", type=float, default=1.0, help="Hardy exponent (default: %(default)s)")
    p.add_argument("--M", type=int, default=4096, help="minimum quadrature points (default: %(default)s)")

    p = add("aleksandrov", "(1 - p) ||f_nu||_p on a p-schedule")
    _group_args(p)
    _nu_args(p, default="point-mass:0")
    p.add_argument("--p", type=_float_list, default=[0.9, 0.95, 0.99],
                   help="comma-separated exponents in (0, 1) (default: 0.9,0.95,0.99)")

    p = add("gap", "boundary gap f(r e^{it}) - f(e^{it} / r)")
    _group_args(p)
    _nu_args(p, default="point-mass:0")
    p.add_argument("--r", type=float, default=0.999, help="radius (default: %(default)s)")
    p.add_argument("--M", type=int, default=4096, help="angle grid (default: %(default)s)")
    p.add_argument("--eps", type=float, default=None, help="vanishing threshold (default: 128 (1 - r))")

    p = add("operator", "finite section of T_mu or its adjoint")
    _group_args(p)
    p.add_argument("--K", type=int, default=16, help="truncation (default: %(default)s)")
    p.add_argument("--r0", type=float, default=0.5, help="extraction radius (default: %(default)s)")
    p.add_argument("--adjoint", action="store_true", help="build the adjoint section")

    p = add("contour", "contour charge of the residual of an entire test function")
    _group_args(p)
    p.add_argument("--center", type=_complex, default=None, metavar="RE,IM",
                   help="contour centre (default: g(INF) of the first atom)")
    p.add_argument("--radius", type=float, default=0.2, help="contour radius (default: %(default)s)")
    p.add_argument("--test-function", default="z2", choices=("0", "z", "z2"),
                   help="entire test function (default: %(default)s)")
    p.add_argument("--M", type=int, default=2048, help="trapezoid points (default: %(default)s)")

    p = add("stolz", "Stolz-angle coverage of an orbit")
    _group_args(p)
    p.add_argument("--orbit", default="ball", choices=("ball", "powers"),
                   help="ball orbit of 0, or powers g^n.0 of the first generator (default: %(default)s)")
    p.add_argument("--radius", type=int, default=8, help="ball radius or number of powers (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=2.0, help="aperture (default: %(default)s)")
    p.add_argument("--eps", type=float, default=0.05, help="approach scale (default: %(default)s)")
    p.add_argument("--grid", type=int, default=1024, help="boundary grid (default: %(default)s)")

    p = add("iterate", "Markov-operator iteration from an initial measure")
    _group_args(p)
    p.add_argument("--nu0", default="grid-uniform", choices=("grid-uniform", "lebesgue"),
                   help="initial measure (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=50, help="iteration cap (default: %(default)s)")
    p.add_argument("--iter-tol", type=float, default=1e-10, help="stopping distance (default: %(default)s)")
    p.add_argument("--K", type=int, default=64, help="band for the distance (default: %(default)s)")
    p.add_argument("--M", type=int, default=1024, help="grid size (default: %(default)s)")
    return parser


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _load_config(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if "config" in obj and isinstance(obj["config"], dict):
        obj = obj["config"]
    if obj.get("command") not in COMMANDS:
        raise ConfigurationError("config lacks a valid 'command'")
    return obj


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if known.config:
        cfg = _load_config(known.config)
        cmd = cfg["command"]
        if rest and rest[0] in COMMANDS:
            if rest[0] != cmd:
                raise ConfigurationError(f"config is for {cmd!r}, not {rest[0]!r}")
        else:
            rest = [cmd] + rest
        sp = _subparser(parser, cmd)
        dests = {a.dest for a in sp._actions} - {"help"}
        values = {k: v for k, v in cfg.items() if k != "command"}
        unknown = set(values) - dests
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        sp.set_defaults(**values)
    return parser.parse_args(rest)


# -- resolution of inputs -------------------------------------------------------------------

def _preset_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigurationError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if v.lower() in ("true", "false"):
            out[k] = v.lower() == "true"
            continue
        try:
            out[k] = int(v)
        except ValueError:
            try:
                out[k] = float(v)
            except ValueError:
                raise ConfigurationError(f"--param {k}: not a number: {v!r}") from None
    return out


def resolve_generators(ns) -> gr.GeneratorSet:
    if ns.generators:
        return gr.GeneratorSet.load(ns.generators)
    return gr.preset(ns.preset, **_preset_params(ns.param))


def resolve_mu(ns) -> gm.GroupMeasure:
    if ns.measure:
        return gm.GroupMeasure.load(ns.measure)
    return gm.GroupMeasure.uniform(resolve_generators(ns))


def _walk_config(ns, mu) -> wk.WalkConfig:
    return wk.WalkConfig(mu, ns.seed, ns.tol, ns.max_steps)


def resolve_nu(name: str, mu: gm.GroupMeasure, ns):
    if name == "lebesgue":
        return cm.lebesgue()
    if name == "smooth":
        return cm.fourier({0: 1.0, 1: 0.5, -1: 0.5})
    if name == "fixed-point":
        c = mb.classify(mu.maps[0])
        if c.kind != "hyperbolic":
            raise ConfigurationError("fixed-point measure needs a hyperbolic first atom")
        xi = c.fixed_points[0]
        return cm.point_mass(math.atan2(xi.imag, xi.real))
    if name.startswith("point-mass:"):
        return cm.point_mass(float(name.split(":", 1)[1]))
    if name == "hitting":
        return wk.empirical_hitting_measure(_walk_config(ns, mu), ns.samples).measure
    if name.endswith(".json"):
        return cm.load(name)
    raise ConfigurationError(f"unknown circle measure {name!r}")


# -- commands -----------------------------------------------------------------------------------

def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def cmd_identities(ns):
    d = mb.identity_defects(ns.trials, ns.seed)
    return {"defects": d, "max_defect": max(d.values())}, None


def cmd_enumerate(ns):
    gens = resolve_generators(ns)
    ball = gr.enumerate_ball(gens, ns.radius, cap=ns.cap)
    elems = [{"word": list(w), **g.to_json()} for w, g in ball.elements]
    rows = [(".".join(map(str, w)), float(g.a.real), float(g.a.imag), float(g.b.real),
             float(g.b.imag)) for w, g in ball.elements]
    return ({"size": len(ball), "elements": elems},
            _csv(["word", "a_re", "a_im", "b_re", "b_im"], rows))


def cmd_moments(ns):
    mu = gm.convolution_power(resolve_mu(ns), ns.power)
    return {
        "power": ns.power,
        "support_size": len(mu),
        "total_mass": _c(mu.total_mass()),
        "is_probability": mu.is_probability(),
        "first_moment": gm.first_moment(mu),
        "blaschke_sum": gm.blaschke_sum(mu),
        "weight_decay_rate": gm.weight_decay_rate(mu),
    }, None


def cmd_walk(ns):
    cfg = _walk_config(ns, resolve_mu(ns))
    paths = wk.sample_paths(cfg, ns.steps, ns.samples)
    n = np.arange(1, ns.steps + 1)
    mean_d = paths.distances.mean(axis=0)
    mean_gap = paths.log_gaps.mean(axis=0)
    rate = float(mean_d[-1] / ns.steps)
    rows = [(int(k), float(d), float(gp)) for k, d, gp in zip(n, mean_d, mean_gap)]
    return ({"escape_rate": rate, "final_mean_log_gap": float(mean_gap[-1]),
             "samples": ns.samples, "steps": ns.steps},
            _csv(["n", "mean_distance", "mean_log_gap"], rows))


def cmd_hitting(ns):
    mu = resolve_mu(ns)
    h = wk.empirical_hitting_measure(_walk_config(ns, mu), ns.samples)
    a1 = cm.fourier_coeffs(h.measure, 1)[1] if h.n_reached else 0j
    res = dict(h.to_json(), a1=_c(a1), n_atoms=len(h.measure))
    return res, _csv(["angle"], [(float(t),) for t in h.angles])


def cmd_residual(ns):
    mu = resolve_mu(ns)
    nu = resolve_nu(ns.nu, mu, ns)
    rep = st.residual_report(mu, nu, ns.rmax, ns.grid_size, ns.circles)
    return dict(rep.to_json(), verdict=rep.verdict()), None


def cmd_drift(ns):
    mu = resolve_mu(ns)
    nu = resolve_nu(ns.nu, mu, ns)
    l = st.drift(mu, nu)
    out = {"l": l if isinstance(l, float) else _c(l), "abs_l": abs(l),
           "note": "l is the cocycle constant; for an attracting point mass of delta_g it is "
                   "minus the translation length, so |l| is the escape-rate comparison"}
    return out, None


def cmd_borel_norms(ns):
    mu = resolve_mu(ns)
    rows = st.borel_norm_growth(mu, ns.nmax, ns.p, ns.M)
    return ({"p": ns.p, "norms": [[n, v] for n, v in rows]}, st.borel_norms_csv(rows))


def cmd_aleksandrov(ns):
    mu = resolve_mu(ns)
    nu = resolve_nu(ns.nu, mu, ns)
    rows = tr.aleksandrov_statistic(nu, ns.p)
    return ({"rows": [[p, s] for p, s in rows]}, tr.aleksandrov_csv(rows))


def cmd_gap(ns):
    mu = resolve_mu(ns)
    nu = resolve_nu(ns.nu, mu, ns)
    g = tr.boundary_gap(nu, ns.r, ns.M, ns.eps)
    rows = [(float(t), float(s.real), float(s.imag)) for t, s in zip(g.angles, g.samples)]
    return g.to_json(), _csv(["t", "gap_re", "gap_im"], rows)


def cmd_operator(ns):
    mu = resolve_mu(ns)
    fn = st.t_mu_adjoint_matrix if ns.adjoint else st.t_mu_matrix
    m = fn(mu, ns.K, ns.r0)
    rows = [(j, k, float(m.entries[j, k].real), float(m.entries[j, k].imag))
            for j in range(ns.K + 1) for k in range(ns.K + 1)]
    return m.to_json(), _csv(["j", "k", "re", "im"], rows)


TEST_FUNCTIONS = {"0": lambda z: 0 * z, "z": lambda z: z, "z2": lambda z: z * z}


def cmd_contour(ns):
    mu = resolve_mu(ns)
    if ns.center is None:
        p = mb.pole_image(mu.maps[0])
        if p is mb.INF:
            raise ConfigurationError("first atom has no finite pole; pass --center")
        center = complex(p)
    else:
        center = complex(*ns.center)
    q = st.contour_charge(mu, TEST_FUNCTIONS[ns.test_function], center, ns.radius, ns.M)
    inside = [complex(w) for g, w in mu.atoms
              if mb.pole_image(g) is not mb.INF and abs(mb.pole_image(g) - center) < ns.radius]
    return {"center": _c(center), "charge": _c(q), "expected": _c(-sum(inside))}, None


def cmd_stolz(ns):
    gens = resolve_generators(ns)
    if ns.orbit == "ball":
        pts = gr.orbit_points(gr.enumerate_ball(gens, ns.radius))
    else:
        g, h, pts = gens.generators[0], mb.MoebiusMap.identity(), []
        for _ in range(ns.radius):
            h = mb.compose(h, g)
            pts.append(mb.apply(h, 0j))
    rep = st.stolz_coverage(pts, ns.alpha, ns.eps, ns.grid)
    return dict(rep.to_json(), n_points=len(pts)), rep.to_csv()


def cmd_iterate(ns):
    mu = resolve_mu(ns)
    nu0 = cm.GridMeasure(np.ones(ns.M)) if ns.nu0 == "grid-uniform" else cm.lebesgue()
    res = cm.stationary_iterate(mu, nu0, ns.max_iter, ns.iter_tol, ns.K)
    a1 = cm.fourier_coeffs(res.measure, 1)[1]
    rows = [(i + 1, float(d)) for i, d in enumerate(res.history)]
    return ({"converged": res.converged, "iterations": res.iterations,
             "history": [float(d) for d in res.history], "a1": _c(a1)},
            _csv(["iteration", "distance"], rows))


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# -- driver -----------------------------------------------------------------------------------

def resolved_config(ns) -> dict:
    return {k: v for k, v in vars(ns).items() if k not in NOT_CONFIG}


def render(ns, result, csv_text) -> str:
    cfg = resolved_config(ns)
    if ns.format == "csv":
        if csv_text is None:
            raise ConfigurationError(f"{ns.command} has no CSV form; use --format json")
        head = f"# psustat {__version__}\n# config {json.dumps(cfg, sort_keys=True)}\n"
        return head + csv_text
    report = {"tool": "psustat", "version": __version__, "command": ns.command,
              "config": cfg, "result": result}
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse(argv)
        result, csv_text = HANDLERS[ns.command](ns)
        text = render(ns, result, csv_text)
    except SystemExit as exc:          # argparse errors and --help
        return int(exc.code or 0)
    except (ConfigurationError, PreconditionError, DomainError, OSError) as exc:
        print(f"psustat: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ResourceError, AccuracyError, EvaluationError, ArithmeticError, ValueError) as exc:
        print(f"psustat: numeric error: {exc}", file=sys.stderr)
        return 3
    if ns.output:
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
