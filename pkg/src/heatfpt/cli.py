"""Command-line front end.

Subcommands: density, simulate, compare, classify, heatpoly.  CSV goes to
``--output`` (stdout by default) with 17 significant digits; summaries and
diagnostics go to stderr.

Exit codes: 0 success, 1 a comparison failed its 1 % KS test,
2 usage or precondition error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from pathlib import Path

import numpy as np

from . import burgers_classify as bc
from . import heat_polynomials as hp
from .errors import NumericalError, PreconditionError
from .experiment import FIXTURES, ExperimentConfig
from .heat_solutions import CATALOG_NAMES, make_catalog_solution
from .montecarlo import empirical_cdf, ks_critical, ks_distance, simulate_paths

EXIT_OK, EXIT_KS_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def _g(v) -> str:
    return f"{v:.17g}"


# -- config assembly --------------------------------------------------------
_FLAG_FIELDS = ("process", "c", "lam", "s", "y", "barrier", "slope", "horizon", "points",
                "paths", "dt", "seed", "workers", "output")


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--fixture", choices=sorted(FIXTURES), help="named reproduction fixture")
    p.add_argument("--process", choices=sorted(CATALOG_NAMES))
    p.add_argument("--c", type=float, help="constant solution level")
    p.add_argument("--lambda", dest="lam", type=float, help="drift of bm_drift")
    p.add_argument("--s", type=float, help="pin time of the bridges")
    p.add_argument("--y", type=float, help="start point")
    p.add_argument("--barrier", type=float, help="boundary level a at t = 0")
    p.add_argument("--slope", type=float, help="boundary slope c in b(t) = a + c t")
    p.add_argument("--boundary", choices=("linear",), help="boundary preset")
    p.add_argument("--bounded", action="store_true", default=None,
                   help="state space (0, a), constant barrier reached from below")
    p.add_argument("--horizon", type=float)
    p.add_argument("--points", type=int, help="density grid points")
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-bridge-correction", dest="bridge_correction", action="store_false", default=None)
    p.add_argument("-o", "--output", help="output CSV path (default stdout)")
    p.add_argument("--dump-config", type=Path, help="also write the resolved config here")


def resolve_config(args) -> ExperimentConfig:
    """Config file, then fixture, then explicit flags (later wins)."""
    cfg = ExperimentConfig()
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise PreconditionError(f"cannot read config: {e}") from None
        cfg = ExperimentConfig.from_text(text)
    if args.fixture is not None:
        cfg = FIXTURES[args.fixture]
    changes = {k: getattr(args, k) for k in (*_FLAG_FIELDS, "boundary", "bounded", "bridge_correction")
               if getattr(args, k, None) is not None}
    if changes:
        cfg = cfg.replace(**changes)
    if args.dump_config is not None:
        args.dump_config.write_text(cfg.to_text())
    return cfg


@contextlib.contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# -- subcommands ------------------------------------------------------------
def density_table(cfg: ExperimentConfig):
    d = cfg.density()
    t = cfg.time_grid(d.horizon)
    return d, t, d(t), d.cdf(t)


def cmd_density(args) -> int:
    cfg = resolve_config(args)
    d, t, q, F = density_table(cfg)
    with _sink(cfg.output) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "density", "cdf"])
        w.writerows([_g(a), _g(b), _g(c)] for a, b, c in zip(t, q, F))
    print(f"{d.describe()} mass={d.total_mass:.10g} defect={d.defect:.3g}", file=sys.stderr)
    return EXIT_OK


def run_simulation(cfg: ExperimentConfig):
    return simulate_paths(cfg.process_spec(), cfg.moving_boundary(), cfg.sim_config(), workers=cfg.workers)


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    r = run_simulation(cfg)
    with _sink(cfg.output) as out:
        out.write(r.to_csv())
    print(r.summary(), file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    d, t, _, F = density_table(cfg)
    r = run_simulation(cfg)
    ks = ks_distance(r, d)
    c1, c5 = ks_critical(r.n, 0.01), ks_critical(r.n, 0.05)
    passed = ks < c1
    emp = empirical_cdf(r)(t)
    with _sink(cfg.output) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "empirical_cdf", "theoretical_cdf"])
        w.writerows([_g(a), _g(b), _g(c)] for a, b, c in zip(t, emp, F))
    print(r.summary(), file=sys.stderr)
    print(f"ks={ks:.6f} crit_1%={c1:.6f} crit_5%={c5:.6f} "
          f"result={'pass' if passed else 'fail'}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_KS_FAIL


def cmd_classify(args) -> int:
    rows = []
    if args.bessel is not None:
        cls = bc.classify_bessel_order(args.bessel)
        d = bc.bessel_drift(args.bessel)
        rows += [("order", cls.order), ("class_index", cls.class_index),
                 ("burgers_residual", bc.burgers_residual(d)),
                 ("degenerate", str(cls.degenerate).lower())]
    elif args.drift is not None:
        params = [v for v in (args.c, args.lam, args.s) if v is not None]
        h = make_catalog_solution(args.drift, params)
        rows.append(("burgers_residual", bc.burgers_residual(bc.DriftSpec.from_solutions([h]))))
        if h.kind.value == "bessel_bridge_kernel":
            parts = [make_catalog_solution("linear_x"), make_catalog_solution("gaussian_kernel", [h.pin_time])]
            for part in parts:
                rows.append((f"burgers_residual[{part.describe()}]",
                             bc.burgers_residual(bc.DriftSpec.from_solutions([part], bc.default_domain([h])))))
            rows.append(("decomposition_error", bc.verify_decomposition(h, parts)))
            rows.append(("class_index", "1;2"))
        else:
            rows.append(("class_index", 1))
    else:
        raise PreconditionError("classify needs --bessel M or --drift NAME")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["quantity", "value"])
    w.writerows((k, _g(v) if isinstance(v, float) else v) for k, v in rows)
    return EXIT_OK


def cmd_heatpoly(args) -> int:
    if args.check:
        rng = np.random.default_rng(args.seed)
        pts = rng.uniform(0.1, 3.0, size=(args.samples, 2))
        rep = hp.check_poly_identities(args.n_max, pts)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["identity", "max_violation"])
        w.writerows((name, _g(v)) for name, v in rep.rows())
        print(f"checked={rep.checked} skipped={len(rep.skipped)}", file=sys.stderr)
        return EXIT_OK
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "x", "t", "v", "w"])
    for n in args.n:
        for x in args.x:
            for t in args.t:
                v = hp.heat_poly_v(n, x, t)
                wv = hp.assoc_w(n, x, t) if t > 0 else float("nan")
                w.writerow([n, _g(x), _g(t), _g(v), _g(wv)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatfpt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, text in (
        ("density", cmd_density, "theoretical density and CDF on a uniform grid"),
        ("simulate", cmd_simulate, "Euler-Maruyama hitting times, one row per path"),
        ("compare", cmd_compare, "simulation vs theory with a KS test"),
    ):
        p = sub.add_parser(name, help=text)
        _add_experiment_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("classify", help="B^n class of a Bessel order or catalog drift")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--bessel", type=int, metavar="M", help="Bessel process order")
    g.add_argument("--drift", choices=sorted(CATALOG_NAMES), help="catalog drift")
    p.add_argument("--c", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--s", type=float)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("heatpoly", help="heat polynomials v_n and associated w_n")
    p.add_argument("--n", type=int, nargs="+", default=[0])
    p.add_argument("--x", type=float, nargs="+", default=[1.0])
    p.add_argument("--t", type=float, nargs="+", default=[1.0])
    p.add_argument("--check", action="store_true", help="report identity violations instead")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--samples", type=int, default=50, help="random (x, t) points in (0.1, 3)^2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_heatpoly)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
