"""Command-line interface.

Subcommands: saddle, ring-scan, stability, wannier, simulate, histogram,
shape, t0-check, selftest.  Ensemble runs are configured by a flat
key=value text file ("#" starts a comment), overridable by TRION_<KEY>
environment variables and then by repeated ``--set key=value`` flags.
All machine output is JSON or CSV and embeds the resolved configuration
plus a format-version field.

Exit codes: 0 success, 1 domain/convergence error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .errors import TrionError
from .fields import FieldParams, scale_energy, scale_frequency
from .integrator import IntegratorControls
from .sampling import EnsembleConfig

FORMAT_VERSION = 1
ENV_PREFIX = "TRION_"

# key -> (type, default); None default means required
_CONFIG_SCHEMA = {
    "subspace": (str, None),
    "E": (float, None),
    "t0_frac": (float, None),
    "F": (float, None),
    "omega_au": (float, None),
    "pulse_cycles": (float, None),
    "n_traj": (int, None),
    "seed": (int, None),
    "measure": (str, "product"),
    "rel_tol": (float, 1e-10),
    "abs_tol": (float, 1e-12),
    "r_escape_factor": (float, 20.0),
    "t_max_factor": (float, 2.0),
    "min_step": (float, 1e-12),
    "bounce_radius": (float, 1e-3),
    "bin_width": (float, 0.4),
    "out": (str, ""),
}


class ConfigError(Exception):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        typ = _CONFIG_SCHEMA[key][0]
        try:
            values[key] = typ(val)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: cannot parse {val!r} as {typ.__name__} for {key!r}")
    return values


def resolve_config(path: str | None, overrides: list[str]) -> dict:
    """File -> environment -> --set flags, later sources win; validate keys."""
    values = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read(), source=path))
    for key, (typ, _) in _CONFIG_SCHEMA.items():
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            try:
                values[key] = typ(env)
            except ValueError:
                raise ConfigError(f"environment {ENV_PREFIX}{key.upper()}: bad value {env!r}")
    for item in overrides:
        values.update(parse_config_text(item, source="--set"))
    resolved = {}
    missing = []
    for key, (typ, default) in _CONFIG_SCHEMA.items():
        if key in values:
            resolved[key] = values[key]
        elif default is None:
            missing.append(key)
        else:
            resolved[key] = default
    if missing:
        raise ConfigError("missing required config keys: " + ", ".join(missing))
    return resolved


def build_run(resolved: dict):
    field = FieldParams.from_cycles(F=resolved["F"], omega=resolved["omega_au"],
                                    cycles=resolved["pulse_cycles"])
    config = EnsembleConfig(subspace=resolved["subspace"], E=resolved["E"],
                            t0_frac=resolved["t0_frac"], field=field,
                            n_traj=resolved["n_traj"], seed=resolved["seed"],
                            measure=resolved["measure"])
    controls = IntegratorControls(rel_tol=resolved["rel_tol"],
                                  abs_tol=resolved["abs_tol"],
                                  min_step=resolved["min_step"],
                                  r_escape_factor=resolved["r_escape_factor"],
                                  t_max_factor=resolved["t_max_factor"],
                                  bounce_radius=resolved["bounce_radius"])
    return config, controls


def _emit(payload, out_path: str | None):
    text = json.dumps(payload, indent=2, default=_json_default)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_saddle(args):
    from . import saddles
    if args.subspace == "c3v":
        info = saddles.saddle_c3v(args.field)
    elif args.subspace == "c2v":
        info = saddles.saddle_c2v(args.field)
    else:
        info = saddles.saddle_ring(args.n, args.field)
        if info is None:
            _emit({"format_version": FORMAT_VERSION, "type": "ring", "N": args.n,
                   "field": args.field, "exists": False}, args.out)
            return 0
    payload = {"format_version": FORMAT_VERSION, **info.as_dict()}
    _emit(payload, args.out)
    return 0


def cmd_ring_scan(args):
    from .saddles import ring_scan
    rows = ring_scan(args.n_max, args.field)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["N", "exists", "R_s", "Z_s", "V_s"])
    for r in rows:
        w.writerow([r["N"], int(r["exists"]),
                    f"{r['R_s']:.12g}", f"{r['Z_s']:.12g}", f"{r['V_s']:.12g}"])
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_stability(args):
    from . import saddles, stability
    saddle = saddles.saddle_c3v(args.field) if args.subspace == "c3v" \
        else saddles.saddle_c2v(args.field)
    rep = stability.analyze_subspace(saddle) if args.scope == "subspace" \
        else stability.analyze_fullspace(saddle)
    payload = {"format_version": FORMAT_VERSION, **rep.as_dict()}
    _emit(payload, args.out)
    return 0


def cmd_wannier(args):
    from .stability import standard_exponents
    ex = standard_exponents(1.0)
    payload = {
        "format_version": FORMAT_VERSION,
        "alpha3": ex["alpha3"],
        "alpha2": ex["alpha2"],
        "exponents": {k: v for k, v in ex.items() if k not in ("alpha3", "alpha2")},
    }
    _emit(payload, args.out)
    return 0


def cmd_simulate(args):
    from .ensemble import run_ensemble, tally
    resolved = resolve_config(args.config, args.set or [])
    config, controls = build_run(resolved)
    out_path = args.out or resolved["out"] or None

    def progress(done, total):
        print(f"\r{done}/{total} trajectories", end="", file=sys.stderr, flush=True)

    outcomes = run_ensemble(config, controls, threads=args.threads,
                            progress=progress if not args.quiet else None)
    if not args.quiet:
        print("", file=sys.stderr)
    payload = {
        "format_version": FORMAT_VERSION,
        "config": resolved,
        "tallies": tally(outcomes),
        "outcomes": [
            {
                "outcome": o.outcome,
                "p_ion_parallel": o.p_ion_parallel,
                "t_end": o.t_end,
                "energy_drift": None if math.isnan(o.energy_drift) else o.energy_drift,
                "min_distance": o.min_distance,
                "n_steps": o.n_steps,
            }
            for o in outcomes
        ],
    }
    _emit(payload, out_path)
    return 0


def _histogram_from_results(results: dict, bin_width: float):
    from .ensemble import MomentumHistogram, histogram
    from .integrator import TrajectoryOutcome
    resolved = results["config"]
    config, _ = build_run(resolved)
    outcomes = [
        TrajectoryOutcome(outcome=o["outcome"], p_ion_parallel=o["p_ion_parallel"],
                          final_state=None, t_end=o["t_end"],
                          energy_drift=o["energy_drift"] or math.nan,
                          min_distance=o["min_distance"], n_steps=o["n_steps"])
        for o in results["outcomes"]
    ]
    return histogram(outcomes, config, bin_width=bin_width), resolved


def cmd_histogram(args):
    with open(args.infile, "r", encoding="utf-8") as fh:
        results = json.load(fh)
    bin_width = args.bin_width or results["config"].get("bin_width", 0.4)
    hist, resolved = _histogram_from_results(results, bin_width)
    lines = [
        f"# format_version={FORMAT_VERSION}",
        f"# n_total={hist.n_total}",
        f"# n_triple={hist.n_triple}",
        f"# n_rejected={hist.n_rejected}",
        f"# p_max_estimate={hist.p_max_estimate:.12g}",
        f"# bin_width={hist.bin_width:.12g}",
        f"# config={json.dumps(resolved)}",
        "bin_center,count,density",
    ]
    dens = hist.density()
    for c, n, d in zip(hist.bin_centers(), hist.counts, dens):
        lines.append(f"{c:.12g},{n},{d:.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def read_histogram_csv(path: str):
    """Rebuild a MomentumHistogram from the CSV emitted by ``histogram``."""
    from .ensemble import MomentumHistogram
    meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif not line.startswith("bin_center"):
                rows.append(line.split(","))
    centers = np.array([float(r[0]) for r in rows])
    counts = np.array([int(r[1]) for r in rows], dtype=np.int64)
    width = float(meta["bin_width"])
    edges = np.concatenate([centers - 0.5 * width, [centers[-1] + 0.5 * width]])
    resolved = json.loads(meta["config"])
    config, _ = build_run(resolved)
    return MomentumHistogram(bin_edges=edges, counts=counts,
                             n_total=int(meta["n_total"]),
                             n_triple=int(meta["n_triple"]),
                             n_rejected=int(meta["n_rejected"]),
                             p_max_estimate=float(meta["p_max_estimate"]),
                             config=config, empty=int(meta["n_triple"]) == 0)


def cmd_shape(args):
    from .ensemble import shape_metrics
    hist = read_histogram_csv(args.infile)
    m = shape_metrics(hist)
    payload = {
        "format_version": FORMAT_VERSION,
        "n_maxima": m.n_maxima,
        "central_minimum_depth": m.central_minimum_depth,
        "half_width": m.half_width,
        "maxima_positions": list(m.maxima_positions),
        "n_triple": hist.n_triple,
        "p_max_estimate": hist.p_max_estimate,
    }
    _emit(payload, args.out)
    return 0


def cmd_t0_check(args):
    from .ensemble import t0_symmetry_check
    resolved = resolve_config(args.config, args.set or [])
    config, controls = build_run(resolved)
    chk = t0_symmetry_check(config, controls, threshold=args.threshold,
                            threads=args.threads)
    payload = {
        "format_version": FORMAT_VERSION,
        "config": resolved,
        "t0_frac": chk.t0_frac,
        "mirrored_t0_frac": chk.mirrored_t0_frac,
        "ks_distance": chk.ks_distance,
        "threshold": chk.threshold,
        "n_triple": list(chk.n_triple),
        "passed": chk.passed,
    }
    _emit(payload, args.out)
    return 0 if chk.passed else 1


def cmd_selftest(args):
    """Fast invariant bundle: saddles, exponents, gradients, scaling."""
    from . import saddles, stability
    from .fields import FieldParams, scale_state
    from .hamiltonians import (C3vState, c2v_gradient, c3v_gradient,
                               c2v_potential, c3v_potential)

    checks = []

    def check(name, ok, detail=""):
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")

    s3 = saddles.saddle_c3v(1.0)
    check("triangular saddle energy", abs(s3.V_s + 7.6673) < 1e-3, f"V_s={s3.V_s:.4f}")
    check("triangular saddle residual", s3.residual < 1e-10)
    s2 = saddles.saddle_c2v(1.0)
    ok = (abs(abs(s2.coord("x")) - 1.1607) < 1e-3 and abs(s2.coord("z") - 1.1143) < 1e-3
          and abs(s2.coord("z1") - 1.4665) < 1e-3 and abs(s2.V_s + 7.3902) < 1e-3)
    check("planar saddle location", ok, f"V_s={s2.V_s:.4f}")

    ex = stability.standard_exponents(1.0)
    expected = {"lambda_r": 1.1054, "nu_a": 1.4496, "lambda_2r": 1.0980,
                "nu_2a": 1.7937, "nu_2b": 0.9024, "nu_2c": 1.3712,
                "alpha3": 2.6228, "alpha2": 3.7043}
    for key, val in expected.items():
        check(f"exponent {key}", abs(ex[key] - val) < 1e-3, f"{ex[key]:.4f}")

    # gradient oracles: central finite differences
    eps = 1e-6
    R, Z, f = 1.2, 0.9, 1.0
    gr, gz = c3v_gradient(R, Z, f)
    fd_r = (c3v_potential(R + eps, Z, f) - c3v_potential(R - eps, Z, f)) / (2 * eps)
    fd_z = (c3v_potential(R, Z + eps, f) - c3v_potential(R, Z - eps, f)) / (2 * eps)
    check("triangular gradient vs finite differences",
          abs(gr - fd_r) < 1e-7 * abs(fd_r) and abs(gz - fd_z) < 1e-7 * abs(fd_z))
    x, z, z1 = 1.3, 0.8, 1.1
    gx, gzz, gz1 = c2v_gradient(x, z, z1, f)
    fd_x = (c2v_potential(x + eps, z, z1, f) - c2v_potential(x - eps, z, z1, f)) / (2 * eps)
    check("planar gradient vs finite differences", abs(gx - fd_x) < 1e-6 * abs(fd_x))

    st = C3vState(R=1.5, Z=-0.4, p_R=0.2, p_Z=0.9, t=3.0)
    rt = scale_state(scale_state(st, 0.207, "to-scaled"), 0.207, "from-scaled")
    err = max(abs(rt.R - st.R), abs(rt.Z - st.Z), abs(rt.p_R - st.p_R),
              abs(rt.p_Z - st.p_Z), abs(rt.t - st.t))
    check("scaling round trip", err < 1e-12 * max(abs(st.R), abs(st.t)))

    n_fail = checks.count(False)
    print(f"{len(checks) - n_fail}/{len(checks)} selftest checks passed")
    return 0 if n_fail == 0 else 1


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="trion",
        description="Classical three-electron escape in strong laser fields: "
                    "saddles, stability exponents and ion-momentum ensembles.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saddle", help="locate an escape saddle at a static field")
    p.add_argument("--subspace", choices=["c3v", "c2v", "ring"], required=True)
    p.add_argument("--field", type=float, default=1.0)
    p.add_argument("--n", type=int, default=3, help="electron count for ring saddles")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_saddle)

    p = sub.add_parser("ring-scan", help="scan ring saddles over electron count")
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--field", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ring_scan)

    p = sub.add_parser("stability", help="mass-weighted Hessian analysis of a saddle")
    p.add_argument("--subspace", choices=["c3v", "c2v"], required=True)
    p.add_argument("--scope", choices=["subspace", "full"], default="subspace")
    p.add_argument("--field", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("wannier", help="generalized threshold exponents")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_wannier)

    p = sub.add_parser("simulate", help="run a trajectory ensemble from a config file")
    p.add_argument("--config", required=False)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("histogram", help="bin simulate results into a momentum histogram")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--bin-width", type=float, default=None)
    p.set_defaults(fn=cmd_histogram)

    p = sub.add_parser("shape", help="shape metrics of a histogram CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_shape)

    p = sub.add_parser("t0-check", help="mirror-symmetry check of start times")
    p.add_argument("--config", required=False)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_t0_check)

    p = sub.add_parser("selftest", help="fast saddle/exponent/gradient checks")
    p.set_defaults(fn=cmd_selftest)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
