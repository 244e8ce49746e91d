"""``vacmirror run <command> <scenario>``: flat-file artifacts for each analysis.

Exit codes: 0 success, 1 computation or validation failure (a JSON error
report is written next to the artifacts), 2 unknown command, 3 invalid
scenario.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__, config
from .exceptions import ConfigError, StabilityError
from .moments import Budget

COMMANDS = ("spectra", "moments", "commutator", "diffusion", "limits", "poles", "validate", "montecarlo")
ENV_OUT = "VACMIRROR_OUT"


class Writer:
    """Names, stamps and writes every artifact of one run."""

    def __init__(self, sc, command, out, fmt):
        self.sc, self.command, self.out, self.fmt = sc, command, Path(out), fmt
        self.written = []
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, kind, ext):
        return self.out / f"{self.sc.name}.{self.command}.{kind}.{ext}"

    def _stamp(self):
        return {"scenario": self.sc.name, "scenario_hash": self.sc.hash, "version": __version__}

    def json(self, kind, obj):
        p = self.path(kind, "json")
        data = dict(self._stamp())
        data.update(obj)
        with open(p, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True, default=_plain)
            fh.write("\n")
        self.written.append(p)
        return p

    def table(self, kind, columns, notes=()):
        if self.fmt == "json":
            return self.json(kind, {"columns": {k: np.asarray(v).tolist() for k, v in columns.items()},
                                    "notes": list(notes)})
        p = self.path(kind, "csv")
        names = list(columns)
        cols = [np.asarray(columns[k], dtype=float) for k in names]
        with open(p, "w", newline="\n") as fh:
            for k, v in self._stamp().items():
                fh.write(f"# {k}: {v}\n")
            for line in notes:
                fh.write(f"# {line}\n")
            fh.write(",".join(names) + "\n")
            for row in zip(*cols):
                fh.write(",".join("%.17g" % x for x in row) + "\n")
        self.written.append(p)
        return p


def _plain(x):
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _cplx(z):
    return {"real": float(np.real(z)), "imag": float(np.imag(z))}


def _grid(sc, args):
    from .spectra import master_grid

    g = args.grid or sc.grid.get("file") or sc.grid.get("preset", "standard")
    if g in config.GRID_PRESETS:
        per = config.GRID_PRESETS[g] if args.grid else int(sc.grid["per_decade"])
        return master_grid(sc.suspension, sc.params, sc.model, per_decade=per)
    try:
        w = np.loadtxt(g, delimiter=",", comments="#", ndmin=2)[:, 0]
    except (OSError, ValueError) as exc:
        raise ConfigError(f"grid {g!r} is neither a preset nor a readable file: {exc}") from exc
    if np.any(w <= 0) or np.any(np.diff(w) <= 0):
        raise ConfigError("grid file must hold increasing positive frequencies")
    return w


def _times(sc, default):
    t = sc.time
    if "t" in t:
        return np.asarray(t["t"], dtype=float)
    if "tmin" in t:
        return np.geomspace(t["tmin"], t["tmax"], int(t.get("points", 61)))
    return default


def cmd_spectra(sc, args, w):
    from .spectra import input_position_spectra, spectrum

    s, params, model = sc.suspension, sc.params, sc.model
    omega = _grid(sc, args)
    for kind, pair in (("xi", "qq"), ("sigma", "qq"), ("xi", "Fq"), ("xi", "FF")):
        sf = spectrum(s, params, model, kind, pair, coupled=True)
        w.table(sf.label, {"omega": omega, "value": sf(omega)}, [f"parity: {sf.parity}", "units: reduced"])
    ff = spectrum(s, params, model, "xi", "FF", coupled=False)
    w.table(ff.label, {"omega": omega, "value": ff(omega)}, [f"parity: {ff.parity}", "units: reduced"])
    if not s.unbound:
        xi, sg, _ = input_position_spectra(s, params)
        for comb, kind in ((xi, "xi"), (sg, "sigma")):
            w.json(f"{kind}_qq_input", {"line_spectrum": True, "frequencies": comb.frequencies,
                                        "weights": comb.weights, "parity": comb.parity})
    return 0


def cmd_moments(sc, args, w):
    from .moments import heisenberg_check, moment_report, virial_check
    from .response import effective_mass

    s, params, model, budget = sc.suspension, sc.params, sc.model, sc.budget
    rep = moment_report(s, params, model, budget)
    out = {"report": rep.to_dict()}
    if rep.dv2 is not None:
        vr = virial_check(s, params, model, budget)
        out["virial"] = {"lhs": vr.lhs, "rhs": vr.rhs, "residual": vr.residual}
        hb = heisenberg_check(rep, effective_mass(params, model))
        out["heisenberg"] = {"passed": hb.passed, "product": hb.product, "bound": hb.bound, "margin": hb.margin}
    w.json("report", out)
    return 0


def cmd_commutator(sc, args, w):
    from .timedomain import commutator_vq, find_poles

    s, params, model = sc.suspension, sc.params, sc.model
    wc = model.omega_c
    dec = find_poles(s, params, model)
    top = 1e3 / s.omega0 if not s.unbound else 1e4 / wc
    if dec.gamma > 0:
        top = min(top, 3 / dec.gamma)
    t = _times(sc, np.geomspace(1e-3 / wc, top, 121))
    rep = commutator_vq(s, params, model, t, rtol=sc.budget.rtol)
    w.table("vq", {"t": t, "real": rep.value.real, "imag": rep.value.imag,
                   "damped_cosine_imag": rep.damped_cosine.imag})
    probes = {}
    for label, tp in (("inertial", 1e-2 / wc), ("quasistatic", 1e2 / wc)):
        v = commutator_vq(s, params, model, [tp]).value[0]
        probes[label] = {"t": tp, "value": _cplx(v)}
    w.json("summary", {"inertial_plateau": _cplx(rep.inertial_plateau),
                       "quasistatic_plateau": _cplx(rep.quasistatic_plateau),
                       "probes": probes, "regimes": sorted(set(rep.labels)),
                       "gamma": dec.gamma, "omega_bar": dec.omega_bar})
    return 0


def cmd_diffusion(sc, args, w):
    from .timedomain import diffusion

    s, params, model = sc.suspension, sc.params, sc.model
    t = _times(sc, np.geomspace(1e-1, 1e5, 61) / model.omega_c)
    curve = diffusion(s, params, model, t)
    w.table("delta", {"t": t, "delta": curve.delta})
    w.json("fit", curve.to_dict())
    return 0


def _band(args, sc):
    if args.band:
        try:
            c, h = (float(x) for x in args.band.split(","))
        except ValueError as exc:
            raise ConfigError(f"--band expects 'center,half_width', got {args.band!r}") from exc
        return c, h
    return tuple(sc.limits["band"]) if "band" in sc.limits else None


def cmd_limits(sc, args, w):
    from .measurement import Band, effective_variance, noise_budget

    s, params, model = sc.suspension, sc.params, sc.model
    per = int(sc.grid["per_decade"])
    top = model.omega_c * 10
    omega = np.logspace(-1, math.log10(top), int(per * (math.log10(top) + 1)) + 1) * max(s.omega0, 1e-3)
    nb = noise_budget(s, params, model, omega)
    w.table("budget", {"omega": omega, "sigma_sql": nb.sigma_sql, "sigma_uql": nb.sigma_uql,
                       "n_sql": nb.n_sql, "n_uql": nb.n_uql})
    lo, hi = sc.limits.get("plateau", (30.0, 300.0))
    summary = {"plateau": nb.plateau(lo, hi), "omega_s": nb.omega_s,
               "omega_s_note": "interpreted as omega_C / 10",
               "uql_below_sql": bool(np.all(nb.sigma_uql <= nb.sigma_sql))}
    band = _band(args, sc)
    if band is not None:
        ev = effective_variance(nb, Band(*band))
        summary["band"] = {"center": band[0], "half_width": band[1], "dq_hat2": ev.value,
                           "closed_form": ev.closed_form, "rel_diff": ev.rel_diff, "two_B": ev.two_B,
                           "in_window": ev.in_window, "note": ev.note}
    w.json("summary", summary)
    return 0


def cmd_poles(sc, args, w):
    from .timedomain import find_poles

    s, params, model = sc.suspension, sc.params, sc.model
    dec = find_poles(s, params, model)
    out = {"poles": [_cplx(p) for p in dec.poles], "residues": [_cplx(r) for r in dec.residues],
           "gamma": dec.gamma, "omega_bar": dec.omega_bar, "m_inf": dec.m_inf,
           "bump_height": dec.bump_height, "bump_rate": dec.bump_rate}
    if not s.unbound:
        w0 = s.omega0
        out["gamma_leading"] = w0**2 * params.tau * model.gamma0
        out["shift_residual"] = dec.omega_bar**2 - w0**2 - dec.gamma**2 / 4
        out["shift_scale"] = w0**3 * params.tau
    w.json("report", out)
    return 0


def cmd_validate(sc, args, w):
    from .validate import run_suite

    checks = run_suite(sc, tol=None)
    ok = all(c.passed for c in checks)
    w.json("report", {"passed": ok, "checks": [c.to_dict() for c in checks]})
    for c in checks:
        lim = "info" if c.limit is None else f"<= {c.limit:.3g}"
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.4g} ({lim}) {c.detail}".rstrip())
    return 0 if ok else 1


def cmd_montecarlo(sc, args, w):
    from .langevin import dump, periodogram, summary, synthesize_sigma, validate_diffusion

    s, params, model = sc.suspension, sc.params, sc.model
    mc = dict(sc.montecarlo)
    if args.seed is not None:
        mc["seed"] = args.seed
    ens = synthesize_sigma(s, params, model, mc["n_samples"], mc["dt"], mc["n_traj"], mc["seed"])
    if args.dump:
        dump(ens, args.dump)
    if s.unbound:
        rep = validate_diffusion(ens)
        w.table("diffusion", {"t": rep.t, "ensemble": rep.ensemble, "stderr": rep.stderr,
                              "quadrature": rep.quadrature, "surrogate": rep.surrogate})
        out = summary(ens)
        out["diffusion"] = rep.to_dict()
        w.json("summary", out)
        return 0 if rep.passed else 1
    chk = periodogram(ens)
    w.table("periodogram", {"omega": chk.omega, "target": chk.target, "mean": chk.mean, "stderr": chk.stderr})
    w.json("summary", summary(ens, chk) | {"passed": chk.passed()})
    return 0 if chk.passed() else 1


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser():
    ap = argparse.ArgumentParser(prog="vacmirror", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)
    run = sub.add_parser("run", help="run one analysis on a scenario")
    run.add_argument("command", help=" | ".join(COMMANDS))
    run.add_argument("scenario", help="scenario file or built-in name: " + ", ".join(config.BUILTIN))
    run.add_argument("--out", help=f"output directory (default ${ENV_OUT} or the current directory)")
    run.add_argument("--tol", type=float, help="quadrature relative tolerance")
    run.add_argument("--limit", type=int, help="quadrature subdivision limit")
    run.add_argument("--grid", help="grid preset (coarse, standard, fine) or a file of frequencies")
    run.add_argument("--seed", type=int, help="Monte Carlo master seed")
    run.add_argument("--allow-unstable", action="store_true", help="diagnostics mode for unstable scenarios")
    run.add_argument("--format", choices=("csv", "json"), default="csv", help="format of tabular outputs")
    run.add_argument("--band", help="detection band 'center,half_width' for limits")
    run.add_argument("--dump", help="write the Monte Carlo ensemble to this binary file")
    sub.add_parser("scenarios", help="list built-in scenarios")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verb == "scenarios":
        print("\n".join(config.BUILTIN))
        return 0
    if args.command not in COMMANDS:
        print(f"unknown command {args.command!r}; expected one of {', '.join(COMMANDS)}", file=sys.stderr)
        return 2
    try:
        sc = config.load(args.scenario)
        if args.tol is not None or args.limit is not None:
            b = Budget(args.tol or sc.budget.rtol, args.limit or sc.budget.limit)
            if not (b.rtol > 0 and b.limit > 0):
                raise ConfigError("--tol and --limit must be positive")
            sc = dataclasses.replace(sc, budget=b)
        if args.grid and args.grid not in config.GRID_PRESETS and not Path(args.grid).is_file():
            raise ConfigError(f"grid {args.grid!r} is neither a preset nor a file")
        from .scattering import stability_check

        stab = stability_check(sc.params, sc.model)
        if not stab.passed and not args.allow_unstable:
            raise ConfigError(f"scenario fails the stability check ({', '.join(stab.flags)}); "
                              "use --allow-unstable for diagnostics")
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 3
    out = args.out or os.environ.get(ENV_OUT) or sc.output_dir or "."
    w = Writer(sc, args.command, out, args.format)
    if not stab.passed:
        w.json("stability", stab.to_dict())
    try:
        code = HANDLERS[args.command](sc, args, w)
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # every failure becomes a JSON report
        report = {"error": type(exc).__name__, "message": str(exc),
                  "traceback": traceback.format_exc().splitlines()[-6:]}
        if isinstance(exc, StabilityError):
            report["stability"] = exc.report.to_dict()
        w.json("error", report)
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in w.written:
        print(p)
    return code


if __name__ == "__main__":
    sys.exit(main())
