"""Command-line front door.

Commands
--------
reduce-solve   integrate the reduced pair, monitor the conserved quantity,
               write profile CSV/JSON and an SVG of (Phi, Psi, I) vs xi
mbp            build | shoot | verify a moving boundary problem, derive its
               constants and measure all four boundary conditions
pde-verify     reconstruct fields and evaluate the full PDE residual
pii            hierarchy: iterate the parameter shift from the zero seed and
               dump per-member value/residual tables

All commands read a JSON config (``--config``), write artifacts under an
output directory (``--out``, or ``$MKDV2C_OUT``, or ``./mkdv2c-out``), and
are deterministic: the same config produces byte-identical JSON summaries.
Exit codes: 0 success, 1 numerical failure (with a JSON error body),
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coupling import make_coupling
from .errors import ConfigError, GridError, Mkdv2cError
from .fields import similarity_grid
from .jsonio import dump_json
from .moving_boundary import (
    DEFAULT_SAMPLE_TIMES,
    MovingBoundaryProblem,
    build_problem,
    derive_constants,
    shoot_for_targets,
    verify_boundary_conditions,
)
from .params import SystemParams
from .pde import mol_direct_solve, pde_residual
from .painleve2 import rational_hierarchy
from .solver import (
    ReducedProfile,
    ReducedState,
    integrate,
    invariant_candidate_drifts,
    invariant_drift,
    merge_profiles,
    oracle_terminal,
)
from .svgplot import line_plot

_PROFILE_MAX_STEP = 1e-3  # keeps dense output tight enough for residual grids


def _load_config(path, required, optional):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path!r}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    allowed = set(required) | set(optional) | {"schema", "seed"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}; allowed: {sorted(allowed)}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"missing required config keys: {sorted(missing)}")
    return doc


def _system_params(doc):
    try:
        return SystemParams(
            alpha=float(doc.get("alpha", 1.0)),
            lam=float(doc.get("lambda", 1.0)),
            a=float(doc.get("a", 1.0)),
            mu=float(doc.get("mu", -2.0)),
            alpha_I=float(doc.get("alpha_I", 0.0)),
            alpha_II=float(doc.get("alpha_II", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad system parameters: {exc}") from exc


def _initial_state(doc, xi):
    init = doc.get("initial")
    if not isinstance(init, dict):
        raise ConfigError("config key 'initial' must be an object")
    want = {"phi", "phi_prime", "psi", "psi_prime"}
    if set(init) != want:
        raise ConfigError(f"'initial' must have exactly the keys {sorted(want)}")
    try:
        return ReducedState(xi, *(float(init[k]) for k in ("phi", "phi_prime", "psi", "psi_prime")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad initial state: {exc}") from exc


def _tol(doc, args, default=1e-10):
    tol = args.tol if args.tol is not None else doc.get("tol", default)
    tol = float(tol)
    if not (1e-14 <= tol <= 1e-6):
        raise ConfigError(f"tol must lie in [1e-14, 1e-6], got {tol:g}")
    return tol


def _out_dir(args):
    out = args.out or os.environ.get("MKDV2C_OUT") or "mkdv2c-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, summary, text_lines):
    if args.json:
        sys.stdout.write(dump_json(summary))
    else:
        for line in text_lines:
            print(line)


def _write_profile_artifacts(out, profile, drift):
    (out / "profile.json").write_text(dump_json(profile.to_dict()), encoding="utf-8")
    profile.write_csv(out / "profile.csv")
    xs = drift.xi_samples
    states = profile.state_array(xs)
    line_plot(
        out / "profile.svg",
        [
            (xs, states[:, 0], "Phi"),
            (xs, states[:, 2], "Psi"),
            (xs, drift.I_values, "I"),
        ],
        title="reduced profile",
        xlabel="xi",
        ylabel="value",
    )


def cmd_reduce_solve(args):
    doc = _load_config(
        args.config,
        required=("coupling", "xi_start", "xi_end", "initial"),
        optional=("alpha", "lambda", "a", "mu", "alpha_I", "alpha_II", "tol", "max_step"),
    )
    params = _system_params(doc)
    coupling = make_coupling(doc["coupling"])
    xi0, xi1 = float(doc["xi_start"]), float(doc["xi_end"])
    initial = _initial_state(doc, xi0)
    tol = _tol(doc, args)
    max_step = float(doc.get("max_step", _PROFILE_MAX_STEP))

    profile = integrate(initial, xi1, params, coupling, tol=tol, max_step=max_step)
    drift = invariant_drift(profile)
    candidates = invariant_candidate_drifts(profile)
    oracle_end = oracle_terminal(initial, xi1, params, coupling)
    end = profile.evaluate(xi1)
    cross = max(
        abs(end.phi - oracle_end.phi), abs(end.phi_prime - oracle_end.phi_prime),
        abs(end.psi - oracle_end.psi), abs(end.psi_prime - oracle_end.psi_prime),
    )

    out = _out_dir(args)
    _write_profile_artifacts(out, profile, drift)
    summary = {
        "schema": "mkdv2c/reduce-solve-summary/1",
        "coupling": coupling.label,
        "xi_range": list(profile.xi_range),
        "n_steps": profile.n_steps,
        "tol": tol,
        "terminal": {
            "phi": end.phi, "phi_prime": end.phi_prime,
            "psi": end.psi, "psi_prime": end.psi_prime,
        },
        "invariant": {
            "reference": drift.I_reference,
            "max_drift": drift.max_drift,
            "candidate_drifts": candidates,
        },
        "cross_integrator_terminal_diff": cross,
        "artifacts": ["profile.json", "profile.csv", "profile.svg"],
    }
    (out / "summary.json").write_text(dump_json(summary), encoding="utf-8")
    _emit(args, summary, [
        f"solved on xi in [{profile.xi_range[0]:g}, {profile.xi_range[1]:g}] "
        f"({profile.n_steps} steps)",
        f"invariant max drift {drift.max_drift:.3e} (reference {drift.I_reference:.6g})",
        f"cross-integrator terminal difference {cross:.3e}",
        f"artifacts in {out}",
    ])
    return 0


def _mbp_common(doc, args):
    params = _system_params(doc)
    coupling = make_coupling(doc["coupling"])
    g1, g2 = float(doc["gamma1"]), float(doc["gamma2"])
    if not g1 < g2:
        raise ConfigError(f"need gamma1 < gamma2, got ({g1}, {g2})")
    tol = _tol(doc, args)
    times = doc.get("times", list(DEFAULT_SAMPLE_TIMES))
    if not isinstance(times, list) or not times or not all(
        isinstance(t, (int, float)) and t > 0 for t in times
    ):
        raise ConfigError("'times' must be a non-empty list of positive numbers")
    return params, coupling, g1, g2, tol, [float(t) for t in times]


def _mbp_report(args, mbp, tolerance, times, extra):
    constants = derive_constants(mbp)
    report = verify_boundary_conditions(mbp, constants, times=times, tolerance=tolerance)
    out = _out_dir(args)
    drift = invariant_drift(mbp.profile)
    _write_profile_artifacts(out, mbp.profile, drift)
    (out / "boundary_report.json").write_text(dump_json(report.to_dict()), encoding="utf-8")
    (out / "boundary_report.txt").write_text(report.render_text() + "\n", encoding="utf-8")
    rows = np.asarray(report.tables["per_time"], dtype=float)
    line_plot(
        out / "boundary_residuals.svg",
        [(rows[:, 0], rows[:, k], name) for k, name in
         ((1, "flux u"), (2, "flux v"), (3, "value u"), (4, "value v"))],
        title="boundary-condition residuals",
        xlabel="t", ylabel="relative residual",
    )
    summary = {
        "schema": "mkdv2c/mbp-summary/1",
        "constants": {"L_m": constants.L_m, "M_m": constants.M_m,
                      "P_m": constants.P_m, "R_m": constants.R_m},
        "exponents": {"i": constants.i, "j": constants.j, "l": constants.l},
        "metrics": report.metrics,
        "verdict": "pass" if report.verdict else "fail",
        "invariant_max_drift": drift.max_drift,
        "artifacts": ["profile.json", "profile.csv", "profile.svg",
                      "boundary_report.json", "boundary_report.txt",
                      "boundary_residuals.svg"],
    }
    summary.update(extra)
    (out / "summary.json").write_text(dump_json(summary), encoding="utf-8")
    _emit(args, summary, [report.render_text(), f"artifacts in {out}"])
    return 0 if report.verdict else 1


def cmd_mbp_build(args):
    doc = _load_config(
        args.config,
        required=("gamma1", "gamma2", "coupling", "initial"),
        optional=("alpha", "lambda", "a", "mu", "alpha_I", "alpha_II",
                  "tol", "max_step", "times", "tolerance", "solve_pad"),
    )
    params, coupling, g1, g2, tol, times = _mbp_common(doc, args)
    pad = float(doc.get("solve_pad", 0.0))
    if pad < 0:
        raise ConfigError("solve_pad must be >= 0")
    max_step = float(doc.get("max_step", _PROFILE_MAX_STEP))
    initial = _initial_state(doc, g1)
    profile = integrate(initial, g2 + pad, params, coupling, tol=tol, max_step=max_step)
    if pad > 0.0:
        back = integrate(initial, g1 - pad, params, coupling, tol=tol, max_step=max_step)
        profile = merge_profiles(back, profile)
    mbp = MovingBoundaryProblem(g1, g2, params, coupling, profile)
    return _mbp_report(args, mbp, float(doc.get("tolerance", 1e-6)), times, {"mode": "build"})


def cmd_mbp_shoot(args):
    doc = _load_config(
        args.config,
        required=("gamma1", "gamma2", "coupling", "targets", "guesses"),
        optional=("alpha", "lambda", "a", "mu", "tol", "max_step", "times",
                  "tolerance", "aux"),
    )
    params, coupling, g1, g2, tol, times = _mbp_common(doc, args)
    targets = doc["targets"]
    if not isinstance(targets, dict) or set(targets) != {"P_m", "R_m"}:
        raise ConfigError("'targets' must be an object with keys P_m, R_m")
    guesses = doc["guesses"]
    want = {"phi_prime", "psi", "psi_prime"}
    if not isinstance(guesses, dict) or set(guesses) != want:
        raise ConfigError(f"'guesses' must have exactly the keys {sorted(want)}")
    aux_doc = doc.get("aux", {"kind": "invariant", "value": 0.0})
    if not isinstance(aux_doc, dict) or set(aux_doc) != {"kind", "value"}:
        raise ConfigError("'aux' must be an object with keys kind, value")
    mbp = shoot_for_targets(
        targets={"P_m": float(targets["P_m"]), "R_m": float(targets["R_m"])},
        geometry={"gamma1": g1, "gamma2": g2, "a": params.a},
        params=params, coupling=coupling,
        free={"phi_prime_start": float(guesses["phi_prime"]),
              "psi_start": float(guesses["psi"]),
              "psi_prime_start": float(guesses["psi_prime"])},
        aux=(aux_doc["kind"], float(aux_doc["value"])),
        tol=tol, max_step=float(doc.get("max_step", _PROFILE_MAX_STEP)),
    )
    start = mbp.profile.evaluate(g1)
    extra = {
        "mode": "shoot",
        "recovered_initial": {
            "phi": start.phi, "phi_prime": start.phi_prime,
            "psi": start.psi, "psi_prime": start.psi_prime,
        },
    }
    return _mbp_report(args, mbp, float(doc.get("tolerance", 1e-6)), times, extra)


def cmd_mbp_verify(args):
    doc = _load_config(
        args.config,
        required=("gamma1", "gamma2", "profile"),
        optional=("times", "tolerance", "tol"),
    )
    g1, g2 = float(doc["gamma1"]), float(doc["gamma2"])
    try:
        profile = ReducedProfile.from_json(Path(doc["profile"]).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read profile {doc['profile']!r}: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad profile document: {exc}") from exc
    times = doc.get("times", list(DEFAULT_SAMPLE_TIMES))
    if not isinstance(times, list) or not times or not all(
        isinstance(t, (int, float)) and t > 0 for t in times
    ):
        raise ConfigError("'times' must be a non-empty list of positive numbers")
    mbp = MovingBoundaryProblem(g1, g2, profile.params, profile.coupling, profile)
    return _mbp_report(args, mbp, float(doc.get("tolerance", 1e-6)),
                       [float(t) for t in times], {"mode": "verify"})


def cmd_pde_verify(args):
    doc = _load_config(
        args.config,
        required=("coupling", "initial", "xi_start", "xi_end"),
        optional=("alpha", "lambda", "a", "mu", "tol", "max_step", "grid",
                  "tolerance", "mol"),
    )
    params = _system_params(doc)
    coupling = make_coupling(doc["coupling"])
    xi0, xi1 = float(doc["xi_start"]), float(doc["xi_end"])
    initial = _initial_state(doc, xi0)
    tol = _tol(doc, args)
    grid_doc = doc.get("grid", {})
    if not isinstance(grid_doc, dict) or set(grid_doc) - {"nx", "nt", "t_min", "t_max"}:
        raise ConfigError("'grid' accepts keys nx, nt, t_min, t_max")
    nx = int(grid_doc.get("nx", 400))
    nt = int(grid_doc.get("nt", 100))
    t_span = (float(grid_doc.get("t_min", 0.5)), float(grid_doc.get("t_max", 2.0)))
    if not (t_span[1] > t_span[0] and nx >= 24 and nt >= 12):
        raise ConfigError(f"bad grid spec nx={nx} nt={nt} t_span={t_span}")
    tolerance = float(doc.get("tolerance", 1e-6))

    profile = integrate(initial, xi1, params, coupling, tol=tol,
                        max_step=float(doc.get("max_step", _PROFILE_MAX_STEP)))
    grid = similarity_grid(profile, nx=nx, nt=nt, t_span=t_span)
    report, res1, res2 = pde_residual(
        grid, params, coupling, tolerance=tolerance, return_fields=True
    )
    out = _out_dir(args)
    grid.write_csv(out / "fields.csv", res1=res1, res2=res2)
    (out / "pde_report.json").write_text(dump_json(report.to_dict()), encoding="utf-8")
    (out / "pde_report.txt").write_text(report.render_text() + "\n", encoding="utf-8")
    row = len(grid.t_nodes) // 2
    line_plot(
        out / "residuals.svg",
        [(grid.x_nodes, np.abs(res1[row]), "|res eq1|"),
         (grid.x_nodes, np.abs(res2[row]), "|res eq2|")],
        title=f"pde residual at t={grid.t_nodes[row]:g}",
        xlabel="x", ylabel="residual",
    )
    summary = {
        "schema": "mkdv2c/pde-verify-summary/1",
        "metrics": report.metrics,
        "meta": report.meta,
        "verdict": "pass" if report.verdict else "fail",
        "artifacts": ["fields.csv", "pde_report.json", "pde_report.txt", "residuals.svg"],
    }

    mol_doc = doc.get("mol")
    if mol_doc:
        if not isinstance(mol_doc, dict) or set(mol_doc) - {"ny", "rtol"}:
            raise ConfigError("'mol' accepts keys ny, rtol")
        mbp = MovingBoundaryProblem(xi0, xi1, params, coupling, profile)
        direct = mol_direct_solve(
            mbp, ny=int(mol_doc.get("ny", 161)), t_span=(t_span[0], 1.0),
            t_eval=np.array([t_span[0], 1.0]), nx=nx,
            rtol=float(mol_doc.get("rtol", 1e-8)),
        )
        u_sim, v_sim = np.empty_like(direct.u), np.empty_like(direct.v)
        from .fields import reconstruct_fields

        for k, t in enumerate(direct.t_nodes):
            u_sim[k], v_sim[k] = reconstruct_fields(profile, float(t), direct.x_nodes)
        num = np.sqrt(np.mean((direct.u[-1] - u_sim[-1]) ** 2 + (direct.v[-1] - v_sim[-1]) ** 2))
        den = np.sqrt(np.mean(u_sim[-1] ** 2 + v_sim[-1] ** 2))
        summary["mol_rel_l2_at_t1"] = float(num / den)

    (out / "summary.json").write_text(dump_json(summary), encoding="utf-8")
    _emit(args, summary, [report.render_text(), f"artifacts in {out}"])
    return 0 if report.verdict else 1


def cmd_pii_hierarchy(args):
    doc = _load_config(
        args.config,
        required=("n_up",),
        optional=("z_grid", "sigma"),
    )
    n_up = doc["n_up"]
    if not isinstance(n_up, int) or n_up < 0:
        raise ConfigError(f"'n_up' must be a non-negative integer, got {n_up!r}")
    sigma = int(doc.get("sigma", +1))
    zg = doc.get("z_grid", {})
    if not isinstance(zg, dict) or set(zg) - {"start", "end", "num"}:
        raise ConfigError("'z_grid' accepts keys start, end, num")
    z = np.linspace(float(zg.get("start", -6.0)), float(zg.get("end", 6.0)),
                    int(zg.get("num", 481)))

    members = rational_hierarchy(n_up, sigma=sigma)
    out = _out_dir(args)
    manifest = {"schema": "mkdv2c/pii-hierarchy/1", "sigma": sigma, "members": []}
    curves = []
    for k, sol in enumerate(members):
        rows = []
        for zv in z:
            if sol.guarded(zv):
                continue
            w, wp = sol(zv)
            rows.append((zv, w, wp, sol.residual(zv)))
        csv_name = f"member_{k}.csv"
        with open(out / csv_name, "w", encoding="utf-8") as fh:
            fh.write("z,w,w_prime,residual\n")
            for row in rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        arr = np.asarray(rows)
        manifest["members"].append({
            "alpha_p": sol.alpha_p,
            "kind": sol.kind,
            "expression": str(sol.expr),
            "poles": [0.5 * (g[0] + g[1]) for g in sol.pole_guards],
            "max_residual": float(np.max(arr[:, 3])) if len(rows) else None,
            "csv": csv_name,
        })
        curves.append((arr[:, 0], arr[:, 1], f"alpha_p={sol.alpha_p:g}"))
    line_plot(out / "hierarchy.svg", curves, title="rational hierarchy",
              xlabel="z", ylabel="w", clip_percentile=95.0)
    (out / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")
    _emit(args, manifest, [
        f"{len(members)} members written to {out}",
        *(f"  alpha_p={m['alpha_p']:g}: max residual {m['max_residual']:.3e}, "
          f"poles at {[round(p, 4) for p in m['poles']]}"
          for m in manifest["members"]),
    ])
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mkdv2c",
        description="similarity solutions and moving boundary problems for a "
                    "modulated two-component mKdV system",
    )
    parser.add_argument("--version", action="version", version=f"mkdv2c {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON config")
    common.add_argument("--out", default=None, help="output directory (default $MKDV2C_OUT or ./mkdv2c-out)")
    common.add_argument("--tol", type=float, default=None, help="override integrator tolerance")
    common.add_argument("--json", action="store_true", help="print the JSON summary to stdout")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("reduce-solve", parents=[common]).set_defaults(func=cmd_reduce_solve)

    mbp = sub.add_parser("mbp").add_subparsers(dest="mode", required=True)
    mbp.add_parser("build", parents=[common]).set_defaults(func=cmd_mbp_build)
    mbp.add_parser("shoot", parents=[common]).set_defaults(func=cmd_mbp_shoot)
    mbp.add_parser("verify", parents=[common]).set_defaults(func=cmd_mbp_verify)

    sub.add_parser("pde-verify", parents=[common]).set_defaults(func=cmd_pde_verify)

    pii = sub.add_parser("pii").add_subparsers(dest="mode", required=True)
    pii.add_parser("hierarchy", parents=[common]).set_defaults(func=cmd_pii_hierarchy)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        body = {"error": {"type": "config", "message": str(exc)}}
        sys.stderr.write(dump_json(body))
        return 2
    except (Mkdv2cError, ValueError) as exc:
        body = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        extra = getattr(exc, "history", None)
        if extra:
            body["error"]["history"] = extra
        sys.stderr.write(dump_json(body))
        return 1


if __name__ == "__main__":
    sys.exit(main())
