"""Batch command-line client.

Each subcommand builds the same request model the service endpoint
accepts, runs it (in process by default, or against a running server via
--server), and writes deterministic CSV/JSON outputs plus a manifest
recording the exact configuration and its hash.

Exit codes: 2 bad configuration, 3 numerical failure, 4 I/O failure.
Environment: RINGTHETA_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import click
import pydantic

from . import __version__
from .analysis import AnalysisError
from .detfunc import DetFuncError
from .dynamics import DynamicsError
from .labframe import LabFrameError
from .model import ModelError
from .spectral import EigensolverError
from .service import handlers
from .service import schemas as S

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4

CONFIG_ERRORS = (ModelError, DynamicsError, LabFrameError, AnalysisError,
                 pydantic.ValidationError, ValueError)
NUMERICAL_ERRORS = (EigensolverError, DetFuncError, FloatingPointError, ArithmeticError)


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _run(command: str, req, out_dir: str, server: str | None):
    """Dispatch a request locally or over HTTP; returns the response model."""
    handler = {
        "spectrum": (handlers.spectrum, S.SpectrumResponse),
        "converge": (handlers.converge, S.ConvergeResponse),
        "dynamics": (handlers.run_dynamics, S.DynamicsResponse),
        "diga": (handlers.diga, S.DigaResponse),
        "gy": (handlers.gy, S.GyResponse),
        "labframe": (handlers.lab_frame, S.LabFrameResponse),
        "map-params": (handlers.map_params, S.MapParamsResponse),
        "fit": (handlers.fit, S.FitResponse),
    }[command]
    if server is None:
        return handler[0](req)
    import httpx

    url = server.rstrip("/") + "/" + command
    try:
        r = httpx.post(url, json=req.model_dump(), timeout=None)
    except httpx.HTTPError as exc:
        click.echo(f"server unreachable: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_IO)
    if r.status_code == 422:
        click.echo(f"server rejected the configuration: {r.text}", err=True)
        raise click.exceptions.Exit(EXIT_CONFIG)
    if r.status_code >= 500:
        click.echo(f"numerical failure on the server: {r.text}", err=True)
        raise click.exceptions.Exit(EXIT_NUMERICAL)
    return handler[1].model_validate(r.json())


def _finish(command: str, req, resp, out_dir: str, writers, t0: float):
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for name, write in writers:
            path = out / name
            write(path, resp)
            files.append(name)
        payload = req.model_dump(mode="json")
        manifest = {
            "command": command,
            "config": payload,
            "config_hash": _config_hash(payload),
            "package_version": __version__,
            "wall_time_s": round(time.time() - t0, 3),
            "outputs": files,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_IO)
    click.echo(f"{command}: wrote {', '.join(files)} and manifest.json to {out}")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2))


def _guarded(fn):
    def wrapped(*a, **kw):
        try:
            return fn(*a, **kw)
        except click.exceptions.Exit:
            raise
        except NUMERICAL_ERRORS as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_NUMERICAL)
        except CONFIG_ERRORS as exc:
            click.echo(f"configuration error: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_CONFIG)
        except OSError as exc:
            click.echo(f"I/O error: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_IO)

    wrapped.__name__ = fn.__name__
    return wrapped


def _load_config(config, model_cls):
    if config is None:
        return None
    with open(config) as fh:
        return model_cls.model_validate(json.load(fh))


common = [
    click.option("--out", default="ringtheta-out", show_default=True,
                 help="Output directory."),
    click.option("--server", default=None,
                 help="Base URL of a running service; default runs in process."),
    click.option("--config", default=None, type=click.Path(exists=True),
                 help="JSON request payload; overrides the other flags."),
]


def _common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Particle on a discretized circle with a topological angle."""


@main.command()
@click.option("--n", default=2, show_default=True)
@click.option("--omega", default=2.0, show_default=True)
@click.option("--nsites", default=120, show_default=True)
@click.option("--theta-grid", "points", default=101, show_default=True,
              help="Number of uniform grid points.")
@click.option("--theta-min", default=-math.pi)
@click.option("--theta-max", default=math.pi)
@click.option("--branches", default=6, show_default=True)
@_common
@_guarded
def spectrum(n, omega, nsites, points, theta_min, theta_max, branches, out, server, config):
    """Energy branches over a theta grid (with degeneracy/monodromy report)."""
    t0 = time.time()
    req = _load_config(config, S.SpectrumRequest) or S.SpectrumRequest(
        params=S.ModelParamsIn(n=n, n_sites=nsites, omega=omega),
        theta_grid=S.ThetaGridIn(lo=theta_min, hi=theta_max, points=points),
        n_branches=branches,
    )
    resp = _run("spectrum", req, out, server)

    def write_spectrum(path, r):
        header = ["theta"] + [f"E_{k}" for k in range(len(r.energies[0]))]
        _write_csv(path, header, [[t] + row for t, row in zip(r.theta, r.energies)])

    _finish("spectrum", req, resp, out,
            [("spectrum.csv", write_spectrum),
             ("diagnostics.json", lambda p, r: _write_json(p, r.diagnostics))], t0)


@main.command()
@click.option("--kind", type=click.Choice(["gap_vs_ns", "ed_diga_ratio_vs_omega",
                                           "fuzziness_vs_alpha"]), required=True)
@click.option("--n", default=2, show_default=True)
@click.option("--omega", default=2.0, show_default=True)
@click.option("--theta", default=0.0, show_default=True)
@click.option("--nsites", default=2000, show_default=True,
              help="Sites for the ratio sweep (or the fuzziness run).")
@click.option("--grid", default=None, help="Comma-separated sweep values.")
@_common
@_guarded
def converge(kind, n, omega, theta, nsites, grid, out, server, config):
    """Convergence and initial-state sweep tables."""
    t0 = time.time()
    parsed = [float(x) for x in grid.split(",")] if grid else None
    req = _load_config(config, S.ConvergeRequest) or S.ConvergeRequest(
        kind=kind, n=n, omega=omega, theta=theta, n_sites=nsites, grid=parsed
    )
    resp = _run("converge", req, out, server)

    def write_rows(path, r):
        keys = sorted({k for row in r.rows for k in row})
        _write_csv(path, keys, [[row.get(k, "") for k in keys] for row in r.rows])

    _finish("converge", req, resp, out, [("converge.csv", write_rows)], t0)


@main.command()
@click.option("--n", default=2, show_default=True)
@click.option("--omega", default=1.5, show_default=True)
@click.option("--nsites", default=4, show_default=True)
@click.option("--theta", default=0.0, show_default=True)
@click.option("--inertia", default=150.0, show_default=True)
@click.option("--init", "init_kind", type=click.Choice(["delta", "cosine_power"]),
              default="delta", show_default=True)
@click.option("--site", default=0, show_default=True)
@click.option("--alpha", default=None, type=float)
@click.option("--center-site", default=0)
@click.option("--tmax", default=5000.0, show_default=True, help="Horizon in ns.")
@click.option("--points", default=1000, show_default=True)
@click.option("--wells", is_flag=True, help="Also write well-aggregated populations.")
@click.option("--ramp", default=None,
              help="Theta schedule knots 't0:th0,t1:th1,...' (ns:radians).")
@click.option("--ramp-steps", default=200, show_default=True)
@_common
@_guarded
def dynamics(n, omega, nsites, theta, inertia, init_kind, site, alpha, center_site,
             tmax, points, wells, ramp, ramp_steps, out, server, config):
    """Real-time evolution of the ring model (static theta or a ramp)."""
    t0 = time.time()
    schedule = None
    if ramp:
        knots = [kv.split(":") for kv in ramp.split(",")]
        schedule = S.ThetaScheduleIn(
            knot_times_ns=[float(a) for a, _ in knots],
            knot_thetas=[float(b) for _, b in knots],
            n_steps=ramp_steps,
        )
    req = _load_config(config, S.DynamicsRequest) or S.DynamicsRequest(
        params=S.ModelParamsIn(n=n, n_sites=nsites, theta=theta, omega=omega,
                               inertia_ns=inertia),
        initial=S.InitialStateIn(kind=init_kind, site=site, alpha=alpha,
                                 center_site=center_site),
        times=S.TimesIn(t_max_ns=tmax, points=points),
        schedule=schedule,
        wells=wells,
    )
    resp = _run("dynamics", req, out, server)

    def write_traj(path, r):
        ns_dim = len(r.site_probs[0])
        header = ["time_ns"] + [f"P_{i}" for i in range(ns_dim)] + \
                 ["cos_x", "sin_x", "norm", "energy"]
        if r.well_probs is not None:
            header += [f"well_{w}" for w in range(len(r.well_probs[0]))]
        if r.ground_state_fidelity is not None:
            header += ["ground_state_fidelity"]
        rows = []
        for i, t in enumerate(r.times_ns):
            row = [t] + r.site_probs[i] + [r.cos_x[i], r.sin_x[i], r.norm[i], r.energy[i]]
            if r.well_probs is not None:
                row += r.well_probs[i]
            if r.ground_state_fidelity is not None:
                row += [r.ground_state_fidelity[i]]
            rows.append(row)
        _write_csv(path, header, rows)

    _finish("dynamics", req, resp, out, [("trajectory.csv", write_traj)], t0)


@main.command()
@click.option("--n", default=2, show_default=True)
@click.option("--omega", default=2.0, show_default=True)
@click.option("--theta", default=0.0, show_default=True)
@click.option("--from-well", default=0, show_default=True)
@click.option("--tmax", default=None, type=float,
              help="Dimensionless horizon for the closed-form time series.")
@click.option("--points", default=1000, show_default=True)
@_common
@_guarded
def diga(n, omega, theta, from_well, tmax, points, out, server, config):
    """Dilute-instanton-gas closed forms (and optional time series)."""
    t0 = time.time()
    times = S.TimesIn(t_max_ns=tmax, points=points) if tmax else None
    req = _load_config(config, S.DigaRequest) or S.DigaRequest(
        n=n, omega=omega, theta=theta, from_well=from_well, times_dimless=times
    )
    resp = _run("diga", req, out, server)
    writers = [("diga.json", lambda p, r: _write_json(p, {
        "action_real": r.action_real, "density": r.density,
        "chi_t": r.chi_t, "spectrum": r.spectrum}))]
    if resp.times_dimless is not None:
        def write_series(path, r):
            nn = len(r.hop_probs[0])
            header = ["t_dimless"] + [f"P_0_to_{l}" for l in range(nn)] + ["cos_x", "sin_x"]
            rows = [[t] + r.hop_probs[i] + [r.cos_x[i], r.sin_x[i]]
                    for i, t in enumerate(r.times_dimless)]
            _write_csv(path, header, rows)
        writers.append(("diga_timeseries.csv", write_series))
    _finish("diga", req, resp, out, writers, t0)


@main.command()
@click.option("--half-length", default=20.0, show_default=True)
@click.option("--ode-tol", default=1e-10, show_default=True)
@click.option("--eps-grid", default="1e-2,1e-3,1e-4", show_default=True)
@click.option("--fd-grid", default=4001, show_default=True)
@click.option("--no-oracle", is_flag=True)
@_common
@_guarded
def gy(half_length, ode_tol, eps_grid, fd_grid, no_oracle, out, server, config):
    """Fluctuation determinant ratios (shooting + finite-difference oracle)."""
    t0 = time.time()
    req = _load_config(config, S.GyRequest) or S.GyRequest(
        half_length=half_length,
        ode_tolerance=ode_tol,
        epsilon_grid=[float(x) for x in eps_grid.split(",")],
        fd_grid_points=fd_grid,
        with_oracle=not no_oracle,
    )
    resp = _run("gy", req, out, server)
    _finish("gy", req, resp, out,
            [("gy.json", lambda p, r: _write_json(p, r.model_dump()))], t0)


@main.command(name="labframe")
@click.option("--nsites", default=4, show_default=True)
@click.option("--delta-sep", default=0.0628, show_default=True)
@click.option("--spectators", default=2, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--graph-file", default=None, type=click.Path(exists=True),
              help="Load the level graph from JSON instead of synthesizing.")
@click.option("--omega-rabi", "Omega", default=0.00135, show_default=True)
@click.option("--delta", "Delta", default=0.00375, show_default=True)
@click.option("--n", default=2, show_default=True)
@click.option("--theta", default=0.0, show_default=True)
@click.option("--drives-file", default=None, type=click.Path(exists=True),
              help="Explicit drive list JSON instead of designing from (Omega, Delta).")
@click.option("--tmax", default=5000.0, show_default=True)
@click.option("--points", default=501, show_default=True)
@click.option("--no-compare", is_flag=True, help="Skip the RWA reference run.")
@_common
@_guarded
def labframe_cmd(nsites, delta_sep, spectators, seed, graph_file, Omega, Delta, n,
                 theta, drives_file, tmax, points, no_compare, out, server, config):
    """Full lab-frame integration vs the rotating-wave tight-binding model."""
    t0 = time.time()
    if config:
        req = _load_config(config, S.LabFrameRequest)
    else:
        graph = (S.LevelGraphSourceIn(kind="file", path=graph_file) if graph_file
                 else S.LevelGraphSourceIn(kind="synthetic", n_sites=nsites,
                                           delta_sep=delta_sep,
                                           spectators_per_level=spectators, seed=seed))
        drives = None
        design = None
        if drives_file:
            with open(drives_file) as fh:
                drives = [S.DriveIn.model_validate(d) for d in json.load(fh)]
        else:
            design = S.DriveDesignIn(Omega=Omega, Delta=Delta, n=n, theta=theta)
        req = S.LabFrameRequest(
            graph=graph, design=design, drives=drives,
            times=S.TimesIn(t_max_ns=tmax, points=points),
            compare_rwa=not no_compare,
        )
    resp = _run("labframe", req, out, server)

    def write_traj(path, r):
        ns_dim = len(r.ring_populations[0])
        header = ["time_ns"] + [f"P_{i}" for i in range(ns_dim)] + \
                 ["cos_x", "sin_x", "norm", "leakage"]
        if r.rwa_populations is not None:
            header += [f"rwa_P_{i}" for i in range(ns_dim)]
        rows = []
        for i, t in enumerate(r.times_ns):
            row = [t] + r.ring_populations[i] + [r.cos_x[i], r.sin_x[i],
                                                 r.norm[i], r.leakage[i]]
            if r.rwa_populations is not None:
                row += r.rwa_populations[i]
            rows.append(row)
        _write_csv(path, header, rows)

    def write_report(path, r):
        _write_json(path, {
            "delta_sep": r.delta_sep,
            "rwa_theta": r.rwa_theta,
            "max_population_deviation": r.max_population_deviation,
            "level_ids": r.level_ids,
        })

    _finish("labframe", req, resp, out,
            [("labframe.csv", write_traj), ("labframe.json", write_report)], t0)


@main.command(name="map-params")
@click.option("--omega-rabi", "Omega", required=True, type=float,
              help="Rabi angular frequency, ns^-1.")
@click.option("--delta", "Delta", required=True, type=float,
              help="Detuning scale, ns^-1.")
@click.option("--n", required=True, type=int)
@click.option("--nsites", required=True, type=int)
@click.option("--units", type=click.Choice(["ns_inv", "mhz"]), default="ns_inv",
              show_default=True)
@_common
@_guarded
def map_params(Omega, Delta, n, nsites, units, out, server, config):
    """Experimental knobs -> theory scales and the feasibility ratio."""
    t0 = time.time()
    req = _load_config(config, S.MapParamsRequest) or S.MapParamsRequest(
        Omega=Omega, Delta=Delta, n=n, n_sites=nsites, units=units
    )
    resp = _run("map-params", req, out, server)
    _finish("map-params", req, resp, out,
            [("map_params.json", lambda p, r: _write_json(p, r.model_dump()))], t0)


@main.command()
@click.option("--series", required=True, type=click.Path(exists=True),
              help="CSV with the time series to fit.")
@click.option("--time-col", default="time_ns", show_default=True)
@click.option("--value-col", default="P_0", show_default=True)
@click.option("--model", "model_name",
              type=click.Choice(["n2_prob", "n3_cos_highsym", "n3_cos_generic"]),
              default="n2_prob", show_default=True)
@_common
@_guarded
def fit(series, time_col, value_col, model_name, out, server, config):
    """Fit an oscillation model to a trajectory column."""
    t0 = time.time()
    if config:
        req = _load_config(config, S.FitRequest)
    else:
        times, values = [], []
        with open(series) as fh:
            for row in csv.DictReader(fh):
                times.append(float(row[time_col]))
                values.append(float(row[value_col]))
        req = S.FitRequest(times_ns=times, values=values, model=model_name)
    resp = _run("fit", req, out, server)
    _finish("fit", req, resp, out,
            [("fit.json", lambda p, r: _write_json(p, r.model_dump()))], t0)


if __name__ == "__main__":
    main()
