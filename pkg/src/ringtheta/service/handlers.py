"""Endpoint handlers: one function per operation, shared by the FastAPI
routes and the command-line client so both run identical code."""

from __future__ import annotations

import math

import numpy as np

from .. import analysis, detfunc, dynamics, labframe, model, semiclassics, spectral
from . import schemas as S

MHZ_PER_NS_INV = 1e3 / (2.0 * math.pi)  # nu[MHz] = omega[ns^-1] / (2 pi) * 1e3


def _params(p: S.ModelParamsIn) -> model.ModelParams:
    return model.ModelParams(
        n=p.n,
        n_sites=p.n_sites,
        theta=p.theta,
        omega=p.omega,
        inertia_ns=p.inertia_ns,
        include_constant_shift=p.include_constant_shift,
    )


def spectrum(req: S.SpectrumRequest) -> S.SpectrumResponse:
    params = _params(req.params)
    grid = req.theta_grid.resolve()
    result = spectral.spectrum_sweep(params, grid, req.n_branches)
    diag = None
    if req.diagnostics:
        has_pi = any(abs(t - math.pi) < 1e-9 for t in grid)
        if has_pi:
            diag = spectral.spectral_diagnostics(result, params)
        else:
            aug = spectral.spectrum_sweep(params, list(grid) + [math.pi], req.n_branches)
            diag = spectral.spectral_diagnostics(aug, params)
    return S.SpectrumResponse(
        theta=list(map(float, result.theta_grid)),
        energies=[list(map(float, row)) for row in result.energies],
        diagnostics=diag,
    )


def converge(req: S.ConvergeRequest) -> S.ConvergeResponse:
    rows = analysis.convergence_suite(
        req.kind,
        n=req.n,
        omega=req.omega,
        theta=req.theta,
        grid=req.grid,
        n_sites=req.n_sites,
        alpha_grid=tuple(req.alpha_grid),
    )
    return S.ConvergeResponse(kind=req.kind, rows=rows)


def run_dynamics(req: S.DynamicsRequest) -> S.DynamicsResponse:
    params = _params(req.params)
    psi0 = dynamics.prepare_initial_state(
        req.initial.kind,
        params,
        site=req.initial.site,
        alpha=req.initial.alpha,
        center_site=req.initial.center_site,
    )
    times = req.times.resolve()
    if req.schedule is not None:
        sched = dynamics.ThetaSchedule(
            np.array(req.schedule.knot_times_ns), np.array(req.schedule.knot_thetas)
        )
        traj = dynamics.evolve_theta_ramp(params, sched, psi0, times,
                                          n_steps=req.schedule.n_steps)
    else:
        H = model.build_ring_hamiltonian(params)
        traj = dynamics.evolve(H, psi0, times, inertia_ns=params.inertia_ns)
    wells = dynamics.well_populations(traj, params) if req.wells else None
    return S.DynamicsResponse(
        times_ns=list(map(float, traj.times_ns)),
        site_probs=[list(map(float, row)) for row in traj.site_probs],
        cos_x=list(map(float, traj.cos_x)),
        sin_x=list(map(float, traj.sin_x)),
        norm=list(map(float, traj.norm)),
        energy=list(map(float, traj.energy)),
        well_probs=None if wells is None else [list(map(float, r)) for r in wells],
        ground_state_fidelity=None
        if traj.ground_state_fidelity is None
        else list(map(float, traj.ground_state_fidelity)),
    )


def diga(req: S.DigaRequest) -> S.DigaResponse:
    pred = semiclassics.instanton_quantities(req.n, req.omega, req.theta)
    out = S.DigaResponse(
        action_real=pred.action_real,
        density=pred.density,
        chi_t=pred.chi_t,
        spectrum=list(map(float, pred.spectrum)),
    )
    if req.times_dimless is not None:
        ts = np.array(req.times_dimless.resolve())
        probs = np.stack(
            [
                semiclassics.diga_hop_probability(req.n, req.omega, req.theta,
                                                  req.from_well, l, ts)
                for l in range(req.n)
            ],
            axis=1,
        )
        cos_x, sin_x = semiclassics.diga_circle_expectations(req.n, req.omega, req.theta, ts)
        out.times_dimless = list(map(float, ts))
        out.hop_probs = [list(map(float, row)) for row in probs]
        out.cos_x = list(map(float, cos_x))
        out.sin_x = list(map(float, sin_x))
    return out


def gy(req: S.GyRequest) -> S.GyResponse:
    config = detfunc.GyConfig(
        half_length=req.half_length,
        ode_tolerance=req.ode_tolerance,
        epsilon_grid=tuple(req.epsilon_grid),
    )
    rep = detfunc.report(config, grid_points=req.fd_grid_points, with_oracle=req.with_oracle)
    return S.GyResponse(
        ratio_odd=rep["ratio_odd"],
        ratio_even_primed=rep["ratio_even_primed"],
        epsilon_detail=rep["epsilon_detail"],
        product=rep["product"],
        fd_oracle=rep.get("fd_oracle"),
    )


def lab_frame(req: S.LabFrameRequest) -> S.LabFrameResponse:
    graph = labframe.build_level_graph(req.graph.to_source())
    if req.design is not None:
        drives = labframe.design_drives(
            graph, req.design.Omega, req.design.Delta, req.design.n, req.design.theta
        )
    else:
        drives = labframe.DriveSet.from_list([d.model_dump() for d in req.drives])
    params_dim = graph.n_sites
    psi0 = dynamics.prepare_initial_state(
        "delta",
        model.ModelParams(n=1, n_sites=params_dim, theta=0.0, omega=1.0),
        site=req.initial_site,
    )
    times = req.times.resolve()
    cfg = labframe.IntegratorConfig(
        rtol=req.integrator.rtol,
        atol=req.integrator.atol,
        method=req.integrator.method,
        steps_per_fastest_cycle=req.integrator.steps_per_fastest_cycle,
    )
    traj = labframe.simulate_lab_frame(graph, drives, psi0, times, cfg)
    resp = S.LabFrameResponse(
        times_ns=list(map(float, traj.times_ns)),
        level_ids=traj.level_ids,
        ring_populations=[list(map(float, r)) for r in traj.ring_populations],
        spectator_populations=[list(map(float, r)) for r in traj.site_probs[:, traj.ring_dim:]],
        cos_x=list(map(float, traj.cos_x)),
        sin_x=list(map(float, traj.sin_x)),
        norm=list(map(float, traj.norm)),
        leakage=list(map(float, traj.leakage)),
        delta_sep=float(graph.delta_sep()) if math.isfinite(graph.delta_sep()) else -1.0,
    )
    if req.compare_rwa:
        red = labframe.rwa_reduce(graph, drives)
        rwa_traj = dynamics.evolve(red.operator, psi0, times, inertia_ns=1.0)
        dev = float(np.max(np.abs(traj.ring_populations - rwa_traj.site_probs)))
        resp.rwa_theta = red.theta
        resp.rwa_populations = [list(map(float, r)) for r in rwa_traj.site_probs]
        resp.max_population_deviation = dev
    return resp


def map_params(req: S.MapParamsRequest) -> S.MapParamsResponse:
    m = labframe.map_experimental_params(req.Omega, req.Delta, req.n, req.n_sites)
    resp = S.MapParamsResponse(**m.to_dict())
    if req.units == "mhz":
        resp.omega_tilde_mhz = m.omega_tilde * MHZ_PER_NS_INV
        resp.omega_diga_tilde_mhz = m.omega_diga_tilde * MHZ_PER_NS_INV
    return resp


def fit(req: S.FitRequest) -> S.FitResponse:
    result = analysis.fit_tunneling_probability(
        np.array(req.times_ns), np.array(req.values), model=req.model
    )
    d = result.to_dict()
    return S.FitResponse(**d)
