"""Scenario execution: builds data, runs the measurement, writes artifacts.

Every run writes, under its output directory:

* ``manifest.json``   - verbatim config, toolkit version, seed;
* ``series/*.csv``    - one file per norm series, columns ``t,value`` with
  17-significant-digit decimals (lossless for doubles, bitwise reproducible);
* ``report.json``     - verdicts and diagnostics, embedding the config again;
* ``plots/*.svg``     - log-log curves with the predicted-slope guide line.

Exit-code policy lives in the CLI: 0 all verdicts pass, 2 verdict failures,
1 execution error (partial artifacts are flushed before the error propagates).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .analysis import (
    AblationScenario,
    DecayMeasurement,
    divergence_form_ablation,
    fit_decay,
    measure_semigroup_decay,
)
from .errors import ValidationError
from .fields import (
    curl_mixture_momentum_state,
    riesz_kernel_hat,
    riesz_momentum_pair,
    transverse_packet,
)
from .model import Grid, SpectralState, critical_quadratic, make_params
from .nonlinear import NonlinearScenario, run as run_nonlinear
from .scenario import NonlinearExponentsBlock, NonlinearInitBlock, ScenarioConfig, config_to_dict
from .spectral import CutoffSpec, default_cutoff
from .svgplot import loglog_svg
from .symbols import matexp_oracle, solution_symbol


@dataclass
class ScenarioOutcome:
    all_pass: bool
    report: dict
    out_dir: Path


def _write_csv(path: Path, times, values) -> None:
    lines = ["t,value"]
    for t, v in zip(times, values):
        lines.append(f"{t:.17g},{v:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _params_from_config(cfg: ScenarioConfig):
    pb = cfg.params
    return make_params(pb.mu, pb.nu, pb.kappa, pb.rho_ref, critical_quadratic(pb.pressure_k, pb.rho_ref))


def _grid_from_config(cfg: ScenarioConfig) -> Grid:
    gb = cfg.grid
    return Grid(dim=gb.dim, box_len=gb.box_len, n=gb.n)


def _build_data(cfg: ScenarioConfig, grid: Grid, rng) -> SpectralState:
    db = cfg.data
    support = db.support_radius if db.support_radius is not None else 0.98 * grid.box_len / 4.0
    if db.kind == "riesz_divergence":
        return riesz_momentum_pair(grid, db.gamma, support, rng=rng, amplitude=db.amplitude)[0]
    if db.kind == "riesz_generic":
        return riesz_momentum_pair(grid, db.gamma, support, rng=rng, amplitude=db.amplitude)[1]
    if db.kind == "scalar_riesz":
        theta_hat = riesz_kernel_hat(grid, db.gamma, support) * db.amplitude
        return SpectralState(grid=grid, theta_hat=theta_hat, m_hat=np.zeros((grid.dim,) + grid.shape, complex))
    if db.kind == "curl_mixture":
        return curl_mixture_momentum_state(grid, db.gamma_potential, db.rho_min, db.rho_max, amplitude=db.amplitude)
    if db.kind == "transverse_packet":
        return transverse_packet(grid, db.width, amplitude=db.amplitude)
    raise ValidationError(f"unhandled data kind '{db.kind}'")


def _series_dir(out_dir: Path) -> Path:
    d = out_dir / "series"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _plots_dir(out_dir: Path) -> Path:
    d = out_dir / "plots"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _symbol_verify_report(cfg: ScenarioConfig, out_dir: Path) -> dict:
    rng = np.random.default_rng(cfg.seed)
    regimes = {"positive": (0.05, 0.95), "negative": (1.05, 6.0), "degenerate": (1.0 - 0.9e-9, 1.0 + 0.9e-9)}
    rows = {}
    all_pass = True
    for regime, (lo, hi) in regimes.items():
        worst = 0.0
        ts = np.empty(cfg.samples_per_regime)
        devs = np.empty(cfg.samples_per_regime)
        for i in range(cfg.samples_per_regime):
            mu = rng.uniform(0.2, 3.0)
            nu = rng.uniform(-0.5 * mu, 3.0)
            rho = rng.uniform(0.3, 3.0)
            scale = ((mu + nu) / rho) ** 2 / 4.0
            kappa = scale * rng.uniform(lo, hi) / rho
            params = make_params(mu, nu, kappa, rho, critical_quadratic(1.0, rho))
            dim = int(rng.integers(1, 5))
            xi = rng.standard_normal(dim) * rng.uniform(0.1, cfg.xi_scale)
            xi_sq = float(xi @ xi)
            rate = max(params.alpha_star, 0.5 * (params.alpha_star + params.beta_star))
            t_cap = min(cfg.t_max, 25.0 / (rate * xi_sq)) if xi_sq > 0 else cfg.t_max
            t = rng.uniform(0.0, t_cap)
            M = solution_symbol(params, xi, t)
            O = matexp_oracle(params, xi, t)
            dev = float(np.linalg.norm(M - O) / max(np.linalg.norm(O), 1e-300))
            ts[i] = t
            devs[i] = dev
            worst = max(worst, dev)
        order = np.argsort(ts, kind="stable")
        tt = ts[order]
        tt = tt + np.arange(len(tt)) * 1e-12  # strictly increasing for the series file
        _write_csv(_series_dir(out_dir) / f"symbol_deviation_{regime}.csv", tt, devs[order])
        rows[regime] = {"max_relative_deviation": worst, "samples": cfg.samples_per_regime, "pass": worst <= cfg.tol_symbol}
        all_pass = all_pass and rows[regime]["pass"]
    return {"regimes": rows, "tolerance": cfg.tol_symbol, "pass": all_pass}


def _linear_decay_report(cfg: ScenarioConfig, out_dir: Path) -> dict:
    params = _params_from_config(cfg)
    grid = _grid_from_config(cfg)
    rng = np.random.default_rng(cfg.seed)
    data = _build_data(cfg, grid, rng)
    cutoff = CutoffSpec(eps=cfg.cutoff_eps) if cfg.cutoff_eps else default_cutoff(grid)
    meas: DecayMeasurement = measure_semigroup_decay(
        data,
        params,
        cfg.times.values(),
        band=cfg.band,
        cutoff=cutoff,
        p=cfg.exponents.p,
        j=cfg.exponents.j,
        w10=cfg.w10,
    )
    report = fit_decay(
        meas.series,
        cfg.fit_window,
        dim=grid.dim,
        p=cfg.exponents.p,
        q=cfg.exponents.q,
        j=cfg.exponents.j,
        tol_exp=cfg.tol_exp,
        trust_ok=meas.trust_ok(cfg.fit_window, cfg.trust_mode),
        strict_trust=False,
    )
    name = f"pair_{cfg.band}"
    _write_csv(_series_dir(out_dir) / f"{name}.csv", meas.series.times, meas.series.values)
    _write_csv(_series_dir(out_dir) / "trust_mass_radius.csv", meas.series.times, meas.trust_radii)
    _write_csv(_series_dir(out_dir) / "trust_edge_leak.csv", meas.series.times, meas.edge_leaks)
    svg = loglog_svg(
        meas.series.times,
        meas.series.values,
        title=f"{name}: fitted {report.fitted_exponent:+.3f}, predicted {report.predicted_exponent:+.3f}",
        guide_slope=report.predicted_exponent,
        guide_label=f"guide slope {report.predicted_exponent:+.3f}",
    )
    (_plots_dir(out_dir) / f"{name}.svg").write_text(svg)
    return {
        "decay": report.to_dict(),
        "trust_mode": cfg.trust_mode,
        "low_band_nonzero_modes": meas.band_modes,
        "cutoff_eps": cutoff.eps,
        "cutoff_profile": "quintic_smoothstep",
        "pass": report.verdict,
    }


def _ablation_report(cfg: ScenarioConfig, out_dir: Path) -> dict:
    params = _params_from_config(cfg)
    grid = _grid_from_config(cfg)
    support = cfg.data.support_radius if cfg.data.support_radius is not None else 0.98 * grid.box_len / 4.0
    scn = AblationScenario(
        params=params,
        grid=grid,
        gamma=cfg.data.gamma,
        support_radius=support,
        amplitude=cfg.data.amplitude,
        seed=cfg.seed,
        sample_times=tuple(cfg.times.values()),
        fit_window=cfg.fit_window,
        p=cfg.exponents.p,
        q=cfg.exponents.q,
        j=cfg.exponents.j,
        cutoff_eps=cfg.cutoff_eps,
        tol_exp=cfg.tol_exp,
        trust_mode=cfg.trust_mode,
    )
    result = divergence_form_ablation(scn)
    payload = result.to_dict()
    payload["gap_threshold"] = cfg.gap_threshold
    if result.skipped:
        payload["pass"] = False
        payload["skipped"] = True
        return payload
    payload["pass"] = bool(
        result.divergence_report.verdict
        and result.generic_report.fitted_exponent > result.divergence_report.fitted_exponent
        and result.gap >= cfg.gap_threshold
    )
    # re-measure series for artifact emission
    rng = np.random.default_rng(cfg.seed)
    div_data, gen_data = riesz_momentum_pair(grid, cfg.data.gamma, support, rng=rng, amplitude=cfg.data.amplitude)
    from .analysis import theta_low_band_series

    cutoff = CutoffSpec(eps=cfg.cutoff_eps) if cfg.cutoff_eps else default_cutoff(grid)
    for tag, data in (("divergence", div_data), ("generic", gen_data)):
        meas = theta_low_band_series(data, params, cfg.times.values(), cutoff, cfg.exponents.p)
        _write_csv(_series_dir(out_dir) / f"theta_low_{tag}.csv", meas.series.times, meas.series.values)
        fitted = payload[tag]["fitted_exponent"] if payload[tag] else float("nan")
        svg = loglog_svg(
            meas.series.times,
            meas.series.values,
            title=f"theta low band ({tag}): fitted {fitted:+.3f}",
            guide_slope=payload["divergence"]["predicted_exponent"],
            guide_label=f"guide slope {payload['divergence']['predicted_exponent']:+.3f}",
        )
        (_plots_dir(out_dir) / f"theta_low_{tag}.svg").write_text(svg)
    return payload


def _nonlinear_report(cfg: ScenarioConfig, out_dir: Path) -> dict:
    params = _params_from_config(cfg)
    grid = _grid_from_config(cfg)
    ne = cfg.nonlinear_exponents or NonlinearExponentsBlock()
    init = cfg.init or NonlinearInitBlock()
    scn = NonlinearScenario(
        params=params,
        grid=grid,
        amplitude=cfg.amplitude,
        t_end=cfg.t_end,
        dt=cfg.dt,
        seed=cfg.seed,
        p=ne.p,
        q1=ne.q1,
        q2=ne.q2,
        tau=ne.tau,
        theta_width=init.theta_width,
        m_envelope_width=init.m_envelope_width,
        m_smooth_width=init.m_smooth_width,
        m_relative_amplitude=init.m_relative_amplitude,
        sample_every=cfg.sample_every,
        nonlinear=cfg.nonlinear,
    )
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        result = run_nonlinear(scn)
    sdir = _series_dir(out_dir)
    for key, series in result.bundle.items():
        _write_csv(sdir / f"{key}.csv", series.times, series.values)
    _write_csv(sdir / "aggregate_N.csv", result.aggregate.times, result.aggregate.values)
    svg = loglog_svg(
        result.aggregate.times[1:],
        np.maximum(result.aggregate.values[1:], 1e-300),
        title="aggregate weighted norm",
    )
    (_plots_dir(out_dir) / "aggregate_N.svg").write_text(svg)
    return {
        "success": bool(result.success),
        "rejected": bool(result.rejected),
        "admissible_throughout": bool(result.admissible_throughout),
        "mass_drift": result.mass_drift,
        "momentum_drift": result.momentum_drift,
        "symmetry_defect": result.symmetry_defect,
        "aggregate_final": float(result.aggregate.values[-1]),
        "events": result.events,
        "pass": bool(result.success),
    }


_RUNNERS = {
    "symbol-verify": _symbol_verify_report,
    "linear-decay": _linear_decay_report,
    "ablation": _ablation_report,
    "nonlinear-run": _nonlinear_report,
}


def run_scenario(cfg: ScenarioConfig, out_dir) -> ScenarioOutcome:
    """Execute one scenario, writing all artifacts under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": config_to_dict(cfg), "version": __version__, "seed": cfg.seed}
    _write_json(out_dir / "manifest.json", manifest)
    try:
        body = _RUNNERS[cfg.kind](cfg, out_dir)
    except Exception as exc:
        _write_json(
            out_dir / "report.json",
            {"version": __version__, "kind": cfg.kind, "config": config_to_dict(cfg), "error": f"{type(exc).__name__}: {exc}", "pass": False},
        )
        raise
    report = {"version": __version__, "kind": cfg.kind, "config": config_to_dict(cfg)}
    report.update(body)
    _write_json(out_dir / "report.json", report)
    return ScenarioOutcome(all_pass=bool(report.get("pass", False)), report=report, out_dir=out_dir)


def run_sweep(sweep, out_root, threads: int = 1) -> list:
    """Fan independent scenarios out to a process pool, one subdirectory each."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = [(name, cfg, out_root / name) for name, cfg in sweep.scenarios]
    if threads <= 1:
        return [run_scenario(cfg, sub) for _, cfg, sub in jobs]
    import concurrent.futures as cf

    with cf.ProcessPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(run_scenario, cfg, sub) for _, cfg, sub in jobs]
        return [f.result() for f in futs]
