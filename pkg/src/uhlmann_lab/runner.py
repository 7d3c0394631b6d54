"""Experiment drivers: presets, sweeps, transition bisections, file output.

Each driver runs one named experiment end to end and writes versioned CSVs
plus a report.json into the configured output directory. CSV bytes are
deterministic for a fixed config and grid (single writer, fixed float format,
thread-count independent kernels); report.json additionally carries wall-clock
timings and is exempt from byte identity.

Which state feeds the holonomy differs per experiment and is deliberate. The
invariant time series at gamma > 0 and the fig2 gap scan diagnose the
instantaneously dephased projection of the evolved field (the object whose
amplitude-gap closing marks the ramp transition), while fig3 and fig4 diagnose
the raw evolved final state, whose residual coherences at weak dephasing carry
the noise-induced transition; projecting there removes the transition
entirely. At gamma = 2 and t = 25 the two objects agree to machine precision.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AmbiguousWinding, ConfigError, GaplessSpectrum
from .evolution import (
    DephasingConfig,
    IntegratorConfig,
    StateField,
    band_populations,
    dephased_projection,
    evolve,
    ground_state_field,
)
from .geometry import (
    berry_phase_profile,
    chern_number,
    field_loops,
    pure_state_vectors,
    spectral_flow,
    spectrum_index,
    uhlmann_number,
)
from .model import MomentumGrid, hamiltonian_chern, momentum_grid
from .ramp import RampProtocol, m_of_t

REPORT_SCHEMA = "uhlmann-lab/report v1"
PHASE_DIAGRAM_SCHEMA = "uhlmann-lab/phase-diagram v1"
SERIES_SCHEMA = "uhlmann-lab/invariant-series v1"
PROFILE_SCHEMA = "uhlmann-lab/phase-profile v1"
FLOW_SCHEMA = "uhlmann-lab/spectral-flow v1"
OCCUPATION_SCHEMA = "uhlmann-lab/occupation v1"
GAP_SCAN_SCHEMA = "uhlmann-lab/gap-scan v1"

EXPERIMENTS = ("phase-diagram", "fig1", "fig2", "fig3", "fig4", "custom")

# stop widths for the transition bisections; t* is refined further than the
# 0.02 reporting floor so the gap certificate at the estimate is meaningful
BRACKET_GAMMA = 1e-3
BRACKET_V = 0.05
BRACKET_T = 2e-4

_RAMP = RampProtocol(m_i=-4.0, m_f=-1.0, v=0.2)


def _fig1_samples() -> tuple[float, ...]:
    return tuple(float(t) for t in np.linspace(0.0, 25.0, 11))


PRESETS: dict[str, dict] = {
    "phase-diagram": dict(protocol=_RAMP, gamma=0.0, velocities=(0.2,), sample_times=(25.0,)),
    "fig1": dict(protocol=_RAMP, gamma=(0.0, 2.0), velocities=(0.2,), sample_times=_fig1_samples()),
    "fig2": dict(protocol=_RAMP, gamma=2.0, velocities=(0.2,), sample_times=(5.0, 25.0)),
    "fig3": dict(protocol=_RAMP, gamma=(0.01, 0.024, 0.05), velocities=(0.2,), sample_times=(25.0,)),
    "fig4": dict(protocol=_RAMP, gamma=2.0, velocities=(4.0, 2.5, 1.0), sample_times=(25.0,)),
    "custom": dict(protocol=_RAMP, gamma=(0.0, 2.0), velocities=(0.2,), sample_times=_fig1_samples()),
}
_COMMON = dict(grid=(101, 201), dt=1e-3)

_CONFIG_KEYS = {
    "experiment", "protocol", "gamma", "velocities", "grid",
    "sample_times", "output_dir", "dt",
}
_PROTOCOL_KEYS = {"m_i", "m_f", "v"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters of one runner invocation."""

    experiment: str
    protocol: RampProtocol
    gamma: float | tuple[float, ...]
    velocities: tuple[float, ...]
    grid: tuple[int, int]
    sample_times: tuple[float, ...]
    output_dir: Path
    dt: float

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        nkx, nky = self.grid
        if nkx < 21 or nky < 21:
            raise ConfigError(f"grid {self.grid} below the 21-point minimum")
        if not self.velocities:
            raise ConfigError("empty velocity sweep")
        if any(v <= 0 for v in self.velocities):
            raise ConfigError("ramp velocities must be positive")
        gammas = self.gamma_list()
        if not gammas:
            raise ConfigError("empty gamma sweep")
        if any(g < 0 for g in gammas):
            raise ConfigError("negative dephasing rate")
        if self.dt <= 0:
            raise ConfigError(f"dt = {self.dt} must be positive")
        if not self.sample_times:
            raise ConfigError("no sample times")
        ts = np.asarray(self.sample_times, dtype=float)
        if np.any(ts < 0) or np.any(np.diff(ts) <= 0):
            raise ConfigError("sample times must be nonnegative and strictly increasing")

    def gamma_list(self) -> tuple[float, ...]:
        if isinstance(self.gamma, tuple):
            return self.gamma
        return (float(self.gamma),)


@dataclass
class ExperimentReport:
    """What was computed, where it went, and how long it took.

    Every integer invariant in rows travels with its winding residual;
    rows that hit AmbiguousWinding or GaplessSpectrum are marked flagged
    instead of being rounded or dropped, and flip the process exit code to 2.
    """

    experiment: str
    params: dict
    rows: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    files: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    flagged: bool = False


def load_config_file(path) -> dict:
    """Parse a JSON config; unknown keys are rejected, values are not coerced."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return raw


def build_config(experiment: str, file_values: dict | None = None, **overrides) -> ExperimentConfig:
    """Merge preset <- config file <- explicit overrides and validate.

    The experiment argument always wins over an `experiment` key in the file.
    Overrides with value None are ignored so CLI plumbing can pass absent
    flags straight through.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    merged = dict(_COMMON)
    merged.update(PRESETS[experiment])
    merged["output_dir"] = Path("runs") / experiment
    file_values = dict(file_values or {})
    file_values.pop("experiment", None)
    merged.update(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    proto = merged["protocol"]
    if isinstance(proto, dict):
        unknown = set(proto) - _PROTOCOL_KEYS
        if unknown:
            raise ConfigError(f"unknown protocol fields: {sorted(unknown)}")
        missing = _PROTOCOL_KEYS - set(proto)
        if missing:
            raise ConfigError(f"protocol needs m_i, m_f, v; missing {sorted(missing)}")
        try:
            proto = RampProtocol(
                m_i=float(proto["m_i"]), m_f=float(proto["m_f"]), v=float(proto["v"])
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad protocol: {exc}") from exc
    gamma = merged["gamma"]
    try:
        if isinstance(gamma, (list, tuple)):
            gamma = tuple(float(g) for g in gamma)
        else:
            gamma = float(gamma)
        return ExperimentConfig(
            experiment=experiment,
            protocol=proto,
            gamma=gamma,
            velocities=tuple(float(v) for v in merged["velocities"]),
            grid=(int(merged["grid"][0]), int(merged["grid"][1])),
            sample_times=tuple(float(t) for t in merged["sample_times"]),
            output_dir=Path(merged["output_dir"]),
            dt=float(merged["dt"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def _write_csv(path: Path, schema: str, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# schema={schema}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Path):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if np.isfinite(v) else None
    return x


def write_report(report: ExperimentReport, path: Path) -> None:
    payload = {
        "schema": REPORT_SCHEMA,
        "experiment": report.experiment,
        "params": report.params,
        "rows": report.rows,
        "transitions": report.transitions,
        "files": report.files,
        "timings": report.timings,
        "flagged": report.flagged,
    }
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _params_dict(cfg: ExperimentConfig) -> dict:
    return {
        "m_i": cfg.protocol.m_i,
        "m_f": cfg.protocol.m_f,
        "v": cfg.protocol.v,
        "gamma": cfg.gamma,
        "velocities": cfg.velocities,
        "grid": cfg.grid,
        "sample_times": cfg.sample_times,
        "dt": cfg.dt,
        "output_dir": cfg.output_dir,
    }


def _new_report(cfg: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(experiment=cfg.experiment, params=_params_dict(cfg))


# ---------------------------------------------------------------------------
# shared pipeline pieces

def _run_evolution(protocol, gamma, grid, dt, sample_times):
    rho0 = ground_state_field(grid, protocol.m_i)
    icfg = IntegratorConfig(
        dt=dt, t_final=float(max(sample_times)), sample_times=tuple(sample_times)
    )
    return evolve(rho0, protocol, DephasingConfig(gamma=gamma), icfg)


def _pure_profile(fld: StateField):
    loops = field_loops(fld)
    kxs = np.array([lp.kx for lp in loops])
    vecs = pure_state_vectors(np.stack([lp.states for lp in loops]))
    return kxs, berry_phase_profile(vecs, kx_samples=kxs)


def _flow_rows(flow):
    return zip(
        flow.kx_samples, flow.phi_u, flow.lambda_plus, flow.lambda_minus,
        flow.mu_plus, flow.mu_minus,
    )


def _flow_summary(flow) -> dict:
    """Both invariants of a flow with flag handling; never rounds a bad winding."""
    out = {
        "amplitude_gap": flow.amplitude_gap,
        "n_uhlmann": None, "n_uhlmann_residual": None,
        "spectrum_index": None, "spectrum_index_residual": None,
        "flagged": False, "error": None,
    }
    try:
        out["n_uhlmann"], out["n_uhlmann_residual"] = uhlmann_number(flow)
    except AmbiguousWinding as exc:
        out["flagged"], out["error"] = True, str(exc)
    try:
        out["spectrum_index"], out["spectrum_index_residual"] = spectrum_index(flow)
    except GaplessSpectrum as exc:
        out["flagged"], out["error"] = True, str(exc)
    return out


def _critical_row(cfg: ExperimentConfig) -> MomentumGrid:
    # the transition detectors live on the kx = 0 loop through the crossing
    full = momentum_grid(*cfg.grid)
    return MomentumGrid(kxs=np.array([0.0]), kys=full.kys)


def _re_trace_sign(fld: StateField) -> int:
    M = spectral_flow(field_loops(fld)).Ms[0]
    return 1 if (M[0, 0] + M[1, 1]).real > 0.0 else -1


def _bisect(lo: float, hi: float, probe, width: float) -> tuple[float, float] | None:
    """Bracket the sign change of probe inside [lo, hi]; None if there is none."""
    s_lo = probe(lo)
    if probe(hi) == s_lo:
        return None
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if probe(mid) == s_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


# ---------------------------------------------------------------------------
# experiments

def run_phase_diagram(cfg: ExperimentConfig) -> ExperimentReport:
    """Static ground-state Chern number over m, criticals excluded."""
    report = _new_report(cfg)
    t0 = time.perf_counter()
    grid = momentum_grid(*cfg.grid)
    ms = [
        float(m)
        for m in np.round(np.arange(-3.5, 3.5 + 1e-9, 0.25), 10)
        if min(abs(m - c) for c in (-2.0, 0.0, 2.0)) > 1e-9
    ]
    rows = []
    for m in ms:
        kxs, phi = _pure_profile(ground_state_field(grid, m))
        try:
            n, res = chern_number(kxs, phi)
        except AmbiguousWinding as exc:
            raise AmbiguousWinding(exc.residual, where=f"m = {m:g}") from exc
        rows.append((m, n, res))
        report.rows.append({"m": m, "n_chern": n, "residual": res})
    out = cfg.output_dir / "phase_diagram.csv"
    _write_csv(out, PHASE_DIAGRAM_SCHEMA, ["m", "n_C", "residual"], rows)
    report.files.append(out.name)
    report.timings["sweep"] = time.perf_counter() - t0
    return report


def _series_tag(gamma: float, gammas: tuple[float, ...]) -> str:
    if gamma == 0.0:
        return "coherent"
    if sum(1 for g in gammas if g > 0.0) == 1:
        return "dephased"
    return f"g{gamma:g}"


def _series_csv_name(tag: str) -> str:
    return "invariant_vs_time.csv" if tag == "dephased" else f"invariant_vs_time_{tag}.csv"


def run_series(cfg: ExperimentConfig) -> ExperimentReport:
    """Invariant-vs-time pipeline behind fig1 and custom.

    Per gamma in the sweep: evolve, then at each sample time compute the state
    invariant (Chern of the pure state for gamma = 0, Uhlmann number of the
    instantaneously dephased projection otherwise) next to the instantaneous
    hamiltonian_chern(m(t)). Final-time phase profiles are written for every
    run and for the ground state of H(m_f).
    """
    report = _new_report(cfg)
    grid = momentum_grid(*cfg.grid)
    p = cfg.protocol
    gammas = cfg.gamma_list()
    t_end = cfg.sample_times[-1]

    for gamma in gammas:
        tag = _series_tag(gamma, gammas)
        t0 = time.perf_counter()
        traj = _run_evolution(p, gamma, grid, cfg.dt, cfg.sample_times)
        report.timings[f"evolve_{tag}"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        series_rows = []
        final_profile = None
        for t in cfg.sample_times:
            fld = traj.at(t)
            m = float(m_of_t(p, t))
            n_h = hamiltonian_chern(m)
            flagged, err = False, None
            if gamma == 0.0:
                kxs, phi = _pure_profile(fld)
                n_s, res = chern_number(kxs, phi)
                kind = "chern"
            else:
                proj = dephased_projection(fld, m)
                flow = spectral_flow(field_loops(proj))
                kxs, phi = flow.kx_samples, flow.phi_u
                try:
                    n_s, res = uhlmann_number(flow)
                except AmbiguousWinding as exc:
                    n_s, res, flagged, err = None, exc.residual, True, str(exc)
                kind = "uhlmann"
            if t == t_end:
                final_profile = (kxs, phi)
            series_rows.append((t, m, np.nan if n_s is None else n_s, n_h))
            report.rows.append({
                "series": tag, "t": t, "kind": kind, "n_state": n_s,
                "residual": res, "n_hamiltonian": n_h,
                "flagged": flagged, "error": err,
            })
            report.flagged |= flagged
        report.timings[f"geometry_{tag}"] = time.perf_counter() - t0

        name = _series_csv_name(tag)
        _write_csv(cfg.output_dir / name, SERIES_SCHEMA,
                   ["t", "m_of_t", "n_state", "n_hamiltonian"], series_rows)
        report.files.append(name)
        kxs, phi = final_profile
        name = f"phase_profile_{tag}.csv"
        _write_csv(cfg.output_dir / name, PROFILE_SCHEMA, ["kx", "phi"], zip(kxs, phi))
        report.files.append(name)

    kxs, phi = _pure_profile(ground_state_field(grid, p.m_f))
    _write_csv(cfg.output_dir / "phase_profile_ground.csv", PROFILE_SCHEMA,
               ["kx", "phi"], zip(kxs, phi))
    report.files.append("phase_profile_ground.csv")
    return report


def run_fig1(cfg: ExperimentConfig) -> ExperimentReport:
    return run_series(cfg)


def run_custom(cfg: ExperimentConfig) -> ExperimentReport:
    return run_series(cfg)


def run_fig2(cfg: ExperimentConfig) -> ExperimentReport:
    """Holonomy spectra along the ramp and the gap-closing time t*.

    The t* bisection and the gap scan run on the kx = 0 row of the
    instantaneously dephased state, restarted from the first sample time
    (the exponential ramp is self-similar, so a snapshot at t0 evolves
    exactly like a fresh ramp from m(t0)). Full-grid spectra are written at
    the configured sample times plus the bisected t*; the t* row sits at a
    closed amplitude gap by construction, so its index is undefined and the
    run reports flagged (exit code 2).
    """
    report = _new_report(cfg)
    gammas = cfg.gamma_list()
    if len(gammas) != 1:
        raise ConfigError("fig2 takes a single dephasing rate")
    gamma = gammas[0]
    p = cfg.protocol
    grid = momentum_grid(*cfg.grid)
    row = _critical_row(cfg)
    t_lo, t_hi = 5.0, 7.0

    t0 = time.perf_counter()
    base = _run_evolution(p, gamma, row, cfg.dt, (t_lo,)).at(t_lo)
    restart = RampProtocol(m_i=float(m_of_t(p, t_lo)), m_f=p.m_f, v=p.v)

    def row_state(t: float) -> StateField:
        if t <= t_lo + 1e-12:
            return base
        tau = t - t_lo
        snap = StateField(grid=row, t=0.0, states=base.states)
        icfg = IntegratorConfig(dt=cfg.dt, t_final=tau, sample_times=(tau,))
        return evolve(snap, restart, DephasingConfig(gamma=gamma), icfg).at(tau)

    def projected_row(t: float) -> StateField:
        return dephased_projection(row_state(t), float(m_of_t(p, t)))

    bracket = _bisect(t_lo, t_hi, lambda t: _re_trace_sign(projected_row(t)), BRACKET_T)
    t_star = None if bracket is None else 0.5 * (bracket[0] + bracket[1])
    report.transitions.append({
        "name": "t_star", "estimate": t_star,
        "bracket": None if bracket is None else list(bracket),
        "detector": "sign of Re Tr M on the instantaneously dephased kx = 0 row",
    })
    report.timings["bisection_t_star"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scan_rows = []
    for t in np.round(np.arange(t_lo, t_hi + 1e-9, 0.05), 10):
        gap = spectral_flow(field_loops(projected_row(float(t)))).amplitude_gap
        scan_rows.append((float(t), gap))
    _write_csv(cfg.output_dir / "gap_vs_time.csv", GAP_SCAN_SCHEMA,
               ["t", "min_gap"], scan_rows)
    report.files.append("gap_vs_time.csv")
    report.timings["gap_scan"] = time.perf_counter() - t0

    samples = sorted(set(cfg.sample_times) | ({t_star} if t_star is not None else set()))
    t0 = time.perf_counter()
    traj = _run_evolution(p, gamma, grid, cfg.dt, samples)
    report.timings["evolve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for t in samples:
        tag = "tstar" if t_star is not None and t == t_star else f"t{t:g}"
        proj = dephased_projection(traj.at(t), float(m_of_t(p, t)))
        flow = spectral_flow(field_loops(proj))
        name = f"spectral_flow_{tag}.csv"
        _write_csv(cfg.output_dir / name, FLOW_SCHEMA,
                   ["kx", "phi_u", "lambda_plus", "lambda_minus", "mu_plus", "mu_minus"],
                   _flow_rows(flow))
        report.files.append(name)
        summary = _flow_summary(flow)
        report.rows.append({"tag": tag, "t": t, **summary})
        report.flagged |= summary["flagged"]
    report.timings["geometry"] = time.perf_counter() - t0
    return report


def run_fig3(cfg: ExperimentConfig) -> ExperimentReport:
    """Final-state holonomy spectra per dephasing rate and the critical gamma*.

    Spectra and the bisection both use the raw evolved state at the final
    sample time; weak-dephasing coherences are the whole point here.
    """
    report = _new_report(cfg)
    p = cfg.protocol
    grid = momentum_grid(*cfg.grid)
    row = _critical_row(cfg)
    gammas = cfg.gamma_list()
    t_end = cfg.sample_times[-1]

    for gamma in gammas:
        tag = f"g{gamma:g}"
        t0 = time.perf_counter()
        fld = _run_evolution(p, gamma, grid, cfg.dt, (t_end,)).at(t_end)
        report.timings[f"evolve_{tag}"] = time.perf_counter() - t0
        flow = spectral_flow(field_loops(fld))
        name = f"spectral_flow_{tag}.csv"
        _write_csv(cfg.output_dir / name, FLOW_SCHEMA,
                   ["kx", "phi_u", "lambda_plus", "lambda_minus", "mu_plus", "mu_minus"],
                   _flow_rows(flow))
        report.files.append(name)
        summary = _flow_summary(flow)
        report.rows.append({"tag": tag, "gamma": gamma, **summary})
        report.flagged |= summary["flagged"]

    t0 = time.perf_counter()

    def probe(gamma: float) -> int:
        fld = _run_evolution(p, gamma, row, cfg.dt, (t_end,)).at(t_end)
        return _re_trace_sign(fld)

    bracket = _bisect(min(gammas), max(gammas), probe, BRACKET_GAMMA)
    report.transitions.append({
        "name": "gamma_star",
        "estimate": None if bracket is None else 0.5 * (bracket[0] + bracket[1]),
        "bracket": None if bracket is None else list(bracket),
        "detector": "sign of Re Tr M on the raw final kx = 0 row",
    })
    report.timings["bisection_gamma_star"] = time.perf_counter() - t0
    return report


def run_fig4(cfg: ExperimentConfig) -> ExperimentReport:
    """Final spectra and ky = 0 occupation per ramp velocity, plus v*."""
    report = _new_report(cfg)
    gammas = cfg.gamma_list()
    if len(gammas) != 1:
        raise ConfigError("fig4 takes a single dephasing rate")
    gamma = gammas[0]
    base = cfg.protocol
    grid = momentum_grid(*cfg.grid)
    row = _critical_row(cfg)
    t_end = cfg.sample_times[-1]
    j0 = int(np.argmin(np.abs(grid.kys)))

    for v in cfg.velocities:
        tag = f"v{v:g}"
        proto = RampProtocol(m_i=base.m_i, m_f=base.m_f, v=v)
        t0 = time.perf_counter()
        fld = _run_evolution(proto, gamma, grid, cfg.dt, (t_end,)).at(t_end)
        report.timings[f"evolve_{tag}"] = time.perf_counter() - t0

        m_end = float(m_of_t(proto, t_end))
        occ_rows = []
        for i, kx in enumerate(grid.kxs):
            _, p_up = band_populations(fld.states[i, j0], (float(kx), 0.0), m_end)
            occ_rows.append((float(kx), p_up))
        name = f"occupation_{tag}.csv"
        _write_csv(cfg.output_dir / name, OCCUPATION_SCHEMA, ["kx", "p_upper"], occ_rows)
        report.files.append(name)

        flow = spectral_flow(field_loops(fld))
        name = f"spectral_flow_{tag}.csv"
        _write_csv(cfg.output_dir / name, FLOW_SCHEMA,
                   ["kx", "phi_u", "lambda_plus", "lambda_minus", "mu_plus", "mu_minus"],
                   _flow_rows(flow))
        report.files.append(name)
        summary = _flow_summary(flow)
        p_up0 = occ_rows[int(np.argmin(np.abs(grid.kxs)))][1]
        report.rows.append({"tag": tag, "v": v, "occupation_at_kc": p_up0, **summary})
        report.flagged |= summary["flagged"]

    t0 = time.perf_counter()

    def probe(v: float) -> int:
        proto = RampProtocol(m_i=base.m_i, m_f=base.m_f, v=v)
        fld = _run_evolution(proto, gamma, row, cfg.dt, (t_end,)).at(t_end)
        return _re_trace_sign(fld)

    bracket = _bisect(min(cfg.velocities), max(cfg.velocities), probe, BRACKET_V)
    report.transitions.append({
        "name": "v_star",
        "estimate": None if bracket is None else 0.5 * (bracket[0] + bracket[1]),
        "bracket": None if bracket is None else list(bracket),
        "detector": "sign of Re Tr M on the raw final kx = 0 row",
    })
    report.timings["bisection_v_star"] = time.perf_counter() - t0
    return report


_RUNNERS = {
    "phase-diagram": run_phase_diagram,
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "custom": run_custom,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Dispatch, then persist report.json next to the CSVs."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    report = _RUNNERS[cfg.experiment](cfg)
    report.timings["total"] = time.perf_counter() - t0
    report.files.append("report.json")
    write_report(report, cfg.output_dir / "report.json")
    return report
