"""Named experiments producing plot-ready CSV tables.

Every experiment takes a :class:`~isac_ed.scenario.Scenario` plus run
options and returns (header, rows). Headers are fixed per experiment and
numbers are written in shortest round-trip form, so reruns with the same
seed are byte-identical. Files are written atomically.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import cp, tradeoff, zp
from .coincidence import coincidence_counts
from .distributions import gaussian_inv_cdf, gaussian_sf
from .montecarlo import exceedance, simulate_components
from .scenario import Scenario, ScenarioError
from .scene import (
    Hypothesis,
    WaveformConfig,
    WaveformKind,
    db_to_linear,
    distance_from_bins,
    linear_to_db,
)

PD_TARGET = 0.9
RANGE_RATIO_RSI_DB = tuple(np.arange(-30.0, 40.0 + 1e-9, 2.5).round(6))
RANGE_RATIO_SIM_RSI_DB = (-27.5, -12.5, 2.5, 17.5, 32.5)
CLUTTER_RSI = (1.0, 0.5, 0.1)
ROC_POINTS = 41

HEADERS = {
    "validate-zp": ("threshold_over_sigma2", "pd_exact", "pd_gamma", "pd_gaussian",
                    "pd_sim", "sim_stderr"),
    "validate-cp": ("threshold_norm", "threshold_over_sigma2", "pd_gamma", "pd_gaussian",
                    "pd_sim", "sim_stderr", "covariance_fraction"),
    "upper-bound": ("delay_bins", "distance_m", "pd_fixed", "pd_upper_bound"),
    "range-ratio": ("rsi_db", "delta", "delta_sim", "sim_d_zp_m", "sim_d_cp_m",
                    "equal_range_rsi_db", "zp_delay_bins"),
    "range-curves": ("distance_m", "delay_bins", "pd_zp", "pd_cp"),
    "clutter": ("kind", "series", "sample_shift", "rsi_db", "threshold_over_sigma2", "pfa",
                "pd", "pfa_sim", "pd_sim", "crossing_clutter_db"),
}
CONFORMANCE_HEADER = ("quantity", "fft_size", "guard_size", "sample_shift", "delay_j",
                      "delay_jp", "formula", "oracle", "match")


class OutputError(OSError):
    """The output file could not be written."""


class ExperimentError(ValueError):
    """The scenario does not fit the requested experiment."""


@dataclass(frozen=True)
class RunOptions:
    """Command-line overrides; None keeps the scenario value."""

    trials: int | None = None
    seed: int | None = None
    model: str | None = None


def _resolve(sc: Scenario, opts: RunOptions) -> Scenario:
    changes = {}
    if opts.trials is not None:
        changes["trials"] = opts.trials
    if opts.seed is not None:
        changes["seed"] = opts.seed
    if opts.model is not None:
        changes["model"] = opts.model
    try:
        return replace(sc, **changes) if changes else sc
    except ScenarioError as exc:
        raise ExperimentError(str(exc)) from None


# ---------------------------------------------------------------------------
# CSV output


def format_value(v) -> str:
    """Shortest round-trip text for numbers; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header {len(header)}")
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename.

    Raises:
        OutputError: when the directory is missing or not writable.
    """
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                                   prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# helpers


def _require_kind(sc: Scenario, kind: WaveformKind, name: str) -> None:
    if sc.waveform.kind is not kind:
        raise ExperimentError(f"{name} needs waveform.kind = {kind.value}")


def _require_pfa(sc: Scenario, name: str) -> float:
    if sc.pfa is None:
        raise ExperimentError(f"{name} needs detect.pfa")
    return sc.pfa


def _or_none(fn, *args):
    try:
        return fn(*args)
    except zp.PreconditionError:
        return None


def _simulate(scene, wf, sc: Scenario, thresholds_w):
    comp = simulate_components(scene, wf, sc.trials, sc.seed)
    return exceedance(comp.statistic(scene.effective_target_gain_sq), thresholds_w)


def _zp_model(sc: Scenario, scene, wf) -> str:
    return tradeoff.model_select(scene, wf).model if sc.model == "auto" else sc.model


# ---------------------------------------------------------------------------
# experiments


def validate_zp(sc: Scenario):
    """Analytic and simulated ZP PD at the scenario thresholds."""
    _require_kind(sc, WaveformKind.ZP, "validate-zp")
    wf = sc.waveform
    scene = sc.scene()
    s2 = scene.noise_power
    if sc.thresholds_over_sigma2 is not None:
        xs = list(sc.thresholds_over_sigma2)
    else:
        model = _zp_model(sc, scene, wf)
        xs = [zp.threshold_for_pfa_zp(sc.pfa, scene, wf, model) / s2]
    lams = [x * s2 for x in xs]
    sims = _simulate(scene, wf, sc, lams)
    rows = []
    for x, lam, est in zip(xs, lams, sims):
        rows.append((x, _or_none(zp.pd_exact, lam, scene, wf), _or_none(zp.pd_gamma, lam, scene, wf),
                     zp.pd_gaussian_zp(lam, scene, wf), est.rate, est.stderr))
    return HEADERS["validate-zp"], rows


def validate_cp(sc: Scenario):
    """Analytic and simulated CP PD.

    Scenario thresholds are normalized by the RSI-plus-noise power
    sigma^2 (1 + rho_si); both the normalized and the sigma^2-relative
    values are reported.
    """
    _require_kind(sc, WaveformKind.CP, "validate-cp")
    wf = sc.waveform
    scene = sc.scene()
    s2 = scene.noise_power
    unit = s2 * (1.0 + scene.rsi_power_ratio)
    if sc.thresholds_over_sigma2 is not None:
        xs = list(sc.thresholds_over_sigma2)
    else:
        model = tradeoff.model_select(scene, wf).model if sc.model == "auto" else sc.model
        xs = [cp.threshold_for_pfa_cp(sc.pfa, scene, wf, model) / unit]
    lams = [x * unit for x in xs]
    sims = _simulate(scene, wf, sc, lams)
    frac = cp.gaussian_moments_cp(scene, wf).covariance_fraction
    rows = []
    for x, lam, est in zip(xs, lams, sims):
        rows.append((x, lam / s2, _or_none(cp.pd_gamma_cp, lam, scene, wf),
                     cp.pd_gaussian_cp(lam, scene, wf), est.rate, est.stderr, frac))
    return HEADERS["validate-cp"], rows


def upper_bound(sc: Scenario):
    """PD of the scenario's fixed guard against the N_zp = L_t bound over delay.

    Delays run over (0, N_f] in at most 256 steps; the target distance of the
    scenario is ignored.
    """
    _require_kind(sc, WaveformKind.ZP, "upper-bound")
    pfa = _require_pfa(sc, "upper-bound")
    wf = replace(sc.waveform, sample_shift=0)
    cfg = sc.system
    step = max(1, wf.fft_size // 256)
    lam = tradeoff.zp_threshold(pfa, wf, sc.scene().noise_power)
    rows = []
    for delay in range(step, wf.fft_size + 1, step):
        d = distance_from_bins(delay, cfg.bandwidth)
        scene = replace(sc, target_distance_m=None, target_delay_bins=delay,
                        rsi_db=-math.inf, clutter_total_db=-math.inf,
                        clutter_delays=()).scene(waveform=wf)
        rows.append((delay, d, zp.pd_exact(lam, scene, wf), tradeoff.pd_upper_bound(scene, wf, pfa)))
    return HEADERS["upper-bound"], rows


def range_ratio(sc: Scenario):
    """delta over an RSI grid, simulated ratios at marker RSIs and the delta = 1 point.

    N_zp = N_cp = waveform.guard_size; PD target 0.9.
    """
    pfa = _require_pfa(sc, "range-ratio")
    rq = tradeoff.RangeQuery(PD_TARGET, pfa, sc.fft_size, sc.guard_size,
                             pathloss_exp=sc.pathloss_exp)
    try:
        eq_db = linear_to_db(tradeoff.equal_range_rsi(rq))
    except tradeoff.InfeasibleQueryError:
        eq_db = None
    l_zp = tradeoff.zp_delay_for_query(rq, sc.system)
    sims = tradeoff.simulated_ranges(sc.system, rq, [db_to_linear(r) for r in RANGE_RATIO_SIM_RSI_DB],
                                     trials=sc.trials, seed=sc.seed)
    by_db = dict(zip(RANGE_RATIO_SIM_RSI_DB, sims))
    rows = []
    for r_db in RANGE_RATIO_RSI_DB:
        r_db = float(r_db)
        s = by_db.get(r_db)
        rows.append((r_db, tradeoff.delta_ratio(rq.with_rsi(db_to_linear(r_db))),
                     None if s is None else s.ratio, None if s is None else s.d_zp,
                     None if s is None else s.d_cp, eq_db, l_zp))
    return HEADERS["range-ratio"], rows


def range_curves(sc: Scenario):
    """ZP and CP PD over distance at the scenario PFA (CP uses the scenario RSI).

    Distances cover delays (0, N_f]; ZP uses the scenario model (auto picks
    exact) and CP the Gamma model with RSI.
    """
    pfa = _require_pfa(sc, "range-curves")
    cfg = sc.system
    wz = WaveformConfig(WaveformKind.ZP, sc.fft_size, sc.guard_size)
    wc = wz.with_kind(WaveformKind.CP)
    model = "exact" if sc.model == "auto" else sc.model
    d_max = distance_from_bins(sc.fft_size, cfg.bandwidth)
    rows = []
    for d in np.linspace(d_max / 200, d_max, 200):
        d = float(d)
        scene = replace(sc, target_distance_m=d, target_delay_bins=None).scene(waveform=wz)
        rows.append((d, scene.target_delay, tradeoff.pd_zp_at_distance(cfg, wz, d, pfa, model),
                     tradeoff.pd_cp_at_distance(cfg, wc, d, pfa, sc.rsi)))
    return HEADERS["range-curves"], rows


def _roc_rows(series: str, scene, wf, sc: Scenario):
    h0 = scene.under(Hypothesis.H0)
    if wf.kind is WaveformKind.ZP:
        m0 = zp.gaussian_moments_zp(h0, wf)
        pd_fn = zp.pd_gaussian_zp
    else:
        m0 = cp.gaussian_moments_cp(h0, wf).moments
        pd_fn = cp.pd_gaussian_cp
    pfas = np.logspace(-4, 0, ROC_POINTS)[:-1]
    lams = sorted(gaussian_inv_cdf(1.0 - p, m0) for p in pfas)
    comp = simulate_components(scene, wf, sc.trials, sc.seed)
    e0 = exceedance(comp.a, lams)
    e1 = exceedance(comp.statistic(scene.target_gain_sq), lams)
    s2 = scene.noise_power
    rsi_db = linear_to_db(scene.rsi_power_ratio)
    return [("roc", series, wf.sample_shift, rsi_db, lam / s2, gaussian_sf(lam, m0),
             pd_fn(lam, scene, wf), a.rate, b.rate, None)
            for lam, a, b in zip(lams, e0, e1)]


def clutter(sc: Scenario):
    """Gaussian and simulated ROCs, then CP/ZP KLD crossings over clutter power.

    ROC series: ZP at shifts 0, the farthest clutter delay, -N_f and the
    scenario shift, plus CP. Crossing rows use rho_si in {1, 1/2, 1/10} and
    the ZP shift equal to the farthest clutter delay.
    """
    if not sc.clutter_delays:
        raise ExperimentError("clutter needs channel.clutter_delays")
    base = WaveformConfig(WaveformKind.ZP, sc.fft_size, sc.guard_size)
    reject = max(sc.clutter_delays)
    if reject >= sc.guard_size:
        raise ExperimentError("farthest clutter delay must be shorter than the guard")
    shifts = sorted({0, reject, -sc.fft_size, sc.sample_shift if sc.kind == "zp" else 0})
    rows = []
    for s in shifts:
        wf = replace(base, sample_shift=s)
        rows += _roc_rows("zp", sc.scene(waveform=wf), wf, sc)
    wc = base.with_kind(WaveformKind.CP)
    rows += _roc_rows("cp", sc.scene(waveform=wc), wc, sc)

    wz = replace(base, sample_shift=reject)
    for rsi in CLUTTER_RSI:
        scz = replace(sc.scene(waveform=wz), rsi_power_ratio=rsi)
        x = tradeoff.clutter_kld_crossing_db(scz, scz, wz, wc)
        rows.append(("kld_crossing", "cp", reject, linear_to_db(rsi), None, None, None, None,
                     None, x))
    return HEADERS["clutter"], rows


EXPERIMENTS = {
    "validate-zp": validate_zp,
    "validate-cp": validate_cp,
    "upper-bound": upper_bound,
    "range-ratio": range_ratio,
    "range-curves": range_curves,
    "clutter": clutter,
}


def run_experiment(name: str, sc: Scenario, opts: RunOptions = RunOptions()):
    """Run a named experiment; returns (header, rows).

    Raises:
        KeyError: unknown experiment name.
        ExperimentError: the scenario does not fit the experiment.
    """
    if name not in EXPERIMENTS:
        raise KeyError(name)
    return EXPERIMENTS[name](_resolve(sc, opts))


# ---------------------------------------------------------------------------
# Conformance report


CONFORMANCE_ZP = ((8, 16, 32), (2, 4, 8))
CONFORMANCE_CP = ((8, 16), (2, 4))


def conformance_rows():
    """Closed-form counts against enumeration over small waveforms.

    ZP: every N_f, N_zp, shift and delay in [0, N); cross counts for every
    delay pair. CP: every delay in [0, N) and every pair. Each row carries
    the formula value, the enumerated value and whether they match.
    """
    rows = []
    for nf in CONFORMANCE_ZP[0]:
        for nz in CONFORMANCE_ZP[1]:
            n = nf + nz
            for ds in range(-nf, nz):
                wf = WaveformConfig(WaveformKind.ZP, nf, nz, ds)
                cc = coincidence_counts(wf, range(n))
                mean = cc.mean_counts
                cov = cc.covariance_counts("exact")
                for lj in range(n):
                    f = zp.count_mean_zp(lj, wf)
                    rows.append(("zp_mean_count", nf, nz, ds, lj, None, f, int(mean[lj]),
                                 f == mean[lj]))
                for lj in range(n):
                    for ljp in range(lj + 1, n):
                        f = zp.count_cov_zp(lj, ljp, wf)
                        o = int(cov[lj, ljp])
                        rows.append(("zp_cross_count", nf, nz, ds, lj, ljp, f, o, f == o))
    for nf in CONFORMANCE_CP[0]:
        for ncp in CONFORMANCE_CP[1]:
            n = nf + ncp
            wf = WaveformConfig(WaveformKind.CP, nf, ncp)
            cc = coincidence_counts(wf, range(n))
            cov = cc.covariance_counts("exact")
            for lj in range(n):
                f = cp.count_cov_cp_self(lj, wf)
                o = int(cc.self_pairs[lj])
                rows.append(("cp_self_count", nf, ncp, 0, lj, None, f, o, f == o))
            for lj in range(n):
                for ljp in range(lj + 1, n):
                    f = cp.count_cov_cp_cross(lj, ljp, wf)
                    o = int(cov[lj, ljp])
                    rows.append(("cp_cross_count", nf, ncp, 0, lj, ljp, f, o, f == o))
    return CONFORMANCE_HEADER, rows


def conformance_summary(rows) -> dict[str, tuple[int, int]]:
    """quantity -> (mismatches, total)."""
    out: dict[str, list[int]] = {}
    for r in rows:
        m = out.setdefault(r[0], [0, 0])
        m[1] += 1
        m[0] += not r[-1]
    return {k: (v[0], v[1]) for k, v in out.items()}


# ---------------------------------------------------------------------------
# Scene summary


def describe_scene(sc: Scenario) -> str:
    """Human-readable link budget, delays, SNRs and model diagnostics."""
    cfg = sc.system
    wf = sc.waveform
    scene = sc.scene()
    s2 = scene.noise_power
    lines = [
        f"waveform          {wf.kind.value.upper()}  N_f={wf.fft_size}  guard={wf.guard_size}"
        f"  shift={wf.sample_shift}  overhead={100 * wf.overhead:.4g} %",
        f"tx power          {cfg.tx_power:.6g} W ({sc.tx_power_dbm:.6g} dBm)",
        f"antenna gain      {cfg.antenna_gain:.6g}",
        f"carrier           {cfg.carrier_freq / 1e9:.6g} GHz (wavelength {cfg.wavelength:.6g} m)",
        f"bandwidth         {cfg.bandwidth / 1e6:.6g} MHz",
        f"rcs               {cfg.rcs:.6g} m^2",
        f"noise power       {s2:.6g} W ({linear_to_db(s2) + 30:.6g} dBm)",
        f"target distance   {scene.target_distance:.6g} m",
        f"target delay      L_t={scene.target_delay} samples",
        f"target gain       |h_t|^2={scene.target_gain_sq:.6g} W",
        f"SNR               {linear_to_db(scene.snr):.6g} dB",
        f"RSI               {sc.rsi_db:.6g} dB",
        f"clutter           {sc.clutter_total_db:.6g} dB at delays {list(sc.clutter_delays)}",
    ]
    choice = tradeoff.model_select(scene, wf)
    if wf.kind is WaveformKind.ZP:
        lines.append(f"ZP SNR (eta)      {linear_to_db(wf.eta * scene.snr):.6g} dB")
        sr = choice.sigma_ratio
        lines.append("sigma_R           " + ("n/a (split model does not apply)" if sr is None
                                             else ("inf" if math.isinf(sr) else f"{sr:.6g}")))
        m = zp.gaussian_moments_zp(scene, wf)
    else:
        sinr = scene.target_gain_sq / (s2 * (1.0 + scene.rsi_power_ratio))
        lines.append(f"CP SINR           {linear_to_db(sinr):.6g} dB")
        lines.append(f"C~ (cov. share)   {choice.covariance_fraction:.6g}")
        m = cp.gaussian_moments_cp(scene, wf).moments
    lines.append(f"H1 mean / std     {m.mean / s2:.6g} / {m.std / s2:.6g} (x sigma^2)")
    lines.append(f"selected model    {choice.model} ({choice.reason})")
    return "\n".join(lines) + "\n"
