"""Experiment orchestration: scenario presets, sweeps, CSV and plot output.

Reproduces the standard experiment set at desk scale:

* ``run_budget``: closed-form component powers over a transmit power sweep;
* ``run_tx_power_sweep``: waveform-level SINR and digital attenuation per
  transmit power, averaged over channel realizations, for the linear and
  widely-linear cancellers;
* ``run_mn_grid``: SINR/attenuation over (filter length, training length);
* ``run_bias``: flat-model estimator-bias report.

Seeding: realization j of sweep point i uses
``SeedSequence([base_seed, i, j])``, so runs are reproducible and
realizations may execute in any order or in parallel.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from . import __version__, kernels
from .bias import monte_carlo_bias
from .budget import (BUDGET_CSV_COLUMNS, PowerBudget, SystemParameters,
                     budget_csv_rows, sweep_tx_power)
from .cancellers import (align_by_crosscorrelation, apply_cancellation,
                         build_augmented_matrix, estimate_linear_ls,
                         estimate_wl_ls, measure_digital_attenuation,
                         measure_sinr)
from .chain import compose_wl_response, make_default_chain, run_chain, soi_at_detector
from .impairments import dbm_to_watts
from .signals import ComplexBasebandSignal, OfdmConfig, generate_ofdm_frame

#: steady-state margin trimmed from each end before estimation and metrics;
#: covers the interpolation and cancellation-replica filter transients
EDGE_PAD = 320

SCENARIOS: dict[str, dict] = {
    "table1-baseline": {},
    "low-isolation": {"antenna_attenuation_db": 30.0, "rf_cancellation_db": 20.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration for one experiment run."""

    scenario: str = "table1-baseline"
    params: SystemParameters = field(default_factory=SystemParameters)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    canceller: str = "both"            # "linear" | "widely-linear" | "both"
    tx_powers_dbm: tuple = tuple(np.arange(-5.0, 25.0 + 1e-9, 2.0))
    grid_filter_lengths: tuple = (2, 3, 4, 5)
    grid_train_samples: tuple = tuple(
        int(round(n)) for n in np.logspace(np.log10(50), np.log10(20000), 10))
    grid_tx_power_dbm: float = 15.0
    n_realizations: int = 100
    base_seed: int = 1
    out_dir: str = "out"
    train_samples: int = 5000
    filter_length: int = 5
    n_precursor: int = 1
    rf_delay_error: float = 0.05
    los_to_multipath_db: float = 35.8
    jobs: int = 1

    def resolved_params(self) -> SystemParameters:
        overrides = SCENARIOS.get(self.scenario)
        if overrides is None:
            raise ValueError(f"unknown scenario '{self.scenario}'; "
                             f"choose from {sorted(SCENARIOS)}")
        return replace(self.params, **overrides)


def load_config(path: str | None = None, **overrides) -> ExperimentConfig:
    """Build a config from an optional YAML file plus keyword overrides.

    The file may set any ExperimentConfig field; ``params`` and ``ofdm``
    entries are nested mappings applied on top of the scenario preset.
    """
    data: dict = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    params = SystemParameters(**data.pop("params", {}))
    ofdm = OfdmConfig(**data.pop("ofdm", {}))
    for key in ("tx_powers_dbm", "grid_filter_lengths", "grid_train_samples"):
        if key in data:
            data[key] = tuple(data[key])
    return ExperimentConfig(params=params, ofdm=ofdm, **data)


# ---------------------------------------------------------------------------
# Single-realization pipeline


@dataclass(frozen=True)
class RealizationResult:
    sinr_db: dict
    attenuation_db: dict


def _trim(signal: ComplexBasebandSignal, pad: int) -> ComplexBasebandSignal:
    return ComplexBasebandSignal(signal.samples[pad:len(signal) - pad],
                                 signal.sample_rate)


def _frame(cfg: ExperimentConfig, n_samples: int, power_w: float,
           seed: int) -> ComplexBasebandSignal:
    n_sym = -(-n_samples // cfg.ofdm.samples_per_symbol)
    frame = generate_ofdm_frame(cfg.ofdm, n_sym, power_w, seed)
    return ComplexBasebandSignal(frame.samples[:n_samples], frame.sample_rate)


def run_one_realization(cfg: ExperimentConfig, tx_power_dbm: float,
                        point_index: int, realization: int,
                        train_samples: int | None = None,
                        filter_length: int | None = None) -> RealizationResult:
    """Train, estimate, and evaluate one channel realization.

    The canceller is trained on a frame without the signal of interest,
    the frozen coefficients are applied to a fresh evaluation frame, and two
    figures are measured per canceller: detector SINR (signal of interest
    against the cancelled residual of a signal-free run with identical
    seeds) and the digital attenuation of the linear-plus-conjugate
    interference, isolated through the chain's closed-form responses.
    """
    n_train = train_samples or cfg.train_samples
    m = filter_length or cfg.filter_length
    k = cfg.n_precursor
    params = replace(cfg.resolved_params(), tx_power_dbm=tx_power_dbm)
    root = np.random.SeedSequence([cfg.base_seed, point_index, realization])
    seeds = [int(s.generate_state(1, np.uint64)[0]) for s in root.spawn(6)]
    ch_seed, train_seed, eval_seed, soi_seed, noise_tr, noise_ev = seeds

    p_x = dbm_to_watts(tx_power_dbm - params.pa_gain_db - params.mixer_gain_db)
    n_total = n_train + 2 * EDGE_PAD
    x_train = _frame(cfg, n_total, p_x, train_seed)
    chain = make_default_chain(params, ch_seed, x_train,
                               rf_delay_error=cfg.rf_delay_error,
                               los_to_multipath_db=cfg.los_to_multipath_db)

    y_train = run_chain(chain, x_train, noise_seed=noise_tr)
    # compensate bulk misalignment only when the estimator's lag window
    # (-K .. M-1-K) cannot absorb it; small nonzero lags are correlation
    # smear of the oversampled waveform, not true delay
    lag = align_by_crosscorrelation(_trim(x_train, EDGE_PAD),
                                    _trim(y_train, EDGE_PAD))
    if lag < -k or lag > m - 1 - k:
        y_train = y_train.with_samples(np.roll(y_train.samples, -lag))
    data = build_augmented_matrix(_trim(x_train, EDGE_PAD),
                                  _trim(y_train, EDGE_PAD), m, k)
    estimates = {}
    if cfg.canceller in ("widely-linear", "both"):
        estimates["widely-linear"] = estimate_wl_ls(data)
    if cfg.canceller in ("linear", "both"):
        estimates["linear"] = estimate_linear_ls(data)

    x_eval = _frame(cfg, n_total, p_x, eval_seed)
    soi = _frame(cfg, n_total, dbm_to_watts(params.soi_power_dbm), soi_seed)
    y_eval = run_chain(chain, x_eval, noise_seed=noise_ev)
    soi_det = soi_at_detector(chain, soi)

    response = compose_wl_response(chain)
    si_true = response.apply_wl(x_eval.samples)
    window = slice(EDGE_PAD, n_total - EDGE_PAD)
    si_before = ComplexBasebandSignal(si_true[window], x_eval.sample_rate)

    sinr, attenuation = {}, {}
    for name, est in estimates.items():
        residual = apply_cancellation(est, _trim(x_eval, EDGE_PAD),
                                      _trim(y_eval, EDGE_PAD))
        sinr[name] = measure_sinr(_trim(soi_det, EDGE_PAD), residual)
        # estimate taps act at lags -k .. m-1-k
        cancel = (kernels.conv_trunc(x_eval.samples, est.h1, offset=k)
                  + kernels.conv_trunc(np.conj(x_eval.samples), est.h2, offset=k))
        si_after = ComplexBasebandSignal((si_true - cancel)[window],
                                         x_eval.sample_rate)
        attenuation[name] = measure_digital_attenuation(si_before, si_after)
    return RealizationResult(sinr, attenuation)


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepPoint:
    axis: dict
    mean_sinr_db: dict
    stderr_sinr_db: dict
    mean_attenuation_db: dict
    stderr_attenuation_db: dict
    n_realizations: int
    note: str = ""


@dataclass(frozen=True)
class SweepResult:
    points: list[SweepPoint]


def _aggregate(results: list[RealizationResult]) -> tuple[dict, dict, dict, dict]:
    names = results[0].sinr_db.keys()
    mean_s, se_s, mean_a, se_a = {}, {}, {}, {}
    for name in names:
        s = np.array([r.sinr_db[name] for r in results])
        a = np.array([r.attenuation_db[name] for r in results])
        mean_s[name] = float(s.mean())
        se_s[name] = float(s.std(ddof=1) / np.sqrt(len(s))) if len(s) > 1 else 0.0
        mean_a[name] = float(a.mean())
        se_a[name] = float(a.std(ddof=1) / np.sqrt(len(a))) if len(a) > 1 else 0.0
    return mean_s, se_s, mean_a, se_a


def _run_point(args) -> list[RealizationResult]:
    cfg, tx, index, train, m = args
    return [run_one_realization(cfg, tx, index, j, train, m)
            for j in range(cfg.n_realizations)]


def _map_points(cfg: ExperimentConfig, work: list) -> list:
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_run_point, work))
    return [_run_point(w) for w in work]


def run_tx_power_sweep(cfg: ExperimentConfig) -> SweepResult:
    """SINR and digital attenuation versus transmit power."""
    work = [(cfg, float(tx), i, None, None)
            for i, tx in enumerate(cfg.tx_powers_dbm)]
    points = []
    for (_, tx, _, _, _), results in zip(work, _map_points(cfg, work)):
        mean_s, se_s, mean_a, se_a = _aggregate(results)
        points.append(SweepPoint({"tx_dbm": tx}, mean_s, se_s, mean_a, se_a,
                                 cfg.n_realizations))
    return SweepResult(points)


def run_mn_grid(cfg: ExperimentConfig) -> SweepResult:
    """SINR and attenuation over (filter length, training samples).

    Training lengths too short to overdetermine the coefficients are recorded
    as estimation-infeasible points rather than raised.
    """
    points = []
    grid = [(m, n) for m in cfg.grid_filter_lengths
            for n in cfg.grid_train_samples]
    work, axes = [], []
    for i, (m, n) in enumerate(grid):
        axes.append({"filter_length": m, "train_samples": n})
        if n <= 2 * m + cfg.n_precursor:
            work.append(None)
        else:
            work.append((cfg, cfg.grid_tx_power_dbm, i, n, m))
    runnable = [w for w in work if w is not None]
    outcomes = iter(_map_points(cfg, runnable))
    for axis, w in zip(axes, work):
        if w is None:
            points.append(SweepPoint(axis, {}, {}, {}, {}, 0,
                                     note="estimation-infeasible"))
            continue
        mean_s, se_s, mean_a, se_a = _aggregate(next(outcomes))
        points.append(SweepPoint(axis, mean_s, se_s, mean_a, se_a,
                                 cfg.n_realizations))
    return SweepResult(points)


# ---------------------------------------------------------------------------
# Output files


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def write_manifest(cfg: ExperimentConfig, out_dir: str, command: str) -> str:
    resolved = asdict(cfg)
    resolved["resolved_params"] = asdict(cfg.resolved_params())
    text = yaml.safe_dump({"command": command, "version": __version__,
                           "config": resolved}, sort_keys=True)
    path = os.path.join(out_dir, f"{command}-manifest.txt")
    _write(path, text)
    return path


def sweep_csv(result: SweepResult, axis_names: tuple[str, ...]) -> str:
    header = list(axis_names) + [
        "canceller", "mean_sinr_db", "stderr_sinr_db",
        "mean_attenuation_db", "stderr_attenuation_db",
        "n_realizations", "note"]
    lines = [",".join(header)]
    for pt in result.points:
        axis_vals = [f"{pt.axis[a]:g}" for a in axis_names]
        if not pt.mean_sinr_db:
            lines.append(",".join(axis_vals + ["", "", "", "", "", "0",
                                               pt.note]))
            continue
        for name in sorted(pt.mean_sinr_db):
            lines.append(",".join(
                axis_vals + [name,
                             f"{pt.mean_sinr_db[name]:.6f}",
                             f"{pt.stderr_sinr_db[name]:.6f}",
                             f"{pt.mean_attenuation_db[name]:.6f}",
                             f"{pt.stderr_attenuation_db[name]:.6f}",
                             str(pt.n_realizations), pt.note]))
    return "\n".join(lines) + "\n"


_PLOT_HEADER = """\
#!/usr/bin/env python3
# Self-contained plot script; reads only the CSV written next to it.
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))
"""


def emit_plot_script(kind: str, csv_name: str, out_path: str) -> str:
    """Write a standalone matplotlib script for a result CSV.

    ``kind`` is one of ``"budget"`` (layered component powers), ``"tx-sweep"``
    (SINR and attenuation, one series per canceller) or ``"mn-grid"`` (one
    curve per filter length over a log training-size axis).
    """
    if kind == "budget":
        body = f"""
rows = read("{csv_name}")
tx = [float(r["tx_dbm"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 5))
for col in ("p_si", "p_si_im", "p_imd", "p_imd_im", "p_noise",
            "p_noise_im", "p_q", "p_soi"):
    vals = [float(r[col]) for r in rows]
    pts = [(t, v) for t, v in zip(tx, vals) if v == v and v != float("-inf")]
    if pts:
        ax.plot(*zip(*pts), marker=".", label=col)
ax.set_xlabel("transmit power (dBm)")
ax.set_ylabel("component power at detector, input-referred (dBm)")
ax.grid(True, alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("{csv_name[:-4]}.png", dpi=150)
"""
    elif kind == "tx-sweep":
        body = f"""
rows = read("{csv_name}")
cancellers = sorted({{r["canceller"] for r in rows if r["canceller"]}})
fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for name in cancellers:
    sub = [r for r in rows if r["canceller"] == name]
    tx = [float(r["tx_dbm"]) for r in sub]
    axes[0].plot(tx, [float(r["mean_sinr_db"]) for r in sub], marker="o", label=name)
    axes[1].plot(tx, [float(r["mean_attenuation_db"]) for r in sub], marker="o", label=name)
axes[0].set_ylabel("mean SINR (dB)")
axes[1].set_ylabel("mean digital attenuation (dB)")
for ax in axes:
    ax.set_xlabel("transmit power (dBm)")
    ax.grid(True, alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig("{csv_name[:-4]}.png", dpi=150)
"""
    elif kind == "mn-grid":
        body = f"""
rows = [r for r in read("{csv_name}") if r["mean_sinr_db"]]
lengths = sorted({{int(r["filter_length"]) for r in rows}})
fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for m in lengths:
    sub = [r for r in rows if int(r["filter_length"]) == m]
    n = [int(float(r["train_samples"])) for r in sub]
    axes[0].semilogx(n, [float(r["mean_sinr_db"]) for r in sub], marker="o", label=f"M={{m}}")
    axes[1].semilogx(n, [float(r["mean_attenuation_db"]) for r in sub], marker="o", label=f"M={{m}}")
axes[0].set_ylabel("mean SINR (dB)")
axes[1].set_ylabel("mean digital attenuation (dB)")
for ax in axes:
    ax.set_xlabel("training samples")
    ax.grid(True, alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig("{csv_name[:-4]}.png", dpi=150)
"""
    else:
        raise ValueError(f"unknown plot kind '{kind}'")
    _write(out_path, _PLOT_HEADER + body)
    return out_path


# ---------------------------------------------------------------------------
# Top-level commands (shared by the CLI and the tests)


def run_budget(cfg: ExperimentConfig) -> str:
    """Closed-form budget sweep; writes CSV, plot script, and manifest."""
    params = cfg.resolved_params()
    budgets = sweep_tx_power(params, cfg.tx_powers_dbm)
    csv_text = "\n".join(budget_csv_rows(budgets)) + "\n"
    csv_path = os.path.join(cfg.out_dir, "budget.csv")
    _write(csv_path, csv_text)
    emit_plot_script("budget", "budget.csv", os.path.join(cfg.out_dir, "plot_budget.py"))
    write_manifest(cfg, cfg.out_dir, "budget")
    return csv_path


def run_sweep_tx(cfg: ExperimentConfig) -> str:
    result = run_tx_power_sweep(cfg)
    csv_path = os.path.join(cfg.out_dir, "sweep_tx.csv")
    _write(csv_path, sweep_csv(result, ("tx_dbm",)))
    emit_plot_script("tx-sweep", "sweep_tx.csv",
                     os.path.join(cfg.out_dir, "plot_sweep_tx.py"))
    write_manifest(cfg, cfg.out_dir, "sweep-tx")
    return csv_path


def run_sweep_mn(cfg: ExperimentConfig) -> str:
    result = run_mn_grid(cfg)
    csv_path = os.path.join(cfg.out_dir, "sweep_mn.csv")
    _write(csv_path, sweep_csv(result, ("filter_length", "train_samples")))
    emit_plot_script("mn-grid", "sweep_mn.csv",
                     os.path.join(cfg.out_dir, "plot_sweep_mn.py"))
    write_manifest(cfg, cfg.out_dir, "sweep-mn")
    return csv_path


def run_bias(cfg: ExperimentConfig) -> str:
    params = replace(cfg.resolved_params(), tx_power_dbm=cfg.grid_tx_power_dbm)
    report = monte_carlo_bias(params, n_trials=max(100, cfg.n_realizations),
                              seed=cfg.base_seed)
    path = os.path.join(cfg.out_dir, "bias.jsonl")
    _write(path, report.to_json() + "\n")
    write_manifest(cfg, cfg.out_dir, "bias")
    return path
