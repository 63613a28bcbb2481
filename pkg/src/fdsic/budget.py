"""Closed-form power budget of the residual interference components.

Evaluates, for a flat (frequency-independent) model of the transceiver, the
power of every interference component left at the detector after linear
digital cancellation: linear and conjugate self-interference, third-order PA
distortion and its image, amplified thermal noise and its image, and
quantization noise.

All component powers are referred to the receiver input, i.e. quoted after
dividing out the common receive gain ``|k_bb k_lna g1_rx|^2``; that gain
cancels in every ratio of interest, and referring to the input keeps the
numbers on the familiar dBm scale of the front-end.  The noise and
distortion image terms keep their ``|g2_rx|^2 / |g1_rx|^2`` ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .impairments import db_to_linear, dbm_to_watts, derive_iq_from_irr, watts_to_dbm

#: ratio E|x|^6 / (E|x|^2)^3 of a circular complex Gaussian; used for the
#: third-order distortion power of Gaussian-like waveforms
GAUSSIAN_SIXTH_MOMENT = 6.0


@dataclass(frozen=True)
class SystemParameters:
    """System-level component values (Table-style scalar specs)."""

    bandwidth_hz: float = 12.5e6
    thermal_floor_dbm: float = -103.0
    noise_figure_db: float = 4.1
    snr_requirement_db: float = 10.0
    sensitivity_dbm: float = -88.9
    soi_power_dbm: float = -83.9
    tx_power_dbm: float = 10.0
    pa_gain_db: float = 27.0
    pa_iip3_dbm: float = 20.0
    antenna_attenuation_db: float = 40.0
    rf_cancellation_db: float = 30.0
    lna_gain_db: float = 25.0
    mixer_gain_db: float = 6.0
    irr_tx_db: float = 25.0
    irr_rx_db: float = 25.0
    adc_bits: int = 12
    adc_vpp: float = 4.5
    papr_db: float = 10.0

    def __post_init__(self):
        expected = (self.thermal_floor_dbm + self.noise_figure_db
                    + self.snr_requirement_db)
        if abs(expected - self.sensitivity_dbm) > 0.05:
            raise ValueError(
                f"sensitivity {self.sensitivity_dbm} dBm inconsistent with "
                f"floor + NF + SNR requirement = {expected:.2f} dBm")


@dataclass(frozen=True)
class PowerBudget:
    """Component powers at the detector, referred to the receiver input (dBm)."""

    tx_power_dbm: float
    p_si: float
    p_si_im: float
    p_imd: float
    p_imd_im: float
    p_noise: float
    p_noise_im: float
    p_q: float
    p_soi: float
    required_ldc_db: float
    sinr_db: float


def power_sum_dbm(levels: Sequence[float]) -> float:
    """Exact linear-domain sum of dBm levels (-inf entries contribute zero)."""
    finite = [p for p in levels if not math.isinf(p)]
    if not finite:
        return float("-inf")
    return watts_to_dbm(sum(dbm_to_watts(p) for p in finite))


def _snr_adc(bits: int, papr_db: float) -> float:
    return db_to_linear(6.02 * bits + 4.76 - papr_db)


def compute_budget(p: SystemParameters,
                   ldc_policy: str | float = "noise-floor") -> PowerBudget:
    """Evaluate the component power budget for one transmit power.

    ``ldc_policy`` is either a fixed amount of linear digital cancellation in
    dB, or ``"noise-floor"``: cancel the linear self-interference down to the
    thermal floor (never amplifying, so the requirement is clamped at 0 dB).

    Quantization noise is the total power present at the converter (all
    interference components before digital cancellation, plus the signal of
    interest) divided by the quantizer SNR formula.
    """
    tx_w = dbm_to_watts(p.tx_power_dbm)
    mix = db_to_linear(p.mixer_gain_db)
    tx_iq = derive_iq_from_irr(p.irr_tx_db, p.mixer_gain_db)
    g1t_sq = float(np.sum(np.abs(tx_iq.g1) ** 2))
    g2t_sq = float(np.sum(np.abs(tx_iq.g2) ** 2))
    irr_rx = db_to_linear(p.irr_rx_db)

    # baseband power at the TX mixer input so the nominal chain gain lands
    # on the requested transmit power
    p_x = tx_w / (db_to_linear(p.pa_gain_db) * mix)
    alpha_ratio_sq = 1.0 / dbm_to_watts(p.pa_iip3_dbm) ** 2  # |a1/a0|^2

    path = db_to_linear(-p.antenna_attenuation_db) * db_to_linear(-p.rf_cancellation_db)
    pa_gain = db_to_linear(p.pa_gain_db)

    # linear SI before digital cancellation, referred to the receiver input
    p_si_pre = pa_gain * g1t_sq * p_x * path
    # conjugate SI: TX image through the direct RX branch plus direct TX
    # through the RX image branch (power sum; the cross term vanishes for a
    # circular cancellation error)
    p_si_im = pa_gain * p_x * path * (g2t_sq + g1t_sq / irr_rx)

    p_u = mix * p_x  # PA input power
    p_x_imd = GAUSSIAN_SIXTH_MOMENT * p_u ** 3
    p_imd = pa_gain * alpha_ratio_sq * p_x_imd * path
    p_imd_im = p_imd / irr_rx

    noise_factor = db_to_linear(p.noise_figure_db)
    p_th = dbm_to_watts(p.thermal_floor_dbm)
    p_noise = noise_factor * p_th
    p_noise_im = p_noise / irr_rx

    if ldc_policy == "noise-floor":
        required_ldc = max(0.0, watts_to_dbm(p_si_pre) - p.thermal_floor_dbm)
    else:
        required_ldc = float(ldc_policy)
    p_si = p_si_pre * db_to_linear(-required_ldc)

    p_soi = dbm_to_watts(p.soi_power_dbm)
    p_ad_total = (p_si_pre + p_si_im + p_imd + p_imd_im + p_noise
                  + p_noise_im + p_soi)
    p_q = p_ad_total / _snr_adc(p.adc_bits, p.papr_db)

    residual = p_si + p_si_im + p_imd + p_imd_im + p_noise + p_noise_im + p_q
    sinr_db = watts_to_dbm(p_soi) - watts_to_dbm(residual)

    return PowerBudget(
        tx_power_dbm=p.tx_power_dbm,
        p_si=watts_to_dbm(p_si),
        p_si_im=watts_to_dbm(p_si_im),
        p_imd=watts_to_dbm(p_imd),
        p_imd_im=watts_to_dbm(p_imd_im),
        p_noise=watts_to_dbm(p_noise),
        p_noise_im=watts_to_dbm(p_noise_im),
        p_q=watts_to_dbm(p_q),
        p_soi=watts_to_dbm(p_soi),
        required_ldc_db=required_ldc,
        sinr_db=sinr_db,
    )


def sweep_tx_power(p: SystemParameters, tx_powers_dbm: Sequence[float],
                   ldc_policy: str | float = "noise-floor") -> list[PowerBudget]:
    """Budget at each transmit power in the list."""
    if len(tx_powers_dbm) == 0:
        raise ValueError("transmit power sweep must be non-empty")
    return [compute_budget(replace(p, tx_power_dbm=float(tx)), ldc_policy)
            for tx in tx_powers_dbm]


BUDGET_CSV_COLUMNS = ("tx_dbm", "p_si", "p_si_im", "p_imd", "p_imd_im",
                      "p_noise", "p_noise_im", "p_q", "p_soi", "sinr")


def budget_csv_rows(budgets: Sequence[PowerBudget]) -> list[str]:
    """Fixed-format CSV lines (header first) for a budget sweep."""
    lines = [",".join(BUDGET_CSV_COLUMNS)]
    for b in budgets:
        vals = (b.tx_power_dbm, b.p_si, b.p_si_im, b.p_imd, b.p_imd_im,
                b.p_noise, b.p_noise_im, b.p_q, b.p_soi, b.sinr_db)
        lines.append(",".join(f"{v:.6f}" for v in vals))
    return lines
