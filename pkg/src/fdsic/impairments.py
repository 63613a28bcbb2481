"""Baseband-equivalent RF impairment operators and their calibration.

Stage operators for a direct-conversion full-duplex transceiver: TX IQ
mixer, third-order Hammerstein power amplifier, antenna coupling channel,
analog canceller tap, LNA, RX IQ mixer, and AGC + ADC.  Calibration
routines map dB-level component specs (IRR, IIP3, attenuation targets) onto
the operator coefficients.

Every operator is a pure function of its inputs plus an explicit seed, so
independent Monte-Carlo realizations only need independent seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .signals import (ComplexBasebandSignal, SignalError, fractional_delay,
                      fractional_delay_kernel, measure_power)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(watts) + 30.0)


class CalibrationError(ValueError):
    """A component spec cannot be met by the model."""


class RfCancellerInfeasibleError(CalibrationError):
    """Requested analog cancellation exceeds what the delay error permits."""

    def __init__(self, target_db: float, best_db: float):
        self.target_db = target_db
        self.best_db = best_db
        super().__init__(
            f"cannot reach {target_db:.1f} dB of analog cancellation; "
            f"best achievable with this delay error is {best_db:.2f} dB")


# ---------------------------------------------------------------------------
# IQ mixer


@dataclass(frozen=True)
class IqImbalance:
    """Widely-linear IQ mixer responses.

    ``g1`` filters the direct component and ``g2`` the conjugated (image)
    component; scalars are stored as single-tap FIRs.  For a frequency-flat
    mixer the image rejection ratio is ``|g1|^2 / |g2|^2``.
    """

    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        g1 = np.atleast_1d(np.asarray(self.g1, dtype=np.complex128))
        g2 = np.atleast_1d(np.asarray(self.g2, dtype=np.complex128))
        if np.sum(np.abs(g2) ** 2) >= np.sum(np.abs(g1) ** 2):
            raise CalibrationError("image response must be weaker than direct")
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)

    @property
    def irr_db(self) -> float:
        return linear_to_db(np.sum(np.abs(self.g1) ** 2)
                            / np.sum(np.abs(self.g2) ** 2))


def derive_iq_from_irr(irr_db: float, gain_db: float,
                       phase_split: str = "phase") -> IqImbalance:
    """Build a frequency-flat IQ imbalance from an IRR and mixer gain spec.

    The branch errors follow the classical model
    ``g1 = (1 + (1+eps) e^{-j phi}) / 2``, ``g2 = (1 - (1+eps) e^{-j phi}) / 2``
    with amplitude error ``eps`` and phase error ``phi``; both are then scaled
    so that ``|g1|^2 + |g2|^2`` equals the mixer power gain.

    ``phase_split`` selects how the imbalance is carried:

    * ``"phase"``: pure phase error (eps = 0),
    * ``"amplitude"``: pure amplitude error (phi = 0),
    * ``"mixed"``: half the image from each, with eps trimmed so the IRR is
      exact.
    """
    gain = db_to_linear(gain_db)
    if math.isinf(irr_db):
        return IqImbalance(np.array([np.sqrt(gain)]), np.array([0.0]))
    if irr_db <= 0:
        raise CalibrationError("IRR must be positive (image below direct)")
    rho = 10.0 ** (-irr_db / 20.0)
    if phase_split == "phase":
        eps, phi = 0.0, 2.0 * np.arctan(rho)
    elif phase_split == "amplitude":
        eps, phi = 2.0 * rho / (1.0 - rho), 0.0
    elif phase_split == "mixed":
        phi = np.arctan(rho)
        # |g2/g1| = rho  =>  quadratic in a = 1 + eps
        b = np.cos(phi) * (1 + rho ** 2) / (1 - rho ** 2)
        a = b + np.sqrt(b ** 2 - 1.0)
        eps = a - 1.0
    else:
        raise CalibrationError(f"unknown phase_split policy '{phase_split}'")
    a = 1.0 + eps
    g1 = (1.0 + a * np.exp(-1j * phi)) / 2.0
    g2 = (1.0 - a * np.exp(-1j * phi)) / 2.0
    scale = np.sqrt(gain / (abs(g1) ** 2 + abs(g2) ** 2))
    return IqImbalance(np.array([scale * g1]), np.array([scale * g2]))


def _apply_wl(g1: np.ndarray, g2: np.ndarray, x: np.ndarray) -> np.ndarray:
    return kernels.conv_trunc(x, g1) + kernels.conv_trunc(np.conj(x), g2)


def apply_tx_iq(imb: IqImbalance, sig: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """TX mixer: g1 * x + g2 * conj(x) (widely-linear filtering)."""
    return sig.with_samples(_apply_wl(imb.g1, imb.g2, sig.samples))


def apply_rx_iq(imb: IqImbalance, sig: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """RX mixer: identical widely-linear structure with the RX responses."""
    return sig.with_samples(_apply_wl(imb.g1, imb.g2, sig.samples))


# ---------------------------------------------------------------------------
# Power amplifier


@dataclass(frozen=True)
class PaModel:
    """Hammerstein PA: static third-order polynomial followed by a FIR.

    ``alpha1`` opposes ``alpha0`` in phase (compressive); ``memory`` defaults
    to a unit impulse.
    """

    alpha0: complex
    alpha1: complex
    memory: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "memory",
            np.atleast_1d(np.asarray(self.memory, dtype=np.complex128)))


PA_MEMORY_3TAP = np.array([0.98, 0.1, -0.05]) / np.linalg.norm([0.98, 0.1, -0.05])


def measure_two_tone_iip3(pa: PaModel, tone_power_w: float,
                          n: int = 4096) -> float:
    """Input-referred third-order intercept from a two-tone test, dBm.

    Two equal-power tones are amplified, the fundamental and IM3 bin levels
    are read off a DFT, and the intercept is extrapolated with the standard
    3:1 slope: ``IIP3 = P_in + (P_fund - P_im3) / 2``.
    """
    k1, k2 = 5, 8
    n_idx = np.arange(n)
    amp = np.sqrt(tone_power_w)
    x = amp * (np.exp(2j * np.pi * k1 * n_idx / n)
               + np.exp(2j * np.pi * k2 * n_idx / n))
    y = apply_pa(pa, ComplexBasebandSignal(x, 1.0)).samples
    spec = np.fft.fft(y) / n
    p_fund = abs(spec[k1]) ** 2
    p_im3 = abs(spec[(2 * k1 - k2) % n]) ** 2
    if p_im3 == 0:
        return float("inf")
    return watts_to_dbm(tone_power_w) + 5.0 * np.log10(p_fund / p_im3)


def calibrate_pa(gain_db: float, iip3_dbm: float,
                 memory: np.ndarray | None = None) -> PaModel:
    """Derive Hammerstein coefficients from gain and input-referred IIP3.

    ``alpha0`` is the linear voltage gain.  ``|alpha1|`` starts from the
    small-signal intercept relation ``|alpha1| = |alpha0| / iip3_watts`` and
    is then refined against a two-tone measurement until the measured
    intercept matches the spec within 0.01 dB.
    """
    if not gain_db > 0:
        raise CalibrationError("PA gain must be positive in dB")
    alpha0 = 10.0 ** (gain_db / 20.0)
    mem = np.array([1.0]) if memory is None else np.asarray(memory)
    if math.isinf(iip3_dbm):
        return PaModel(alpha0, 0.0, mem)
    iip3_w = dbm_to_watts(iip3_dbm)
    alpha1 = -alpha0 / iip3_w
    pa = PaModel(alpha0, alpha1, mem)
    # refine at a drive 30 dB below the intercept, where the 3:1 slope is clean
    drive_w = iip3_w / 1000.0
    for _ in range(5):
        measured = measure_two_tone_iip3(pa, drive_w)
        err_db = measured - iip3_dbm
        if abs(err_db) < 0.01:
            break
        alpha1 = alpha1 * 10.0 ** (err_db / 10.0)
        pa = PaModel(alpha0, alpha1, mem)
    return pa


def apply_pa(pa: PaModel, sig: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """(alpha0 * x + alpha1 * x|x|^2) filtered by the PA memory FIR."""
    poly = kernels.hammerstein(sig.samples, pa.alpha0, pa.alpha1)
    if pa.memory.size == 1:
        return sig.with_samples(pa.memory[0] * poly)
    return sig.with_samples(kernels.conv_trunc(poly, pa.memory))


def imd_signal(sig: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """Third-order distortion basis x(n)|x(n)|^2 (diagnostic tap)."""
    return sig.with_samples(kernels.hammerstein(sig.samples, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Antenna coupling channel


@dataclass(frozen=True)
class CouplingChannel:
    """Three-tap TX-to-RX coupling: LOS at lag 0, multipath at lags 1 and 2."""

    taps: np.ndarray
    antenna_attenuation_db: float
    los_to_multipath_db: float

    def __post_init__(self):
        object.__setattr__(
            self, "taps", np.asarray(self.taps, dtype=np.complex128))


def draw_coupling_channel(antenna_attenuation_db: float,
                          los_to_multipath_db: float,
                          seed: int) -> CouplingChannel:
    """Draw one static coupling channel realization.

    The LOS tap has deterministic magnitude ``10^(-att/20)`` and uniform
    random phase; the two multipath taps are i.i.d. circular Gaussian and
    together carry ``los_to_multipath_db`` less average power than the LOS.
    """
    if not los_to_multipath_db > 0:
        raise CalibrationError("LOS/multipath ratio must be positive in dB")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    los = 10.0 ** (-antenna_attenuation_db / 20.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    if math.isinf(los_to_multipath_db):
        taps = np.array([los])
    else:
        mp_total = db_to_linear(-antenna_attenuation_db) * db_to_linear(-los_to_multipath_db)
        mp = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) * np.sqrt(mp_total / 4)
        taps = np.array([los, mp[0], mp[1]])
    return CouplingChannel(taps, antenna_attenuation_db, los_to_multipath_db)


# ---------------------------------------------------------------------------
# Analog (RF) canceller


@dataclass(frozen=True)
class RfCanceller:
    """Single complex tap applied to a delayed copy of the PA output.

    ``gain`` multiplies the cancellation replica; ``delay_error`` is the
    replica's timing error as a fraction of the sample interval.  The
    calibrated line-of-sight attenuation and the attenuation measured on the
    total coupled signal are both recorded.
    """

    gain: complex
    delay_error: float
    attenuation_los_db: float
    attenuation_total_db: float


def _attenuation_db(reference: np.ndarray, residual: np.ndarray) -> float:
    return -linear_to_db(np.mean(np.abs(residual) ** 2)
                         / np.mean(np.abs(reference) ** 2))


def calibrate_rf_canceller(channel: CouplingChannel, target_db: float,
                           delay_error: float,
                           x_pa: ComplexBasebandSignal,
                           tol_db: float = 0.05) -> RfCanceller:
    """Tune the canceller tap so the LOS coupling is attenuated by ``target_db``.

    The replica is the fractionally delayed PA output.  The optimal complex
    gain (least-squares fit to the LOS component) gives the best achievable
    attenuation; an amplitude detuning factor is then found by bisection so
    the attenuation lands on the target.  Raises
    ``RfCancellerInfeasibleError`` when the delay error alone caps the
    attenuation below the target.
    """
    replica = fractional_delay(x_pa, delay_error).samples
    los = channel.taps[0] * x_pa.samples
    gain_opt = np.vdot(replica, los) / np.vdot(replica, replica)

    def los_att(eps: float) -> float:
        return _attenuation_db(los, los - gain_opt * (1 + eps) * replica)

    best = los_att(0.0)
    if best < target_db:
        raise RfCancellerInfeasibleError(target_db, best)
    lo, hi = 0.0, 1.0
    while los_att(hi) > target_db:
        hi *= 2.0
    while True:
        mid = 0.5 * (lo + hi)
        att = los_att(mid)
        if abs(att - target_db) <= tol_db or hi - lo < 1e-12:
            break
        if att > target_db:
            lo = mid
        else:
            hi = mid
    gain = gain_opt * (1 + mid)
    total = kernels.conv_trunc(x_pa.samples, channel.taps)
    total_att = _attenuation_db(total, total - gain * replica)
    return RfCanceller(complex(gain), delay_error, att, total_att)


def apply_rf_canceller(rfc: RfCanceller, received: ComplexBasebandSignal,
                       x_pa: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """Subtract the scaled, delayed PA-output replica from the received signal."""
    replica = fractional_delay(x_pa, rfc.delay_error).samples
    return received.with_samples(received.samples - rfc.gain * replica)


# ---------------------------------------------------------------------------
# LNA


@dataclass(frozen=True)
class LnaModel:
    """LNA with complex gain and a noise figure charged entirely to it."""

    gain_db: float
    noise_figure_db: float

    @property
    def gain(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)


def apply_lna(lna: LnaModel, sig: ComplexBasebandSignal, seed: int,
              thermal_floor_w: float) -> ComplexBasebandSignal:
    """Amplify and add the LNA's own noise.

    The added noise power is ``|k|^2 (F - 1) p_th`` so that input thermal
    noise of power ``p_th`` leaves the LNA with the composite power
    ``|k|^2 F p_th``.
    """
    k = lna.gain
    noise_factor = db_to_linear(lna.noise_figure_db)
    out = k * sig.samples
    added = k ** 2 * (noise_factor - 1.0) * thermal_floor_w
    if added > 0:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        scale = np.sqrt(added / 2)
        out = out + scale * (rng.standard_normal(len(out))
                             + 1j * rng.standard_normal(len(out)))
    return sig.with_samples(out)


# ---------------------------------------------------------------------------
# AGC + ADC


@dataclass(frozen=True)
class AdcModel:
    """Uniform mid-tread ADC behind an ideal AGC.

    ``bits=None`` models an unquantized converter.  ``loading`` selects the
    AGC law:

    * ``"peak-proxy"`` (default): the 99.99th-percentile input magnitude is
      scaled to full range.  The absolute maximum of a Gaussian-like frame is
      realization-dependent, so the percentile gives stable loading.
    * ``"headroom"``: each rail's RMS is placed ``papr_headroom_db`` below
      full range, the loading assumed by the quantizer SNR formula.
    """

    bits: int | None = 12
    vpp: float = 4.5
    papr_headroom_db: float = 10.0
    loading: str = "peak-proxy"
    peak_percentile: float = 99.99

    @property
    def full_scale(self) -> float:
        return self.vpp / 2.0

    @property
    def step(self) -> float:
        if self.bits is None:
            raise CalibrationError("unquantized ADC has no step size")
        return self.vpp / 2 ** self.bits

    @property
    def snr_db(self) -> float:
        """Quantizer SNR formula 6.02 b + 4.76 - PAPR, dB."""
        if self.bits is None:
            return float("inf")
        return 6.02 * self.bits + 4.76 - self.papr_headroom_db


def agc_gain(adc: AdcModel, sig: ComplexBasebandSignal) -> float:
    """VGA gain matching the input waveform to the converter range."""
    power = measure_power(sig)
    if power == 0:
        raise SignalError("AGC is undefined for a zero-power input")
    if adc.loading == "peak-proxy":
        peak = float(np.percentile(np.abs(sig.samples), adc.peak_percentile))
    elif adc.loading == "headroom":
        rail_rms = np.sqrt(power / 2)
        peak = 10.0 ** (adc.papr_headroom_db / 20.0) * rail_rms
    else:
        raise CalibrationError(f"unknown AGC loading policy '{adc.loading}'")
    return adc.full_scale / peak


def apply_agc_adc(adc: AdcModel, sig: ComplexBasebandSignal,
                  k_bb: float | None = None) -> tuple[ComplexBasebandSignal, float]:
    """Scale to the converter range and quantize I and Q rails.

    Returns the quantized signal (still carrying the VGA gain ``k_bb``) and
    the gain itself; dividing the samples by ``k_bb`` refers them back to the
    ADC input scale.
    """
    if k_bb is None:
        k_bb = agc_gain(adc, sig)
    scaled = k_bb * sig.samples
    if adc.bits is None:
        return sig.with_samples(scaled), k_bb
    out = kernels.quantize_midtread(scaled, adc.step, adc.full_scale)
    return sig.with_samples(out), k_bb
