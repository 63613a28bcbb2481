"""Composed impairment chain: build, run, and closed-form response algebra.

The chain applies, in order: TX IQ mixer, Hammerstein PA, antenna coupling,
thermal noise injection, analog cancellation, LNA, RX IQ mixer, AGC + ADC.
Digital samples are referred back to the ADC input scale by the (known) AGC
gain, so estimator coefficients are independent of converter loading.

With the PA third-order term disabled, the whole chain is a widely-linear
map of the transmitted baseband samples; ``compose_wl_response`` returns the
two finite impulse responses of that map in closed form, which the tests use
to check the chain against the algebra and which the metrics use to isolate
the linear and conjugate interference components exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .impairments import (AdcModel, CouplingChannel, IqImbalance, LnaModel,
                          PaModel, RfCanceller, apply_agc_adc, apply_lna,
                          apply_pa, apply_rf_canceller, apply_rx_iq,
                          apply_tx_iq, calibrate_pa, calibrate_rf_canceller,
                          db_to_linear, derive_iq_from_irr)
from .signals import ComplexBasebandSignal, awgn, fractional_delay_kernel


@dataclass(frozen=True)
class ImpairmentChain:
    """Per-stage operator state for one channel realization."""

    tx_iq: IqImbalance
    pa: PaModel
    channel: CouplingChannel
    rf_canceller: RfCanceller
    lna: LnaModel
    rx_iq: IqImbalance
    adc: AdcModel
    thermal_floor_w: float

    def but(self, **changes) -> "ImpairmentChain":
        """Copy with stages replaced (used to isolate components in tests)."""
        return replace(self, **changes)


def build_chain(*, tx_iq: IqImbalance, pa: PaModel, channel: CouplingChannel,
                rf_target_db: float, rf_delay_error: float,
                calibration_signal: ComplexBasebandSignal,
                lna: LnaModel, rx_iq: IqImbalance, adc: AdcModel,
                thermal_floor_w: float) -> ImpairmentChain:
    """Assemble a chain, calibrating the analog canceller on a PA-output frame."""
    x_pa = apply_pa(pa, apply_tx_iq(tx_iq, calibration_signal))
    rfc = calibrate_rf_canceller(channel, rf_target_db, rf_delay_error, x_pa)
    return ImpairmentChain(tx_iq, pa, channel, rfc, lna, rx_iq, adc,
                           thermal_floor_w)


def run_chain(chain: ImpairmentChain, x: ComplexBasebandSignal, *,
              noise_seed: int, soi: ComplexBasebandSignal | None = None,
              include_noise: bool = True, quantize: bool = True,
              ) -> ComplexBasebandSignal:
    """One pass through the transceiver; returns ADC-input-referred samples.

    ``soi`` is an externally received signal added at the receiver input
    (it bypasses the TX path and the canceller replica).  The AGC is set
    per frame and divided back out, modelling an ideal gain-tracked
    converter.
    """
    thermal_seed, lna_seed = (int(s.generate_state(1, np.uint64)[0]) for s in
                              np.random.SeedSequence(noise_seed).spawn(2))

    v = apply_pa(chain.pa, apply_tx_iq(chain.tx_iq, x))
    y = ComplexBasebandSignal(
        kernels.conv_trunc(v.samples, chain.channel.taps), x.sample_rate)
    if soi is not None:
        y = y.with_samples(y.samples + soi.samples)
    if include_noise:
        nth = awgn(chain.thermal_floor_w, len(y), thermal_seed, y.sample_rate)
        y = y.with_samples(y.samples + nth.samples)
    y = apply_rf_canceller(chain.rf_canceller, y, v)
    if include_noise:
        y = apply_lna(chain.lna, y, lna_seed, chain.thermal_floor_w)
    else:
        y = y.with_samples(chain.lna.gain * y.samples)
    y = apply_rx_iq(chain.rx_iq, y)
    if not quantize:
        return y
    quantized, k_bb = apply_agc_adc(chain.adc, y)
    return quantized.with_samples(quantized.samples / k_bb)


def soi_at_detector(chain: ImpairmentChain,
                    soi: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """Receive-path response of the signal of interest (no noise, no ADC)."""
    amplified = soi.with_samples(chain.lna.gain * soi.samples)
    return apply_rx_iq(chain.rx_iq, amplified)


# ---------------------------------------------------------------------------
# Closed-form response composition


@dataclass(frozen=True)
class ComposedResponse:
    """FIR pair of the chain's widely-linear part on a symmetric lag grid.

    ``h1`` filters x and ``h2`` filters conj(x); index ``lag0`` of either
    array is the zero-lag tap.  ``h_imd`` / ``h_imd_im`` filter the
    third-order basis x|x|^2 (as produced at the TX mixer output) and its
    conjugate.
    """

    h1: np.ndarray
    h2: np.ndarray
    h_imd: np.ndarray
    h_imd_im: np.ndarray
    lag0: int

    def apply_wl(self, x: np.ndarray) -> np.ndarray:
        """h1 * x + h2 * conj(x), aligned so output n matches input n."""
        return (kernels.conv_trunc(x, self.h1, offset=self.lag0)
                + kernels.conv_trunc(np.conj(x), self.h2, offset=self.lag0))

    def apply_imd(self, x_imd: np.ndarray) -> np.ndarray:
        return (kernels.conv_trunc(x_imd, self.h_imd, offset=self.lag0)
                + kernels.conv_trunc(np.conj(x_imd), self.h_imd_im,
                                     offset=self.lag0))


def _effective_coupling(chain: ImpairmentChain) -> tuple[np.ndarray, int]:
    """Coupling minus canceller replica, (h_ch - a), on a symmetric lag grid."""
    rfc = chain.rf_canceller
    a_kernel = rfc.gain * fractional_delay_kernel(rfc.delay_error)
    lag0 = (a_kernel.size - 1) // 2
    taps = np.zeros(a_kernel.size, dtype=np.complex128)
    nch = chain.channel.taps.size
    taps[lag0:lag0 + nch] = chain.channel.taps
    return taps - a_kernel, lag0


def compose_wl_response(chain: ImpairmentChain) -> ComposedResponse:
    """Closed-form responses of the chain without noise and quantization.

    For the linear part of the PA the cascade TX-IQ -> PA -> coupling minus
    canceller -> LNA -> RX-IQ collapses to

        h1 = k a0 (g1t * g1r * f * e)  +  conj(k a0) (conj(g2t) * g2r * conj(f) * conj(e))
        h2 = k a0 (g2t * g1r * f * e)  +  conj(k a0) (conj(g1t) * g2r * conj(f) * conj(e))

    with e = h_ch - a, k the LNA gain, and analogous single-branch
    expressions for the third-order terms.  Responses are referred to the
    ADC input (no converter gain factor).
    """
    e, lag0 = _effective_coupling(chain)
    k = chain.lna.gain
    a0, a1, f = chain.pa.alpha0, chain.pa.alpha1, chain.pa.memory
    g1t, g2t = chain.tx_iq.g1, chain.tx_iq.g2
    g1r, g2r = chain.rx_iq.g1, chain.rx_iq.g2

    def cas(*firs):
        out = np.array([1.0 + 0j])
        for fir in firs:
            out = np.convolve(out, fir)
        return out

    direct = cas(f, e)              # through the non-conjugating branch
    mirror = np.conj(cas(f, e))     # seen through the RX conjugation

    h1_a = k * a0 * cas(g1t, g1r, direct)
    h1_b = np.conj(k * a0) * cas(np.conj(g2t), g2r, mirror)
    h2_a = k * a0 * cas(g2t, g1r, direct)
    h2_b = np.conj(k * a0) * cas(np.conj(g1t), g2r, mirror)
    hi_a = k * a1 * cas(g1r, direct)
    hi_b = np.conj(k * a1) * cas(g2r, mirror)

    def pad_sum(*parts):
        n = max(p.size for p in parts)
        out = np.zeros(n, dtype=np.complex128)
        for p in parts:
            out[:p.size] += p
        return out

    return ComposedResponse(pad_sum(h1_a, h1_b), pad_sum(h2_a, h2_b),
                            pad_sum(hi_a), pad_sum(hi_b), lag0)


def make_default_chain(params, channel_seed: int,
                       calibration_signal: ComplexBasebandSignal,
                       *, rf_delay_error: float = 0.05,
                       los_to_multipath_db: float = 35.8,
                       phase_split: str = "phase") -> ImpairmentChain:
    """Chain with every stage derived from a SystemParameters record."""
    from .impairments import draw_coupling_channel

    tx_iq = derive_iq_from_irr(params.irr_tx_db, params.mixer_gain_db, phase_split)
    rx_iq = derive_iq_from_irr(params.irr_rx_db, params.mixer_gain_db, phase_split)
    pa = calibrate_pa(params.pa_gain_db, params.pa_iip3_dbm)
    channel = draw_coupling_channel(params.antenna_attenuation_db,
                                    los_to_multipath_db, channel_seed)
    lna = LnaModel(params.lna_gain_db, params.noise_figure_db)
    adc = AdcModel(bits=params.adc_bits, vpp=params.adc_vpp,
                   papr_headroom_db=params.papr_db)
    return build_chain(tx_iq=tx_iq, pa=pa, channel=channel,
                       rf_target_db=params.rf_cancellation_db,
                       rf_delay_error=rf_delay_error,
                       calibration_signal=calibration_signal,
                       lna=lna, rx_iq=rx_iq, adc=adc,
                       thermal_floor_w=db_to_linear(params.thermal_floor_dbm - 30))
