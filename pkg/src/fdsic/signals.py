"""Complex-baseband signal container, OFDM waveform generation and basic DSP.

Conventions used throughout the package:

* a signal is a uniformly sampled stream of complex amplitudes whose mean
  squared magnitude is a power in watts;
* all randomness flows through 64-bit integer seeds expanded with
  ``numpy.random.SeedSequence``, so identical (config, seed) pairs produce
  bit-identical output;
* FIR filtering uses full linear convolution truncated to the input length,
  with the first output sample aligned to the first input sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

FRACTIONAL_DELAY_TAPS = 63


class SignalError(ValueError):
    """Raised for invalid signal-level operations (empty input, bad config)."""


@dataclass(frozen=True)
class ComplexBasebandSignal:
    """Uniformly sampled complex baseband signal.

    Attributes
    ----------
    samples : np.ndarray
        Complex sample stream; ``mean(|samples|**2)`` is the power in watts.
    sample_rate : float
        Sample rate in Hz.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size < 1:
            raise SignalError("signal must hold at least one sample")
        if not self.sample_rate > 0:
            raise SignalError("sample_rate must be positive")
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise SignalError("signal contains non-finite samples")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    def with_samples(self, samples: np.ndarray) -> "ComplexBasebandSignal":
        """Same sample rate, new sample content."""
        return ComplexBasebandSignal(samples, self.sample_rate)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM waveform layout.

    Defaults follow a WLAN-like 64-subcarrier layout on a 12.5 MHz channel:
    native complex rate 16 MHz (64 subcarriers at 250 kHz spacing), a 4 us
    useful symbol, a cyclic prefix of 25 % of the useful length, and a x4
    oversampled output rate of 64 MHz (15.625 ns sample interval).
    """

    qam_order: int = 16
    n_subcarriers: int = 64
    n_data_subcarriers: int = 48
    guard_fraction: float = 0.25
    sample_interval: float = 15.625e-9
    symbol_length: float = 4e-6
    oversampling: int = 4
    interp_taps_per_phase: int = 16

    def __post_init__(self):
        if self.n_data_subcarriers > self.n_subcarriers - 1:
            raise SignalError("data subcarriers must fit beside the DC null")
        if self.n_data_subcarriers % 2 or self.n_data_subcarriers < 2:
            raise SignalError("data subcarriers are mapped symmetrically around DC")
        m = int(round(np.sqrt(self.qam_order)))
        if m * m != self.qam_order:
            raise SignalError("qam_order must be a perfect square")
        # Table consistency: the useful symbol spans n_subcarriers*oversampling
        # output samples, to within one sample interval.
        useful = self.symbol_length / self.sample_interval
        if abs(useful - self.n_subcarriers * self.oversampling) > 1.0:
            raise SignalError("symbol_length, sample_interval and subcarrier "
                              "count are inconsistent")

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.sample_interval

    @property
    def native_rate(self) -> float:
        return self.sample_rate / self.oversampling

    @property
    def useful_samples(self) -> int:
        """Output samples in the useful (IFFT) part of one symbol."""
        return self.n_subcarriers * self.oversampling

    @property
    def cp_samples(self) -> int:
        """Output samples in the cyclic prefix of one symbol."""
        return int(round(self.guard_fraction * self.useful_samples))

    @property
    def samples_per_symbol(self) -> int:
        return self.useful_samples + self.cp_samples

    @property
    def data_subcarriers(self) -> np.ndarray:
        """Data subcarrier indices: symmetric around DC, DC unused."""
        half = self.n_data_subcarriers // 2
        return np.concatenate([np.arange(1, half + 1), np.arange(-half, 0)])


def _qam_alphabet(order: int) -> np.ndarray:
    """Square QAM alphabet with unit average power."""
    m = int(round(np.sqrt(order)))
    axis = np.arange(-(m - 1), m, 2, dtype=float)
    pts = (axis[:, None] + 1j * axis[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def blackman_harris(length: int) -> np.ndarray:
    """4-term Blackman-Harris window."""
    n = np.arange(length)
    t = 2 * np.pi * n / (length - 1)
    return (0.35875 - 0.48829 * np.cos(t)
            + 0.14128 * np.cos(2 * t) - 0.01168 * np.cos(3 * t))


def _interp_kernel(oversampling: int, taps_per_phase: int) -> np.ndarray:
    """Windowed-sinc interpolation lowpass for integer upsampling."""
    length = oversampling * taps_per_phase + 1
    n = np.arange(length) - (length - 1) / 2
    return np.sinc(n / oversampling) * blackman_harris(length)


def generate_ofdm_frame(cfg: OfdmConfig, n_symbols: int, target_power: float,
                        seed: int) -> ComplexBasebandSignal:
    """Generate an oversampled OFDM frame with cyclic prefixes.

    Random QAM symbols are placed on the data subcarriers of a native-rate
    IFFT, a cyclic prefix is prepended per symbol, and the stream is
    upsampled by the configured factor through a windowed-sinc interpolation
    lowpass (which also confines the spectrum to the native band).  The
    output is scaled so its measured mean power equals ``target_power``.

    Parameters
    ----------
    cfg : OfdmConfig
    n_symbols : int
        Number of OFDM symbols; the output holds
        ``n_symbols * cfg.samples_per_symbol`` samples.
    target_power : float
        Mean power of the returned frame, watts.
    seed : int
    """
    if n_symbols < 1:
        raise SignalError("n_symbols must be at least 1")
    if not target_power > 0:
        raise SignalError("target_power must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    alphabet = _qam_alphabet(cfg.qam_order)
    syms = rng.choice(alphabet, size=(n_symbols, cfg.n_data_subcarriers))

    nfft = cfg.n_subcarriers
    spectrum = np.zeros((n_symbols, nfft), dtype=np.complex128)
    spectrum[:, cfg.data_subcarriers] = syms
    useful = np.fft.ifft(spectrum, axis=1)
    cp_native = int(round(cfg.guard_fraction * nfft))
    stream = np.concatenate([useful[:, nfft - cp_native:], useful], axis=1).ravel()

    ovs = cfg.oversampling
    upsampled = np.zeros(stream.size * ovs, dtype=np.complex128)
    upsampled[::ovs] = stream
    kernel = _interp_kernel(ovs, cfg.interp_taps_per_phase)
    centre = (kernel.size - 1) // 2
    x = kernels.conv_trunc(upsampled, kernel, offset=centre)

    x = x * np.sqrt(target_power / np.mean(np.abs(x) ** 2))
    return ComplexBasebandSignal(x, cfg.sample_rate)


def measure_power(sig: ComplexBasebandSignal) -> float:
    """Mean of |x(n)|^2 over the full buffer, watts."""
    return float(np.mean(np.abs(sig.samples) ** 2))


def papr_db(sig: ComplexBasebandSignal, percentile: float = 99.99) -> float:
    """Peak-to-average power ratio in dB, peak taken at a magnitude percentile."""
    peak = np.percentile(np.abs(sig.samples), percentile)
    return 10 * np.log10(peak ** 2 / measure_power(sig))


def fractional_delay_kernel(delay: float,
                            n_taps: int = FRACTIONAL_DELAY_TAPS) -> np.ndarray:
    """Windowed-sinc interpolator for a sub-sample delay.

    The kernel is centred, so applying it with ``kernels.conv_trunc`` at
    offset ``(n_taps - 1) // 2`` realizes the fractional part of the delay
    only (group delay compensated).
    """
    centre = (n_taps - 1) // 2
    n = np.arange(n_taps)
    return np.sinc(n - centre - delay) * blackman_harris(n_taps)


def fractional_delay(sig: ComplexBasebandSignal, delay: float,
                     n_taps: int = FRACTIONAL_DELAY_TAPS) -> ComplexBasebandSignal:
    """Delay a signal by a fraction of a sample interval.

    ``|delay| < 1``; integer shifts are cheaper done by slicing.  A tone of
    frequency f acquires the phase shift ``-2*pi*f*delay/sample_rate``.
    """
    if not abs(delay) < 1:
        raise SignalError("fractional delay must satisfy |delay| < 1 sample")
    kernel = fractional_delay_kernel(delay, n_taps)
    centre = (n_taps - 1) // 2
    out = kernels.conv_trunc(sig.samples, kernel, offset=centre)
    return sig.with_samples(out)


def awgn(power: float, length: int, seed: int,
         sample_rate: float = 64e6) -> ComplexBasebandSignal:
    """Circular complex white Gaussian noise of the given total power."""
    if power < 0:
        raise SignalError("noise power must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if power == 0:
        return ComplexBasebandSignal(np.zeros(length, dtype=np.complex128),
                                     sample_rate)
    scale = np.sqrt(power / 2)
    noise = scale * (rng.standard_normal(length) + 1j * rng.standard_normal(length))
    return ComplexBasebandSignal(noise, sample_rate)


def convolve(sig: ComplexBasebandSignal, fir: np.ndarray) -> ComplexBasebandSignal:
    """Filter a signal with a causal FIR.

    Full linear convolution truncated to the input length; output sample 0
    is aligned with input sample 0.
    """
    fir = np.atleast_1d(np.asarray(fir, dtype=np.complex128))
    if fir.size == 0:
        raise SignalError("FIR must have at least one tap")
    return sig.with_samples(kernels.conv_trunc(sig.samples, fir))
