"""Linear and widely-linear least-squares digital interference cancellers.

The canceller fits FIR filters from the known transmit samples (and,
widely-linearly, their conjugates) to the received digital samples, then
subtracts the filtered reference.  The data matrix is covariance-windowed:
only rows with full filter support are kept, and the first ``K`` taps of
each filter are non-causal (pre-cursor) to absorb timing skew of the analog
cancellation replica.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import ComplexBasebandSignal


class InsufficientDataError(ValueError):
    """Too few samples to overdetermine the requested filter lengths."""


class SingularMatrixError(ValueError):
    """Estimation matrix is numerically rank deficient."""

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"estimation matrix condition number {condition:.3e} "
                         "exceeds the 1e10 stability limit")


class AlignmentError(ValueError):
    """Reference and observation lengths are inconsistent."""


@dataclass(frozen=True)
class ChannelEstimate:
    """Widely-linear FIR pair; tap k of either filter acts at lag k - K."""

    h1: np.ndarray
    h2: np.ndarray
    n_precursor: int

    def __post_init__(self):
        h1 = np.asarray(self.h1, dtype=np.complex128)
        h2 = np.asarray(self.h2, dtype=np.complex128)
        if h1.shape != h2.shape:
            raise AlignmentError("filter pair must share one length")
        if not 0 <= self.n_precursor < h1.size:
            raise AlignmentError("need 0 <= K < M")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)


@dataclass(frozen=True)
class AugmentedDataMatrix:
    """Covariance-windowed regression data for the widely-linear fit.

    ``matrix`` holds ``[X  conj(X)]`` where row i of X is
    ``x(M+K-1+i), x(M+K-2+i), ..., x(K+i)``; ``reference[i]`` is the
    observation ``y(M-1+i)``.  ``row0_index = M-1`` maps rows back to
    absolute sample indices.
    """

    matrix: np.ndarray
    reference: np.ndarray
    filter_length: int
    n_precursor: int

    @property
    def row0_index(self) -> int:
        return self.filter_length - 1

    @property
    def direct_block(self) -> np.ndarray:
        return self.matrix[:, :self.filter_length]


def build_augmented_matrix(x: ComplexBasebandSignal, y: ComplexBasebandSignal,
                           filter_length: int,
                           n_precursor: int) -> AugmentedDataMatrix:
    """Assemble the windowed data matrix and aligned reference vector.

    Keeps the ``N - M - K + 1`` rows with full support, pairing observation
    ``y(n)`` with transmit lags ``n+K .. n+K-M+1``.
    """
    m, k = filter_length, n_precursor
    if not 0 <= k < m:
        raise AlignmentError("need 0 <= K < M")
    if len(x) != len(y):
        raise AlignmentError("reference and observation lengths differ")
    n = len(x)
    if n <= 2 * m + k:
        raise InsufficientDataError(
            f"{n} samples cannot overdetermine 2M={2*m} coefficients with K={k}")
    xs = x.samples
    rows = np.arange(m + k - 1, n)[:, None] - np.arange(m)[None, :]
    direct = xs[rows]
    matrix = np.hstack([direct, np.conj(direct)])
    reference = y.samples[m - 1:n - k]
    return AugmentedDataMatrix(matrix, reference, m, k)


def _solve_ls(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    solution, _, rank, sv = np.linalg.lstsq(a, b, rcond=None)
    condition = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if rank < a.shape[1] or condition > 1e10:
        raise SingularMatrixError(condition)
    return solution


def estimate_wl_ls(data: AugmentedDataMatrix) -> ChannelEstimate:
    """Widely-linear least squares over the augmented matrix.

    Solved through an SVD-based least-squares factorization; the stacked
    solution splits into the direct filter (first M entries) and the
    conjugate filter (last M).
    """
    h_aug = _solve_ls(data.matrix, data.reference)
    m = data.filter_length
    return ChannelEstimate(h_aug[:m], h_aug[m:], data.n_precursor)


def estimate_linear_ls(data: AugmentedDataMatrix) -> ChannelEstimate:
    """Classical linear least squares: direct block only, conjugate filter zero."""
    h1 = _solve_ls(data.direct_block, data.reference)
    return ChannelEstimate(h1, np.zeros_like(h1), data.n_precursor)


def cancellation_signal(est: ChannelEstimate, x: np.ndarray) -> np.ndarray:
    """h1 * x + h2 * conj(x) over the windowed rows (length N - M - K + 1)."""
    m, k = est.h1.size, est.n_precursor
    rows = np.arange(m + k - 1, x.size)[:, None] - np.arange(m)[None, :]
    windows = x[rows]
    return windows @ est.h1 + np.conj(windows) @ est.h2


def apply_cancellation(est: ChannelEstimate, x: ComplexBasebandSignal,
                       y: ComplexBasebandSignal) -> ComplexBasebandSignal:
    """Subtract the estimated interference; returns the windowed residual.

    Sample i of the result corresponds to ``y(M-1+i)``; the first and last
    rows without full filter support are dropped, matching the estimator's
    covariance windowing.
    """
    if len(x) != len(y):
        raise AlignmentError("reference and observation lengths differ")
    m, k = est.h1.size, est.n_precursor
    if len(x) < m + k:
        raise AlignmentError("signal shorter than the filter support")
    predicted = cancellation_signal(est, x.samples)
    residual = y.samples[m - 1:len(y) - k] - predicted
    return ComplexBasebandSignal(residual, y.sample_rate)


ATTENUATION_CAP_DB = 300.0


def measure_digital_attenuation(before: ComplexBasebandSignal,
                                after: ComplexBasebandSignal) -> float:
    """Drop in interference power achieved by cancellation, in dB (positive).

    ``before`` and ``after`` must hold the isolated interference (noise and
    any wanted signal excluded).  Perfect cancellation is capped at
    ``ATTENUATION_CAP_DB``.
    """
    p_before = np.mean(np.abs(before.samples) ** 2)
    if p_before == 0:
        raise ValueError("reference interference power is zero")
    p_after = np.mean(np.abs(after.samples) ** 2)
    if p_after <= p_before * 10 ** (-ATTENUATION_CAP_DB / 10):
        return ATTENUATION_CAP_DB
    return float(10 * np.log10(p_before / p_after))


def measure_sinr(soi_at_detector: ComplexBasebandSignal,
                 residual_without_soi: ComplexBasebandSignal) -> float:
    """Detector-input SINR in dB.

    ``soi_at_detector`` is the received signal of interest propagated through
    the receive path alone; ``residual_without_soi`` is the canceller output
    of an identical run with the signal of interest removed, i.e. everything
    that competes with it.
    """
    p_soi = np.mean(np.abs(soi_at_detector.samples) ** 2)
    p_rest = np.mean(np.abs(residual_without_soi.samples) ** 2)
    return float(10 * np.log10(p_soi / p_rest))


def align_by_crosscorrelation(x: ComplexBasebandSignal,
                              y: ComplexBasebandSignal,
                              max_lag: int = 8) -> int:
    """Dominant integer lag of y relative to x (positive: y is delayed).

    Scans a small window of lags by correlating against the reference; the
    canceller's pre-cursor taps absorb any remaining sub-sample skew.
    """
    xs, ys = x.samples, y.samples
    lags = np.arange(-max_lag, max_lag + 1)
    scores = [np.abs(np.vdot(xs[max(0, -lag):len(xs) - max(lag, 0)],
                             ys[max(0, lag):len(ys) - max(-lag, 0)]))
              for lag in lags]
    return int(lags[int(np.argmax(scores))])
