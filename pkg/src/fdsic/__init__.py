"""Full-duplex transceiver simulation and widely-linear SI cancellation."""

__version__ = "0.1.0"

from .budget import (PowerBudget, SystemParameters, compute_budget,
                     power_sum_dbm, sweep_tx_power)
from .cancellers import (AugmentedDataMatrix, ChannelEstimate,
                         apply_cancellation, build_augmented_matrix,
                         estimate_linear_ls, estimate_wl_ls,
                         measure_digital_attenuation, measure_sinr)
from .chain import ImpairmentChain, compose_wl_response, make_default_chain, run_chain
from .impairments import (AdcModel, CouplingChannel, IqImbalance, LnaModel,
                          PaModel, RfCanceller, apply_agc_adc, apply_lna,
                          apply_pa, apply_rf_canceller, apply_rx_iq,
                          apply_tx_iq, calibrate_pa, calibrate_rf_canceller,
                          derive_iq_from_irr, draw_coupling_channel)
from .signals import (ComplexBasebandSignal, OfdmConfig, awgn, convolve,
                      fractional_delay, generate_ofdm_frame, measure_power,
                      papr_db)

__all__ = [name for name in dir() if not name.startswith("_")]
