"""Sliding-window polar codes: design, encoding, windowed SC/SCL decoding and BLER analysis."""

from .analysis import (
    BlerPoint,
    StopRule,
    Strategy,
    bler_bound,
    monte_carlo_bler,
    snr_sweep,
    target_snr,
)
from .construction import design_full, design_ind, design_sw, phi, phi_inv
from .core import AWGN, BEC, CodeConfig
from .decoder import sc_decode, scl_decode
from .encoder import encode_accumulate, encode_matrix
from .sliding_window import SlidingWindowDecoder, sw_sc_decode, sw_scl_decode

__all__ = [
    "AWGN", "BEC", "BlerPoint", "CodeConfig", "SlidingWindowDecoder", "StopRule", "Strategy",
    "bler_bound", "design_full", "design_ind", "design_sw", "encode_accumulate", "encode_matrix",
    "monte_carlo_bler", "phi", "phi_inv", "sc_decode", "scl_decode", "snr_sweep", "sw_sc_decode",
    "sw_scl_decode", "target_snr",
]
