"""Compressive estimation of doubly selective channels in multicarrier
systems.

Modules: ``mcframe`` (pulse-shaping multicarrier frames), ``channel``
(delay-Doppler channel synthesis), ``solvers`` (sparse recovery),
``bases`` (sparsity-enhancing dictionaries), ``estimators`` (pilot-based
compressive estimation), ``iterative`` (decision-directed ICI/ISI
estimation), ``coding`` (convolutional code, interleaver, 4-QAM) and
``harness`` (Monte Carlo sweeps and the ``ccest`` command).
"""
from . import bases, channel, coding, estimators, iterative, mcframe, solvers
from .mcframe import MCConfig, demodulate, make_cp_ofdm, modulate

__version__ = "0.1.0"

__all__ = ["MCConfig", "bases", "channel", "coding", "demodulate", "estimators", "iterative",
           "make_cp_ofdm", "mcframe", "modulate", "solvers"]
