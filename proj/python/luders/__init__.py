"""Lueders measurement channels, master-equation dynamics and qutrit process tomography."""

from ._core import (
    LudersError,
    apply,
    bootstrap_uncertainty,
    g0_adiabatic,
    g0_exact,
    herm_eig,
    identity_channel,
    lueders_channel,
    measurement_channel,
    p_scatt,
    param_uncertainty,
    preparation_states,
    probabilities,
    process_fidelity,
    psd_sqrt,
    reconstruct,
    reconstruct_tp,
    simulate_dataset,
    tp_likelihood_ratio_test,
)

__all__ = [
    "LudersError",
    "apply",
    "bootstrap_uncertainty",
    "g0_adiabatic",
    "g0_exact",
    "herm_eig",
    "identity_channel",
    "lueders_channel",
    "measurement_channel",
    "p_scatt",
    "param_uncertainty",
    "preparation_states",
    "probabilities",
    "process_fidelity",
    "psd_sqrt",
    "reconstruct",
    "reconstruct_tp",
    "simulate_dataset",
    "tp_likelihood_ratio_test",
]
