"""Ring-demodulated differential-phase-shift link simulator.

Thin python surface over the C++ core: ring characterization, the analytic
error-ratio model, key-rate accounting and the end-to-end scenario runner.
"""

from ._core import (
    __version__,
    binary_entropy,
    fit_ring,
    keyrate,
    link_budget,
    preset_json,
    preset_names,
    qber,
    ring_figures,
    ring_transmission_db,
    run_config,
    run_preset,
    secure_fraction,
)

__all__ = [
    "__version__",
    "binary_entropy",
    "fit_ring",
    "keyrate",
    "link_budget",
    "preset_json",
    "preset_names",
    "qber",
    "ring_figures",
    "ring_transmission_db",
    "run_config",
    "run_preset",
    "secure_fraction",
]
