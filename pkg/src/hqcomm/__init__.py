"""Hierarchical quantum information splitting and secret sharing simulator."""

__version__ = "0.1.0"

from .channels import ChannelSpec, cluster4, omega, omega_prime, secret_state  # noqa: E402
from .errors import (  # noqa: E402
    ChannelError,
    HQCommError,
    InvalidConfig,
    StateError,
    ZeroProbabilityBranch,
)
from .hqis import (  # noqa: E402
    Party,
    PauliCorrection,
    enumerate_hqis,
    role_swap_check,
    run_hqis,
    verify_encryption,
)
from .hqss import AdversaryModel, attack_effectiveness_study, run_hqss  # noqa: E402
from .phqis import enumerate_phqis, run_phqis, success_probability_exact  # noqa: E402
from .qcore import BellOutcome, Ket  # noqa: E402
from .register import Register  # noqa: E402

__all__ = [
    "AdversaryModel",
    "BellOutcome",
    "ChannelError",
    "ChannelSpec",
    "HQCommError",
    "InvalidConfig",
    "Ket",
    "Party",
    "PauliCorrection",
    "Register",
    "StateError",
    "ZeroProbabilityBranch",
    "attack_effectiveness_study",
    "cluster4",
    "enumerate_hqis",
    "enumerate_phqis",
    "omega",
    "omega_prime",
    "role_swap_check",
    "run_hqis",
    "run_hqss",
    "run_phqis",
    "secret_state",
    "success_probability_exact",
    "verify_encryption",
]
