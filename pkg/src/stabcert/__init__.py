"""stabcert: robustness certificates for strongly stable semigroups under low-rank perturbations.

The generator is a normal operator given by its spectral samples; a
perturbation is a finite-rank ``BC``.  The package estimates the resolvent
profile at imaginary-axis resonances, turns it into a perturbation budget
``delta`` and checks numerically what the budget promises.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    ModelError,
    SingularPointError,
    SpectrumError,
    StabcertError,
    UncertifiableError,
)
from .models import (  # noqa: E402
    ModelKind,
    PerturbationFactors,
    SpectralModel,
    build_diagonal_model,
    build_disk_model,
    custom_model,
    resolvent_norm_exact,
)
from .certificates import (  # noqa: E402
    RobustnessCertificate,
    check_budget,
    compose_certificate,
    estimate_resolvent_profile,
)
from .resolvent import (  # noqa: E402
    perturbed_resolvent_apply,
    perturbed_resolvent_norm,
    transfer_matrix,
    transfer_norm,
)

__all__ = [
    "DomainError",
    "ModelError",
    "SingularPointError",
    "SpectrumError",
    "StabcertError",
    "UncertifiableError",
    "ModelKind",
    "PerturbationFactors",
    "SpectralModel",
    "build_diagonal_model",
    "build_disk_model",
    "custom_model",
    "resolvent_norm_exact",
    "RobustnessCertificate",
    "check_budget",
    "compose_certificate",
    "estimate_resolvent_profile",
    "perturbed_resolvent_apply",
    "perturbed_resolvent_norm",
    "transfer_matrix",
    "transfer_norm",
]
