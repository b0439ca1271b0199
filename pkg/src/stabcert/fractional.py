"""Fractional powers of shifted resolvents and graph norms of perturbation factors.

For a normal generator the powers ``(i w - A)^s`` act entrywise on the spectral
samples.  Bases ``i w - lambda_j`` have real part ``-Re lambda_j >= 0`` so the
principal branch is single valued there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelError, SingularPointError
from .models import PerturbationFactors, SpectralModel

__all__ = [
    "Side",
    "MomentDirection",
    "MomentCheck",
    "fractional_multiplier",
    "apply_fractional_resolvent_power",
    "graph_norm",
    "operator_norm",
    "positive_power_norm",
    "check_moment_inequality",
    "refinement_stable",
]


class Side(str, enum.Enum):
    B_SIDE = "B_side"
    C_SIDE = "C_side"


class MomentDirection(str, enum.Enum):
    POSITIVE_POWER = "positive_power"
    INVERSE_POWER_B = "inverse_power_B"
    INVERSE_POWER_C = "inverse_power_C"


def _base(model: SpectralModel, omega: float, side: Side) -> np.ndarray:
    if Side(side) is Side.B_SIDE:
        base = 1j * omega - model.eigenvalues
    else:
        base = -1j * omega - np.conj(model.eigenvalues)
    zero = np.flatnonzero(base == 0)
    if zero.size:
        raise SingularPointError(
            f"sample lambda_{zero[0] + 1} sits at i*{omega}; fractional power undefined", 1j * omega
        )
    return base


def fractional_multiplier(model: SpectralModel, omega: float, power: float, side=Side.B_SIDE) -> np.ndarray:
    """Entrywise symbol of ``(i omega - A)^power`` (or the adjoint-side analogue).

    Negative ``power`` gives the fractional resolvent powers.
    """
    return np.power(_base(model, omega, side), power)


def apply_fractional_resolvent_power(model: SpectralModel, omega: float, beta: float, x, side=Side.B_SIDE) -> np.ndarray:
    if beta < 0:
        raise ValueError(f"exponent must be non-negative, got {beta}")
    x = np.asarray(x, dtype=complex)
    if beta == 0:
        return x.copy()
    return fractional_multiplier(model, omega, -beta, side) * x


def operator_norm(model: SpectralModel, columns: np.ndarray) -> float:
    """Norm of ``C^p -> X, u -> sum_j u_j col_j`` (columns given as a ``(p, N)`` array).

    Square root of the top eigenvalue of the weighted Gram matrix.
    """
    cols = np.atleast_2d(columns)
    gram = (cols * model.weights) @ cols.conj().T
    if not np.all(np.isfinite(gram)):
        raise DomainError("scaled columns have infinite weighted norm (outside fractional domain)")
    top = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[-1]
    return float(np.sqrt(max(top, 0.0)))


def graph_norm(model: SpectralModel, factors: PerturbationFactors, omega: float, beta: float, side=Side.B_SIDE) -> float:
    """``||(i omega - A)^{-beta} B||`` or ``||(-i omega - A^*)^{-beta} C^*||``."""
    factors.check_against(model)
    cols = factors.b if Side(side) is Side.B_SIDE else factors.c
    if beta < 0:
        raise ValueError(f"exponent must be non-negative, got {beta}")
    if beta == 0:
        return operator_norm(model, cols)
    with np.errstate(over="raise", invalid="raise"):
        try:
            scaled = cols * fractional_multiplier(model, omega, -beta, side)[None, :]
        except FloatingPointError:
            raise DomainError("scaled columns overflow (outside fractional domain)") from None
    return operator_norm(model, scaled)


def positive_power_norm(model: SpectralModel, factors: PerturbationFactors, beta: float, side=Side.B_SIDE) -> float:
    """``||(-A)^beta B||`` or ``||(-A^*)^beta C^*||`` (sizes used on the polynomial path)."""
    factors.check_against(model)
    if beta < 0:
        raise ValueError(f"exponent must be non-negative, got {beta}")
    if Side(side) is Side.B_SIDE:
        cols, base = factors.b, -model.eigenvalues
    else:
        cols, base = factors.c, -np.conj(model.eigenvalues)
    return operator_norm(model, cols * np.power(base, beta)[None, :])


def refinement_stable(coarse: float, fine: float, rtol: float = 0.01) -> bool:
    """Domain-membership heuristic: a truncated norm that barely moves under refinement."""
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        return False
    return abs(fine - coarse) <= rtol * max(abs(fine), np.finfo(float).tiny)


@dataclass(frozen=True)
class MomentCheck:
    lhs: float
    rhs: float
    constant_used: float
    holds: bool


def check_moment_inequality(
    model: SpectralModel,
    omega: float,
    alpha_t: float,
    alpha: float,
    x,
    direction=MomentDirection.POSITIVE_POWER,
    rtol: float = 1e-12,
) -> MomentCheck:
    """Evaluate both sides of ``||T^{a~} x|| <= M ||x||^{1-a~/a} ||T^a x||^{a~/a}``.

    ``T`` is ``i omega - A`` for the positive direction and the corresponding
    inverse (B side or adjoint C side) otherwise.  ``M = 1`` on normal models,
    where the inequality is Hoelder's inequality for the spectral measure.
    """
    if not 0 < alpha_t < alpha:
        raise ValueError(f"need 0 < alpha~ < alpha, got alpha~={alpha_t}, alpha={alpha}")
    direction = MomentDirection(direction)
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.size,):
        raise ModelError(f"vector of shape {x.shape} for a model with {model.size} samples")
    if direction is MomentDirection.POSITIVE_POWER:
        side, sign = Side.B_SIDE, 1.0
    elif direction is MomentDirection.INVERSE_POWER_B:
        side, sign = Side.B_SIDE, -1.0
    else:
        side, sign = Side.C_SIDE, -1.0
    lhs = model.norm(fractional_multiplier(model, omega, sign * alpha_t, side) * x)
    top = model.norm(fractional_multiplier(model, omega, sign * alpha, side) * x)
    theta = alpha_t / alpha
    rhs = model.norm(x) ** (1 - theta) * top**theta
    return MomentCheck(lhs, rhs, 1.0, bool(lhs <= rhs * (1 + rtol)))
