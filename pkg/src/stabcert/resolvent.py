"""Transfer matrices and perturbed resolvents via Sherman-Morrison-Woodbury.

All production paths cost ``O(N p + p^3)`` per spectral parameter; several
parameters can be processed at once (``lams`` arrays) and long parameter lists
are split into chunks that may be handed to a thread pool.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ModelError, SingularPointError, SpectrumError
from .models import PerturbationFactors, SpectralModel

__all__ = [
    "TransferMatrix",
    "PowerIterationResult",
    "resolvent_kernel",
    "transfer_matrix",
    "transfer_matrices",
    "transfer_norm",
    "transfer_norms",
    "perturbed_resolvent_apply",
    "perturbed_resolvent_apply_adjoint",
    "perturbed_resolvent_apply_many",
    "perturbed_resolvent_norm",
    "dense_resolvent_oracle",
    "map_chunks",
    "EIGENVALUE_ONE_TOL",
]

# Relative distance of an eigenvalue of C R B from 1 below which lambda is
# treated as a possible point of sigma(A + BC).
EIGENVALUE_ONE_TOL = 1e-10
DENSE_MAX_N = 2000
CHUNK = 1024


def map_chunks(fn, lams: np.ndarray, threads: int = 1, axis: int = 0, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``fn`` to consecutive chunks of ``lams`` and concatenate in order."""
    pieces = [lams[s : s + chunk] for s in range(0, lams.size, chunk)] or [lams]
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(fn, pieces))
    else:
        out = [fn(p) for p in pieces]
    return np.concatenate(out, axis=axis)


def resolvent_kernel(model: SpectralModel, lams, allow_closure: bool = False) -> np.ndarray:
    """``K[j, m] = 1 / (lams[m] - lambda_j)``, shape ``(N, M)``.

    ``allow_closure`` permits evaluation at closure points of the spectrum,
    where the truncated operator is still regular.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    diff = lams[None, :] - model.eigenvalues[:, None]
    if not diff.all():
        j, m = np.argwhere(diff == 0)[0]
        raise SingularPointError(f"lambda = {lams[m]} equals the sample lambda_{j + 1}", lams[m])
    if not allow_closure and model.closure_points:
        bad = np.isin(lams, np.asarray(model.closure_points, dtype=complex))
        if np.any(bad):
            lam = lams[np.argmax(bad)]
            raise SingularPointError(f"lambda = {lam} is a closure point of the spectrum", lam)
    return 1.0 / diff


@dataclass(frozen=True)
class TransferMatrix:
    lam: complex
    entries: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))


def _check(model: SpectralModel, factors: PerturbationFactors) -> None:
    factors.check_against(model)


def _transfer_from_kernel(model, factors, kern: np.ndarray) -> np.ndarray:
    # T[m, i, l] = <R(lam_m) b_l, c_i> = sum_n w_n conj(c_i[n]) b_l[n] K[n, m]
    p = factors.rank
    wc = factors.c.conj() * model.weights
    prod = (wc[:, None, :] * factors.b[None, :, :]).reshape(p * p, -1)
    return (prod @ kern).reshape(p, p, -1).transpose(2, 0, 1)


def transfer_matrices(model, factors, lams, allow_closure: bool = False, threads: int = 1) -> np.ndarray:
    """Transfer matrices ``C R(lam, A) B`` for many ``lam``; shape ``(M, p, p)``."""
    _check(model, factors)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))

    def one(chunk):
        return _transfer_from_kernel(model, factors, resolvent_kernel(model, chunk, allow_closure))

    return map_chunks(one, lams, threads)


def transfer_matrix(model, factors, lam, allow_closure: bool = False) -> TransferMatrix:
    lam = complex(lam)
    return TransferMatrix(lam, transfer_matrices(model, factors, [lam], allow_closure)[0])


def transfer_norms(model, factors, lams, allow_closure: bool = False, threads: int = 1) -> np.ndarray:
    """Largest singular value of each transfer matrix."""
    t = transfer_matrices(model, factors, lams, allow_closure, threads)
    return np.linalg.svd(t, compute_uv=False)[:, 0]


def transfer_norm(model, factors, lam, allow_closure: bool = False) -> float:
    return float(transfer_norms(model, factors, [lam], allow_closure)[0])


def _check_invertible(t: np.ndarray, lams: np.ndarray) -> None:
    ev = np.linalg.eigvals(t)
    scale = np.maximum(1.0, np.abs(ev))
    close = np.abs(ev - 1.0) <= EIGENVALUE_ONE_TOL * scale
    if np.any(close):
        m = np.argwhere(close)[0][0]
        raise SpectrumError(f"1 is an eigenvalue of C R(lambda, A) B at lambda = {lams[m]}; lambda may belong to sigma(A+BC)")


def perturbed_resolvent_apply_many(model, factors, lams, x, adjoint: bool = False, allow_closure: bool = False) -> np.ndarray:
    """``R(lam, A+BC) x`` (or its adjoint) for every ``lam``; shape ``(N, M)``."""
    _check(model, factors)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.size,):
        raise ModelError(f"vector of shape {x.shape} for a model with {model.size} samples")
    kern = resolvent_kernel(model, lams, allow_closure)
    if not (np.any(factors.b) and np.any(factors.c)):
        return (kern.conj() if adjoint else kern) * x[:, None]
    t = _transfer_from_kernel(model, factors, kern)
    _check_invertible(t, lams)
    eye = np.eye(factors.rank)
    w = model.weights
    if not adjoint:
        # R + R B (I - T)^{-1} C R
        rx = kern * x[:, None]
        crx = (factors.c.conj() * w) @ rx
        z = np.linalg.solve(eye[None] - t, crx.T[..., None])[..., 0]
        return rx + kern * (factors.b.T @ z.T)
    # R^* + R^* C^* (I - T)^{-H} B^* R^*
    kc = kern.conj()
    ry = kc * x[:, None]
    bry = (factors.b.conj() * w) @ ry
    dh = (eye[None] - t).conj().transpose(0, 2, 1)
    z = np.linalg.solve(dh, bry.T[..., None])[..., 0]
    return ry + kc * (factors.c.T @ z.T)


def perturbed_resolvent_apply(model, factors, lam, x) -> np.ndarray:
    """``R(lam, A+BC) x`` by the Sherman-Morrison-Woodbury formula."""
    return perturbed_resolvent_apply_many(model, factors, [complex(lam)], x)[:, 0]


def perturbed_resolvent_apply_adjoint(model, factors, lam, x) -> np.ndarray:
    return perturbed_resolvent_apply_many(model, factors, [complex(lam)], x, adjoint=True)[:, 0]


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    converged: bool

    @property
    def is_lower_bound(self) -> bool:
        return not self.converged


class _SMWOperator:
    """Precomputed pieces of ``R(lam, A+BC)`` at one ``lam``."""

    def __init__(self, model, factors, lam, allow_closure=False):
        kern = resolvent_kernel(model, [lam], allow_closure)[:, 0]
        t = _transfer_from_kernel(model, factors, kern[:, None])
        _check_invertible(t, np.array([lam]))
        self.k = kern
        self.w = model.weights
        self.b = factors.b
        self.c = factors.c
        d = np.eye(factors.rank) - t[0]
        self.lu = scipy.linalg.lu_factor(d)

    def apply(self, x):
        rx = self.k * x
        z = scipy.linalg.lu_solve(self.lu, (self.c.conj() * self.w) @ rx)
        return rx + self.k * (self.b.T @ z)

    def apply_adjoint(self, y):
        kc = self.k.conj()
        ry = kc * y
        z = scipy.linalg.lu_solve(self.lu, (self.b.conj() * self.w) @ ry, trans=2)
        return ry + kc * (self.c.T @ z)


def _power_iterate(op, model, v, tol, max_iter):
    est, prev = 0.0, -1.0
    for it in range(1, max_iter + 1):
        u = op.apply(v)
        est = model.norm(u)
        if est == 0.0:
            return 0.0, v, it, True
        v = op.apply_adjoint(u)
        nv = model.norm(v)
        if nv == 0.0:
            return est, v, it, True
        v = v / nv
        if abs(est - prev) <= tol * est:
            return est, v, it, True
        prev = est
    return est, v, max_iter, False


def _lanczos_norm(op, model, tol, max_iter):
    # Lanczos on R^* R in unitary coordinates u = sqrt(w) x, where it is Hermitian.
    # Full reorthogonalisation; stops once the top Ritz value settles, which
    # happens quickly even when the top singular values cluster.
    s = np.sqrt(model.weights)
    n = model.size
    m_max = min(n, max_iter)
    q = np.ones(n, dtype=complex) / np.sqrt(n)
    basis = np.empty((m_max, n), dtype=complex)
    alpha, beta = [], []
    prev, calm = -1.0, 0
    for j in range(m_max):
        basis[j] = q
        v = s * op.apply_adjoint(op.apply(q / s))
        a = float(np.vdot(q, v).real)
        v = v - a * q - (beta[-1] * basis[j - 1] if j else 0.0)
        v -= basis[: j + 1].T @ (basis[: j + 1].conj() @ v)
        alpha.append(a)
        top = scipy.linalg.eigh_tridiagonal(np.array(alpha), np.array(beta), eigvals_only=True, select="i", select_range=(j, j))[0]
        b = float(np.linalg.norm(v))
        calm = calm + 1 if abs(top - prev) <= tol * abs(top) else 0
        if calm >= 2 or b <= 1e-14 * max(abs(top), 1e-300):
            return float(np.sqrt(max(top, 0.0))), True
        prev = top
        beta.append(b)
        q = v / b
    return float(np.sqrt(max(prev, 0.0))), False


def perturbed_resolvent_norm(
    model, factors, lam, tol: float = 1e-10, max_iter: int = 500, allow_closure: bool = False, method: str = "lanczos"
) -> PowerIterationResult:
    """``||R(lam, A+BC)||`` as the root of the top eigenvalue of ``R^* R``.

    ``method="lanczos"`` runs a fully reorthogonalised Lanczos iteration
    (Krylov acceleration of the power method) from the all-ones vector.
    ``method="power"`` runs plain power iteration from the normalised
    all-ones vector, followed by one restart from a deterministic vector
    orthogonal to the found direction in case the start vector missed the
    top singular direction.  Either way the estimate is a lower bound, and a
    run that did not converge is flagged as such.
    """
    _check(model, factors)
    if not np.any(factors.b) or not np.any(factors.c):
        # B C = 0: the resolvent is the diagonal kernel, whose norm is exact
        kern = resolvent_kernel(model, [complex(lam)], allow_closure)[:, 0]
        return PowerIterationResult(float(np.max(np.abs(kern))), 0, True)
    op = _SMWOperator(model, factors, complex(lam), allow_closure)
    if model.size <= 2:
        method = "power"
    if method == "lanczos":
        est, ok = _lanczos_norm(op, model, tol, max_iter)
        return PowerIterationResult(est, 0, ok)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    v0 = np.ones(model.size, dtype=complex)
    v0 /= model.norm(v0)
    est, v, it, ok = _power_iterate(op, model, v0, tol, max_iter)
    alt = np.where(np.arange(model.size) % 2 == 0, 1.0, -1.0).astype(complex)
    alt -= model.inner(alt, v) * v
    if model.norm(alt) > 1e-8 * np.sqrt(model.weights.sum()):
        alt /= model.norm(alt)
        est2, _, it2, ok2 = _power_iterate(op, model, alt, tol, max_iter)
        it += it2
        if est2 > est:
            est, ok = est2, ok2
    return PowerIterationResult(float(est), it, bool(ok))


def dense_resolvent_oracle(model: SpectralModel, factors: PerturbationFactors, lam) -> np.ndarray:
    """Dense inverse of ``lam - A - BC`` in model coordinates (test oracle).

    ``(BC)[n, n'] = sum_j b_j[n] w_{n'} conj(c_j[n'])`` reproduces the weighted
    inner product.
    """
    _check(model, factors)
    n = model.size
    if n > DENSE_MAX_N:
        raise ModelError(f"dense oracle limited to N <= {DENSE_MAX_N}, got {n}")
    lam = complex(lam)
    bc = factors.b.T @ (factors.c.conj() * model.weights)
    mat = lam * np.eye(n) - np.diag(model.eigenvalues) - bc
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularPointError(f"lambda - A - BC is numerically singular at {lam} (condition ~ {cond:.3e})", lam)
    lu = scipy.linalg.lu_factor(mat)
    return scipy.linalg.lu_solve(lu, np.eye(n, dtype=complex))
