"""Normal generators represented by weighted samples of their spectrum.

A :class:`SpectralModel` stands for the multiplication operator
``(Af)(mu) = mu f(mu)`` on ``L^2`` of a discrete measure ``sum_j w_j delta_{lambda_j}``.
Vectors are arrays of function values at the samples and all norms and inner
products are weighted by ``w``.  Spectrum lost to truncation (for example the
accumulation point ``0`` of ``-1/k``) is carried in ``closure_points`` so that
distances to the spectrum stay exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelError, SingularPointError

__all__ = [
    "ModelKind",
    "SpectralModel",
    "PerturbationFactors",
    "DIAGONAL_RULES",
    "build_diagonal_model",
    "build_disk_model",
    "custom_model",
    "apply_resolvent",
    "resolvent_norm_exact",
    "spectral_distance",
    "spectral_sup",
    "model_to_dict",
    "model_from_dict",
    "factors_to_dict",
    "factors_from_dict",
]

# Points closer than this to the imaginary axis count as lying on it.
AXIS_TOL = 1e-12


class ModelKind(str, enum.Enum):
    DIAGONAL_SEQUENCE = "diagonal_sequence"
    DISK_MULTIPLICATION = "disk_multiplication"
    CUSTOM_NORMAL = "custom_normal"


@dataclass(frozen=True, eq=False)
class SpectralModel:
    kind: ModelKind
    eigenvalues: np.ndarray
    weights: np.ndarray
    closure_points: tuple = ()
    truncation_note: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=complex).ravel()
        w = np.array(self.weights, dtype=float).ravel()
        if lam.size < 1:
            raise ModelError("a spectral model needs at least one sample")
        if w.shape != lam.shape:
            raise ModelError(f"{w.size} weights for {lam.size} eigenvalues")
        if not np.all(np.isfinite(lam)):
            raise ModelError("eigenvalues must be finite")
        if not np.all((w > 0) & np.isfinite(w)):
            raise ModelError("weights must be strictly positive and finite")
        on_axis = np.flatnonzero(np.abs(lam.real) <= AXIS_TOL)
        if on_axis.size:
            raise ModelError(
                f"eigenvalue {lam[on_axis[0]]} lies on the imaginary axis; a strongly "
                "stable generator has no imaginary point spectrum"
            )
        lam.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "closure_points", tuple(complex(z) for z in self.closure_points))
        object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def certifiable(self) -> bool:
        """False if some sample lies in the open right half-plane."""
        return bool(np.all(self.eigenvalues.real <= 0))

    @property
    def axis_resonances(self) -> list[float]:
        """Imaginary parts of the closure points lying on the imaginary axis."""
        return sorted(z.imag for z in self.closure_points if abs(z.real) <= AXIS_TOL)

    @property
    def slowest_mode(self) -> complex:
        return complex(self.eigenvalues[np.argmax(self.eigenvalues.real)])

    def inner(self, x, y) -> complex:
        return complex(np.sum(self.weights * np.asarray(x) * np.conj(y)))

    def norm(self, x) -> float:
        x = np.asarray(x)
        return float(np.sqrt(np.sum(self.weights * np.abs(x) ** 2)))

    def basis_vector(self, j: int) -> np.ndarray:
        """Unit vector supported on sample ``j`` (0-based)."""
        e = np.zeros(self.size, dtype=complex)
        e[j] = 1.0 / np.sqrt(self.weights[j])
        return e


@dataclass(frozen=True, eq=False)
class PerturbationFactors:
    """Rank-``p`` factors with ``BC = sum_j <., c_j> b_j``.

    ``b`` and ``c`` are stored as ``(p, N)`` complex arrays.
    """

    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.array(self.b, dtype=complex))
        c = np.atleast_2d(np.array(self.c, dtype=complex))
        if b.shape != c.shape:
            raise ModelError(f"B has shape {b.shape} but C has shape {c.shape}")
        if b.shape[0] < 1:
            raise ModelError("rank must be at least 1")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ModelError("factor vectors must have finite entries")
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def rank(self) -> int:
        return self.b.shape[0]

    @property
    def size(self) -> int:
        return self.b.shape[1]

    @classmethod
    def zero(cls, n: int, rank: int = 1) -> "PerturbationFactors":
        z = np.zeros((rank, n), dtype=complex)
        return cls(z, z)

    def scaled(self, sb: complex = 1.0, sc: complex = 1.0) -> "PerturbationFactors":
        return PerturbationFactors(self.b * sb, self.c * sc)

    def check_against(self, model: SpectralModel) -> None:
        if self.size != model.size:
            raise ModelError(f"factors have length {self.size}, model has {model.size} samples")


# --- builders -----------------------------------------------------------------

# name -> (rule, closure points of the untruncated sequence, description)
DIAGONAL_RULES: dict[str, tuple[Callable[[np.ndarray], np.ndarray], tuple, str]] = {
    "inverse": (lambda k: -1.0 / k + 0j, (0j,), "lambda_k = -1/k"),
    "poly": (lambda k: -1.0 / k + 1j * k, (), "lambda_k = -1/k + i k"),
    "linear": (lambda k: -k + 0j, (), "lambda_k = -k"),
}


def _probe_closure_points(rule) -> tuple:
    # Accumulation point of lambda_k as k -> infinity, if finite.
    ks = np.array([1e6, 1e7, 1e8])
    vals = np.asarray(rule(ks), dtype=complex)
    if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > 1e6:
        return ()
    if abs(vals[2] - vals[1]) > abs(vals[1] - vals[0]) or abs(vals[2] - vals[1]) > 1e-5:
        return ()
    z = complex(round(vals[2].real, 6), round(vals[2].imag, 6))
    return (complex(z.real + 0.0, z.imag + 0.0),)


def build_diagonal_model(rule, n: int, closure_points=None) -> SpectralModel:
    """Diagonal operator ``A e_k = lambda_k e_k`` truncated to ``k = 1..n``.

    ``rule`` is either a key of :data:`DIAGONAL_RULES` or a vectorised callable
    ``k -> lambda_k``.  For callables without explicit ``closure_points`` the
    limit of the sequence is probed numerically.
    """
    if n < 1:
        raise ModelError("N must be at least 1")
    k = np.arange(1, n + 1, dtype=float)
    if isinstance(rule, str):
        if rule not in DIAGONAL_RULES:
            raise ModelError(f"unknown diagonal rule {rule!r}; known: {sorted(DIAGONAL_RULES)}")
        fn, limits, note = DIAGONAL_RULES[rule]
        params = {"rule": rule}
    else:
        fn, limits, note = rule, None, getattr(rule, "__doc__", None) or "custom rule"
        params = {"rule": "custom"}
    if closure_points is not None:
        limits = tuple(closure_points)
    elif limits is None:
        limits = _probe_closure_points(fn)
    lam = np.asarray(fn(k), dtype=complex)
    return SpectralModel(
        ModelKind.DIAGONAL_SEQUENCE,
        lam,
        np.ones(n),
        closure_points=limits,
        truncation_note=f"{note}, truncated to k=1..{n}",
        params={**params, "N": n},
    )


def build_disk_model(center: complex, radius: float, n_radial: int, n_angular: int) -> SpectralModel:
    """Multiplication by ``mu`` on ``L^2`` of a disk in the closed left half-plane.

    Nodes form a tensor polar grid (Gauss-Legendre in the radius, midpoint rule
    in the angle) with area weights; all nodes are interior, so the boundary
    point touching the imaginary axis is never a node.
    """
    center = complex(center)
    if radius <= 0:
        raise ModelError("radius must be positive")
    if n_radial < 2 or n_angular < 2:
        raise ModelError("node counts must be at least 2")
    if center.real + radius > AXIS_TOL * max(1.0, radius):
        raise ModelError(f"disk |mu - {center}| <= {radius} crosses into the open right half-plane")
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * wx * r
    theta = 2 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
    wt = 2 * np.pi / n_angular
    nodes = center + r[:, None] * np.exp(1j * theta[None, :])
    weights = wr[:, None] * wt * np.ones_like(theta)[None, :]
    touches = abs(center.real + radius) <= AXIS_TOL * max(1.0, radius)
    closure = (complex(0.0, center.imag),) if touches else ()
    return SpectralModel(
        ModelKind.DISK_MULTIPLICATION,
        nodes.ravel(),
        weights.ravel(),
        closure_points=closure,
        truncation_note=(
            f"disk |mu - ({center.real:g}{center.imag:+g}j)| <= {radius:g}, "
            f"{n_radial}x{n_angular} polar Gauss nodes"
        ),
        params={"center": center, "radius": float(radius), "n_radial": n_radial, "n_angular": n_angular},
    )


def custom_model(eigenvalues, weights=None, closure_points=()) -> SpectralModel:
    lam = np.asarray(eigenvalues, dtype=complex)
    w = np.ones(lam.size) if weights is None else weights
    return SpectralModel(
        ModelKind.CUSTOM_NORMAL,
        lam,
        w,
        closure_points=tuple(closure_points),
        truncation_note="user supplied samples",
        params={},
    )


# --- resolvent of the normal operator -----------------------------------------


def _disk_distance(lam: np.ndarray, center: complex, radius: float) -> np.ndarray:
    # (|lam - c|^2 - r^2) expanded so that a disk touching the axis keeps full
    # relative accuracy for lam close to the touching point.
    q = np.abs(lam) ** 2 - 2 * (lam * np.conj(center)).real + (abs(center) ** 2 - radius**2)
    return np.where(q > 0, q / (np.abs(lam - center) + radius), 0.0)


def spectral_distance(model: SpectralModel, lam) -> np.ndarray | float:
    """Distance from ``lam`` to the spectrum of the (untruncated) operator."""
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if model.kind is ModelKind.DISK_MULTIPLICATION:
        d = _disk_distance(lam, model.params["center"], model.params["radius"])
    else:
        pts = np.concatenate([model.eigenvalues, np.asarray(model.closure_points, dtype=complex)])
        d = np.empty(lam.size)
        for s in range(0, lam.size, 512):
            d[s : s + 512] = np.min(np.abs(lam[s : s + 512, None] - pts[None, :]), axis=1)
    return float(d[0]) if scalar else d


def _check_regular(model: SpectralModel, lam: complex, allow_closure: bool = False) -> None:
    hit = np.flatnonzero(model.eigenvalues == lam)
    if hit.size:
        raise SingularPointError(f"lambda = {lam} equals the sample lambda_{hit[0] + 1}", lam)
    if not allow_closure and lam in model.closure_points:
        raise SingularPointError(f"lambda = {lam} is a closure point of the spectrum", lam)


def apply_resolvent(model: SpectralModel, lam: complex, x) -> np.ndarray:
    """``R(lam, A) x`` for the truncated operator."""
    lam = complex(lam)
    _check_regular(model, lam)
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.size,):
        raise ModelError(f"vector of shape {x.shape} for a model with {model.size} samples")
    return x / (lam - model.eigenvalues)


def resolvent_norm_exact(model: SpectralModel, lam: complex) -> float:
    """``||R(lam, A)|| = 1 / dist(lam, sigma(A))`` (exact for normal operators)."""
    lam = complex(lam)
    _check_regular(model, lam)
    d = spectral_distance(model, lam)
    if d <= 0.0:
        raise SingularPointError(f"lambda = {lam} lies in the spectrum", lam)
    return 1.0 / d


def spectral_sup(model: SpectralModel, f: Callable[[np.ndarray], np.ndarray], n_boundary: int = 4096) -> float:
    """``sup |f(mu)|`` over the spectrum, i.e. the norm of ``f(A)``.

    For disk models ``f`` must be holomorphic on a neighbourhood of the disk;
    by the maximum modulus principle the sup is then attained on the boundary
    circle, which is sampled and refined around the best sample.  For sampled
    models the sup runs over samples and closure points.
    """
    if model.kind is ModelKind.DISK_MULTIPLICATION:
        c, r = model.params["center"], model.params["radius"]
        th = 2 * np.pi * np.arange(n_boundary) / n_boundary
        vals = np.abs(f(c + r * np.exp(1j * th)))
        i = int(np.argmax(vals))
        h = 2 * np.pi / n_boundary
        fine = th[i] + np.linspace(-h, h, 201)
        return float(max(vals[i], np.max(np.abs(f(c + r * np.exp(1j * fine))))))
    pts = np.concatenate([model.eigenvalues, np.asarray(model.closure_points, dtype=complex)])
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.abs(f(pts))
    return float(np.max(vals))


# --- (de)serialisation ----------------------------------------------------------


def _pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _unpair(p) -> complex:
    if isinstance(p, (int, float)):
        return complex(p)
    return complex(p[0], p[1])


def model_to_dict(model: SpectralModel) -> dict:
    if model.kind is ModelKind.DIAGONAL_SEQUENCE and model.params.get("rule") in DIAGONAL_RULES:
        return {"kind": model.kind.value, "params": {"rule": model.params["rule"]}, "N": model.size}
    if model.kind is ModelKind.DISK_MULTIPLICATION:
        p = model.params
        return {
            "kind": model.kind.value,
            "params": {"center": _pair(p["center"]), "radius": p["radius"]},
            "n_radial": p["n_radial"],
            "n_angular": p["n_angular"],
        }
    return {
        "kind": ModelKind.CUSTOM_NORMAL.value,
        "params": {
            "eigenvalues": [_pair(z) for z in model.eigenvalues],
            "weights": [float(w) for w in model.weights],
            "closure_points": [_pair(z) for z in model.closure_points],
        },
    }


def model_from_dict(data: dict) -> SpectralModel:
    try:
        kind = ModelKind(data["kind"])
    except (KeyError, ValueError) as exc:
        raise ModelError(f"model file needs a valid 'kind': {exc}") from None
    params = data.get("params", {})
    if kind is ModelKind.DIAGONAL_SEQUENCE:
        rule = params.get("rule")
        closure = params.get("closure_points")
        if closure is not None:
            closure = [_unpair(z) for z in closure]
        return build_diagonal_model(rule, int(data["N"]), closure_points=closure)
    if kind is ModelKind.DISK_MULTIPLICATION:
        return build_disk_model(
            _unpair(params["center"]),
            float(params["radius"]),
            int(data["n_radial"]),
            int(data["n_angular"]),
        )
    return custom_model(
        [_unpair(z) for z in params["eigenvalues"]],
        params.get("weights"),
        [_unpair(z) for z in params.get("closure_points", [])],
    )


def factors_to_dict(factors: PerturbationFactors) -> dict:
    return {
        "rank": factors.rank,
        "b": [[_pair(z) for z in col] for col in factors.b],
        "c": [[_pair(z) for z in col] for col in factors.c],
    }


def factors_from_dict(data: dict) -> PerturbationFactors:
    b = [[_unpair(z) for z in col] for col in data["b"]]
    c = [[_unpair(z) for z in col] for col in data["c"]]
    f = PerturbationFactors(np.array(b, dtype=complex), np.array(c, dtype=complex))
    if "rank" in data and int(data["rank"]) != f.rank:
        raise ModelError(f"declared rank {data['rank']} but {f.rank} columns given")
    return f
