"""Numerical checks of what a robustness certificate promises.

Everything here runs on the finite truncation of the model.  A truncation is
exponentially stable by construction, so strong stability is checked through
its frequency-domain ingredients (transfer norm, injectivity at resonances,
resolvent growth, uniform-boundedness integrals) plus a finite-horizon
trajectory policy, never through a ``t -> infinity`` limit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .certificates import (
    RobustnessCertificate,
    alpha_ladder_ratios,
    check_budget,
    injectivity_exponents,
)
from .errors import SingularPointError, SpectrumError, StabcertError
from .fractional import Side, graph_norm, operator_norm
from .models import PerturbationFactors, SpectralModel, spectral_distance
from .quadrature import integrate_panels, real_line_panels
from .resolvent import (
    map_chunks,
    perturbed_resolvent_apply_many,
    perturbed_resolvent_norm,
    resolvent_kernel,
    transfer_norms,
)

log = logging.getLogger(__name__)

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "RegionGrid",
    "ScanResult",
    "scan_transfer_norm",
    "check_injectivity_at_resonances",
    "check_resolvent_growth",
    "IntegralResult",
    "uniform_boundedness_functional",
    "rbcr_integral",
    "Trajectory",
    "simulate_semigroup",
    "DecayFit",
    "fit_polynomial_decay",
    "generator_matrix",
    "to_jsonable",
    "run_verification",
]


@dataclass
class CheckRecord:
    name: str
    measured: float
    threshold: float
    passed: bool
    tolerance: float = 0.0
    grid: str = ""
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured {self.measured:.6g} vs threshold {self.threshold:.6g}"


@dataclass
class VerificationReport:
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.records) and all(r.passed for r in self.records)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "records": [
                {
                    "name": r.name,
                    "measured": _json_float(r.measured),
                    "threshold": _json_float(r.threshold),
                    "passed": r.passed,
                    "tolerance": r.tolerance,
                    "grid": r.grid,
                    "details": to_jsonable(r.details),
                }
                for r in self.records
            ],
            "fits": to_jsonable(self.fits),
        }


def _json_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# --- transfer-norm scan ---------------------------------------------------------


@dataclass(frozen=True)
class RegionGrid:
    """Polar grids on the ``Omega_k`` plus a coarse grid on the rest of a window."""

    r_min: float = 1e-8
    n_radii: int = 60
    n_angles: int = 41
    x_max: float = 10.0
    y_half: float = 10.0
    n_x: int = 41
    n_y: int = 81

    def describe(self) -> str:
        return (
            f"Omega_k: {self.n_radii} log radii [{self.r_min:g}, eps_A] x {self.n_angles} angles; "
            f"window [0,{self.x_max:g}]x[-{self.y_half:g},{self.y_half:g}] {self.n_x}x{self.n_y}"
        )


def region_points(resonances, eps: float, grid: RegionGrid) -> tuple[np.ndarray, np.ndarray]:
    """``(omega_points, off_points)`` covering the closed right half-plane window."""
    radii = np.logspace(math.log10(grid.r_min), math.log10(eps), grid.n_radii) if resonances else np.array([])
    th = np.linspace(-np.pi / 2, np.pi / 2, grid.n_angles)
    near = [1j * w + (radii[:, None] * np.exp(1j * th)[None, :]).ravel() for w in resonances]
    near = np.concatenate(near) if near else np.array([], dtype=complex)
    cy = float(np.mean(resonances)) if resonances else 0.0
    xs = np.linspace(0.0, grid.x_max, grid.n_x)
    ys = cy + np.linspace(-grid.y_half, grid.y_half, grid.n_y)
    off = (xs[:, None] + 1j * ys[None, :]).ravel()
    for w in resonances:
        off = off[np.abs(off - 1j * w) > eps]
    return near, off


@dataclass(frozen=True)
class ScanResult:
    max_norm: float
    argmax: complex
    max_near: float
    max_off: float
    resonance_limit: float
    n_points: int
    skipped: int


def _drop_singular(model, lams):
    bad = np.isin(lams, model.eigenvalues)
    if model.closure_points:
        bad |= np.isin(lams, np.asarray(model.closure_points, dtype=complex))
    for lam in lams[bad]:
        log.info("skipping singular grid point %s", lam)
    return lams[~bad], int(bad.sum())


def scan_transfer_norm(model, factors, certificate: RobustnessCertificate, grid: RegionGrid = RegionGrid(), threads: int = 1) -> ScanResult:
    """Max of ``||C R(lam, A) B||`` over the ``Omega_k`` grids and the off-resonance window.

    The value at ``lam = i w_k`` itself is the ``r -> 0`` limit of the
    truncated transfer function (no sample sits there) and is included.
    """
    profile = certificate.profile
    near, off = region_points(profile.resonances, profile.eps_a, grid)
    near, s1 = _drop_singular(model, near)
    off, s2 = _drop_singular(model, off)
    tn_near = transfer_norms(model, factors, near, threads=threads) if near.size else np.zeros(0)
    tn_off = transfer_norms(model, factors, off, threads=threads) if off.size else np.zeros(0)
    limit = 0.0
    for w in profile.resonances:
        lam = 1j * w
        if np.any(model.eigenvalues == lam):
            continue
        limit = max(limit, float(transfer_norms(model, factors, [lam], allow_closure=True)[0]))
    pts = np.concatenate([near, off])
    vals = np.concatenate([tn_near, tn_off])
    i = int(np.argmax(vals)) if vals.size else 0
    best = float(vals[i]) if vals.size else 0.0
    arg = complex(pts[i]) if vals.size else 0j
    if limit > best:
        best, arg = limit, 1j * profile.resonances[0]
    return ScanResult(
        best,
        arg,
        float(tn_near.max()) if tn_near.size else 0.0,
        float(tn_off.max()) if tn_off.size else 0.0,
        limit,
        int(pts.size),
        s1 + s2,
    )


# --- injectivity at resonances -----------------------------------------------------


def check_injectivity_at_resonances(model, factors, beta: float, gamma: float, alpha: float, resonances) -> dict:
    """``||(i w_k - A)^{-b1} B|| * ||(-i w_k - A^*)^{-g1} C^*||`` per resonance, with ``b1 + g1 = 1``."""
    b1, g1 = injectivity_exponents(alpha, beta, gamma)
    out = {}
    for w in resonances:
        prod = graph_norm(model, factors, w, b1, Side.B_SIDE) * graph_norm(model, factors, w, g1, Side.C_SIDE)
        out[w] = {"beta1": b1, "gamma1": g1, "product": prod, "passed": prod < 1.0}
    return out


# --- resolvent growth ------------------------------------------------------------------


def _rb_cr_norms(model, factors, lams) -> tuple[np.ndarray, np.ndarray]:
    """``||R(lam) B||`` and ``||C R(lam)||`` for each ``lam`` (top eigenvalues of Gram matrices)."""
    kern = resolvent_kernel(model, lams)
    k2 = np.abs(kern) ** 2 * model.weights[:, None]
    p = factors.rank

    def top(cols):
        g = (cols[:, None, :] * cols.conj()[None, :, :]).reshape(p * p, -1) @ k2
        g = g.reshape(p, p, -1).transpose(2, 1, 0)
        g = 0.5 * (g + g.conj().transpose(0, 2, 1))
        return np.sqrt(np.maximum(np.linalg.eigvalsh(g)[:, -1], 0.0))

    return top(factors.b), top(factors.c)


def check_resolvent_growth(
    model,
    factors,
    certificate: RobustnessCertificate,
    n_radii: int = 41,
    r_min: float = 1e-8,
    n_off: int = 201,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> dict:
    """Grid sups of ``|w - w_k|^alpha ||R(i w, A+BC)||`` near each resonance and of ``||R||`` elsewhere.

    ``M_k`` is measured as the grid sup of ``|w - w_k|^alpha ||R B|| ||C R||``
    (with the profile headroom) and the bounds ``M_A + M_D M_k`` and
    ``M_A + M_D ||B|| ||C|| M_A^2`` with ``M_D = 1 / (1 - c)`` are reported.
    """
    prof = certificate.profile
    md = certificate.neumann_bound
    alpha = prof.alpha
    out = {"near": {}, "M_D": md}
    for w in prof.resonances:
        radii = np.logspace(math.log10(r_min), math.log10(prof.eps_a), n_radii)
        oms = np.concatenate([w - radii[::-1], w + radii])
        dist = np.abs(oms - w)
        norms, lower = [], False
        for om in oms:
            res = perturbed_resolvent_norm(model, factors, 1j * om, tol=tol, max_iter=max_iter)
            norms.append(res.value)
            lower |= res.is_lower_bound
        norms = np.asarray(norms)
        rb, cr = _rb_cr_norms(model, factors, 1j * oms)
        m_k = prof.scan.headroom * float(np.max(dist**alpha * rb * cr))
        g = dist**alpha * norms
        detector = alpha_ladder_ratios(model, w, prof.eps_a, [alpha - 0.5], prof.scan)[alpha - 0.5]
        out["near"][w] = {
            "sup": float(np.max(g)),
            "M_k": m_k,
            "bound": prof.m_a + md * m_k,
            "lower_bound_only": bool(lower),
            "detector_ratio_alpha_minus_half": detector,
            "table": list(zip(oms.tolist(), g.tolist())),
        }
    half = prof.scan.window + (max(abs(w) for w in prof.resonances) if prof.resonances else 0.0)
    oms = np.linspace(-half, half, n_off)
    for w in prof.resonances:
        oms = oms[np.abs(oms - w) > prof.eps_a]
    oms = oms[~np.isin(1j * oms, model.eigenvalues)]
    vals = [perturbed_resolvent_norm(model, factors, 1j * om, tol=tol, max_iter=max_iter).value for om in oms]
    nb, nc = operator_norm(model, factors.b), operator_norm(model, factors.c)
    out["off"] = {
        "sup": float(max(vals)) if vals else 0.0,
        "bound": prof.m_a + md * nb * nc * prof.m_a**2,
    }
    return out


# --- uniform boundedness integrals ---------------------------------------------------


@dataclass(frozen=True)
class IntegralResult:
    xi: np.ndarray
    values: np.ndarray
    sup: float
    argmax: float
    converged: bool
    stable: bool
    refined_sup: float

    @property
    def verdict(self) -> str:
        if not self.converged:
            return "inconclusive"
        return "finite" if self.stable and np.isfinite(self.sup) else "unstable"


def _eta_extent(f, centers, scale, peak, rel=1e-14, cap=1e14):
    far = np.max(np.abs(centers)) + scale
    h = scale
    while h < cap:
        pts = np.array([far + h, -far - h])
        if np.all(f(pts) < rel * peak):
            return far + h
        h *= 2.0
    return far + cap


def _xi_integral(f_of, centers, xi, base_scale, rtol):
    f = f_of(xi)
    scale = xi + base_scale
    probe = np.concatenate([centers, centers + 0.5 * scale, centers - 0.5 * scale])
    peak = float(np.max(f(probe)))
    if peak == 0.0:
        return 0.0, True
    ext = _eta_extent(f, centers, scale, peak)
    res = integrate_panels(f, real_line_panels(centers, scale, ext), rtol=rtol)
    return xi * res.value, res.converged


def _refine_log_grid(xi: np.ndarray) -> np.ndarray:
    mids = np.sqrt(xi[:-1] * xi[1:])
    return np.sort(np.concatenate([xi, mids]))


def _local_max(f_of, centers, base_scale, xi, vals, rtol):
    """Bounded maximisation in ``log xi`` between the neighbours of the grid argmax."""
    i = int(np.argmax(vals))
    if i in (0, xi.size - 1):
        return float(vals[i]), float(xi[i]), True
    ok = [True]

    def neg(t):
        v, c = _xi_integral(f_of, centers, math.exp(t), base_scale, rtol)
        ok[0] &= c
        return -v

    res = scipy.optimize.minimize_scalar(
        neg, bounds=(math.log(xi[i - 1]), math.log(xi[i + 1])), method="bounded", options={"xatol": 1e-3}
    )
    if -res.fun > vals[i]:
        return float(-res.fun), math.exp(res.x), ok[0]
    return float(vals[i]), float(xi[i]), ok[0]


def _sup_over_xi(f_of, centers, base_scale, xi, rtol, refine):
    vals, ok = [], True
    for x in xi:
        v, c = _xi_integral(f_of, centers, float(x), base_scale, rtol)
        vals.append(v)
        ok &= c
    vals = np.asarray(vals)
    sup, arg, c = _local_max(f_of, centers, base_scale, xi, vals, rtol)
    ok &= c
    refined_sup, stable = sup, True
    if refine:
        fine = _refine_log_grid(xi)
        known = dict(zip(xi.tolist(), vals.tolist()))
        fvals = []
        for x in fine:
            if x in known:
                fvals.append(known[x])
                continue
            v, c = _xi_integral(f_of, centers, float(x), base_scale, rtol)
            fvals.append(v)
            ok &= c
        refined_sup, _, c = _local_max(f_of, centers, base_scale, fine, np.asarray(fvals), rtol)
        ok &= c
        stable = abs(refined_sup - sup) <= 0.01 * max(abs(refined_sup), 1e-300)
    return IntegralResult(np.asarray(xi), vals, sup, arg, ok, stable, refined_sup)


def _centers(model, extra=()):
    im = np.unique(np.round(model.eigenvalues.imag, 12))
    if im.size > 2000:
        im = np.quantile(im, np.linspace(0, 1, 2000))
    return np.unique(np.concatenate([im, np.asarray(extra, dtype=float), [0.0]]))


def _base_scale(model):
    return float(max(np.min(np.abs(model.eigenvalues.real)), 1e-12))


def uniform_boundedness_functional(
    model,
    factors,
    x,
    xi=None,
    adjoint: bool = False,
    rtol: float = 1e-8,
    refine: bool = True,
) -> IntegralResult:
    """``sup_xi xi * int ||R(xi + i eta, A+BC) x||^2 d eta`` (or with the adjoint resolvent).

    The eta integral is adaptive with tails cut where the integrand drops
    below ``1e-14`` of its peak.  Refinement stability compares against a
    ``xi`` grid of twice the density.
    """
    xi = np.logspace(-3, 3, 25) if xi is None else np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=complex)
    w = model.weights

    def f_of(s):
        def f(eta):
            lams = s + 1j * np.asarray(eta)

            def chunk(ls):
                try:
                    y = perturbed_resolvent_apply_many(model, factors, ls, x, adjoint=adjoint)
                except (SingularPointError, SpectrumError):
                    return np.full(ls.size, np.inf)
                return (w[:, None] * np.abs(y) ** 2).sum(axis=0)

            return map_chunks(chunk, lams, chunk=512)

        return f

    centers = _centers(model)
    return _sup_over_xi(f_of, centers, _base_scale(model), xi, rtol, refine)


def rbcr_integral(model, factors, xi=None, rtol: float = 1e-8, refine: bool = True) -> IntegralResult:
    """``sup_xi xi * int ||R(xi + i eta) B||^2 ||C R(xi + i eta)||^2 d eta`` for the unperturbed resolvent."""
    xi = np.logspace(-3, 3, 25) if xi is None else np.asarray(xi, dtype=float)

    def f_of(s):
        def f(eta):
            lams = s + 1j * np.asarray(eta)

            def chunk(ls):
                rb, cr = _rb_cr_norms(model, factors, ls)
                return (rb * cr) ** 2

            return map_chunks(chunk, lams, chunk=512)

        return f

    return _sup_over_xi(f_of, _centers(model), _base_scale(model), xi, rtol, refine)


# --- time domain ----------------------------------------------------------------------


def generator_matrix(model: SpectralModel, factors: PerturbationFactors | None = None) -> np.ndarray:
    """Dense ``A + BC`` in unitary coordinates ``u = sqrt(w) x`` (Euclidean norm = weighted norm)."""
    mat = np.diag(model.eigenvalues.astype(complex))
    if factors is not None:
        s = np.sqrt(model.weights)
        mat = mat + (factors.b * s).T @ (factors.c * s).conj()
    return mat


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    norms: np.ndarray
    growth: bool

    @property
    def sup(self) -> float:
        return float(np.max(self.norms))


def simulate_semigroup(model, factors, x, times, method: str = "expm", max_n: int = 2000) -> Trajectory:
    """``||T_BC(t) x||`` on the truncation at the given times.

    ``method="expm"`` propagates with Pade scaling-and-squaring exponentials
    of the time increments; ``method="eig"`` uses an eigendecomposition.
    """
    if model.size > max_n:
        raise ValueError(f"dense simulation limited to N <= {max_n}")
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("time grid must be non-decreasing and non-negative")
    mat = generator_matrix(model, factors)
    u = np.sqrt(model.weights) * np.asarray(x, dtype=complex)
    norms = np.empty(times.size)
    growth = False
    if method == "eig":
        ev, vec = np.linalg.eig(mat)
        coef = np.linalg.solve(vec, u)
        for i, t in enumerate(times):
            with np.errstate(over="ignore", invalid="ignore"):
                norms[i] = np.linalg.norm(vec @ (np.exp(t * ev) * coef))
    elif method == "expm":
        cache = {}
        cur, t_prev = u, 0.0
        for i, t in enumerate(times):
            dt = t - t_prev
            if dt > 0:
                key = round(dt, 12)
                if key not in cache:
                    with np.errstate(over="ignore", invalid="ignore"):
                        cache[key] = scipy.linalg.expm(dt * mat)
                with np.errstate(over="ignore", invalid="ignore"):
                    cur = cache[key] @ cur
            t_prev = t
            norms[i] = np.linalg.norm(cur)
    else:
        raise ValueError(f"unknown method {method!r}")
    bad = ~np.isfinite(norms) | (norms > 1e300)
    if np.any(bad):
        growth = True
        norms[bad] = np.inf
    elif norms[-1] > 1e6 * max(norms[0], 1e-300):
        growth = True
    return Trajectory(times, norms, growth)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    early_slope: float
    late_slope: float
    times: np.ndarray
    norms: np.ndarray
    verdict: str


def fit_polynomial_decay(model, factors=None, times=None, monotone_tol: float = 0.01) -> DecayFit:
    """Least-squares slope of ``log ||T(t) (-(A+BC))^{-1}||`` against ``log t``.

    The default window ``[N/40, N/4]`` keeps the envelope away from the
    exponential tail caused by truncation.
    """
    if model.axis_resonances:
        raise ValueError("polynomial stability needs sigma(A) on the imaginary axis to be empty")
    if times is None:
        times = np.logspace(math.log10(model.size / 40), math.log10(model.size / 4), 24)
    times = np.asarray(times, dtype=float)
    mat = generator_matrix(model, factors)
    inv = np.linalg.solve(-mat, np.eye(model.size))
    norms = np.empty(times.size)
    prev_t, cur = 0.0, inv
    for i, t in enumerate(times):
        cur = scipy.linalg.expm((t - prev_t) * mat) @ cur
        prev_t = t
        norms[i] = np.linalg.norm(cur, 2)
    lt, ln = np.log(times), np.log(norms)
    slope = float(np.polyfit(lt, ln, 1)[0])
    h = times.size // 2
    early = float(np.polyfit(lt[:h], ln[:h], 1)[0])
    late = float(np.polyfit(lt[h:], ln[h:], 1)[0])
    rises = np.any(norms[1:] > norms[:-1] * (1 + monotone_tol))
    if rises:
        verdict = "inconclusive"
    elif late < 1.5 * early and late < -2.0:
        verdict = "faster than polynomial"
    else:
        verdict = "polynomial"
    return DecayFit(slope, early, late, times, norms, verdict)


# --- orchestration ----------------------------------------------------------------------


def _safe(report, name, fn):
    try:
        return fn()
    except StabcertError as exc:
        report.add(CheckRecord(name, math.nan, math.nan, False, details={"error": str(exc)}))
        return None


def run_verification(
    model,
    factors,
    certificate: RobustnessCertificate,
    x=None,
    grid: RegionGrid = RegionGrid(),
    xi=None,
    n_times: int = 101,
    t_max: float | None = None,
    bound_factor: float = 2.0,
    decay_target: float = 0.2,
    threads: int = 1,
) -> VerificationReport:
    """Run every check against ``certificate`` and collect a report.

    Finite-horizon trajectory policy: ``sup ||T(t) x|| <= bound_factor ||x||``
    and ``||T(t_max) x|| < decay_target ||x||`` with ``t_max`` five times the
    decay time of the slowest retained mode.
    """
    report = VerificationReport()
    prof = certificate.profile
    c = certificate.c

    budget = check_budget(model, factors, certificate)
    report.add(
        CheckRecord(
            "budget",
            budget.largest,
            certificate.delta,
            budget.passed,
            details={
                "norm_B": budget.norm_b,
                "norm_C": budget.norm_c,
                "graph_B": budget.graph_b,
                "graph_C": budget.graph_c,
            },
        )
    )

    scan = _safe(report, "transfer_norm_scan", lambda: scan_transfer_norm(model, factors, certificate, grid, threads))
    if scan is not None:
        report.add(
            CheckRecord(
                "transfer_norm_scan",
                scan.max_norm,
                c,
                scan.max_norm <= c,
                grid=grid.describe(),
                details={
                    "argmax": scan.argmax,
                    "max_near": scan.max_near,
                    "max_off": scan.max_off,
                    "resonance_limit": scan.resonance_limit,
                    "points": scan.n_points,
                    "skipped": scan.skipped,
                },
            )
        )

    if prof.resonances:
        inj = _safe(
            report,
            "injectivity",
            lambda: check_injectivity_at_resonances(model, factors, certificate.beta, certificate.gamma, prof.alpha, prof.resonances),
        )
        if inj is not None:
            worst = max(v["product"] for v in inj.values())
            report.add(CheckRecord("injectivity", worst, 1.0, worst < 1.0, details=inj))

        growth = _safe(report, "resolvent_growth", lambda: check_resolvent_growth(model, factors, certificate))
        if growth is not None:
            for w, g in growth["near"].items():
                report.tables[f"growth_near_{w:g}"] = g.pop("table")
                ok = np.isfinite(g["sup"]) and g["sup"] <= g["bound"]
                report.add(CheckRecord(f"resolvent_growth[{w:g}]", g["sup"], g["bound"], bool(ok), details=g))
            off = growth["off"]
            report.add(CheckRecord("resolvent_off_resonance", off["sup"], off["bound"], off["sup"] <= off["bound"]))

    if x is None:
        x = model.basis_vector(0)
    x = np.asarray(x, dtype=complex)
    xn = model.norm(x)

    md = certificate.neumann_bound
    zero = PerturbationFactors.zero(model.size, factors.rank)
    rbcr = _safe(report, "rbcr_integral", lambda: rbcr_integral(model, factors, xi))
    for adj in (False, True):
        name = "uniform_boundedness" + ("_adjoint" if adj else "")
        ub = _safe(report, name, lambda: uniform_boundedness_functional(model, factors, x, xi, adjoint=adj))
        ub0 = _safe(report, name + "_unperturbed", lambda: uniform_boundedness_functional(model, zero, x, xi, adjoint=adj, refine=False))
        if ub is None or ub0 is None or rbcr is None:
            continue
        bound = 2 * ub0.sup + 2 * md**2 * xn**2 * rbcr.refined_sup
        ok = ub.verdict == "finite" and ub.refined_sup <= bound
        report.add(
            CheckRecord(
                name,
                ub.refined_sup,
                bound,
                bool(ok),
                tolerance=0.01,
                grid=f"xi in [{ub.xi[0]:g}, {ub.xi[-1]:g}], {ub.xi.size} points (+ refinement)",
                details={"verdict": ub.verdict, "argmax_xi": ub.argmax, "unperturbed_sup": ub0.sup},
            )
        )
        report.tables[name] = list(zip(ub.xi.tolist(), ub.values.tolist()))
    if rbcr is not None:
        report.add(
            CheckRecord(
                "rbcr_integral",
                rbcr.refined_sup,
                math.inf,
                rbcr.verdict == "finite",
                tolerance=0.01,
                details={"verdict": rbcr.verdict, "argmax_xi": rbcr.argmax},
            )
        )

    if model.size <= 2000:
        slow = abs(model.slowest_mode.real)
        horizon = t_max if t_max is not None else 5.0 / slow
        times = np.linspace(0.0, horizon, n_times)
        traj = simulate_semigroup(model, factors, x, times)
        report.tables["trajectory"] = list(zip(times.tolist(), traj.norms.tolist()))
        report.add(
            CheckRecord(
                "trajectory_uniform_bound",
                traj.sup,
                bound_factor * xn,
                (not traj.growth) and traj.sup <= bound_factor * xn,
                details={"growth": traj.growth, "policy": f"sup_t ||T(t)x|| <= {bound_factor:g} ||x||"},
            )
        )
        report.add(
            CheckRecord(
                "trajectory_decay",
                float(traj.norms[-1]),
                decay_target * xn,
                bool(traj.norms[-1] < decay_target * xn),
                details={"t_end": horizon, "slowest_mode": model.slowest_mode, "truncation": model.truncation_note},
            )
        )
    return report
