"""Perturbation budgets for strong stability of perturbed normal generators.

The chain runs

    resolvent profile (alpha, eps_A, M_A) -> M0 -> M1, M2 -> delta1, delta2
        -> delta = min(delta1, delta2, sqrt(c / M2))

with every grid-estimated constant inflated by a headroom factor.  Moment
inequality constants are 1 for normal generators; non-normal input is refused.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import UncertifiableError
from .fractional import Side, graph_norm, operator_norm
from .models import ModelKind, SpectralModel, resolvent_norm_exact, spectral_distance, spectral_sup

__all__ = [
    "ProfileScan",
    "ResolventProfile",
    "RobustnessCertificate",
    "BudgetCheck",
    "estimate_resolvent_profile",
    "alpha_ladder_ratios",
    "bound_M0",
    "bound_M1",
    "bound_M2",
    "transfer_bound_chain",
    "bound_delta1",
    "bound_delta2",
    "compose_certificate",
    "check_budget",
    "offresonance_resolvent_sup",
    "direct_m1_sup",
    "certificate_to_dict",
    "estimate_growth_at_infinity",
    "certificate_from_dict",
]

_EXP_TOL = 1e-12


@dataclass(frozen=True)
class ProfileScan:
    """Grid used to estimate the resolvent profile on the imaginary axis."""

    r_min: float = 1e-8
    n_radii: int = 161
    window: float = 10.0
    n_window: int = 2001
    ladder_step: float = 0.25
    alpha_max: float = 6.0
    margin: float = 10.0
    headroom: float = 1.1


@dataclass(frozen=True)
class ResolventProfile:
    resonances: tuple
    alpha: float
    eps_a: float
    m_a: float
    d_a: float
    m: float = 1.0
    ladder: dict = field(default_factory=dict)
    confirmed: bool = True
    scan: ProfileScan = field(default_factory=ProfileScan)


def _radii(scan: ProfileScan, eps: float) -> np.ndarray:
    return np.logspace(math.log10(scan.r_min), math.log10(eps), scan.n_radii)


def _norms_near(model, omega_k, radii):
    up = np.array([resolvent_norm_exact(model, 1j * (omega_k + r)) for r in radii])
    down = np.array([resolvent_norm_exact(model, 1j * (omega_k - r)) for r in radii])
    return up, down


def alpha_ladder_ratios(model: SpectralModel, omega_k: float, eps: float, alphas, scan: ProfileScan = ProfileScan()) -> dict:
    """Blow-up ratio ``max_r g(r) / g(eps)`` of ``g(r) = r^alpha ||R(i(omega_k +- r), A)||``."""
    radii = _radii(scan, eps)
    up, down = _norms_near(model, omega_k, radii)
    out = {}
    for a in alphas:
        gu, gd = radii**a * up, radii**a * down
        ref = max(gu[-1], gd[-1])
        out[float(a)] = float(max(gu.max(), gd.max()) / ref)
    return out


def estimate_resolvent_profile(model: SpectralModel, scan: ProfileScan = ProfileScan()) -> ResolventProfile:
    """Resonances, growth exponent and constants of the resolvent on the imaginary axis.

    Resonances are the closure points on the axis.  ``alpha`` is the smallest
    rung of the ladder ``1, 1 + step, ...`` for which ``r^alpha ||R||`` never
    exceeds ``margin`` times its value at ``r = eps_A``.
    """
    if not model.certifiable:
        raise UncertifiableError("model has spectrum in the open right half-plane; no semigroup bound M")
    res = tuple(model.axis_resonances)
    if len(res) > 1:
        d_a = float(min(np.diff(res)))
    else:
        d_a = math.inf
    # The bounds need eps_A <= 1 as well as eps_A <= d_A / 3.
    eps = float(min(1.0, d_a / 3.0))
    alpha = 1.0
    ladder = {}
    confirmed = True
    if res:
        rungs = np.arange(1.0, scan.alpha_max + _EXP_TOL, scan.ladder_step)
        worst = {float(a): 0.0 for a in rungs}
        for w in res:
            ratios = alpha_ladder_ratios(model, w, eps, rungs, scan)
            for a, v in ratios.items():
                worst[a] = max(worst[a], v)
            up, down = _norms_near(model, w, np.array([scan.r_min, eps]))
            confirmed &= bool(up[0] >= up[1] and down[0] >= down[1])
        ladder = worst
        ok = [a for a in rungs if worst[float(a)] <= scan.margin]
        if not ok:
            raise UncertifiableError(
                f"profile not polynomial: no exponent up to {scan.alpha_max} keeps r^alpha ||R(i w)|| bounded"
            )
        alpha = float(ok[0])
    sup_near = 0.0
    for w in res:
        radii = _radii(scan, eps)
        up, down = _norms_near(model, w, radii)
        sup_near = max(sup_near, float(np.max(radii**alpha * np.maximum(up, down))))
    sup_off = _axis_sup_off(model, res, eps, scan)
    m_a = scan.headroom * max(sup_near, sup_off)
    return ResolventProfile(res, alpha, eps, m_a, d_a, 1.0, ladder, confirmed, scan)


def _axis_sup_off(model, res, eps, scan) -> float:
    half = scan.window + (max(abs(w) for w in res) if res else 0.0)
    omegas = np.linspace(-half, half, scan.n_window)
    extra = [w + s * eps * (1 + 1e-9) for w in res for s in (-1, 1)]
    omegas = np.concatenate([omegas, extra])
    for w in res:
        omegas = omegas[np.abs(omegas - w) > eps]
    d = spectral_distance(model, 1j * omegas)
    if np.any(d <= 0):
        raise UncertifiableError("spectrum meets the imaginary axis outside the declared resonances")
    return float(np.max(1.0 / d))


def estimate_growth_at_infinity(model: SpectralModel, step: float = 0.25) -> tuple[float, float]:
    """Exponent ``alpha`` with ``||R(i w, A)|| ~ |w|^alpha`` as ``|w| -> infinity``.

    Block maxima of ``||R(i w)||`` over dyadic ranges of ``|w|`` (evaluated at
    the imaginary parts of the samples) are fitted on log-log axes, using the
    middle of the truncation to stay clear of its edges.  Returns the fitted
    slope and the nearest ladder rung above it.
    """
    om = np.abs(model.eigenvalues.imag)
    lo, hi = max(1.0, float(np.quantile(om, 0.05))), float(np.quantile(om, 0.5))
    if not hi > 4 * lo:
        raise UncertifiableError("spectrum does not extend far enough along the imaginary axis")
    edges = lo * 2.0 ** np.arange(0, math.floor(math.log2(hi / lo)) + 1)
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = model.eigenvalues.imag[(om >= a) & (om < b)]
        if sel.size:
            xs.append(math.sqrt(a * b))
            ys.append(float(np.max(1.0 / spectral_distance(model, 1j * sel))))
    slope = float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
    rung = max(step, step * math.ceil(slope / step - 0.2))
    return slope, rung


# --- constants ------------------------------------------------------------------


def bound_M0(profile: ResolventProfile) -> float:
    """Bound for ``|lam - i w_k|^alpha ||R(lam, A)||`` on the regions ``Omega_k``."""
    a, m, ma = profile.alpha, profile.m, profile.m_a
    return max(ma, m, 2 ** (a / 2) * (m + ma * (1 + m)), 1.0)


def bound_M1(profile: ResolventProfile, m0: float, moment_constant: float = 1.0) -> float:
    """Bound for ``|lam_k|^n ||(i w_k - A)^{a~} R(lam, A)||`` with ``alpha = n + a~``."""
    frac = profile.alpha - math.floor(profile.alpha + _EXP_TOL)
    if frac <= _EXP_TOL:
        return m0
    return 2 ** (frac + 1) * moment_constant * m0


def bound_M2(profile: ResolventProfile, m0: float) -> float:
    """Bound for ``||R(lam, A)||`` on the closed right half-plane outside the ``Omega_k``."""
    if not profile.resonances:
        return max(profile.m_a * (1 + profile.m), 1.0)
    return max(max(profile.m_a, m0 / profile.eps_a**profile.alpha) * (1 + profile.m), 1.0)


def _split(x: float) -> tuple[int, float]:
    n = math.floor(x + _EXP_TOL)
    frac = x - n
    return n, (0.0 if abs(frac) <= _EXP_TOL else frac)


def transfer_bound_chain(
    delta: float,
    alpha: float,
    beta: float,
    gamma: float,
    m1: float,
    tails: bool = True,
    moment_constant: float = 1.0,
) -> float:
    """Upper bound of ``sup ||C R(lam, A) B||`` over the ``Omega_k`` when all budget norms are ``< delta``.

    With ``tails`` the bound telescopes ``(i w_k - A) R = I - lam_k R`` through
    the integer parts ``m, n`` of ``beta, gamma``::

        M1 d^2 [+ |B_{m+b1}||C_{n+g1}| when b~ + g~ > 1]
            + sum_{l<=n} |B_m||C_l| + sum_{l<=m} |B_l||C|

    and bounds each intermediate norm by interpolation between the endpoints
    (``K d`` with ``K = moment_constant``, ``d`` at the endpoints).  Without
    ``tails`` ``M1`` is taken to bound ``||(i w_k - A)^alpha R(lam, A)||``
    directly and the bound is ``M1 d^2``.
    """
    if abs(beta + gamma - alpha) > 1e-9:
        raise ValueError(f"need beta + gamma = alpha, got {beta} + {gamma} != {alpha}")
    if beta < 0 or gamma < 0:
        raise ValueError("beta and gamma must be non-negative")
    d = float(delta)
    if not tails:
        return m1 * d * d
    k = moment_constant

    def nb(r):
        return d if r <= _EXP_TOL or abs(r - beta) <= _EXP_TOL else k * d

    def nc(r):
        return d if r <= _EXP_TOL or abs(r - gamma) <= _EXP_TOL else k * d

    m, bt = _split(beta)
    n, gt = _split(gamma)
    _, at = _split(alpha)
    total = m1 * d * d
    if bt > 0 and gt > 0 and abs(bt + gt - at) > 1e-9:
        b1, g1 = bt / (at + 1), gt / (at + 1)
        total += nb(m + b1) * nc(n + g1)
    total += math.fsum(nb(m) * nc(l) for l in range(1, n + 1))
    total += math.fsum(nb(l) * d for l in range(1, m + 1))
    return total


def bound_delta1(c: float, chain, iterations: int = 60) -> tuple[float, str]:
    """Largest ``delta`` with ``chain(delta) <= c`` by bisection.

    ``chain`` must be nondecreasing.  Returns ``(delta1, diagnostic)``.
    """
    if not 0 < c < 1:
        raise ValueError("contraction target c must lie in (0, 1)")
    hi = 1.0
    for _ in range(400):
        if chain(hi) > c:
            break
        hi *= 2.0
    else:
        return math.inf, "chain never exceeds c"
    if chain(hi * 2.0**-iterations) > c:
        return 0.0, f"chain exceeds c already at delta = {hi * 2.0 ** -iterations:.3e}"
    lo = 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if chain(mid) <= c:
            lo = mid
        else:
            hi = mid
    return lo, "bisection"


def injectivity_exponents(alpha: float, beta: float, gamma: float) -> tuple[float, float]:
    """Split ``beta1 + gamma1 = 1`` with ``beta1 = beta / alpha``, clamped to ``[0, beta]``."""
    b1 = min(max(beta / alpha, 0.0), beta)
    return b1, 1.0 - b1


def bound_delta2(alpha: float, beta: float, gamma: float, moment_constant: float = 1.0) -> float:
    """Largest ``delta`` for which ``||B_{beta1}|| ||C_{gamma1}|| < 1`` is implied."""
    b1, g1 = injectivity_exponents(alpha, beta, gamma)
    kb = 1.0 if b1 <= _EXP_TOL or abs(b1 - beta) <= _EXP_TOL else moment_constant
    kg = 1.0 if g1 <= _EXP_TOL or abs(g1 - gamma) <= _EXP_TOL else moment_constant
    return 1.0 / math.sqrt(kb * kg)


@dataclass(frozen=True)
class RobustnessCertificate:
    profile: ResolventProfile
    beta: float
    gamma: float
    c: float
    m0: float
    m1: float
    m2: float
    delta1: float
    delta2: float
    delta_m2: float
    delta: float
    binding: str
    m1_source: str = "chain"
    m2_source: str = "chain"
    tails: bool = True
    moment_constant: float = 1.0
    notes: tuple = ()

    @property
    def regions(self) -> list[dict]:
        """The half-disks ``Omega_k = {Re lam >= 0, 0 < |lam - i w_k| <= eps_A}``."""
        return [{"center": [0.0, w], "radius": self.profile.eps_a} for w in self.profile.resonances]

    @property
    def neumann_bound(self) -> float:
        """``M_D = 1 / (1 - c)`` bounding ``||(I - C R B)^{-1}||``."""
        return 1.0 / (1.0 - self.c)


def compose_certificate(
    profile: ResolventProfile,
    beta: float,
    gamma: float,
    c: float,
    m1_override: float | None = None,
    m2_override: float | None = None,
    moment_constant: float = 1.0,
) -> RobustnessCertificate:
    """Assemble the constant chain and the budget ``delta``.

    ``m1_override`` switches to a model-supplied bound of
    ``||(i w_k - A)^alpha R(lam, A)||`` (no telescoping tails);
    ``m2_override`` replaces the generic off-resonance resolvent bound.
    """
    if not 0 < c < 1:
        raise ValueError("contraction target c must lie in (0, 1)")
    if profile.resonances and abs(beta + gamma - profile.alpha) > 1e-9:
        raise ValueError(f"need beta + gamma = alpha = {profile.alpha}, got {beta} + {gamma}")
    m0 = bound_M0(profile)
    tails = m1_override is None
    m1 = bound_M1(profile, m0, moment_constant) if tails else max(float(m1_override), 1.0)
    m2 = bound_M2(profile, m0) if m2_override is None else max(float(m2_override), 1.0)
    delta_m2 = math.sqrt(c / m2)
    notes = [
        "delta1 chain assembled from the telescoped transfer bound; tighter assemblies may exist",
        "moment constants set to %g (normal generator)" % moment_constant,
    ]
    if profile.resonances:
        alpha = profile.alpha

        def chain(d):
            return transfer_bound_chain(d, alpha, beta, gamma, m1, tails, moment_constant)

        delta1, diag = bound_delta1(c, chain)
        if diag != "bisection":
            notes.append(f"delta1: {diag}")
        delta2 = bound_delta2(alpha, beta, gamma, moment_constant)
    else:
        delta1 = delta2 = math.inf
        notes.append("no resonances: exponential-stability regime, only sqrt(c/M2) applies")
    terms = {"delta1": delta1, "delta2": delta2, "sqrt_c_over_M2": delta_m2}
    binding = min(terms, key=lambda k: (terms[k], list(terms).index(k)))
    return RobustnessCertificate(
        profile=profile,
        beta=float(beta),
        gamma=float(gamma),
        c=float(c),
        m0=m0,
        m1=m1,
        m2=m2,
        delta1=delta1,
        delta2=delta2,
        delta_m2=delta_m2,
        delta=terms[binding],
        binding=binding,
        m1_source="chain" if tails else "analytic",
        m2_source="chain" if m2_override is None else "analytic",
        tails=tails,
        moment_constant=float(moment_constant),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class BudgetCheck:
    norm_b: float
    norm_c: float
    graph_b: dict
    graph_c: dict
    delta: float

    @property
    def largest(self) -> float:
        vals = [self.norm_b, self.norm_c, *self.graph_b.values(), *self.graph_c.values()]
        return float(max(vals))

    @property
    def passed(self) -> bool:
        return self.largest < self.delta


def check_budget(model: SpectralModel, factors, certificate: RobustnessCertificate) -> BudgetCheck:
    """Measure ``||B||, ||C||`` and the graph norms at every resonance against ``delta``."""
    factors.check_against(model)
    gb, gc = {}, {}
    for w in certificate.profile.resonances:
        gb[w] = graph_norm(model, factors, w, certificate.beta, Side.B_SIDE)
        gc[w] = graph_norm(model, factors, w, certificate.gamma, Side.C_SIDE)
    return BudgetCheck(
        operator_norm(model, factors.b),
        operator_norm(model, factors.c),
        gb,
        gc,
        certificate.delta,
    )


# --- direct measurements on normal models -------------------------------------


def offresonance_resolvent_sup(model: SpectralModel, profile: ResolventProfile, n: int = 2001) -> float:
    """``sup ||R(lam, A)||`` over the closed right half-plane outside the ``Omega_k``.

    For a spectrum in the closed left half-plane the distance grows with
    ``Re lam``, so the sup sits on the boundary: the imaginary axis away from
    the resonances and the arcs ``|lam - i w_k| = eps_A``.
    """
    scan = profile.scan
    pts = [1j * w for w in _axis_points(profile, scan)]
    th = np.linspace(-np.pi / 2, np.pi / 2, n)
    for w in profile.resonances:
        pts.extend(1j * w + profile.eps_a * np.exp(1j * th))
    d = spectral_distance(model, np.asarray(pts))
    return float(np.max(1.0 / d))


def _axis_points(profile, scan):
    res = profile.resonances
    half = scan.window + (max(abs(w) for w in res) if res else 0.0)
    om = np.linspace(-half, half, scan.n_window)
    for w in res:
        om = om[np.abs(om - w) > profile.eps_a]
    extra = [w + s * profile.eps_a * (1 + 1e-9) for w in res for s in (-1, 1)]
    return list(om) + extra


def direct_m1_sup(model: SpectralModel, omega_k: float, alpha: float, lams, n_boundary: int = 4096) -> tuple[float, complex]:
    """Grid sup of ``||(i w_k - A)^alpha R(lam, A)||`` over the points ``lams``.

    Returns ``(sup, argmax)``.  Uses the maximum modulus principle on disk
    models and the samples otherwise, as :func:`stabcert.models.spectral_sup`.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    if model.kind is ModelKind.DISK_MULTIPLICATION:
        cen, rad = model.params["center"], model.params["radius"]
        mu = cen + rad * np.exp(2j * np.pi * np.arange(n_boundary) / n_boundary)
    else:
        mu = np.concatenate([model.eigenvalues, np.asarray(model.closure_points, dtype=complex)])
    num = np.abs(np.power(1j * omega_k - mu, alpha))
    best, arg = -1.0, 0j
    for s in range(0, lams.size, 256):
        chunk = lams[s : s + 256]
        vals = (num[None, :] / np.abs(chunk[:, None] - mu[None, :])).max(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), complex(chunk[i])
    if model.kind is ModelKind.DISK_MULTIPLICATION:
        refined = spectral_sup(model, lambda z: np.power(1j * omega_k - z, alpha) / (arg - z), n_boundary)
        best = max(best, refined)
    return best, arg


# --- serialisation --------------------------------------------------------------


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isinf(x)) else x


def certificate_to_dict(cert: RobustnessCertificate) -> dict:
    p = cert.profile
    return {
        "profile": {
            "resonances": list(p.resonances),
            "alpha": p.alpha,
            "eps_A": p.eps_a,
            "M_A": p.m_a,
            "d_A": _num(p.d_a),
            "M": p.m,
            "alpha_ladder_ratios": {f"{a:.2f}": v for a, v in sorted(p.ladder.items())},
            "resonances_confirmed": p.confirmed,
            "scan": asdict(p.scan),
        },
        "beta": cert.beta,
        "gamma": cert.gamma,
        "c": cert.c,
        "M0": cert.m0,
        "M1": cert.m1,
        "M1_source": cert.m1_source,
        "M2": cert.m2,
        "M2_source": cert.m2_source,
        "delta1": _num(cert.delta1),
        "delta2": _num(cert.delta2),
        "sqrt_c_over_M2": cert.delta_m2,
        "delta": cert.delta,
        "binding": cert.binding,
        "tails": cert.tails,
        "moment_constant": cert.moment_constant,
        "headroom": p.scan.headroom,
        "regions": cert.regions,
        "notes": list(cert.notes),
    }


def certificate_from_dict(data: dict) -> RobustnessCertificate:
    p = data["profile"]
    scan = ProfileScan(**p.get("scan", {}))
    profile = ResolventProfile(
        resonances=tuple(float(w) for w in p["resonances"]),
        alpha=float(p["alpha"]),
        eps_a=float(p["eps_A"]),
        m_a=float(p["M_A"]),
        d_a=math.inf if p.get("d_A") is None else float(p["d_A"]),
        m=float(p.get("M", 1.0)),
        ladder={float(k): float(v) for k, v in p.get("alpha_ladder_ratios", {}).items()},
        confirmed=bool(p.get("resonances_confirmed", True)),
        scan=scan,
    )

    def inf(x):
        return math.inf if x is None else float(x)

    return RobustnessCertificate(
        profile=profile,
        beta=float(data["beta"]),
        gamma=float(data["gamma"]),
        c=float(data["c"]),
        m0=float(data["M0"]),
        m1=float(data["M1"]),
        m2=float(data["M2"]),
        delta1=inf(data["delta1"]),
        delta2=inf(data["delta2"]),
        delta_m2=float(data["sqrt_c_over_M2"]),
        delta=float(data["delta"]),
        binding=data["binding"],
        m1_source=data.get("M1_source", "chain"),
        m2_source=data.get("M2_source", "chain"),
        tails=bool(data.get("tails", True)),
        moment_constant=float(data.get("moment_constant", 1.0)),
        notes=tuple(data.get("notes", ())),
    )
