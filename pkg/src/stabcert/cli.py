"""Command-line entry points: certify, verify, verify-polynomial, simulate, reproduce.

Exit codes: 0 pass, 1 verification failure, 2 configuration or model error.
Reports are JSON with sorted keys; the only run-dependent field is
``timestamp``.  Plot data is written as CSV tables next to the report.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import (
    certificate_from_dict,
    certificate_to_dict,
    compose_certificate,
    estimate_growth_at_infinity,
    estimate_resolvent_profile,
)
from .errors import StabcertError
from .fractional import Side, positive_power_norm
from .models import (
    PerturbationFactors,
    build_diagonal_model,
    factors_from_dict,
    model_from_dict,
    model_to_dict,
)
from .presets import (
    PRESETS,
    diagonal_factors,
    disk_certificate,
    disk_factors,
    disk_model,
    poly_factors,
    reproduce,
)
from .verification import RegionGrid, to_jsonable, fit_polynomial_decay, run_verification, simulate_semigroup

log = logging.getLogger("stabcert")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
TIMESTAMP_KEY = "timestamp"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    pert: str | None = None
    cert: str | None = None
    c: float = 0.8
    beta: float | None = None
    gamma: float | None = None
    out: str | None = None
    tables: str | None = None
    grid: RegionGrid = field(default_factory=RegionGrid)
    xi_points: int = 25
    t_max: float | None = None
    n_times: int = 101
    threads: int = 1
    preset: str | None = None
    m1: float | None = None
    m2: float | None = None


# --- IO ----------------------------------------------------------------------------


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from None


def _preset_name(spec: str | None) -> str | None:
    if spec and spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        return name
    return None


def load_model(spec: str | None):
    if spec is None:
        raise ConfigError("--model is required")
    name = _preset_name(spec)
    if name == "disk":
        return disk_model()
    if name == "diagonal":
        return build_diagonal_model("inverse", 500)
    if name == "poly":
        return build_diagonal_model("poly", 400)
    return model_from_dict(_load_json(spec, "model"))


def load_factors(spec: str | None, model, certificate=None) -> PerturbationFactors:
    if spec is None:
        raise ConfigError("--pert is required")
    name = _preset_name(spec)
    if name == "poly":
        return poly_factors(model)
    if name in ("disk", "diagonal"):
        if certificate is None:
            raise ConfigError(f"preset factors {spec!r} are scaled to a certificate; pass --cert")
        return (disk_factors if name == "disk" else diagonal_factors)(model, certificate)
    f = factors_from_dict(_load_json(spec, "perturbation"))
    f.check_against(model)
    return f


def dumps(payload: dict) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(payload: dict, out: str | None) -> None:
    payload = {**payload, TIMESTAMP_KEY: _dt.datetime.now(_dt.timezone.utc).isoformat()}
    text = dumps(payload)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def strip_timestamps(payload):
    """Drop every ``timestamp`` field (for reproducibility comparisons)."""
    if isinstance(payload, dict):
        return {k: strip_timestamps(v) for k, v in payload.items() if k != TIMESTAMP_KEY}
    if isinstance(payload, list):
        return [strip_timestamps(v) for v in payload]
    return payload


def write_tables(tables: dict, directory: str | None) -> None:
    if not directory:
        return
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, rows in sorted(tables.items()):
        with open(d / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "value"])
            for pt, val in rows:
                w.writerow([repr(float(pt)), repr(float(val))])


# --- commands ------------------------------------------------------------------------


def _certificate_for(cfg: RunConfig, model):
    if _preset_name(cfg.model) == "disk" and cfg.m1 is None:
        return disk_certificate(model, cfg.c)
    prof = estimate_resolvent_profile(model)
    beta = prof.alpha / 2 if cfg.beta is None else cfg.beta
    gamma = prof.alpha - beta if cfg.gamma is None else cfg.gamma
    if prof.resonances and abs(beta + gamma - prof.alpha) > 1e-9:
        raise ConfigError(f"certify needs beta + gamma = alpha = {prof.alpha:g}; got {beta:g} + {gamma:g}")
    return compose_certificate(prof, beta, gamma, cfg.c, m1_override=cfg.m1, m2_override=cfg.m2)


def cmd_certify(cfg: RunConfig) -> int:
    model = load_model(cfg.model)
    cert = _certificate_for(cfg, model)
    payload = {"command": "certify", "model": model_to_dict(model), "certificate": certificate_to_dict(cert)}
    write_report(payload, cfg.out)
    print(
        f"alpha = {cert.profile.alpha:g}, delta = {cert.delta:.12g} (binding: {cert.binding}; "
        f"M0={cert.m0:.6g}, M1={cert.m1:.6g} [{cert.m1_source}], M2={cert.m2:.6g} [{cert.m2_source}])",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.cert or not Path(cfg.cert).exists():
        raise ConfigError("no certificate found; run `stabcert certify --model ... --out CERT.json` first and pass --cert CERT.json")
    data = _load_json(cfg.cert, "certificate")
    cert = certificate_from_dict(data.get("certificate", data))
    model = load_model(cfg.model)
    factors = load_factors(cfg.pert, model, cert)
    xi = np.logspace(-3, 3, cfg.xi_points)
    report = run_verification(model, factors, cert, grid=cfg.grid, xi=xi, n_times=cfg.n_times, t_max=cfg.t_max, threads=cfg.threads)
    payload = {"command": "verify", "certificate": certificate_to_dict(cert), "report": report.to_dict()}
    write_report(payload, cfg.out)
    write_tables(report.tables, cfg.tables)
    for r in report.records:
        print(r.line(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify_polynomial(cfg: RunConfig) -> int:
    model = load_model(cfg.model)
    factors = load_factors(cfg.pert, model)
    slope, alpha = estimate_growth_at_infinity(model)
    beta = alpha / 2 if cfg.beta is None else cfg.beta
    gamma = alpha - beta if cfg.gamma is None else cfg.gamma
    if beta + gamma < alpha - 1e-9:
        raise ConfigError(f"verify-polynomial needs beta + gamma >= alpha = {alpha:g}")
    sizes = {
        "B": positive_power_norm(model, factors, beta, Side.B_SIDE),
        "C": positive_power_norm(model, factors, gamma, Side.C_SIDE),
    }
    target = -1.0 / alpha
    fits = {"unperturbed": fit_polynomial_decay(model), "perturbed": fit_polynomial_decay(model, factors)}
    ok = all(f.verdict == "polynomial" and abs(f.exponent - target) <= 0.1 * abs(target) for f in fits.values())
    payload = {
        "command": "verify-polynomial",
        "alpha": alpha,
        "growth_slope": slope,
        "beta": beta,
        "gamma": gamma,
        "sizes": sizes,
        "target_exponent": target,
        "tolerance": 0.1 * abs(target),
        "fits": {k: {"exponent": f.exponent, "early": f.early_slope, "late": f.late_slope, "verdict": f.verdict} for k, f in fits.items()},
        "passed": ok,
    }
    write_report(payload, cfg.out)
    write_tables({f"envelope_{k}": list(zip(f.times.tolist(), f.norms.tolist())) for k, f in fits.items()}, cfg.tables)
    for k, f in fits.items():
        print(f"{k}: exponent {f.exponent:.4f} (target {target:g}), {f.verdict}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(cfg: RunConfig) -> int:
    model = load_model(cfg.model)
    cert = None
    if cfg.cert:
        data = _load_json(cfg.cert, "certificate")
        cert = certificate_from_dict(data.get("certificate", data))
    factors = load_factors(cfg.pert, model, cert) if cfg.pert else PerturbationFactors.zero(model.size)
    t_max = cfg.t_max if cfg.t_max is not None else 5.0 / abs(model.slowest_mode.real)
    times = np.linspace(0.0, t_max, cfg.n_times)
    traj = simulate_semigroup(model, factors, model.basis_vector(0), times)
    payload = {
        "command": "simulate",
        "growth": traj.growth,
        "times": times.tolist(),
        "norms": traj.norms.tolist(),
        "sup": traj.sup,
    }
    write_report(payload, cfg.out)
    write_tables({"trajectory": list(zip(times.tolist(), traj.norms.tolist()))}, cfg.tables)
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig) -> int:
    res = reproduce(cfg.preset, threads=cfg.threads)
    payload = {
        "command": "reproduce",
        "preset": res.name,
        "table": [r.as_dict() for r in res.rows],
        "passed": res.passed,
        "extra": res.extra,
    }
    if res.certificate is not None:
        payload["certificate"] = certificate_to_dict(res.certificate)
    if res.report is not None:
        payload["report"] = res.report.to_dict()
        write_tables(res.report.tables, cfg.tables)
    write_report(payload, cfg.out)
    width = max(len(r.quantity) for r in res.rows)
    print(f"{'quantity':<{width}}  expected        measured        tol       pass", file=sys.stderr)
    for r in res.rows:
        print(f"{r.quantity:<{width}}  {r.expected:<14.10g}  {r.measured:<14.10g}  {r.tolerance:<8.2g}  {r.passed}", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAIL


COMMANDS = {
    "certify": cmd_certify,
    "verify": cmd_verify,
    "verify-polynomial": cmd_verify_polynomial,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


# --- argument parsing --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabcert", description="Robustness certificates for strongly stable semigroups.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", help="model JSON file or preset:<disk|diagonal|poly>")
        sp.add_argument("--out", help="report path (default: stdout)")
        sp.add_argument("--tables", help="directory for CSV plot tables")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("certify", help="estimate the resolvent profile and compose the budget delta")
    common(sp)
    sp.add_argument("--c", type=float, default=0.8, help="transfer-norm target c in (0, 1)")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--m1", type=float, help="analytic bound for ||(i w_k - A)^alpha R(lam, A)||")
    sp.add_argument("--m2", type=float, help="analytic off-resonance resolvent bound")

    for name, helptext in (("verify", "check perturbation factors against a certificate"), ("simulate", "trajectory of ||T(t) e_1||")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--pert", help="perturbation JSON file or preset:<name>")
        sp.add_argument("--cert", help="certificate JSON written by certify")
        sp.add_argument("--t-max", type=float)
        sp.add_argument("--n-times", type=int, default=101)
        if name == "verify":
            sp.add_argument("--grid-radii", type=int, default=RegionGrid.n_radii)
            sp.add_argument("--grid-angles", type=int, default=RegionGrid.n_angles)
            sp.add_argument("--grid-rmin", type=float, default=RegionGrid.r_min)
            sp.add_argument("--grid-nx", type=int, default=RegionGrid.n_x)
            sp.add_argument("--grid-ny", type=int, default=RegionGrid.n_y)
            sp.add_argument("--grid-xi", type=int, default=25, help="points of the log xi grid on [1e-3, 1e3]")

    sp = sub.add_parser("verify-polynomial", help="fit the decay exponent of ||T(t) A^-1||")
    common(sp)
    sp.add_argument("--pert", help="perturbation JSON file or preset:poly")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)

    sp = sub.add_parser("reproduce", help="reproduce a worked example as an expected-vs-measured table")
    sp.add_argument("preset", choices=sorted(PRESETS))
    common(sp, model=False)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, out=ns.out, tables=ns.tables, threads=ns.threads)
    for key in ("model", "pert", "cert", "c", "beta", "gamma", "m1", "m2", "t_max", "n_times", "preset"):
        if hasattr(ns, key):
            setattr(cfg, key, getattr(ns, key))
    if ns.command == "verify":
        cfg.grid = RegionGrid(r_min=ns.grid_rmin, n_radii=ns.grid_radii, n_angles=ns.grid_angles, n_x=ns.grid_nx, n_y=ns.grid_ny)
        cfg.xi_points = ns.grid_xi
    if cfg.threads < 1:
        raise ConfigError("--threads must be positive")
    if not 0 < cfg.c < 1:
        raise ConfigError("--c must lie in (0, 1)")
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, StabcertError, ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
