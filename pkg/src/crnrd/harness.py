"""Regime formulas, decay-rate fitting and the end-to-end verification pipeline."""

from __future__ import annotations

import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .equilibria import certify_equilibrium
from .errors import (
    InsufficientData,
    NonpositiveSeries,
    NotComplexBalanced,
    OutOfRegimeWarning,
    PipelineError,
)
from .network import ReactionNetwork, nonlinearity_order
from .parser import load_network
from .solver import SimConfig, SimResult, simulate
from .spectral import Domain, SpectralCertificate, gap_certificate, identity_residual_stats
from .stoich import analyze_stoichiometry

MIN_FIT_ROWS = 10
PASS_RATIO = 0.95
PASS_DRIFT = 1e-10


def fit_decay_rate(t, y, window=None, envelope: bool = False) -> float:
    """Least-squares slope of ``-log y`` against t over ``window = (t_a, t_b)``.

    With ``envelope`` the fit uses only local maxima of y inside the window
    (when there are at least three), which tracks the decay of an
    oscillating series.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < MIN_FIT_ROWS:
        raise InsufficientData(f"need at least {MIN_FIT_ROWS} rows in the fit window, got {t.size}")
    if np.any(~(y > 0)):
        raise NonpositiveSeries("decay series must be strictly positive")
    if envelope and t.size >= 3:
        inner = np.flatnonzero((y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:])) + 1
        if inner.size >= 3:
            t, y = t[inner], y[inner]
    slope = np.polyfit(t, -np.log(y), 1)[0]
    return float(slope)


def admissible_mu(d: int) -> Fraction:
    """Order of nonlinearity ``(d + 4) / d`` covered by the L2 regime in dimension d."""
    d = int(d)
    if d < 1:
        raise ValueError("dimension must be a positive integer")
    if d > 4:
        warnings.warn(f"d={d} lies outside the d <= 4 regime", OutOfRegimeWarning, stacklevel=2)
    return Fraction(d + 4, d)


def critical_p0(d: int, mu) -> Fraction | float:
    """``p0 = d (mu - 1) / 2``; exact when mu is rational."""
    d = int(d)
    if d < 3:
        warnings.warn(f"p0 is stated for d >= 3, got d={d}", OutOfRegimeWarning, stacklevel=2)
    if isinstance(mu, (int, Fraction)):
        return Fraction(d) * (Fraction(mu) - 1) / 2
    return d * (float(mu) - 1.0) / 2.0


def perturbation_exponent_delta(net: ReactionNetwork) -> float:
    """delta with ``1 + delta = min(2, smallest reactant coefficient above 1)``."""
    Y = net.reactants
    above = Y[Y > 1]
    return float(min(2.0, above.min()) - 1.0) if above.size else 1.0


@dataclass
class VerificationReport:
    network_id: str
    classification: str
    u_inf: np.ndarray
    certificate: SpectralCertificate
    fitted_rate: float
    target: float
    drift: float
    clamps: int
    mu: float
    dim: int
    linf_final: float
    linf_rate: float
    tol_fit: float = 1 - PASS_RATIO
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.fitted_rate / self.target

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "rate_ratio": self.ratio >= 1.0 - self.tol_fit,
            "conservation_drift": self.drift <= PASS_DRIFT,
            "no_clamps": self.clamps == 0,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfRegimeWarning)
            amu = admissible_mu(self.dim)
        return {
            "network_id": self.network_id,
            "classification": self.classification,
            "u_inf": [float(x) for x in self.u_inf],
            "certificate": self.certificate.report(),
            "fitted_rate": self.fitted_rate,
            "target": self.target,
            "ratio": self.ratio,
            "conservation_drift": self.drift,
            "clamps": self.clamps,
            "linf_final": self.linf_final,
            "linf_rate": self.linf_rate,
            "regime": {
                "dim": self.dim,
                "mu": self.mu,
                "admissible_mu": str(amu),
                "mu_within_admissible": self.mu <= float(amu),
            },
            "checks": self.checks,
            "passed": self.passed,
            **self.extra,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - relabelled with the stage name
        raise PipelineError(name, exc) from exc


def _certify(net, stoich, config, tol_cb):
    cert = certify_equilibrium(net, stoich, mass=config.mass, tol_cb=tol_cb)
    if not cert.complex_balanced:
        raise NotComplexBalanced(cert.detail.get("reason", "not complex balanced"), cert.log_residual)
    return cert


def run_verification(
    config: SimConfig,
    net: ReactionNetwork | None = None,
    threads: int | None = None,
    tol_cb: float = 1e-8,
    tol_fit: float = 1 - PASS_RATIO,
) -> tuple[VerificationReport, SimResult]:
    """parse -> stoichiometry -> equilibrium -> certificate -> simulate -> fit."""
    if net is None:
        net = _stage("parse", load_network, config.network)
    stoich = _stage("stoichiometry", analyze_stoichiometry, net)
    eq = _stage("equilibrium", _certify, net, stoich, config, tol_cb)
    domain = _stage("spectral", Domain, config.lengths)
    cert = _stage("spectral", gap_certificate, net, eq.u_inf, config.diffusion, stoich.Q, domain)
    ident = _stage("spectral", identity_residual_stats, net, eq.u_inf, 100, config.seed)

    mu = nonlinearity_order(net)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfRegimeWarning)
        p0 = float(critical_p0(domain.dim, Fraction(mu).limit_denominator(10**6)))
    lp = p0 if p0 >= 1 else None
    sim = _stage("simulate", simulate, config, net=net, stoich=stoich, threads=threads, lp_exponent=lp, tol_cb=tol_cb)

    a, b = config.fit_window
    window = (a * config.t_end, b * config.t_end)
    rate = _stage("fit", fit_decay_rate, sim.t, sim.l2w_sq, window, config.envelope)
    try:
        linf_rate = fit_decay_rate(sim.t, sim.linf, window, envelope=config.envelope)
    except (InsufficientData, NonpositiveSeries):
        linf_rate = math.nan

    extra = {
        "stoichiometry": stoich.report(),
        "equilibrium": eq.report(),
        "identity_residual": ident,
        "delta": perturbation_exponent_delta(net),
        "p0": p0,
        "lp0_sup": None if sim.lp_dist is None else float(np.max(sim.lp_dist)),
        "dt_heuristic_ok": sim.dt_heuristic_ok,
        "fit_window": list(window),
    }
    report = VerificationReport(
        network_id=config.name or Path(config.network).stem,
        classification=eq.classification,
        u_inf=eq.u_inf,
        certificate=cert,
        fitted_rate=rate,
        target=cert.decay_rate,
        drift=sim.conservation_drift,
        clamps=sim.total_clamps,
        mu=mu,
        dim=domain.dim,
        linf_final=float(sim.linf[-1]),
        linf_rate=linf_rate,
        tol_fit=tol_fit,
        extra=extra,
    )
    return report, sim


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_finite(obj), indent=2, default=_json_default) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_series(outdir, sim: SimResult) -> None:
    write_atomic(Path(outdir) / "series.csv", sim.csv_text())
    write_atomic(Path(outdir) / "series.dat", sim.gnuplot_text())
