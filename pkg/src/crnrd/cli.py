"""Command-line entry point: ``crnrd analyze|equilibrium|spectrum|simulate|verify``.

Exit status is 0 on success, 1 when a check fails (including a network that
is not complex balanced where one is required) and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .equilibria import DEFAULT_TOL_CB, certify_equilibrium
from .errors import (
    ConfigError,
    CRNError,
    NonpositiveMass,
    NotAnEquilibrium,
    NotComplexBalanced,
    ParseError,
    PipelineError,
    UnsupportedDomain,
)
from .harness import PASS_RATIO, dumps, run_verification, write_atomic, write_series
from .parser import load_network, render_network
from .solver import SimConfig, default_threads, simulate
from .spectral import Domain, gap_certificate, identity_residual_stats, linearize
from .stoich import analyze_stoichiometry

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (ParseError, ConfigError, UnsupportedDomain, FileNotFoundError, NonpositiveMass, ValueError)


def _floats(text: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _read_vector(path: str) -> list[float]:
    text = Path(path).read_text(encoding="utf-8").strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return _floats(text)


def _window(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ConfigError("--fit-window expects 'a,b'")
    return vals[0], vals[1]


def _emit(obj: dict, out: str | None) -> None:
    text = dumps(obj)
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _network_block(net) -> dict:
    return {
        "species": list(net.species),
        "n_reactions": net.n_reactions,
        "n_complexes": net.n_complexes,
        "text": render_network(net),
    }


def cmd_analyze(args) -> int:
    net = load_network(args.network)
    stoich = analyze_stoichiometry(net)
    eq = certify_equilibrium(net, stoich, tol_cb=args.tol_cb)
    _emit(
        {
            "network": _network_block(net),
            "stoichiometry": stoich.report(),
            "equilibrium": {"classification": eq.classification, "u_ref": eq.report()["u_ref"]},
        },
        args.output,
    )
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    net = load_network(args.network)
    stoich = analyze_stoichiometry(net)
    mass = _floats(args.mass) if args.mass else None
    u0 = _read_vector(args.from_u0) if args.from_u0 else None
    eq = certify_equilibrium(net, stoich, mass=mass, u0_mean=u0, tol_cb=args.tol_cb)
    _emit({"network": _network_block(net), "equilibrium": eq.report()}, args.output)
    return EXIT_OK if eq.complex_balanced else EXIT_FAIL


def cmd_spectrum(args) -> int:
    net = load_network(args.network)
    stoich = analyze_stoichiometry(net)
    d = _floats(args.diffusion)
    if len(d) != net.n_species:
        raise ConfigError(f"--diffusion needs {net.n_species} values")
    domain = Domain.parse(args.domain)
    mass = _floats(args.mass) if args.mass else None
    eq = certify_equilibrium(net, stoich, mass=mass, tol_cb=args.tol_cb)
    if not eq.complex_balanced:
        _emit({"equilibrium": eq.report()}, args.output)
        return EXIT_FAIL
    op = linearize(net, eq.u_inf, d)
    cert = gap_certificate(net, eq.u_inf, d, stoich.Q, domain)
    block = {
        "L": op.L.tolist(),
        **cert.report(),
        "identity_residual": identity_residual_stats(net, eq.u_inf, seed=args.seed or 0),
        "tangent_residual": op.tangent_residual(stoich.Q),
    }
    _emit({"equilibrium": eq.report(), "spectral": block}, args.output)
    return EXIT_OK


def _load_config(args) -> SimConfig:
    cfg = SimConfig.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.fit_window is not None:
        cfg = replace(cfg, fit_window=_window(args.fit_window))
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    sim = simulate(cfg, threads=args.threads, tol_cb=args.tol_cb)
    write_series(args.output, sim)
    summary = {
        "config": cfg.to_dict() | {"network": Path(cfg.network).name},
        "u_inf": sim.u_inf.tolist(),
        "rows": int(sim.t.size),
        "conservation_drift": sim.conservation_drift,
        "clamps": sim.total_clamps,
        "status": "WARN" if sim.warn else "OK",
    }
    write_atomic(Path(args.output) / "simulation.json", dumps(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    try:
        report, sim = run_verification(cfg, threads=args.threads, tol_cb=args.tol_cb, tol_fit=args.tol_fit)
    except PipelineError as exc:
        write_atomic(
            Path(args.output) / "report.json",
            dumps({"stage": exc.stage, "error": type(exc.cause).__name__, "message": str(exc.cause), "passed": False}),
        )
        raise
    write_series(args.output, sim)
    write_atomic(Path(args.output) / "report.json", dumps(report.to_dict()))
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-cb", type=float, default=DEFAULT_TOL_CB, help="complex-balance decision threshold")
    common.add_argument("--tol-fit", type=float, default=1 - PASS_RATIO, help="allowed relative shortfall of the fitted rate")
    common.add_argument("--fit-window", default=None, help="fit window as fractions of t_end, 'a,b'")
    common.add_argument("--threads", type=int, default=default_threads(), help="solver worker threads (env CRNRD_THREADS)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="crnrd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="stoichiometry and classification")
    a.add_argument("network")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("equilibrium", parents=[common], help="equilibrium for a given mass")
    e.add_argument("network")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--mass", help="conserved masses M, comma separated")
    g.add_argument("--from-u0", help="file with mean initial concentrations")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("spectrum", parents=[common], help="linearization and spectral gap")
    s.add_argument("network")
    s.add_argument("--diffusion", required=True)
    s.add_argument("--domain", default="1", help="'L' for an interval, 'LxM' for a rectangle")
    s.add_argument("--mass")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_spectrum)

    for name, fn, text in (
        ("simulate", cmd_simulate, "run the reaction-diffusion solver"),
        ("verify", cmd_verify, "full pipeline with pass/fail checks"),
    ):
        c = sub.add_parser(name, parents=[common], help=text)
        c.add_argument("config")
        c.add_argument("-o", "--output", required=True)
        c.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc.cause, INPUT_ERRORS) else EXIT_FAIL
    except (NotComplexBalanced, NotAnEquilibrium) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ParseError as exc:
        print(f"error: {exc.kind} at {exc}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CRNError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
