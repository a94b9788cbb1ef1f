"""Command-line front end: single-point evaluations, sweeps, verification.

Exit codes: 0 success, 1 usage error, 2 numerical-convergence or
verification failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import strategies, sweep as sweep_mod
from .fock import Cutoff, DensityMatrix, FockOperator
from .qfi import Convention, Povm, bures_qfi, classical_fisher, sld_qfi
from .strategies import ChannelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qiphase",
                     description="Phase-estimation precision bounds for a lossy, "
                                 "noisy, globally dephased interferometer.")
    sub = parser.add_subparsers(dest="command", required=True)

    def channel_flags(p):
        p.add_argument("--transmissivity", type=float, default=0.1,
                       help="channel power transmissivity T in (0, 1]")
        p.add_argument("--noise", type=float, default=1e-4,
                       help="mean background photons per mode b")
        p.add_argument("--modes", type=int, default=2,
                       help="even mode count d")
        p.add_argument("--convention", choices=["paper", "standard"],
                       default="paper")
        p.add_argument("--json", action="store_true", dest="as_json")

    for name, help_text in [("case1", "separable single-photon strategy"),
                            ("case2", "ancilla-entangled strategy"),
                            ("case3", "coherent-state strategy")]:
        p = sub.add_parser(name, help=help_text)
        channel_flags(p)
        if name == "case3":
            p.add_argument("--cutoff", type=int, default=24,
                           help="starting Fock cutoff per mode")
            p.add_argument("--rel-tol", type=float, default=1e-8,
                           help="cutoff-doubling convergence tolerance")
            p.add_argument("--method", choices=["matrix", "fidelity"],
                           default="matrix")

    p = sub.add_parser("sweep", help="evaluate all strategies on a (d, T, b) grid")
    p.add_argument("--config", help="TOML sweep configuration file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--json", action="store_true", dest="as_json",
                   help="emit rows as JSON instead of CSV")
    p.add_argument("--convention", choices=["paper", "standard"])
    p.add_argument("--transmissivity", type=float, action="append",
                   help="override the T axis (repeatable)")
    p.add_argument("--noise", type=float, action="append",
                   help="override the b axis (repeatable)")
    p.add_argument("--modes", type=int, action="append",
                   help="override the d axis (repeatable)")
    p.add_argument("--cutoff", type=int, help="override the starting cutoff")
    p.add_argument("--rel-tol", type=float, help="override the convergence tolerance")
    p.add_argument("--seed", type=int, help="override the recorded seed")
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("QFI_JOBS", "1")),
                   help="worker threads for grid evaluation (env QFI_JOBS)")
    p.add_argument("--strict", action="store_true",
                   help="exit 2 if any emitted value lacks a convergence certificate")

    p = sub.add_parser("verify", help="run the cross-oracle consistency suite")
    p.add_argument("--json", action="store_true", dest="as_json")
    return parser


def _print_result(result, as_json: bool) -> None:
    if as_json:
        payload = {"strategy": result.strategy, "convention": result.convention.value,
                   "value": result.value, "cutoff_used": result.cutoff_used,
                   "converged": result.converged,
                   "relative_change": result.relative_change}
        print(json.dumps(payload))
    else:
        print(repr(result.value))


def _cmd_case(args, which: str) -> int:
    params = ChannelParams(args.transmissivity, args.noise, args.modes)
    convention = Convention.parse(args.convention)
    if which == "case1":
        result = strategies.case1_closed(params, convention)
    elif which == "case2":
        result = strategies.case2_closed(params, convention)
    else:
        result = strategies.case3_qfi(params, cutoff=Cutoff(args.cutoff),
                                      convention=convention, method=args.method,
                                      rel_tol=args.rel_tol)
        if not result.converged:
            _print_result(result, args.as_json)
            print("warning: cutoff budget exhausted without convergence",
                  file=sys.stderr)
            return EXIT_NUMERICAL
    _print_result(result, args.as_json)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        spec = sweep_mod.load_spec(args.config) if args.config else sweep_mod.SweepSpec()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    overrides = {}
    if args.transmissivity:
        overrides["T_values"] = tuple(args.transmissivity)
    if args.noise:
        overrides["b_values"] = tuple(args.noise)
    if args.modes:
        overrides["d_values"] = tuple(args.modes)
    if args.convention:
        overrides["convention"] = Convention.parse(args.convention)
    if args.cutoff:
        overrides["cutoff_start"] = Cutoff(args.cutoff)
    if args.rel_tol:
        overrides["rel_tol"] = args.rel_tol
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        from dataclasses import replace
        spec = replace(spec, **overrides)

    rows = sweep_mod.run_sweep(spec, jobs=max(1, args.jobs))
    failures = [r for r in rows if r.error is not None]
    for rec in sweep_mod.crossover_report(rows):
        print(f"# crossover T={rec.T:g} b={rec.b:g}: d*="
              f"{rec.d_star if rec.d_star is not None else 'none'} "
              f"holds_beyond={str(rec.holds_beyond).lower()} "
              f"ratio_at_max_d={rec.ratio_at_max_d:.6g}", file=sys.stderr)
    for row in failures:
        print(f"# error at d={row.d} T={row.T:g} b={row.b:g}: {row.error}",
              file=sys.stderr)

    if args.as_json:
        payload = [row.__dict__ for row in rows]
        text = json.dumps(payload, indent=None)
        if args.out:
            try:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            except OSError as exc:
                print(f"error: cannot write output: {exc}", file=sys.stderr)
                return EXIT_IO
        else:
            print(text)
    else:
        if args.out:
            try:
                sweep_mod.emit_csv(rows, args.out)
            except OSError as exc:
                print(f"error: cannot write output: {exc}", file=sys.stderr)
                return EXIT_IO
        else:
            sys.stdout.write(sweep_mod.format_csv(rows))

    if args.strict and any(not r.converged for r in rows if r.error is None):
        print("error: --strict set and some rows lack a convergence certificate",
              file=sys.stderr)
        return EXIT_NUMERICAL
    if args.strict and failures:
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify: the cross-oracle suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, passed, detail) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def run_verify() -> list[CheckResult]:
    """Cross-validate the closed forms, the SLD engine and both coherent pipelines."""
    results = []

    # Channel identity eta * p = T.
    worst = 0.0
    for t in (1e-3, 1e-2, 0.5, 1.0):
        for b in (0.0, 1e-5, 1e-3):
            for d in (2, 10, 100):
                ch = strategies.derive_channel(ChannelParams(t, b, d))
                worst = max(worst, abs(ch.eta * ch.detect_prob - t))
    results.append(_check("eta*p == T identity", worst <= 1e-15,
                          f"max abs deviation {worst:.2e} (tol 1e-15)"))

    # Metamorphic identity: entangled value equals separable value at b/d.
    worst = 0.0
    for t in (1e-3, 0.3, 0.9):
        for b in (1e-5, 1e-3):
            for d in (2, 8, 64):
                lhs = strategies.case2_closed(ChannelParams(t, b, d)).value
                rhs = strategies.case1_closed(ChannelParams(t, b / d, d)).value
                worst = max(worst, abs(lhs - rhs) / rhs)
    results.append(_check("case2(T,b,d) == case1(T,b/d)", worst <= 1e-14,
                          f"max rel deviation {worst:.2e} (tol 1e-14)"))

    # SLD engine against the closed per-photon / per-pair forms.
    worst = 0.0
    for t in (0.5, 0.1, 0.01):
        for b in (1e-3, 1e-4):
            for d in (2, 4, 6):
                params = ChannelParams(t, b, d)
                got1 = sld_qfi(strategies.case1_rho(0.0, params),
                               strategies.case1_rho_prime(params)).value
                want1 = strategies.case1_qfi_per_photon(params)
                got2 = sld_qfi(strategies.case2_rho(0.0, params),
                               strategies.case2_rho_prime(params)).value
                want2 = strategies.case2_qfi_per_pair(params)
                worst = max(worst, abs(got1 - want1) / want1,
                            abs(got2 - want2) / want2)
    results.append(_check("SLD engine vs closed forms", worst <= 1e-8,
                          f"max rel deviation {worst:.2e} (tol 1e-8)"))

    # Fidelity limit on the lossless pure family equals the standard value 1.
    params = ChannelParams(1.0, 0.0, 2)
    pure = bures_qfi(strategies.case1_family(params)).value
    results.append(_check("fidelity limit on the pure family", abs(pure - 1.0) <= 1e-4,
                          f"value {pure!r} vs 1 (tol 1e-4)"))

    # SLD (standard) vs fidelity limit on a random full-rank unitary family.
    rng = np.random.default_rng(7)
    dim = 4
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho0 = m @ m.conj().T
    rho0 = rho0 / np.trace(rho0).real
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    g = 0.5 * (g + g.conj().T)
    gw, gv = np.linalg.eigh(g)

    def family(theta: float) -> DensityMatrix:
        u = (gv * np.exp(1j * theta * gw)) @ gv.conj().T
        return DensityMatrix(u @ rho0 @ u.conj().T, check_positive=False)

    drho = 1j * (g @ rho0 - rho0 @ g)
    want = sld_qfi(family(0.0), FockOperator(drho), Convention.STANDARD).value
    got = bures_qfi(family).value
    rel = abs(got - want) / want
    results.append(_check("SLD vs fidelity limit, random family", rel <= 1e-6,
                          f"rel deviation {rel:.2e} (tol 1e-6)"))

    # Coherent-probe pipelines against each other on two channel points.
    worst = 0.0
    for t, b in ((1e-1, 1e-4), (1e-2, 1e-3)):
        params = ChannelParams(t, b, 2)
        v_matrix = strategies.case3_qfi_matrix(params, cutoff=Cutoff(8)).value
        v_fid = strategies.case3_qfi_fidelity(params, cutoff=Cutoff(8)).value
        cut = Cutoff(12)
        fam = lambda e, p=params, c=cut: strategies.case3_rho_theta(2.0 * e, p, c)
        v_quad = bures_qfi(fam).value
        worst = max(worst, abs(v_fid - v_matrix) / v_matrix,
                    abs(v_quad - v_matrix) / v_matrix)
    results.append(_check("coherent pipelines, three-way", worst <= 1e-4,
                          f"max pairwise rel deviation {worst:.2e} (tol 1e-4)"))

    # First-order root correction has an exactly vanishing diagonal.
    pipe = strategies.case3_matrix_pipeline(ChannelParams(0.1, 1e-4, 2), Cutoff(12))
    diag_mag = float(np.max(np.abs(np.diag(pipe.a_matrix))))
    results.append(_check("first-order correction traceless", diag_mag <= 1e-14,
                          f"max |diag| {diag_mag:.2e} (tol 1e-14)"))

    # Optimal measurement attains the quantum bound for the separable probe.
    params = ChannelParams(0.1, 1e-4, 2)
    cfi = classical_fisher(strategies.case1_optimal_povm(params),
                           strategies.case1_family(params), 0.0)
    qfi_std = strategies.case1_closed(params, Convention.STANDARD).value
    p = strategies.derive_channel(params).detect_prob
    rel = abs(p * cfi - qfi_std) / qfi_std
    results.append(_check("optimal measurement saturates the bound", rel <= 1e-6,
                          f"rel gap {rel:.2e} (tol 1e-6)"))

    return results


def _cmd_verify(args) -> int:
    results = run_verify()
    if args.as_json:
        print(json.dumps([r.__dict__ for r in results]))
    else:
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}: {r.name} -- {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.command in ("case1", "case2", "case3"):
            return _cmd_case(args, args.command)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
