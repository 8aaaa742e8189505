"""Command-line entry points.

Exit codes: 0 success, 1 usage or parse error, 2 simulation error,
3 verification mismatch.  Errors go to stderr prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import run_circuit
from .dsl import parse_circuit
from .errors import ParseError, PhotonloomError, SimulationError
from .fock import fidelity_pure
from .oracle import compare, dense_run
from .protocols import (
    ConcentrationParams,
    build_concentration_circuit,
    concentration_input,
    gamma_update_map,
    ghz_target,
    iterate_purification,
    run_concentration,
)
from .report import (
    RunReport,
    branch_entry,
    branches_csv,
    report_from_branches,
    rows_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_SIMULATION, EXIT_VERIFY = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for simulation errors here
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _complex(tok: str) -> complex:
    try:
        z = complex(tok.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {tok!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise argparse.ArgumentTypeError(f"non-finite value: {tok!r}")
    return z


def _real(tok: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {tok!r}") from None
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"non-finite value: {tok!r}")
    return x


def _positive_int(tok: str) -> int:
    try:
        n = int(tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {tok!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    try:
        text = Path(args.circuit).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read {args.circuit}: {exc.strerror}") from None
    try:
        circuit = parse_circuit(text).to_circuit(Path(args.circuit).name)
    except (ParseError, SimulationError) as exc:
        raise _UsageError(f"{args.circuit}: {exc}") from None
    branches = run_circuit(circuit)
    if args.csv:
        _emit(branches_csv(branches), args.out)
    else:
        rep = report_from_branches(branches, text, {"circuit": Path(args.circuit).name})
        _emit(rep.to_json(), args.out)
    return EXIT_OK


# decimal literals such as 0.70710678 miss unit norm by ~3e-9; rescale those
CLI_NORM_SLACK = 1e-6


def _concentration_params(alpha: complex, beta: complex) -> ConcentrationParams:
    norm_sq = abs(alpha) ** 2 + abs(beta) ** 2
    if norm_sq > 0 and abs(norm_sq - 1.0) <= CLI_NORM_SLACK:
        scale = 1.0 / math.sqrt(norm_sq)
        alpha, beta = alpha * scale, beta * scale
    return ConcentrationParams(alpha, beta)


def cmd_concentrate(args) -> int:
    params = _concentration_params(args.alpha, args.beta)
    res = run_concentration(params)
    branches = [
        branch_entry((o.label,), o.probability, o.bell_state,
                     correction_applied=o.correction_applied)
        for o in res.bell_outcomes
    ]
    extra = {
        "paper_claimed_probability": res.claimed_probability,
        "probability_agrees": res.probability_agrees(),
        "degenerate": res.degenerate,
        "ghz_fidelity": None if res.degenerate else fidelity_pure(res.ghz_state, ghz_target()),
    }
    if args.oracle:
        (_, dense), = dense_run(build_concentration_circuit(), concentration_input(params))
        extra["oracle_max_diff"] = compare(res.unnormalized_output, dense)
        extra["oracle_probability"] = dense.norm_sq()
    rep = RunReport(
        probability=res.success_probability,
        state=res.ghz_state,
        claimed=res.claimed_probability,
        branches=branches,
        parameters={"alpha": _complex_pair(params.alpha), "beta": _complex_pair(params.beta)},
        extra=extra,
    )
    _emit(rep.to_json(), args.out)
    return EXIT_OK


def cmd_purify(args) -> int:
    max_rounds = args.rounds if args.rounds is not None else (50 if args.target is not None else 1)
    rounds = iterate_purification(args.gamma, target=args.target, max_rounds=max_rounds,
                                  mode=args.mode, noise=args.noise)
    gammas = [r.gamma_out for r in rounds]
    acceptance = [r.acceptance_probability for r in rounds]
    branches = [
        {"round": i + 1, "gamma_in": r.gamma_in, "gamma_out": r.gamma_out,
         "acceptance_probability": r.acceptance_probability}
        for i, r in enumerate(rounds)
    ]
    rep = RunReport(
        probability=None if args.mode == "fast" else math.prod(acceptance),
        branches=branches,
        parameters={"gamma": args.gamma, "rounds": args.rounds, "target": args.target,
                    "mode": args.mode, "noise": args.noise},
        extra={
            "gammas": gammas,
            "final_gamma": gammas[-1] if gammas else args.gamma,
            "rounds_run": len(rounds),
            "reached_target": None if args.target is None else bool(gammas and gammas[-1] >= args.target),
        },
    )
    _emit(rep.to_json(), args.out)
    return EXIT_OK


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0:
        raise _UsageError("--step must be positive")
    if stop < start:
        raise _UsageError("--to must not be below --from")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def cmd_sweep_gamma(args) -> int:
    rows = [(float(g), gamma_update_map(float(g))) for g in _grid(args.start, args.stop, args.step)]
    _emit(rows_csv(["gamma", "gamma_out"], rows), args.out)
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    """Real amplitudes ``alpha = cos(t)``, ``beta = sin(t)`` for t on [0, pi/2]."""
    if args.steps < 2:
        raise _UsageError("--steps must be at least 2")
    target = ghz_target()
    rows = []
    for t in np.linspace(0.0, math.pi / 2, args.steps):
        res = run_concentration(ConcentrationParams.from_angle(float(t)))
        fid = "" if res.degenerate else fidelity_pure(res.ghz_state, target)
        rows.append((float(res.params.alpha.real), float(res.params.beta.real),
                     res.success_probability, res.claimed_probability, fid))
    header = ["alpha", "beta", "success_probability", "claimed_probability", "ghz_fidelity"]
    _emit(rows_csv(header, rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import AGREEMENT_TOL, run_equivalence_suite

    results = run_equivalence_suite(args.n, args.seed)
    failed = [r.index for r in results if not r.ok]
    worst = max((r.max_diff for r in results), default=0.0)
    rep = RunReport(
        probability=None,
        parameters={"n": args.n, "seed": args.seed, "tolerance": AGREEMENT_TOL},
        extra={"circuits": len(results), "max_diff": worst, "failed": failed, "ok": not failed},
    )
    _emit(rep.to_json(), args.out)
    if failed:
        print(f"error: {len(failed)} of {len(results)} circuits disagree (max diff {worst:.3g})",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="photonloom", description="Polarization linear-optics circuit simulator.")
    p.add_argument("--version", action="version", version=f"photonloom {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a circuit script")
    s.add_argument("--circuit", required=True)
    fmt = s.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--csv", action="store_true", help="one row per branch and basis term")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("concentrate", help="concentration circuit plus Bell projection")
    s.add_argument("--alpha", type=_complex, required=True)
    s.add_argument("--beta", type=_complex, required=True)
    s.add_argument("--oracle", action="store_true", help="cross-check against the dense engine")
    s.add_argument("--out")
    s.set_defaults(func=cmd_concentrate)

    s = sub.add_parser("purify", help="iterate purification rounds")
    s.add_argument("--gamma", type=_real, required=True)
    s.add_argument("--rounds", type=_positive_int)
    s.add_argument("--target", type=_real)
    s.add_argument("--mode", choices=("fast", "circuit"), default="fast")
    s.add_argument("--noise", choices=("vv", "phi"), default="vv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_purify)

    s = sub.add_parser("sweep-gamma", help="CSV of the fraction update map")
    s.add_argument("--from", dest="start", type=_real, required=True)
    s.add_argument("--to", dest="stop", type=_real, required=True)
    s.add_argument("--step", type=_real, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep_gamma)

    s = sub.add_parser("sweep-alpha", help="CSV of concentration over real amplitudes")
    s.add_argument("--steps", type=_positive_int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep_alpha)

    s = sub.add_parser("verify", help="randomized sparse-vs-dense equivalence suite")
    s.add_argument("--n", type=_positive_int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError) as exc:
        if isinstance(exc, SimulationError):
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_SIMULATION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhotonloomError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
