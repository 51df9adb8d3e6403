"""
Command-line interface.

Every subcommand writes one JSON report (sorted keys) to stdout or --out.
Exit codes: 0 verdict true, 1 verdict false, 2 bad input, 3 internal
failure (a solver did not converge or a bug).
"""

import argparse
import json
import math
import re
import sys
import traceback
from pathlib import Path

import numpy as np
import pandas as pd

from hyperreal import circuits, classify, kyp, matcore, sets, stability
from hyperreal.exceptions import (
    HamiltonianImaginaryAxisError,
    HyperRealError,
    NoCertificateError,
    NumericError,
    UnstablePolesError,
)
from hyperreal.rational import (
    Realization,
    SisoRational,
    as_realization,
    cayley_realization,
    decode_matrix,
    minimize,
    parse_number,
)
from hyperreal.sets import EtaParam
from hyperreal.utils import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

# integer fractions such as 10/9 are not JSON; quote them before decoding
_FRACTION = re.compile(r'(?<![\w".])(-?\d+\s*/\s*\d+)(?![\w".])')


class InputError(ValueError):
    """A command-line value failed to parse; the message names the flag."""


def load_json_arg(raw: str, flag: str):
    """Inline JSON (bare p/q fractions allowed) or a path to a JSON file."""
    path = Path(raw)
    try:
        if len(raw) < 4096 and path.is_file():
            raw = path.read_text()
    except OSError:
        pass
    try:
        return json.loads(_FRACTION.sub(r'"\1"', raw))
    except json.JSONDecodeError as e:
        raise InputError(f"{flag}: not a JSON file and not valid inline JSON ({e})") from e


def parse_eta(raw: str, flag: str = "--eta") -> EtaParam:
    try:
        if raw.strip().lower() in ("inf", "infinity"):
            return EtaParam.infinite()
        return EtaParam(parse_number(raw))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"{flag}: {e}") from e


def _number(raw: str, flag: str) -> float:
    try:
        return parse_number(raw)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"{flag}: expected a number or p/q, got {raw!r}") from e


def load_function(args) -> Realization | SisoRational:
    if getattr(args, "siso", None):
        try:
            return SisoRational.from_dict(load_json_arg(args.siso, "--siso"))
        except (ValueError, ZeroDivisionError, TypeError) as e:
            raise InputError(f"--siso: {e}") from e
    if getattr(args, "realization", None):
        try:
            return Realization.from_dict(load_json_arg(args.realization, "--realization"))
        except (ValueError, TypeError) as e:
            raise InputError(f"--realization: {e}") from e
    raise InputError("one of --siso or --realization is required")


def _load_plant(raw: str) -> SisoRational:
    try:
        return SisoRational.from_dict(load_json_arg(raw, "--plant"))
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise InputError(f"--plant: {e}") from e


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_report(report: dict, out: str | None) -> None:
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(text)


# subcommands


def cmd_classify(args) -> tuple[dict, bool]:
    verdict = classify.classify_prs(load_function(args))
    flags = {"P": verdict.p, "SP": verdict.sp, "HP": verdict.hp}
    return verdict.to_dict(), bool(flags[args.require])


def cmd_eta(args) -> tuple[dict, bool]:
    verdict = classify.eta_of(load_function(args))
    report = verdict.to_dict()
    ok = verdict.eta_star is not None
    if args.eta is not None and ok:
        eta = parse_eta(args.eta)
        margin = eta.value - verdict.eta_star
        report["eta"] = eta.to_json()
        report["margin"] = margin
        ok = margin >= -1e-9 * verdict.eta_star
    return report, ok


def cmd_kyp_verify(args) -> tuple[dict, bool]:
    F = load_function(args)
    R = F if isinstance(F, Realization) else as_realization(F)
    eta = parse_eta(args.eta)
    try:
        H = decode_matrix(load_json_arg(args.H, "--H"), R.n, R.n, "H")
    except (ValueError, TypeError) as e:
        raise InputError(f"--H: {e}") from e
    cert = kyp.verify(R, H, eta)
    return cert.to_dict(), cert.certified


def cmd_kyp_search(args) -> tuple[dict, bool]:
    cert = kyp.search_H(load_function(args), parse_eta(args.eta))
    return cert.to_dict(), cert.certified


def cmd_cayley(args) -> tuple[dict, bool]:
    if args.matrix:
        rows = load_json_arg(args.matrix, "--matrix")
        if not isinstance(rows, list) or not rows:
            raise InputError("--matrix: expected a non-empty list of rows")
        try:
            M = decode_matrix(rows, len(rows), len(rows), "matrix")
        except (ValueError, TypeError) as e:
            raise InputError(f"--matrix: {e}") from e
        C = matcore.cayley(M)
        return {"n": M.shape[0], "cayley": [[[float(z.real), float(z.imag)] for z in row] for row in C]}, True
    F = load_function(args)
    report = {}
    if isinstance(F, SisoRational):
        report["siso"] = F.cayley().to_dict()
        F = as_realization(F)
    report["realization"] = cayley_realization(F).to_dict()
    return report, True


def cmd_circle(args) -> tuple[dict, bool]:
    sector = stability.Sector(_number(args.k, "--k"), _number(args.K, "--K"))
    report = {"k": sector.k, "K": sector.K, "f": stability.circle_transform(sector).to_dict()}
    ok = True
    if sector.is_positive and sector.k < sector.K:
        f_eta, eta, a = stability.circle_transform_eta(sector)
        report.update({"eta": eta.value, "a": a, "f_eta": f_eta.to_dict()})
    if args.plant:
        loop = stability.LurieLoop(_load_plant(args.plant), sector)
        check = stability.absolute_stability_check(loop)
        report["stability"] = check.to_dict()
        ok = check.criterion_holds
    return report, ok


def _nonlinearity(name: str, sector: stability.Sector) -> stability.Nonlinearity:
    if name == "linear":
        return stability.linear_gain(0.5 * (sector.k + sector.K))
    return stability.NONLINEARITIES[name](sector)


def cmd_simulate(args) -> tuple[dict, bool]:
    sector = stability.Sector(_number(args.k, "--k"), _number(args.K, "--K"))
    plant = _load_plant(args.plant)
    loop = stability.LurieLoop(plant, sector, _nonlinearity(args.nonlinearity, sector))
    n = as_realization(plant).n
    if args.x0:
        x0 = np.asarray(load_json_arg(args.x0, "--x0"), dtype=float)
        if x0.size != n:
            raise InputError(f"--x0: expected {n} entries, got {x0.size}")
    else:
        x0 = np.random.default_rng(args.seed).standard_normal(n)
    dt = _number(args.dt, "--dt") if args.dt else None
    traj = stability.simulate_lurie(loop, x0, _number(args.T, "--T"), dt)
    if args.csv:
        stability.write_trajectory_csv(traj, args.csv)
    report = {
        "nonlinearity": loop.nonlinearity.to_dict(),
        "trajectory": traj.to_dict(),
        "criterion": stability.absolute_stability_check(loop).to_dict(),
    }
    return report, not traj.diverged


def cmd_di_simulate(args) -> tuple[dict, bool]:
    summary = stability.monte_carlo_difference_inclusion(
        parse_eta(args.eta), args.n, args.steps, args.seeds, args.seed, progress=args.progress
    )
    return summary.to_dict(), summary.violations == 0


def cmd_rlc(args) -> tuple[dict, bool]:
    if args.R is not None:
        circuit = circuits.RlcDegreeOne(
            R=_number(args.R, "--R"),
            C=_number(args.C, "--C"),
            Rs=_number(args.Rs, "--Rs"),
        )
    else:
        if args.eta is None or args.a is None:
            raise InputError("--eta and --a are required unless --R, --C and --Rs are given")
        circuit = circuits.synthesize(parse_eta(args.eta), _number(args.a, "--a"))
    f, eta, a = circuits.analyze(circuit)
    netlist = circuits.netlist(circuit)
    if args.netlist:
        Path(args.netlist).write_text(netlist + "\n")
    report = {
        "R": circuit.R,
        "C": circuit.C,
        "Rs": circuit.Rs,
        "eta": eta.value,
        "a": a,
        "impedance": f.to_dict(),
        "netlist": netlist.splitlines(),
    }
    return report, True


def _write_svg(values: np.ndarray, eta: EtaParam | None, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    ax.plot(values.real, values.imag)
    ax.plot(values.real, -values.imag)
    if eta is not None and not eta.is_infinite:
        theta = np.linspace(0.0, 2.0 * np.pi, 721)
        rho = eta.radius
        ax.plot(rho * np.cos(theta), rho * np.sin(theta))
        r = math.sqrt(eta.value**2 - 1.0)
        ax.plot(eta.value + r * np.cos(theta), r * np.sin(theta))
    ax.set_aspect("equal")
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Nyquist plot written to {path}")


def cmd_nyquist(args) -> tuple[dict, bool]:
    R = minimize(as_realization(load_function(args)))
    if R.m != 1:
        raise InputError("--siso/--realization: nyquist needs a scalar function")
    omega_min, omega_max = _number(args.omega_min, "--omega-min"), _number(args.omega_max, "--omega-max")
    if not 0 < omega_min < omega_max:
        raise InputError(f"--omega-min/--omega-max: need 0 < min < max, got {omega_min}, {omega_max}")
    omegas = np.logspace(math.log10(omega_min), math.log10(omega_max), args.points)
    values = classify.response(R, 1j * omegas)[:, 0, 0]
    pd.DataFrame({"omega": omegas, "re": values.real, "im": values.imag}).to_csv(args.csv, index=False)
    logger.info(f"Nyquist samples written to {args.csv}")

    eta = parse_eta(args.eta) if args.eta else None
    report = {"csv": args.csv, "points": int(args.points)}
    ok = True
    if eta is not None:
        dominance = classify.nyquist_dominated(eta, R)
        report.update({"eta": eta.to_json(), "contained": dominance.contained, "max_excess": dominance.max_excess})
        ok = dominance.contained
    if args.svg:
        _write_svg(values, eta, args.svg)
        report["svg"] = args.svg
    return report, ok


def cmd_sets_check(args) -> tuple[dict, bool]:
    rng = np.random.default_rng(args.seed)
    if args.H:
        try:
            H = np.array(load_json_arg(args.H, "--H"), dtype=complex)
        except (ValueError, TypeError) as e:
            raise InputError(f"--H: {e}") from e
    else:
        H = matcore.random_pd(args.n, rng)
    report = sets.nested_inclusion_check(
        H, parse_eta(args.eta_small, "--eta-small"), parse_eta(args.eta_large, "--eta-large"), args.samples, rng
    )
    return report.to_dict(), report.failures == 0


def _function_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--siso", type=str, help='Scalar function as JSON {"num": [...], "den": [...]} or a file')
    group.add_argument("--realization", type=str, help="Realization JSON (n, m, A, B, C, D) or a file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperreal", description="HP_eta / HB_eta analysis of rational functions")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default=None, help="Write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="P / SP / HP flags and the sharpest eta")
    _function_args(p)
    p.add_argument("--require", choices=["P", "SP", "HP"], default="HP", help="Class deciding the exit code")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("eta", parents=[common], help="Sharpest eta with F in HP_eta")
    _function_args(p)
    p.add_argument("--eta", type=str, default=None, help="Also test membership in HP_eta")
    p.set_defaults(handler=cmd_eta)

    p = sub.add_parser("kyp-verify", parents=[common], help="Check a user supplied certificate H")
    _function_args(p)
    p.add_argument("--H", type=str, required=True, help="n x n matrix as JSON rows or a file")
    p.add_argument("--eta", type=str, default="inf", help="eta (p/q allowed) or inf for the classical lemma")
    p.set_defaults(handler=cmd_kyp_verify)

    p = sub.add_parser("kyp-search", parents=[common], help="Search a certificate H by Riccati equation")
    _function_args(p)
    p.add_argument("--eta", type=str, default="inf")
    p.set_defaults(handler=cmd_kyp_search)

    p = sub.add_parser("cayley", parents=[common], help="Cayley transform of a function or a matrix")
    _function_args(p)
    p.add_argument("--matrix", type=str, default=None, help="Square matrix as JSON rows")
    p.set_defaults(handler=cmd_cayley)

    p = sub.add_parser("circle", parents=[common], help="Circle-criterion transforms and stability check")
    p.add_argument("--k", type=str, required=True)
    p.add_argument("--K", type=str, required=True)
    p.add_argument("--plant", type=str, default=None, help="Plant h(s) as SISO JSON")
    p.set_defaults(handler=cmd_circle)

    p = sub.add_parser("simulate", parents=[common], help="RK4 simulation of a Lurie loop")
    p.add_argument("--plant", type=str, required=True)
    p.add_argument("--k", type=str, required=True)
    p.add_argument("--K", type=str, required=True)
    p.add_argument("--nonlinearity", choices=["linear", *stability.NONLINEARITIES], default="saturation")
    p.add_argument("--x0", type=str, default=None, help="Initial state as JSON list (random from --seed if omitted)")
    p.add_argument("--T", type=str, default="50")
    p.add_argument("--dt", type=str, default=None)
    p.add_argument("--csv", type=str, default=None, help="Trajectory CSV path")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("di-simulate", parents=[common], help="Difference-inclusion decay bound over seeds")
    p.add_argument("--eta", type=str, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--seed", type=int, required=True, help="First seed")
    p.add_argument("--progress", action="store_true", help="Show a progress bar on stderr")
    p.set_defaults(handler=cmd_di_simulate)

    p = sub.add_parser("rlc", parents=[common], help="Degree-one RC impedance synthesis / analysis")
    p.add_argument("--eta", type=str, default=None)
    p.add_argument("--a", type=str, default=None)
    p.add_argument("--R", type=str, default=None)
    p.add_argument("--C", type=str, default=None)
    p.add_argument("--Rs", type=str, default=None)
    p.add_argument("--netlist", type=str, default=None, help="Write the netlist text here")
    p.set_defaults(handler=cmd_rlc)

    p = sub.add_parser("nyquist", parents=[common], help="Nyquist samples as CSV, optionally SVG")
    _function_args(p)
    p.add_argument("--csv", type=str, required=True)
    p.add_argument("--svg", type=str, default=None)
    p.add_argument("--eta", type=str, default=None, help="Check the image lies in D(eta, sqrt(eta^2-1))")
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--omega-min", dest="omega_min", type=str, default="1e-3")
    p.add_argument("--omega-max", dest="omega_max", type=str, default="1e3")
    p.set_defaults(handler=cmd_nyquist)

    p = sub.add_parser("sets-check", parents=[common], help="Sampled nesting Stein_H(eta_small) in Stein_H(eta_large)")
    p.add_argument("--eta-small", dest="eta_small", type=str, required=True)
    p.add_argument("--eta-large", dest="eta_large", type=str, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--H", type=str, default=None, help="H as JSON rows (random PD if omitted)")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(handler=cmd_sets_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Parses the command line, runs one subcommand and returns its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if e.code in (0, None):
            return EXIT_OK
        logger.error(f"Argument parsing failed: {e}")
        return EXIT_INPUT

    try:
        report, ok = args.handler(args)
    except NoCertificateError as e:
        logger.info(f"No certificate: {e}")
        report = {"verdict": "NoCertificate", "message": str(e), "eta_star": e.eta_star, "gap": e.gap}
        write_report(report, args.out)
        return EXIT_FALSE
    except UnstablePolesError as e:
        logger.info(f"Not hyper-positive: {e}")
        write_report({"verdict": "NotHyperPositive", "message": str(e), "witness": e.pole}, args.out)
        return EXIT_FALSE
    except HamiltonianImaginaryAxisError as e:
        logger.error(f"Certificate search failed at a critical eta: {e}")
        write_report({"verdict": "Fails", "message": str(e)}, args.out)
        return EXIT_FALSE
    except NumericError as e:
        logger.error(f"Numerical failure in {args.command}: {e}")
        return EXIT_INTERNAL
    except (ValueError, FileNotFoundError, HyperRealError) as e:
        logger.error(f"Invalid input for {args.command}: {e}")
        return EXIT_INPUT
    except Exception as e:
        logger.error(f"Internal error in {args.command} (not an input problem): {e}")
        logger.error(f"Traceback: {traceback.format_exc()}")
        return EXIT_INTERNAL

    write_report(report, args.out)
    return EXIT_OK if ok else EXIT_FALSE


if __name__ == "__main__":
    sys.exit(main())
