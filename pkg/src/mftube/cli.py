"""Command-line interface.

Single entry point exposing every computation as a subcommand with JSON
system input and CSV/JSON output.  Exit codes: 0 success, 2 validation
failure, 3 numeric failure; errors are serialized to stderr as JSON with
stable codes.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from mftube import __version__, kernel_backend
from mftube import exponents, symbolic, tube, zeta
from mftube.errors import InvalidConfig, MFTubeError
from mftube.ifs import (SelfSimilarSystem, load_system, validate_system,
                        word_from_string)

COMMANDS = ("exponents", "spectrum", "tube", "symbolic", "zeta-poles",
            "verify-thm57", "verify-residue-sum", "verify-renewal")


@dataclass
class RunConfig:
    command: str
    system_path: str
    system: SelfSimilarSystem
    format: str = "csv"
    output: str = "-"
    seed: int = 0
    threads: int = 1
    params: dict = field(default_factory=dict)


def _parse_grid(text: str, kind: str) -> tuple[float, float, int]:
    try:
        lo_s, hi_s, n_s = text.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise InvalidConfig(
            f"bad {kind} grid {text!r}; expected lo:hi:{kind}") from exc
    if not lo < hi:
        raise InvalidConfig(f"grid {text!r} needs lo < hi")
    if n < 2 and kind == "count":
        raise InvalidConfig(f"grid {text!r} needs count >= 2")
    if n < 1:
        raise InvalidConfig(f"grid {text!r} needs a positive density")
    return lo, hi, n


def q_values(args) -> list[float]:
    if getattr(args, "q_grid", None):
        lo, hi, n = _parse_grid(args.q_grid, "count")
        return [float(x) for x in np.linspace(lo, hi, n)]
    if getattr(args, "q", None) is not None:
        return [float(args.q)]
    raise InvalidConfig("provide --q or --q-grid")


def r_values(args, default=None) -> list[float]:
    if getattr(args, "r_grid", None):
        lo, hi, ppd = _parse_grid(args.r_grid, "points-per-decade")
        if lo <= 0:
            raise InvalidConfig("r grid needs lo > 0")
        n = max(2, int(round(ppd * math.log10(hi / lo))) + 1)
        return [float(x) for x in np.geomspace(lo, hi, n)]
    if getattr(args, "r", None) is not None:
        return [float(args.r)]
    if default is not None:
        return default
    raise InvalidConfig("provide --r or --r-grid")


def resolve_kappa(system, q, spec_text: str) -> symbolic.KappaVector:
    if spec_text in (None, "auto"):
        return symbolic.default_kappa(system, q)
    try:
        values = [float(x) for x in spec_text.split(",")]
    except ValueError as exc:
        raise InvalidConfig(
            f"bad --kappa {spec_text!r}; expected 'auto' or v0,v1,...") \
            from exc
    return symbolic.kappa_from_values(system, q, values)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def emit(config: RunConfig, columns: list[str], rows: list[dict]) -> None:
    meta = {
        "tool": f"mftube {__version__}",
        "command": config.command,
        "system": config.system_path,
        "seed": config.seed,
        "kernel_backend": kernel_backend,
    }
    if config.format == "csv":
        buf = io.StringIO()
        for key, val in meta.items():
            buf.write(f"# {key}={val}\n")
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(row[c]) for c in columns) + "\n")
        text = buf.getvalue()
    else:
        text = json.dumps({"metadata": meta,
                           "columns": columns,
                           "rows": rows}, indent=2) + "\n"
    if config.output == "-":
        sys.stdout.write(text)
    else:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Subcommand implementations


def cmd_exponents(config: RunConfig, args) -> None:
    system = config.system
    rows = []
    word = (word_from_string(system, args.gamma_word)
            if args.gamma_word else None)
    for q in q_values(args):
        prof = exponents.profile(system, q, excluded_word=word)
        row = {"q": q, "beta": prof.beta, "alpha": prof.alpha,
               "beta_residual": prof.beta_residual}
        if word is not None:
            row["gamma"] = prof.gamma
        rows.append(row)
    cols = ["q", "beta", "alpha", "beta_residual"]
    if word is not None:
        cols.append("gamma")
    emit(config, cols, rows)


def cmd_spectrum(config: RunConfig, args) -> None:
    system = config.system
    lo, hi, n = _parse_grid(args.alpha_grid, "count")
    alphas = np.linspace(lo, hi, n)
    q_lo, q_hi, n_q = _parse_grid(args.q_grid, "count")
    qs = np.linspace(q_lo, q_hi, n_q)
    samples = [(q, exponents.beta(system, q)) for q in qs]
    rows = [{"alpha": float(a),
             "f_alpha": exponents.legendre(samples, float(a))}
            for a in alphas]
    emit(config, ["alpha", "f_alpha"], rows)


def cmd_tube(config: RunConfig, args) -> None:
    system = config.system
    rows = []
    for q in q_values(args):
        for r in r_values(args):
            if args.method == "montecarlo" or (
                    args.method == "auto" and system.dimension > 1):
                est = tube.tube_volume_mc_merged(
                    system, q, r, samples=args.samples, rng_seed=config.seed,
                    depth_cap=args.depth_cap, threads=config.threads)
            elif args.method == "exact1d" or (
                    args.method == "auto" and q == 0.0):
                est = tube.tube_volume_exact_1d(system, r)
            else:
                est = tube.tube_volume_quadrature_1d(
                    system, q, r, depth_cap=args.depth_cap)
            rows.append({"r": r, "q": q, "value": est.value,
                         "stderr": est.stderr if est.stderr is not None
                         else float("nan"),
                         "method": est.method})
    emit(config, ["r", "q", "value", "stderr", "method"], rows)


def cmd_symbolic(config: RunConfig, args) -> None:
    system = config.system
    d = system.dimension
    rows = []
    cols = ["r", "q", "V_sym"]
    cols += [f"C_{l}" for l in range(d + 1)]
    cols += [f"contrib_{l}" for l in range(d + 1)]
    for q in q_values(args):
        kappa = resolve_kappa(system, q, args.kappa)
        for r in r_values(args):
            sv = symbolic.symbolic_volume(system, q, r, kappa)
            row = {"r": r, "q": q, "V_sym": sv.value}
            for l, (c_l, contrib) in enumerate(sv.per_l):
                row[f"C_{l}"] = c_l
                row[f"contrib_{l}"] = contrib
            rows.append(row)
    emit(config, cols, rows)


def cmd_zeta_poles(config: RunConfig, args) -> None:
    system = config.system
    rows = []
    for q in q_values(args):
        poles = zeta.find_poles(system, q, args.imag_max,
                                method=args.method,
                                re_margin=args.re_margin,
                                rng_seed=config.seed)
        for p in poles:
            rows.append({
                "re": p.location.real, "im": p.location.imag,
                "residue_re": p.residue_zeta.real,
                "residue_im": p.residue_zeta.imag,
                "winding": p.winding, "simple": p.simple,
            })
    emit(config, ["re", "im", "residue_re", "residue_im", "winding",
                  "simple"], rows)


def cmd_verify_thm57(config: RunConfig, args) -> None:
    system = config.system
    q = float(args.q)
    kappa = resolve_kappa(system, q, args.kappa)
    b = exponents.beta(system, q)
    arith = exponents.arithmetic_structure(system)
    rows = []
    if arith.is_arithmetic:
        u = float(arith.u)
        offset = 0.5 * (1.0 + system.r_min)
        n_steps = max(2, int(math.ceil(args.r_decades * math.log(10) / u)))
        r_list = [offset * math.exp(-u * n) for n in range(1, n_steps + 1)]
    else:
        hi = 0.9 * system.r_min
        lo = hi * 10.0 ** (-args.r_decades)
        r_list = list(np.geomspace(hi, lo, 8 * args.r_decades))
    for r in r_list:
        direct = symbolic.symbolic_volume(system, q, r, kappa).value * r ** b
        if arith.is_arithmetic:
            limit = symbolic.closed_form_periodic(system, q, kappa, r)
        else:
            limit = symbolic.closed_form_constant(system, q, kappa)
        rows.append({"r": r, "direct_normalized": direct,
                     "closed_form": limit,
                     "abs_error": abs(direct - limit)})
    emit(config, ["r", "direct_normalized", "closed_form", "abs_error"],
         rows)


def cmd_verify_residue_sum(config: RunConfig, args) -> None:
    system = config.system
    q = float(args.q)
    kappa = resolve_kappa(system, q, args.kappa)
    r = float(args.r) if args.r is not None else 0.5 * system.r_min ** 2
    direct = symbolic.symbolic_volume(system, q, r, kappa).value
    poles = zeta.find_poles(system, q, args.imag_max, method="auto",
                            rng_seed=config.seed)
    rows = []
    steps = max(2, args.steps)
    for im in np.geomspace(args.imag_max / 2 ** (steps - 1), args.imag_max,
                           steps):
        rec = zeta.residue_sum_reconstruction(system, q, kappa, r,
                                              float(im), poles=poles)
        rows.append({"imag_max": float(im), "reconstruction": rec.value,
                     "direct": direct,
                     "error": abs(rec.value - direct)})
    emit(config, ["imag_max", "reconstruction", "direct", "error"], rows)


def cmd_verify_renewal(config: RunConfig, args) -> None:
    system = config.system
    q = float(args.q)
    b = exponents.beta(system, q)
    evaluator = tube.make_evaluator(system, method=args.method,
                                    samples=args.samples, seed=config.seed)
    default_grid = [float(x) for x in
                    np.geomspace(system.r_min ** 6, 1.0, 200)]
    grid = sorted(r_values(args, default=default_grid), reverse=True)
    content = tube.minkowski_content(system, q, evaluator, grid)
    rows = []
    log_s = []
    vals = []
    for r in grid:
        v = evaluator(q, r)
        log_s.append(math.log(r))
        vals.append(r ** b * v)
        if len(vals) >= 2:
            running = float(np.trapezoid(vals[::-1], log_s[::-1])
                            / (math.log(grid[0]) - math.log(r)))
        else:
            running = vals[0]
        rows.append({"r": r, "scaled_volume": r ** b * v,
                     "running_log_average": running,
                     "renewal_constant": content.renewal_constant})
    emit(config, ["r", "scaled_volume", "running_log_average",
                  "renewal_constant"], rows)


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mftube",
        description="Multifractal tube quantities of self-similar measures")
    parser.add_argument("--version", action="version",
                        version=f"mftube {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", required=True, help="system JSON file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", default="-",
                       help="output path ('-' for stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("exponents", help="beta/alpha (optionally gamma) on "
                       "a q grid")
    common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--q-grid", help="lo:hi:count")
    p.add_argument("--gamma-word",
                   help="excluded word (digits over 1..N) enabling gamma")

    p = sub.add_parser("spectrum", help="multifractal spectrum f(alpha) by "
                       "Legendre transform")
    common(p)
    p.add_argument("--alpha-grid", required=True, help="lo:hi:count")
    p.add_argument("--q-grid", default="-10:10:401", help="lo:hi:count")

    p = sub.add_parser("tube", help="multifractal Minkowski volumes")
    common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--q-grid", help="lo:hi:count")
    p.add_argument("--r", type=float)
    p.add_argument("--r-grid", help="lo:hi:points-per-decade")
    p.add_argument("--method", default="auto",
                   choices=("auto", "exact1d", "quadrature1d", "montecarlo"))
    p.add_argument("--samples", type=int, default=10 ** 4)
    p.add_argument("--depth-cap", type=int, default=60)

    p = sub.add_parser("symbolic", help="symbolic multifractal Minkowski "
                       "volumes")
    common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--q-grid", help="lo:hi:count")
    p.add_argument("--r", type=float)
    p.add_argument("--r-grid", help="lo:hi:points-per-decade")
    p.add_argument("--kappa", default="auto",
                   help="'auto' or comma-separated v0,...,vd")

    p = sub.add_parser("zeta-poles", help="poles and residues of the "
                       "multifractal zeta function")
    common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--q-grid", help="lo:hi:count")
    p.add_argument("--imag-max", type=float, default=100.0)
    p.add_argument("--re-margin", type=float, default=0.25)
    p.add_argument("--method", default="auto",
                   choices=("arithmetic", "general", "auto"))

    p = sub.add_parser("verify-thm57", help="direct symbolic volume vs "
                       "closed-form asymptotics")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--r-decades", type=int, default=4)
    p.add_argument("--kappa", default="auto")

    p = sub.add_parser("verify-residue-sum", help="residue-sum "
                       "reconstruction vs direct symbolic volume")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--imag-max", type=float, default=500.0)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--kappa", default="auto")

    p = sub.add_parser("verify-renewal", help="scaled tube volumes, their "
                       "log average, and the renewal constant")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--r-grid", help="lo:hi:points-per-decade")
    p.add_argument("--method", default="auto",
                   choices=("auto", "exact1d", "quadrature1d", "montecarlo"))
    p.add_argument("--samples", type=int, default=10 ** 4)

    return parser


HANDLERS = {
    "exponents": cmd_exponents,
    "spectrum": cmd_spectrum,
    "tube": cmd_tube,
    "symbolic": cmd_symbolic,
    "zeta-poles": cmd_zeta_poles,
    "verify-thm57": cmd_verify_thm57,
    "verify-residue-sum": cmd_verify_residue_sum,
    "verify-renewal": cmd_verify_renewal,
}


def run(config: RunConfig, args) -> int:
    HANDLERS[config.command](config, args)
    return 0


_VALUE_FLAGS = ("--q-grid", "--r-grid", "--alpha-grid", "--q", "--r")


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join '--q-grid -5:5:101' into '--q-grid=-5:5:101' so argparse does
    not mistake negative grid bounds for option names."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok in _VALUE_FLAGS and i + 1 < len(argv)
                and argv[i + 1].startswith("-")
                and len(argv[i + 1]) > 1
                and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_negative_values(list(argv)))
    try:
        system = load_system(args.system)
        report = validate_system(system)
        if not report.valid:
            raise InvalidConfig("; ".join(report.errors))
        config = RunConfig(command=args.command, system_path=args.system,
                           system=system, format=args.format,
                           output=args.output, seed=args.seed,
                           threads=args.threads)
        return run(config, args)
    except MFTubeError as exc:
        sys.stderr.write(json.dumps(exc.payload()) + "\n")
        return exc.exit_status
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "IOError",
                                     "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
