"""Línea de comandos de skfeedback.

Subcomandos:
    gap-curve        Curvas de gap de capacidad frente al número de rondas (CSV o JSON).
    theorem          Cota analítica del gap y su aproximación de SNR alta (JSON).
    simulate         Simulación Monte Carlo de un esquema (JSON).
    verify-coupling  Comprobación exacta del sistema acoplado (JSON).
    tradeoff         Comparación de ancho de banda frente a un código de sentido único (JSON).

Códigos de salida: 0 éxito, 1 uso incorrecto, 2 no factible / suelo de error / violación.
"""

import argparse
import io
from pathlib import Path
import sys
import time

import pandas as pd

from skfeedback.core.analysis import (
    REFERENCE_PAM_SLACK,
    bandwidth_crossover,
    bandwidth_tradeoff,
    gap_curve,
    pe_budget_terms,
    theorem1_approx_gap,
    theorem1_gap,
)
from skfeedback.core.montecarlo import RngSpec, audit_budget, audit_power, estimate, variance_profile, verify_coupling
from skfeedback.core.numerics import from_db
from skfeedback.core.pam import gamma0
from skfeedback.core.plotter import GapPlotter
from skfeedback.core.schemes import SchemeFactory
from skfeedback.core.system import SystemConfig, derive_params
from skfeedback.errors import (
    ConfigError,
    CouplingViolation,
    DomainError,
    ErrorFloorError,
    InfeasibleError,
    UsageError,
)
from skfeedback.utils import (
    REFERENCE_CURVES_FILE,
    SYSTEMS_FILE,
    RunManifest,
    configure_logging,
    dsnr_from_db,
    dump_json,
    load_curve_sets,
    load_systems,
    log,
    system_from_attributes,
    write_output,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
CSV_COLUMNS = ["dsnr_db", "n", "snr_db", "gap_db", "feasible"]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser que termina con código 1 ante un uso incorrecto."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parameters(args: argparse.Namespace) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in ("handler", "verbose", "quiet")}


def cmd_gap_curve(args: argparse.Namespace) -> int:
    if args.curve_set is not None:
        sets = load_curve_sets(args.curve_set_file)
        if args.curve_set not in sets:
            raise UsageError(f"El conjunto de curvas '{args.curve_set}' no existe. Disponibles: {list(sets.keys())}")
        chosen = sets[args.curve_set]
        rate, pe, n_max = float(chosen["rate"]), float(chosen["pe"]), int(chosen["n_max"])
        dsnr_list = [c["dsnr_db"] for c in chosen["curves"]]
        convention = chosen.get("convention", args.convention)
    else:
        if args.rate is None:
            raise UsageError("--rate es obligatorio si no se usa --curve-set")
        rate, pe, n_max, convention = args.rate, args.pe, args.n_max, args.convention
        dsnr_list = list(args.dsnr_db or [])
        if args.noiseless:
            dsnr_list.append(None)
    if not dsnr_list:
        raise UsageError("indique al menos un --dsnr-db o --noiseless")
    if n_max < 1:
        raise UsageError(f"--n-max debe ser >= 1, recibido {n_max}")

    pam_slack = args.pam_slack
    if convention == "reference":
        convention, pam_slack = "target_rate", REFERENCE_PAM_SLACK

    curves = []
    for dsnr_db in dsnr_list:
        log(f"Calculando curva R={rate} pe={pe} dSNR={dsnr_db} dB hasta N={n_max}")
        curves.append(gap_curve(rate, pe, dsnr_from_db(dsnr_db), n_max, convention=convention, pam_slack=pam_slack))

    manifest = RunManifest.create("gap-curve", _parameters(args))
    if args.plot is not None:
        plotter = GapPlotter()
        plotter.add_curves(curves)
        plotter.plot(args.plot, title=f"Capacity gap, R={rate:g}, pe={pe:g}")

    if args.format == "json":
        payload = {
            "manifest": manifest.to_dict(),
            "curves": [
                {
                    "dsnr_db": curve.dsnr_db,
                    "n_opt": curve.n_opt,
                    "points": _curve_rows(curve, n_max),
                }
                for curve in curves
            ],
        }
        write_output(dump_json(payload), args.out)
        return EXIT_OK

    rows = [row for curve in curves for row in _curve_rows(curve, n_max)]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    frame["feasible"] = frame["feasible"].map({True: "true", False: "false"})
    buffer = io.StringIO()
    for key, value in manifest.to_dict().items():
        buffer.write(f"# {key}: {value}\n")
    frame.to_csv(buffer, index=False, lineterminator="\n", float_format="%.10g")
    for curve in curves:
        buffer.write(f"# n_opt dsnr_db={curve.dsnr_db:g}: {curve.n_opt if curve.n_opt is not None else ''}\n")
    write_output(buffer.getvalue(), args.out)
    return EXIT_OK


def _curve_rows(curve, n_max: int) -> list[dict]:
    points = {p.n_rounds: p for p in curve.points}
    rows = []
    for n in range(1, n_max + 1):
        point = points.get(n)
        rows.append({
            "dsnr_db": curve.dsnr_db,
            "n": n,
            "snr_db": None if point is None else point.snr_db,
            "gap_db": None if point is None else point.gap_db,
            "feasible": point is not None,
        })
    return rows


def cmd_theorem(args: argparse.Namespace) -> int:
    snr = from_db(args.snr_db)
    dsnr = dsnr_from_db(args.dsnr_db)
    terms = theorem1_gap(args.pe, args.rounds, snr, dsnr)
    payload = {
        "manifest": RunManifest.create("theorem", _parameters(args)).to_dict(),
        "theorem": terms.to_dict(),
        "approx_gap_db": theorem1_approx_gap(args.pe, args.rounds, dsnr),
        "gamma0_db": gamma0(args.pe / 2.0),
    }
    write_output(dump_json(payload), args.out)
    return EXIT_OK


def _system_from_args(args: argparse.Namespace) -> SystemConfig:
    attributes = {}
    if args.system is not None:
        systems = load_systems(args.config)
        if args.system not in systems:
            raise UsageError(f"El sistema '{args.system}' no existe en {args.config}. Disponibles: {list(systems.keys())}")
        attributes.update(systems[args.system])
    overrides = {"snr_db": args.snr_db, "rounds": args.rounds, "rate": args.rate, "pe": args.pe, "pm": args.pm}
    attributes.update({k: v for k, v in overrides.items() if v is not None})
    if args.noiseless:
        attributes["dsnr_db"] = None
    elif args.dsnr_db is not None:
        attributes["dsnr_db"] = args.dsnr_db
    attributes.setdefault("dsnr_db", None)
    attributes.setdefault("pe", 1e-2)
    missing = [k for k in ("snr_db", "rounds", "rate") if attributes.get(k) is None]
    if missing:
        raise UsageError(f"faltan parámetros del sistema: {missing}")
    return system_from_attributes(attributes)


def _check_trials(trials: int) -> None:
    if trials < 1:
        raise UsageError(f"--trials debe ser >= 1, recibido {trials}")


def cmd_simulate(args: argparse.Namespace) -> int:
    _check_trials(args.trials)
    cfg = _system_from_args(args)
    rng = RngSpec(args.seed)
    tic = time.time()
    result = estimate(args.scheme, cfg, args.trials, rng, workers=args.workers)
    payload = {
        "manifest": RunManifest.create("simulate", _parameters(args), seed=args.seed).to_dict(),
        "config": cfg.to_dict(),
        "result": result.to_dict(),
        "power_audit": audit_power(result, cfg),
    }
    if args.scheme in ("proposed", "coupled"):
        payload["budget"] = audit_budget(result, cfg)
        terms = pe_budget_terms(cfg.snr, cfg.snr_fb, cfg.dsnr, cfg.N, cfg.rate_bits_per_use, cfg.aliasing_budget)
        payload["budget"].update(aliasing_term=terms.aliasing, pam_term=terms.pam)
    if args.variance_profile:
        profile = variance_profile(args.scheme, cfg, args.trials, rng, workers=args.workers)
        expected = derive_params(cfg).sigma_n2.tolist() if args.scheme != "uncoded" else [1.0 / cfg.snr]
        payload["variance_profile"] = {
            "variance": profile.variance,
            "standard_error": profile.standard_error,
            "expected": expected,
        }
    log(f"Simulación terminada en {time.time() - tic:.1f} s")
    write_output(dump_json(payload), args.out)
    return EXIT_OK


def cmd_verify_coupling(args: argparse.Namespace) -> int:
    _check_trials(args.trials)
    cfg = _system_from_args(args)
    report = verify_coupling(cfg, args.trials, RngSpec(args.seed), workers=args.workers)
    payload = {
        "manifest": RunManifest.create("verify-coupling", _parameters(args), seed=args.seed).to_dict(),
        "report": report.to_dict(),
    }
    write_output(dump_json(payload), args.out)
    report.raise_for_violations()
    return EXIT_OK


def cmd_tradeoff(args: argparse.Namespace) -> int:
    comparison = bandwidth_tradeoff(args.snr_db, args.gap_star_db, args.gap_fec_db)
    payload = {
        "manifest": RunManifest.create("tradeoff", _parameters(args)).to_dict(),
        "snr_db": comparison.snr_db,
        "interactive_rate": comparison.interactive_rate,
        "full_band_rate": comparison.full_band_rate,
        "interactive_wins": comparison.interactive_wins,
        "crossover_snr_db": bandwidth_crossover(args.gap_star_db, args.gap_fec_db),
    }
    write_output(dump_json(payload), args.out)
    return EXIT_OK


def _add_system_flags(sub: argparse.ArgumentParser, default_scheme: bool = False) -> None:
    sub.add_argument("--config", type=Path, default=SYSTEMS_FILE,
                     help="Fichero JSON con sistemas con nombre.")
    sub.add_argument("--system", type=str, default=None,
                     help="Nombre del sistema a cargar de --config; los demás parámetros lo sobrescriben.")
    sub.add_argument("--snr-db", type=float, default=None, help="SNR del canal directo en dB.")
    sub.add_argument("--dsnr-db", type=float, default=None,
                     help="Exceso de SNR del canal de realimentación en dB.")
    sub.add_argument("--noiseless", action="store_true", help="Realimentación sin ruido.")
    sub.add_argument("--rate", type=float, default=None, help="Tasa R en bits por uso del canal.")
    sub.add_argument("--rounds", type=int, default=None, help="Número de rondas N.")
    sub.add_argument("--pe", type=float, default=None, help="Probabilidad de error objetivo (por defecto 1e-2).")
    sub.add_argument("--pm", type=float, default=None, help="Probabilidad de aliasing por ronda (por defecto pe/(2N)).")
    sub.add_argument("--trials", type=int, default=10000, help="Número de ensayos.")
    sub.add_argument("--seed", type=int, default=1, help="Semilla maestra.")
    sub.add_argument("--workers", type=int, default=1, help="Número de procesos.")
    sub.add_argument("--out", type=Path, default=None, help="Fichero de salida (por defecto stdout).")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="skfeedback",
        description="Análisis y simulación del esquema S-K con aritmética modular y realimentación ruidosa.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Más mensajes de log.")
    parser.add_argument("-q", "--quiet", action="store_true", help="Solo avisos y errores.")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = subparsers.add_parser("gap-curve", help="Curvas de gap de capacidad.")
    sub.add_argument("--rate", type=float, default=None, help="Tasa R en bits por uso del canal.")
    sub.add_argument("--pe", type=float, default=1e-6, help="Probabilidad de error objetivo.")
    sub.add_argument("--dsnr-db", type=float, action="append", default=None,
                     help="ΔSNR en dB; repetible para varias curvas.")
    sub.add_argument("--noiseless", action="store_true", help="Añade la curva con realimentación sin ruido.")
    sub.add_argument("--n-max", type=int, default=36, help="Número máximo de rondas.")
    sub.add_argument("--convention", choices=["budget", "target_rate", "reference"], default="budget",
                     help="Criterio de búsqueda del SNR requerido.")
    sub.add_argument("--pam-slack", type=float, default=1.0, help="Holgura del término PAM para target_rate.")
    sub.add_argument("--curve-set", type=str, default=None, help="Conjunto de curvas con nombre.")
    sub.add_argument("--curve-set-file", type=Path, default=REFERENCE_CURVES_FILE,
                     help="Fichero JSON con conjuntos de curvas.")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--out", type=Path, default=None, help="Fichero de salida (por defecto stdout).")
    sub.add_argument("--plot", type=Path, default=None, help="Guarda además una figura PNG de las curvas.")
    sub.set_defaults(handler=cmd_gap_curve)

    sub = subparsers.add_parser("theorem", help="Cota analítica del gap de capacidad.")
    sub.add_argument("--pe", type=float, default=1e-6)
    sub.add_argument("--rounds", type=int, required=True)
    sub.add_argument("--snr-db", type=float, required=True)
    sub.add_argument("--dsnr-db", type=float, default=None, help="ΔSNR en dB; omitido = sin ruido.")
    sub.add_argument("--out", type=Path, default=None)
    sub.set_defaults(handler=cmd_theorem)

    sub = subparsers.add_parser("simulate", help="Simulación Monte Carlo.")
    sub.add_argument("--scheme", choices=SchemeFactory.names(), required=True)
    sub.add_argument("--variance-profile", action="store_true", help="Añade la varianza empírica por ronda.")
    _add_system_flags(sub)
    sub.set_defaults(handler=cmd_simulate)

    sub = subparsers.add_parser("verify-coupling", help="Comprobación del sistema acoplado.")
    _add_system_flags(sub)
    sub.set_defaults(handler=cmd_verify_coupling)

    sub = subparsers.add_parser("tradeoff", help="Compromiso de ancho de banda.")
    sub.add_argument("--snr-db", type=float, required=True)
    sub.add_argument("--gap-star-db", type=float, required=True, help="Gap del esquema interactivo en dB.")
    sub.add_argument("--gap-fec-db", type=float, default=None,
                     help="Gap del código de sentido único en dB (por defecto PAM sin codificar a 1e-6).")
    sub.add_argument("--out", type=Path, default=None)
    sub.set_defaults(handler=cmd_tradeoff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(-1 if args.quiet else args.verbose)
    if getattr(args, "gap_fec_db", "unset") is None:
        args.gap_fec_db = gamma0(1e-6)
    try:
        return args.handler(args)
    except (UsageError, ConfigError, DomainError) as exc:
        log(f"Error de uso: {exc}", level="error")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ErrorFloorError, InfeasibleError) as exc:
        log(f"No factible: {exc}", level="error")
        return EXIT_INFEASIBLE
    except CouplingViolation as exc:
        log(f"Violación del acoplamiento: {exc}", level="error")
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
