"""Command-line entry point: ``fermigas <subcommand> [options]``.

Every run writes a JSON report (input echo, library versions, results
tagged with the operation that produced them) plus, where useful, a CSV
table.  Wall-clock data goes to a ``.run.json`` sidecar so the report
itself is byte-identical across reruns with the same inputs.

Exit status: 0 on success, 2 when a bound schedule is infeasible, 1 on
any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .constants import DEFAULT_CONSTANTS, DEVIATION_CONSTANT, BoundConstants
from .errors import ScheduleInfeasible
from .potentials import RadialPotential, scattering_fixtures

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


# ---------------------------------------------------------------------------
# output helpers

def _clean(value):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dumps(data) -> str:
    return json.dumps(_clean(data), indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or list(rows[0].keys()) if rows else (columns or [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def versions() -> dict:
    return {"fermigas": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(platform.python_version_tuple()[:2])}


# ---------------------------------------------------------------------------
# option parsing

def _sweep_range(text: str) -> tuple[float, float, int]:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep range {text!r}: expected lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"sweep range {text!r}: {exc}") from None
    if n < 1 or not (0 < lo <= hi) or (n > 1 and lo == hi):
        raise ConfigError(f"sweep range {text!r} is empty or invalid")
    return lo, hi, n


def _sweep_values(text: str) -> np.ndarray:
    lo, hi, n = _sweep_range(text)
    return np.array([lo]) if n == 1 else np.geomspace(lo, hi, n)


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def load_potential(spec: str) -> RadialPotential:
    """A JSON file path or the name of a built-in fixture."""
    fixtures = scattering_fixtures()
    if spec in fixtures:
        return fixtures[spec]
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"potential: no file or fixture named {spec!r}")
    try:
        return RadialPotential.load(path)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"potential: {exc}") from None


def load_constants(path: str | None) -> BoundConstants:
    if not path:
        return DEFAULT_CONSTANTS
    try:
        return BoundConstants.from_json(path)
    except FileNotFoundError:
        raise ConfigError(f"constants: file {path!r} not found") from None
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"constants: {exc}") from None


# option name -> (default, converter); None default means "required"
OPTIONS = {
    "scatter": {"potential": (None, str), "dim": (3, int), "r_max": (0.0, float)},
    "fermisea": {"n": (None, int), "L": (1.0, float), "dim": (3, int), "sweep": (False, bool),
                 "points": (30, int)},
    "determinantal-check": {"weights": (20, int), "deviation_cases": (0, int)},
    "dyson": {"dim": (3, int), "potential": (None, str), "R": (None, float), "s": (None, float),
              "eps": ("0.1,0.5", _float_list), "corpus": (20, int), "field_centres": (0, int),
              "lattice_points": (10, int)},
    "bounds": {"dim": (3, int), "rho_sweep": (None, str), "a": (None, float), "R0": (None, float),
               "constants": ("", str), "fraction": (0.5, float), "out": ("", str)},
    "oracle": {"potential": (None, str), "L": (None, float), "cutoff": (None, int), "dim": (3, int),
               "out": ("", str)},
    "sweep": {"dim": (3, int), "coupling_sweep": (None, str), "r0": (1.0, float),
              "constants": ("", str), "fraction": (0.5, float), "out": ("", str)},
}
COMMON = {"seed": (42, int), "tol": (None, float), "out_dir": (".", str), "threads": (None, int)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermigas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fermigas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out-dir", dest="out_dir", help="directory for reports (default .)")
        p.add_argument("--seed", type=int, help="random seed (default 42)")
        p.add_argument("--threads", type=int, help="worker threads (default $FERMIGAS_THREADS or 1)")
        p.add_argument("--tol", type=float, help="tolerance override")

    p = sub.add_parser("scatter", help="zero-energy scattering length")
    p.add_argument("--potential", help="potential JSON file or fixture name")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--r-max", dest="r_max", type=float, help="outer integration radius")
    p.add_argument("--out", help="report path (default <out-dir>/scatter.json)")
    common(p)

    p = sub.add_parser("fermisea", help="Dirichlet Fermi-sea kinetic energy")
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=float)
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--sweep", action="store_const", const=True, help="tabulate n = 1 .. N")
    p.add_argument("--points", type=int, help="number of geometric sweep points")
    p.add_argument("--out", help="CSV path (default <out-dir>/fermisea.csv)")
    common(p)

    p = sub.add_parser("determinantal-check", help="closed forms against brute-force quadrature")
    p.add_argument("--weights", type=int, help="randomized weights in the suite")
    p.add_argument("--deviation-cases", dest="deviation_cases", type=int,
                   help="also check ||1 - M_Y|| on this many random configurations")
    p.add_argument("--out", help="report path")
    common(p)

    p = sub.add_parser("dyson", help="soft-potential inequality on a random test corpus")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--potential")
    p.add_argument("--R", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--eps", help="comma-separated list")
    p.add_argument("--corpus", type=int)
    p.add_argument("--field-centres", dest="field_centres", type=int,
                   help="number of separated centres (0 = single centre)")
    p.add_argument("--lattice-points", dest="lattice_points", type=int)
    p.add_argument("--out", help="report path")
    common(p)

    p = sub.add_parser("bounds", help="upper and lower bounds along a density sweep")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--rho-sweep", dest="rho_sweep", help="lo:hi:n (geometric)")
    p.add_argument("--a", type=float)
    p.add_argument("--R0", type=float)
    p.add_argument("--constants", help="JSON table of bound constants")
    p.add_argument("--fraction", type=float, help="spin-up share of the density")
    p.add_argument("--out", help="CSV path (default <out-dir>/bounds.csv)")
    common(p)

    p = sub.add_parser("oracle", help="two-body exact diagonalisation in a box")
    p.add_argument("--potential")
    p.add_argument("--L", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--out", help="report path")
    common(p)

    p = sub.add_parser("sweep", help="bound schedules along a dimensionless coupling sweep")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--coupling-sweep", dest="coupling_sweep",
                   help="lo:hi:n of a rho^(1/3) (3D) or |ln(a^2 rho)| (2D)")
    p.add_argument("--r0", type=float, help="R0 / a")
    p.add_argument("--constants")
    p.add_argument("--fraction", type=float)
    p.add_argument("--out", help="CSV path")
    common(p)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults, and validate."""
    command = args.command
    table = {**OPTIONS[command], **COMMON}
    config: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file {args.config!r} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: unsupported value {version!r}")
        if raw.get("subcommand", command) != command:
            raise ConfigError(f"subcommand: config is for {raw['subcommand']!r}, not {command!r}")
        config = raw.get("options", {})
        if not isinstance(config, dict):
            raise ConfigError("options: must be an object")
        for key in config:
            if key.replace("-", "_") not in table:
                raise ConfigError(f"{key}: unknown option for {command}")
        config = {k.replace("-", "_"): v for k, v in config.items()}
    options = {}
    for name, (default, convert) in table.items():
        value = getattr(args, name, None)
        if value is None:
            value = config.get(name, default)
        if value is None:
            if name in ("tol", "threads"):
                options[name] = None
                continue
            raise ConfigError(f"{name}: required for {command}")
        try:
            options[name] = convert(value) if convert is not bool else bool(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None
    if getattr(args, "out", None) is None and "out" not in table:
        options["out"] = config.get("out", "")
    elif getattr(args, "out", None) is not None:
        options["out"] = args.out
    if options["threads"] is None:
        env = os.environ.get("FERMIGAS_THREADS", "1")
        try:
            options["threads"] = int(env)
        except ValueError:
            raise ConfigError(f"FERMIGAS_THREADS: not an integer ({env!r})") from None
    if options["threads"] < 1:
        raise ConfigError("threads: must be at least 1")
    if "dim" in options and options["dim"] not in (2, 3):
        raise ConfigError("dim: must be 2 or 3")
    return options


# ---------------------------------------------------------------------------
# pipelines; each returns (results, csv rows or None, exit status)

def run_scatter(opt: dict, out_dir: Path, stem: str):
    from .scattering import solve_zero_energy

    potential = load_potential(opt["potential"])
    tol = opt["tol"] if opt["tol"] is not None else 1e-10
    sol = solve_zero_energy(potential, opt["dim"], tolerance=tol,
                            r_max=opt["r_max"] if opt["r_max"] > 0 else None)
    profile_name = f"{stem}.profile.csv"
    rows = [{"r": float(r), "phi": float(p)} for r, p in zip(sol.profile_r, sol.profile_phi)]
    write_atomic(out_dir / profile_name, csv_text(rows, ["r", "phi"]))
    results = {"scattering": {"source": "scattering.solve_zero_energy", "a": sol.a,
                              "residual": sol.residual, "normalization": sol.normalization,
                              "profile_csv_path": profile_name},
               "potential": potential.to_dict()}
    return results, None, EXIT_OK


def run_fermisea(opt: dict, out_dir: Path, stem: str):
    from .fermi_box import dirichlet_energy_sum, leading_kinetic

    n_max, ell, d = opt["n"], opt["L"], opt["dim"]
    if n_max < 1 or not ell > 0:
        raise ConfigError("n: must be >= 1 and L > 0")
    if opt["sweep"]:
        counts = sorted(set(int(round(v)) for v in np.geomspace(1, n_max, max(opt["points"], 2))))
    else:
        counts = [n_max]
    rows = []
    for n in counts:
        energy = dirichlet_energy_sum(n, ell, d)
        lead = leading_kinetic(n, ell, d)
        rows.append({"n": n, "E_D": energy, "leading": lead, "ratio": energy / lead})
    results = {"fermi_sea": {"source": "fermi_box.dirichlet_energy_sum", "dimension": d, "L": ell,
                             "rows": len(rows), "last": rows[-1]}}
    return results, rows, EXIT_OK


def run_determinantal(opt: dict, out_dir: Path, stem: str):
    from .determinantal import deviation_corpus, closed_form_suite

    tol = opt["tol"] if opt["tol"] is not None else 1e-5
    records = closed_form_suite(opt["weights"], seed=opt["seed"], tol=tol)
    results = {"closed_forms": {"source": "determinantal.closed_form_suite", "tolerance": tol,
                                "cases": len(records),
                                "worst_relative_error": max(r["worst"] for r in records),
                                "passed": all(r["passed"] for r in records), "records": records}}
    passed = results["closed_forms"]["passed"]
    if opt["deviation_cases"] > 0:
        rows = deviation_corpus(opt["deviation_cases"], opt["seed"], DEVIATION_CONSTANT)
        violations = sum(not r["holds"] for r in rows)
        results["deviation"] = {"source": "determinantal.m_deviation", "constant": DEVIATION_CONSTANT,
                                "cases": len(rows), "violations": violations,
                                "max_ratio": max(r["ratio"] for r in rows)}
        passed = passed and violations == 0
    results["passed"] = passed
    return results, None, EXIT_OK if passed else EXIT_ERROR


def run_dyson(opt: dict, out_dir: Path, stem: str):
    from .dyson import gap_corpus
    from .soft_potential import kit_for_potential, lattice_sum_constant, w_R_potential

    potential = load_potential(opt["potential"])
    kit = kit_for_potential(potential, opt["dim"], opt["s"], opt["R"])
    gaps = gap_corpus(potential, kit, opt["corpus"], opt["seed"], tuple(opt["eps"]),
                      field_centres=opt["field_centres"])
    worst = min(gaps, key=lambda g: g.gap + g.eta)
    w_report = w_R_potential(kit)
    sum_w = lattice_sum_constant(kit, opt["lattice_points"], seed=opt["seed"])
    results = {
        "dyson": {"source": "dyson.gap_corpus", "evaluations": len(gaps),
                  "min_gap": min(g.gap for g in gaps),
                  "min_relative_gap": min(g.relative() for g in gaps),
                  "eta": max(g.eta for g in gaps), "worst_gap": worst.gap, "worst_eta": worst.eta,
                  "violations": sum(not g.holds for g in gaps), "a": kit.a, "eps": opt["eps"]},
        "bound_fits": {"source": "soft_potential.w_R_potential, soft_potential.lattice_sum_constant",
                       "sup_w": w_report["sup_w"], "int_w": w_report["int_w"],
                       "sup_constant": w_report["sup_constant"],
                       "int_constant": w_report["int_constant"], "sum_w": sum_w},
    }
    return results, None, EXIT_OK


def _bound_rows(pairs, dimension):
    rows, flat = [], []
    for label, up, lo in pairs:
        row = {"coupling": up.schedule["coupling"], "leading": up.leading, "upper": up.total,
               "lower": lo.total, "upper_feasible": up.feasible, "lower_feasible": lo.feasible,
               "eps_upper": up.eps_rho, "eps_lower": lo.eps_rho,
               "upper_within_rate": up.within_rate, "lower_within_rate": lo.within_rate,
               "sandwich": bool(lo.error >= 0 and up.error >= 0)}
        rows.append(row)
        cells = {**label, **row}
        cells.update({f"upper_{k}": v for k, v in up.channels.items()})
        cells.update({f"lower_{k}": v for k, v in lo.channels.items()})
        flat.append(cells)
    return rows, flat


def _bounds_summary(dimension, rows, constants):
    from .bounds import fit_sweep

    infeasible = [i for i, r in enumerate(rows) if not (r["upper_feasible"] and r["lower_feasible"])]
    return {"source": "bounds.fit_sweep", "points": len(rows),
            "infeasible_points": len(infeasible),
            "sandwich_all": all(r["sandwich"] for r in rows),
            "fits": fit_sweep(dimension, rows), "constants": constants.to_dict()}


def run_bounds(opt: dict, out_dir: Path, stem: str):
    from .bounds import lower_bound_schedule, upper_bound_schedule

    constants = load_constants(opt["constants"])
    rhos = _sweep_values(opt["rho_sweep"])
    f = opt["fraction"]
    if not 0 < f < 1:
        raise ConfigError("fraction: must lie in (0, 1)")
    pairs = []
    for rho in rhos:
        args = (f * rho, (1 - f) * rho, opt["a"], opt["R0"], constants, opt["dim"])
        pairs.append(({"rho": float(rho)}, upper_bound_schedule(*args), lower_bound_schedule(*args)))
    rows, flat = _bound_rows(pairs, opt["dim"])
    summary = _bounds_summary(opt["dim"], rows, constants)
    status = EXIT_INFEASIBLE if summary["infeasible_points"] else EXIT_OK
    return {"bounds": summary}, flat, status


def run_sweep(opt: dict, out_dir: Path, stem: str):
    from .bounds import schedule_at_coupling

    constants = load_constants(opt["constants"])
    f = opt["fraction"]
    if not 0 < f < 1:
        raise ConfigError("fraction: must lie in (0, 1)")
    pairs = []
    for g in _sweep_values(opt["coupling_sweep"]):
        up = schedule_at_coupling("upper", opt["dim"], float(g), f, opt["r0"], constants)
        lo = schedule_at_coupling("lower", opt["dim"], float(g), f, opt["r0"], constants)
        pairs.append(({}, up, lo))
    rows, flat = _bound_rows(pairs, opt["dim"])
    summary = _bounds_summary(opt["dim"], rows, constants)
    summary["source"] = "bounds.schedule_at_coupling, bounds.fit_sweep"
    status = EXIT_INFEASIBLE if summary["infeasible_points"] else EXIT_OK
    return {"sweep": summary}, flat, status


def run_oracle(opt: dict, out_dir: Path, stem: str):
    from .scattering import scattering_length
    from .twobody import TwoBodyProblem, ground_state_energy, pseudopotential_prediction

    potential = load_potential(opt["potential"])
    problem = TwoBodyProblem(potential, opt["L"], opt["cutoff"], opt["dim"])
    tol = opt["tol"] if opt["tol"] is not None else 1e-3
    res = ground_state_energy(problem, threads=opt["threads"], tol=tol)
    a = scattering_length(potential, opt["dim"])
    predicted = pseudopotential_prediction(a, opt["L"], opt["dim"])
    results = {"ground_state": {"source": "twobody.ground_state_energy", **res.to_dict()},
               "prediction": {"source": "twobody.pseudopotential_prediction", "a": a,
                              "energy": predicted,
                              "heuristic": opt["dim"] == 2,
                              "shift_ratio": res.shift / (predicted - res.free_energy)
                              if predicted > res.free_energy else None}}
    if opt["dim"] == 3 and a > 0:
        results["prediction"]["normalized_shift"] = res.shift * opt["L"] ** 3 / (math.pi * a)
    return results, None, EXIT_OK if res.converged else EXIT_ERROR


PIPELINES = {"scatter": run_scatter, "fermisea": run_fermisea,
             "determinantal-check": run_determinantal, "dyson": run_dyson, "bounds": run_bounds,
             "oracle": run_oracle, "sweep": run_sweep}
CSV_FIRST = {"fermisea", "bounds", "sweep"}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        opt = resolve_options(args)
        out_dir = Path(opt["out_dir"])
        command = args.command
        stem = command.replace("-", "_")
        out = opt.get("out") or ""
        if out and command in CSV_FIRST:
            csv_path = Path(out)
            report_path = csv_path.with_suffix(".json")
        elif out:
            report_path = Path(out)
            csv_path = report_path.with_suffix(".csv")
        else:
            report_path = out_dir / f"{stem}.json"
            csv_path = out_dir / f"{stem}.csv"
        stem = report_path.stem
        results, rows, status = PIPELINES[command](opt, report_path.parent, stem)
    except ConfigError as exc:
        print(f"fermigas: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ScheduleInfeasible as exc:
        print(f"fermigas: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - any failure maps to exit 1 with a message
        print(f"fermigas: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    echo = {k: v for k, v in opt.items() if k not in ("threads", "out_dir", "out")}
    report = {"schema_version": SCHEMA_VERSION, "subcommand": command, "inputs": echo,
              "versions": versions(), "results": results, "exit_status": status}
    if rows is not None:
        report["csv_path"] = csv_path.name
        write_atomic(csv_path, csv_text(rows))
    write_atomic(report_path, dumps(report))
    sidecar = {"started_unix": started, "wall_seconds": time.time() - started,
               "threads": opt["threads"], "argv": sys.argv[1:] if argv is None else list(argv)}
    write_atomic(report_path.with_suffix(".run.json"), dumps(sidecar))
    return status


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
