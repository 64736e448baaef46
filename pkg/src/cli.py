"""
Command-line driver.

Each command builds its input (a named worked example or a JSON/YAML file),
runs one computation and writes a JSON report, a text summary and, where
there is a per-point table, a CSV file. Failures exit with the code of the
raised error and a structured error report.
"""
import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
from pydantic import ValidationError

from src.boundary_residue import build_compactification, residue_decomposition, residue_spectrum_check, vanishing_check
from src.catalogue import (
    EXAMPLES, KS82_VERTICES, P_POLYGON, P_POLYGON_DUAL, POLYTOPES, THREEFOLD_DUAL_VERTICES,
    THREEFOLD_POTENTIAL_EXPONENTS, THREEFOLD_VERTICES, WorkedExample, get_example,
)
from src.config import COMMANDS, LOG_LEVEL, JobConfig, SolverSettings, load_job_config, merge_overrides
from src.critical_residue import (
    bkk_bound, check_stationary_phase, df_mirror_residue, find_critical_points,
)
from src.exceptions import EXIT_HYPOTHESIS_FAILED, EXIT_OK, EXIT_VALIDATION, ToricError
from src.lattice_core import find_unimodular_map, unimodular_equivalent
from src.lg_mirror import LGPotential, build_potential, newton_polytope, psi_class, theta_class
from src.mirror_testconfigs import (
    assemble_theorem1, orbifold_dual_report, prescription_for_dual, prescription_terms,
)
from src.polytopes import convex_hull, is_reflexive, lattice_points, normalized_volume, polar_dual
from src.reporting import save_report
from src.testconfig import ToricTestConfiguration, df_report, slope_constant
from src.utils import dump_json, format_rational, format_scalar, format_vector, is_exact, to_mpc
from src.validators import PolytopeValidator, PotentialValidator, ToricTestConfigurationValidator

logger = logging.getLogger(__name__)

NUMERIC_TOLERANCE = 1e-3


@dataclass
class Target:
    """Resolved input of a command: a worked example, a test configuration, a potential or a polytope."""
    name: str
    tc: Optional[ToricTestConfiguration] = None
    potential: Optional[LGPotential] = None
    vertices: Optional[List] = None
    example: Optional[WorkedExample] = None

    def require_tc(self) -> ToricTestConfiguration:
        if self.tc is None:
            raise ToricError(f"Input '{self.name}' is not a test configuration")
        return self.tc


def resolve_target(config: JobConfig) -> Target:
    """
    Turn the example id or input path of a job into its input object.

    Raises:
        ToricError: if neither is given or the file holds no known format
        pydantic.ValidationError: if the file fails its schema
    """
    if config.example:
        if config.command == 'polytope' and config.example in POLYTOPES:
            return Target(config.example, vertices=list(POLYTOPES[config.example]))
        try:
            example = get_example(config.example)
        except KeyError:
            raise ToricError(f"Unknown example '{config.example}'", known=", ".join(sorted(EXAMPLES)))
        return Target(example.name, tc=example.build(), example=example)
    if not config.input_path:
        raise ToricError("Either an example id or an input file is required")
    payload = load_job_config(config.input_path)
    name = Path(config.input_path).stem
    if "vertices" in payload:
        return Target(name, vertices=PolytopeValidator(**payload).vertices)
    if "terms" in payload:
        return Target(name, potential=PotentialValidator(**payload).build())
    if "kind" in payload:
        return Target(name, tc=ToricTestConfigurationValidator(**payload).build())
    raise ToricError(f"Input file {config.input_path} holds no test configuration, potential or polytope")


def _k(config: JobConfig) -> Fraction:
    return Fraction(str(config.k))


def _close(actual: Any, expected: Any, tolerance: float = NUMERIC_TOLERANCE) -> bool:
    if is_exact(actual) and is_exact(expected):
        return Fraction(actual) == Fraction(expected)
    return abs(to_mpc(actual) - to_mpc(expected)) <= tolerance


# commands

def command_df(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    tc = target.require_tc()
    report = df_report(tc)
    return {
        "example": target.name,
        "intersection": format_rational(report.value_intersection),
        "localised": format_rational(report.value_localised),
        "polytope": format_rational(report.value_polytope) if report.value_polytope is not None else None,
        "slope": format_rational(report.slope),
        "consistent": report.consistent,
        "notes": report.notes,
    }, None


def _potential(config: JobConfig, target: Target) -> LGPotential:
    """Potentials read from a file keep their own k."""
    if target.potential is not None:
        return target.potential
    return build_potential(target.require_tc(), _k(config))


def command_mirror(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    W = _potential(config, target)
    report = {"example": target.name, "potential": W.to_json(), "newton_polytope": newton_polytope(W).to_json()}
    if target.tc is not None:
        report["theta"] = theta_class(target.tc, W).to_json()
        report["psi"] = psi_class(target.tc, W).to_json()
    return report, None


def command_critical(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    W = _potential(config, target)
    points = find_critical_points(W, config.solver)
    stationary = check_stationary_phase(W, points)
    rows = [{
        "index": i,
        "log_coords": [format_scalar(z) for z in p.log_coords],
        "value": format_scalar(p.value),
        "hessian_det": format_scalar(p.hessian_det),
        "multiplicity": p.multiplicity,
        "degenerate": p.degenerate,
    } for i, p in enumerate(points)]
    return {
        "example": target.name,
        "k": format_rational(W.k),
        "bkk_bound": bkk_bound(W),
        "count": len(points),
        "stationary_phase": stationary,
        "points": rows,
    }, rows


def command_residue(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    tc = target.require_tc()
    W = build_potential(tc, _k(config))
    comp = build_compactification(W)
    report = residue_decomposition(tc, _k(config), comp, config.grouping)
    payload = report.to_json()
    if target.example is not None:
        for row, out in zip(report.rows, payload["rows"]):
            out["label"] = target.example.label_of(frozenset(row.rays))
    payload["example"] = target.name
    payload["compactification"] = comp.to_json()
    payload["spectrum"] = residue_spectrum_check(comp, W)
    return payload, payload["rows"]


def _prescribed_table(example: WorkedExample, tc: ToricTestConfiguration, k: Fraction,
                      grouping: Optional[List[List[int]]] = None) -> Dict[str, Any]:
    """
    d and t computed on the first dual at the example's v, checked against
    its closed-form Euler classes and traces, and the twisted-DF summands
    those targets give, checked against the residue terms.
    """
    dual, report, targets = prescription_for_dual(tc, k, example.table_v, 0, grouping=grouping)
    degree = dual.total_fan.ambient_dim
    terms = prescription_terms(dual, targets, slope_constant(tc.fiber_fan, tc.fiber_polarisation))
    residue_terms = {frozenset(row.rays): row.term for row in report.rows}
    rows = []
    for label, expected in example.table.items():
        key = example.key(label)
        d, t = targets.d[key], targets.t[key]
        rows.append({
            "label": label,
            "d": format_scalar(d),
            "t": format_scalar(t),
            "H": format_scalar(targets.H[key]),
            "K": format_scalar(targets.K[key]),
            "expected_e": format_rational(expected["e"]),
            "expected_t": format_rational(expected["t"]),
            "term": format_scalar(terms[key]),
            "residue_term": format_scalar(residue_terms[key]),
            "ok": (_close(to_mpc(d) ** degree, expected["e"]) and _close(t, expected["t"])
                   and _close(terms[key], residue_terms[key])),
        })
    total = sum((to_mpc(x) for x in terms.values()), mpmath.mpc(0))
    group_total = report.group_totals[dual.index]
    return {"dual": dual.index, "v": format_vector(example.table_v), "rows": rows,
            "sum_terms": format_scalar(total), "group_total": format_scalar(group_total),
            "holds": all(row["ok"] for row in rows) and _close(total, group_total)}


def command_theorem1(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    report = assemble_theorem1(target.require_tc(), _k(config), grouping=config.grouping, settings=config.solver)
    report["example"] = target.name
    if target.example is not None and target.example.table:
        report["prescribed_table"] = _prescribed_table(target.example, target.tc, _k(config), config.grouping)
    return report, report["duals"]


def _mirror_residue_at(args) -> Tuple[str, Any]:
    tc, k, settings = args
    value = df_mirror_residue(tc, k, settings)
    return format_rational(k), value


def mirror_residue_series(tc: ToricTestConfiguration, k_list: Sequence, settings: SolverSettings,
                          threads: int = 1) -> List[Tuple[str, Any]]:
    """Mirror-residue DF over k, one worker process per k when threads > 1; results keep the k order."""
    jobs = [(tc, Fraction(str(k)), settings) for k in sorted(k_list)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_mirror_residue_at, jobs))
    return [_mirror_residue_at(job) for job in jobs]


def command_vanishing(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    tc = target.require_tc()
    report = {"example": target.name, "toric": vanishing_check(tc, config.k_list, NUMERIC_TOLERANCE)}
    if config.mirror_residue:
        exact = df_report(tc).value_intersection
        series = mirror_residue_series(tc, config.k_list, config.solver, config.threads)
        errors = [abs(to_mpc(value) - to_mpc(exact)) for _, value in series]
        decreasing = all(b <= a + mpmath.mpf('1e-20') for a, b in zip(errors, errors[1:]))
        report["mirror"] = {
            "k": [k for k, _ in series],
            "values": [format_scalar(value) for _, value in series],
            "errors": [format_scalar(e) for e in errors],
            "non_increasing": decreasing,
            "holds": decreasing and errors[-1] <= NUMERIC_TOLERANCE,
        }
    return report, None


def command_polytope(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    if target.vertices is None:
        raise ToricError(f"Input '{target.name}' is not a polytope")
    P = convex_hull(target.vertices)
    action = config.polytope_action
    report: Dict[str, Any] = {"polytope": target.name, "action": action, "vertices": P.to_json()["vertices"]}
    if action == 'dual':
        report["dual"] = polar_dual(P).to_json()["vertices"]
    elif action == 'reflexive':
        report["reflexive"] = is_reflexive(P)
    elif action == 'volume':
        report["normalized_volume"] = format_rational(normalized_volume(P))
    elif action == 'points':
        report["lattice_points"] = [list(p) for p in lattice_points(P)]
    else:
        if not config.compare_with or config.compare_with not in POLYTOPES:
            raise ToricError("Equivalence needs --compare-with naming a catalogued polytope")
        other = POLYTOPES[config.compare_with]
        found = find_unimodular_map(target.vertices, other)
        report["compare_with"] = config.compare_with
        report["equivalent"] = found is not None
        if found is not None:
            A, t = found
            report["map"] = [list(row) for row in A]
            report["translation"] = list(t)
    return report, None


def _check(checks: List[Dict[str, Any]], name: str, expected: Any, actual: Any, ok: bool) -> None:
    checks.append({"check": name, "expected": expected, "actual": actual, "ok": bool(ok)})


def _vertex_set(P) -> set:
    return {tuple(v) for v in P.vertices}


def _reproduce_surface(example: WorkedExample, config: JobConfig, checks: List[Dict[str, Any]]) -> None:
    tc = example.build()
    df = df_report(tc)
    for route in ('intersection', 'localised', 'polytope'):
        value = getattr(df, f"value_{route}")
        _check(checks, f"df_{route}", format_rational(example.df),
               format_rational(value) if value is not None else None, value == example.df)
    k = Fraction(example.k)
    W = build_potential(tc, k)
    points = find_critical_points(W, config.solver)
    stationary = check_stationary_phase(W, points)
    _check(checks, "critical_points", example.critical_points, len(points), len(points) == example.critical_points)
    _check(checks, "euler_characteristic", example.critical_points, stationary["expected"],
           stationary["holds"] and stationary["expected"] == example.critical_points)
    comp = build_compactification(W)
    base = sorted(example.label_of(frozenset(p)) or str(p) for p in comp.base_points)
    _check(checks, "base_points", sorted(example.base_points), base, base == sorted(example.base_points))
    report = residue_decomposition(tc, k, comp)
    labels = {example.label_of(frozenset(row.rays)): row for row in report.rows}
    theta_ok = all(_close(row.theta, example.theta) for row in report.rows)
    _check(checks, "theta", format_rational(example.theta),
           sorted({str(format_scalar(row.theta)) for row in report.rows}), theta_ok)
    psi_one = sorted(label for label, row in labels.items() if _close(row.psi, 1))
    _check(checks, "psi_one", sorted(example.psi_one), psi_one, psi_one == sorted(example.psi_one))
    omega_ok = all(row.omega0 == -1 and all(r == -1 for r in row.residues) for row in report.rows)
    _check(checks, "omega0_and_connection_residues", -1, sorted({row.omega0 for row in report.rows}), omega_ok)
    _check(checks, "residue_total", format_rational(example.df), format_scalar(report.total),
           _close(report.total, example.df))
    for i, expected in enumerate(example.group_totals):
        actual = report.group_totals[i] if i < len(report.group_totals) else None
        _check(checks, f"group_total_{i}", format_rational(expected),
               format_scalar(actual) if actual is not None else None,
               actual is not None and _close(actual, expected))
    if example.table:
        table = _prescribed_table(example, tc, k)
        failed = [row["label"] for row in table["rows"] if not row["ok"]]
        _check(checks, "prescribed_table", [], failed, table["holds"])


def _reproduce_threefold(example: WorkedExample, checks: List[Dict[str, Any]]) -> None:
    dual = polar_dual(convex_hull(P_POLYGON))
    _check(checks, "polygon_dual", sorted(P_POLYGON_DUAL), sorted(format_vector(v) for v in dual.vertices),
           _vertex_set(dual) == set(P_POLYGON_DUAL))
    double = polar_dual(dual)
    _check(checks, "polygon_double_dual", sorted(P_POLYGON), sorted(format_vector(v) for v in double.vertices),
           _vertex_set(double) == set(P_POLYGON))
    total_dual = polar_dual(convex_hull(THREEFOLD_VERTICES))
    _check(checks, "threefold_dual", len(THREEFOLD_DUAL_VERTICES), len(total_dual.vertices),
           _vertex_set(total_dual) == set(THREEFOLD_DUAL_VERTICES))
    equivalent = unimodular_equivalent(KS82_VERTICES, THREEFOLD_VERTICES)
    _check(checks, "ks82_equivalence", True, equivalent, equivalent)
    tc = example.build()
    rays = set(tc.total_fan.rays)
    _check(checks, "face_fan_rays", len(THREEFOLD_VERTICES), len(rays), rays == set(THREEFOLD_VERTICES))
    exponents = set(build_potential(tc, 1).exponents)
    _check(checks, "potential_exponents", len(THREEFOLD_POTENTIAL_EXPONENTS), len(exponents),
           exponents == set(THREEFOLD_POTENTIAL_EXPONENTS))
    df = df_report(tc)
    _check(checks, "slope", "1", format_rational(df.slope), df.slope == 1)
    _check(checks, "df_intersection", format_rational(example.df), format_rational(df.value_intersection),
           df.value_intersection == example.df)
    _check(checks, "df_localised", format_rational(example.df), format_rational(df.value_localised),
           df.value_localised == example.df)
    orbifolds = orbifold_dual_report()
    _check(checks, "orbifold_duals", 4, len(orbifolds), len(orbifolds) == 4)


def command_reproduce(config: JobConfig, target: Target) -> Tuple[Dict[str, Any], Optional[List[Dict]]]:
    example = target.example
    if example is None:
        raise ToricError("reproduce needs a catalogued example id")
    checks: List[Dict[str, Any]] = []
    if example.critical_points is None:
        _reproduce_threefold(example, checks)
    else:
        _reproduce_surface(example, config, checks)
    diff = [c["check"] for c in checks if not c["ok"]]
    if diff:
        logger.warning(f"{example.name}: {len(diff)} checks differ from the golden values")
    return {"example": example.name, "checks": checks, "diff": diff, "passed": not diff}, checks


COMMAND_HANDLERS: Dict[str, Callable[[JobConfig, Target], Tuple[Dict[str, Any], Optional[List[Dict]]]]] = {
    'df': command_df,
    'mirror': command_mirror,
    'critical': command_critical,
    'residue': command_residue,
    'theorem1': command_theorem1,
    'vanishing': command_vanishing,
    'polytope': command_polytope,
    'reproduce': command_reproduce,
}


def _exit_code(command: str, report: Dict[str, Any]) -> int:
    if command == 'reproduce' and not report.get("passed", True):
        return EXIT_HYPOTHESIS_FAILED
    return EXIT_OK


def run(config: JobConfig) -> Tuple[int, Dict[str, Any]]:
    """
    Execute one job and save its reports.

    Returns:
        (exit status, report or error payload)
    """
    name = f"{config.command}_{config.example or Path(config.input_path or 'input').stem}"
    out = Path(config.out) if config.out else None
    try:
        target = resolve_target(config)
        with mpmath.workprec(config.solver.precision_bits):
            report, rows = COMMAND_HANDLERS[config.command](config, target)
    except ToricError as e:
        logger.error(f"{config.command} failed: {e.message}")
        payload = e.to_dict()
        save_report(f"{name}_error", payload, f"{config.command} failed", out)
        return e.exit_code, payload
    except ValidationError as e:
        logger.error(f"{config.command} input is invalid: {e}")
        payload = {"error": "ValidationError", "message": str(e)}
        save_report(f"{name}_error", payload, f"{config.command} failed", out)
        return EXIT_VALIDATION, payload
    save_report(name, report, f"{config.command} {target.name}", out, rows)
    return _exit_code(config.command, report), report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Toric test configurations, mirror potentials and DF residues.')
    parser.add_argument('command', choices=COMMANDS, help='Computation to run')
    parser.add_argument('target', nargs='?', help='Example id, catalogued polytope or input file (JSON/YAML)')
    parser.add_argument('--config', help='Job file (JSON/YAML); flags override its values')
    parser.add_argument('--k', type=float, help='Scale k of the potential')
    parser.add_argument('--k-list', type=float, nargs='+', help='Scales for the vanishing check')
    parser.add_argument('--precision', type=int, help='Working precision in bits')
    parser.add_argument('--grouping', help='Grouping of maximal cones as JSON, e.g. [[0,1],[2,3]]')
    parser.add_argument('--seed', type=int, help='Seed of the random multistart points')
    parser.add_argument('--out', help='Output directory for reports')
    parser.add_argument('--threads', type=int, help='Worker processes for per-k loops')
    parser.add_argument('--action', dest='polytope_action',
                        choices=['dual', 'reflexive', 'volume', 'points', 'equivalent'],
                        help='Polytope utility to run')
    parser.add_argument('--compare-with', help='Catalogued polytope for --action equivalent')
    parser.add_argument('--skip-mirror', action='store_true', help='Skip the mirror-residue series in vanishing')
    parser.add_argument('--log-level', default=LOG_LEVEL, help='Logging level')
    return parser


def config_from_args(args: argparse.Namespace) -> JobConfig:
    """Job file values overridden by explicit flags."""
    base = load_job_config(args.config) if args.config else {}
    target = args.target
    is_file = target is not None and Path(target).suffix.lower() in ('.json', '.yaml', '.yml')
    overrides = {
        'command': args.command,
        'example': None if is_file else target,
        'input_path': target if is_file else None,
        'k': args.k,
        'k_list': args.k_list,
        'precision': args.precision,
        'grouping': json.loads(args.grouping) if args.grouping else None,
        'seed': args.seed,
        'out': args.out,
        'threads': args.threads,
        'polytope_action': args.polytope_action,
        'compare_with': args.compare_with,
        'mirror_residue': False if args.skip_mirror else None,
    }
    return merge_overrides(base, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the command-line driver."""
    args = build_parser().parse_args(argv)
    logging.getLogger().setLevel(args.log_level.upper())
    try:
        config = config_from_args(args)
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid job configuration: {e}")
        print(dump_json({"error": type(e).__name__, "message": str(e)}))
        return EXIT_VALIDATION
    status, report = run(config)
    print(dump_json(report))
    return status


if __name__ == '__main__':
    sys.exit(main())
