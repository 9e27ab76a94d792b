"""
Command-line front end: every command runs one verification suite and
writes a JSON report to stdout (or --out)

Exit codes: 0 when every check passes, 1 when a check fails or a suite
raises, 2 on bad parameters or unreadable input.
"""
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, List, Optional

import click
import numpy as np
from click import style
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from src.config import Config
from src.exceptions import DegenCalcError, DimensionMismatch, InvalidParams, MalformedInput, OddParity, PoorFit
from src.models import CheckResult, OperatorParams, SuiteConfig, SuiteReport
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.tasks.almansi import decompose_any, is_weighted_harmonic
from src.tasks.kelvin import (asymptotic_fit, inversion_chain,
                              kelvin_pde_check, kelvin_transform, verify_chain)
from src.tasks.liouville import (blow_up_trace, bubble_profile, growth_sequences, make_bubble,
                                 positivity_scan, radial_monotonicity_check, verify_bubble_constant)
from src.tasks.quadrature import (average_law_check, build_weighted_sphere_rule, closed_form_moment,
                                  divergence_identity_check, integrate_ball_shells, jensen_weighted_check,
                                  omega_a, richardson_limit, weighted_average_flux_check)
from src.utils import format_rational, make_rng, sample_ball
from src.weighted_operator import apply_power

logger = logging.getLogger(__name__)

stderr = Console(stderr=True)

AVERAGE_LAW_TOLERANCE = 1e-6
FAR_FIELD_TOLERANCE = 1e-2
FAR_FIELD_RADII = (250.0, 500.0, 1000.0)
SAMPLE_RADIUS = 10.0

INPUT_ERRORS = (InvalidParams, MalformedInput, DimensionMismatch, OddParity)

Suite = Callable[[SuiteConfig, Optional[Poly], bool], List[CheckResult]]


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=stderr, show_path=False)],
        force=True,
    )


def parse_poly_file(path: str) -> Poly:
    """Read a polynomial from its JSON form"""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise MalformedInput(f"Cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise MalformedInput(f"{path} is not valid JSON: {e}")
    return Poly.from_json(payload)


def _emit(report: SuiteReport, out: Optional[str]) -> None:
    text = report.to_json()
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Report written to {out}")
    else:
        click.echo(text)


def _summary(report: SuiteReport) -> None:
    table = Table(title=f"degen-calc {report.command}")
    table.add_column("check")
    table.add_column("passed")
    table.add_column("residual", justify="right")
    for check in report.checks:
        residual = "" if check.residual is None else f"{check.residual:.3e}"
        table.add_row(check.name, "[green]yes[/green]" if check.passed else "[red]no[/red]", residual)
    stderr.print(table)


def _fail(code: int, message: str) -> None:
    click.echo(style(f"❌ {message}", fg="red"), err=True)
    sys.exit(code)


def run_suite(command: str, options: dict, suite: Suite) -> None:
    """Validate inputs, run the suite, emit the report and exit with the suite's code"""
    tolerance_given = options.get("tolerance") is not None
    out = options.pop("out", None)
    settings = {key: value for key, value in options.items() if value is not None}
    try:
        config = SuiteConfig(command=command, **settings)
        poly = parse_poly_file(config.poly_path) if config.poly_path else None
    except (ValidationError, InvalidParams, MalformedInput) as e:
        logger.error(f"{command}: invalid input")
        _fail(2, f"Invalid input: {e}")

    report = SuiteReport.for_config(config)
    try:
        report.checks = suite(config, poly, tolerance_given)
    except INPUT_ERRORS as e:
        _fail(2, f"Invalid input: {e}")
    except DegenCalcError as e:
        logger.error(f"{command} aborted with {type(e).__name__}: {e}")
        report.checks = [CheckResult(name=command, passed=False,
                                     details={"error": type(e).__name__, "message": str(e)})]

    _emit(report, out)
    _summary(report)
    if not report.passed:
        failed = ", ".join(check.name for check in report.checks if not check.passed)
        _fail(1, f"{command}: failed checks: {failed}")
    click.echo(style(f"✅ {command}: all {len(report.checks)} checks passed", fg="green"), err=True)


def suite_options(fn):
    """Flags shared by every suite"""
    options = [
        click.option("--n", "n", type=int, default=None, help="Tangential dimension n"),
        click.option("--a", "a", type=str, default=None, help="Weight parameter a, e.g. 3/2"),
        click.option("--p", "p", type=int, default=None, help="Order p"),
        click.option("--alpha", type=str, default=None, help="Exponent alpha (critical if omitted)"),
        click.option("--poly", "poly_path", type=str, default=None, help="Polynomial JSON file"),
        click.option("--qdeg", "quadrature_degree", type=int, default=None,
                     help="Exactness degree of the sphere rule"),
        click.option("--samples", type=int, default=None, help="Number of sample points"),
        click.option("--seed", type=int, default=None, help="Random seed"),
        click.option("--tol", "tolerance", type=float, default=None, help="Relative tolerance"),
        click.option("--out", type=click.Path(dir_okay=False), default=None,
                     help="Write the report here instead of stdout"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _command(name: str, suite: Suite, extra: Optional[List] = None):
    """Register a suite as a click command"""
    def callback(**options):
        run_suite(name, options, suite)

    callback = suite_options(callback)
    for option in reversed(extra or []):
        callback = option(callback)
    return cli.command(name=name, help=suite.__doc__)(callback)


@click.group()
@click.option("--log-level", default=None, help="Overrides DEGEN_CALC_LOG_LEVEL")
def cli(log_level: Optional[str]):
    """Exact and numerical verification suites for the weighted polyharmonic operator."""
    if not Config.validate():
        _fail(2, "Invalid configuration, see the log above")
    configure_logging(log_level or Config.LOG_LEVEL)


# suites


def _bubble_samples(config: SuiteConfig, dim: int, **kwargs) -> np.ndarray:
    return sample_ball(make_rng(config.seed), config.samples, dim, SAMPLE_RADIUS, **kwargs)


def decompose_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Almansi decomposition of a polynomial read from --poly."""
    if poly is None:
        raise MalformedInput("decompose needs --poly")
    params = config.operator_params()
    decompositions = decompose_any(poly, params)
    checks = []
    total = Poly.zero(poly.dim)
    for decomposition in decompositions:
        total = total + decomposition.reconstruct()
        harmonic = all(is_weighted_harmonic(part, params) for _, part in decomposition.parts)
        checks.append(CheckResult(name=f"almansi_degree_{decomposition.degree}", passed=harmonic,
                                  details=decomposition.to_json()))
    checks.insert(0, CheckResult(name="almansi_reconstruct", passed=total == poly,
                                 details={"input": poly.to_json(), "components": len(decompositions)}))
    return checks


def kelvin_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Kelvin involution, inversion chain and far-field expansion for u (default 1 + x_1)."""
    params = config.operator_params()
    u = poly if poly is not None else Poly.one(params.dim) + Poly.variable(params.dim, 0)
    if u.dim != params.dim:
        raise MalformedInput(f"polynomial has dim {u.dim}, parameters need {params.dim}")
    expr = RadialPowerExpr.from_poly(u)
    star = kelvin_transform(expr, params)
    checks = [CheckResult(name="kelvin_involution", passed=kelvin_transform(star, params) == expr)]

    chain = inversion_chain(expr, params)
    chain_verified = verify_chain(expr, chain, params)
    checks.append(CheckResult(
        name="inversion_chain", passed=chain_verified,
        details={"c": [format_rational(level.c) for level in chain.levels]}))

    # far field of (-Ã)^i u* computed directly
    u0 = float(u.evaluate(np.zeros(u.dim)))
    image = star
    for level in chain.levels:
        order = params.D - 2 * params.p + 2 * level.i
        expected = float(level.c) * u0
        fitted = {"fitted": f"(-Ã)^{level.i} u*", "chain_verified": chain_verified}
        current, image = image, apply_power(image, params, 1)
        try:
            fit = asymptotic_fit(current, order, FAR_FIELD_RADII, params)
        except PoorFit as e:
            checks.append(CheckResult(name=f"far_field_i{level.i}", passed=False,
                                      details={"error": str(e), **fitted}))
            continue
        residual = abs(fit.a0 - expected) / max(abs(expected), np.finfo(float).tiny)
        checks.append(CheckResult(
            name=f"far_field_i{level.i}", passed=residual <= FAR_FIELD_TOLERANCE, residual=residual,
            details={"a0": fit.a0, "expected": expected, "a": fit.a.tolist(),
                     "remainder_order": fit.residual_order_estimate, **fitted}))

    constant = verify_bubble_constant(params)
    points = _bubble_samples(config, params.dim, min_radius=0.1, min_last=1e-3)
    checks.append(kelvin_pde_check(bubble_profile(params, Fraction(1)), params.alpha_crit, params,
                                   points, amplitude=constant.c0, tolerance=config.tolerance))
    return checks


def bubble_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Bubble constant, PDE residual, Kelvin fixed point and half-space form."""
    params = config.operator_params()
    constant = verify_bubble_constant(params, samples=config.samples, seed=config.seed)
    checks = [
        CheckResult(name="bubble_constant", passed=constant.matches_oracle,
                    details={"K": format_rational(constant.K),
                             "K_oracle": format_rational(constant.K_oracle),
                             "exponent": format_rational(constant.exponent), "c0": constant.c0}),
        CheckResult(name="bubble_pde", passed=constant.residual <= config.tolerance,
                    residual=constant.residual, details={"samples": config.samples}),
    ]
    profile = bubble_profile(params, Fraction(1))
    checks.append(CheckResult(name="kelvin_fixed_point",
                              passed=kelvin_transform(profile, params) == profile))

    bubble = make_bubble(1, [0] * params.n, params)
    points = _bubble_samples(config, params.dim)
    x, y = points[:, :-1], points[:, -1] ** 2 / 4
    direct = np.asarray(bubble.evaluate(points))
    halfspace = np.asarray(bubble.evaluate_halfspace(x, y))
    residual = float(np.max(np.abs(direct - halfspace) / np.abs(direct)))
    checks.append(CheckResult(name="halfspace_form", passed=residual <= config.tolerance,
                              residual=residual))
    return checks


def divergence_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Boundary flux against interior integral per level, for --poly or the bubble."""
    params = config.operator_params()
    grid = build_weighted_sphere_rule(params, config.quadrature_degree)
    u = poly if poly is not None else bubble_profile(params, Fraction(1))
    alpha = config.alpha_value()
    return [divergence_identity_check(u, params, grid, tolerance=config.tolerance, alpha=alpha).to_check()]


def average_law_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Small-sphere averages of (-Ã)^i |x|^{2p-n-2a} against the flux balance."""
    params = config.operator_params()
    grid = build_weighted_sphere_rule(params, config.quadrature_degree)
    tolerance = config.tolerance if tolerance_given else AVERAGE_LAW_TOLERANCE
    exact = omega_a(params)
    omega_error = abs(grid.omega - exact) / exact
    checks = [CheckResult(name="omega_a", passed=omega_error <= 1e-12, residual=omega_error,
                          details={"quadrature": grid.omega, "closed_form": exact})]
    u = RadialPowerExpr.radial_power(params.dim, params.kelvin_exponent)
    for i in range(params.p):
        checks.append(average_law_check(u, i, params, grid, tolerance=tolerance))
    return checks


def growth_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """σ_k, b_k and r_k of the blow-up argument, with closed forms and the blow-up trace."""
    alpha = Fraction(config.alpha_value()) if config.alpha is not None else None
    params: Optional[OperatorParams] = None
    try:
        params = config.operator_params()
    except ValidationError as e:
        logger.info(f"growth runs without operator parameters ({e})")
    if alpha is None:
        if params is None:
            raise InvalidParams("growth needs --alpha unless (n, a, p) are valid operator parameters")
        alpha = params.alpha_crit

    trace = growth_sequences(config.p, alpha, r0=config.r0, k_max=config.k_max,
                             D=None if params is None else params.D)
    checks = [
        CheckResult(name="growth_closed_forms", passed=trace.closed_forms_match,
                    details={"sigma": [format_rational(v) for v in trace.sigma],
                             "b": [format_rational(v) for v in trace.b],
                             "alpha": format_rational(alpha)}),
        CheckResult(name="growth_radii", passed=trace.r_bounded,
                    details={"r": trace.r, "c_bound": trace.c_bound}),
    ]
    if params is not None:
        # lower bound of the bubble on B_{r0}
        constant = verify_bubble_constant(params)
        c0 = constant.c0 * (1 + config.r0 ** 2) ** -float(params.s)
        r_bar, values = blow_up_trace(trace, c0, config.r0)
        checks.append(CheckResult(name="blow_up_trace", passed=True,
                                  details={"A": format_rational(trace.A_const), "c0": c0,
                                           "r_bar": r_bar, "log_values": values}))
    return checks


def integrate_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Weighted sphere rule moments, and integrals of --poly when given."""
    params = config.operator_params()
    grid = build_weighted_sphere_rule(params, config.quadrature_degree)
    errors = []
    for m in range(grid.degree // 2 + 1):
        exact = closed_form_moment(params, m)
        errors.append(abs(grid.integrate(np.abs(grid.nodes[:, -1]) ** (2 * m)) - exact) / exact)
    checks = [CheckResult(name="sphere_moments", passed=max(errors) <= 1e-12, residual=max(errors),
                          details={"omega_a": omega_a(params), "nodes": int(len(grid.weights)),
                                   "method": grid.method, "degree": grid.degree})]
    if poly is None:
        return checks
    if poly.dim != params.dim:
        raise MalformedInput(f"polynomial has dim {poly.dim}, parameters need {params.dim}")

    ball, order = richardson_limit(integrate_ball_shells(poly, params, grid))
    checks.append(CheckResult(name="poly_integrals", passed=True,
                              details={"sphere": grid.integrate(poly.evaluate(grid.nodes)),
                                       "ball": ball, "ball_order": order}))
    checks.append(weighted_average_flux_check(poly, 1.0, params, grid, tolerance=config.tolerance))
    if np.all(np.asarray(poly.evaluate(grid.nodes)) > 0):
        checks.append(jensen_weighted_check(poly, config.alpha_value(), 1.0, grid))
    return checks


def positivity_suite(config: SuiteConfig, poly: Optional[Poly], tolerance_given: bool) -> List[CheckResult]:
    """Sign of (-Ã)^i for the bubble (or --poly) at sample points, and the radial monotonicity."""
    params = config.operator_params()
    points = _bubble_samples(config, params.dim)
    if poly is not None:
        return [positivity_scan(poly, params, points)]
    constant = verify_bubble_constant(params)
    profile = bubble_profile(params, Fraction(1))
    return [
        positivity_scan(profile, params, points, amplitude=constant.c0),
        radial_monotonicity_check(profile, params, np.logspace(-3, 3, 121)),
    ]


_command("decompose", decompose_suite)
_command("kelvin-check", kelvin_suite)
_command("bubble", bubble_suite)
_command("divergence", divergence_suite)
_command("average-law", average_law_suite)
_command("growth", growth_suite, extra=[
    click.option("--kmax", "k_max", type=int, default=None, help="Recursion length"),
    click.option("--r0", type=float, default=None, help="Initial radius"),
])
_command("integrate", integrate_suite)
_command("scan-positivity", positivity_suite)


if __name__ == "__main__":
    cli()
