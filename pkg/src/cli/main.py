#!/usr/bin/env python3
"""
Sparse Bounds CLI

Lower bounds, packings, certificates and Monte Carlo risks for sparse
estimation under a fixed design.

Usage:
    sparsebounds bound <matrix.csv> --k 2 [--noise-model signal] [--format text]
    sparsebounds pack --n 64 --k 4 --size lemma --out packing.json
    sparsebounds certify <matrix.csv> <packing.json> --sigma 1
    sparsebounds simulate <matrix.csv> --estimator oracle-ls --support 0,3 --trials 1000
    sparsebounds compare --n 256 --k 4 --m 40 --m 60 --m 80
    sparsebounds bernstein --recipe bernstein

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

import logging
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np

from ..config import Settings, SettingsValidationError, get_settings
from ..core.bounds import NoiseKind
from ..core.errors import InputError, NumericalError, PreconditionError
from ..core.estimators import ESTIMATORS, make_estimator
from ..core.experiments import certificate_check, compare_table
from ..core.fano import certificate_vs_closed_form
from ..core.io import atomic_write_text, dumps_json, load_packing, read_matrix_csv
from ..core.montecarlo import SIGNAL_STREAM, mc_risk, packing_bayes_risk, stream_rng
from ..core.packing import (
    BernsteinTable,
    SparseVector,
    beta_min,
    bernstein_empirical,
    build_packing,
    lemma_size,
    p1_bound,
    p2_bound,
    scatter_identity_check,
    verify_min_distance,
)
from ..core.recipes import BernsteinParameters, CertifyParameters, CompareParameters, get_recipe_manager
from ..core.report import ReportOptions, full_report, render_text
from ..logging_config import configure_logging
from .run_config import RunConfig, parse_index_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class SparseBoundsGroup(click.Group):
    """Click group that maps engine errors onto the documented exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(
                args=args, prog_name=prog_name, complete_var=complete_var, standalone_mode=False, **extra
            )
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except InputError as e:
            click.echo(click.style(f"Error: {e}", fg="red"), err=True)
            sys.exit(EXIT_USAGE)
        except NumericalError as e:
            click.echo(click.style(f"Numerical failure: {e}", fg="red"), err=True)
            sys.exit(EXIT_NUMERICAL)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


@dataclass
class CliState:
    settings: Settings
    seed: Optional[int]
    out: Optional[Path]
    quiet: bool

    @property
    def effective_seed(self) -> int:
        return self.settings.default_seed if self.seed is None else self.seed

    def seed_or(self, fallback: int) -> int:
        """Explicit --seed wins over a recipe's seed."""
        return fallback if self.seed is None else self.seed


def emit(state: CliState, text: str) -> None:
    """Write a result to --out (atomically) or stdout."""
    if state.out is not None:
        atomic_write_text(state.out, text)
        if not state.quiet:
            click.echo(f"Results saved to {state.out}", err=True)
    else:
        click.echo(text, nl=False)


def _size_option(value: str) -> Optional[int]:
    if value == "lemma":
        return None
    try:
        return int(value)
    except ValueError:
        raise InputError(f"--size must be an integer or 'lemma', got {value!r}") from None


@click.group(cls=SparseBoundsGroup)
@click.version_option(version="1.0.0")
@click.option("--seed", type=int, default=None, help="Seed for every random stream (default from settings)")
@click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), help="Write the result to this file")
@click.option("--quiet", "-q", is_flag=True, help="Only log warnings and errors")
@click.pass_context
def cli(ctx: click.Context, seed: Optional[int], out: Optional[Path], quiet: bool):
    """Sparse Bounds - minimax lower bounds for sparse estimation."""
    settings = get_settings()
    try:
        settings.validate_runtime()
    except SettingsValidationError as e:
        raise InputError(str(e)) from None
    configure_logging(
        level="WARNING" if quiet else settings.log_level,
        json_logs=settings.log_json,
        stream=sys.stderr,
    )
    ctx.obj = CliState(settings=settings, seed=seed, out=out, quiet=quiet)


@cli.command()
@click.argument("matrix_path", type=click.Path(path_type=Path))
@click.option("--k", type=int, required=True, help="Sparsity level")
@click.option("--sigma", type=float, default=1.0, show_default=True, help="Noise standard deviation")
@click.option("--noise-model", type=click.Choice([k.value for k in NoiseKind]), default="measurement",
              show_default=True, help="Where the noise enters: y = Ax + z or y = A(x + w)")
@click.option("--beta", type=float, default=0.0, show_default=True, help="beta for the closed-form Fano chain")
@click.option("--c0", type=float, default=None, help="Constant of the l1 reference rate")
@click.option("--cap", type=int, default=None, help="Brute-force enumeration cap")
@click.option("--packing", "packing_path", type=click.Path(path_type=Path), help="Certify with this packing")
@click.option("--certify", is_flag=True, help="Build a lemma-sized packing and certify")
@click.option("--packing-size", type=int, default=None, help="Packing size for --certify")
@click.option("--format", "output_format", type=click.Choice(["json", "text"]), default="json", show_default=True)
@click.pass_obj
def bound(state: CliState, matrix_path: Path, k: int, sigma: float, noise_model: str, beta: float,
          c0: Optional[float], cap: Optional[int], packing_path: Optional[Path], certify: bool,
          packing_size: Optional[int], output_format: str):
    """Report every lower bound for a design matrix.

    Example:
        sparsebounds bound design.csv --k 2
        sparsebounds bound design.csv --k 4 --certify --format text
    """
    config = RunConfig.build(
        subcommand="bound", matrix_path=matrix_path, packing_path=packing_path, k=k, sigma=sigma,
        size=packing_size, seed=state.effective_seed, out=state.out, output_format=output_format,
    )
    if beta < 0:
        raise InputError(f"--beta must be non-negative, got {beta}")
    a = read_matrix_csv(config.matrix_path)
    options = ReportOptions(
        beta=beta,
        c0=state.settings.reference_c0 if c0 is None else c0,
        cap=state.settings.bruteforce_cap if cap is None else cap,
        packing=load_packing(config.packing_path) if config.packing_path else None,
        certify=certify,
        packing_size=config.size,
        packing_seed=config.seed,
    )
    report = full_report(a, config.k, config.sigma, noise_model, options)
    if output_format == "text":
        emit(state, render_text(report) + "\n")
    else:
        emit(state, dumps_json(report.to_dict()))


@cli.command()
@click.option("--n", type=int, required=True, help="Ambient dimension")
@click.option("--k", type=int, required=True, help="Sparsity level (even, k < n/2)")
@click.option("--size", "size_text", default="lemma", show_default=True, help="Number of points or 'lemma'")
@click.pass_obj
def pack(state: CliState, n: int, k: int, size_text: str):
    """Build a packing set and verify it.

    The packing goes to --out (summary on stdout) or, without --out, to
    stdout with the summary on stderr.

    Example:
        sparsebounds --seed 7 --out packing.json pack --n 64 --k 4
    """
    config = RunConfig.build(
        subcommand="pack", n=n, k=k, size=_size_option(size_text), seed=state.effective_seed, out=state.out,
    )
    size = config.size if config.size is not None else max(lemma_size(config.n, config.k), 2)
    packing = build_packing(
        config.n, config.k, size, config.seed,
        max_attempts=state.settings.packing_attempts_factor * size,
    )
    beta_floor = beta_min(config.n, size)
    summary = {
        "packing": packing.ref,
        "n": config.n,
        "k": config.k,
        "size": packing.size,
        "lemma_size": lemma_size(config.n, config.k),
        "seed": config.seed,
        "redraws": packing.redraws,
        "min_dist_sq": verify_min_distance(packing),
        "scatter_identity_residual": scatter_identity_check(packing),
        "measured_beta": packing.measured_beta,
        "beta_min": beta_floor,
        "p1_bound": p1_bound(config.n, config.k, size),
        "p2_bound": p2_bound(config.n, size, beta_floor),
    }
    if state.out is not None:
        atomic_write_text(state.out, packing.to_json())
        click.echo(dumps_json(summary), nl=False)
    else:
        click.echo(packing.to_json(), nl=False)
        click.echo(dumps_json(summary), nl=False, err=True)


@cli.command()
@click.argument("matrix_path", required=False, type=click.Path(path_type=Path))
@click.argument("packing_path", required=False, type=click.Path(path_type=Path))
@click.option("--sigma", type=float, default=1.0, show_default=True, help="Noise standard deviation")
@click.option("--recipe", default=None, help="Run the operational check of a certify recipe instead")
@click.option("--format", "output_format", type=click.Choice(["json", "text"]), default="json", show_default=True)
@click.pass_obj
def certify(state: CliState, matrix_path: Optional[Path], packing_path: Optional[Path], sigma: float,
            recipe: Optional[str], output_format: str):
    """Fano certificate of a design from a packing set.

    Example:
        sparsebounds certify design.csv packing.json
        sparsebounds certify --recipe certificate
    """
    config = RunConfig.build(
        subcommand="certify", matrix_path=matrix_path, packing_path=packing_path, recipe=recipe,
        sigma=sigma, seed=state.effective_seed, out=state.out, output_format=output_format,
    )
    if config.recipe is not None:
        params: CertifyParameters = get_recipe_manager().require(config.recipe, "certify").parameters
        params = replace(params, seed=state.seed_or(params.seed))
        check = certificate_check(params, lasso_tol=state.settings.lasso_tol,
                                  lasso_max_iter=state.settings.lasso_max_iter)
        emit(state, dumps_json(check.to_dict()))
        return

    a = read_matrix_csv(config.matrix_path)
    packing = load_packing(config.packing_path)
    comparison = certificate_vs_closed_form(a, packing, config.sigma)
    cert = comparison.certificate
    if output_format == "text":
        status = click.style("vacuous", fg="yellow") if cert.vacuous else click.style(f"{cert.m_cert:.6g}", fg="green", bold=True)
        closed = "vacuous" if comparison.closed_form_vacuous else f"{comparison.closed_form:.6g}"
        lines = [
            click.style(f"Fano certificate ({cert.packing_ref})", bold=True),
            f"  |P|:              {cert.size}",
            f"  S_bar:            {cert.s_bar:.6g}",
            f"  entropy term:     {cert.entropy_term:.6g}",
            f"  M_cert:           {status}",
            f"  closed form:      {closed} (beta={comparison.beta:.4g})",
        ]
        emit(state, "\n".join(lines) + "\n")
    else:
        emit(state, dumps_json({
            "packing_ref": cert.packing_ref,
            "sigma": cert.sigma,
            "certificate": cert.to_dict(),
            "comparison": comparison.to_dict(),
        }))


def _fixed_signal(n: int, k: Optional[int], support: Optional[Tuple[int, ...]], norm: float,
                  seed: int) -> SparseVector:
    """Signal on ``support`` with equal entries, or a random universe point when no support is given."""
    if support is not None:
        if max(support) >= n:
            raise PreconditionError(f"support index {max(support)} out of range for n={n}")
        idx = tuple(sorted(support))
        value = norm / np.sqrt(len(idx))
        return SparseVector(n, idx, tuple(float(value) for _ in idx))
    rng = stream_rng(seed, SIGNAL_STREAM)
    idx = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
    signs = rng.choice([-1.0, 1.0], size=k)
    return SparseVector(n, idx, tuple(float(s * norm / np.sqrt(k)) for s in signs))


@cli.command()
@click.argument("matrix_path", type=click.Path(path_type=Path))
@click.option("--k", type=int, default=None, help="Sparsity of the random signal")
@click.option("--sigma", type=float, default=1.0, show_default=True, help="Noise standard deviation")
@click.option("--estimator", type=click.Choice(ESTIMATORS), required=True)
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--support", "support_text", default=None, help="True support, e.g. 0,3,5")
@click.option("--signal-norm", type=float, default=1.0, show_default=True, help="Norm of the true signal")
@click.option("--packing", "packing_path", type=click.Path(path_type=Path), help="Bayes risk over this packing")
@click.option("--level", type=float, default=None, help="Risk level M setting the packing scale 4 sqrt(n M)")
@click.option("--lam", type=float, default=None, help="Lasso lambda (default 2 sigma sqrt(2 ln n) max column norm)")
@click.pass_obj
def simulate(state: CliState, matrix_path: Path, k: Optional[int], sigma: float, estimator: str, trials: int,
             support_text: Optional[str], signal_norm: float, packing_path: Optional[Path],
             level: Optional[float], lam: Optional[float]):
    """Monte Carlo risk of an estimator.

    Example:
        sparsebounds simulate design.csv --estimator oracle-ls --support 0,3 --trials 5000
        sparsebounds simulate design.csv --estimator zero --packing packing.json --level 1e-3
    """
    config = RunConfig.build(
        subcommand="simulate", matrix_path=matrix_path, packing_path=packing_path, k=k, sigma=sigma,
        estimator=estimator, trials=trials, support=parse_index_list(support_text), signal_norm=signal_norm,
        level=level, seed=state.effective_seed, out=state.out,
    )
    if lam is not None and not lam > 0:
        raise InputError(f"--lam must be positive, got {lam}")
    a = read_matrix_csv(config.matrix_path)
    est = make_estimator(
        config.estimator, lam=lam, sigma=config.sigma if config.sigma > 0 else 1.0,
        tol=state.settings.lasso_tol, max_iter=state.settings.lasso_max_iter,
    )
    tolerance = state.settings.failure_tolerance
    if config.packing_path is not None:
        packing = load_packing(config.packing_path)
        risk = packing_bayes_risk(a, packing, config.level, est, config.sigma, config.trials, config.seed,
                                  failure_tolerance=tolerance)
    else:
        x_true = _fixed_signal(a.cols, config.k, config.support, config.signal_norm, config.seed)
        risk = mc_risk(a, est, x_true, config.sigma, config.trials, config.seed, failure_tolerance=tolerance)
    emit(state, dumps_json(risk.to_dict()))


def _m_values(values: Tuple[str, ...]) -> Tuple[int, ...]:
    out = []
    for value in values:
        for part in value.split(","):
            if part.strip():
                try:
                    out.append(int(part))
                except ValueError:
                    raise InputError(f"--m expects integers, got {part!r}") from None
    return tuple(out)


@cli.command()
@click.option("--n", type=int, default=None, help="Ambient dimension")
@click.option("--k", type=int, default=None, help="Sparsity level (even, k < n/2)")
@click.option("--m", "m_text", multiple=True, help="Number of measurements; repeat or comma-separate")
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--trials", type=int, default=500, show_default=True)
@click.option("--signals", type=int, default=3, show_default=True, help="Signals in the worst-case search")
@click.option("--signal-norm", type=float, default=None, help="Signal norm (default: entries at sigma sqrt(2 ln n) over the RMS column norm)")
@click.option("--recipe", default=None, help="Take all parameters from a compare recipe")
@click.pass_obj
def compare(state: CliState, n: Optional[int], k: Optional[int], m_text: Tuple[str, ...], sigma: float,
            trials: int, signals: int, signal_norm: Optional[float], recipe: Optional[str]):
    """Lower bounds against the Lasso over a sweep of m, as CSV.

    Example:
        sparsebounds compare --n 256 --k 4 --m 40,60,80 --trials 500
        sparsebounds --out gap.csv compare --recipe gap
    """
    config = RunConfig.build(
        subcommand="compare", recipe=recipe, n=n, k=k, m_values=_m_values(m_text), sigma=sigma,
        trials=trials, signal_norm=signal_norm, seed=state.effective_seed, out=state.out, output_format="csv",
    )
    if config.recipe is not None:
        params: CompareParameters = get_recipe_manager().require(config.recipe, "compare").parameters
        params = replace(params, seed=state.seed_or(params.seed))
    else:
        if signals < 1:
            raise InputError(f"--signals must be positive, got {signals}")
        params = CompareParameters(
            n=config.n, k=config.k, sigma=config.sigma, m_values=config.m_values, trials=config.trials,
            signals=signals, signal_norm=config.signal_norm, seed=config.seed,
        )
    table = compare_table(
        params, c0=state.settings.reference_c0,
        lasso_tol=state.settings.lasso_tol, lasso_max_iter=state.settings.lasso_max_iter,
    )
    emit(state, table.to_csv(index=False, lineterminator="\n"))


def _bernstein_text(table: BernsteinTable) -> str:
    lines = [
        click.style(f"Matrix Bernstein: n={table.n}, k={table.k}, |P|={table.size}, reps={table.reps}", bold=True),
        f"rho^2 = {table.rho_sq:.6g}",
        f"{'t':>12} {'empirical':>12} {'analytic':>14} {'std error':>12}",
        "-" * 54,
    ]
    for row in table.rows:
        ok = row.analytic >= row.empirical - 3 * row.std_error
        mark = click.style("ok", fg="green") if ok else click.style("VIOLATION", fg="red", bold=True)
        lines.append(f"{row.t:>12.5g} {row.empirical:>12.5g} {row.analytic:>14.5g} {row.std_error:>12.3g}  {mark}")
    lines += [
        "",
        f"max ||X_i||:       {table.max_draw_norm:.6g} ({table.draw_norm_violations} draws above 1)",
        f"max z, mean X:     {table.max_z_mean_x:.3g}",
        f"max z, mean X^2:   {table.max_z_mean_x_sq:.3g}",
    ]
    return "\n".join(lines) + "\n"


@cli.command()
@click.option("--n", type=int, default=None, help="Ambient dimension")
@click.option("--k", type=int, default=None, help="Sparsity level (even, k < n/2)")
@click.option("--size", type=int, default=64, show_default=True, help="Draws per sum")
@click.option("--reps", type=int, default=2000, show_default=True, help="Repetitions")
@click.option("--grid-points", type=int, default=5, show_default=True, help="Grid points in (0, 2 rho^2]")
@click.option("--recipe", default=None, help="Take all parameters from a bernstein recipe")
@click.option("--format", "output_format", type=click.Choice(["json", "text"]), default="json", show_default=True)
@click.pass_obj
def bernstein(state: CliState, n: Optional[int], k: Optional[int], size: int, reps: int, grid_points: int,
              recipe: Optional[str], output_format: str):
    """Tabulate the matrix Bernstein tail against empirical frequencies.

    Example:
        sparsebounds bernstein --n 16 --k 4 --size 64 --reps 2000
    """
    config = RunConfig.build(
        subcommand="bernstein", recipe=recipe, n=n, k=k, size=size, reps=reps,
        seed=state.effective_seed, out=state.out, output_format=output_format,
    )
    if config.recipe is not None:
        params: BernsteinParameters = get_recipe_manager().require(config.recipe, "bernstein").parameters
        params = replace(params, seed=state.seed_or(params.seed))
    else:
        params = BernsteinParameters(
            n=config.n, k=config.k, size=config.size, reps=config.reps, grid_points=grid_points, seed=config.seed,
        )
    table = bernstein_empirical(params.n, params.k, params.size, params.reps, params.seed, params.grid_points)
    if output_format == "text":
        emit(state, _bernstein_text(table))
    else:
        emit(state, dumps_json(table.to_dict()))


@cli.command()
def recipes():
    """List available experiment recipes."""
    manager = get_recipe_manager()
    all_recipes = manager.get_all_recipes()

    click.echo()
    click.echo(click.style("Available Experiment Recipes", bold=True))
    click.echo("=" * 60)
    click.echo()

    for name, recipe in sorted(all_recipes.items()):
        click.echo(click.style(f"{recipe.display_name} ({name}, {recipe.kind})", bold=True))
        click.echo(f"  {recipe.description}")
        for key, value in asdict(recipe.parameters).items():
            click.echo(f"    {key + ':':<14}{value}")
        click.echo()
        click.echo("-" * 60)


def main():
    """Entry point for the CLI."""
    cli(prog_name="sparsebounds")


if __name__ == "__main__":
    main()
