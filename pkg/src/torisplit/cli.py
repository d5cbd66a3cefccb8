"""Command-line front end: ``torisplit analyze|profile|scan|verify``."""
from __future__ import annotations

import csv
import json
import sys

import click

from .field import PrecisionExhausted
from .koch import from_spec
from .melnikov import ModelParams, SplittingModel, separation_check
from .oracle import run_suites
from .resonances import TieError, build_catalog, tail_bound
from .scan import profile as make_profile
from .scan import scan_quadratic


def _load_config(ctx, param, value):
    if value:
        try:
            with open(value, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise click.BadParameter(f"cannot read config: {exc}", ctx=ctx, param=param)
        if not isinstance(cfg, dict):
            raise click.BadParameter("config must be a JSON object keyed by subcommand", ctx=ctx, param=param)
        ctx.default_map = cfg
    return value


def _data_or_exit(spec: str):
    try:
        return from_spec(spec)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _fmt_vec(v) -> str:
    return "(" + ", ".join(str(int(x)) for x in v) + ")"


@click.group()
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True,
              expose_value=False, help="JSON file with per-subcommand flag defaults.")
def cli():
    """Resonance catalogs and splitting exponents for quasi-periodic frequencies."""


@cli.command()
@click.argument("spec")
@click.option("--json", "as_json", is_flag=True, help="Emit the catalog as JSON.")
@click.option("--cutoff", type=float, default=10.0, show_default=True,
              help="List primitives with lower limit numerator up to this multiple of the primary one.")
def analyze(spec, as_json, cutoff):
    """Resonance catalog for SPEC (golden, silver, cubic-golden, omega:a, omega:1,a, [..])."""
    data = _data_or_exit(spec)
    try:
        cat = build_catalog(data, cutoff=cutoff)
        model = SplittingModel(cat)
        bounds = model.bounds()
        sep = separation_check(cat)
    except (TieError, PrecisionExhausted, ArithmeticError) as exc:
        click.echo(f"indeterminate: {exc}", err=True)
        sys.exit(3)
    if as_json:
        out = cat.describe()
        out["bounds"] = bounds
        out["separation"] = bool(sep)
        click.echo(json.dumps(out, sort_keys=True, indent=2))
        return
    f = data.describe()
    lines = [f"frequency: {data.name}", f"lambda: {f['lambda']:.4f}", f"gamma*: {cat.gamma_star_f:.4f}",
             f"j0: {_fmt_vec(cat.j0.j if isinstance(cat.j0.j, tuple) else (cat.j0.j,))}",
             f"k0: {_fmt_vec(cat.j0.k0)}"]
    if data.ell == 2:
        lines += [f"B0: {float(cat.B0):.4f}", f"A1: {bounds['A1']:.4f}"]
    else:
        lines += [f"delta: {f['delta']:.4f}", f"phi: {f['phi']:.4f}", f"B0-: {float(cat.B0):.4f}",
                  f"A0-: {bounds['A0_minus']:.4f}", f"A1+: {bounds['A1_plus']:.4f}",
                  f"|j|>=3 lower bound: {float(tail_bound(data, 3).a):.4f}"]
    lines.append(f"separation: {'yes' if sep else 'no'}")
    lines.append("")
    lines.append(f"{'j':<10}{'k0':<16}{'gamma-':>9}{'gamma*':>9}{'gamma+':>9}")
    for p in cat.primitives:
        j = p.j if isinstance(p.j, tuple) else (p.j,)
        lines.append(f"{_fmt_vec(j):<10}{_fmt_vec(p.k0):<16}{float(p.gamma_minus):>9.4f}"
                     f"{float(p.gamma_star):>9.4f}{float(p.gamma_plus):>9.4f}")
    click.echo("\n".join(lines))


@cli.command()
@click.argument("spec")
@click.option("--eps-min", type=float, default=1e-8, show_default=True)
@click.option("--eps-max", type=float, default=1e-2, show_default=True)
@click.option("--points", type=int, default=2000, show_default=True)
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--p", "p", type=float, default=3.5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, help="Write CSV here instead of stdout.")
def profile(spec, eps_min, eps_max, points, rho, p, out):
    """Sampled h1, h2, dominant harmonic and envelope as CSV."""
    if not 0 < eps_min < eps_max:
        raise click.BadParameter("need 0 < eps-min < eps-max", param_hint="--eps-min/--eps-max")
    if points < 2:
        raise click.BadParameter("must be >= 2", param_hint="--points")
    if rho <= 0:
        raise click.BadParameter("must be > 0", param_hint="--rho")
    data = _data_or_exit(spec)
    try:
        params = ModelParams(rho=rho, p=p)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    try:
        prof = make_profile(data, eps_min, eps_max, points, params)
    except (TieError, PrecisionExhausted) as exc:
        click.echo(f"indeterminate: {exc}", err=True)
        sys.exit(3)
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            prof.write_csv(fh)
    else:
        click.echo(prof.to_csv(), nl=False)


@cli.command()
@click.option("--period-max", type=int, default=2, show_default=True)
@click.option("--digit-max", type=int, default=13, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
def scan(period_max, digit_max, workers):
    """Separation test over purely periodic continued fractions, as CSV."""
    if period_max < 1:
        raise click.BadParameter("must be >= 1", param_hint="--period-max")
    if digit_max < 1:
        raise click.BadParameter("must be >= 1", param_hint="--digit-max")
    rows = scan_quadratic(period_max, digit_max, workers=max(1, workers))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["cf", "lambda", "B0", "A1", "margin", "pass", "b0_exact", "near_tie", "indeterminate", "note"])
    for r in rows:
        w.writerow([
            " ".join(map(str, r.cf.period)),
            f"{r.lam:.17g}", f"{r.B0:.17g}", f"{r.A1:.17g}", f"{r.margin:.17g}",
            "" if r.passes is None else str(r.passes).lower(),
            str(r.b0_exact).lower(), str(r.near_tie).lower(), str(r.indeterminate).lower(), r.note,
        ])


@cli.command()
@click.option("--k-max", type=int, default=200, show_default=True, help="Radius of the coverage enumeration.")
@click.option("--eps-samples", type=int, default=20, show_default=True, help="Random eps per frequency for brute force.")
@click.option("--quad-samples", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inject-fault", is_flag=True, hidden=True)
def verify(k_max, eps_samples, quad_samples, seed, inject_fault):
    """Oracle suites: enumeration coverage, brute-force exponents, quadrature."""
    if k_max < 1 or eps_samples < 1 or quad_samples < 1:
        raise click.BadParameter("bounds must be >= 1")
    results = run_suites(k_max=k_max, eps_samples=eps_samples, quad_samples=quad_samples,
                         fault=inject_fault, seed=seed)
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    if not all(r.passed for r in results):
        sys.exit(1)


def main():
    cli()


if __name__ == "__main__":
    main()
