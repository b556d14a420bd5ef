"""Minimum orders meeting a tolerance: LyaBT against PFDBT (high-frequency band).

Expects a converted benchmark model, e.g.::

    ffmor fetch-benchmark iss --dest data/iss.json
    python scripts/iss_min_order.py data/iss.json --tol 1e-3 --edge 35
"""
import click

from ffmor.bt import balance, ef_bounds
from ffmor.errors import NotAchievable
from ffmor.model import FrequencyRange, load_model
from ffmor.pfdbt import default_rho_grid, min_order_for_tolerance


@click.command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", default=1e-3, show_default=True)
@click.option("--edge", default=35.0, show_default=True, help="HF band edge (rad/s)")
@click.option("--routing", type=click.Choice(["r1", "r2"]), default="r1")
def main(model_path: str, tol: float, edge: float, routing: str):
    model = load_model(model_path)
    band = FrequencyRange.hf(edge)
    ef = ef_bounds(balance(model).hankel_sv)
    lya = next((r for r in range(1, model.n) if ef[r - 1] <= tol), None)
    click.echo(f"n = {model.n}, tol = {tol:g}, band = {band}")
    click.echo(f"LyaBT min order: {lya if lya is not None else 'not achievable'}")
    for rho in default_rho_grid(model, band, routing):
        try:
            r = min_order_for_tolerance(model, band, rho, routing, tol)
            click.echo(f"PFDBT-{routing.upper()} rho={rho:.6g}: min order {r}")
        except NotAchievable as exc:
            click.echo(f"PFDBT-{routing.upper()} rho={rho:.6g}: not achievable ({exc})")


if __name__ == "__main__":
    main()
