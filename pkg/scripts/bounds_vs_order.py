"""Finite-frequency bound against reduced order for a rho sweep.

Uses the ``{rho* + eps, 10 rho*, 100 rho*}`` grid on the admissible side and
adds the entire-range bound of plain balanced truncation for comparison.
"""
import csv
from pathlib import Path

import click

from ffmor.bt import balance, ef_bounds
from ffmor.model import FrequencyRange, bundled_model_path, load_model
from ffmor.pfdbt import default_rho_grid, ff_bounds


@click.command()
@click.option("--model", "model_path", default="example2", help="model file or example1/example2")
@click.option("--band", default="hf:2", show_default=True)
@click.option("--routing", type=click.Choice(["r1", "r2"]), default="r1")
@click.option("--out", type=click.Path(path_type=Path), default=Path("out/bounds_vs_order.csv"))
def main(model_path: str, band: str, routing: str, out: Path):
    if model_path in ("example1", "example2"):
        model_path = bundled_model_path(model_path)
    model = load_model(model_path)
    freq_band = FrequencyRange.parse(band)
    grid = default_rho_grid(model, freq_band, routing)
    cols = {"lyabt": ef_bounds(balance(model).hankel_sv)}
    for rho in grid:
        cols[f"pfdbt[rho={rho:.6g}]"] = ff_bounds(model, freq_band, rho, routing)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", *cols])
        for r in range(1, model.n):
            w.writerow([r, *(repr(float(c[r - 1])) for c in cols.values())])
    click.echo(f"wrote {out} ({model.n - 1} orders, rho grid {[f'{x:.4g}' for x in grid]})")


if __name__ == "__main__":
    main()
