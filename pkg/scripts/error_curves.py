"""In-band error curves for LyaBT, SPA and PFDBT on Example 2.

Writes one CSV per low-frequency edge with the largest singular value of
``G - G_r`` over the band for each method, plus a table of a priori bounds.
"""
import csv
import warnings
from pathlib import Path

import click
import numpy as np

from ffmor.analysis import band_error
from ffmor.bt import balance, lyabt, spa
from ffmor.errors import StabilityLost
from ffmor.model import FrequencyRange, example_model
from ffmor.pfdbt import pfdbt


@click.command()
@click.option("--out", type=click.Path(path_type=Path), default=Path("out"))
@click.option("--order", "r", default=3, show_default=True)
@click.option("--edges", default="1,2", help="comma-separated LF edges")
@click.option("--rhos", default="4,7,20", help="magnitudes; R2 uses the negatives")
@click.option("--points", default=600, show_default=True)
def main(out: Path, r: int, edges: str, rhos: str, points: int):
    model = example_model("example2")
    out.mkdir(parents=True, exist_ok=True)
    bounds = []
    for edge in (float(e) for e in edges.split(",")):
        band = FrequencyRange.lf(edge)
        results = {"LyaBT": lyabt(model, r), "SPA": spa(balance(model), r)}
        for rho in (float(x) for x in rhos.split(",")):
            for routing, sign in (("r1", 1.0), ("r2", -1.0)):
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", StabilityLost)
                    res = pfdbt(model, band, sign * rho, r, routing)
                label = f"PFDBT-{routing.upper()} rho={sign * rho:g}"
                if caught:
                    label += " (unstable)"
                results[label] = res
        omega, cols = None, {}
        for label, res in results.items():
            sw = band_error(model, res.reduced, band, points)
            omega = sw.omega
            cols[label] = sw.sigma_max
            bounds.append((edge, label, repr(res.bound), res.bound_kind,
                           repr(float(np.max(sw.sigma_max)))))
        path = out / f"error_curves_lf{edge:g}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega", *cols])
            for k, om in enumerate(omega):
                w.writerow([repr(float(om)), *(repr(float(c[k])) for c in cols.values())])
        click.echo(f"wrote {path}")
    path = out / "error_bounds.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band_edge", "method", "bound", "bound_kind", "band_max_error"])
        w.writerows(bounds)
    for edge, label, b, kind, e in bounds:
        click.echo(f"lf:{edge:g} {label:<32} error {float(e):.3e}  bound {float(b):.3e} ({kind})")


if __name__ == "__main__":
    main()
