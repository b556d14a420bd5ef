"""Command-line front end: ``ffmor reduce | analyze | bounds | compare | fetch-benchmark``."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import urllib.request
import warnings
import zipfile
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import analysis, bt, pfdbt
from .errors import FfmorError, NotAdmissible, StabilityLost
from .mapping import FLAVORS
from .model import (FrequencyRange, StateSpaceModel, bundled_model_path, load_model, save_model,
                    save_sweep)

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2
METHODS = ("lyabt", "spa", "pfdbt")

BENCHMARKS = {
    "cdplayer": ("http://slicot.org/objects/software/shared/bench-data/CDplayer.zip", "CDplayer.mat"),
    "iss": ("http://slicot.org/objects/software/shared/bench-data/iss.zip", "iss.mat"),
}


class BandType(click.ParamType):
    name = "band"

    def convert(self, value, param, ctx):
        if isinstance(value, FrequencyRange):
            return value
        try:
            return FrequencyRange.parse(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


BAND = BandType()


def _load(path: str, fmt: str) -> StateSpaceModel:
    # bundled fixtures may be named directly
    if fmt == "native-json" and path in ("example1", "example2") and not Path(path).exists():
        path = bundled_model_path(path)
    return load_model(path, format=fmt)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False,
                               default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_ERROR)


def _reduce(model, method, band, order, rho, routing):
    if method == "lyabt":
        return bt.lyabt(model, order)
    if method == "spa":
        return bt.spa(bt.balance(model), order)
    if band.kind == "ef":
        raise click.UsageError("pfdbt needs a finite band (lf:, mf: or hf:)")
    if rho is None:
        raise click.UsageError("pfdbt needs --rho X or --rho-auto")
    return pfdbt.pfdbt(model, band, rho, order, routing)


def _auto_rho(model, band, order, routing):
    grid = pfdbt.default_rho_grid(model, band, routing)
    sweep = pfdbt.sweep_rho(model, band, order, routing, grid)
    return sweep.best_rho, sweep


@click.group()
def main() -> None:
    """Finite-frequency balanced truncation tools."""


_model_opts = [
    click.option("--model", "model_path", required=True,
                 help="Model file (native JSON), MatrixMarket directory, or example1/example2."),
    click.option("--model-format", type=click.Choice(["native-json", "matrix-market-set"]),
                 default="native-json", show_default=True),
]


def _with_model(f):
    for opt in reversed(_model_opts):
        f = opt(f)
    return f


@main.command()
@_with_model
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--band", type=BAND, default="ef", show_default=True,
              help="ef | lf:WL | mf:W1,W2 | hf:WH")
@click.option("--order", type=int, required=True, help="Reduced order r, 1 <= r < n.")
@click.option("--rho", type=float, default=None, help="Mapping parameter (pfdbt).")
@click.option("--rho-auto", is_flag=True, help="Pick rho minimizing the bound over {rho*+eps}x{1,10,100}.")
@click.option("--routing", type=click.Choice(["r1", "r2"]), default="r1", show_default=True)
@click.option("--points", type=int, default=None, help="Error sweep length [FFMOR_GRID_POINTS or 600].")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def reduce(model_path, model_format, method, band, order, rho, rho_auto, routing, points, out_dir):
    """Reduce a model; write reduced.json, report.json and error_sweep.csv."""
    if rho is not None and rho_auto:
        raise click.UsageError("--rho and --rho-auto are exclusive")
    out = Path(out_dir)
    caught = []
    try:
        model = _load(model_path, model_format)
        rho_sweep = None
        if method == "pfdbt" and rho_auto:
            if band.kind == "ef":
                raise click.UsageError("pfdbt needs a finite band (lf:, mf: or hf:)")
            rho, rho_sweep = _auto_rho(model, band, order, routing)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", StabilityLost)
            res = _reduce(model, method, band, order, rho, routing)
        n_points = analysis.grid_points() if points is None else points
        sweep = analysis.band_error(model, res.reduced, band, n_points)
        worst = analysis.band_error_sup(model, res.reduced, band, n_points)
    except FfmorError as exc:
        _fail(exc)
    out.mkdir(parents=True, exist_ok=True)
    save_model(res.reduced, out / "reduced.json")
    save_sweep(sweep, out / "error_sweep.csv")
    lost = [w for w in caught if issubclass(w.category, StabilityLost)]
    report = {
        "method": method,
        "band": str(band),
        "n": model.n,
        "order": res.order,
        "bound": res.bound,
        "bound_kind": res.bound_kind,
        "scale": res.scale,
        "rho": res.rho,
        "routing": res.routing,
        "tail_sv": res.tail_sv,
        "hankel_sv": res.hankel_sv,
        "reduced_stable": res.reduced_stable,
        "reduced_complex": not res.reduced.is_real,
        "max_error": worst,
        "error_points": len(sweep),
        "warnings": [str(w.message) for w in lost],
    }
    if rho_sweep is not None:
        report["rho_sweep"] = [
            {"rho": p.rho, "bound": p.bound, "reduced_stable": p.reduced_stable}
            for p in rho_sweep.points]
        report["rho_skipped"] = [{"rho": r, "reason": why} for r, why in rho_sweep.skipped]
    _write_json(out / "report.json", report)
    click.echo(f"r={res.order} bound={res.bound:.6g} max_error={worst:.6g} -> {out}")
    sys.exit(EXIT_WARN if lost else EXIT_OK)


@main.command()
@_with_model
@click.option("--band", type=BAND, default="ef", show_default=True)
@click.option("--rho", "rhos", type=float, multiple=True,
              help="Estimate the band gain through each mapping flavor at this rho (repeatable).")
@click.option("--variant", type=click.Choice(["consistent", "printed"]), default="consistent",
              show_default=True)
@click.option("--points", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def analyze(model_path, model_format, band, rhos, variant, points, out_dir):
    """Sweep sigma_max over a band; with --rho also write mapped band-gain estimates."""
    out = Path(out_dir)
    try:
        model = _load(model_path, model_format)
        sweep = analysis.sigma_sweep(model, band, points)
        summary = {"band": str(band), "band_max": sweep.max(), "skipped": list(sweep.skipped)}
        if model.is_stable():
            gamma, peak = analysis.hinf_norm(model)
            summary.update(hinf=gamma, hinf_omega=_finite(peak))
        rows = []
        if rhos and band.kind == "ef":
            raise click.UsageError("--rho needs a finite band")
        for rho in rhos:
            for flavor in FLAVORS:
                try:
                    est = analysis.band_gain_bound(model, band, rho, flavor, variant)
                except NotAdmissible:
                    est = None
                rows.append((rho, flavor, est))
    except FfmorError as exc:
        _fail(exc)
    out.mkdir(parents=True, exist_ok=True)
    save_sweep(sweep, out / "sweep.csv")
    if rows:
        with open(out / "gains.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "flavor", "estimate", "band_max"])
            for rho, flavor, est in rows:
                w.writerow([f"{rho:.17g}", flavor, "" if est is None else f"{est:.17g}",
                            f"{sweep.max():.17g}"])
    _write_json(out / "summary.json", summary)
    click.echo(f"band max {sweep.max():.6g} over {len(sweep)} points -> {out}")


@main.command()
@_with_model
@click.option("--band", type=BAND, required=True)
@click.option("--rho", "rhos", type=float, multiple=True,
              help="PFDBT parameter (repeatable); default {rho*+eps}x{1,10,100}.")
@click.option("--routing", type=click.Choice(["r1", "r2"]), default="r1", show_default=True)
@click.option("--tol", type=float, default=None, help="Report the minimum order meeting this tolerance.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def bounds(model_path, model_format, band, rhos, routing, tol, out_dir):
    """Bound versus order for LyaBT/SPA (entire range) and PFDBT (band) at each rho."""
    if band.kind == "ef":
        raise click.UsageError("bounds needs a finite band")
    out = Path(out_dir)
    try:
        model = _load(model_path, model_format)
        rhos = list(rhos) or pfdbt.default_rho_grid(model, band, routing)
        columns = {"lyabt": bt.ef_bounds(bt.balance(model).hankel_sv)}
        columns["spa"] = columns["lyabt"]
        for rho in rhos:
            columns[f"pfdbt[rho={rho:.6g},{routing}]"] = pfdbt.ff_bounds(model, band, rho, routing)
    except FfmorError as exc:
        _fail(exc)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bounds.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", *columns])
        for r in range(1, model.n):
            w.writerow([r, *(f"{col[r - 1]:.17g}" for col in columns.values())])
    if tol is not None:
        orders = {}
        for name, col in columns.items():
            hit = [r for r in range(1, model.n) if col[r - 1] <= tol]
            orders[name] = hit[0] if hit else None
        _write_json(out / "min_order.json", {"tol": tol, "band": str(band), "min_order": orders})
        for name, r in orders.items():
            click.echo(f"{name}: {'not achievable' if r is None else r}")
    click.echo(f"wrote {out / 'bounds.csv'}")


@main.command()
@_with_model
@click.option("--band", type=BAND, required=True)
@click.option("--order", type=int, required=True)
@click.option("--method", "methods", type=click.Choice(METHODS), multiple=True, required=True,
              help="Repeatable; columns appear in the given order.")
@click.option("--rho", type=float, default=None)
@click.option("--routing", type=click.Choice(["r1", "r2"]), default="r1", show_default=True)
@click.option("--points", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def compare(model_path, model_format, band, order, methods, rho, routing, points, out_path):
    """In-band error curves of several methods on one frequency axis (CSV)."""
    try:
        model = _load(model_path, model_format)
        if "pfdbt" in methods and rho is None and band.kind != "ef":
            rho, _ = _auto_rho(model, band, order, routing)
        curves, labels = [], []
        for method in methods:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", StabilityLost)
                res = _reduce(model, method, band, order, rho, routing)
            curves.append(analysis.band_error(model, res.reduced, band, points))
            label, k = method, 2
            while label in labels:
                label, k = f"{method}_{k}", k + 1
            labels.append(label)
    except FfmorError as exc:
        _fail(exc)
    omega = curves[0].omega
    if any(not np.array_equal(c.omega, omega) for c in curves):
        _fail(FfmorError("error sweeps skipped different frequencies; cannot align columns"))
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", *labels])
        for i, om in enumerate(omega):
            w.writerow([f"{om:.17g}", *(f"{c.sigma_max[i]:.17g}" for c in curves)])
    click.echo(f"wrote {out_path}")


def convert_benchmark(archive: bytes, member: str) -> StateSpaceModel:
    """Build a model from a zipped MATLAB file holding ``A``, ``B``, ``C`` (and maybe ``D``)."""
    import scipy.io

    with zipfile.ZipFile(io.BytesIO(archive)) as zf:
        names = {Path(n).name.lower(): n for n in zf.namelist()}
        key = names.get(member.lower())
        if key is None:
            raise FfmorError(f"{member} not found in archive ({sorted(names)})")
        data = scipy.io.loadmat(io.BytesIO(zf.read(key)))

    def dense(M):
        return M.toarray() if hasattr(M, "toarray") else np.asarray(M)

    A, B, C = (dense(data[k]) for k in "ABC")
    D = dense(data["D"]) if "D" in data else np.zeros((C.shape[0], B.shape[1]))
    return StateSpaceModel(A, B, C, D)


@main.command("fetch-benchmark")
@click.argument("name", type=click.Choice(sorted(BENCHMARKS)))
@click.option("--dest", type=click.Path(dir_okay=False), required=True, help="Output native-json path.")
@click.option("--url", default=None, help="Override the download location.")
def fetch_benchmark(name, dest, url: Optional[str]):
    """Download a benchmark model and convert it to native JSON (data is not bundled)."""
    default_url, member = BENCHMARKS[name]
    try:
        with urllib.request.urlopen(url or default_url, timeout=60) as resp:
            payload = resp.read()
        model = convert_benchmark(payload, member)
    except (OSError, FfmorError, KeyError) as exc:
        _fail(exc)
    save_model(model, dest)
    click.echo(f"{name}: n={model.n} m={model.m} p={model.p} -> {dest}")


if __name__ == "__main__":
    main()
