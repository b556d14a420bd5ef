"""LTI state-space models, frequency ranges, frequency sweeps and their file formats."""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.io
import scipy.linalg

from .errors import DimensionMismatch, ParseError, SingularShift

TimeDomain = Literal["continuous", "discrete"]

_EPS = np.finfo(float).eps


def _as_matrix(x, name):
    arr = np.array(x, dtype=complex if np.iscomplexobj(x) else float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}", matrix=name)
    elif arr.ndim > 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}", matrix=name)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Realization ``(A, B, C, D)`` of ``G(s) = C (sI - A)^{-1} B + D``.

    Matrices are stored as read-only arrays. A model whose matrices have no
    imaginary part is tagged real and stored in float64; anything else is
    complex128.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    time_domain: TimeDomain = "continuous"
    scalar_field: Literal["real", "complex"] = field(init=False)

    def __post_init__(self):
        if self.time_domain not in ("continuous", "discrete"):
            raise ValueError(f"unknown time domain {self.time_domain!r}")
        mats = {k: _as_matrix(getattr(self, k), k) for k in "ABCD"}
        is_real = all(not np.iscomplexobj(m) or not np.any(m.imag) for m in mats.values())
        for k, m in mats.items():
            m = np.ascontiguousarray(m.real if is_real and np.iscomplexobj(m) else m,
                                     dtype=float if is_real else complex)
            m.setflags(write=False)
            object.__setattr__(self, k, m)
        object.__setattr__(self, "scalar_field", "real" if is_real else "complex")
        A, B, C, D = (getattr(self, k) for k in "ABCD")
        n = A.shape[0]
        if A.shape != (n, n) or n < 1:
            raise DimensionMismatch(f"A must be square and nonempty, got {A.shape}", matrix="A")
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionMismatch(f"B has shape {B.shape}, expected ({n}, m>=1)", matrix="B")
        if C.shape[1] != n or C.shape[0] < 1:
            raise DimensionMismatch(f"C has shape {C.shape}, expected (p>=1, {n})", matrix="C")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(
                f"D has shape {D.shape}, expected ({C.shape[0]}, {B.shape[1]})", matrix="D")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_real(self) -> bool:
        return self.scalar_field == "real"

    @property
    def is_continuous(self) -> bool:
        return self.time_domain == "continuous"

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def is_stable(self, margin: float = 0.0) -> bool:
        """Hurwitz (continuous) or Schur (discrete) stability test on the eigenvalues of ``A``."""
        lam = self.poles()
        if self.is_continuous:
            return bool(np.max(lam.real) < -margin)
        return bool(np.max(np.abs(lam)) < 1.0 - margin)

    def similarity(self, T) -> "StateSpaceModel":
        """Return ``(T^{-1} A T, T^{-1} B, C T, D)``."""
        T = np.asarray(T)
        return StateSpaceModel(np.linalg.solve(T, self.A @ T), np.linalg.solve(T, self.B),
                               self.C @ T, self.D, self.time_domain)

    def __eq__(self, other):
        if not isinstance(other, StateSpaceModel):
            return NotImplemented
        return (self.time_domain == other.time_domain
                and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "ABCD"))

    __hash__ = None

    def __repr__(self):
        return (f"StateSpaceModel(n={self.n}, m={self.m}, p={self.p}, "
                f"{self.time_domain}, {self.scalar_field})")


@dataclass(frozen=True)
class FrequencyRange:
    """One of the four frequency-range types, frequencies in rad/s.

    ``kind`` is ``"ef"``, ``"lf"``, ``"mf"`` or ``"hf"``. A low-frequency
    range ``[-wl, wl]`` is treated as the middle-frequency range with
    ``w1 = -wl`` and ``w2 = wl``.
    """

    kind: Literal["ef", "lf", "mf", "hf"]
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("frequencies must be finite")
        if self.kind == "lf":
            if not lo > 0:
                raise ValueError(f"low-frequency edge must be > 0, got {lo}")
        elif self.kind == "hf":
            if not lo > 0:
                raise ValueError(f"high-frequency edge must be > 0, got {lo}")
        elif self.kind == "mf":
            if not 0 <= lo < hi:
                raise ValueError(f"middle-frequency range needs 0 <= w1 < w2, got [{lo}, {hi}]")
        elif self.kind != "ef":
            raise ValueError(f"unknown frequency range kind {self.kind!r}")

    @classmethod
    def ef(cls) -> "FrequencyRange":
        return cls("ef")

    @classmethod
    def lf(cls, wl: float) -> "FrequencyRange":
        return cls("lf", wl)

    @classmethod
    def mf(cls, w1: float, w2: float) -> "FrequencyRange":
        return cls("mf", w1, w2)

    @classmethod
    def hf(cls, wh: float) -> "FrequencyRange":
        return cls("hf", wh)

    @classmethod
    def parse(cls, text: str) -> "FrequencyRange":
        """Parse ``ef``, ``lf:WL``, ``mf:W1,W2`` or ``hf:WH``."""
        kind, _, rest = text.strip().lower().partition(":")
        try:
            if kind == "ef" and not rest:
                return cls.ef()
            if kind in ("lf", "hf"):
                return cls(kind, float(rest))
            if kind == "mf":
                w1, w2 = (float(v) for v in rest.split(","))
                return cls.mf(w1, w2)
        except ValueError as exc:
            raise ValueError(f"bad band {text!r}: {exc}") from None
        raise ValueError(f"bad band {text!r}; expected ef | lf:WL | mf:W1,W2 | hf:WH")

    def __str__(self):
        if self.kind == "ef":
            return "ef"
        if self.kind == "mf":
            return f"mf:{self.lo!r},{self.hi!r}"
        return f"{self.kind}:{self.lo!r}"

    @property
    def w1(self) -> float:
        if self.kind == "lf":
            return -self.lo
        if self.kind == "mf":
            return self.lo
        raise AttributeError(f"w1 undefined for {self.kind} range")

    @property
    def w2(self) -> float:
        if self.kind in ("lf", "mf"):
            return self.hi if self.kind == "mf" else self.lo
        raise AttributeError(f"w2 undefined for {self.kind} range")

    @property
    def wl(self) -> float:
        if self.kind != "lf":
            raise AttributeError("wl only defined for low-frequency ranges")
        return self.lo

    @property
    def wh(self) -> float:
        if self.kind != "hf":
            raise AttributeError("wh only defined for high-frequency ranges")
        return self.lo

    @property
    def wc(self) -> float:
        """Band centre ``(w1 + w2) / 2``; zero for low-frequency ranges."""
        return 0.0 if self.kind == "lf" else (self.w1 + self.w2) / 2

    @property
    def wd(self) -> float:
        """Band half-width ``(w2 - w1) / 2``; equals ``wl`` for low-frequency ranges."""
        return self.lo if self.kind == "lf" else (self.w2 - self.w1) / 2

    @property
    def edge(self) -> float:
        """The frequency entering the ``(rho^2 + w^2)^{1/2}`` scale of the band."""
        if self.kind == "hf":
            return self.lo
        if self.kind in ("lf", "mf"):
            return self.wd
        raise AttributeError("entire-frequency range has no edge")

    def contains(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        if self.kind == "ef":
            return np.ones(w.shape, bool)
        if self.kind == "hf":
            return np.abs(w) >= self.lo
        return (w >= self.w1) & (w <= self.w2)


@dataclass(frozen=True, eq=False)
class SigmaSweep:
    """Sampled largest singular values; ``omega`` holds rad/s or, for discrete models, angles."""

    omega: np.ndarray
    sigma_max: np.ndarray
    domain: Literal["continuous", "discrete"] = "continuous"
    skipped: tuple = ()

    def __post_init__(self):
        w = np.array(self.omega, dtype=float).reshape(-1)
        s = np.array(self.sigma_max, dtype=float).reshape(-1)
        if w.shape != s.shape:
            raise ValueError("omega and sigma_max must have equal length")
        if np.any(np.diff(w) <= 0):
            raise ValueError("sweep frequencies must be strictly increasing")
        if np.any(s < 0) or np.any(np.isnan(s)):
            raise ValueError("sigma_max must be nonnegative")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "sigma_max", s)

    def __len__(self):
        return self.omega.size

    def max(self) -> float:
        return float(self.sigma_max.max()) if len(self) else 0.0

    def __eq__(self, other):
        if not isinstance(other, SigmaSweep):
            return NotImplemented
        return (self.domain == other.domain and np.array_equal(self.omega, other.omega)
                and np.array_equal(self.sigma_max, other.sigma_max))

    __hash__ = None


# --------------------------------------------------------------------------
# transfer function evaluation

def _rcond_lu(lu, anorm):
    func = scipy.linalg.lapack.zgecon if np.iscomplexobj(lu) else scipy.linalg.lapack.dgecon
    rcond, _ = func(lu, anorm, norm="1")
    return rcond


def eval_transfer(model: StateSpaceModel, point: complex) -> np.ndarray:
    """Evaluate ``C (point I - A)^{-1} B + D`` with an LU solve.

    ``point`` is ``s = j*omega`` for continuous models and ``z = exp(j*theta)``
    for discrete ones. Raises :class:`SingularShift` when the shifted matrix
    has reciprocal condition number below machine epsilon.
    """
    M = point * np.eye(model.n) - model.A
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    rcond = _rcond_lu(lu, np.linalg.norm(M, 1))
    if not rcond >= _EPS:
        raise SingularShift(point, rcond)
    X = scipy.linalg.lu_solve((lu, piv), model.B.astype(M.dtype), check_finite=False)
    return model.C @ X + model.D


class TransferEvaluator:
    """Repeated evaluation of a transfer function using a cached Schur form of ``A``.

    Each point then costs a triangular solve instead of an LU factorization.
    """

    def __init__(self, model: StateSpaceModel):
        self.model = model
        T, Z = scipy.linalg.schur(model.A.astype(complex), output="complex")
        self._T = T
        self._CZ = model.C @ Z
        self._ZB = Z.conj().T @ model.B
        self._D = model.D
        self._diag = np.diag(T).copy()

    def __call__(self, point: complex) -> np.ndarray:
        M = -self._T.copy()
        M[np.diag_indices_from(M)] += point
        rcond, _ = scipy.linalg.lapack.ztrcon(M, norm="1", uplo="U", diag="N")
        if not rcond >= _EPS:
            raise SingularShift(point, rcond)
        X = scipy.linalg.solve_triangular(M, self._ZB, check_finite=False)
        return self._CZ @ X + self._D

    def sigma_max(self, point: complex) -> float:
        return float(np.linalg.svd(self(point), compute_uv=False)[0])


_CHUNK_ELEMS = 2_000_000


def freqresp(model: StateSpaceModel, points) -> np.ndarray:
    """Batched ``G(point)`` for an array of complex points, shape ``(k, p, m)``.

    Points closer to an eigenvalue of ``A`` than ``sqrt(eps) * max(1, ||A||)``
    give ``nan`` entries instead of raising.
    """
    pts = np.asarray(points, dtype=complex).reshape(-1)
    n = model.n
    A = model.A.astype(complex)
    B = model.B.astype(complex)
    lam = np.linalg.eigvals(A)
    near = np.min(np.abs(pts[:, None] - lam[None, :]), axis=1) <= np.sqrt(_EPS) * max(1.0, np.linalg.norm(A, 2))
    out = np.empty((pts.size, model.p, model.m), dtype=complex)
    step = max(1, _CHUNK_ELEMS // (n * n))
    I = np.eye(n)
    for lo in range(0, pts.size, step):
        s = pts[lo:lo + step]
        M = s[:, None, None] * I - A
        M[near[lo:lo + step]] = I  # placeholder, overwritten with nan below
        X = np.linalg.solve(M, np.broadcast_to(B, (s.size, n, model.m)))
        out[lo:lo + step] = model.C @ X + model.D
    out[near] = np.nan
    return out


def sigma_max_at(model: StateSpaceModel, points) -> np.ndarray:
    """Largest singular value of ``G`` at each complex point (``nan`` where singular)."""
    G = freqresp(model, points)
    bad = np.isnan(G).any(axis=(1, 2))
    G[bad] = 0
    sv = np.linalg.svd(G, compute_uv=False)[:, 0]
    sv[bad] = np.nan
    return sv


# --------------------------------------------------------------------------
# native json

def _encode_matrix(M):
    if np.iscomplexobj(M):
        return {"real": M.real.tolist(), "imag": M.imag.tolist()}
    return M.tolist()


def _decode_matrix(obj, name, path):
    try:
        if isinstance(obj, dict):
            return np.array(obj["real"], dtype=float) + 1j * np.array(obj["imag"], dtype=float)
        return np.array(obj, dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"matrix {name}: {exc}", path=path) from None


def model_to_dict(model: StateSpaceModel) -> dict:
    return {
        "n": model.n, "m": model.m, "p": model.p,
        "time_domain": model.time_domain,
        "A": _encode_matrix(model.A), "B": _encode_matrix(model.B),
        "C": _encode_matrix(model.C), "D": _encode_matrix(model.D),
    }


def model_from_dict(data: dict, path=None) -> StateSpaceModel:
    try:
        mats = {k: _decode_matrix(data[k], k, path) for k in "ABCD"}
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}", path=path) from None
    for k, M in mats.items():
        if M.ndim != 2:
            raise DimensionMismatch(f"{k} is not a 2-D array (shape {M.shape})", matrix=k)
    header = {k: data.get(k) for k in ("n", "m", "p")}
    expected = {"n": mats["A"].shape[0], "m": mats["B"].shape[1], "p": mats["C"].shape[0]}
    for k, v in header.items():
        if v is not None and v != expected[k]:
            raise DimensionMismatch(f"header {k}={v} disagrees with matrices ({expected[k]})", matrix=k)
    return StateSpaceModel(mats["A"], mats["B"], mats["C"], mats["D"],
                           data.get("time_domain", "continuous"))


def save_model(model: StateSpaceModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path, format: str = "native-json") -> StateSpaceModel:
    """Read a model from a native JSON file or a directory of MatrixMarket files.

    The MatrixMarket layout is one file per matrix named ``A.mtx``, ``B.mtx``,
    ``C.mtx`` and optionally ``D.mtx`` (zero when absent).
    """
    path = Path(path)
    if format == "native-json":
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(str(exc), path=path) from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, path=path, line=exc.lineno, offset=exc.colno) from None
        if not isinstance(data, dict):
            raise ParseError("top-level JSON value must be an object", path=path, line=1, offset=1)
        return model_from_dict(data, path)
    if format == "matrix-market-set":
        mats = {}
        for k in "ABCD":
            f = path / f"{k}.mtx"
            if not f.exists():
                if k == "D":
                    continue
                raise ParseError(f"missing {f.name}", path=path)
            try:
                M = scipy.io.mmread(str(f))
            except Exception as exc:  # scipy raises several types for malformed files
                raise ParseError(str(exc), path=f) from None
            mats[k] = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        if "D" not in mats:
            mats["D"] = np.zeros((mats["C"].shape[0], mats["B"].shape[1]))
        return StateSpaceModel(mats["A"], mats["B"], mats["C"], mats["D"], "continuous")
    raise ValueError(f"unknown model format {format!r}")


def save_model_matrix_market(model: StateSpaceModel, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k in "ABCD":
        scipy.io.mmwrite(str(directory / f"{k}.mtx"), getattr(model, k), precision=17)


# --------------------------------------------------------------------------
# sweeps

def save_sweep(sweep: SigmaSweep, path, format: str = "csv") -> None:
    """Write a sweep as CSV (header ``omega,sigma_max``) or JSON, at full precision."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega", "sigma_max"])
            for om, sv in zip(sweep.omega, sweep.sigma_max):
                w.writerow([f"{om:.17g}", f"{sv:.17g}"])
    elif format == "json":
        payload = {"domain": sweep.domain, "omega": sweep.omega.tolist(),
                   "sigma_max": sweep.sigma_max.tolist()}
        path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown sweep format {format!r}")


def load_sweep(path, format: str = "csv", domain: str = "continuous") -> SigmaSweep:
    path = Path(path)
    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["omega", "sigma_max"]:
            raise ParseError("expected header 'omega,sigma_max'", path=path, line=1)
        body = rows[1:]
        return SigmaSweep([float(r[0]) for r in body], [float(r[1]) for r in body], domain)
    data = json.loads(path.read_text(encoding="utf-8"))
    return SigmaSweep(data["omega"], data["sigma_max"], data.get("domain", domain))


def bundled_model_path(name: str) -> str:
    """Path of a fixture shipped with the package (``example1`` or ``example2``)."""
    return os.path.join(os.path.dirname(__file__), "data", f"{name}.json")


def example_model(name: str) -> StateSpaceModel:
    return load_model(bundled_model_path(name))
