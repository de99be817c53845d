"""Correlation structures of the stationary Gaussian disorder field.

A model describes the two-point function rho_n (rho_0 = 1, rho_{-n} = rho_n)
of a summable family, carries an analytic bound on the absolute tail
sum, and is only accepted when the truncated Fourier symbol

    f(x) = 1 + 2 * sum_{k>=1} rho_k cos(k x)

stays positive: a positive symbol minimum certifies that every finite
covariance matrix is invertible with eigenvalues bounded away from zero,
which every change-of-measure identity downstream relies on.

Toeplitz solves against the all-ones vector live here too; the quadratic
form <Ups_k^{-1} 1_k, 1_k> is the exponent of the tilting costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, matmul_toeplitz, solve_toeplitz
from scipy.special import zeta as hurwitz_zeta

from .errors import DomainError, NumericalError

SZEGO_GATE = 1e-6          # positivity floor for the symbol minimum
SOLVER_TOL_PER_K = 1e-9    # residual inf-norm budget is tol * k

KINDS = ("iid", "finite-range", "polynomial", "exponential")


@dataclass(frozen=True)
class CorrelationModel:
    """Validated two-point function. Build through the factory functions."""

    kind: str
    params: tuple
    truncation_radius: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown correlation kind {self.kind!r}")

    @property
    def is_finite_range(self) -> bool:
        return self.kind in ("iid", "finite-range")

    @property
    def range_radius(self) -> int:
        """Largest lag with rho != 0, or the truncation radius if infinite range."""
        if self.kind == "iid":
            return 0
        if self.kind == "finite-range":
            return len(self.params) - 1
        return self.truncation_radius

    def label(self) -> str:
        if self.kind == "iid":
            return "iid"
        if self.kind == "finite-range":
            return "fr:" + ",".join(repr(float(p)) for p in self.params)
        tag = "poly" if self.kind == "polynomial" else "exp"
        return f"{tag}:{self.params[0]!r}"


# ---------------------------------------------------------------------------
# evaluation of rho


def rho(model: CorrelationModel, n: int) -> float:
    """Two-point function at (signed) lag n; symmetric by construction."""
    k = abs(int(n))
    if model.kind == "iid":
        return 1.0 if k == 0 else 0.0
    if model.kind == "finite-range":
        return float(model.params[k]) if k < len(model.params) else 0.0
    # delegate so scalar and vector evaluations agree bitwise
    return float(rho_array(model, k)[k])


def rho_array(model: CorrelationModel, nmax: int) -> np.ndarray:
    """Vector (rho_0, ..., rho_nmax)."""
    if nmax < 0:
        raise DomainError("nmax must be >= 0")
    k = np.arange(nmax + 1, dtype=np.float64)
    if model.kind == "iid":
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    if model.kind == "finite-range":
        out = np.zeros(nmax + 1)
        m = min(nmax + 1, len(model.params))
        out[:m] = model.params[:m]
        return out
    if model.kind == "polynomial":
        return (1.0 + k) ** (-model.params[0])
    return np.exp(-model.params[0] * k)


def abs_tail_bound(model: CorrelationModel, radius: int) -> float:
    """Analytic upper bound on sum_{|n| > radius} |rho_n|.

    Exact (zero) for finite range; Hurwitz-zeta tail for the polynomial
    family; geometric tail for the exponential family.
    """
    if radius < 0:
        raise DomainError("radius must be >= 0")
    if model.kind == "iid":
        return 0.0
    if model.kind == "finite-range":
        return 0.0 if radius >= len(model.params) - 1 else float(
            2.0 * np.abs(np.asarray(model.params[radius + 1:])).sum())
    if model.kind == "polynomial":
        a = model.params[0]
        # sum_{k>radius} (1+k)^-a = zeta(a, radius+2), exact
        return float(2.0 * hurwitz_zeta(a, radius + 2))
    r = model.params[0]
    q = math.exp(-r)
    return float(2.0 * q ** (radius + 1) / (1.0 - q))


def upsilon_infinity(model: CorrelationModel) -> float:
    """Total correlation mass sum_{n in Z} rho_n (abs. error <= 1e-10)."""
    if model.kind == "iid":
        return 1.0
    if model.kind == "finite-range":
        return float(1.0 + 2.0 * np.asarray(model.params[1:]).sum())
    if model.kind == "polynomial":
        # 1 + 2 sum_{k>=1} (1+k)^-a = 2 zeta(a) - 1, evaluated to machine accuracy
        return float(2.0 * hurwitz_zeta(model.params[0], 1) - 1.0)
    q = math.exp(-model.params[0])
    return float(1.0 + 2.0 * q / (1.0 - q))


# ---------------------------------------------------------------------------
# Szego symbol


def _symbol_on_grid(rhos: np.ndarray, grid_points: int) -> np.ndarray:
    """Truncated symbol on x_j = 2 pi j / grid_points via FFT folding.

    Returns values for j = 0..grid_points//2 (the symbol is even)."""
    m = int(grid_points)
    c = np.zeros(m)
    k = np.arange(1, len(rhos))
    np.add.at(c, k % m, rhos[1:])
    return 1.0 + 2.0 * np.fft.rfft(c).real[: m // 2 + 1]


def szego_symbol_min(model: CorrelationModel, grid_points: int = 8192) -> float:
    """Minimum of the truncated symbol over [0, 2 pi].

    For finite-range models the grid minimum is refined with a
    Lipschitz-controlled local search so the result is within 1e-6 of the
    true minimum.  For infinite-range models the truncation uncertainty is
    2 * abs_tail_bound(truncation_radius); combine with that band when
    gating.
    """
    if grid_points < 1024:
        raise DomainError("grid_points must be >= 1024")
    rhos = rho_array(model, model.range_radius)
    vals = _symbol_on_grid(rhos, grid_points)
    vmin = float(vals.min())
    if not model.is_finite_range or len(rhos) == 1:
        return vmin
    k = np.arange(len(rhos))
    lip = float(2.0 * (k * np.abs(rhos)).sum())
    if lip == 0.0:
        return vmin
    h = 2.0 * math.pi / grid_points
    # any grid point within lip*h of the running minimum may hide the true one
    cand = np.nonzero(vals <= vmin + lip * h)[0]
    step = min(2e-6 / lip, h)
    npts = max(3, int(math.ceil(2 * h / step)) + 1)
    for j in cand:
        x0 = j * h
        xs = np.linspace(x0 - h, x0 + h, npts)
        fv = 1.0 + 2.0 * (rhos[1:][None, :] * np.cos(np.outer(xs, k[1:]))).sum(axis=1)
        vmin = min(vmin, float(fv.min()))
    return vmin


def szego_gate_value(model: CorrelationModel, grid_points: int = 8192) -> float:
    """Certified lower bound on the true symbol minimum."""
    band = 2.0 * abs_tail_bound(model, model.truncation_radius)
    return szego_symbol_min(model, grid_points) - band


def _validate(model: CorrelationModel) -> CorrelationModel:
    tail = abs_tail_bound(model, 0)
    if not math.isfinite(tail):
        raise DomainError("correlations are not summable")
    gate = szego_gate_value(model)
    if gate < SZEGO_GATE:
        raise DomainError(
            f"model rejected: symbol minimum lower bound {gate:.3e} is below the "
            f"{SZEGO_GATE:g} invertibility gate")
    return model


# ---------------------------------------------------------------------------
# factories


def iid_model() -> CorrelationModel:
    return _validate(CorrelationModel("iid", (), 0))


def finite_range_model(rhos) -> CorrelationModel:
    rhos = tuple(float(r) for r in rhos)
    if not rhos or rhos[0] != 1.0:
        raise DomainError("finite-range correlations must start with rho_0 = 1")
    if len(rhos) - 1 > 0 and all(r == 0.0 for r in rhos[1:]):
        return iid_model()
    if len(rhos) == 1:
        return iid_model()
    return _validate(CorrelationModel("finite-range", rhos, len(rhos) - 1))


def polynomial_model(a: float, truncation_radius: int | None = None) -> CorrelationModel:
    a = float(a)
    if a <= 1.0:
        raise DomainError("polynomial decay needs exponent a > 1 for summability")
    if truncation_radius is None:
        # aim the analytic tail at 1e-6, capped to keep symbol evaluation cheap
        want = (2.0 / ((a - 1.0) * 1e-6)) ** (1.0 / (a - 1.0))
        truncation_radius = int(min(max(want, 1024), 1_000_000))
    return _validate(CorrelationModel("polynomial", (a,), int(truncation_radius)))


def exponential_model(r: float, truncation_radius: int | None = None) -> CorrelationModel:
    r = float(r)
    if r <= 0.0:
        raise DomainError("exponential decay rate must be positive")
    if truncation_radius is None:
        truncation_radius = int(min(max(math.ceil(30.0 / r), 64), 5_000_000))
    return _validate(CorrelationModel("exponential", (r,), int(truncation_radius)))


def make_model(kind: str, params, truncation_radius: int | None = None) -> CorrelationModel:
    if kind == "iid":
        return iid_model()
    if kind == "finite-range":
        return finite_range_model(params)
    if kind == "polynomial":
        return polynomial_model(params[0], truncation_radius)
    if kind == "exponential":
        return exponential_model(params[0], truncation_radius)
    raise DomainError(f"unknown correlation kind {kind!r}")


# ---------------------------------------------------------------------------
# serialization (flat key-value block, plus the compact CLI spelling)


def model_to_config(model: CorrelationModel) -> dict:
    return {
        "kind": model.kind,
        "params": ",".join(repr(float(p)) for p in model.params),
        "truncation_radius": str(model.truncation_radius),
    }


def model_from_config(cfg: dict) -> CorrelationModel:
    params = tuple(float(x) for x in cfg.get("params", "").split(",") if x != "")
    tr = cfg.get("truncation_radius")
    return make_model(cfg["kind"], params, int(tr) if tr not in (None, "") else None)


def parse_model(spec: str) -> CorrelationModel:
    """Parse the compact spelling: iid | fr:1,0.2 | poly:2.0 | exp:0.5."""
    spec = spec.strip()
    if spec == "iid":
        return iid_model()
    if ":" not in spec:
        raise DomainError(f"cannot parse correlation model {spec!r}")
    tag, _, rest = spec.partition(":")
    vals = [float(x) for x in rest.split(",") if x != ""]
    if tag in ("fr", "finite-range"):
        return finite_range_model(vals)
    if tag in ("poly", "polynomial"):
        return polynomial_model(vals[0], int(vals[1]) if len(vals) > 1 else None)
    if tag in ("exp", "exponential"):
        return exponential_model(vals[0], int(vals[1]) if len(vals) > 1 else None)
    raise DomainError(f"cannot parse correlation model {spec!r}")


# ---------------------------------------------------------------------------
# Toeplitz solves


@dataclass(frozen=True)
class ToeplitzSolveResult:
    size: int
    solution: np.ndarray
    quad_form: float
    residual_inf: float


def toeplitz_solve_ones(model: CorrelationModel, k: int) -> ToeplitzSolveResult:
    """Solve Ups_k x = 1_k and report <Ups_k^{-1} 1_k, 1_k>.

    Levinson recursion first; dense Cholesky as fallback; residual must
    satisfy ||Ups_k x - 1||_inf <= 1e-9 * k or a NumericalError is raised.
    """
    k = int(k)
    if k < 1:
        raise DomainError("k must be >= 1")
    col = rho_array(model, k - 1)
    ones = np.ones(k)
    tol = SOLVER_TOL_PER_K * k

    def residual(x):
        if k == 1:
            return abs(col[0] * x[0] - 1.0)
        return float(np.abs(matmul_toeplitz((col, col), x) - ones).max())

    x = solve_toeplitz((col, col), ones)
    res = residual(x)
    if res > tol and k <= 16384:
        idx = np.abs(np.subtract.outer(np.arange(k), np.arange(k)))
        dense = col[idx]
        try:
            c = cholesky(dense, lower=True)
            y = np.linalg.solve(c, ones)
            x = np.linalg.solve(c.T, y)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"Toeplitz solve failed at k={k}: {exc}") from exc
        res = residual(x)
    if res > tol:
        raise NumericalError(
            f"Toeplitz solve at k={k} has residual {res:.3e} > tolerance {tol:.3e}")
    qf = float(x.sum())
    if qf <= 0.0:
        raise NumericalError(f"quadratic form non-positive at k={k}: {qf}")
    return ToeplitzSolveResult(k, x, qf, res)


@lru_cache(maxsize=128)
def _quad_form_cached(model: CorrelationModel, k: int) -> float:
    return toeplitz_solve_ones(model, k).quad_form


def quad_form(model: CorrelationModel, k: int) -> float:
    """<Ups_k^{-1} 1_k, 1_k>, cached."""
    return _quad_form_cached(model, int(k))
