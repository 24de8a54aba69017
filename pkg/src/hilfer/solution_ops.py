"""Hilfer evolution families for a bounded generator and the linear solution formula.

With gamma = alpha + beta (1 - alpha) the families are

    F(t) = t**(gamma - 1) E_{alpha,gamma}(-A t**alpha)
    K(t) = t**(alpha - 1) E_{alpha,alpha}(-A t**alpha)

so that xi(t) = F(t - t0) xi0 + int_{t0}^t K(t - s) f(s) ds solves
D^{alpha,beta} xi + A xi = f with I^{1-gamma} xi(t0) = xi0.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

try:
    from .errors import InvalidOrder, InvalidParams, NonSquare
    from .fracops import Grid, SampledFn, Trajectory, product_weights
    from .mlf import DEFAULT_ML_TOL, MLParams, ml_eval_matrix, ml_matrix_family
except ImportError:
    from errors import InvalidOrder, InvalidParams, NonSquare
    from fracops import Grid, SampledFn, Trajectory, product_weights
    from mlf import DEFAULT_ML_TOL, MLParams, ml_eval_matrix, ml_matrix_family


def hilfer_gamma(alpha: float, beta: float) -> float:
    return alpha + beta * (1.0 - alpha)


def check_orders(alpha: float, beta: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise InvalidOrder(f"alpha must lie in (0, 1], got {alpha}", field="alpha")
    if not (0.0 <= beta <= 1.0):
        raise InvalidOrder(f"beta must lie in [0, 1], got {beta}", field="beta")


@dataclass(frozen=True)
class Generator:
    matrix: Tuple[Tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = self.matrix
        if not rows or any(len(row) != len(rows) for row in rows):
            raise NonSquare(f"generator must be a non-empty square matrix, got {len(rows)} rows")
        if not all(math.isfinite(x) for row in rows for x in row):
            raise InvalidParams("generator entries must be finite", field="generator.matrix")

    @classmethod
    def from_array(cls, A: Sequence[Sequence[float]]) -> "Generator":
        array = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(tuple(tuple(float(x) for x in row) for row in array))

    @cached_property
    def A(self) -> np.ndarray:
        array = np.asarray(self.matrix, dtype=float)
        array.setflags(write=False)
        return array

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.A, 2))


@dataclass(frozen=True, eq=False)
class OperatorSample:
    t: float
    F: np.ndarray
    K: np.ndarray


def _check_time(t: float) -> None:
    if not (t > 0) or not math.isfinite(t):
        raise InvalidParams(f"operator families are sampled only for t > 0, got {t}", field="t")


def f_operator(gen: Generator, alpha: float, beta: float, t: float, tol: float = DEFAULT_ML_TOL) -> np.ndarray:
    check_orders(alpha, beta)
    _check_time(t)
    gamma_ = hilfer_gamma(alpha, beta)
    result = ml_eval_matrix(MLParams(alpha=alpha, beta=gamma_, tol=tol), -gen.A * t ** alpha)
    return t ** (gamma_ - 1.0) * result.value


def k_operator(gen: Generator, alpha: float, t: float, tol: float = DEFAULT_ML_TOL) -> np.ndarray:
    check_orders(alpha, 0.0)
    _check_time(t)
    result = ml_eval_matrix(MLParams(alpha=alpha, beta=alpha, tol=tol), -gen.A * t ** alpha)
    return t ** (alpha - 1.0) * result.value


def weighted_f_family(
    gen: Generator, alpha: float, beta: float, times: Sequence[float], tol: float = DEFAULT_ML_TOL
) -> np.ndarray:
    """t**(1-gamma) F(t) = E_{alpha,gamma}(-A t**alpha) for t >= 0; finite at t = 0."""
    check_orders(alpha, beta)
    params = MLParams(alpha=alpha, beta=hilfer_gamma(alpha, beta), tol=tol)
    return ml_matrix_family(params, gen.A, times).value


def operator_samples(
    gen: Generator, alpha: float, beta: float, times: Sequence[float], tol: float = DEFAULT_ML_TOL
) -> List[OperatorSample]:
    check_orders(alpha, beta)
    times = np.asarray(times, dtype=float)
    for t in times:
        _check_time(float(t))
    gamma_ = hilfer_gamma(alpha, beta)
    f_family = ml_matrix_family(MLParams(alpha=alpha, beta=gamma_, tol=tol), gen.A, times).value
    k_family = ml_matrix_family(MLParams(alpha=alpha, beta=alpha, tol=tol), gen.A, times).value
    return [
        OperatorSample(
            t=float(t),
            F=t ** (gamma_ - 1.0) * f_family[i],
            K=t ** (alpha - 1.0) * k_family[i],
        )
        for i, t in enumerate(times)
    ]


@dataclass(eq=False)
class KernelTable:
    """Product-integration data for int_{t0}^{t_j} K(t_j - s) (s - t0)**(nu - 1) g(s) ds on one grid.

    ``lags`` holds E_{alpha,alpha}(-A (m h)**alpha) for a uniform grid; other grids
    evaluate one family per row on demand.
    """

    gen: Generator
    alpha: float
    nu: float
    grid: Grid
    tol: float
    weights: np.ndarray
    lags: Optional[np.ndarray] = None
    _rows: dict = field(default_factory=dict, init=False, repr=False)

    @classmethod
    def build(cls, gen: Generator, alpha: float, grid: Grid, nu: float = 1.0, tol: float = DEFAULT_ML_TOL) -> "KernelTable":
        check_orders(alpha, 0.0)
        weights = product_weights(grid.array - grid.t0, alpha, nu)
        lags = None
        if grid.step is not None:
            offsets = grid.array - grid.t0
            lags = ml_matrix_family(MLParams(alpha=alpha, beta=alpha, tol=tol), gen.A, offsets).value
        return cls(gen=gen, alpha=alpha, nu=nu, grid=grid, tol=tol, weights=weights, lags=lags)

    def row_kernel(self, j: int) -> np.ndarray:
        """E_{alpha,alpha}(-A (t_j - t_k)**alpha) for k = 0..j, shape (j+1, d, d)."""
        if self.lags is not None:
            return self.lags[j::-1]
        if j not in self._rows:
            nodes = self.grid.array
            offsets = np.clip(nodes[j] - nodes[: j + 1], 0.0, None)
            params = MLParams(alpha=self.alpha, beta=self.alpha, tol=self.tol)
            self._rows[j] = ml_matrix_family(params, self.gen.A, offsets).value
        return self._rows[j]

    def convolve(self, values: np.ndarray) -> np.ndarray:
        """Unweighted convolution integral at every node; row 0 is zero."""
        values = np.asarray(values, dtype=float)
        out = np.zeros((len(self.grid.nodes), self.gen.dim))
        for j in range(1, len(self.grid.nodes)):
            kernel = self.row_kernel(j)
            out[j] = np.einsum("k,kab,kb->a", self.weights[j, : j + 1], kernel, values[: j + 1])
        return out


@lru_cache(maxsize=4)
def kernel_table(gen: Generator, alpha: float, grid: Grid, nu: float = 1.0, tol: float = DEFAULT_ML_TOL) -> KernelTable:
    return KernelTable.build(gen, alpha, grid, nu=nu, tol=tol)


def solve_linear(
    gen: Generator,
    alpha: float,
    beta: float,
    xi0: Sequence[float],
    forcing: Optional[SampledFn],
    grid: Grid,
    tol: float = DEFAULT_ML_TOL,
) -> Trajectory:
    """Weighted trajectory of F(t - t0) xi0 + int K(t - s) f(s) ds on the grid.

    A weighted forcing (``forcing.gamma < 1``) is integrated against its
    (s - t0)**(gamma - 1) factor exactly.
    """
    check_orders(alpha, beta)
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    if xi0.size != gen.dim:
        raise InvalidParams(f"xi0 has {xi0.size} entries, generator dimension is {gen.dim}", field="xi0")
    gamma_ = hilfer_gamma(alpha, beta)
    offsets = grid.array - grid.t0
    family = weighted_f_family(gen, alpha, beta, offsets, tol)
    weighted = np.einsum("jab,b->ja", family, xi0)
    if forcing is not None:
        if forcing.grid != grid:
            raise InvalidParams("forcing must be sampled on the solution grid", field="forcing")
        if forcing.dim != gen.dim:
            raise InvalidParams(f"forcing has dimension {forcing.dim}, expected {gen.dim}", field="forcing")
        table = kernel_table(gen, alpha, grid, forcing.gamma, tol)
        weighted = weighted + grid.weight(gamma_)[:, None] * table.convolve(forcing.values)
    return Trajectory(grid, weighted, gamma_)
