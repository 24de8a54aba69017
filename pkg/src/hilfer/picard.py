"""Picard iteration for the nonlocal semilinear Hilfer problem

    D^{alpha,beta} xi(t) + A xi(t) = phi(t, xi(sigma(t))),   t in [t0, t0 + a]
    I^{1-gamma} xi(t0) + sum_k c_k xi(t_k) = xi0

in the weighted space C_{1-gamma}. Every sweep reads only the previous
iterate, so sigma(t) > t is allowed.
"""
import enum
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import click
import numpy as np

try:
    from .errors import DelayOutOfRange, MaxIterExceeded, ValidationError
    from .fracops import Grid, Trajectory, interpolate_rows
    from .mlf import DEFAULT_ML_TOL
    from .solution_ops import Generator, KernelTable, hilfer_gamma, kernel_table, weighted_f_family
except ImportError:
    from errors import DelayOutOfRange, MaxIterExceeded, ValidationError
    from fracops import Grid, Trajectory, interpolate_rows
    from mlf import DEFAULT_ML_TOL
    from solution_ops import Generator, KernelTable, hilfer_gamma, kernel_table, weighted_f_family

DEFAULT_GRID_N = 512
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
DEFAULT_SEED = 42
DEFAULT_BUDGET = 2000
_DELAY_SLACK = 1e-12

Matrix = Tuple[Tuple[float, ...], ...]


def _as_matrix(value: Any, dim: int, name: str) -> Matrix:
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        array = float(array) * np.eye(dim)
    if array.shape != (dim, dim):
        raise ValidationError(name, f"expected a scalar or a {dim}x{dim} matrix, got shape {array.shape}")
    return tuple(tuple(float(x) for x in row) for row in array)


class NonlinKind(enum.Enum):
    ZERO = "zero"
    LINEAR = "linear"
    SINE = "sine"
    POLYNOMIAL = "polynomial"
    TABULATED = "user-tabulated"


@dataclass(frozen=True)
class NonlinSpec:
    """phi(t, u) from a small catalog, applied to u plus a constant ``offset``.

    ``polynomial`` and ``user-tabulated`` act componentwise: p(u_i) with
    coefficients in increasing degree, or piecewise-linear g(u_i) clamped outside
    the table.
    """

    kind: NonlinKind = NonlinKind.ZERO
    matrix: Matrix = ()
    scale: float = 0.0
    coeffs: Tuple[float, ...] = ()
    table: Tuple[Tuple[float, float], ...] = ()
    offset: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is NonlinKind.SINE and not (self.scale >= 0 and math.isfinite(self.scale)):
            raise ValidationError("nonlinearity.scale", f"sine scale must be finite and >= 0, got {self.scale}")
        if self.kind is NonlinKind.POLYNOMIAL and not self.coeffs:
            raise ValidationError("nonlinearity.coeffs", "polynomial needs at least one coefficient")
        if self.kind is NonlinKind.TABULATED:
            xs = [row[0] for row in self.table]
            if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValidationError("nonlinearity.table", "table needs >= 2 rows with increasing abscissae")

    @cached_property
    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=float)

    def check_dim(self, dim: int) -> None:
        if self.kind is NonlinKind.LINEAR and np.shape(self.matrix) != (dim, dim):
            raise ValidationError("nonlinearity.matrix", f"linear map must be {dim}x{dim}")
        if self.offset and len(self.offset) != dim:
            raise ValidationError("nonlinearity.offset", f"offset must have {dim} entries")

    def linear_part(self, dim: int) -> Optional[np.ndarray]:
        """Matrix of the degree-one part of phi, or None when phi has no unbounded linear growth."""
        if self.kind is NonlinKind.LINEAR:
            return np.asarray(self.matrix, dtype=float)
        if self.kind is NonlinKind.POLYNOMIAL and len(self.coeffs) >= 2 and self.coeffs[1] != 0.0:
            return self.coeffs[1] * np.eye(dim)
        return None

    def evaluate(self, t: Any, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind is NonlinKind.ZERO:
            out = np.zeros_like(u)
        elif self.kind is NonlinKind.LINEAR:
            out = u @ np.asarray(self.matrix, dtype=float).T
        elif self.kind is NonlinKind.SINE:
            out = self.scale * np.sin(u)
        elif self.kind is NonlinKind.POLYNOMIAL:
            out = np.polynomial.polynomial.polyval(u, self.coeffs)
        else:
            xs, ys = np.asarray(self.table, dtype=float).T
            out = np.interp(u, xs, ys)
        if self.offset:
            out = out + self.offset_array
        return out


class DelayKind(enum.Enum):
    IDENTITY = "identity"
    PROPORTIONAL = "proportional"
    LAG = "lag"
    TABULATED = "user-tabulated"


@dataclass(frozen=True)
class DelaySpec:
    kind: DelayKind = DelayKind.IDENTITY
    q: float = 1.0
    lag: float = 0.0
    table: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind is DelayKind.PROPORTIONAL and not (0.0 < self.q <= 1.0):
            raise ValidationError("delay.q", f"proportional delay needs q in (0, 1], got {self.q}")
        if self.kind is DelayKind.LAG and not (self.lag >= 0.0 and math.isfinite(self.lag)):
            raise ValidationError("delay.lag", f"lag must be finite and >= 0, got {self.lag}")
        if self.kind is DelayKind.TABULATED:
            xs = [row[0] for row in self.table]
            if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValidationError("delay.table", "table needs >= 2 rows with increasing times")

    def evaluate(self, t: Any, t0: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is DelayKind.IDENTITY:
            return t.copy()
        if self.kind is DelayKind.PROPORTIONAL:
            return t0 + self.q * (t - t0)
        if self.kind is DelayKind.LAG:
            return np.maximum(t - self.lag, t0)
        xs, ys = np.asarray(self.table, dtype=float).T
        return np.interp(t, xs, ys)

    def derivative(self, t: Any, t0: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is DelayKind.IDENTITY:
            return np.ones_like(t)
        if self.kind is DelayKind.PROPORTIONAL:
            return np.full_like(t, self.q)
        if self.kind is DelayKind.LAG:
            return np.where(t - self.lag > t0, 1.0, 0.0)
        xs, ys = np.asarray(self.table, dtype=float).T
        slopes = np.diff(ys) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def weight_ratio_at_start(self, t0: float, gamma_: float) -> float:
        """lim_{t->t0} (t - t0)**(1-gamma) / (sigma(t) - t0)**(1-gamma); 0 when sigma(t0) > t0."""
        if self.kind is DelayKind.IDENTITY:
            return 1.0
        if self.kind is DelayKind.PROPORTIONAL:
            return self.q ** (gamma_ - 1.0)
        if self.kind is DelayKind.LAG:
            return 1.0 if self.lag == 0.0 else 0.0
        if float(self.evaluate(t0, t0)) > t0 + _DELAY_SLACK:
            return 0.0
        slope = float(self.derivative(t0, t0))
        return slope ** (gamma_ - 1.0) if slope > 0 else 0.0


@dataclass(frozen=True)
class NonlocalSpec:
    """phi(xi) = sum_k c_k xi(t_k) with matrix coefficients."""

    anchors: Tuple[float, ...] = ()
    coefficients: Tuple[Matrix, ...] = ()

    def __post_init__(self) -> None:
        if len(self.anchors) != len(self.coefficients):
            raise ValidationError("nonlocal.coefficients", "one coefficient per anchor expected")
        if any(b <= a for a, b in zip(self.anchors, self.anchors[1:])):
            raise ValidationError("nonlocal.anchors", "anchors must be strictly increasing")

    @classmethod
    def build(cls, anchors: Sequence[float], coefficients: Sequence[Any], dim: int) -> "NonlocalSpec":
        return cls(
            tuple(float(t) for t in anchors),
            tuple(_as_matrix(c, dim, "nonlocal.coefficients") for c in coefficients),
        )

    @property
    def is_zero(self) -> bool:
        return not self.anchors

    def evaluate(self, traj: Trajectory) -> np.ndarray:
        total = np.zeros(traj.dim)
        for anchor, coefficient in zip(self.anchors, self.coefficients):
            total += np.asarray(coefficient) @ traj.value_at(anchor)
        return total


@dataclass(frozen=True)
class Numerics:
    grid_n: int = DEFAULT_GRID_N
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    ml_tol: float = DEFAULT_ML_TOL
    seed: int = DEFAULT_SEED
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        if int(self.grid_n) < 2:
            raise ValidationError("numerics.grid_n", f"grid_n must be >= 2, got {self.grid_n}")
        if not (self.tol > 0):
            raise ValidationError("numerics.tol", f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValidationError("numerics.max_iter", f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.ml_tol > 0):
            raise ValidationError("numerics.ml_tol", f"ml_tol must be > 0, got {self.ml_tol}")


@dataclass(frozen=True)
class Problem:
    gen: Generator
    alpha: float
    beta: float
    t0: float
    a: float
    xi0: Tuple[float, ...]
    nonlin: NonlinSpec = NonlinSpec()
    delay: DelaySpec = DelaySpec()
    nonlocal_: NonlocalSpec = NonlocalSpec()
    ball_radius: float = 1.0
    numerics: Numerics = Numerics()

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValidationError("orders.alpha", f"alpha must lie in (0, 1], got {self.alpha}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValidationError("orders.beta", f"beta must lie in [0, 1], got {self.beta}")
        if not (self.a > 0) or not math.isfinite(self.a) or not math.isfinite(self.t0):
            raise ValidationError("horizon.a", f"horizon must be finite with a > 0, got t0={self.t0}, a={self.a}")
        if len(self.xi0) != self.gen.dim:
            raise ValidationError("initial.xi0", f"xi0 has {len(self.xi0)} entries, generator is {self.gen.dim}x{self.gen.dim}")
        if not (self.ball_radius > 0):
            raise ValidationError("initial.ball_radius", f"ball_radius must be > 0, got {self.ball_radius}")
        self.nonlin.check_dim(self.gen.dim)
        if any(not (self.t0 < t <= self.t_end) for t in self.nonlocal_.anchors):
            raise ValidationError("nonlocal.anchors", f"anchors must lie in ({self.t0}, {self.t_end}]")
        if any(np.shape(c) != (self.gen.dim, self.gen.dim) for c in self.nonlocal_.coefficients):
            raise ValidationError("nonlocal.coefficients", f"coefficients must be {self.gen.dim}x{self.gen.dim}")
        probe = np.linspace(self.t0, self.t_end, 257)
        mapped = self.delay.evaluate(probe, self.t0)
        slack = _DELAY_SLACK * (1.0 + abs(self.t_end))
        if np.any(mapped < self.t0 - slack) or np.any(mapped > self.t_end + slack):
            raise ValidationError("delay", f"sigma must map [{self.t0}, {self.t_end}] into itself")

    @property
    def gamma(self) -> float:
        return hilfer_gamma(self.alpha, self.beta)

    @property
    def t_end(self) -> float:
        return self.t0 + self.a

    @property
    def dim(self) -> int:
        return self.gen.dim

    @cached_property
    def xi0_array(self) -> np.ndarray:
        return np.asarray(self.xi0, dtype=float)

    def grid(self, n: Optional[int] = None) -> Grid:
        return Grid.uniform(self.t0, self.a, int(n or self.numerics.grid_n))


def weighted_norm(traj: Trajectory) -> float:
    if traj.weighted_values.size == 0:
        return 0.0
    return float(np.linalg.norm(traj.weighted_values, axis=1).max())


def delayed_times(grid: Grid, s: Any, delay: DelaySpec, gamma_: float) -> np.ndarray:
    """sigma(s) checked against the horizon; for gamma < 1 a hit on t0 moves to the first-panel midpoint."""
    t0, end = grid.t0, grid.t0 + grid.a
    mapped = np.atleast_1d(delay.evaluate(s, t0)).astype(float)
    slack = _DELAY_SLACK * (1.0 + abs(end))
    outside = (mapped < t0 - slack) | (mapped > end + slack)
    if np.any(outside):
        bad = float(mapped[np.argmax(outside)])
        raise DelayOutOfRange(f"sigma(s)={bad:g} leaves [{t0:g}, {end:g}]", value=bad)
    mapped = np.clip(mapped, t0, end)
    if gamma_ < 1.0:
        mapped = np.where(mapped <= t0, t0 + 0.5 * (grid.nodes[1] - t0), mapped)
    return mapped


def eval_delay(traj: Trajectory, s: Any, delay: DelaySpec) -> np.ndarray:
    """xi(sigma(s)) by linear interpolation of the weighted values, then unweighting."""
    grid = traj.grid
    mapped = delayed_times(grid, s, delay, traj.gamma)
    rows = interpolate_rows(grid.array, traj.weighted_values, mapped)
    if traj.gamma < 1.0:
        rows = rows / ((mapped - grid.t0) ** (1.0 - traj.gamma))[:, None]
    if np.ndim(s) == 0:
        return rows[0]
    return rows


@dataclass
class IterationDiagnostics:
    differences: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    norms: List[float] = field(default_factory=list)
    iterations: int = 0
    initial: str = "homogeneous"
    converged: bool = False

    @property
    def residual(self) -> float:
        return self.differences[-1] if self.differences else math.inf

    def record(self, difference: float, norm: float) -> None:
        if self.differences and self.differences[-1] > 0:
            self.ratios.append(difference / self.differences[-1])
        self.differences.append(difference)
        self.norms.append(norm)
        self.iterations = len(self.differences)

    def to_document(self) -> Dict[str, Any]:
        document = asdict(self)
        document["residual"] = self.residual
        return document


@dataclass(eq=False)
class MildOperator:
    """The map xi -> F(t - t0)(xi0 - phi(xi)) + int K(t - s) phi(s, xi(sigma(s))) ds on one grid."""

    problem: Problem
    grid: Grid
    family: np.ndarray
    weights: np.ndarray
    delayed: np.ndarray
    table: KernelTable
    start_map: Optional[np.ndarray] = None

    @classmethod
    def build(cls, problem: Problem, grid: Grid, ml_tol: float) -> "MildOperator":
        if abs(grid.t0 - problem.t0) > _DELAY_SLACK or abs(grid.a - problem.a) > _DELAY_SLACK * (1.0 + problem.a):
            raise ValidationError("grid", "grid must span the problem horizon")
        gamma_ = problem.gamma
        family = weighted_f_family(problem.gen, problem.alpha, problem.beta, grid.array - grid.t0, ml_tol)
        start_map = None
        linear = problem.nonlin.linear_part(problem.dim)
        if gamma_ < 1.0 and linear is not None:
            start_map = problem.delay.weight_ratio_at_start(problem.t0, gamma_) * linear
        return cls(
            problem=problem,
            grid=grid,
            family=family,
            weights=grid.weight(gamma_),
            delayed=delayed_times(grid, grid.array, problem.delay, gamma_),
            table=kernel_table(problem.gen, problem.alpha, grid, gamma_, ml_tol),
            start_map=start_map,
        )

    def homogeneous(self, start: Optional[np.ndarray] = None) -> Trajectory:
        start = self.problem.xi0_array if start is None else start
        return Trajectory(self.grid, np.einsum("jab,b->ja", self.family, start), self.problem.gamma)

    def __call__(self, traj: Trajectory) -> Trajectory:
        problem = self.problem
        radius = weighted_norm(traj)
        if radius > problem.ball_radius:
            click.echo(
                f"[Warn] iterate leaves B_R: weighted norm {radius:.6g} > R={problem.ball_radius:g}",
                err=True,
            )
        rows = interpolate_rows(self.grid.array, traj.weighted_values, self.delayed)
        if traj.gamma < 1.0:
            rows = rows / ((self.delayed - self.grid.t0) ** (1.0 - traj.gamma))[:, None]
        source = self.weights[:, None] * problem.nonlin.evaluate(self.grid.array[:, None], rows)
        if self.start_map is not None:
            # weighted limit at t0 of the linear part; bounded parts vanish there
            source[0] = self.start_map @ traj.weighted_values[0]
        start = problem.xi0_array - problem.nonlocal_.evaluate(traj)
        out = self.homogeneous(start).weighted_values
        out = out + self.weights[:, None] * self.table.convolve(source)
        return Trajectory(self.grid, out, problem.gamma)


@lru_cache(maxsize=2)
def mild_operator(problem: Problem, grid: Grid, ml_tol: float = DEFAULT_ML_TOL) -> MildOperator:
    return MildOperator.build(problem, grid, ml_tol)


def apply_F(traj: Trajectory, prob: Problem, tol: Optional[float] = None) -> Trajectory:
    operator = mild_operator(prob, traj.grid, tol or prob.numerics.ml_tol)
    return operator(traj)


def solve_mild(
    prob: Problem,
    grid: Optional[Grid] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    initial: Union[str, Trajectory] = "homogeneous",
) -> Tuple[Trajectory, IterationDiagnostics]:
    """Iterate the mild operator until two consecutive iterates differ by < tol.

    Returns the last iterate x_{n+1}; every difference, ratio and iterate norm
    is recorded in the diagnostics.
    """
    grid = grid or prob.grid()
    tol = prob.numerics.tol if tol is None else tol
    max_iter = prob.numerics.max_iter if max_iter is None else int(max_iter)
    operator = mild_operator(prob, grid, prob.numerics.ml_tol)

    if isinstance(initial, Trajectory):
        current, label = initial, "given"
    elif initial == "zero":
        current, label = Trajectory(grid, np.zeros((grid.n + 1, prob.dim)), prob.gamma), "zero"
    elif initial == "homogeneous":
        current, label = operator.homogeneous(), "homogeneous"
    else:
        raise ValidationError("initial", f"unknown initial iterate {initial!r}")

    diagnostics = IterationDiagnostics(initial=label)
    diagnostics.norms.append(weighted_norm(current))
    for _ in range(max_iter):
        following = operator(current)
        difference = weighted_norm(following.difference(current))
        diagnostics.record(difference, weighted_norm(following))
        if difference < tol:
            diagnostics.converged = True
            return following, diagnostics
        current = following
    raise MaxIterExceeded(
        f"Picard iteration did not reach tol={tol:g} in {max_iter} sweeps (last difference {diagnostics.residual:.3g})",
        last_residual=diagnostics.residual,
        diagnostics=diagnostics,
    )
