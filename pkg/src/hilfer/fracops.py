"""Discrete psi-Riemann-Liouville integrals and psi-Hilfer derivatives.

Integration is product integration in u = psi(s): the data are interpolated
piecewise-linearly in u and integrated exactly against the kernel
(psi(t) - psi(s))**(mu - 1). Weighted samples (``SampledFn.gamma < 1``) hold
(psi(t) - psi(t0))**(1 - gamma) * f(t); their rule also integrates the factor
(psi(s) - psi(t0))**(gamma - 1) exactly, through incomplete beta moments.
"""
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc, gamma

try:
    from .errors import InvalidOrder, InvalidParams, NonMonotonePsi, SingularEndpoint, ValidationError
except ImportError:
    from errors import InvalidOrder, InvalidParams, NonMonotonePsi, SingularEndpoint, ValidationError

_ROW_BLOCK = 256
_ORDER_EPS = 1e-12


@dataclass(frozen=True)
class Grid:
    nodes: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.nodes, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise ValidationError("grid.nodes", "grid needs at least 3 nodes (N >= 2)")
        if not np.all(np.isfinite(values)) or np.any(np.diff(values) <= 0):
            raise ValidationError("grid.nodes", "nodes must be finite and strictly increasing")

    @classmethod
    def uniform(cls, t0: float, a: float, n: int) -> "Grid":
        if not (a > 0):
            raise ValidationError("horizon.a", f"a must be > 0, got {a}")
        if int(n) < 2:
            raise ValidationError("numerics.grid_n", f"grid_n must be >= 2, got {n}")
        nodes = t0 + a * np.arange(int(n) + 1) / int(n)
        nodes[-1] = t0 + a
        return cls(tuple(float(x) for x in nodes))

    @cached_property
    def array(self) -> np.ndarray:
        values = np.asarray(self.nodes, dtype=float)
        values.setflags(write=False)
        return values

    @property
    def t0(self) -> float:
        return self.nodes[0]

    @property
    def a(self) -> float:
        return self.nodes[-1] - self.nodes[0]

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @cached_property
    def step(self) -> Optional[float]:
        """Uniform step, or None when the nodes are not equispaced."""
        diffs = np.diff(self.array)
        h = self.a / self.n
        if np.allclose(diffs, h, rtol=1e-9, atol=0.0):
            return h
        return None

    def weight(self, gamma_: float) -> np.ndarray:
        """C_{1-gamma} weight (t - t0)**(1 - gamma) at the nodes."""
        if gamma_ >= 1.0:
            return np.ones(self.n + 1)
        return (self.array - self.t0) ** (1.0 - gamma_)


class PsiKind(enum.Enum):
    IDENTITY = "identity"
    POWER = "power"
    LOG_SHIFT = "log-shift"
    TABULATED = "user-tabulated"


@dataclass(frozen=True)
class PsiMap:
    kind: PsiKind = PsiKind.IDENTITY
    param: float = 1.0
    table: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def identity(cls) -> "PsiMap":
        return cls()

    @classmethod
    def power(cls, p: float) -> "PsiMap":
        if not (p > 0):
            raise InvalidParams(f"power map needs p > 0, got {p}", field="psi")
        return cls(PsiKind.POWER, float(p))

    @classmethod
    def log_shift(cls, c: float) -> "PsiMap":
        if not (c > 0):
            raise InvalidParams(f"log-shift map needs c > 0, got {c}", field="psi")
        return cls(PsiKind.LOG_SHIFT, float(c))

    @classmethod
    def tabulated(cls, rows: Sequence[Sequence[float]]) -> "PsiMap":
        table = tuple((float(t), float(v)) for t, v in rows)
        if len(table) < 2:
            raise InvalidParams("tabulated psi needs at least two rows", field="psi")
        return cls(PsiKind.TABULATED, table=table)

    @classmethod
    def from_file(cls, path: Path) -> "PsiMap":
        """Read a two-column numeric text file (t, psi(t)); '#' starts a comment."""
        delimiter = "," if path.suffix.lower() == ".csv" else None
        try:
            data = np.loadtxt(path, delimiter=delimiter, comments="#", ndmin=2)
        except (OSError, ValueError) as exc:
            raise InvalidParams(f"cannot read psi table {path}: {exc}", field="psi") from exc
        if data.shape[1] != 2:
            raise InvalidParams(f"{path} must have exactly two columns", field="psi")
        return cls.tabulated(data.tolist())

    def value(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is PsiKind.IDENTITY:
            return t.copy()
        if self.kind is PsiKind.POWER:
            return t ** self.param
        if self.kind is PsiKind.LOG_SHIFT:
            return np.log(t + self.param)
        xs, ys = np.asarray(self.table).T
        return np.interp(t, xs, ys)

    def derivative(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is PsiKind.IDENTITY:
            return np.ones_like(t)
        if self.kind is PsiKind.POWER:
            with np.errstate(divide="ignore"):
                return self.param * t ** (self.param - 1.0)
        if self.kind is PsiKind.LOG_SHIFT:
            return 1.0 / (t + self.param)
        xs, ys = np.asarray(self.table).T
        return np.interp(t, xs, np.gradient(ys, xs))

    def on_grid(self, grid: Grid) -> np.ndarray:
        """psi at the grid nodes, after checking monotonicity and psi' > 0."""
        u = self.value(grid.array)
        slope = self.derivative(grid.array)
        if not np.all(np.isfinite(u)) or np.any(np.diff(u) <= 0):
            raise NonMonotonePsi(f"psi ({self.kind.value}) is not strictly increasing on the grid")
        if not np.all(np.isfinite(slope)) or np.any(slope <= 0):
            raise NonMonotonePsi(f"psi' ({self.kind.value}) is not positive at every node")
        return u


@dataclass
class SampledFn:
    """Vector-valued samples on a grid.

    With ``gamma < 1`` the values are weighted: values[j] = (psi(t_j)-psi(t0))**(1-gamma) f(t_j),
    finite at t0. ``boundary_nodes`` leading nodes are excluded from residual norms.
    """

    grid: Grid
    values: np.ndarray
    gamma: float = 1.0
    boundary_nodes: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(self.grid.nodes):
            raise ValidationError("values", f"expected {len(self.grid.nodes)} rows, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values", "sampled values must be finite")
        if not (0.0 < self.gamma <= 1.0):
            raise ValidationError("gamma", f"weight order must lie in (0, 1], got {self.gamma}")
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class Trajectory:
    """Function in C_{1-gamma} stored as w(t) * xi(t), w(t) = (t - t0)**(1 - gamma)."""

    grid: Grid
    weighted_values: np.ndarray
    gamma: float

    def __post_init__(self) -> None:
        values = np.asarray(self.weighted_values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(self.grid.nodes):
            raise ValidationError("weighted_values", "one row per grid node expected")
        if not np.all(np.isfinite(values)):
            raise ValidationError("weighted_values", "weighted values must be finite")
        self.weighted_values = values

    @property
    def dim(self) -> int:
        return self.weighted_values.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weight(self.gamma)

    def unweighted(self) -> np.ndarray:
        """xi at the nodes; the t0 row is NaN when gamma < 1."""
        out = np.empty_like(self.weighted_values)
        w = self.weights
        out[1:] = self.weighted_values[1:] / w[1:, None]
        out[0] = self.weighted_values[0] if self.gamma >= 1.0 else np.nan
        return out

    def value_at(self, t: float) -> np.ndarray:
        """xi(t) by linear interpolation of the weighted values."""
        grid = self.grid
        if t == grid.t0 and self.gamma < 1.0:
            raise SingularEndpoint(f"xi is singular at t0={grid.t0} for gamma={self.gamma:g}")
        row = interpolate_rows(grid.array, self.weighted_values, np.array([t]))[0]
        if self.gamma >= 1.0:
            return row
        return row / (t - grid.t0) ** (1.0 - self.gamma)

    def as_sampled(self) -> SampledFn:
        return SampledFn(self.grid, self.weighted_values.copy(), gamma=min(self.gamma, 1.0))

    def difference(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.weighted_values - other.weighted_values, self.gamma)


def interpolate_rows(nodes: np.ndarray, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of row data; exact at nodes."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
    left = nodes[idx]
    frac = (x - left) / (nodes[idx + 1] - left)
    frac = np.where(x == left, 0.0, frac)
    return (1.0 - frac)[:, None] * rows[idx] + frac[:, None] * rows[idx + 1]


def _check_order(mu: float, name: str = "mu") -> None:
    if not (mu > 0) or not math.isfinite(mu):
        raise InvalidOrder(f"{name} must be > 0, got {mu}", field=name)


def product_weights(u: np.ndarray, mu: float, nu: float = 1.0) -> np.ndarray:
    """Lower-triangular matrix W with (W @ g)[j] = int_{u0}^{u_j} (u_j-v)**(mu-1) (v-u0)**(nu-1) g(v) dv.

    g is the piecewise-linear interpolant of the node data; no 1/Gamma(mu) factor.
    """
    _check_order(mu)
    _check_order(nu, "nu")
    u = np.asarray(u, dtype=float)
    size = u.size
    weights = np.zeros((size, size))
    panel_lo = u[:-1]
    panel_hi = u[1:]
    width = panel_hi - panel_lo
    cols = np.arange(size - 1)
    for start in range(1, size, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, size)
        rows = np.arange(start, stop)
        target = u[rows][:, None]
        active = cols[None, :] < rows[:, None]
        if abs(nu - 1.0) <= _ORDER_EPS:
            far = np.where(active, target - panel_lo[None, :], 0.0)
            near = np.where(active, np.clip(target - panel_hi[None, :], 0.0, None), 0.0)
            mass = (far ** mu - near ** mu) / mu
            first = (far ** (mu + 1.0) - near ** (mu + 1.0)) / (mu + 1.0)
            right = (far * mass - first) / width[None, :]
        else:
            span = target - u[0]
            x_lo = np.clip((panel_lo[None, :] - u[0]) / span, 0.0, 1.0)
            x_hi = np.clip((panel_hi[None, :] - u[0]) / span, 0.0, 1.0)
            mass = span ** (mu + nu - 1.0) * beta_fn(nu, mu) * (betainc(nu, mu, x_hi) - betainc(nu, mu, x_lo))
            first = span ** (mu + nu) * beta_fn(nu + 1.0, mu) * (
                betainc(nu + 1.0, mu, x_hi) - betainc(nu + 1.0, mu, x_lo)
            )
            right = (first - (panel_lo[None, :] - u[0]) * mass) / width[None, :]
        mass = np.where(active, mass, 0.0)
        right = np.where(active, right, 0.0)
        left = mass - right
        weights[start:stop, :-1] += left
        weights[start:stop, 1:] += right
    return weights


def _integral_limit(values0: np.ndarray, mu: float, nu: float) -> np.ndarray:
    """Limit at t0 of (psi-psi0)**(1-mu-nu) I^mu[(psi-psi0)**(nu-1) g] for g(t0) = values0."""
    return gamma(nu) / gamma(mu + nu) * values0


def rl_integral(f: SampledFn, mu: float, psi: Optional[PsiMap] = None) -> SampledFn:
    """psi-Riemann-Liouville integral I^mu f at the nodes.

    Returns unweighted samples when mu + f.gamma >= 1, otherwise samples
    weighted with order mu + f.gamma.
    """
    _check_order(mu)
    psi = psi or PsiMap.identity()
    u = psi.on_grid(f.grid)
    nu = f.gamma
    integral = product_weights(u, mu, nu) @ f.values / gamma(mu)
    order = mu + nu
    if order >= 1.0 - _ORDER_EPS:
        if abs(order - 1.0) <= _ORDER_EPS and nu < 1.0:
            integral[0] = _integral_limit(f.values[0], mu, nu)
        return SampledFn(f.grid, integral, gamma=1.0)
    weighted = integral.copy()
    weighted[1:] *= (u[1:] - u[0])[:, None] ** (1.0 - order)
    weighted[0] = _integral_limit(f.values[0], mu, nu)
    return SampledFn(f.grid, weighted, gamma=order)


def _unweighted_values(f: SampledFn, u: np.ndarray) -> np.ndarray:
    if f.gamma >= 1.0:
        return f.values.copy()
    out = f.values.copy()
    out[1:] /= (u[1:] - u[0])[:, None] ** (1.0 - f.gamma)
    out[0] = out[1]
    return out


def _integrate_or_identity(f: SampledFn, mu: float, psi: PsiMap) -> SampledFn:
    if mu <= _ORDER_EPS:
        return f
    return rl_integral(f, mu, psi)


def hilfer_derivative(
    f: SampledFn,
    alpha: float,
    beta: float,
    psi: Optional[PsiMap] = None,
    scheme: str = "integrated",
) -> SampledFn:
    """psi-Hilfer derivative of order alpha in (0, 1] and type beta in [0, 1].

    ``scheme="composition"`` applies I^{beta(1-alpha)} (1/psi' d/dt) I^{(1-beta)(1-alpha)}
    literally. ``scheme="integrated"`` differentiates last, using
    D f = d/dpsi [I^{1-alpha} f - c (psi-psi0)**(beta(1-alpha)) / Gamma(1+beta(1-alpha))]
    with c = lim_{t->t0} I^{1-gamma} f. Differentiation uses central differences
    inside and one-sided ones at the ends; the first node is flagged.
    """
    if not (0.0 < alpha <= 1.0):
        raise InvalidOrder(f"alpha must lie in (0, 1], got {alpha}", field="alpha")
    if not (0.0 <= beta <= 1.0):
        raise InvalidOrder(f"beta must lie in [0, 1], got {beta}", field="beta")
    psi = psi or PsiMap.identity()
    u = psi.on_grid(f.grid)
    gamma_h = alpha + beta * (1.0 - alpha)
    outer = beta * (1.0 - alpha)
    inner = 1.0 - gamma_h

    if scheme == "composition":
        inner_values = _integrate_or_identity(f, inner, psi)
        slope = np.gradient(_unweighted_values(inner_values, u), u, axis=0)
        result = _integrate_or_identity(SampledFn(f.grid, slope), outer, psi)
        return SampledFn(f.grid, result.values, boundary_nodes=1)
    if scheme != "integrated":
        raise InvalidParams(f"unknown scheme {scheme!r}", field="scheme")

    excess = f.gamma - gamma_h
    if excess < -_ORDER_EPS:
        raise InvalidOrder(
            f"samples of weight order {f.gamma:g} are too singular for a Hilfer derivative of type gamma={gamma_h:g}",
            field="gamma",
        )
    if excess > _ORDER_EPS:
        start = np.zeros(f.dim)
    elif f.gamma < 1.0:
        start = gamma(f.gamma) * f.values[0]
    else:
        start = f.values[0].copy()

    integrated = _integrate_or_identity(f, 1.0 - alpha, psi)
    potential = _unweighted_values(integrated, u)
    potential = potential - np.outer((u - u[0]) ** outer / gamma(1.0 + outer), start)
    slope = np.gradient(potential, u, axis=0)
    return SampledFn(f.grid, slope, boundary_nodes=1)
