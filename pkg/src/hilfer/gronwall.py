"""Strong-solution checks on a computed mild solution.

The Gronwall-type increment bound is evaluated in the form

    |xi(t+h) - xi(t)| <= theta(h) E_alpha[zeta1 delta R~ C~ a^alpha Gamma(alpha)]

with theta(h) = 2 zeta1 h |xi0| + 2 zeta1 zeta3 h + zeta1 delta h r / b
+ zeta1 zeta2 h + zeta1 delta h a. C~ is a report parameter (default 1), so the
bound is checked empirically, not proved.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

try:
    from .certifier import Certificate, ratio_term
    from .errors import HNotAligned, NonConvergence, ValidationError
    from .fracops import SampledFn, Trajectory, hilfer_derivative, interpolate_rows
    from .mlf import MLParams, ml_eval
    from .picard import DEFAULT_BUDGET, DEFAULT_SEED, Problem, delayed_times, eval_delay
except ImportError:
    from certifier import Certificate, ratio_term
    from errors import HNotAligned, NonConvergence, ValidationError
    from fracops import SampledFn, Trajectory, hilfer_derivative, interpolate_rows
    from mlf import MLParams, ml_eval
    from picard import DEFAULT_BUDGET, DEFAULT_SEED, Problem, delayed_times, eval_delay

_ALIGN_TOL = 1e-9


@dataclass
class StrongReport:
    h_values: List[float]
    increments: List[float]
    lipschitz_modulus: float
    R_tilde: float
    C_tilde: float
    theta: List[float]
    gronwall_rhs: List[float]
    theta_b_variant: List[float]
    gronwall_rhs_R_variant: List[float]
    dominated: List[bool]
    residual_eq: float
    residual_eq_l1: float
    residual_ic: float
    boundary_layer: float

    @property
    def all_dominated(self) -> bool:
        return all(self.dominated)

    def to_document(self) -> Dict[str, Any]:
        document = asdict(self)
        document["all_dominated"] = self.all_dominated
        return document


def _aligned_steps(traj: Trajectory, h: float) -> int:
    step = traj.grid.step
    if step is None:
        raise HNotAligned("increments need a uniform grid")
    if not (h > 0):
        raise HNotAligned(f"h must be > 0, got {h}", h=h)
    ratio = h / step
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > _ALIGN_TOL * max(1.0, ratio) or count > traj.grid.n:
        raise HNotAligned(f"h={h:g} is not a multiple of the grid step {step:g} inside the horizon", h=h)
    return count


def lipschitz_modulus(traj: Trajectory, h_values: Sequence[float]) -> List[float]:
    """max_j |xw(t_j + h) - xw(t_j)| for every grid-aligned h."""
    increments = []
    for h in h_values:
        count = _aligned_steps(traj, float(h))
        values = traj.weighted_values
        increments.append(float(np.linalg.norm(values[count:] - values[:-count], axis=1).max()))
    return increments


def delay_constant(
    traj: Trajectory,
    prob: Problem,
    samples: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
) -> float:
    """Smallest R~ with |xi(sigma(s)) - xi(sigma(t))| <= R~ |xi(s) - xi(t)| over sampled node pairs.

    Both sides use weighted values; t0 is left out of the pairs.
    """
    grid = traj.grid
    nodes = grid.array
    own = traj.weighted_values[1:]
    delayed = interpolate_rows(nodes, traj.weighted_values, delayed_times(grid, nodes, prob.delay, traj.gamma))[1:]
    rng = np.random.default_rng(seed)
    first = rng.integers(0, len(own), samples)
    second = rng.integers(0, len(own), samples)
    distinct = first != second
    below = np.linalg.norm(own[first] - own[second], axis=1)
    above = np.linalg.norm(delayed[first] - delayed[second], axis=1)
    scale = max(float(np.abs(own).max()), 1e-300)
    usable = distinct & (below > 1e-12 * scale)
    if not np.any(usable):
        return 1.0
    return float((above[usable] / below[usable]).max())


def gronwall_theta(cert: Certificate, h: float, zeta2_factor: Optional[float] = None) -> float:
    """theta(h); ``zeta2_factor`` replaces the h multiplying zeta1 zeta2."""
    zeta2_factor = h if zeta2_factor is None else zeta2_factor
    return (
        2.0 * cert.zeta1 * h * cert.xi0_norm
        + 2.0 * cert.zeta1 * cert.zeta3 * h
        + ratio_term(cert.zeta1, cert.delta, h * cert.r, cert.b)
        + cert.zeta1 * cert.zeta2 * zeta2_factor
        + cert.zeta1 * cert.delta * h * cert.a
    )


def gronwall_bound(
    cert: Certificate,
    R_tilde: float,
    C_tilde: float,
    h: float,
    alpha: float,
    zeta2_factor: Optional[float] = None,
) -> float:
    if h < 0:
        raise ValidationError("h", f"h must be >= 0, got {h}")
    theta = gronwall_theta(cert, h, zeta2_factor)
    argument = cert.zeta1 * cert.delta * R_tilde * C_tilde * cert.a ** alpha * math.gamma(alpha)
    return theta * ml_eval(MLParams(alpha=alpha, beta=1.0), argument).value


def default_boundary_layer(prob: Problem) -> float:
    return prob.a / 8.0 if prob.alpha < 1.0 or prob.gamma < 1.0 else 0.0


def _defect(traj: Trajectory, prob: Problem, scheme: str) -> np.ndarray:
    grid = traj.grid
    result = hilfer_derivative(
        SampledFn(grid, traj.weighted_values, gamma=min(traj.gamma, 1.0)),
        prob.alpha,
        prob.beta,
        scheme=scheme,
    )
    derivative = result.values
    values = traj.unweighted()
    source = prob.nonlin.evaluate(grid.array[:, None], eval_delay(traj, grid.array, prob.delay))
    defect = derivative + values @ prob.gen.A.T - source
    defect[: result.boundary_nodes] = np.nan
    return np.linalg.norm(defect, axis=1)


def strong_residual(
    traj: Trajectory,
    prob: Problem,
    layer: Optional[float] = None,
    scheme: str = "integrated",
) -> float:
    """max |D xi + A xi - phi(t, xi(sigma(t)))| over nodes 2..N-1 with t - t0 >= layer."""
    layer = default_boundary_layer(prob) if layer is None else layer
    norms = _defect(traj, prob, scheme)
    grid = traj.grid
    index = np.arange(grid.n + 1)
    mask = (index >= 2) & (index <= grid.n - 1) & (grid.array - grid.t0 >= layer)
    if not np.any(mask):
        raise ValidationError("boundary_layer", f"no interior node lies beyond the layer {layer:g}")
    return float(norms[mask].max())


def strong_residual_l1(traj: Trajectory, prob: Problem, scheme: str = "integrated") -> float:
    """Left-endpoint-free L1 defect: sum over j >= 1 of |defect_j| (t_j - t_{j-1})."""
    norms = _defect(traj, prob, scheme)
    return float(np.nansum(norms[1:] * np.diff(traj.grid.array)))


def initial_condition_residual(traj: Trajectory, prob: Problem) -> float:
    """|Gamma(gamma) xw(t0) + phi(xi) - xi0|, using lim I^{1-gamma} xi = Gamma(gamma) xw(t0)."""
    limit = math.gamma(traj.gamma) * traj.weighted_values[0]
    return float(np.linalg.norm(limit + prob.nonlocal_.evaluate(traj) - prob.xi0_array))


def verify(
    traj: Trajectory,
    prob: Problem,
    cert: Certificate,
    h_values: Sequence[float],
    C_tilde: float = 1.0,
    layer: Optional[float] = None,
    scheme: str = "integrated",
) -> StrongReport:
    h_values = [float(h) for h in h_values]
    increments = lipschitz_modulus(traj, h_values)
    R_tilde = delay_constant(traj, prob, samples=prob.numerics.budget, seed=prob.numerics.seed)
    layer = default_boundary_layer(prob) if layer is None else layer

    theta = [gronwall_theta(cert, h) for h in h_values]
    rhs = [gronwall_bound(cert, R_tilde, C_tilde, h, prob.alpha) for h in h_values]
    theta_b = [gronwall_theta(cert, h, zeta2_factor=cert.b) for h in h_values]
    try:
        rhs_R = [gronwall_bound(cert, cert.r, C_tilde, h, prob.alpha) for h in h_values]
    except NonConvergence:
        # R in place of R~ can push the argument past the series limit
        rhs_R = [math.inf] * len(h_values)
    return StrongReport(
        h_values=h_values,
        increments=increments,
        lipschitz_modulus=max((inc / h for inc, h in zip(increments, h_values)), default=0.0),
        R_tilde=R_tilde,
        C_tilde=C_tilde,
        theta=theta,
        gronwall_rhs=rhs,
        theta_b_variant=theta_b,
        gronwall_rhs_R_variant=rhs_R,
        dominated=[inc <= bound for inc, bound in zip(increments, rhs)],
        residual_eq=strong_residual(traj, prob, layer=layer, scheme=scheme),
        residual_eq_l1=strong_residual_l1(traj, prob, scheme=scheme),
        residual_ic=initial_condition_residual(traj, prob),
        boundary_layer=layer,
    )
