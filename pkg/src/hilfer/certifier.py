"""Estimate the constants of the existence conditions and check them.

Lipschitz constants come from closed forms for every catalog kind; sampled
difference quotients are reported next to them. A sampled value is a lower
bound, so a FAIL built on it is conclusive while a PASS is advisory.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterator, List, Optional

import click
import numpy as np

try:
    from .errors import BudgetTooSmall
    from .picard import DEFAULT_BUDGET, DEFAULT_SEED, DelayKind, NonlinKind, Problem
    from .solution_ops import weighted_f_family
except ImportError:
    from errors import BudgetTooSmall
    from picard import DEFAULT_BUDGET, DEFAULT_SEED, DelayKind, NonlinKind, Problem
    from solution_ops import weighted_f_family

MIN_SAMPLES = 100
CHUNK = 100
CLOSED_FORM = "closed_form"
SAMPLED = "sampled"
EVALUATED = "evaluated"
CONDITIONS = ("1", "2", "3", "4", "5", "6")


@dataclass(frozen=True)
class SamplingBudget:
    lipschitz: int = DEFAULT_BUDGET
    delay: int = DEFAULT_BUDGET
    refine: int = 4
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.lipschitz < MIN_SAMPLES or self.delay < MIN_SAMPLES:
            raise BudgetTooSmall(
                f"sampling budget must be >= {MIN_SAMPLES} per constant, got "
                f"lipschitz={self.lipschitz}, delay={self.delay}"
            )
        if self.refine < 1:
            raise BudgetTooSmall(f"refine must be >= 1, got {self.refine}")


@dataclass
class Certificate:
    zeta1: float
    zeta2: float
    zeta3: float
    delta: float
    lam: float
    b: float
    r: float
    a: float
    xi0_norm: float
    q: float
    q_proof: float
    cond6_lhs: float
    passes: Dict[str, bool]
    provenance: Dict[str, str]
    sampled: Dict[str, float]
    sampling_budget: SamplingBudget

    def to_document(self) -> Dict[str, Any]:
        document = asdict(self)
        document["lambda"] = document.pop("lam")
        return document


@dataclass
class ConditionResult:
    name: str
    passed: bool
    message: str


@dataclass
class Report:
    conditions: List[ConditionResult]
    q: float
    q_proof: float
    cond6_lhs: float
    r: float
    margin: float
    r_candidate: Optional[float]
    passed: bool
    advisory: bool

    def to_document(self) -> Dict[str, Any]:
        document = asdict(self)
        document["verdict"] = "PASS" if self.passed else "FAIL"
        return document


def ratio_term(zeta1: float, delta: float, scale: float, b: float) -> float:
    """zeta1 * delta * scale / b with 0 * (1/0) read as 0."""
    if delta == 0.0 or scale == 0.0:
        return 0.0
    if b <= 0.0:
        return math.inf
    return zeta1 * delta * scale / b


def contraction_constant(zeta1: float, lam: float, delta: float, a: float, b: float) -> float:
    return zeta1 * lam + ratio_term(zeta1, delta, a, b)


def invariance_lhs(zeta1: float, xi0_norm: float, zeta2: float, zeta3: float, delta: float, a: float, b: float, r: float) -> float:
    return zeta1 * (xi0_norm + zeta3 + a * zeta2) + ratio_term(zeta1, delta, a * r, b)


def _chunks(rng: np.random.Generator, total: int, draw) -> Iterator[Any]:
    """Draw full chunks of CHUNK samples and yield only the first `total`; larger budgets extend the same stream."""
    remaining = total
    while remaining > 0:
        batch = draw(rng, CHUNK)
        take = min(CHUNK, remaining)
        yield tuple(part[:take] for part in batch)
        remaining -= take


def _unit(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    vectors = rng.standard_normal((count, dim))
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / np.where(norms > 0, norms, 1.0)


def _ball_points(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    return _unit(rng, count, dim) * (radius * rng.random((count, 1)) ** (1.0 / dim))


def sampled_delta(prob: Problem, budget: SamplingBudget) -> float:
    """Max difference quotient of phi(t, .) over B_R.

    Sample i is an axis step, a random-direction step or a random pair,
    cycling in that order.
    """
    dim, radius = prob.dim, prob.ball_radius
    step = 1e-6 * max(1.0, radius)
    rng = np.random.default_rng(budget.seed)

    def draw(rng: np.random.Generator, count: int):
        times = prob.t0 + prob.a * rng.random(count)
        base = _ball_points(rng, count, dim, radius)
        partner = _ball_points(rng, count, dim, radius)
        directions = _unit(rng, count, dim)
        axes = rng.integers(0, dim, count)
        signs = rng.choice((-1.0, 1.0), count)
        return times, base, partner, directions, axes, signs

    best = 0.0
    offset = 0
    for times, base, partner, directions, axes, signs in _chunks(rng, budget.lipschitz, draw):
        count = len(times)
        kinds = (offset + np.arange(count)) % 3
        axis_steps = np.zeros((count, dim))
        axis_steps[np.arange(count), axes] = signs * step
        other = np.where(
            (kinds == 0)[:, None],
            base + axis_steps,
            np.where((kinds == 1)[:, None], base + step * directions, partner),
        )
        gaps = np.linalg.norm(other - base, axis=1)
        keep = gaps > 0
        values = prob.nonlin.evaluate(times[:, None], base) - prob.nonlin.evaluate(times[:, None], other)
        quotients = np.linalg.norm(values, axis=1)[keep] / gaps[keep]
        if quotients.size:
            best = max(best, float(quotients.max()))
        offset += count
    return best


def _anchor_factors(prob: Problem) -> np.ndarray:
    return np.array([(t - prob.t0) ** (prob.gamma - 1.0) for t in prob.nonlocal_.anchors])


def sampled_lambda(prob: Problem, budget: SamplingBudget) -> float:
    """Max of |sum_k c_k xi(t_k)| over weighted unit trajectories, sampled at the anchors."""
    if prob.nonlocal_.is_zero:
        return 0.0
    dim = prob.dim
    count_anchors = len(prob.nonlocal_.anchors)
    coefficients = np.asarray(prob.nonlocal_.coefficients, dtype=float)
    factors = _anchor_factors(prob)
    rng = np.random.default_rng(budget.seed + 1)

    def draw(rng: np.random.Generator, count: int):
        shared = _unit(rng, count, dim)
        separate = _unit(rng, count * count_anchors, dim).reshape(count, count_anchors, dim)
        scales = rng.random((count, count_anchors))
        return shared, separate, scales

    best = 0.0
    offset = 0
    for shared, separate, scales in _chunks(rng, budget.lipschitz, draw):
        count = len(shared)
        aligned = ((offset + np.arange(count)) % 2 == 0)[:, None, None]
        values = np.where(aligned, shared[:, None, :], separate * scales[:, :, None])
        values[:, 0, :] = np.where(aligned[:, 0, :], values[:, 0, :], separate[:, 0, :])
        mapped = np.einsum("kab,k,nkb->na", coefficients, factors, values)
        denominators = np.linalg.norm(values, axis=2).max(axis=1)
        best = max(best, float((np.linalg.norm(mapped, axis=1) / denominators).max()))
        offset += count
    return best


def sampled_b(prob: Problem, budget: SamplingBudget) -> float:
    """Min forward difference quotient of sigma on a dense uniform sample."""
    times = np.linspace(prob.t0, prob.t_end, budget.delay + 1)
    mapped = prob.delay.evaluate(times, prob.t0)
    return float((np.diff(mapped) / np.diff(times)).min())


def closed_form_delta(prob: Problem) -> float:
    nonlin = prob.nonlin
    if nonlin.kind is NonlinKind.ZERO:
        return 0.0
    if nonlin.kind is NonlinKind.LINEAR:
        return float(np.linalg.norm(np.asarray(nonlin.matrix, dtype=float), 2))
    if nonlin.kind is NonlinKind.SINE:
        return float(nonlin.scale)
    if nonlin.kind is NonlinKind.POLYNOMIAL:
        slope = np.polynomial.Polynomial(nonlin.coeffs).deriv()
        radius = prob.ball_radius
        candidates = [-radius, radius]
        for root in slope.deriv().roots():
            if abs(root.imag) < 1e-12 and -radius <= root.real <= radius:
                candidates.append(float(root.real))
        return float(np.abs(slope(np.asarray(candidates))).max())
    xs, ys = np.asarray(nonlin.table, dtype=float).T
    return float(np.abs(np.diff(ys) / np.diff(xs)).max())


def closed_form_b(prob: Problem) -> float:
    delay = prob.delay
    if delay.kind is DelayKind.IDENTITY:
        return 1.0
    if delay.kind is DelayKind.PROPORTIONAL:
        return float(delay.q)
    if delay.kind is DelayKind.LAG:
        return 0.0 if delay.lag > 0 else 1.0
    xs, ys = np.asarray(delay.table, dtype=float).T
    if xs[0] > prob.t0 or xs[-1] < prob.t_end:
        # clamped outside the table, so sigma is flat there
        return 0.0
    slopes = np.diff(ys) / np.diff(xs)
    overlap = (xs[1:] > prob.t0) & (xs[:-1] < prob.t_end)
    return float(slopes[overlap].min())


def closed_form_lambda(prob: Problem) -> float:
    if prob.nonlocal_.is_zero:
        return 0.0
    norms = [float(np.linalg.norm(np.asarray(c, dtype=float), 2)) for c in prob.nonlocal_.coefficients]
    return float(np.dot(norms, _anchor_factors(prob)))


def operator_bound(prob: Problem, refine: int) -> float:
    """max over a refined grid of |E_{alpha,gamma}(-A t^alpha)|_2 = |t^{1-gamma} F(t)|_2."""
    offsets = np.linspace(0.0, prob.a, refine * prob.numerics.grid_n + 1)
    family = weighted_f_family(prob.gen, prob.alpha, prob.beta, offsets, prob.numerics.ml_tol)
    return float(np.linalg.norm(family, 2, axis=(1, 2)).max())


def _condition_flags(cert_fields: Dict[str, float], r: float, ball_radius: float) -> Dict[str, bool]:
    q = cert_fields["q"]
    lhs = cert_fields["cond6_lhs"]
    return {
        "1": ball_radius > 0 and math.isfinite(cert_fields["xi0_norm"]),
        "2": cert_fields["b"] > 0,
        "3": math.isfinite(cert_fields["lam"]),
        "4": True,
        "5": math.isfinite(cert_fields["zeta1"]),
        "6": q < 1.0 and lhs <= r,
    }


def estimate_constants(prob: Problem, budget: Optional[SamplingBudget] = None) -> Certificate:
    budget = budget or SamplingBudget(
        lipschitz=prob.numerics.budget, delay=prob.numerics.budget, seed=prob.numerics.seed
    )
    budget.validate()
    zeta1 = operator_bound(prob, budget.refine)
    zeta2 = float(np.linalg.norm(prob.nonlin.evaluate(prob.t0, np.zeros(prob.dim))))
    delta = closed_form_delta(prob)
    lam = closed_form_lambda(prob)
    b = closed_form_b(prob)
    zeta3 = lam * prob.ball_radius
    sampled = {
        "delta": sampled_delta(prob, budget),
        "lambda": sampled_lambda(prob, budget),
        "b": sampled_b(prob, budget),
    }
    sampled["zeta3"] = sampled["lambda"] * prob.ball_radius

    r = prob.ball_radius
    xi0_norm = float(np.linalg.norm(prob.xi0_array))
    q = contraction_constant(zeta1, lam, delta, prob.a, b)
    q_proof = zeta1 * zeta3 + ratio_term(zeta1, delta, prob.a, b)
    lhs = invariance_lhs(zeta1, xi0_norm, zeta2, zeta3, delta, prob.a, b, r)
    fields = {"q": q, "cond6_lhs": lhs, "b": b, "lam": lam, "zeta1": zeta1, "xi0_norm": xi0_norm}
    return Certificate(
        zeta1=zeta1,
        zeta2=zeta2,
        zeta3=zeta3,
        delta=delta,
        lam=lam,
        b=b,
        r=r,
        a=prob.a,
        xi0_norm=xi0_norm,
        q=q,
        q_proof=q_proof,
        cond6_lhs=lhs,
        passes=_condition_flags(fields, r, prob.ball_radius),
        provenance={
            "zeta1": EVALUATED,
            "zeta2": CLOSED_FORM,
            "zeta3": CLOSED_FORM,
            "delta": CLOSED_FORM,
            "lambda": CLOSED_FORM,
            "b": CLOSED_FORM,
        },
        sampled=sampled,
        sampling_budget=budget,
    )


def check_conditions(cert: Certificate, r: Optional[float] = None) -> Report:
    """Evaluate conditions (1)-(6) at radius r (default: the certificate's radius)."""
    r = cert.r if r is None else float(r)
    q = contraction_constant(cert.zeta1, cert.lam, cert.delta, cert.a, cert.b)
    lhs = invariance_lhs(cert.zeta1, cert.xi0_norm, cert.zeta2, cert.zeta3, cert.delta, cert.a, cert.b, r)
    fields = {"q": q, "cond6_lhs": lhs, "b": cert.b, "lam": cert.lam, "zeta1": cert.zeta1, "xi0_norm": cert.xi0_norm}
    flags = _condition_flags(fields, r, r)

    messages = {
        "1": f"ball radius r={r:g}, |xi0|={cert.xi0_norm:.6g}",
        "2": f"sigma' >= b={cert.b:.6g}" + ("" if flags["2"] else " (b must be > 0)"),
        "3": f"nonlocal Lipschitz constant lambda={cert.lam:.6g}",
        "4": "bounded generator: -A generates a uniformly continuous semigroup",
        "5": f"zeta1={cert.zeta1:.6g}",
        "6": (
            f"q={q:.6g} " + ("< 1" if q < 1.0 else ">= 1, contraction fails")
            + f"; cond6_lhs={lhs:.6g} " + ("<=" if lhs <= r else ">") + f" r={r:g}"
        ),
    }
    conditions = [ConditionResult(name, flags[name], messages[name]) for name in CONDITIONS]

    denominator = 1.0 - ratio_term(cert.zeta1, cert.delta, cert.a, cert.b)
    r_candidate = None
    if denominator > 0:
        r_candidate = cert.zeta1 * (cert.xi0_norm + cert.zeta3 + cert.a * cert.zeta2) / denominator

    passed = all(flags.values())
    advisory = any(value == SAMPLED for value in cert.provenance.values())
    if passed and advisory:
        click.echo("[Warn] PASS rests on sampled constants; treat it as advisory.", err=True)
    return Report(
        conditions=conditions,
        q=q,
        q_proof=cert.q_proof,
        cond6_lhs=lhs,
        r=r,
        margin=r - lhs,
        r_candidate=r_candidate,
        passed=passed,
        advisory=advisory,
    )
