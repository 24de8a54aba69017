"""Two-parameter Mittag-Leffler function E_{alpha,beta}(z) by certified power series.

The series sum_k z^k / Gamma(alpha k + beta) is truncated at the first index
whose geometric tail bound drops below the requested tolerance. The bound is
rigorous because log|Gamma| is convex on (0, inf), so the term ratios are
non-increasing once alpha k + beta > 0.

Arguments beyond ``z_max`` (default 10) are rejected with NonConvergence
instead of switching to asymptotic branches.
"""
import math
from dataclasses import dataclass, replace
from typing import Any, Tuple

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

try:
    from .errors import InvalidParams, NonConvergence, NonSquare
except ImportError:
    from errors import InvalidParams, NonConvergence, NonSquare

ML_ARGUMENT_LIMIT = 10.0
DEFAULT_MAX_TERMS = 1000
DEFAULT_ML_TOL = 1e-12
SCALAR_FLOOR = 1e-18
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float = 1.0
    tol: float = DEFAULT_ML_TOL
    max_terms: int = DEFAULT_MAX_TERMS
    z_max: float = ML_ARGUMENT_LIMIT

    def validate(self) -> None:
        if not (self.alpha > 0) or not math.isfinite(self.alpha):
            raise InvalidParams(f"alpha must be > 0, got {self.alpha}", field="alpha")
        if not math.isfinite(self.beta):
            raise InvalidParams(f"beta must be finite, got {self.beta}", field="beta")
        if not (self.tol > 0):
            raise InvalidParams(f"tol must be > 0, got {self.tol}", field="tol")
        if int(self.max_terms) < 1:
            raise InvalidParams(f"max_terms must be >= 1, got {self.max_terms}", field="max_terms")


@dataclass(frozen=True)
class MLResult:
    value: Any
    err_bound: float
    terms_used: int


def truncation_point(params: MLParams, modulus: float) -> Tuple[int, float, float]:
    """Return (K, tail bound, log10 of the largest term) for a series in |z| = modulus.

    Terms 0..K are summed; the tail bound covers every term with index > K.
    """
    if modulus == 0.0:
        head = abs(float(rgamma(params.beta)))
        return 0, 0.0, math.log10(head) if head > 0 else 0.0

    ks = np.arange(int(params.max_terms) + 2, dtype=float)
    args = params.alpha * ks + params.beta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_terms = ks * math.log(modulus) - gammaln(args)
        log_ratio = log_terms[2:] - log_terms[1:-1]
        valid = (
            (args[1:-1] > 0)
            & np.isfinite(log_terms[1:-1])
            & np.isfinite(log_ratio)
            & (log_ratio < 0)
        )
        tail = np.where(valid, np.exp(log_terms[1:-1]) / -np.expm1(np.where(valid, log_ratio, -1.0)), np.inf)
    reached = np.nonzero(tail <= params.tol)[0]
    if reached.size == 0:
        raise NonConvergence(
            f"Mittag-Leffler series did not reach tol={params.tol:g} within "
            f"{params.max_terms} terms (|z|={modulus:g})",
            modulus=modulus,
        )
    last = int(reached[0])
    used = log_terms[: last + 1]
    finite = used[np.isfinite(used)]
    peak = float(finite.max()) / math.log(10.0) if finite.size else 0.0
    return last, float(tail[last]), peak


def series_coefficients(alpha: float, beta: float, scale: float, count: int) -> np.ndarray:
    """Signed coefficients scale**k / Gamma(alpha k + beta), k = 0..count-1."""
    ks = np.arange(count, dtype=float)
    args = alpha * ks + beta
    coeffs = np.zeros(count)
    if scale == 0.0:
        coeffs[0] = rgamma(beta)
        return coeffs
    positive = args > 0
    with np.errstate(over="ignore", under="ignore"):
        coeffs[positive] = np.exp(ks[positive] * math.log(scale) - gammaln(args[positive]))
        coeffs[~positive] = rgamma(args[~positive]) * scale ** ks[~positive]
    return coeffs


def _check_argument(params: MLParams, modulus: float) -> None:
    if modulus > params.z_max:
        raise NonConvergence(
            f"|z|={modulus:g} exceeds the series limit z_max={params.z_max:g}",
            modulus=modulus,
        )


def ml_eval(params: MLParams, z: Any) -> MLResult:
    """Evaluate E_{alpha,beta}(z) for a real or complex scalar.

    The retained terms are summed in extended precision, with the working
    precision sized from the largest term, so cancellation for negative
    arguments stays below the truncation bound. When the series allows it,
    summation continues down to SCALAR_FLOOR so the float result is correctly
    rounded; the reported bound is the tail actually left out.
    """
    params.validate()
    is_complex = bool(np.iscomplexobj(z))
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise InvalidParams(f"z must be finite, got {z}", field="z")
    modulus = abs(zc)
    _check_argument(params, modulus)
    try:
        last, tail, peak = truncation_point(replace(params, tol=min(params.tol, SCALAR_FLOOR)), modulus)
    except NonConvergence:
        last, tail, peak = truncation_point(params, modulus)

    digits = 20 + max(0, math.ceil(peak)) + max(0, math.ceil(-math.log10(params.tol)) - 15)
    with mpmath.workdps(digits):
        zz = mpmath.mpc(zc.real, zc.imag) if is_complex else mpmath.mpf(zc.real)
        a = mpmath.mpf(params.alpha)
        b = mpmath.mpf(params.beta)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for k in range(last + 1):
            total += power * mpmath.rgamma(a * k + b)
            power *= zz
        value: Any = complex(total) if is_complex else float(total)
    return MLResult(value=value, err_bound=tail, terms_used=last + 1)


def ml_eval_matrix(params: MLParams, M: Any) -> MLResult:
    """Evaluate E_{alpha,beta}(M) for a square real matrix by the direct series.

    The tail bound is taken in the spectral norm; the reported bound also
    includes a floating-point rounding estimate for the float64 summation.
    """
    matrix = np.asarray(M, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonSquare(f"matrix must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParams("matrix entries must be finite", field="M")
    params.validate()
    dim = matrix.shape[0]
    norm = float(np.linalg.norm(matrix, 2)) if dim else 0.0
    _check_argument(params, norm)
    last, tail, _ = truncation_point(params, norm)

    coeffs = series_coefficients(params.alpha, params.beta, norm, last + 1)
    step = matrix / norm if norm > 0 else matrix
    total = np.zeros_like(matrix)
    power = np.eye(dim)
    for k in range(last + 1):
        total += coeffs[k] * power
        power = power @ step

    err = tail + _EPS * max(dim, 1) * float(np.abs(coeffs).sum())
    if err > params.tol:
        raise NonConvergence(
            f"float64 rounding bound {err:.3g} exceeds tol={params.tol:g} (|M|={norm:g})",
            modulus=norm,
        )
    return MLResult(value=total, err_bound=err, terms_used=last + 1)


def ml_matrix_family(params: MLParams, A: Any, s: Any) -> MLResult:
    """Evaluate E_{alpha,beta}(-A s^alpha) for every s >= 0 in one batched series.

    Returns an MLResult whose value has shape (len(s), d, d). The powers of
    -A/|A| are shared across all arguments; beta must be positive.
    """
    params.validate()
    matrix = np.asarray(A, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonSquare(f"matrix must be square, got shape {matrix.shape}")
    if not (params.beta > 0):
        raise InvalidParams("matrix family requires beta > 0", field="beta")
    times = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise InvalidParams("family arguments must be finite and >= 0", field="s")
    dim = matrix.shape[0]
    norm = float(np.linalg.norm(matrix, 2)) if dim else 0.0
    identity = np.eye(dim)
    if norm == 0.0 or times.size == 0 or float(times.max()) == 0.0:
        head = float(rgamma(params.beta))
        values = np.broadcast_to(head * identity, (times.size, dim, dim)).copy()
        return MLResult(value=values, err_bound=0.0, terms_used=1)

    z_top = norm * float(times.max()) ** params.alpha
    _check_argument(params, z_top)
    last, tail, _ = truncation_point(params, z_top)

    powers = np.empty((last + 1, dim, dim))
    powers[0] = identity
    step = -matrix / norm
    for k in range(1, last + 1):
        powers[k] = powers[k - 1] @ step

    ks = np.arange(last + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        log_z = math.log(norm) + params.alpha * np.log(times)
        coeffs = np.exp(ks[None, :] * log_z[:, None] - gammaln(params.alpha * ks + params.beta)[None, :])
    coeffs[:, 0] = rgamma(params.beta)
    coeffs[times == 0.0, 1:] = 0.0

    values = np.einsum("ik,kab->iab", coeffs, powers)
    top = series_coefficients(params.alpha, params.beta, z_top, last + 1)
    err = tail + _EPS * max(dim, 1) * float(np.abs(top).sum())
    if err > params.tol:
        raise NonConvergence(
            f"float64 rounding bound {err:.3g} exceeds tol={params.tol:g} (|z|={z_top:g})",
            modulus=z_top,
        )
    return MLResult(value=values, err_bound=err, terms_used=last + 1)


def mittag_leffler(alpha: float, z: Any, beta: float = 1.0, tol: float = DEFAULT_ML_TOL) -> Any:
    """Shorthand for ``ml_eval(MLParams(alpha, beta, tol), z).value``."""
    return ml_eval(MLParams(alpha=alpha, beta=beta, tol=tol), z).value
