"""
===============================================================================
    Module Name: Maximum Entropy
    Description:  Maximum-entropy estimation of an unknown spectrum from
                  dephased observations. Given observed outcome weights q_j
                  and overlaps alpha_ij = |<phi_i|psi_j>|^2 between the latent
                  eigenframe and the observation frame, finds the spectrum p of
                  largest entropy compatible with sum_i p_i alpha_ij = q_j.

                  - solve_maxent_relaxed: the single collapsed constraint with
                    the closed-form Gibbs / generalized Pareto families and a
                    bisection on the one remaining multiplier.
                  - solve_maxent_full: every constraint kept. Feasibility and
                    forced zeros are settled by linear programming, then the
                    Gibbs dual (von Neumann) or SLSQP (Renyi / Tsallis) is run
                    on the relative interior.
                  - brute_force_maxent: simplex grid oracle for n <= 4.

    Created Date: 2024-09-19
    Last Updated: 2024-10-04
    Version:      1.0.2

    License:      GNU General Public License v3.0

    Usage:        prob = MaxEntProblem(q, alpha, parse_measure("vn"))
                  solution = solve_maxent_full(prob)
                  solution.p.probs, solution.objective

    Requirements: Python 3.10.12, numpy, scipy, loguru

    Notes:        alpha has one row per latent index i and one column per
                  observed outcome j.
===============================================================================
"""

import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg, optimize
from scipy.special import logsumexp, softmax, xlogy

from channels import measurement_distribution
from entropy import EntropyMeasure, MeasureKind, classical_entropy
from qcore import Basis, CatalyticEntropyError, DensityMatrix, Distribution, eigenbasis


ROOT_TOLERANCE = 1e-10
FULL_TOLERANCE = 1e-8
ZERO_WEIGHT = 1e-10
BRACKET_LIMIT = 1e8
ORACLE_MAX_DIM = 4
DEFAULT_GRID_RESOLUTION = 1.0 / 400.0


class MaxEntError(Enum):
    BAD_PROBLEM = ("M001", "Invalid maximum-entropy problem")
    BAD_MEASURE = ("M002", "Measure not supported by this solver")
    NO_BRACKET = ("M003", "Relaxed constraint is infeasible for the closed-form family")
    DEGENERATE_Q = ("M004", "Observed outcomes leave no admissible latent weight")
    INFEASIBLE = ("M005", "No distribution satisfies the constraints")
    TOO_LARGE = ("M006", "Problem too large for the grid oracle")


class MaxEntException(CatalyticEntropyError):
    pass


class MaxEntProblem:
    def __init__(self, q: Sequence[float], alpha, measure: EntropyMeasure):
        q = np.asarray(q.probs if isinstance(q, Distribution) else q, dtype=float).ravel()
        alpha = np.asarray(alpha, dtype=float)
        errors = []
        if alpha.ndim != 2 or alpha.shape[1] != q.size:
            errors.append(f"alpha shape {alpha.shape} incompatible with {q.size} observed outcomes")
        else:
            if alpha.min() < -1e-9 or alpha.max() > 1.0 + 1e-9:
                errors.append("alpha entries must lie in [0, 1]")
            row_sums = alpha.sum(axis=1)
            if np.any(row_sums > 1.0 + 1e-9):
                errors.append(f"alpha row sums exceed 1: max {row_sums.max():.12g}")
            if alpha.shape[0] == alpha.shape[1] and np.any(np.abs(row_sums - 1.0) > 1e-9):
                errors.append("alpha rows must sum to 1 when every outcome is observed")
        if q.size == 0 or q.min() < -1e-12 or q.sum() > 1.0 + 1e-10:
            errors.append("q must be nonnegative with total weight at most 1")
        if errors:
            logger.error("Rejected maximum-entropy problem: {}", errors)
            raise MaxEntException(MaxEntError.BAD_PROBLEM, errors)
        if measure.kind == MeasureKind.GENERALIZED:
            raise MaxEntException(MaxEntError.BAD_MEASURE, str(measure))

        self.q = np.clip(q, 0.0, None)
        self.alpha = np.clip(alpha, 0.0, 1.0)
        self.measure = measure

    @property
    def n(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def m(self) -> int:
        return int(self.alpha.shape[1])

    def constraint_residual(self, p: np.ndarray) -> float:
        return float(np.max(np.abs(self.alpha.T @ p - self.q)))

    def to_dict(self):
        return {
            "q": self.q.tolist(),
            "alpha": self.alpha.tolist(),
            "measure": self.measure.to_dict()
        }


class MaxEntSolution:
    def __init__(
        self,
        p: Distribution,
        multipliers: List[float],
        objective: float,
        converged: bool,
        residuals: Dict[str, float],
        method: str
    ):
        self.p = p
        self.multipliers = multipliers
        self.objective = objective
        self.converged = converged
        self.residuals = residuals
        self.method = method
        self.notes: List[str] = []

    def to_dict(self):
        return {
            "method": self.method,
            "p": self.p.to_dict(),
            "objective": self.objective,
            "multipliers": [float(g) for g in self.multipliers],
            "converged": self.converged,
            "residuals": self.residuals,
            "notes": self.notes
        }


def _finish(prob: MaxEntProblem, p: np.ndarray, multipliers, converged: bool, extra: Dict[str, float], method: str,
            base: float) -> MaxEntSolution:
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    distribution = Distribution(p)
    residuals = {"normalization": abs(float(p.sum()) - 1.0), "constraints": prob.constraint_residual(p)}
    residuals.update(extra)
    return MaxEntSolution(
        p=distribution,
        multipliers=list(multipliers),
        objective=classical_entropy(distribution, prob.measure, base),
        converged=converged,
        residuals=residuals,
        method=method
    )


def relaxed_coefficients(prob: MaxEntProblem) -> Tuple[np.ndarray, int, List[int]]:
    """alpha'_i = sum_j alpha_ij / q_j over retained outcomes; returns (alpha', retained count, dropped)."""
    keep = prob.q > 0
    dropped = [int(j) for j in np.flatnonzero(~keep)]
    if not keep.any():
        raise MaxEntException(MaxEntError.DEGENERATE_Q, "every observed outcome has zero weight")
    if dropped:
        logger.debug("Dropping zero-weight outcomes {} from the relaxed constraint", dropped)
    coefficients = (prob.alpha[:, keep] / prob.q[keep]).sum(axis=1)
    return coefficients, int(keep.sum()), dropped


def _family_weights(gamma: float, coefficients: np.ndarray, measure: EntropyMeasure) -> np.ndarray:
    if measure.kind == MeasureKind.VON_NEUMANN:
        return softmax(-gamma * coefficients)
    a = measure.parameter
    bases = 1.0 + gamma * (1.0 - a) * coefficients
    log_weights = np.log(bases) / (a - 1.0)
    return softmax(log_weights)


def _gamma_domain(coefficients: np.ndarray, measure: EntropyMeasure) -> Tuple[float, float]:
    """Open interval of gamma on which every closed-form base stays positive."""
    if measure.kind == MeasureKind.VON_NEUMANN:
        return -math.inf, math.inf
    slope = (1.0 - measure.parameter) * coefficients.max()
    if slope > 0:
        return -1.0 / slope, math.inf
    return -math.inf, -1.0 / slope


def _bracket_candidates(edge: float, direction: float):
    """Trial multipliers walking toward `edge` (finite domain end) or outward by doubling."""
    if math.isfinite(edge):
        start = edge / 2.0
        for k in range(16):
            yield edge + (start - edge) * 10.0 ** (-k)
    else:
        value = direction
        while abs(value) <= BRACKET_LIMIT:
            yield value
            value *= 2.0


def solve_maxent_relaxed(prob: MaxEntProblem, base: float = 2.0) -> MaxEntSolution:
    coefficients, target, dropped = relaxed_coefficients(prob)

    def excess(gamma: float) -> float:
        return float(_family_weights(gamma, coefficients, prob.measure) @ coefficients) - target

    if np.ptp(coefficients) <= ROOT_TOLERANCE:
        if abs(coefficients[0] - target) > ROOT_TOLERANCE:
            raise MaxEntException(MaxEntError.NO_BRACKET, f"constant coefficient {coefficients[0]:.12g} != {target}")
        gamma = 0.0
    else:
        domain_low, domain_high = _gamma_domain(coefficients, prob.measure)
        # excess is decreasing in gamma
        low = next((g for g in _bracket_candidates(domain_low, -1.0) if excess(g) >= 0), None)
        high = next((g for g in _bracket_candidates(domain_high, 1.0) if excess(g) <= 0), None)
        if low is None or high is None:
            logger.error("Relaxed target {} outside the reachable range of the {} family", target, prob.measure)
            raise MaxEntException(MaxEntError.NO_BRACKET, f"target {target}, coefficients in "
                                  f"[{coefficients.min():.6g}, {coefficients.max():.6g}]")
        gamma = optimize.bisect(excess, low, high, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=2000) \
            if low != high else low

    p = _family_weights(gamma, coefficients, prob.measure)
    if prob.measure.kind == MeasureKind.VON_NEUMANN:
        normalizer = float(logsumexp(-gamma * coefficients))
    else:
        a = prob.measure.parameter
        normalizer = float(np.log(np.sum((1.0 + gamma * (1.0 - a) * coefficients) ** (1.0 / (a - 1.0)))))
    relaxed_residual = abs(float(p @ coefficients) - target)
    logger.info("Relaxed max-entropy solved: gamma2={:.12g}, relaxed residual={:.3e}", gamma, relaxed_residual)

    solution = _finish(
        prob, p, [normalizer, gamma], relaxed_residual <= ROOT_TOLERANCE * max(1.0, target),
        {"relaxed": relaxed_residual}, "relaxed", base
    )
    if dropped:
        solution.notes.append(f"dropped zero-weight outcomes {dropped}")
    return solution


def _minimal_violation(alpha: np.ndarray, q: np.ndarray) -> Tuple[float, np.ndarray]:
    """min over the simplex of max_j |sum_i p_i alpha_ij - q_j|, by linear programming."""
    n, m = alpha.shape
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    a_ub = np.vstack([
        np.hstack([alpha.T, -np.ones((m, 1))]),
        np.hstack([-alpha.T, -np.ones((m, 1))])
    ])
    b_ub = np.concatenate([q, -q])
    a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    result = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                              bounds=[(0, None)] * (n + 1), method="highs")
    if not result.success:
        raise MaxEntException(MaxEntError.INFEASIBLE, f"feasibility program failed: {result.message}")
    return float(result.x[-1]), result.x[:n]


def _interior_point(alpha: np.ndarray, q: np.ndarray, slack: float) -> Tuple[np.ndarray, List[int]]:
    """Average of per-coordinate maximizers over the feasible set; also reports coordinates forced to 0."""
    n, m = alpha.shape
    a_ub = np.vstack([alpha.T, -alpha.T])
    b_ub = np.concatenate([q + slack, -q + slack])
    points = []
    forced_zero = []
    for i in range(n):
        cost = np.zeros(n)
        cost[i] = -1.0
        result = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=np.ones((1, n)), b_eq=[1.0],
                                  bounds=[(0, None)] * n, method="highs")
        if not result.success or -result.fun <= ZERO_WEIGHT:
            forced_zero.append(i)
        else:
            points.append(result.x)
    if not points:
        raise MaxEntException(MaxEntError.DEGENERATE_Q, "no latent index can carry weight")
    return np.mean(points, axis=0), forced_zero


def _solve_gibbs_dual(alpha: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    def dual(gamma):
        return float(logsumexp(-alpha @ gamma) + gamma @ q)

    def gradient(gamma):
        p = softmax(-alpha @ gamma)
        return q - alpha.T @ p

    def hessian(gamma):
        p = softmax(-alpha @ gamma)
        mean = alpha.T @ p
        return (alpha.T * p) @ alpha - np.outer(mean, mean)

    result = optimize.minimize(dual, np.zeros(alpha.shape[1]), jac=gradient, hess=hessian,
                               method="trust-exact", options={"gtol": 1e-13, "maxiter": 2000})
    logger.debug("Gibbs dual finished after {} iterations: {}", result.nit, result.message)
    return softmax(-alpha @ result.x), result.x


def _independent_equalities(matrix: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rows of [matrix; 1] = [rhs; 1] with linearly dependent equations removed."""
    full = np.vstack([matrix, np.ones((1, matrix.shape[1]))])
    target = np.concatenate([rhs, [1.0]])
    _, r, pivots = linalg.qr(full.T, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diagonal > 1e-10 * max(diagonal.max(), 1.0)))
    chosen = np.sort(pivots[:rank])
    return full[chosen], target[chosen]


def _equality_constraints(matrix: np.ndarray, rhs: np.ndarray) -> List[dict]:
    rows, target = _independent_equalities(matrix, rhs)
    return [{"type": "eq", "fun": lambda p: rows @ p - target, "jac": lambda p: rows}]


def _solve_power_family(alpha: np.ndarray, q: np.ndarray, start: np.ndarray, exponent: float) -> np.ndarray:
    # Renyi and Tsallis share maximizers: extremize sum_i p_i^a
    sign = 1.0 if exponent > 1.0 else -1.0

    def objective(p):
        return sign * float(np.sum(np.clip(p, 1e-300, None) ** exponent))

    def jacobian(p):
        return sign * exponent * np.clip(p, 1e-300, None) ** (exponent - 1.0)

    constraints = _equality_constraints(alpha.T, q)
    result = optimize.minimize(objective, start, jac=jacobian, constraints=constraints,
                               bounds=[(0.0, 1.0)] * start.size, method="SLSQP",
                               options={"ftol": 1e-15, "maxiter": 1000})
    logger.debug("Power-family solver finished after {} iterations: {}", result.nit, result.message)
    return result.x


def solve_maxent_full(prob: MaxEntProblem, tol: float = FULL_TOLERANCE, base: float = 2.0) -> MaxEntSolution:
    violation, certificate = _minimal_violation(prob.alpha, prob.q)
    if violation > tol:
        logger.error("Maximum-entropy constraints infeasible: minimal violation {:.6g}", violation)
        raise MaxEntException(MaxEntError.INFEASIBLE, {
            "min_violation": violation,
            "closest_p": [float(x) for x in certificate]
        })

    start, forced_zero = _interior_point(prob.alpha, prob.q, max(violation, 1e-12))
    keep = np.setdiff1d(np.arange(prob.n), forced_zero)
    alpha = prob.alpha[keep]
    active = np.flatnonzero(alpha.max(axis=0) > 0)
    alpha, q = alpha[:, active], prob.q[active]
    if forced_zero:
        logger.debug("Latent indices {} are forced to zero weight", forced_zero)

    p_full = np.zeros(prob.n)
    if prob.measure.kind == MeasureKind.VON_NEUMANN:
        p_kept, gamma_active = _solve_gibbs_dual(alpha, q)
        multipliers = np.zeros(prob.m)
        multipliers[active] = gamma_active
        method = "gibbs_dual"
    else:
        p_kept = _solve_power_family(alpha, q, start[keep], prob.measure.parameter)
        multipliers = np.zeros(0)
        method = "slsqp"
    p_full[keep] = np.clip(p_kept, 0.0, None)

    residual = prob.constraint_residual(p_full / p_full.sum())
    solution = _finish(prob, p_full, multipliers, residual <= tol, {}, method, base)
    if forced_zero:
        solution.notes.append(f"latent indices {forced_zero} forced to zero")
    if not solution.converged:
        logger.warning("Full max-entropy solver residual {:.3e} above {:.1e}", residual, tol)
    logger.info("Full max-entropy ({}) objective {:.12g}, residual {:.3e}", prob.measure, solution.objective, residual)
    return solution


def _objective_batch(points: np.ndarray, measure: EntropyMeasure, base: float) -> np.ndarray:
    if measure.kind == MeasureKind.VON_NEUMANN:
        return -np.sum(xlogy(points, points), axis=1) / math.log(base)
    a = measure.parameter
    power = np.sum(np.where(points > 0, points, 0.0) ** a, axis=1)
    if measure.kind == MeasureKind.RENYI:
        return np.log(power) / (1.0 - a) / math.log(base)
    return (1.0 - power) / (a - 1.0)


def _tail_grid(parts: int, total: int) -> np.ndarray:
    """All nonnegative integer vectors of length `parts` (1..3) summing to `total`."""
    if parts == 1:
        return np.array([[total]])
    if parts == 2:
        first = np.arange(total + 1)
        return np.column_stack([first, total - first])
    first, second = np.meshgrid(np.arange(total + 1), np.arange(total + 1), indexing="ij")
    mask = first + second <= total
    first, second = first[mask], second[mask]
    return np.column_stack([first, second, total - first - second])


def _simplex_slices(n: int, steps: int):
    """Grid points k/steps of the simplex, yielded in slices along the first coordinate."""
    if n == 1:
        yield np.ones((1, 1))
        return
    for k0 in range(steps + 1):
        tail = _tail_grid(n - 1, steps - k0)
        head = np.full((tail.shape[0], 1), k0)
        yield np.hstack([head, tail]) / steps


def brute_force_maxent(
    prob: MaxEntProblem,
    grid_resolution: float = DEFAULT_GRID_RESOLUTION,
    relaxed: bool = False,
    base: float = 2.0
) -> MaxEntSolution:
    if prob.n > ORACLE_MAX_DIM:
        raise MaxEntException(MaxEntError.TOO_LARGE, f"n = {prob.n} > {ORACLE_MAX_DIM}")

    steps = int(round(1.0 / grid_resolution))
    step = 1.0 / steps
    if relaxed:
        coefficients, target, _ = relaxed_coefficients(prob)
        rows, rhs = coefficients[:, None], np.array([float(target)])
        slab = step * prob.n * coefficients.max()
    else:
        rows, rhs = prob.alpha, prob.q
        slab = step * prob.n

    best_value, best_point = -math.inf, None
    for points in _simplex_slices(prob.n, steps):
        inside = np.max(np.abs(points @ rows - rhs), axis=1) <= slab
        if not inside.any():
            continue
        candidates = points[inside]
        values = _objective_batch(candidates, prob.measure, base)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best_value, best_point = float(values[index]), candidates[index]

    if best_point is None:
        raise MaxEntException(MaxEntError.INFEASIBLE, f"no grid point within {slab:.3g} of the constraints")
    logger.debug("Grid oracle best value {:.8g} at {}", best_value, best_point)

    def negative(p):
        return -float(_objective_batch(np.clip(p, 0.0, None)[None, :], prob.measure, base)[0])

    constraints = _equality_constraints(rows.T, rhs)
    refined = optimize.minimize(negative, best_point, constraints=constraints, bounds=[(0.0, 1.0)] * prob.n,
                                method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    point = best_point
    if refined.success and np.max(np.abs(rows.T @ refined.x - rhs)) <= FULL_TOLERANCE:
        point = np.clip(refined.x, 0.0, None)
    else:
        logger.debug("Grid refinement rejected: {}", refined.message)

    extra = {}
    if relaxed:
        extra["relaxed"] = abs(float(point @ coefficients) - target)
    solution = _finish(prob, point, [], True, extra, "grid_oracle", base)
    solution.notes.append(f"grid step {step:.6g}")
    return solution


def problem_from_state(
    rho: DensityMatrix,
    J: Basis,
    measure: EntropyMeasure,
    observed: Optional[Sequence[int]] = None
) -> MaxEntProblem:
    """Observation of rho in J; `observed` keeps a subset of outcomes (lost outcomes otherwise)."""
    _, frame = eigenbasis(rho)
    alpha = np.abs(frame.columns.conj().T @ J.columns) ** 2
    q = measurement_distribution(rho, J).probs
    if observed is not None:
        columns = list(observed)
        alpha, q = alpha[:, columns], q[columns]
    return MaxEntProblem(q, alpha, measure)
