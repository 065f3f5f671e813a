"""
===============================================================================
    Module Name: Transitions
    Description:  Majorization certificates and explicit unitary constructions
                  for single-shot state transitions with a maximally mixed (or
                  catalytic) ancilla. Every construction is verified on dense
                  matrices before it is returned:
                  - construct_noisy_transition: eigenframe rotation, Schur-Horn
                    Givens chain and dephasing lift on a d-dim ancilla
                  - compose_catalytic: dephasing lift followed by an oracle
                    unitary acting on system and catalyst
                  - approx_transition_truncated: truncated infinite spectra with
                    certified trace-distance bounds
                  - probabilistic_conversion: block target with success weight

    Created Date: 2024-09-24
    Last Updated: 2024-10-08
    Version:      1.0.2

    License:      GNU General Public License v3.0

    Usage:        plan = construct_noisy_transition(rho, rho_target)
                  plan.residual_target        # < 1e-8 or VerificationFailed
                  compose_catalytic(rho, J, rho_target, noisy_oracle)

    Requirements: Python 3.10.12, numpy, scipy, loguru

    Notes:        Total operator dimension is capped at qcore.MAX_DENSE_DIM.
===============================================================================
"""

import itertools
from enum import Enum
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg, optimize

from channels import RngLike, as_rng, computational_basis, dephase, dephasing_lift, haar_basis
from entropy import EntropyMeasure, quantum_entropy
from qcore import (
    Basis,
    CatalyticEntropyError,
    MAX_DENSE_DIM,
    DensityMatrix,
    Distribution,
    check_dense_dim,
    eigenbasis,
    fidelity,
    maximally_mixed,
    operator_trace_distance,
    partial_trace_array,
    spectrum,
    trace_distance,
)


MAJORIZATION_SLACK = 1e-12
DIAGONAL_TOLERANCE = 1e-10
VERIFICATION_TOLERANCE = 1e-8
SEARCH_TOLERANCE = 1e-6
TAIL_LEVEL_CAP = 4096

SpectrumLike = Union[Distribution, Sequence[float], np.ndarray]
CatalystOracle = Callable[[DensityMatrix, DensityMatrix], Tuple[DensityMatrix, np.ndarray]]


class TransitionError(Enum):
    NOT_MAJORIZED = ("T001", "Source spectrum does not majorize the target spectrum")
    VERIFICATION_FAILED = ("T002", "Constructed unitary does not reproduce the required marginals")
    ORACLE_INVALID = ("T003", "Catalyst oracle output fails its marginal identities")
    TAIL_NOT_SUMMABLE = ("T004", "Spectrum streams do not reach the required mass within the level cap")
    DIMENSION_MISMATCH = ("T005", "Source and target dimensions differ")
    BAD_INPUT = ("T006", "Invalid transition parameter")
    CATALYST_NOT_FOUND = ("T007", "No catalyst found within the iteration budget")


class TransitionException(CatalyticEntropyError):
    pass


def _as_probs(p: SpectrumLike) -> np.ndarray:
    if isinstance(p, Distribution):
        return np.array(p.probs, dtype=float)
    return np.asarray(p, dtype=float).ravel()


class MajorizationCert:
    def __init__(self, p: np.ndarray, q: np.ndarray, partial_sum_gaps: np.ndarray):
        self.p = p
        self.q = q
        self.partial_sum_gaps = partial_sum_gaps
        self.holds = bool(np.all(partial_sum_gaps >= -MAJORIZATION_SLACK))

    @property
    def first_failure(self) -> Optional[int]:
        """1-based partial-sum index of the first failing gap."""
        failing = np.flatnonzero(self.partial_sum_gaps < -MAJORIZATION_SLACK)
        return int(failing[0]) + 1 if failing.size else None

    def to_dict(self):
        return {
            "p": [float(x) for x in self.p],
            "q": [float(x) for x in self.q],
            "holds": self.holds,
            "partial_sum_gaps": [float(x) for x in self.partial_sum_gaps]
        }


def majorizes(p: SpectrumLike, q: SpectrumLike) -> MajorizationCert:
    p_sorted = np.sort(_as_probs(p))[::-1]
    q_sorted = np.sort(_as_probs(q))[::-1]
    size = max(p_sorted.size, q_sorted.size)
    p_sorted = np.pad(p_sorted, (0, size - p_sorted.size))
    q_sorted = np.pad(q_sorted, (0, size - q_sorted.size))
    gaps = np.cumsum(p_sorted) - np.cumsum(q_sorted)
    return MajorizationCert(p_sorted, q_sorted, gaps)


class TransitionPlan:
    def __init__(
        self,
        source_spectrum: Distribution,
        target_spectrum: Distribution,
        global_unitary: np.ndarray,
        ancilla_dims: List[int],
        residual_target: float,
        residual_marginal: float,
        mode: str,
        catalyst: Optional[DensityMatrix] = None,
        success_probability: Optional[float] = None
    ):
        self.source_spectrum = source_spectrum
        self.target_spectrum = target_spectrum
        self.global_unitary = global_unitary
        self.ancilla_dims = ancilla_dims
        self.residual_target = float(residual_target)
        self.residual_marginal = float(residual_marginal)
        self.mode = mode
        self.catalyst = catalyst
        self.success_probability = success_probability
        self.details = {}

    @property
    def total_dim(self) -> int:
        return int(self.global_unitary.shape[0])

    def within(self, tolerance: float) -> bool:
        return self.residual_target <= tolerance and self.residual_marginal <= tolerance

    def to_dict(self, emit_unitary: bool = False):
        result = {
            "mode": self.mode,
            "source_spectrum": self.source_spectrum.to_dict(),
            "target_spectrum": self.target_spectrum.to_dict(),
            "ancilla_dims": list(self.ancilla_dims),
            "total_dim": self.total_dim,
            "residual_target": self.residual_target,
            "residual_marginal": self.residual_marginal,
            "success_probability": self.success_probability,
            "catalyst": self.catalyst.to_dict() if self.catalyst is not None else None
        }
        result.update(self.details)
        if emit_unitary:
            result["global_unitary"] = {
                "dim": self.total_dim,
                "re": np.real(self.global_unitary).tolist(),
                "im": np.imag(self.global_unitary).tolist()
            }
        return result


def _not_majorized(cert: MajorizationCert, what: str) -> TransitionException:
    logger.error("{}: majorization fails at partial sum {}", what, cert.first_failure)
    return TransitionException(
        TransitionError.NOT_MAJORIZED,
        {"first_failure": cert.first_failure, "partial_sum_gaps": [float(g) for g in cert.partial_sum_gaps]}
    )


def _givens(size: int, i: int, k: int, theta: float) -> np.ndarray:
    g = np.eye(size)
    c, s = np.cos(theta), np.sin(theta)
    g[i, i] = c
    g[i, k] = -s
    g[k, i] = s
    g[k, k] = c
    return g


def schur_horn_rotation(p: SpectrumLike, q: SpectrumLike) -> Basis:
    """
    Real orthogonal W with diag(W diag(p) W^T) = q.

    Each step takes the largest remaining target t, finds two active diagonal
    entries a_j >= t >= a_k adjacent in sorted order, and rotates in the (j, k)
    plane until entry j equals t. Entry j then leaves the active set; the
    remaining diagonal still majorizes the remaining targets, so at most n-1
    rotations are needed.
    """
    cert = majorizes(p, q)
    if not cert.holds:
        raise _not_majorized(cert, "Schur-Horn rotation")

    p_raw, q_raw = _as_probs(p), _as_probs(q)
    size = max(p_raw.size, q_raw.size)
    p_raw = np.pad(p_raw, (0, size - p_raw.size))
    q_raw = np.pad(q_raw, (0, size - q_raw.size))

    p_order = np.argsort(-p_raw, kind="stable")
    q_order = np.argsort(-q_raw, kind="stable")
    targets = q_raw[q_order]

    source_perm = np.zeros((size, size))
    source_perm[np.arange(size), p_order] = 1.0

    matrix = np.diag(p_raw[p_order])
    rotation = np.eye(size)
    active = list(range(size))
    placed = []
    n_rotations = 0

    for t in targets[:-1]:
        values = np.diag(matrix)
        ranked = sorted(active, key=lambda idx: -values[idx])
        j = 0
        while j + 1 < len(ranked) and values[ranked[j + 1]] > t:
            j += 1
        hi = ranked[j]
        lo = ranked[j + 1] if j + 1 < len(ranked) else None

        if lo is None or values[hi] - t <= 1e-14:
            fixed = hi
        elif t - values[lo] <= 1e-14:
            fixed = lo
        else:
            a_hh, a_ll, a_hl = matrix[hi, hi], matrix[lo, lo], matrix[hi, lo]

            def rotated_entry(theta):
                c, s = np.cos(theta), np.sin(theta)
                return c * c * a_hh - 2.0 * c * s * a_hl + s * s * a_ll - t

            theta = optimize.brentq(rotated_entry, 0.0, np.pi / 2.0, xtol=1e-15)
            g = _givens(size, hi, lo, theta)
            matrix = g @ matrix @ g.T
            rotation = g @ rotation
            fixed = hi
            n_rotations += 1

        active.remove(fixed)
        placed.append(fixed)
    placed.extend(active)

    target_perm = np.zeros((size, size))
    target_perm[q_order, placed] = 1.0
    w = target_perm @ rotation @ source_perm

    residual = float(np.max(np.abs(np.diag(w @ np.diag(p_raw) @ w.T) - q_raw)))
    logger.debug("Schur-Horn chain on {} levels used {} rotations, diagonal residual {:.3e}", size, n_rotations, residual)
    if residual > DIAGONAL_TOLERANCE:
        logger.error("Schur-Horn diagonal residual {:.3e} exceeds {:.1e}", residual, DIAGONAL_TOLERANCE)
        raise TransitionException(TransitionError.VERIFICATION_FAILED, f"diagonal residual {residual:.3e}")
    return Basis(w.astype(complex), check=False)


def _require_same_dim(rho: DensityMatrix, rho_target: DensityMatrix):
    if rho.dim != rho_target.dim:
        logger.error("Transition dimension mismatch: {} vs {}", rho.dim, rho_target.dim)
        raise TransitionException(TransitionError.DIMENSION_MISMATCH, f"{rho.dim} vs {rho_target.dim}")


def _evolve(unitary: np.ndarray, state: np.ndarray) -> np.ndarray:
    return unitary @ state @ unitary.conj().T


def construct_noisy_transition(rho: DensityMatrix, rho_target: DensityMatrix) -> TransitionPlan:
    _require_same_dim(rho, rho_target)
    d = rho.dim
    check_dense_dim(d * d, "noisy transition")

    source, v_source = eigenbasis(rho)
    target, v_target = eigenbasis(rho_target)
    cert = majorizes(source, target)
    if not cert.holds:
        raise _not_majorized(cert, "Noisy transition")
    if np.allclose(source.probs, target.probs, atol=MAJORIZATION_SLACK):
        logger.info("Source and target share a spectrum; the transition reduces to a change of frame")

    w = schur_horn_rotation(source, target).columns
    into_frame = w @ v_source.columns.conj().T
    lift = dephasing_lift(computational_basis(d))
    unitary = np.kron(v_target.columns, np.eye(d)) @ lift.global_unitary @ np.kron(into_frame, np.eye(d))

    evolved = _evolve(unitary, np.kron(rho.entries, np.eye(d) / d))
    residual_target = operator_trace_distance(partial_trace_array(evolved, (d, d), [0]), rho_target.entries)
    residual_marginal = operator_trace_distance(partial_trace_array(evolved, (d, d), [1]), np.eye(d) / d)
    logger.debug("Noisy transition dim {}: residuals {:.3e} / {:.3e}", d, residual_target, residual_marginal)

    if max(residual_target, residual_marginal) > VERIFICATION_TOLERANCE:
        logger.error("Noisy transition residuals {:.3e} / {:.3e} exceed tolerance", residual_target, residual_marginal)
        raise TransitionException(
            TransitionError.VERIFICATION_FAILED,
            {"residual_target": residual_target, "residual_marginal": residual_marginal}
        )

    return TransitionPlan(
        source_spectrum=source,
        target_spectrum=target,
        global_unitary=unitary,
        ancilla_dims=[d],
        residual_target=residual_target,
        residual_marginal=residual_marginal,
        mode="noisy"
    )


def construct_noisy_transition_d2(rho: DensityMatrix, rho_target: DensityMatrix) -> TransitionPlan:
    """Same transition with a d^2 maximally mixed ancilla: the d-dim plan tensored with a spectator."""
    d = rho.dim
    check_dense_dim(d ** 3, "noisy transition with d^2 ancilla")
    base = construct_noisy_transition(rho, rho_target)
    unitary = np.kron(base.global_unitary, np.eye(d))

    evolved = _evolve(unitary, np.kron(rho.entries, np.eye(d * d) / (d * d)))
    residual_target = operator_trace_distance(partial_trace_array(evolved, (d, d, d), [0]), rho_target.entries)
    residual_marginal = operator_trace_distance(partial_trace_array(evolved, (d, d, d), [1, 2]), np.eye(d * d) / (d * d))
    if max(residual_target, residual_marginal) > VERIFICATION_TOLERANCE:
        logger.error("d^2 ancilla transition residuals {:.3e} / {:.3e} exceed tolerance", residual_target, residual_marginal)
        raise TransitionException(
            TransitionError.VERIFICATION_FAILED,
            {"residual_target": residual_target, "residual_marginal": residual_marginal}
        )

    return TransitionPlan(
        source_spectrum=base.source_spectrum,
        target_spectrum=base.target_spectrum,
        global_unitary=unitary,
        ancilla_dims=[d * d],
        residual_target=residual_target,
        residual_marginal=residual_marginal,
        mode="noisy_d2"
    )


def identity_oracle(rho_c: DensityMatrix, rho_target: DensityMatrix) -> Tuple[DensityMatrix, np.ndarray]:
    """Trivial catalyst for rho_target == rho_c."""
    return DensityMatrix(np.ones((1, 1))), np.eye(rho_c.dim, dtype=complex)


def noisy_oracle(rho_c: DensityMatrix, rho_target: DensityMatrix) -> Tuple[DensityMatrix, np.ndarray]:
    plan = construct_noisy_transition(rho_c, rho_target)
    return maximally_mixed(rho_c.dim), plan.global_unitary


def _oracle_residuals(rho_c: DensityMatrix, rho_target: DensityMatrix, tau: DensityMatrix, u2: np.ndarray) -> Tuple[float, float]:
    d, k = rho_c.dim, tau.dim
    if u2.shape != (d * k, d * k):
        raise TransitionException(TransitionError.ORACLE_INVALID, f"unitary shape {u2.shape} for dims {d}x{k}")
    evolved = _evolve(u2, np.kron(rho_c.entries, tau.entries))
    residual_target = operator_trace_distance(partial_trace_array(evolved, (d, k), [0]), rho_target.entries)
    catalyst = partial_trace_array(evolved, (d, k), [1])
    residual_catalyst = operator_trace_distance(np.diag(np.diag(catalyst)), tau.entries)
    return residual_target, residual_catalyst


def _embed_system_catalyst(u2: np.ndarray, d: int, d_b: int, k: int) -> np.ndarray:
    """Lift a unitary on a x b' to a x b x b' acting trivially on b."""
    blocks = u2.reshape(d, k, d, k)
    full = np.einsum("acxz,by->abcxyz", blocks, np.eye(d_b))
    size = d * d_b * k
    return full.reshape(size, size)


def compose_catalytic(
    rho: DensityMatrix,
    J: Basis,
    rho_target: DensityMatrix,
    catalyst_oracle: CatalystOracle
) -> TransitionPlan:
    _require_same_dim(rho, rho_target)
    d = rho.dim
    rho_c = dephase(rho, J)

    vn = EntropyMeasure.von_neumann()
    s_target, s_dephased = quantum_entropy(rho_target, vn), quantum_entropy(rho_c, vn)
    if not s_target > s_dephased:
        logger.warning("Catalytic precondition S(target) > S(dephased) fails: {:.6f} <= {:.6f}", s_target, s_dephased)
    if spectrum(rho_target).support(1e-12) < spectrum(rho_c).support(1e-12):
        logger.warning("Catalytic precondition on ranks fails: target rank below dephased rank")

    tau, u2 = catalyst_oracle(rho_c, rho_target)
    u2 = np.asarray(u2, dtype=complex)
    k = tau.dim
    oracle_target, oracle_catalyst = _oracle_residuals(rho_c, rho_target, tau, u2)
    if max(oracle_target, oracle_catalyst) > VERIFICATION_TOLERANCE:
        logger.error("Catalyst oracle residuals {:.3e} / {:.3e} exceed tolerance", oracle_target, oracle_catalyst)
        raise TransitionException(
            TransitionError.ORACLE_INVALID,
            {"residual_target": oracle_target, "residual_catalyst": oracle_catalyst}
        )

    total = d * d * k
    check_dense_dim(total, "catalytic transition")
    lift = dephasing_lift(J)
    unitary = _embed_system_catalyst(u2, d, d, k) @ np.kron(lift.global_unitary, np.eye(k))
    catalyst = DensityMatrix(np.kron(np.eye(d) / d, tau.entries))

    evolved = _evolve(unitary, np.kron(rho.entries, catalyst.entries))
    residual_target = operator_trace_distance(partial_trace_array(evolved, (d, d, k), [0]), rho_target.entries)
    returned = DensityMatrix(partial_trace_array(evolved, (d, d, k), [1, 2]))
    product_frame = Basis(np.kron(J.columns, np.eye(k)), check=False)
    residual_marginal = trace_distance(dephase(returned, product_frame), catalyst)
    logger.info(
        "Catalytic transition dim {} with catalyst dims [{}, {}]: residuals {:.3e} / {:.3e}",
        d, d, k, residual_target, residual_marginal
    )

    if max(residual_target, residual_marginal) > VERIFICATION_TOLERANCE:
        logger.error("Catalytic transition residuals {:.3e} / {:.3e} exceed tolerance", residual_target, residual_marginal)
        raise TransitionException(
            TransitionError.VERIFICATION_FAILED,
            {"residual_target": residual_target, "residual_marginal": residual_marginal}
        )

    plan = TransitionPlan(
        source_spectrum=spectrum(rho),
        target_spectrum=spectrum(rho_target),
        global_unitary=unitary,
        ancilla_dims=[d, k],
        residual_target=residual_target,
        residual_marginal=residual_marginal,
        mode="catalytic",
        catalyst=catalyst
    )
    plan.details["preconditions"] = {"entropy_target": s_target, "entropy_dephased": s_dephased}
    return plan


def search_catalyst(
    rho_c: DensityMatrix,
    rho_target: DensityMatrix,
    dim_catalyst: int,
    iteration_budget: int = 2000,
    rng_seed: RngLike = 0,
    step: float = 0.5,
    should_stop: Optional[Callable[[], bool]] = None
) -> Optional[Tuple[DensityMatrix, np.ndarray]]:
    """
    Look for (tau, U2) with tr_b'[U2 (rho_c x tau) U2^dagger] = rho_target and a
    dephased catalyst marginal equal to tau.

    Alternates a projected gradient step on U2 (retracted to the unitary group
    by the polar factor) with the fixed-point update of tau. Returns None when
    the budget runs out or should_stop() turns true.
    """
    _require_same_dim(rho_c, rho_target)
    d, k = rho_c.dim, int(dim_catalyst)
    if k < 1 or iteration_budget < 0:
        raise TransitionException(TransitionError.BAD_INPUT, f"dim_catalyst={dim_catalyst}, budget={iteration_budget}")

    if trace_distance(rho_c, rho_target) <= 1e-12:
        logger.info("Catalyst search: target equals dephased source, trivial catalyst")
        return identity_oracle(rho_c, rho_target)

    vn = EntropyMeasure.von_neumann()
    s_target, s_dephased = quantum_entropy(rho_target, vn), quantum_entropy(rho_c, vn)
    if not s_target > s_dephased:
        logger.warning("Catalyst search precondition S(target) > S(dephased) fails: {:.6f} <= {:.6f}", s_target, s_dephased)

    if k == d and majorizes(spectrum(rho_c), spectrum(rho_target)).holds:
        tau, u2 = noisy_oracle(rho_c, rho_target)
        if max(_oracle_residuals(rho_c, rho_target, tau, u2)) < SEARCH_TOLERANCE:
            logger.info("Catalyst search: majorization warm start accepted")
            return tau, u2

    check_dense_dim(d * k, "catalyst search")
    unitary = haar_basis(d * k, as_rng(rng_seed)).columns
    tau = np.full(k, 1.0 / k)
    identity_a = np.eye(d)
    target = rho_target.entries

    for iteration in range(iteration_budget):
        if should_stop is not None and should_stop():
            logger.info("Catalyst search interrupted at iteration {}", iteration)
            return None
        initial = np.kron(rho_c.entries, np.diag(tau))
        evolved = _evolve(unitary, initial)
        marginal_a = partial_trace_array(evolved, (d, k), [0])
        marginal_b = np.real(np.diag(partial_trace_array(evolved, (d, k), [1])))
        residual_target = operator_trace_distance(marginal_a, target)
        residual_catalyst = 0.5 * float(np.sum(np.abs(marginal_b - tau)))

        if residual_target < SEARCH_TOLERANCE and residual_catalyst < SEARCH_TOLERANCE:
            logger.info(
                "Catalyst search converged after {} iterations (target fidelity {:.9f})",
                iteration, fidelity(DensityMatrix(marginal_a), rho_target)
            )
            return DensityMatrix(np.diag(tau)), unitary

        error = np.kron(marginal_a - target, np.eye(k)) + np.kron(identity_a, np.diag(marginal_b - tau))
        gradient = 2.0 * error @ unitary @ initial
        unitary, _ = linalg.polar(unitary - step * gradient)
        tau = np.clip(marginal_b, 0.0, None)
        tau = tau / tau.sum()

        if iteration % 200 == 0:
            logger.debug("Catalyst search iteration {}: residuals {:.3e} / {:.3e}", iteration, residual_target, residual_catalyst)

    logger.info("Catalyst search exhausted its budget of {} iterations", iteration_budget)
    return None


def geometric_stream(r: float = 0.5) -> Iterator[float]:
    """p_k = (1 - r) r^k for k = 0, 1, ..."""
    if not 0.0 <= r < 1.0:
        raise TransitionException(TransitionError.BAD_INPUT, f"ratio {r}")
    for level in itertools.count():
        yield (1.0 - r) * r ** level


def thermal_stream(nbar: float) -> Iterator[float]:
    """Occupation statistics of a thermal mode: nbar^k / (nbar + 1)^(k + 1)."""
    if nbar < 0.0:
        raise TransitionException(TransitionError.BAD_INPUT, f"mean occupation {nbar}")
    return geometric_stream(nbar / (nbar + 1.0))


def _truncate_streams(p_stream: Iterable[float], q_stream: Iterable[float], epsilon: float):
    bound = epsilon / 4.0
    p_iter, q_iter = iter(p_stream), iter(q_stream)
    p_values, q_values = [], []
    p_done = q_done = False

    for _ in range(TAIL_LEVEL_CAP):
        if not p_done:
            value = next(p_iter, None)
            if value is None:
                p_done = True
            else:
                p_values.append(float(value))
        if not q_done:
            value = next(q_iter, None)
            if value is None:
                q_done = True
            else:
                q_values.append(float(value))
        tail_p = max(0.0, 1.0 - float(np.sum(p_values)))
        tail_q = max(0.0, 1.0 - float(np.sum(q_values)))
        if tail_p < bound and tail_q < bound:
            levels = max(len(p_values), len(q_values))
            return np.pad(p_values, (0, levels - len(p_values))), np.pad(q_values, (0, levels - len(q_values))), tail_p, tail_q

    logger.error("Spectrum tails stay above {:.3e} within {} levels", bound, TAIL_LEVEL_CAP)
    raise TransitionException(TransitionError.TAIL_NOT_SUMMABLE, {"epsilon": epsilon, "level_cap": TAIL_LEVEL_CAP})


def approx_transition_truncated(
    p_stream: Iterable[float],
    q_stream: Iterable[float],
    epsilon: float,
    oracle: Optional[CatalystOracle] = None
) -> TransitionPlan:
    if not 0.0 < epsilon < 1.0:
        raise TransitionException(TransitionError.BAD_INPUT, f"epsilon {epsilon}")

    p_values, q_values, tail_p, tail_q = _truncate_streams(p_stream, q_stream, epsilon)
    levels = p_values.size
    logger.info("Truncating at level n={} (tails {:.3e}, {:.3e})", levels - 1, tail_p, tail_q)

    rho = DensityMatrix.from_diagonal(Distribution.normalized(p_values))
    rho_target = DensityMatrix.from_diagonal(Distribution.normalized(q_values))
    if oracle is None:
        plan = construct_noisy_transition(rho, rho_target)
    else:
        plan = compose_catalytic(rho, computational_basis(levels), rho_target, oracle)

    construction_target, construction_marginal = plan.residual_target, plan.residual_marginal
    plan.residual_target = construction_target + tail_p + tail_q
    plan.residual_marginal = construction_marginal + tail_p
    plan.mode = "approx"
    plan.details["truncation"] = {
        "epsilon": epsilon,
        "level": levels - 1,
        "tail_source": tail_p,
        "tail_target": tail_q,
        "construction_residual_target": construction_target,
        "construction_residual_marginal": construction_marginal
    }

    if plan.residual_target >= epsilon or plan.residual_marginal >= epsilon:
        logger.error("Certified residuals {:.3e} / {:.3e} miss epsilon {}", plan.residual_target, plan.residual_marginal, epsilon)
        raise TransitionException(
            TransitionError.VERIFICATION_FAILED,
            {"residual_target": plan.residual_target, "residual_marginal": plan.residual_marginal, "epsilon": epsilon}
        )
    return plan


def probabilistic_bound(p: SpectrumLike, q: SpectrumLike) -> float:
    """Largest weight w with p majorizing the sub-normalized w*q: min over l of P(l) / Q(l)."""
    cert = majorizes(p, q)
    source_sums, target_sums = np.cumsum(cert.p), np.cumsum(cert.q)
    mask = target_sums > MAJORIZATION_SLACK
    return float(min(1.0, np.min(source_sums[mask] / target_sums[mask])))


def _block_spectrum(target: np.ndarray, weight: float, k: int) -> np.ndarray:
    return np.concatenate([weight * target, np.full(k, (1.0 - weight) / k)])


def _block_feasible(source: np.ndarray, target: np.ndarray, weight: float, k: int) -> bool:
    return majorizes(np.pad(source, (0, k)), _block_spectrum(target, weight, k)).holds


def probabilistic_conversion(rho: DensityMatrix, rho_target: DensityMatrix, k: Optional[int] = None) -> TransitionPlan:
    """
    Convert rho to rho_target with the largest success weight. The target is
    embedded as the block diag(p rho_target, (1 - p) 1_k / k); a projective
    check onto the first block then succeeds with probability p.
    """
    _require_same_dim(rho, rho_target)
    d = rho.dim
    source = spectrum(rho).probs
    target = spectrum(rho_target).probs
    weight = probabilistic_bound(source, target)
    if weight <= 0.0:
        raise TransitionException(TransitionError.NOT_MAJORIZED, "no positive success weight")

    max_pad = int(np.floor(np.sqrt(MAX_DENSE_DIM))) - d
    if max_pad < 1:
        raise TransitionException(TransitionError.BAD_INPUT, f"no room for padding levels at dim {d}")

    if k is None:
        k = next((size for size in range(1, max_pad + 1) if _block_feasible(source, target, weight, size)), None)
        if k is None:
            k = max_pad
    elif not 1 <= k <= max_pad:
        raise TransitionException(TransitionError.BAD_INPUT, f"padding size {k} outside [1, {max_pad}]")

    if not _block_feasible(source, target, weight, k):
        if not _block_feasible(source, target, 0.0, k):
            raise TransitionException(TransitionError.NOT_MAJORIZED, f"no feasible success weight with {k} padding levels")
        bound = weight
        root = optimize.bisect(
            lambda w: 1.0 if _block_feasible(source, target, w, k) else -1.0,
            0.0, bound, xtol=1e-12
        )
        weight = max(0.0, root - 2e-12)
        logger.warning("Padding with {} levels only supports success weight {:.9f} below the bound {:.9f}", k, weight, bound)

    padded = DensityMatrix(linalg.block_diag(rho.entries, np.zeros((k, k))))
    block = DensityMatrix(linalg.block_diag(weight * rho_target.entries, (1.0 - weight) * np.eye(k) / k))
    plan = construct_noisy_transition(padded, block)

    size = d + k
    evolved = _evolve(plan.global_unitary, np.kron(padded.entries, np.eye(size) / size))
    achieved = partial_trace_array(evolved, (size, size), [0])
    success = float(np.real(np.trace(achieved[:d, :d])))
    post_selected = achieved[:d, :d] / success
    residual_post = operator_trace_distance(post_selected, rho_target.entries)
    logger.info("Probabilistic conversion with {} padding levels: success {:.9f}, residual {:.3e}", k, success, residual_post)

    plan.mode = "probabilistic"
    plan.success_probability = weight
    plan.residual_target = max(plan.residual_target, residual_post)
    plan.details["padding_levels"] = k
    plan.details["success_measured"] = success
    return plan

