"""
===============================================================================
    Module Name: Channels
    Description:  Dephasing channels and Born-rule observation in an arbitrary
                  orthonormal frame, seeded Haar-random frames and states, and
                  the dephasing-lift unitary: a controlled family of mutually
                  trace-orthogonal shifts whose action on a maximally mixed
                  ancilla reproduces the dephased state on the system while
                  leaving the ancilla maximally mixed.

    Created Date: 2024-09-17
    Last Updated: 2024-10-02
    Version:      1.0.0

    License:      GNU General Public License v3.0

    Usage:        J = haar_basis(3, rng_seed=7)
                  sigma = dephase(rho, J)
                  lift = dephasing_lift(J)      # verified on probe states

    Requirements: Python 3.10.12, numpy, scipy, loguru
===============================================================================
"""

from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from qcore import (
    Basis,
    CatalyticEntropyError,
    DensityMatrix,
    Distribution,
    check_dense_dim,
    maximally_mixed,
    partial_trace_array,
    trace_distance,
)


LIFT_TOLERANCE = 1e-10

RngLike = Union[int, np.random.Generator, None]


class ChannelError(Enum):
    DIMENSION_MISMATCH = ("C001", "State and basis dimensions differ")
    VERIFICATION_FAILED = ("C002", "Dephasing lift identities do not hold")
    BAD_DIMENSION = ("C003", "Dimension must be a positive integer")


class ChannelException(CatalyticEntropyError):
    pass


def as_rng(seed: RngLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def computational_basis(dim: int) -> Basis:
    return Basis(np.eye(dim, dtype=complex), check=False)


def _check_dims(rho: DensityMatrix, J: Basis):
    if rho.dim != J.dim:
        logger.error("Dephasing dimension mismatch: state {} vs basis {}", rho.dim, J.dim)
        raise ChannelException(ChannelError.DIMENSION_MISMATCH, f"state {rho.dim} vs basis {J.dim}")


def measurement_distribution(rho: DensityMatrix, J: Basis) -> Distribution:
    _check_dims(rho, J)
    frame = J.columns
    born = np.real(np.einsum("ki,kl,li->i", frame.conj(), rho.entries, frame))
    born = np.clip(born, 0.0, None)
    return Distribution(born / born.sum())


def dephase(rho: DensityMatrix, J: Basis) -> DensityMatrix:
    q = measurement_distribution(rho, J)
    frame = J.columns
    return DensityMatrix((frame * q.probs) @ frame.conj().T)


def haar_basis(dim: int, rng_seed: RngLike = None) -> Basis:
    """Columns of a Haar unitary: QR of a complex Ginibre matrix with the phases of diag(R) removed."""
    if dim < 1:
        raise ChannelException(ChannelError.BAD_DIMENSION, str(dim))
    rng = as_rng(rng_seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = linalg.qr(z)
    d = np.diag(r)
    phases = d / np.abs(d)
    return Basis(q * phases, check=False)


def random_density(dim: int, rng_seed: RngLike = None, rank: Optional[int] = None) -> DensityMatrix:
    rng = as_rng(rng_seed)
    rank = dim if rank is None else max(1, min(rank, dim))
    weights = np.zeros(dim)
    weights[:rank] = rng.dirichlet(np.ones(rank))
    frame = haar_basis(dim, rng).columns
    return DensityMatrix((frame * weights) @ frame.conj().T)


def cyclic_shift(dim: int) -> np.ndarray:
    return np.roll(np.eye(dim, dtype=complex), 1, axis=0)


class DephasingLift:
    def __init__(self, basis: Basis, shift_unitaries: List[np.ndarray], global_unitary: np.ndarray):
        self.basis = basis
        self.shift_unitaries = shift_unitaries
        self.global_unitary = global_unitary
        self.residual = 0.0

    @property
    def dim(self) -> int:
        return self.basis.dim

    def shift_gram(self) -> np.ndarray:
        """Table of tr[V_i V_j^dagger]; equals dim * identity for a valid lift."""
        n = len(self.shift_unitaries)
        gram = np.zeros((n, n), dtype=complex)
        for i, v_i in enumerate(self.shift_unitaries):
            for j, v_j in enumerate(self.shift_unitaries):
                gram[i, j] = np.trace(v_i @ v_j.conj().T)
        return gram

    def to_dict(self):
        return {
            "dim": self.dim,
            "residual": self.residual,
            "basis": self.basis.to_dict()
        }


def apply_lift(lift: DephasingLift, rho: DensityMatrix) -> Tuple[DensityMatrix, DensityMatrix]:
    """Marginals of U1 (rho x 1/d) U1^dagger over system and ancilla."""
    _check_dims(rho, lift.basis)
    d = lift.dim
    joint = np.kron(rho.entries, np.eye(d) / d)
    u = lift.global_unitary
    evolved = u @ joint @ u.conj().T
    marginal_a = DensityMatrix(partial_trace_array(evolved, (d, d), [0]))
    marginal_b = DensityMatrix(partial_trace_array(evolved, (d, d), [1]))
    return marginal_a, marginal_b


def lift_residual(lift: DephasingLift, rho: DensityMatrix) -> float:
    marginal_a, marginal_b = apply_lift(lift, rho)
    return max(
        trace_distance(marginal_a, dephase(rho, lift.basis)),
        trace_distance(marginal_b, maximally_mixed(lift.dim))
    )


def dephasing_lift(J: Basis, n_probes: int = 8, rng_seed: RngLike = 0) -> DephasingLift:
    d = J.dim
    check_dense_dim(d * d, "dephasing lift")

    frame = J.columns
    shift = cyclic_shift(d)
    shifts = []
    power = np.eye(d, dtype=complex)
    for _ in range(d):
        shifts.append(frame @ power @ frame.conj().T)
        power = shift @ power

    u1 = np.zeros((d * d, d * d), dtype=complex)
    for j, v_j in enumerate(shifts):
        u1 += np.kron(J.projector(j), v_j)
    lift = DephasingLift(J, shifts, u1)

    rng = as_rng(rng_seed)
    residual = 0.0
    for _ in range(n_probes):
        residual = max(residual, lift_residual(lift, random_density(d, rng)))
    lift.residual = residual
    logger.debug("Dephasing lift of dim {} verified on {} probes, residual {:.3e}", d, n_probes, residual)

    if residual > LIFT_TOLERANCE:
        logger.error("Dephasing lift residual {:.3e} exceeds {:.1e}", residual, LIFT_TOLERANCE)
        raise ChannelException(ChannelError.VERIFICATION_FAILED, f"residual {residual:.3e}")
    return lift
