"""
===============================================================================
    Module Name: Quantum Core
    Description:  Dense complex linear algebra and quantum-state representation.
                  Provides validated probability vectors, density matrices and
                  orthonormal frames, together with spectra, tensor products,
                  partial traces, purifications and the trace distance. Every
                  other module builds on the types declared here.

    Created Date: 2024-09-16
    Last Updated: 2024-10-02
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        rho = validate_density(np.eye(2) / 2)
                  spectrum(rho).probs          # array([0.5, 0.5])
                  partial_trace(tensor(rho, rho), (2, 2), keep="a")

    Requirements: Python 3.10.12, numpy, scipy, loguru

    Notes:        Values are read-only after construction (numpy arrays are
                  flagged non-writeable) so they can be shared between workers.
===============================================================================
"""

import json
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from settings import DEFAULT_TOLERANCES, Tolerances


MAX_DENSE_DIM = 4096


class QCoreError(Enum):
    NOT_SQUARE = ("Q001", "Matrix is not square")
    NOT_HERMITIAN = ("Q002", "Matrix is not Hermitian")
    NOT_PSD = ("Q003", "Matrix is not positive semidefinite")
    TRACE_NOT_ONE = ("Q004", "Trace is not one")
    EIGEN_FAILURE = ("Q005", "Eigensolver did not converge")
    DIMENSION_MISMATCH = ("Q006", "Dimension mismatch")
    NOT_DISTRIBUTION = ("Q007", "Vector is not a probability distribution")
    NOT_UNITARY = ("Q008", "Frame is not unitary")
    TOO_LARGE = ("Q009", "Operator exceeds the dense dimension cap")
    BAD_SUBSYSTEM = ("Q010", "Unknown subsystem tag")


class CatalyticEntropyError(Exception):
    def __init__(self, error: Enum, details=None):
        self.error = error
        self.code, self.message = error.value
        self.details = details
        text = f"{self.code}: {self.message}"
        if details is not None:
            text += f" ({details})"
        super().__init__(text)

    def to_dict(self):
        return {
            "code": self.code,
            "message": self.message,
            "details": self.details
        }


class QCoreException(CatalyticEntropyError):
    pass


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Distribution:
    def __init__(self, probs: Iterable[float], tol: Tolerances = DEFAULT_TOLERANCES):
        values = np.array(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=float).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise QCoreException(QCoreError.NOT_DISTRIBUTION, "empty or non-finite entries")
        if values.min() < -tol.tol_psd:
            raise QCoreException(QCoreError.NOT_DISTRIBUTION, f"negative entry {values.min():.3e}")
        total = float(values.sum())
        if abs(total - 1.0) > tol.tol_norm:
            raise QCoreException(QCoreError.NOT_DISTRIBUTION, f"entries sum to {total:.15g}")
        self.probs = _readonly(np.clip(values, 0.0, None))

    @classmethod
    def normalized(cls, weights: Iterable[float], tol: Tolerances = DEFAULT_TOLERANCES) -> "Distribution":
        values = np.clip(np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float), 0.0, None)
        total = values.sum()
        if total <= 0:
            raise QCoreException(QCoreError.NOT_DISTRIBUTION, "weights have no positive mass")
        return cls(values / total, tol)

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))

    def __len__(self) -> int:
        return int(self.probs.size)

    def padded(self, size: int) -> np.ndarray:
        if size < len(self):
            raise QCoreException(QCoreError.DIMENSION_MISMATCH, f"cannot pad length {len(self)} to {size}")
        return np.concatenate([self.probs, np.zeros(size - len(self))])

    def support(self, threshold: float = 0.0) -> int:
        return int(np.count_nonzero(self.probs > threshold))

    def to_dict(self) -> List[float]:
        return [float(x) for x in self.probs]

    def __str__(self):
        return json.dumps(self.to_dict())


class DensityMatrix:
    """Hermitian, PSD, unit-trace operator. Build through validate_density for untrusted input."""

    def __init__(self, entries: np.ndarray):
        matrix = np.array(entries, dtype=complex)
        matrix = 0.5 * (matrix + matrix.conj().T)
        self.entries = _readonly(matrix)
        self.dim = int(matrix.shape[0])

    @classmethod
    def from_diagonal(cls, probs: Union[Distribution, Sequence[float]]) -> "DensityMatrix":
        values = probs.probs if isinstance(probs, Distribution) else Distribution(probs).probs
        return cls(np.diag(values.astype(complex)))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def to_dict(self):
        return {
            "dim": self.dim,
            "re": np.real(self.entries).tolist(),
            "im": np.imag(self.entries).tolist()
        }

    def __str__(self):
        return json.dumps(self.to_dict())


class Basis:
    """Ordered orthonormal frame; column i is the i-th basis vector."""

    def __init__(self, columns: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES, check: bool = True):
        frame = np.array(columns, dtype=complex)
        if frame.ndim != 2 or frame.shape[0] != frame.shape[1]:
            raise QCoreException(QCoreError.NOT_SQUARE, f"frame shape {frame.shape}")
        if check:
            residual = unitarity_residual(frame)
            if residual > tol.tol_unitary:
                raise QCoreException(QCoreError.NOT_UNITARY, f"max |B^dagger B - I| = {residual:.3e}")
        self.columns = _readonly(frame)
        self.dim = int(frame.shape[0])

    def vector(self, index: int) -> np.ndarray:
        return self.columns[:, index]

    def projector(self, index: int) -> np.ndarray:
        v = self.columns[:, index]
        return np.outer(v, v.conj())

    def tensor(self, other: "Basis") -> "Basis":
        return Basis(np.kron(self.columns, other.columns), check=False)

    def to_dict(self):
        return {
            "dim": self.dim,
            "re": np.real(self.columns).tolist(),
            "im": np.imag(self.columns).tolist()
        }


class Purification:
    def __init__(self, schmidt_coeffs: Distribution, basis_a: Basis, basis_b: Basis, dim_b: int):
        self.schmidt_coeffs = schmidt_coeffs   # lambda_i, squared Schmidt coefficients
        self.basis_a = basis_a                 # eigenframe f_i of the source state
        self.basis_b = basis_b                 # standard frame g_i of the purifying system
        self.dim_b = dim_b

    @property
    def dim_a(self) -> int:
        return self.basis_a.dim

    def vector(self) -> np.ndarray:
        psi = np.zeros(self.dim_a * self.dim_b, dtype=complex)
        for i in range(self.dim_b):
            weight = self.schmidt_coeffs.probs[i]
            if weight > 0:
                psi += np.sqrt(weight) * np.kron(self.basis_a.vector(i), self.basis_b.vector(i))
        return psi

    def density(self) -> DensityMatrix:
        return density_from_vector(self.vector())

    def to_dict(self):
        return {
            "schmidt_coeffs": self.schmidt_coeffs.to_dict(),
            "dim_a": self.dim_a,
            "dim_b": self.dim_b
        }


def unitarity_residual(frame: np.ndarray) -> float:
    gram = frame.conj().T @ frame
    return float(np.max(np.abs(gram - np.eye(frame.shape[1]))))


def check_dense_dim(dim: int, what: str = "operator") -> None:
    if dim > MAX_DENSE_DIM:
        logger.error("Refusing to build {} of total dimension {} (cap {})", what, dim, MAX_DENSE_DIM)
        raise QCoreException(QCoreError.TOO_LARGE, f"{what} dimension {dim} exceeds {MAX_DENSE_DIM}")


def validate_density(raw, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    matrix = np.asarray(raw, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise QCoreException(QCoreError.NOT_SQUARE, f"shape {matrix.shape}")

    herm_dev = float(np.max(np.abs(matrix - matrix.conj().T)))
    if herm_dev > tol.tol_herm:
        logger.error("Hermiticity check failed: deviation {:.3e}", herm_dev)
        raise QCoreException(QCoreError.NOT_HERMITIAN, f"max |A - A^dagger| = {herm_dev:.3e}")
    matrix = 0.5 * (matrix + matrix.conj().T)

    try:
        min_eig = float(linalg.eigvalsh(matrix)[0])
    except linalg.LinAlgError as e:
        raise QCoreException(QCoreError.EIGEN_FAILURE, str(e))
    if min_eig < -tol.tol_psd:
        logger.error("PSD check failed: min eigenvalue {:.3e}", min_eig)
        raise QCoreException(QCoreError.NOT_PSD, f"min eigenvalue {min_eig:.15g}")

    trace = float(np.real(np.trace(matrix)))
    if abs(trace - 1.0) > tol.tol_norm:
        logger.error("Trace check failed: trace {:.15g}", trace)
        raise QCoreException(QCoreError.TRACE_NOT_ONE, f"trace {trace:.15g}")

    return DensityMatrix(matrix)


def eigenbasis(rho: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[Distribution, Basis]:
    try:
        values, vectors = linalg.eigh(rho.entries)
    except linalg.LinAlgError as e:
        logger.error("Eigensolver failure on dim {} state: {}", rho.dim, e)
        raise QCoreException(QCoreError.EIGEN_FAILURE, str(e))

    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    if values[-1] < -tol.tol_psd:
        logger.warning("Clamping eigenvalue {:.3e} below -tol_psd", values[-1])
    values = np.clip(values, 0.0, 1.0)
    values = values / values.sum()
    return Distribution(values, tol), Basis(vectors, check=False)


def spectrum(rho: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> Distribution:
    return eigenbasis(rho, tol)[0]


def _subsystem_index(keep: Union[str, int]) -> int:
    if keep in ("a", 0):
        return 0
    if keep in ("b", 1):
        return 1
    raise QCoreException(QCoreError.BAD_SUBSYSTEM, str(keep))


def partial_trace_array(operator: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem whose index is not in `keep`; kept order follows `dims`."""
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if operator.shape != (total, total):
        raise QCoreException(QCoreError.DIMENSION_MISMATCH, f"operator {operator.shape} vs dims {dims}")

    n = len(dims)
    tensor_op = operator.reshape(dims + dims)
    remaining = n
    for axis in sorted(set(range(n)) - set(keep), reverse=True):
        tensor_op = np.trace(tensor_op, axis1=axis, axis2=axis + remaining)
        remaining -= 1
    kept_dim = int(np.prod([dims[i] for i in sorted(keep)])) if keep else 1
    return tensor_op.reshape(kept_dim, kept_dim)


def partial_trace(rho_ab: DensityMatrix, dims: Tuple[int, int], keep: Union[str, int] = "a") -> DensityMatrix:
    d_a, d_b = int(dims[0]), int(dims[1])
    if rho_ab.dim != d_a * d_b:
        raise QCoreException(QCoreError.DIMENSION_MISMATCH, f"dim {rho_ab.dim} != {d_a}*{d_b}")
    index = _subsystem_index(keep)
    return DensityMatrix(partial_trace_array(rho_ab.entries, (d_a, d_b), [index]))


def purify(rho: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> Purification:
    probs, frame = eigenbasis(rho, tol)
    rank = max(1, int(np.count_nonzero(probs.probs > tol.tol_psd)))
    coeffs = np.zeros(rho.dim)
    coeffs[:rank] = probs.probs[:rank]
    coeffs = coeffs / coeffs.sum()
    logger.debug("Purifying dim {} state with Schmidt rank {}", rho.dim, rank)
    return Purification(
        schmidt_coeffs=Distribution(coeffs, tol),
        basis_a=frame,
        basis_b=Basis(np.eye(rank), check=False),
        dim_b=rank
    )


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.dim != sigma.dim:
        raise QCoreException(QCoreError.DIMENSION_MISMATCH, f"{rho.dim} vs {sigma.dim}")
    return operator_trace_distance(rho.entries, sigma.entries)


def operator_trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(linalg.eigvalsh(diff))))


def tensor(rho: DensityMatrix, sigma: DensityMatrix) -> DensityMatrix:
    check_dense_dim(rho.dim * sigma.dim, "tensor product")
    return DensityMatrix(np.kron(rho.entries, sigma.entries))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.dim != sigma.dim:
        raise QCoreException(QCoreError.DIMENSION_MISMATCH, f"{rho.dim} vs {sigma.dim}")
    values, vectors = linalg.eigh(rho.entries)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    inner = linalg.eigvalsh(root @ sigma.entries @ root)
    return float(np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def basis_state(dim: int, index: int) -> DensityMatrix:
    vector = np.zeros(dim, dtype=complex)
    vector[index] = 1.0
    return density_from_vector(vector)


def density_from_vector(psi: np.ndarray) -> DensityMatrix:
    vector = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise QCoreException(QCoreError.NOT_DISTRIBUTION, "zero state vector")
    vector = vector / norm
    return DensityMatrix(np.outer(vector, vector.conj()))
