"""
===============================================================================
    Module Name: Models
    Description:  Physical toy models used to exercise the entropy tools:
                  - truncated thermal (Fock) states and their entropy limits
                  - single- and two-mode Gaussian covariance matrices with
                    symplectic eigenvalues and a beamsplitter with vacuum
                  - a center-cluster spin model with Z-Z couplings, whose center
                    decoheres while the outer spins stay maximally mixed

    Created Date: 2024-09-30
    Last Updated: 2024-10-07
    Version:      1.0.0

    License:      GNU General Public License v3.0

    Usage:        rho = thermal_truncated(ThermalSpec(nbar=1.0, N=64))
                  gaussian_entropy(beamsplitter_covariance(thermal_covariance(1.0), 0.5))
                  spin_cluster_entropy(SpinClusterConfig(m=1, n=2, omega=[[1, 1]], T=0.3))

    Requirements: Python 3.10.12, numpy, scipy, pydantic, loguru

    Notes:        Covariances use the convention vacuum = identity.
===============================================================================
"""

import functools
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import linalg
from scipy.special import xlogy

from channels import computational_basis, dephase
from entropy import EntropyMeasure, MeasureKind, quantum_entropy
from qcore import Basis, CatalyticEntropyError, DensityMatrix, check_dense_dim


MAX_FOCK_LEVEL = 4096
MAX_SPINS = 12
PHYSICAL_SLACK = 1e-9
CONVERGENCE_TOLERANCE = 1e-9


class ModelError(Enum):
    BAD_PARAMETER = ("G001", "Invalid model parameter")
    UNPHYSICAL = ("G002", "Covariance matrix violates the uncertainty principle")
    BAD_COVARIANCE = ("G003", "Covariance matrix must be real symmetric of even size")
    TOO_LARGE = ("G004", "Spin cluster exceeds the dense simulation cap")


class ModelException(CatalyticEntropyError):
    pass


class ThermalSpec(BaseModel):
    nbar: float = Field(ge=0.0)
    N: int = Field(ge=0, le=MAX_FOCK_LEVEL)

    @property
    def ratio(self) -> float:
        return self.nbar / (self.nbar + 1.0)

    @property
    def deficit(self) -> float:
        """Weight above level N: ratio^(N + 1)."""
        return self.ratio ** (self.N + 1)

    def weights(self) -> np.ndarray:
        levels = np.arange(self.N + 1)
        return (1.0 - self.ratio) * self.ratio ** levels


def thermal_truncated(spec: ThermalSpec, renormalize: bool = True) -> DensityMatrix:
    weights = spec.weights()
    if renormalize:
        weights = weights / weights.sum()
    else:
        logger.debug("Unrenormalized thermal truncation nbar={} N={}: deficit {:.3e}", spec.nbar, spec.N, spec.deficit)
    return DensityMatrix(np.diag(weights.astype(complex)))


def thermal_entropy_limit(nbar: float, m: EntropyMeasure, base: float = 2.0) -> Optional[float]:
    """Entropy of the untruncated thermal spectrum, or None for generalized measures."""
    ratio = nbar / (nbar + 1.0)
    if m.kind == MeasureKind.VON_NEUMANN:
        return float((xlogy(nbar + 1.0, nbar + 1.0) - xlogy(nbar, nbar)) / np.log(base))
    if m.kind == MeasureKind.GENERALIZED:
        return None
    a = m.parameter
    power_sum = (1.0 - ratio) ** a / (1.0 - ratio ** a)
    if m.kind == MeasureKind.RENYI:
        return float(np.log(power_sum) / ((1.0 - a) * np.log(base)))
    return float((1.0 - power_sum) / (a - 1.0))


def thermal_entropy_convergence(
    nbar: float,
    N_list: Sequence[int],
    m: Optional[EntropyMeasure] = None,
    base: float = 2.0
) -> Dict:
    m = m or EntropyMeasure.von_neumann()
    limit = thermal_entropy_limit(nbar, m, base)
    rows = []
    for N in sorted(N_list):
        spec = ThermalSpec(nbar=nbar, N=N)
        rows.append({
            "N": N,
            "entropy": quantum_entropy(thermal_truncated(spec), m, base),
            "deficit": spec.deficit
        })

    entropies = [row["entropy"] for row in rows]
    monotone = all(later >= earlier - CONVERGENCE_TOLERANCE for earlier, later in zip(entropies, entropies[1:]))
    if not monotone:
        logger.warning("Truncated thermal entropies are not nondecreasing in N for nbar={}", nbar)
    converged = None if limit is None or not rows else abs(entropies[-1] - limit) < CONVERGENCE_TOLERANCE
    return {
        "measure": str(m),
        "nbar": nbar,
        "limit": limit,
        "monotone": monotone,
        "converged": converged,
        "rows": rows
    }


def symplectic_form(modes: int) -> np.ndarray:
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


class CovarianceMatrix:
    """Quadrature covariance ordered (x1, p1, x2, p2, ...)."""

    def __init__(self, matrix, check: bool = True):
        values = np.array(matrix, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] % 2:
            raise ModelException(ModelError.BAD_COVARIANCE, f"shape {values.shape}")
        if not np.allclose(values, values.T, atol=1e-9):
            raise ModelException(ModelError.BAD_COVARIANCE, "not symmetric")
        self.matrix = 0.5 * (values + values.T)
        self.modes = values.shape[0] // 2
        if check:
            nu = symplectic_eigenvalues(self)
            if nu.min() < 1.0 - PHYSICAL_SLACK:
                logger.error("Unphysical covariance: smallest symplectic eigenvalue {:.6f}", nu.min())
                raise ModelException(ModelError.UNPHYSICAL, {"symplectic_eigenvalues": nu.tolist()})

    def block(self, mode: int) -> np.ndarray:
        return self.matrix[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2]

    def reduced(self, mode: int) -> "CovarianceMatrix":
        return CovarianceMatrix(self.block(mode))

    def to_dict(self):
        return {"modes": self.modes, "matrix": self.matrix.tolist()}


def vacuum_covariance(modes: int = 1) -> CovarianceMatrix:
    return CovarianceMatrix(np.eye(2 * modes))


def thermal_covariance(nbar: float) -> CovarianceMatrix:
    if nbar < 0.0:
        raise ModelException(ModelError.BAD_PARAMETER, f"nbar {nbar}")
    return CovarianceMatrix((2.0 * nbar + 1.0) * np.eye(2))


def symplectic_eigenvalues(cov: CovarianceMatrix) -> np.ndarray:
    """Moduli of the eigenvalues of i Omega sigma; they come in +/- pairs, one of each kept."""
    omega = symplectic_form(cov.modes)
    moduli = np.sort(np.abs(linalg.eigvals(1j * omega @ cov.matrix)))
    return moduli[::2]


def _bosonic_entropy(x: np.ndarray, base: float) -> np.ndarray:
    return (xlogy(x + 1.0, x + 1.0) - xlogy(x, x)) / np.log(base)


def gaussian_entropy(cov: CovarianceMatrix, base: float = 2.0) -> float:
    nu = np.clip(symplectic_eigenvalues(cov), 1.0, None)
    return float(np.sum(_bosonic_entropy((nu - 1.0) / 2.0, base)))


def beamsplitter_covariance(cov_a: CovarianceMatrix, transmissivity: float) -> CovarianceMatrix:
    """Mix a single mode with vacuum: S (sigma_a + 1) S^T with S = [[t, -r], [r, t]] per quadrature."""
    if cov_a.modes != 1:
        raise ModelException(ModelError.BAD_PARAMETER, f"expected one mode, got {cov_a.modes}")
    if not 0.0 <= transmissivity <= 1.0:
        raise ModelException(ModelError.BAD_PARAMETER, f"transmissivity {transmissivity}")
    t, r = np.sqrt(transmissivity), np.sqrt(1.0 - transmissivity)
    identity = np.eye(2)
    mixer = np.block([[t * identity, -r * identity], [r * identity, t * identity]])
    joint = linalg.block_diag(cov_a.matrix, identity)
    return CovarianceMatrix(mixer @ joint @ mixer.T)


class SpinClusterConfig(BaseModel):
    m: int = Field(ge=1)
    n: int = Field(ge=0)
    omega: List[List[float]]
    T: float = 0.0

    @field_validator("omega")
    @classmethod
    def finite_couplings(cls, value):
        if not all(np.isfinite(x) for row in value for x in row):
            raise ValueError("couplings must be finite")
        return value

    @model_validator(mode="after")
    def shape_and_size(self):
        if self.m + self.n > MAX_SPINS:
            raise ValueError(f"m + n = {self.m + self.n} exceeds {MAX_SPINS}")
        if len(self.omega) != self.m or any(len(row) != self.n for row in self.omega):
            raise ValueError(f"omega must be {self.m} x {self.n}")
        return self

    @property
    def couplings(self) -> np.ndarray:
        return np.array(self.omega, dtype=float).reshape(self.m, self.n)


def _z_signs(qubits: int) -> np.ndarray:
    """Row x holds the Z eigenvalues (+1 for bit 0) of basis state x; qubit 0 is most significant."""
    index = np.arange(2 ** qubits)[:, None]
    shifts = np.arange(qubits - 1, -1, -1)[None, :]
    return 1.0 - 2.0 * ((index >> shifts) & 1)


def _pauli_x_string(m: int) -> np.ndarray:
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    return functools.reduce(np.kron, [x] * m, np.eye(1))


def _center_initial(m: int) -> np.ndarray:
    dim = 2 ** m
    return (np.eye(dim) + _pauli_x_string(m)) / dim


def _center_state(cfg: SpinClusterConfig, T: float) -> DensityMatrix:
    """
    The Hamiltonian is diagonal in the Z product basis, so each outer
    configuration only imprints phases exp(-i E(c, o) T) on the center. Averaging
    over the maximally mixed outer spins gives rho_c(0) o (Phi Phi^dagger) / 2^n.
    """
    fields = _z_signs(cfg.m) @ cfg.couplings
    energies = fields @ _z_signs(cfg.n).T
    phases = np.exp(-1j * energies * T)
    coherence = phases @ phases.conj().T / 2 ** cfg.n
    return DensityMatrix(_center_initial(cfg.m) * coherence)


def spin_cluster_reference(cfg: SpinClusterConfig, T: Optional[float] = None) -> DensityMatrix:
    """Center state from exp(-i H T) on the full register; for cross-checks on small clusters."""
    T = cfg.T if T is None else T
    qubits = cfg.m + cfg.n
    dim = 2 ** qubits
    check_dense_dim(dim, "spin cluster reference")
    signs = _z_signs(qubits)
    energies = np.einsum("xs,sj,xj->x", signs[:, :cfg.m], cfg.couplings, signs[:, cfg.m:])
    unitary = linalg.expm(-1j * T * np.diag(energies))
    initial = np.kron(_center_initial(cfg.m), np.eye(2 ** cfg.n) / 2 ** cfg.n)
    evolved = unitary @ initial @ unitary.conj().T
    center = evolved.reshape(2 ** cfg.m, 2 ** cfg.n, 2 ** cfg.m, 2 ** cfg.n).trace(axis1=1, axis2=3)
    return DensityMatrix(center)


def x_decay_closed_form(cfg: SpinClusterConfig, T: float) -> Optional[float]:
    """prod_j cos(2 w_j T) for a single center spin."""
    if cfg.m != 1:
        return None
    return float(np.prod(np.cos(2.0 * cfg.couplings[0] * T)))


def spin_cluster_entropy(
    cfg: SpinClusterConfig,
    J: Optional[Basis] = None,
    m: Optional[EntropyMeasure] = None,
    base: float = 2.0
) -> Tuple[float, float, float]:
    if cfg.m + cfg.n > MAX_SPINS:
        raise ModelException(ModelError.TOO_LARGE, f"{cfg.m + cfg.n} spins")
    m = m or EntropyMeasure.von_neumann()
    J = J or computational_basis(2 ** cfg.m)
    rho_c = _center_state(cfg, cfg.T)
    s_exact = quantum_entropy(rho_c, m, base)
    s_dephased = quantum_entropy(dephase(rho_c, J), m, base)
    x_decay = float(np.real(np.trace(_pauli_x_string(cfg.m) @ rho_c.entries)))
    return s_exact, s_dephased, x_decay


def spin_cluster_series(
    cfg: SpinClusterConfig,
    J: Optional[Basis] = None,
    T_list: Sequence[float] = (),
    m: Optional[EntropyMeasure] = None,
    base: float = 2.0
) -> List[Dict]:
    rows = []
    for T in T_list:
        s_exact, s_dephased, x_decay = spin_cluster_entropy(cfg.model_copy(update={"T": float(T)}), J, m, base)
        if s_dephased < s_exact - CONVERGENCE_TOLERANCE:
            logger.warning("Dephased center entropy {:.9f} below exact {:.9f} at T={}", s_dephased, s_exact, T)
        rows.append({
            "T": float(T),
            "entropy_exact": s_exact,
            "entropy_dephased": s_dephased,
            "x_decay": x_decay,
            "x_decay_closed_form": x_decay_closed_form(cfg, float(T))
        })
    logger.info("Spin cluster m={} n={}: {} time points", cfg.m, cfg.n, len(rows))
    return rows
