"""
===============================================================================
    Module Name: Principles
    Description:  Empirical verifiers for the dephasing entropy principles:
                  the local minimum over observation frames, the joint
                  minimum and cross-entropy maximum over product frames on a
                  purification, the entropic uncertainty relation, the
                  Araki-Lieb inequality and the entropy table of chain
                  networks of bipartite pure links, where joint entropies
                  fall below single-node entropies.

                  Optima are certified constructively at the eigen / Schmidt
                  frames; Haar-sampled frames try to falsify the inequality.

    Created Date: 2024-09-18
    Last Updated: 2024-10-03
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        report = verify_local_minimum(rho, parse_measure("vn"), 500, 7)
                  report.violations        # [] when the principle holds
                  network, table = build_chain_network([[0.5, 0.5], [0.5, 0.5]])

    Requirements: Python 3.10.12, numpy, loguru
===============================================================================
"""

from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from channels import haar_basis, measurement_distribution
from entropy import (
    EntropyMeasure,
    MeasureKind,
    classical_entropy,
    joint_entropy,
    joint_from_state,
    mutual_information,
    quantum_entropy,
)
from qcore import (
    Basis,
    CatalyticEntropyError,
    DensityMatrix,
    Distribution,
    check_dense_dim,
    eigenbasis,
    partial_trace,
    partial_trace_array,
    purify,
)
from settings import DEFAULT_TOLERANCES, Tolerances


PRINCIPLE_TOLERANCE = 1e-9
STRICT_GAP = 1e-12


class PrincipleError(Enum):
    DIMENSION_MISMATCH = ("P001", "Dimension mismatch")
    BAD_INPUT = ("P002", "Invalid chain network input")
    INCOMPATIBLE_REPORTS = ("P003", "Reports describe different runs")


class PrincipleException(CatalyticEntropyError):
    pass


def sample_seeds(rng_seed: int, n_samples: int) -> List[int]:
    """Per-sample seeds; a violation can be replayed with haar_basis(d, seed)."""
    state = np.random.SeedSequence(rng_seed).generate_state(n_samples)
    return [int(s) for s in state]


class PrincipleReport:
    def __init__(self, check: str, measure: EntropyMeasure, s_rho: float, n_samples: int):
        self.check = check
        self.measure = measure
        self.s_rho = s_rho
        self.sampled_min: Optional[float] = None
        self.sampled_max_cross: Optional[float] = None
        self.sampled_max_cross_normalized: Optional[float] = None
        self.achieved_at_eigenbasis = False
        self.n_samples = n_samples
        self.violations: List[Dict] = []

    def observe_min(self, value: float):
        self.sampled_min = value if self.sampled_min is None else min(self.sampled_min, value)

    def observe_cross(self, value: float, normalized: Optional[float] = None):
        self.sampled_max_cross = value if self.sampled_max_cross is None else max(self.sampled_max_cross, value)
        if normalized is not None:
            current = self.sampled_max_cross_normalized
            self.sampled_max_cross_normalized = normalized if current is None else max(current, normalized)

    def add_violation(self, seed: int, value: float, bound: str):
        self.violations.append({"seed": seed, "value": value, "bound": bound})

    @property
    def passed(self) -> bool:
        return self.achieved_at_eigenbasis and not self.violations

    def to_dict(self):
        data = {
            "check": self.check,
            "measure": self.measure.to_dict(),
            "s_rho": self.s_rho,
            "sampled_min": self.sampled_min,
            "sampled_max_cross": self.sampled_max_cross,
            "achieved_at_eigenbasis": self.achieved_at_eigenbasis,
            "n_samples": self.n_samples,
            "passed": self.passed,
            "violations": self.violations
        }
        if self.sampled_max_cross_normalized is not None:
            data["sampled_max_cross_normalized"] = self.sampled_max_cross_normalized
        return data


def merge_reports(first: PrincipleReport, second: PrincipleReport) -> PrincipleReport:
    if first.check != second.check or str(first.measure) != str(second.measure) \
            or abs(first.s_rho - second.s_rho) > PRINCIPLE_TOLERANCE:
        raise PrincipleException(PrincipleError.INCOMPATIBLE_REPORTS, f"{first.check}/{second.check}")

    merged = PrincipleReport(first.check, first.measure, first.s_rho, first.n_samples + second.n_samples)
    for report in (first, second):
        if report.sampled_min is not None:
            merged.observe_min(report.sampled_min)
        if report.sampled_max_cross is not None:
            merged.observe_cross(report.sampled_max_cross, report.sampled_max_cross_normalized)
    merged.achieved_at_eigenbasis = first.achieved_at_eigenbasis and second.achieved_at_eigenbasis
    merged.violations = sorted(first.violations + second.violations, key=lambda v: (v["seed"], v["bound"]))
    return merged


def dephased_entropy(rho: DensityMatrix, J: Basis, m: EntropyMeasure, base: float = 2.0) -> float:
    return classical_entropy(measurement_distribution(rho, J), m, base)


def verify_local_minimum(
    rho: DensityMatrix,
    m: EntropyMeasure,
    n_samples: int = 500,
    rng_seed: int = 0,
    base: float = 2.0,
    tol: Tolerances = DEFAULT_TOLERANCES
) -> PrincipleReport:
    s_rho = quantum_entropy(rho, m, base, tol)
    report = PrincipleReport("local_minimum", m, s_rho, n_samples)

    _, frame = eigenbasis(rho, tol)
    at_eigenbasis = dephased_entropy(rho, frame, m, base)
    report.achieved_at_eigenbasis = abs(at_eigenbasis - s_rho) <= PRINCIPLE_TOLERANCE
    report.observe_min(at_eigenbasis)

    for seed in sample_seeds(rng_seed, n_samples):
        value = dephased_entropy(rho, haar_basis(rho.dim, seed), m, base)
        report.observe_min(value)
        if value < s_rho - PRINCIPLE_TOLERANCE:
            report.add_violation(seed, value, "dephased_entropy >= S(rho)")

    logger.info("Local minimum check ({}): S={:.12g}, sampled min={:.12g}, violations={}",
                m, s_rho, report.sampled_min, len(report.violations))
    return report


def observed_cross_entropy(
    phi: DensityMatrix,
    dims: Tuple[int, int],
    basis_a: Basis,
    basis_b: Basis,
    m: EntropyMeasure,
    base: float = 2.0
) -> Tuple[float, float, Optional[float]]:
    """(joint entropy, subtraction-form cross entropy, normalized Tsallis form or None)."""
    table = joint_from_state(phi, dims, basis_a, basis_b)
    joint = joint_entropy(table, m, base)
    cross = mutual_information(table, m, base, tsallis_form="subtraction")
    normalized = mutual_information(table, m, base, tsallis_form="normalized") \
        if m.kind == MeasureKind.TSALLIS else None
    return joint, cross, normalized


def verify_joint_principles(
    rho: DensityMatrix,
    m: EntropyMeasure,
    n_samples: int = 500,
    rng_seed: int = 0,
    base: float = 2.0,
    tol: Tolerances = DEFAULT_TOLERANCES
) -> PrincipleReport:
    s_rho = quantum_entropy(rho, m, base, tol)
    report = PrincipleReport("joint_principles", m, s_rho, n_samples)

    purification = purify(rho, tol)
    phi = purification.density()
    dims = (purification.dim_a, purification.dim_b)

    joint, cross, normalized = observed_cross_entropy(
        phi, dims, purification.basis_a, purification.basis_b, m, base
    )
    report.achieved_at_eigenbasis = abs(joint - s_rho) <= PRINCIPLE_TOLERANCE \
        and abs(cross - s_rho) <= PRINCIPLE_TOLERANCE
    report.observe_min(joint)
    report.observe_cross(cross, normalized)

    for seed in sample_seeds(rng_seed, n_samples):
        rng = np.random.default_rng(seed)
        basis_a = haar_basis(dims[0], rng)
        basis_b = haar_basis(dims[1], rng)
        joint, cross, normalized = observed_cross_entropy(phi, dims, basis_a, basis_b, m, base)
        report.observe_min(joint)
        report.observe_cross(cross, normalized)
        if joint < s_rho - PRINCIPLE_TOLERANCE:
            report.add_violation(seed, joint, "joint_entropy >= S(rho)")
        if cross > s_rho + PRINCIPLE_TOLERANCE:
            report.add_violation(seed, cross, "cross_entropy <= S(rho)")

    if report.violations:
        logger.warning("Joint principle check ({}) recorded {} violations", m, len(report.violations))
    logger.info("Joint principle check ({}): S={:.12g}, min joint={:.12g}, max cross={:.12g}",
                m, s_rho, report.sampled_min, report.sampled_max_cross)
    return report


def uncertainty_check(
    rho: DensityMatrix,
    J1: Basis,
    J2: Basis,
    m: EntropyMeasure,
    base: float = 2.0
) -> Tuple[float, float, bool]:
    if J1.dim != rho.dim or J2.dim != rho.dim:
        raise PrincipleException(PrincipleError.DIMENSION_MISMATCH, f"state {rho.dim}, bases {J1.dim}/{J2.dim}")
    lhs = dephased_entropy(rho, J1, m, base) + dephased_entropy(rho, J2, m, base)
    rhs = 2.0 * quantum_entropy(rho, m, base)
    return lhs, rhs, lhs >= rhs - PRINCIPLE_TOLERANCE


def araki_lieb_check(rho_ab: DensityMatrix, dims: Tuple[int, int], base: float = 2.0) -> Tuple[float, float, bool]:
    if rho_ab.dim != dims[0] * dims[1]:
        raise PrincipleException(PrincipleError.DIMENSION_MISMATCH, f"dim {rho_ab.dim} vs {dims}")
    vn = EntropyMeasure.von_neumann()
    s_ab = quantum_entropy(rho_ab, vn, base)
    s_a = quantum_entropy(partial_trace(rho_ab, dims, "a"), vn, base)
    s_b = quantum_entropy(partial_trace(rho_ab, dims, "b"), vn, base)
    lhs, rhs = s_ab, abs(s_a - s_b)
    return lhs, rhs, lhs >= rhs - PRINCIPLE_TOLERANCE


class ChainNetwork:
    """Nodes 0..n; link k is a bipartite pure state shared by node k and node k+1."""

    def __init__(self, links: List[Distribution]):
        self.links = links

    @property
    def node_count(self) -> int:
        return len(self.links) + 1

    @property
    def node_dims(self) -> List[int]:
        widths = [len(link) for link in self.links]
        dims = [widths[0]]
        dims += [widths[k - 1] * widths[k] for k in range(1, len(widths))]
        dims.append(widths[-1])
        return dims

    def cut_links(self, nodes: Sequence[int]) -> List[int]:
        members = set(nodes)
        return [k for k in range(len(self.links)) if (k in members) != (k + 1 in members)]

    def marginal_spectrum(self, nodes: Sequence[int]) -> Distribution:
        """Links with one end inside contribute their Schmidt spectrum; the rest are pure."""
        probs = np.ones(1)
        for k in self.cut_links(nodes):
            probs = np.kron(probs, self.links[k].probs)
        return Distribution(probs)

    def entropy(self, nodes: Sequence[int], m: EntropyMeasure, base: float = 2.0) -> float:
        return classical_entropy(self.marginal_spectrum(nodes), m, base)

    def to_dict(self):
        return {
            "node_count": self.node_count,
            "node_dims": self.node_dims,
            "links": [link.to_dict() for link in self.links]
        }


def _node_label(nodes: Sequence[int]) -> str:
    return "".join(f"a{k + 1}" for k in sorted(nodes))


def build_chain_network(
    links: Sequence[Sequence[float]],
    m: Optional[EntropyMeasure] = None,
    base: float = 2.0,
    tol: Tolerances = DEFAULT_TOLERANCES
) -> Tuple[ChainNetwork, Dict]:
    if len(links) < 2:
        raise PrincipleException(PrincipleError.BAD_INPUT, f"need at least 2 links, got {len(links)}")
    try:
        schmidt = [link if isinstance(link, Distribution) else Distribution(link, tol) for link in links]
    except CatalyticEntropyError as e:
        logger.error("Invalid Schmidt data: {}", e)
        raise PrincipleException(PrincipleError.BAD_INPUT, e.details)

    m = m or EntropyMeasure.von_neumann()
    network = ChainNetwork(schmidt)
    n = network.node_count

    singles = {k: network.entropy([k], m, base) for k in range(n)}
    marginals = {}
    violations = []
    for omitted in range(n):
        nodes = [k for k in range(n) if k != omitted]
        value = network.entropy(nodes, m, base)
        marginals[_node_label(nodes)] = value
        for k in nodes:
            if value < singles[k] - STRICT_GAP:
                violations.append({
                    "joint": _node_label(nodes),
                    "node": _node_label([k]),
                    "joint_entropy": value,
                    "node_entropy": singles[k]
                })

    table = {
        "measure": m.to_dict(),
        "nodes": {_node_label([k]): v for k, v in singles.items()},
        "marginals": marginals,
        "violations": violations
    }
    logger.info("Chain network with {} nodes: {} Shannon-bound violations", n, len(violations))
    return network, table


def chain_state_vector(network: ChainNetwork) -> np.ndarray:
    """Full pure state; qudit order a1, (a2 left, a2 right), ..., matching node_dims."""
    total = int(np.prod(network.node_dims))
    check_dense_dim(total, "chain state vector")
    vector = np.ones(1, dtype=complex)
    for link in network.links:
        width = len(link)
        pair = np.zeros(width * width, dtype=complex)
        for i, weight in enumerate(link.probs):
            pair[i * width + i] = np.sqrt(weight)
        vector = np.kron(vector, pair)
    return vector


def chain_marginal_entropy_dense(
    network: ChainNetwork,
    nodes: Sequence[int],
    m: EntropyMeasure,
    base: float = 2.0
) -> float:
    """Brute-force entropy of a node subset from the full chain state."""
    vector = chain_state_vector(network)
    check_dense_dim(vector.size, "chain density matrix")
    reduced = partial_trace_array(np.outer(vector, vector.conj()), network.node_dims, list(nodes))
    return quantum_entropy(DensityMatrix(reduced), m, base)
