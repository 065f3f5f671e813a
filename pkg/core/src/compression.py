"""
===============================================================================
    Module Name: Compression
    Description:  Typical sets and typical-subspace compression statistics for
                  i.i.d. sources over small alphabets. Sequences are never
                  listed one by one: every quantity is summed over type classes
                  (occupation vectors), whose members share one probability.

    Created Date: 2024-09-27
    Last Updated: 2024-10-06
    Version:      1.0.0

    License:      GNU General Public License v3.0

    Usage:        ts = typical_set([0.9, 0.1], n=16, epsilon=0.2)
                  report = typical_subspace_fidelity(rho_c, n=16, rate=0.7)
                  rows = rate_fidelity_curve(rho, J, [8, 16], [0.3, 0.7])

    Requirements: Python 3.10.12, numpy, loguru

    Notes:        Alphabets up to 4 symbols and block lengths up to 64.
===============================================================================
"""

import itertools
import math
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from channels import dephase
from qcore import Basis, CatalyticEntropyError, DensityMatrix, Distribution, eigenbasis


MAX_ALPHABET = 4
MAX_BLOCK_LENGTH = 64
TIE_DECIMALS = 12

Occupation = Tuple[int, ...]


class CompressionError(Enum):
    TOO_LARGE = ("R001", "Alphabet or block length exceeds the enumeration cap")
    BAD_INPUT = ("R002", "Invalid compression parameter")
    NOT_MONOTONE = ("R003", "Fidelity decreased with increasing rate")


class CompressionException(CatalyticEntropyError):
    pass


def _check_size(alphabet: int, n: int):
    if n < 1:
        raise CompressionException(CompressionError.BAD_INPUT, f"block length {n}")
    if alphabet > MAX_ALPHABET or n > MAX_BLOCK_LENGTH:
        logger.error("Type-class enumeration too large: alphabet {} block {}", alphabet, n)
        raise CompressionException(CompressionError.TOO_LARGE, {"alphabet": alphabet, "n": n})


def occupations(n: int, alphabet: int) -> Iterator[Occupation]:
    """All occupation vectors (k_1, ..., k_a) with sum n, in lexicographic order."""
    for bars in itertools.combinations(range(n + alphabet - 1), alphabet - 1):
        edges = (-1,) + bars + (n + alphabet - 1,)
        yield tuple(edges[i + 1] - edges[i] - 1 for i in range(alphabet))


def multiplicity(counts: Occupation) -> int:
    total, remaining = 1, sum(counts)
    for k in counts:
        total *= math.comb(remaining, k)
        remaining -= k
    return total


def sequence_log2_probability(counts: Occupation, probs: Sequence[float]) -> float:
    value = 0.0
    for k, p in zip(counts, probs):
        if k == 0:
            continue
        if p <= 0.0:
            return -math.inf
        value += k * math.log2(p)
    return value


def shannon_bits(probs: Sequence[float]) -> float:
    return float(-sum(p * math.log2(p) for p in probs if p > 0.0))


def _log2_int(value: int) -> float:
    return math.log2(value) if value > 0 else -math.inf


class TypicalSet:
    def __init__(
        self,
        n: int,
        alphabet: int,
        epsilon: float,
        base_dist: Optional[Distribution],
        entropy: float,
        members: List[Occupation],
        kind: str = "typical"
    ):
        self.n = n
        self.alphabet = alphabet
        self.epsilon = epsilon
        self.base_dist = base_dist
        self.entropy = entropy
        self.members = members
        self.kind = kind
        self._member_set = set(members)

        size = sum(multiplicity(c) for c in members)
        self.log2_size = _log2_int(size)
        if base_dist is None:
            self.total_probability = None
        else:
            self.total_probability = float(sum(
                multiplicity(c) * 2.0 ** sequence_log2_probability(c, base_dist.probs) for c in members
            ))

    def contains(self, counts: Occupation) -> bool:
        return tuple(counts) in self._member_set

    @property
    def size_bound(self) -> float:
        """n(H + eps) plus the type-counting slack (a - 1) log2(n + 1)."""
        return self.n * (self.entropy + self.epsilon) + (self.alphabet - 1) * math.log2(self.n + 1)

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "epsilon": self.epsilon,
            "entropy": self.entropy,
            "type_classes": len(self.members),
            "log2_size": self.log2_size,
            "size_bound": self.size_bound,
            "total_probability": self.total_probability
        }


def typical_set(p: Union[Distribution, Sequence[float]], n: int, epsilon: float) -> TypicalSet:
    dist = p if isinstance(p, Distribution) else Distribution(p)
    alphabet = len(dist)
    _check_size(alphabet, n)
    if epsilon <= 0.0:
        raise CompressionException(CompressionError.BAD_INPUT, f"epsilon {epsilon}")

    h = shannon_bits(dist.probs)
    members = []
    for counts in occupations(n, alphabet):
        log_p = sequence_log2_probability(counts, dist.probs)
        if log_p == -math.inf:
            continue
        rate = -log_p / n
        if h - epsilon - 1e-12 <= rate <= h + epsilon + 1e-12:
            members.append(counts)
    logger.debug("Typical set n={} eps={}: {} of the type classes qualify", n, epsilon, len(members))
    return TypicalSet(n, alphabet, epsilon, dist, h, members)


def universal_typical_set(
    alphabet: int,
    n: int,
    entropy: float,
    delta: float,
    p: Optional[Union[Distribution, Sequence[float]]] = None
) -> TypicalSet:
    """Type classes whose empirical entropy is at most entropy + delta, for any source on the alphabet."""
    _check_size(alphabet, n)
    dist = None if p is None else (p if isinstance(p, Distribution) else Distribution(p))
    members = [
        counts for counts in occupations(n, alphabet)
        if shannon_bits([k / n for k in counts]) <= entropy + delta + 1e-12
    ]
    return TypicalSet(n, alphabet, delta, dist, entropy, members, kind="universal")


class SubspaceReport:
    def __init__(
        self,
        n: int,
        rate: float,
        fidelity: float,
        kept_dimension_log2: float,
        entropy: float,
        frame: Basis,
        kept: List[Tuple[Occupation, int]]
    ):
        self.n = n
        self.rate = rate
        self.fidelity = fidelity
        self.kept_dimension_log2 = kept_dimension_log2
        self.entropy = entropy
        self.frame = frame
        self.kept = kept

    @property
    def alphabet(self) -> int:
        return len(self.kept[0][0]) if self.kept else 0

    def to_dict(self):
        return {
            "n": self.n,
            "rate": self.rate,
            "fidelity": self.fidelity,
            "log2dim": self.kept_dimension_log2
        }


def _greedy_projector(probs: np.ndarray, n: int, rate: float) -> Tuple[List[Tuple[Occupation, int]], float, int]:
    alphabet = probs.size
    classes = []
    for counts in occupations(n, alphabet):
        log_p = sequence_log2_probability(counts, probs)
        classes.append((-round(log_p, TIE_DECIMALS), counts, log_p))
    classes.sort(key=lambda item: (item[0], item[1]))

    budget = min(2 ** int(math.floor(n * rate + 1e-12)), alphabet ** n)
    kept, fidelity, kept_count = [], 0.0, 0
    for _, counts, log_p in classes:
        if kept_count >= budget:
            break
        take = min(multiplicity(counts), budget - kept_count)
        kept.append((counts, take))
        kept_count += take
        fidelity += take * 2.0 ** log_p
    return kept, fidelity, kept_count


def typical_subspace_fidelity(rho_c: DensityMatrix, n: int, rate: float) -> SubspaceReport:
    """
    Keep the 2^floor(nR) most probable eigenvectors of rho_c^{(x)n}, filling whole
    type classes first and then part of the next one. Equal-probability classes
    are taken in lexicographic order of their occupation vectors.
    """
    if rate < 0.0:
        raise CompressionException(CompressionError.BAD_INPUT, f"rate {rate}")
    values, frame = eigenbasis(rho_c)
    alphabet = max(1, values.support(1e-15))
    _check_size(alphabet, n)
    probs = values.probs[:alphabet] / values.probs[:alphabet].sum()

    kept, fidelity, kept_count = _greedy_projector(probs, n, rate)
    report = SubspaceReport(
        n=n,
        rate=rate,
        fidelity=min(1.0, fidelity),
        kept_dimension_log2=_log2_int(kept_count),
        entropy=shannon_bits(probs),
        frame=frame,
        kept=kept
    )
    logger.debug("Subspace n={} R={}: fidelity {:.12f}, kept 2^{:.3f}", n, rate, report.fidelity, report.kept_dimension_log2)
    return report


def subspace_fidelity_for(report: SubspaceReport, rho_other: DensityMatrix) -> float:
    """tr[P rho_other^{(x)n}] for the projector P recorded in `report`."""
    if rho_other.dim != report.frame.dim:
        raise CompressionException(CompressionError.BAD_INPUT, f"dim {rho_other.dim} vs {report.frame.dim}")
    frame = report.frame.columns
    weights = np.real(np.einsum("ki,kl,li->i", frame.conj(), rho_other.entries, frame))[:report.alphabet]
    weights = np.clip(weights, 0.0, None)
    return float(sum(take * 2.0 ** sequence_log2_probability(counts, weights) for counts, take in report.kept))


def rate_fidelity_curve(
    rho: DensityMatrix,
    J: Basis,
    n_list: Sequence[int],
    rate_list: Sequence[float]
) -> List[Dict[str, float]]:
    rho_c = dephase(rho, J)
    rows = []
    for n in n_list:
        previous = -1.0
        for rate in sorted(rate_list):
            report = typical_subspace_fidelity(rho_c, int(n), float(rate))
            if report.fidelity < previous - 1e-12:
                logger.error("Fidelity fell from {:.12f} to {:.12f} at n={} R={}", previous, report.fidelity, n, rate)
                raise CompressionException(CompressionError.NOT_MONOTONE, {"n": n, "rate": rate})
            previous = report.fidelity
            rows.append(report.to_dict())
    logger.info("Rate-fidelity curve: {} rows over n={}", len(rows), list(n_list))
    return rows
