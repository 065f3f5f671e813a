"""
===============================================================================
    Module Name: Command Processor
    Description:  Runs one command end to end: validates the input documents
                  with InputValidator, calls the numerical modules and wraps
                  the outcome in a status record. Nothing escapes as an
                  exception; callers receive one of
                  - {"status": "success", "result": ...}
                  - {"status": "violation", "result": ...}  a checked inequality
                    or residual bound failed; the report is still complete
                  - {"status": "error", "error_code", "error_message", "details"}

    Created Date: 2024-10-01
    Last Updated: 2024-10-08
    Version:      1.0.2

    License:      GNU General Public License v3.0

    Usage:        processor = CommandProcessor(RunConfig(command="entropy"))
                  record = processor.entropy(matrix_text, "renyi:2")

    Requirements: Python 3.10.12, numpy, pydantic, loguru
===============================================================================
"""

from enum import Enum
from typing import Any, Callable, Dict, Optional, Sequence

import pydantic
from loguru import logger

from channels import ChannelError, computational_basis, dephase, haar_basis
from compression import CompressionError, rate_fidelity_curve
from entropy import quantum_entropy
from input_validator import InputValidator, ValidationError
from maxent import MaxEntProblem, brute_force_maxent, solve_maxent_full, solve_maxent_relaxed
from models import (
    CovarianceMatrix,
    SpinClusterConfig,
    beamsplitter_covariance,
    gaussian_entropy,
    spin_cluster_series,
    symplectic_eigenvalues,
    thermal_entropy_convergence,
)
from principles import (
    build_chain_network,
    sample_seeds,
    uncertainty_check,
    verify_joint_principles,
    verify_local_minimum,
)
from qcore import CatalyticEntropyError, DensityMatrix, spectrum
from settings import LogBase, RunConfig
from transitions import (
    TransitionError,
    TransitionException,
    approx_transition_truncated,
    compose_catalytic,
    construct_noisy_transition,
    majorizes,
    noisy_oracle,
    probabilistic_conversion,
    search_catalyst,
)


TRANSITION_MODES = ("noisy", "catalytic", "approx", "probabilistic")

# Domain errors that mean "a verified bound failed" rather than "bad input".
VIOLATION_ERRORS = {
    TransitionError.VERIFICATION_FAILED,
    ChannelError.VERIFICATION_FAILED,
    CompressionError.NOT_MONOTONE,
    TransitionError.CATALYST_NOT_FOUND,
}


class CommandProcessorError(Enum):
    INPUT_VALIDATION_FAILED = ("X001", "Input validation failed")
    BAD_OPTION = ("X002", "Invalid command option")
    UNKNOWN_ERROR = ("X003", "Unknown error")


class CommandProcessor:
    def __init__(self, config: RunConfig):
        self.config = config
        self.validator = InputValidator(config.tolerances)

    @property
    def base(self) -> float:
        return self.config.log_base

    def _base_label(self):
        return 2 if self.config.base == LogBase.BITS else "e"

    def _run(self, name: str, action: Callable[[], Dict[str, Any]]) -> Dict[str, Any]:
        try:
            logger.info("Running command '{}'.", name)
            record = action()
            logger.info("Command '{}' finished with status {}.", name, record["status"])
            return record

        except ValidationError as ve:
            logger.error("Validation failed. Errors: {}", ve.errors)
            return {
                "status": "error",
                "error_code": CommandProcessorError.INPUT_VALIDATION_FAILED.value[0],
                "error_message": CommandProcessorError.INPUT_VALIDATION_FAILED.value[1],
                "details": ve.errors
            }

        except pydantic.ValidationError as pe:
            logger.error("Option validation failed: {}", pe.errors())
            return {
                "status": "error",
                "error_code": CommandProcessorError.BAD_OPTION.value[0],
                "error_message": CommandProcessorError.BAD_OPTION.value[1],
                "details": [e["msg"] for e in pe.errors()]
            }

        except CatalyticEntropyError as ce:
            status = "violation" if ce.error in VIOLATION_ERRORS else "error"
            logger.error("Command '{}' raised {}: {}", name, ce.code, ce.message)
            return {
                "status": status,
                "error_code": ce.code,
                "error_message": ce.message,
                "details": ce.details
            }

        except Exception as e:
            logger.error("An unexpected error occurred: {}", str(e))
            return {
                "status": "error",
                "error_code": CommandProcessorError.UNKNOWN_ERROR.value[0],
                "error_message": CommandProcessorError.UNKNOWN_ERROR.value[1],
                "details": str(e)
            }

    @staticmethod
    def _record(result: Any, passed: bool = True) -> Dict[str, Any]:
        return {"status": "success" if passed else "violation", "result": result}

    def entropy(self, matrix_text: str, measure_text: str = "vn") -> Dict[str, Any]:
        def action():
            rho = self.validator.validate_matrix(matrix_text)
            m = self.validator.validate_measure(measure_text)
            return self._record({
                "value": quantum_entropy(rho, m, self.base, self.config.tolerances),
                "measure": str(m),
                "base": self._base_label()
            })
        return self._run("entropy", action)

    def dephase(self, matrix_text: str, basis_text: Optional[str] = None) -> Dict[str, Any]:
        def action():
            rho = self.validator.validate_matrix(matrix_text)
            J = self.validator.validate_basis(basis_text) if basis_text else computational_basis(rho.dim)
            return self._record(dephase(rho, J).to_dict())
        return self._run("dephase", action)

    def verify_principles(
        self,
        matrix_text: str,
        measure_text: str = "vn",
        samples: int = 500,
        uncertainty_samples: int = 0
    ) -> Dict[str, Any]:
        def action():
            rho = self.validator.validate_matrix(matrix_text)
            m = self.validator.validate_measure(measure_text)
            seed, tol = self.config.seed, self.config.tolerances
            local = verify_local_minimum(rho, m, samples, seed, self.base, tol)
            joint = verify_joint_principles(rho, m, samples, seed, self.base, tol)
            result = {"local_minimum": local.to_dict(), "joint_principles": joint.to_dict()}
            passed = local.passed and joint.passed

            if uncertainty_samples > 0:
                failures = []
                for pair_seed in sample_seeds(seed + 1, uncertainty_samples):
                    lhs, rhs, ok = uncertainty_check(rho, haar_basis(rho.dim, pair_seed), haar_basis(rho.dim, pair_seed + 1), m, self.base)
                    if not ok:
                        failures.append({"seed": pair_seed, "lhs": lhs, "rhs": rhs})
                result["uncertainty"] = {"n_samples": uncertainty_samples, "violations": failures}
                passed = passed and not failures
            return self._record(result, passed)
        return self._run("verify-principles", action)

    def network_chain(self, links_text: str, measure_text: str = "vn") -> Dict[str, Any]:
        def action():
            links = self.validator.validate_links(links_text)
            m = self.validator.validate_measure(measure_text)
            network, table = build_chain_network(links, m, self.base, self.config.tolerances)
            table["network"] = network.to_dict()
            return self._record(table)
        return self._run("network-chain", action)

    def maxent(self, problem_text: str, relaxed: bool = False, oracle: bool = False) -> Dict[str, Any]:
        def action():
            q, alpha, measure_text = self.validator.validate_maxent(problem_text)
            m = self.validator.validate_measure(measure_text)
            problem = MaxEntProblem(q, alpha, m)
            solver = solve_maxent_relaxed if relaxed else solve_maxent_full
            solution = solver(problem, base=self.base)
            result = {"problem": problem.to_dict(), "solution": solution.to_dict()}
            if oracle:
                reference = brute_force_maxent(problem, relaxed=relaxed, base=self.base)
                result["oracle"] = reference.to_dict()
                result["objective_gap"] = reference.objective - solution.objective
            return self._record(result, solution.converged)
        return self._run("maxent", action)

    def _catalytic_oracle(self, catalyst_dim: Optional[int], budget: int):
        def oracle(rho_c: DensityMatrix, rho_target: DensityMatrix):
            if majorizes(spectrum(rho_c), spectrum(rho_target)).holds:
                return noisy_oracle(rho_c, rho_target)
            found = search_catalyst(rho_c, rho_target, catalyst_dim or rho_c.dim, budget, self.config.seed)
            if found is None:
                raise TransitionException(
                    TransitionError.CATALYST_NOT_FOUND,
                    {"dim_catalyst": catalyst_dim or rho_c.dim, "budget": budget}
                )
            return found
        return oracle

    def transition(
        self,
        source_text: str,
        target_text: str,
        mode: str = "noisy",
        epsilon: float = 0.01,
        catalyst_dim: Optional[int] = None,
        budget: int = 2000,
        basis_text: Optional[str] = None,
        emit_unitary: bool = False
    ) -> Dict[str, Any]:
        def action():
            if mode not in TRANSITION_MODES:
                return {
                    "status": "error",
                    "error_code": CommandProcessorError.BAD_OPTION.value[0],
                    "error_message": CommandProcessorError.BAD_OPTION.value[1],
                    "details": f"mode '{mode}' not in {list(TRANSITION_MODES)}"
                }
            rho = self.validator.validate_matrix(source_text, "source")
            rho_target = self.validator.validate_matrix(target_text, "target")

            if mode == "noisy":
                plan = construct_noisy_transition(rho, rho_target)
            elif mode == "catalytic":
                J = self.validator.validate_basis(basis_text) if basis_text else computational_basis(rho.dim)
                plan = compose_catalytic(rho, J, rho_target, self._catalytic_oracle(catalyst_dim, budget))
            elif mode == "approx":
                plan = approx_transition_truncated(spectrum(rho).probs.tolist(), spectrum(rho_target).probs.tolist(), epsilon)
            else:
                plan = probabilistic_conversion(rho, rho_target)
            return self._record(plan.to_dict(emit_unitary=emit_unitary))
        return self._run("transition", action)

    def compress(
        self,
        matrix_text: str,
        basis_text: Optional[str],
        n_list: Sequence[int],
        rates: Sequence[float]
    ) -> Dict[str, Any]:
        def action():
            rho = self.validator.validate_matrix(matrix_text)
            J = self.validator.validate_basis(basis_text) if basis_text else computational_basis(rho.dim)
            return self._record({"rows": rate_fidelity_curve(rho, J, list(n_list), list(rates))})
        return self._run("compress", action)

    def models_thermal(self, nbar: float, N_list: Sequence[int], measure_text: str = "vn") -> Dict[str, Any]:
        def action():
            m = self.validator.validate_measure(measure_text)
            table = thermal_entropy_convergence(nbar, list(N_list), m, self.base)
            return self._record(table, table["monotone"])
        return self._run("models thermal", action)

    def models_gaussian(self, covariance_text: str, transmissivity: float) -> Dict[str, Any]:
        def action():
            cov_a = CovarianceMatrix(self.validator.validate_covariance(covariance_text))
            joint = beamsplitter_covariance(cov_a, transmissivity)
            output_a = joint.reduced(0)
            return self._record({
                "transmissivity": transmissivity,
                "input": {"symplectic_eigenvalues": symplectic_eigenvalues(cov_a), "entropy": gaussian_entropy(cov_a, self.base)},
                "output_a": {"symplectic_eigenvalues": symplectic_eigenvalues(output_a), "entropy": gaussian_entropy(output_a, self.base)},
                "joint": {"symplectic_eigenvalues": symplectic_eigenvalues(joint), "entropy": gaussian_entropy(joint, self.base)},
                "covariance": joint.to_dict()
            })
        return self._run("models gaussian", action)

    def models_spin(
        self,
        m: int,
        n: int,
        couplings_text: str,
        T_list: Sequence[float],
        measure_text: str = "vn",
        basis_text: Optional[str] = None
    ) -> Dict[str, Any]:
        def action():
            omega = self.validator.validate_couplings(couplings_text)
            measure = self.validator.validate_measure(measure_text)
            cfg = SpinClusterConfig(m=m, n=n, omega=omega)
            J = self.validator.validate_basis(basis_text) if basis_text else None
            rows = spin_cluster_series(cfg, J, list(T_list), measure, self.base)
            passed = all(row["entropy_dephased"] >= row["entropy_exact"] - 1e-9 for row in rows)
            return self._record({"m": m, "n": n, "rows": rows}, passed)
        return self._run("models spin", action)


def exit_code(record: Dict[str, Any]) -> int:
    return {"success": 0, "violation": 1}.get(record.get("status"), 2)


def report_body(record: Dict[str, Any]) -> Any:
    """What gets written: the result for success/violation records, the error record otherwise."""
    if "result" in record:
        return record["result"]
    return {k: v for k, v in record.items() if k != "status"}
