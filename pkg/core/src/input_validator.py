"""
===============================================================================
    Module Name: Input Validator
    Description:  Validates the JSON documents accepted on the command line:
                  density matrices and bases ({"dim", "re", "im"}), maximum-
                  entropy problems ({"q", "alpha", "measure"}), chain links,
                  covariance matrices and spin couplings. Every problem found
                  is collected with its code before a single ValidationError
                  is raised, so one run reports all defects of a document.

    Created Date: 2024-10-01
    Last Updated: 2024-10-07
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        validator = InputValidator(tolerances)
                  rho = validator.validate_matrix(text)
                  J = validator.validate_basis(text)

    Requirements: Python 3.10.12, numpy, loguru
===============================================================================
"""

import json
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from entropy import parse_measure
from qcore import Basis, CatalyticEntropyError, DensityMatrix, validate_density
from settings import DEFAULT_TOLERANCES, Tolerances


class InputValidationError(Enum):
    INVALID_JSON = ("V001", "Document is not valid JSON")
    MISSING_FIELD = ("V002", "Missing required field")
    INVALID_TYPE = ("V003", "Field has the wrong type")
    NOT_NUMERIC = ("V004", "Matrix entries must be finite numbers")
    BAD_SHAPE = ("V005", "Matrix rows have inconsistent lengths")
    DIM_MISMATCH = ("V006", "Declared dim does not match the matrix")
    INVALID_STATE = ("V007", "Matrix is not a valid density matrix")
    INVALID_BASIS = ("V008", "Columns do not form an orthonormal basis")
    INVALID_MEASURE = ("V009", "Unknown entropy measure")
    EMPTY_DOCUMENT = ("V010", "Document is empty")


class ValidationError(Exception):
    def __init__(self, errors):
        self.errors = errors
        super().__init__("Validation error occurred")

    def __str__(self):
        return f"ValidationError: {self.errors}"


class InputValidator:
    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.tolerances = tolerances
        self.errors = []

    def _load(self, content: str, what: str) -> Any:
        self.errors = []
        if content is None or not content.strip():
            self.add_error(InputValidationError.EMPTY_DOCUMENT, what)
            raise ValidationError(self.errors)
        try:
            return json.loads(content)
        except json.JSONDecodeError as e:
            logger.error("JSON format error in {}: {}", what, str(e))
            raise ValidationError([{
                "code": InputValidationError.INVALID_JSON.value[0],
                "message": f"{InputValidationError.INVALID_JSON.value[1]}: {str(e)}",
                "details": [what]
            }])

    def _finish(self, what: str):
        if self.errors:
            logger.error("Validation of {} failed with errors: {}", what, self.errors)
            raise ValidationError(self.errors)
        logger.debug("Validation of {} passed.", what)

    def _real_table(self, rows: Any, field: str, what: str) -> Optional[np.ndarray]:
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            self.add_error(InputValidationError.INVALID_TYPE, what, field, "list of rows")
            return None
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            self.add_error(InputValidationError.BAD_SHAPE, what, field)
            return None
        try:
            table = np.array(rows, dtype=float)
        except (TypeError, ValueError):
            self.add_error(InputValidationError.NOT_NUMERIC, what, field)
            return None
        if not np.all(np.isfinite(table)):
            self.add_error(InputValidationError.NOT_NUMERIC, what, field)
            return None
        return table

    def _complex_matrix(self, data: Any, what: str) -> Optional[np.ndarray]:
        if not isinstance(data, dict):
            self.add_error(InputValidationError.INVALID_TYPE, what, "document", "object with re/im")
            return None
        if "re" not in data:
            self.add_error(InputValidationError.MISSING_FIELD, what, "re")
            return None

        real = self._real_table(data["re"], "re", what)
        imag = self._real_table(data["im"], "im", what) if data.get("im") is not None else None
        if real is None or (data.get("im") is not None and imag is None):
            return None
        if imag is not None and imag.shape != real.shape:
            self.add_error(InputValidationError.BAD_SHAPE, what, "im")
            return None

        matrix = real + 1j * imag if imag is not None else real.astype(complex)
        if "dim" in data and data["dim"] != matrix.shape[0]:
            self.add_error(InputValidationError.DIM_MISMATCH, what, data["dim"], matrix.shape[0])
            return None
        return matrix

    def validate_matrix(self, content: str, what: str = "state") -> DensityMatrix:
        data = self._load(content, what)
        matrix = self._complex_matrix(data, what)
        rho = None
        if matrix is not None:
            try:
                rho = validate_density(matrix, self.tolerances)
            except CatalyticEntropyError as e:
                self.add_error(InputValidationError.INVALID_STATE, what, e.code, e.message, e.details)
        self._finish(what)
        return rho

    def validate_basis(self, content: str, what: str = "basis") -> Basis:
        data = self._load(content, what)
        matrix = self._complex_matrix(data, what)
        basis = None
        if matrix is not None:
            try:
                basis = Basis(matrix, self.tolerances)
            except CatalyticEntropyError as e:
                self.add_error(InputValidationError.INVALID_BASIS, what, e.code, e.message, e.details)
        self._finish(what)
        return basis

    def validate_measure(self, text: str):
        self.errors = []
        try:
            return parse_measure(text)
        except CatalyticEntropyError as e:
            self.add_error(InputValidationError.INVALID_MEASURE, text, e.details)
            raise ValidationError(self.errors)

    def validate_maxent(self, content: str, what: str = "maxent problem") -> Tuple[np.ndarray, np.ndarray, str]:
        data = self._load(content, what)
        if not isinstance(data, dict):
            self.add_error(InputValidationError.INVALID_TYPE, what, "document", "object")
            self._finish(what)
        for field in ("q", "alpha"):
            if field not in data:
                self.add_error(InputValidationError.MISSING_FIELD, what, field)

        q = None
        if isinstance(data.get("q"), list):
            q_table = self._real_table([data["q"]], "q", what)
            q = None if q_table is None else q_table[0]
        elif "q" in data:
            self.add_error(InputValidationError.INVALID_TYPE, what, "q", "list of numbers")
        alpha = self._real_table(data.get("alpha"), "alpha", what) if "alpha" in data else None

        measure = data.get("measure", "vn")
        if not isinstance(measure, str):
            self.add_error(InputValidationError.INVALID_TYPE, what, "measure", "string")
        self._finish(what)
        return q, alpha, measure

    def validate_links(self, content: str, what: str = "chain links") -> List[List[float]]:
        data = self._load(content, what)
        if isinstance(data, dict):
            data = data.get("links")
        if not isinstance(data, list) or not all(isinstance(link, list) and link for link in data):
            self.add_error(InputValidationError.INVALID_TYPE, what, "links", "list of Schmidt arrays")
        else:
            for index, link in enumerate(data):
                if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in link):
                    self.add_error(InputValidationError.NOT_NUMERIC, what, f"links[{index}]")
        self._finish(what)
        return [[float(x) for x in link] for link in data]

    def validate_covariance(self, content: str, what: str = "covariance") -> np.ndarray:
        data = self._load(content, what)
        if isinstance(data, dict):
            if "matrix" not in data:
                self.add_error(InputValidationError.MISSING_FIELD, what, "matrix")
                self._finish(what)
            data = data["matrix"]
        table = self._real_table(data, "matrix", what)
        self._finish(what)
        return table

    def validate_couplings(self, content: str, what: str = "couplings") -> List[List[float]]:
        data = self._load(content, what)
        if isinstance(data, dict):
            data = data.get("omega")
        table = self._real_table(data, "omega", what)
        self._finish(what)
        return table.tolist()

    def add_error(self, error_type: InputValidationError, *args):
        error: Dict[str, Any] = {
            "code": error_type.value[0],
            "message": error_type.value[1],
        }
        if args:
            error.update({"details": list(args)})
        logger.error("Validation error: {}", error)
        self.errors.append(error)

    def get_errors(self):
        return self.errors
