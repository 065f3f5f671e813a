"""
===============================================================================
    Module Name: Report Writer
    Description:  Serializes command results as JSON, CSV or YAML. Output is
                  byte-deterministic: keys keep insertion order and every float
                  is written with 17 significant digits, so identical inputs
                  and seeds give identical files.

    Created Date: 2024-10-01
    Last Updated: 2024-10-08
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        emit_report(result, OutputFormat.JSON, None)      # stdout
                  emit_report(rows, "csv", "curve.csv")

    Requirements: Python 3.10.12, PyYAML, numpy, loguru
===============================================================================
"""

import csv
import io
import json
import math
import sys
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml
from loguru import logger

from qcore import CatalyticEntropyError
from settings import OutputFormat


class ReportWriterError(Enum):
    IO_ERROR = ("W001", "Could not write the report")
    UNSUPPORTED_FORMAT = ("W002", "Unsupported output format")
    NOT_SERIALIZABLE = ("W003", "Result contains a value that cannot be serialized")


class ReportWriterException(CatalyticEntropyError):
    pass


def format_float(value: float) -> str:
    """17 significant digits with a decimal point in the mantissa; non-finite values become strings."""
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    mantissa, _, exponent = format(value, ".17g").partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return f"{mantissa}e{exponent}" if exponent else mantissa


def normalize(value: Any) -> Any:
    """Plain Python containers and scalars; numpy values and domain objects are converted."""
    if hasattr(value, "to_dict") and callable(value.to_dict):
        return normalize(value.to_dict())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, np.ndarray):
        return normalize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if value is None or isinstance(value, str):
        return value
    raise ReportWriterException(ReportWriterError.NOT_SERIALIZABLE, type(value).__name__)


def _json_text(value: Any, indent: int = 2, level: int = 0) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_json_text(v, indent, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(_json_text(v, indent, level + 1) for v in value) + "]"
        items = [pad + _json_text(v, indent, level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else json.dumps(format_float(value))
    return json.dumps(value, ensure_ascii=False)


def to_json(result: Any) -> str:
    return _json_text(normalize(result)) + "\n"


def _flatten(row: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in row.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            flat.update(_flatten(value, name))
        elif isinstance(value, list):
            flat[name] = _json_text(value, indent=0).replace("\n", "")
        else:
            flat[name] = value
    return flat


def _table_rows(result: Any) -> List[Dict[str, Any]]:
    if isinstance(result, list):
        return [r if isinstance(r, dict) else {"value": r} for r in result]
    if isinstance(result, dict) and isinstance(result.get("rows"), list):
        return result["rows"]
    return [result]


def to_csv(result: Any) -> str:
    rows = [_flatten(row) for row in _table_rows(normalize(result))]
    buffer = io.StringIO()
    if not rows:
        return ""
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format_float(v) if isinstance(v, float) else v for k, v in row.items()})
    return buffer.getvalue()


class FlowSequence(list):
    pass


def represent_flow_sequence(dumper, data):
    return dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=True)


def represent_float17(dumper, data):
    return dumper.represent_scalar("tag:yaml.org,2002:float", format_float(data).replace("Infinity", ".inf").replace("NaN", ".nan"))


class CustomDumper(yaml.SafeDumper):
    def ignore_aliases(self, data):
        return True


CustomDumper.add_representer(FlowSequence, represent_flow_sequence)
CustomDumper.add_representer(float, represent_float17)


def _flow_scalars(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _flow_scalars(v) for k, v in value.items()}
    if isinstance(value, list):
        if value and all(not isinstance(v, (dict, list)) for v in value):
            return FlowSequence(value)
        return [_flow_scalars(v) for v in value]
    return value


def to_yaml(result: Any) -> str:
    return yaml.dump(
        _flow_scalars(normalize(result)),
        Dumper=CustomDumper,
        default_flow_style=False,
        allow_unicode=True,
        sort_keys=False,
        width=4096
    )


RENDERERS = {
    OutputFormat.JSON: to_json,
    OutputFormat.CSV: to_csv,
    OutputFormat.YAML: to_yaml,
}


def render(result: Any, fmt: Union[OutputFormat, str]) -> str:
    try:
        renderer = RENDERERS[OutputFormat(fmt)]
    except ValueError:
        raise ReportWriterException(ReportWriterError.UNSUPPORTED_FORMAT, str(fmt))
    return renderer(result)


def emit_report(result: Any, fmt: Union[OutputFormat, str] = OutputFormat.JSON, destination: Optional[str] = None) -> str:
    text = render(result, fmt)
    if destination is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return text
    try:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        logger.error("Failed to write report to {}: {}", destination, e)
        raise ReportWriterException(ReportWriterError.IO_ERROR, {"path": destination, "reason": str(e)})
    logger.info("Report written to {}", destination)
    return text
