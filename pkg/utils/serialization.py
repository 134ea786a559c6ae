"""
Versioned JSON documents: instances, functions, transcripts, colorings, reports
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from utils.errors import SchemaError

FORMAT_VERSION = 1


def encode_real(value: float) -> str:
    """Decimal string with 17 significant digits; float(encode_real(v)) == v"""
    return format(float(value), ".17g")


def decode_real(value: Union[str, float, int]) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"expected a real number, got {value!r}") from e


def encode_vector(values: Sequence[float]) -> List[str]:
    return [encode_real(v) for v in values]


def decode_vector(values: Any) -> List[float]:
    if not isinstance(values, (list, tuple)):
        raise SchemaError(f"expected a list of reals, got {type(values).__name__}")
    return [decode_real(v) for v in values]


def dumps(document: Dict[str, Any]) -> str:
    """Canonical, byte-stable JSON text"""
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def fingerprint(document: Dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def with_format(document: Dict[str, Any]) -> Dict[str, Any]:
    return {"format": FORMAT_VERSION, **document}


def check_format(document: Any, expected_type: str = None) -> Dict[str, Any]:
    """Validate the envelope of a document and return it"""
    if not isinstance(document, dict):
        raise SchemaError("top-level JSON value must be an object")
    if document.get("format") != FORMAT_VERSION:
        raise SchemaError(f"unsupported format {document.get('format')!r}, expected {FORMAT_VERSION}")
    if expected_type is not None and document.get("type") != expected_type:
        raise SchemaError(f"expected a {expected_type!r} document, got {document.get('type')!r}")
    return document


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return check_format(json.load(f))
    except FileNotFoundError as e:
        raise SchemaError(f"no such file: {path}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}") from e


def write_json(document: Dict[str, Any], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(document))


def require(document: Dict[str, Any], key: str) -> Any:
    try:
        return document[key]
    except (KeyError, TypeError) as e:
        raise SchemaError(f"missing required field {key!r}") from e
