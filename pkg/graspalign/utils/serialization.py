"""
JSON helpers.
"""
import json
from datetime import date, datetime
from pathlib import Path
from typing import Any, Union

import numpy as np

from graspalign.core.errors import InputError


def make_json_serializable(data: Any) -> Any:
    """
    Recursively convert non-serializable values (numpy arrays and scalars, paths, datetimes)
    to JSON-serializable formats.
    """
    if isinstance(data, dict):
        return {str(k): make_json_serializable(v) for k, v in data.items()}
    elif isinstance(data, (list, tuple)):
        return [make_json_serializable(v) for v in data]
    elif isinstance(data, np.ndarray):
        return make_json_serializable(data.tolist())
    elif isinstance(data, np.bool_):
        return bool(data)
    elif isinstance(data, np.integer):
        return int(data)
    elif isinstance(data, np.floating):
        return float(data)
    elif isinstance(data, Path):
        return str(data)
    elif isinstance(data, (datetime, date)):
        return data.isoformat()
    elif hasattr(data, "to_json"):
        return make_json_serializable(data.to_json())
    return data


def write_json(path: Union[str, Path], data: Any) -> Path:
    """Write `data` as indented, key-sorted JSON so identical inputs give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(make_json_serializable(data), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as e:
        raise InputError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from e


def fmt(value: float) -> str:
    """Six significant digits, the precision used for everything printed."""
    return f"{value:.6g}"
