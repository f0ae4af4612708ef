"""
Pydantic schema for command-line run configuration.

Values come from an optional JSON file given with --config; explicit flags are
applied on top. Unknown keys are rejected.
"""

from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from graspalign.core.config import CoordAlignOptions, GlobalAlignOptions, IKOptions, RegressorOptions
from graspalign.core.errors import InputError
from graspalign.utils.serialization import read_json


class RunConfig(BaseModel):
    """Schema for the options every sub-command draws from."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    threads: int = Field(default=1, ge=1)
    log_level: Optional[Literal["error", "info", "debug"]] = None
    global_align: GlobalAlignOptions = Field(default_factory=GlobalAlignOptions)
    coord_align: CoordAlignOptions = Field(default_factory=CoordAlignOptions)
    ik: IKOptions = Field(default_factory=IKOptions)
    regressor: RegressorOptions = Field(default_factory=RegressorOptions)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """
        Merge file values and flag overrides.

        Args:
            path: Optional JSON config file
            overrides: Nested dict of flag values; None entries are skipped

        Returns:
            Validated RunConfig
        """
        data: Dict[str, Any] = {}
        if path is not None:
            loaded = read_json(path)
            if not isinstance(loaded, dict):
                raise InputError(f"{path}: config must be a JSON object")
            data = loaded
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if isinstance(value, dict):
                section = dict(data.get(key) or {})
                section.update({k: v for k, v in value.items() if v is not None})
                data[key] = section
            else:
                data[key] = value
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid configuration: {e}") from e
