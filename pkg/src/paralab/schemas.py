"""Pydantic request/response models for the HTTP service."""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """Mirror of the INI config: section name to key/value map."""
    scene: Dict[str, Any] = Field(default_factory=dict)
    multiplier: Dict[str, Any] = Field(default_factory=dict)
    quadrature: Dict[str, Any] = Field(default_factory=dict)
    experiment: Dict[str, Any]
    params: Dict[str, Any] = Field(default_factory=dict)
    output: Dict[str, Any] = Field(default_factory=dict)

    def as_config_dict(self):
        return {
            "scene": {k: str(v) for k, v in self.scene.items()},
            "multiplier": {k: str(v) for k, v in self.multiplier.items()},
            "quadrature": {k: str(v) for k, v in self.quadrature.items()},
            "experiment": {k: str(v) for k, v in self.experiment.items()},
            "params": {k: str(v) for k, v in self.params.items()},
            "output": {k: str(v) for k, v in self.output.items()},
        }


class CheckRow(BaseModel):
    name: str
    value: Optional[float] = None
    threshold: Optional[float] = None
    passed: Optional[bool] = None


class RunReport(BaseModel):
    schema_version: int
    experiment: str
    seed: int
    workers: int
    config: Dict[str, Any]
    checks: List[CheckRow]
    series_columns: List[str]
    series_rows: List[List[Any]]
    passed: bool
    summary: str
    wall_time_s: float
    csv: Optional[str] = None


class SuiteRequest(BaseModel):
    runs: List[RunRequest]


class SuiteRow(BaseModel):
    index: int
    experiment: str
    status: str
    summary: str


class SuiteReport(BaseModel):
    schema_version: int
    rows: List[SuiteRow]
    severity: int
    reports: List[RunReport]


class SceneInfo(BaseModel):
    kind: str
    arguments: List[str]
    note: str
