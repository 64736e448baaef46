"""
Configuration module for the toric residue engine.

Defaults come from the environment (optionally a .env file); job files in
JSON or YAML are validated into JobConfig and may be overridden by CLI flags.
"""
import os
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, validator

load_dotenv()

logger = logging.getLogger(__name__)

BASE_DIR = Path(__file__).parent.parent
OUTPUT_DIR = Path(os.getenv('TORIC_OUTPUT_DIR', str(BASE_DIR / 'output')))
REPORT_DIR = OUTPUT_DIR / 'reports'

PRECISION_BITS = int(os.getenv('TORIC_PRECISION_BITS', '256'))
DEDUP_RADIUS = float(os.getenv('TORIC_DEDUP_RADIUS', '1e-8'))
RESIDUAL_TOL = float(os.getenv('TORIC_RESIDUAL_TOL', '1e-30'))
DEGENERACY_TOL = float(os.getenv('TORIC_DEGENERACY_TOL', '1e-40'))
MAX_STARTS = int(os.getenv('TORIC_MAX_STARTS', '2000'))
NEWTON_MAX_ITER = int(os.getenv('TORIC_NEWTON_MAX_ITER', '80'))
IMAG_GRID = int(os.getenv('TORIC_IMAG_GRID', '8'))
SEED = int(os.getenv('TORIC_SEED', '0'))
LOG_LEVEL = os.getenv('TORIC_LOG_LEVEL', 'INFO')
DECIMAL_DIGITS = int(os.getenv('TORIC_DECIMAL_DIGITS', '30'))

COMMANDS = ['df', 'mirror', 'critical', 'residue', 'theorem1', 'vanishing', 'polytope', 'reproduce']


class SolverSettings(BaseModel):
    """Budgets and tolerances of the multistart critical-point solver."""
    precision_bits: int = Field(default=PRECISION_BITS, ge=53)
    max_starts: int = Field(default=MAX_STARTS, ge=1)
    newton_max_iter: int = Field(default=NEWTON_MAX_ITER, ge=1)
    imag_grid: int = Field(default=IMAG_GRID, ge=1)
    dedup_radius: float = Field(default=DEDUP_RADIUS, gt=0)
    residual_tol: float = Field(default=RESIDUAL_TOL, gt=0)
    degeneracy_tol: float = Field(default=DEGENERACY_TOL, gt=0)
    seed: int = Field(default=SEED, ge=0)


class JobConfig(BaseModel):
    """One command-line job."""
    command: str
    example: Optional[str] = None
    input_path: Optional[str] = None
    k: float = Field(default=8, gt=0)
    k_list: List[float] = Field(default_factory=lambda: [4, 8, 12, 16])
    precision: int = Field(default=PRECISION_BITS, ge=53)
    grouping: Optional[List[List[int]]] = None
    seed: int = Field(default=SEED, ge=0)
    out: Optional[str] = None
    threads: int = Field(default=1, ge=1)
    polytope_action: str = 'dual'
    compare_with: Optional[str] = None
    mirror_residue: bool = True
    solver: SolverSettings = Field(default_factory=SolverSettings)

    @validator('command')
    def validate_command(cls, v):
        if v not in COMMANDS:
            raise ValueError(f'command must be one of {COMMANDS}')
        return v

    @validator('k_list')
    def validate_k_list(cls, v):
        if not v:
            raise ValueError('k_list must not be empty')
        if any(k <= 0 for k in v):
            raise ValueError('every k in k_list must be positive')
        return v

    @validator('polytope_action')
    def validate_polytope_action(cls, v):
        if v not in ['dual', 'reflexive', 'volume', 'points', 'equivalent']:
            raise ValueError('polytope_action must be one of dual, reflexive, volume, points, equivalent')
        return v


def load_job_config(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON or YAML job file.

    Args:
        path: Path to the job file

    Returns:
        Raw mapping of job settings
    """
    path = Path(path)
    try:
        text = path.read_text()
        if path.suffix.lower() in ('.yaml', '.yml'):
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError(f"Job file must contain a mapping: {path}")
        return data
    except Exception as e:
        logger.error(f"Error reading job file {path}: {str(e)}")
        raise


def merge_overrides(base: Dict[str, Any], overrides: Dict[str, Any]) -> JobConfig:
    """Apply non-empty flag values on top of a job file and validate the result."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    solver = dict(merged.get('solver') or {})
    for key, field in (('precision', 'precision_bits'), ('seed', 'seed')):
        if overrides.get(key) is not None:
            solver[field] = overrides[key]
        elif key in merged:
            solver.setdefault(field, merged[key])
    merged['solver'] = solver
    return JobConfig(**merged)


def ensure_directories() -> None:
    """Create the output directories on demand."""
    for directory in [OUTPUT_DIR, REPORT_DIR]:
        directory.mkdir(parents=True, exist_ok=True)
