from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class Distribution(BaseModel):
    alphabet_sizes: list[int] = Field(default_factory=lambda: [1, 2, 2], min_length=3)
    probs: list[float] = Field(default_factory=lambda: [0.45, 0.05, 0.05, 0.45])
    tolerance: float = Field(1e-9, ge=0)

    @model_validator(mode="after")
    def _table_size(self):
        if any(s < 1 for s in self.alphabet_sizes):
            raise ValueError(f"alphabet_sizes must be >= 1, got {self.alphabet_sizes}")
        if len(self.probs) != math.prod(self.alphabet_sizes):
            raise ValueError(f"probs has {len(self.probs)} entries, alphabet_sizes need {math.prod(self.alphabet_sizes)}")
        return self

    @property
    def k(self) -> int:
        return len(self.alphabet_sizes) - 2


class EventSpec(BaseModel):
    kind: Literal['typical', 'equal', 'explicit'] = 'typical'
    variables: list[int] = Field(default_factory=list)       # for 'equal'
    members: list[list[int]] = Field(default_factory=list)   # for 'explicit' (n = 1)


class EntropyQuery(BaseModel):
    S: list[int] = Field(min_length=1)
    T: list[int] = Field(default_factory=list)


class SearchSettings(BaseModel):
    mode: Literal['auto', 'materialized', 'collapsed'] = 'auto'
    max_codewords: int = Field(1_000_000, ge=1)
    workers: int = Field(1, ge=1, le=64)
    confidence: float = Field(0.95, gt=0, lt=1)
    generator: Literal['independent', 'aliasing'] = 'independent'
    audit_samples: int = Field(4000, ge=0)


class OutputSettings(BaseModel):
    format: Literal['csv', 'json'] = 'csv'
    bits: bool = False                                      # rates in and entropies out in bits


class LoggingSettings(BaseModel): enabled: bool = True; level: str = 'WARNING'; file: Optional[str] = None


class ExperimentConfig(BaseModel):
    distribution: Distribution = Field(default_factory=Distribution)
    n: int = Field(1, ge=1)
    n_sweep: list[int] = Field(default_factory=list)
    delta: float = Field(0.3, ge=0)
    epsilon: float = Field(0.2, gt=0)                       # deviation for the exponent command
    epsilon_grid: list[float] = Field(default_factory=lambda: [round(0.1 * i, 10) for i in range(1, 10)])
    M: Optional[list[int]] = None
    R: Optional[list[float]] = None
    rate_grid: list[list[float]] = Field(default_factory=list)
    entropy_queries: list[EntropyQuery] = Field(default_factory=list)
    event: EventSpec = Field(default_factory=EventSpec)
    trials: int = Field(200, ge=1)
    seed: int = Field(0, ge=0)
    enumeration_guard: float = Field(1e7, gt=0)
    search: SearchSettings = Field(default_factory=SearchSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @model_validator(mode="after")
    def _consistent(self):
        k = self.distribution.k
        if self.M is not None and self.R is not None:
            raise ValueError("give codebook sizes M or rates R, not both")
        if self.M is not None and (len(self.M) != k or any(m < 0 for m in self.M)):
            raise ValueError(f"M needs {k} sizes >= 0, got {self.M}")
        if self.R is not None and (len(self.R) != k or any(not math.isfinite(r) or r < 0 for r in self.R)):
            raise ValueError(f"R needs {k} finite rates >= 0, got {self.R}")
        if self.rate_grid and len(self.rate_grid) != k:
            raise ValueError(f"rate_grid needs {k} axes, got {len(self.rate_grid)}")
        if any(not 0 < e < 1 for e in self.epsilon_grid) or not self.epsilon_grid:
            raise ValueError(f"epsilon_grid entries must lie in (0, 1), got {self.epsilon_grid}")
        if any(n < 1 for n in self.n_sweep):
            raise ValueError(f"n_sweep entries must be >= 1, got {self.n_sweep}")
        return self

    @property
    def blocklengths(self) -> list[int]:
        return self.n_sweep or [self.n]
