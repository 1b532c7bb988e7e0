from __future__ import annotations

import logging
import math
import os

import yaml

from src.covering.asymptotics import RateTuple
from src.covering.bounds import CodebookSizes, EventSet
from src.covering.config import ExperimentConfig
from src.covering.distcore import JointPmf, power, validate_pmf
from src.covering.errors import ConfigError
from src.covering.sim import GENERATORS, IndependentGenerator
from src.covering.typicality import typical_event

SEARCH_PATHS = ('config/experiment.yaml', 'experiment.yaml')
NATS_PER_BIT = math.log(2.0)

log = logging.getLogger(__name__)


def load_config(path: str | None = None) -> ExperimentConfig:
    """Explicit path, then the default locations, else built-in defaults. JSON documents parse as YAML."""
    if path and not os.path.exists(path):
        raise ConfigError("config", f"no such file {path!r}")
    for p in ([path] if path else []) + list(SEARCH_PATHS):
        if p and os.path.exists(p):
            with open(p, 'r', encoding='utf-8') as fh:
                raw = yaml.safe_load(fh)
            if raw is None:
                raw = {}
            if not isinstance(raw, dict):
                raise ConfigError("config", f"{p} must hold a mapping, got {type(raw).__name__}")
            log.info("config loaded from %s", p)
            return ExperimentConfig.model_validate(raw)
    return ExperimentConfig()


OVERRIDE_SECTIONS = {'workers': 'search', 'format': 'output', 'bits': 'output'}


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Flag overrides (None means not given) applied with model_copy; the result is re-validated."""
    update = {}
    for key, value in overrides.items():
        if value is None:
            continue
        section = OVERRIDE_SECTIONS.get(key)
        if section is None:
            update[key] = value
        else:
            update[section] = update.get(section, getattr(cfg, section)).model_copy(update={key: value})
    return ExperimentConfig.model_validate(cfg.model_copy(update=update).model_dump())


def build_pmf(cfg: ExperimentConfig) -> JointPmf:
    d = cfg.distribution
    return validate_pmf(d.probs, d.alphabet_sizes, d.tolerance)


def build_event(cfg: ExperimentConfig, p: JointPmf, n: int) -> EventSet:
    ev = cfg.event
    guard = cfg.enumeration_guard
    if ev.kind == 'typical':
        return typical_event(p, n, cfg.delta, guard)
    sizes = power(p, n, guard).alphabet_sizes
    if ev.kind == 'equal':
        if len(ev.variables) < 2 or any(not 0 <= v < len(sizes) for v in ev.variables):
            raise ConfigError("event.variables", f"need at least two variable indices in 0..{len(sizes) - 1}")
        return EventSet.coordinates_equal(sizes, ev.variables)
    if n != 1:
        raise ConfigError("event.members", "explicit member lists are single-letter; use n = 1")
    try:
        return EventSet.from_members(sizes, ev.members)
    except ValueError as e:
        raise ConfigError("event.members", str(e)) from None


def rates_in_nats(cfg: ExperimentConfig, values: list[float]) -> list[float]:
    return [r * NATS_PER_BIT for r in values] if cfg.output.bits else list(values)


def rates(cfg: ExperimentConfig) -> RateTuple:
    if cfg.R is None:
        raise ConfigError("R", "this command needs rates R")
    return RateTuple(tuple(rates_in_nats(cfg, cfg.R)))


def codebook_sizes(cfg: ExperimentConfig, n: int) -> CodebookSizes:
    if cfg.M is not None:
        return CodebookSizes(tuple(cfg.M))
    if cfg.R is not None:
        return CodebookSizes.from_rates(rates_in_nats(cfg, cfg.R), n)
    raise ConfigError("M", "this command needs codebook sizes M or rates R")


def generator(cfg: ExperimentConfig) -> IndependentGenerator:
    return GENERATORS[cfg.search.generator]()
