"""
Batch front-end: `covering <command> [--config PATH] [--format csv|json] ...`

Commands: entropy | bounds | rates | exponent | simulate | oracle | audit.
Tables go to stdout (or --out), diagnostics and logs to stderr.
Exit codes: 0 success, 2 configuration error, 3 guard exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import yaml
from pydantic import ValidationError

from src.covering import runtime
from src.covering.asymptotics import (
    atypicality_bound, boundary_scan, converse_check, direct_check, exponent_report,
)
from src.covering.bounds import best_epsilon, sweep_epsilon
from src.covering.config import ExperimentConfig
from src.covering.distcore import SubsetId, cond_entropy, generation_law, nonempty_subsets, power
from src.covering.errors import ConfigError, CoveringError, GuardExceeded
from src.covering.logging_config import resolve_logging_from_env_and_cfg, setup_logging
from src.covering.sim import assumption1_audit, estimate_cover_probability, exact_oracle

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3

log = logging.getLogger(__name__)


@dataclass
class Output:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    result: Any = None


def _unit(cfg: ExperimentConfig) -> tuple[float, str]:
    return (runtime.NATS_PER_BIT, "bits") if cfg.output.bits else (1.0, "nats")


def cmd_entropy(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    scale, unit = _unit(cfg)
    queries = [(SubsetId.from_iterable(q.S), SubsetId.from_iterable(q.T)) for q in cfg.entropy_queries] or \
        [(S, SubsetId()) for S in nonempty_subsets(p.variables)]
    out = Output(["S", "T", "H", "unit"])
    for S, T in queries:
        h = cond_entropy(p, S, T) / scale
        out.rows.append([S.label(), T.label(), h, unit])
    out.result = [{"S": r[0], "T": r[1], "H": r[2], "unit": unit} for r in out.rows]
    return out


def cmd_bounds(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    cols = ["n", "epsilon", "lower", "lower_raw", "upper_chebyshev", "upper_chebyshev_raw",
            "upper_cauchy_schwarz", "upper_cauchy_schwarz_raw", "p_F_complement", "p_not_good"]
    out = Output(cols + ["best"], result=[])
    for n in cfg.blocklengths:
        pw = power(p, n, cfg.enumeration_guard)
        F = runtime.build_event(cfg, p, n)
        M = runtime.codebook_sizes(cfg, n)
        reports = sweep_epsilon(pw, F, M, cfg.epsilon_grid)
        best = best_epsilon(reports)
        for rep in reports:
            row = [n] + [getattr(rep, c) for c in cols[1:]] + [rep is best]
            out.rows.append(row)
            doc = dict(zip(cols + ["best"], row))
            doc.update(
                alpha={S.label(): v for S, v in rep.constants.alpha.items()},
                beta={S.label(): v for S, v in rep.constants.beta.items()},
                gamma=rep.constants.gamma, terms=dict(rep.terms), event=F.label,
            )
            out.result.append(doc)
    return out


def cmd_rates(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    scale, unit = _unit(cfg)
    if cfg.rate_grid:
        grid = [runtime.rates_in_nats(cfg, axis) for axis in cfg.rate_grid]
        out = Output([f"R{j}" for j in range(1, p.k + 1)] + ["direct", "converse", "unit"], result=[])
        for row in boundary_scan(p, cfg.delta, grid):
            R = [r / scale for r in row.R]
            out.rows.append(R + [row.direct, row.converse, unit])
            out.result.append({"R": R, "direct": row.direct, "converse": row.converse, "unit": unit})
        return out
    R = runtime.rates(cfg)
    out = Output(["kind", "S", "slack", "satisfied", "binding", "unit"], result={})
    for verdict in (direct_check(p, R, cfg.delta), converse_check(p, R, cfg.delta)):
        for S, slack in verdict.per_subset_slack.items():
            out.rows.append([verdict.kind, S.label(), slack / scale, verdict.satisfied,
                             S == verdict.binding_subset, unit])
        out.result[verdict.kind] = {
            "satisfied": verdict.satisfied, "binding_subset": verdict.binding_subset.label(),
            "slack": {S.label(): v / scale for S, v in verdict.per_subset_slack.items()}, "unit": unit,
        }
    return out


def cmd_exponent(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    rep = exponent_report(p, cfg.epsilon)
    out = Output(["quantity", "subset", "n", "value"])
    for T in rep.per_subset_upper:
        out.rows.append(["exponent_upper", T.label(), "", rep.per_subset_upper[T]])
        out.rows.append(["exponent_lower", T.label(), "", rep.per_subset_lower[T]])
    out.rows.append(["overall", "", "", rep.overall])
    out.rows.append(["prefactor", "", "", rep.prefactor])
    bounds = {}
    for n in cfg.blocklengths:
        b = atypicality_bound(p, cfg.epsilon, n)
        bounds[str(n)] = b
        out.rows.append(["atypicality_bound", "", n, b])
    out.result = {
        "epsilon": rep.epsilon, "overall": rep.overall, "prefactor": rep.prefactor,
        "upper": {T.label(): v for T, v in rep.per_subset_upper.items()},
        "lower": {T.label(): v for T, v in rep.per_subset_lower.items()},
        "unbounded": list(rep.unbounded), "atypicality_bound": bounds,
    }
    return out


def cmd_simulate(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    law = generation_law(p)
    cols = ["n", "trials", "successes", "p_hat", "ci_low", "ci_high", "confidence", "seed", "mode"]
    out = Output(cols, result=[])
    for n in cfg.blocklengths:
        est = estimate_cover_probability(
            law, p, n, runtime.codebook_sizes(cfg, n), cfg.delta, cfg.trials, cfg.seed,
            generator=runtime.generator(cfg), mode=cfg.search.mode, workers=cfg.search.workers,
            confidence=cfg.search.confidence, max_codewords=cfg.search.max_codewords,
            guard=cfg.enumeration_guard,
        )
        row = [getattr(est, c) for c in cols]
        out.rows.append(row)
        out.result.append(dict(zip(cols, row)))
    return out


def cmd_oracle(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    law = generation_law(p)
    out = Output(["n", "M", "p_zero"], result=[])
    for n in cfg.blocklengths:
        M = runtime.codebook_sizes(cfg, n)
        value = exact_oracle(law, p, n, M, runtime.build_event(cfg, p, n), cfg.enumeration_guard)
        label = " ".join(str(m) for m in M.sizes)
        out.rows.append([n, label, value])
        out.result.append({"n": n, "M": list(M.sizes), "p_zero": value})
    return out


def cmd_audit(cfg: ExperimentConfig) -> Output:
    p = runtime.build_pmf(cfg)
    M = runtime.codebook_sizes(cfg, 1)
    rep = assumption1_audit(generation_law(p), M, runtime.generator(cfg), cfg.enumeration_guard,
                            samples=cfg.search.audit_samples, seed=cfg.seed)
    cols = ["generator", "passed", "max_deviation", "sampled_deviation", "sampled_tolerance", "samples",
            "pairs_checked"]
    row = [getattr(rep, c) for c in cols]
    out = Output(cols + ["patterns"], [row + [" ".join(rep.patterns)]])
    out.result = dict(zip(cols, row), patterns=list(rep.patterns))
    return out


COMMANDS: dict[str, Callable[[ExperimentConfig], Output]] = {
    "entropy": cmd_entropy, "bounds": cmd_bounds, "rates": cmd_rates, "exponent": cmd_exponent,
    "simulate": cmd_simulate, "oracle": cmd_oracle, "audit": cmd_audit,
}


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return v


def echo_config(cfg: ExperimentConfig) -> dict:
    """Effective config; thread count is left out so output does not depend on it."""
    return cfg.model_dump(mode="json", exclude={"search": {"workers"}})


def render(cfg: ExperimentConfig, command: str, out: Output) -> str:
    conf = echo_config(cfg)
    if cfg.output.format == "json":
        doc = {"config": conf, "command": command, "result": out.result}
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config=" + json.dumps(_jsonable(conf), sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(out.columns)
    for row in out.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="covering", description="Covering-lemma bounds, exponents and simulations")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="experiment config (YAML or JSON)")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int, help="simulation threads")
    ap.add_argument("--bits", action="store_true", default=None, help="rates and entropies in bits")
    ap.add_argument("--out", help="output file (default stdout)")
    ap.add_argument("--verbose", action="store_true", help="INFO logging on stderr")
    return ap


def _diagnostic(e: Exception) -> str:
    if isinstance(e, ValidationError):
        err = e.errors()[0]
        where = ".".join(str(x) for x in err.get("loc", ())) or "config"
        return f"{where}: {err.get('msg', '')}"
    return " ".join(str(e).split())


def run(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        cfg = runtime.apply_overrides(runtime.load_config(args.config), seed=args.seed, trials=args.trials,
                                      format=args.format, bits=args.bits, workers=args.workers)
        enabled, level, log_file = resolve_logging_from_env_and_cfg(cfg)
        setup_logging(enabled, "INFO" if args.verbose else level, log_file)
        log.info("command=%s n=%s", args.command, cfg.blocklengths)
        text = render(cfg, args.command, COMMANDS[args.command](cfg))
    except GuardExceeded as e:
        print(f"covering: guard exceeded: {_diagnostic(e)}", file=sys.stderr)
        return EXIT_GUARD
    except (ValidationError, CoveringError, yaml.YAMLError, ValueError) as e:
        print(f"covering: config error: {_diagnostic(e)}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as e:
            print(f"covering: config error: {ConfigError('out', str(e))}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))
