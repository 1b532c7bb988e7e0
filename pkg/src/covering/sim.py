"""
The random-coding experiment behind the covering lemma.

A trial draws U_0^n ~ p(u_0)^n, the side sequence from p(u_{k+1}|u_0) and, for
every codebook j, M_j codewords from p(u_j|u_0), all conditionally independent
given U_0^n. It succeeds when some codeword tuple m is jointly weakly typical.

Randomness is counter-based: the Philox key comes from (seed, trial, role, j)
and the counter carries (m, position), so any single codeword can be
regenerated on its own and results do not depend on thread scheduling.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Literal, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import norm

from src.covering.bounds import CodebookSizes, EventSet
from src.covering.distcore import (
    DEFAULT_GUARD, GenerationLaw, JointPmf, SubsetId, enforce_guard, entropy, nonempty_subsets, power, power_array,
)
from src.covering.errors import GuardExceeded, PmfError
from src.covering.typicality import subset_rate, within

ROLE_COMMON, ROLE_SIDE, ROLE_CODEWORD, ROLE_VERDICT = 0, 1, 2, 3
DEFAULT_MAX_CODEWORDS = 1_000_000
AUDIT_TOLERANCE = 1e-12
AUDIT_SAMPLES = 4000
AUDIT_FALSE_ALARM = 1e-6

SearchMode = Literal["auto", "materialized", "collapsed"]

log = logging.getLogger(__name__)


def _key(seed: int, trial: int, role: int, j: int = 0) -> np.ndarray:
    return np.random.SeedSequence(int(seed), spawn_key=(int(trial), role, int(j))).generate_state(2, np.uint64)


def _stream(key: np.ndarray, m: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key, counter=[0, int(m), 0, 0]))


def _draw(table: np.ndarray, u0: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of one symbol per position from the row table[u0[i]]."""
    cdf = np.cumsum(table, axis=1)
    last = cdf[:, -1:]
    cdf = np.divide(cdf, last, out=np.ones_like(cdf), where=last > 0)[u0]
    sym = (uniforms[:, None] >= cdf).sum(axis=1)
    return np.minimum(sym, table.shape[1] - 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    u0: np.ndarray
    u_side: np.ndarray
    codebooks: tuple[np.ndarray, ...]    # codebooks[j-1] has shape (M_j, n)
    seed: int
    trial: int = 0

    @property
    def k(self) -> int:
        return len(self.codebooks)

    @property
    def sizes(self) -> CodebookSizes:
        return CodebookSizes(tuple(b.shape[0] for b in self.codebooks))

    def symbols(self, m: Sequence[int]) -> dict[int, np.ndarray]:
        """Sequences of the tuple m (1-based indices)."""
        out = {0: self.u0, self.k + 1: self.u_side}
        for j, mj in enumerate(m, start=1):
            out[j] = self.codebooks[j - 1][mj - 1]
        return out

    def dumps(self) -> str:
        head = f"k={self.k} n={self.n} M={','.join(str(b.shape[0]) for b in self.codebooks)} seed={self.seed} trial={self.trial}"
        rows = [self.u0, self.u_side] + [cw for b in self.codebooks for cw in b]
        return "\n".join([head] + [" ".join(str(int(s)) for s in row) for row in rows]) + "\n"

    @classmethod
    def loads(cls, text: str) -> Instance:
        lines = text.splitlines()
        try:
            head = dict(item.split("=", 1) for item in lines[0].split())
            k, n = int(head["k"]), int(head["n"])
            M = [int(x) for x in head["M"].split(",")] if head["M"] else []
            rows = [np.array([int(s) for s in line.split()], dtype=np.int64) for line in lines[1:] if line.strip()]
        except (IndexError, KeyError, ValueError) as e:
            raise PmfError(f"malformed instance snapshot: {e}") from None
        if len(M) != k or len(rows) != 2 + sum(M) or any(r.shape != (n,) for r in rows):
            raise PmfError("instance snapshot does not match its header")
        books, at = [], 2
        for mj in M:
            books.append(np.array(rows[at:at + mj], dtype=np.int64).reshape(mj, n)); at += mj
        return cls(n, rows[0], rows[1], tuple(books), int(head.get("seed", 0)), int(head.get("trial", 0)))


class IndependentGenerator:
    """Every codeword conditionally i.i.d. given U_0^n; pairs sharing an index agree, all others are independent."""
    name = "independent"

    @staticmethod
    def cells(M: CodebookSizes) -> list[tuple[int, int]]:
        return [(j, m) for j in range(1, M.k + 1) for m in range(1, M.sizes[j - 1] + 1)]

    def aliases(self, M: CodebookSizes) -> dict[tuple[int, int], tuple[int, int]]:
        """cell -> cell it copies."""
        return {}

    def draw_pair(self, law: GenerationLaw, n: int, seed: int, trial: int = 0) -> tuple[np.ndarray, np.ndarray]:
        if n < 1: raise ValueError(f"n must be >= 1, got {n}")
        p0 = law.common_table()[None, :]
        u0 = _draw(p0, np.zeros(n, dtype=np.int64), _stream(_key(seed, trial, ROLE_COMMON)).random(n))
        side = _draw(law.codeword_table(law.k + 1), u0, _stream(_key(seed, trial, ROLE_SIDE)).random(n))
        return u0, side

    def codeword(self, law: GenerationLaw, u0: np.ndarray, seed: int, trial: int, j: int, m: int) -> np.ndarray:
        return _draw(law.codeword_table(j), u0, _stream(_key(seed, trial, ROLE_CODEWORD, j), m).random(len(u0)))

    def draw(self, law: GenerationLaw, n: int, M: CodebookSizes, seed: int, trial: int = 0) -> Instance:
        if M.k != law.k: raise PmfError(f"{M.k} codebook sizes for k = {law.k}")
        u0, side = self.draw_pair(law, n, seed, trial)
        alias = self.aliases(M)
        books = []
        for j in range(1, law.k + 1):
            key = _key(seed, trial, ROLE_CODEWORD, j)
            table = law.codeword_table(j)
            rows = [_draw(table, u0, _stream(key, m).random(n)) for m in range(1, M.sizes[j - 1] + 1)]
            book = np.array(rows, dtype=np.int64).reshape(M.sizes[j - 1], n)
            books.append(book)
        for (j, m), (j2, m2) in alias.items():
            books[j - 1][m - 1] = books[j2 - 1][m2 - 1]
        return Instance(n, u0, side, tuple(books), int(seed), int(trial))

    def codebook_law(self, law: GenerationLaw, M: CodebookSizes, u0: int) -> Iterator[tuple[tuple[int, ...], float]]:
        """Every single-letter codebook realization given U_0 = u0 with its probability (cells order)."""
        cells = self.cells(M)
        index = {c: i for i, c in enumerate(cells)}
        alias = self.aliases(M)
        free = [c for c in cells if c not in alias]
        rows = [law.codeword_table(j)[u0] for j, _ in free]
        for combo in itertools.product(*(range(len(r)) for r in rows)):
            prob = math.prod(float(r[s]) for r, s in zip(rows, combo))
            if prob <= 0:
                continue
            real = [0] * len(cells)
            for c, s in zip(free, combo):
                real[index[c]] = s
            for c, src in alias.items():
                real[index[c]] = real[index[src]]
            yield tuple(real), prob


class AliasingGenerator(IndependentGenerator):
    """Negative control: codeword 2 of codebook 1 is a copy of codeword 1."""
    name = "aliasing"

    def aliases(self, M: CodebookSizes) -> dict[tuple[int, int], tuple[int, int]]:
        return {(1, 2): (1, 1)} if M.k >= 1 and M.sizes[0] >= 2 else {}


GENERATORS = {g.name: g for g in (IndependentGenerator, AliasingGenerator)}


def generate_instance(law: GenerationLaw, n: int, M: CodebookSizes, seed: int, trial: int = 0) -> Instance:
    return IndependentGenerator().draw(law, n, M, seed, trial)


@dataclass(frozen=True)
class SearchResult:
    found: bool
    witness: tuple[int, ...] | None
    candidates: int


def _levels(p: JointPmf) -> dict[int, list[SubsetId]]:
    """Subsets grouped by the largest codebook index they touch (0 when none)."""
    k = p.k
    out: dict[int, list[SubsetId]] = {lvl: [] for lvl in range(k + 1)}
    for T in nonempty_subsets(p.variables):
        books = [j for j in T if 1 <= j <= k]
        out[max(books, default=0)].append(T)
    return out


def search_typical_tuple(inst: Instance, p: JointPmf, delta: float, guard: float = DEFAULT_GUARD) -> SearchResult:
    """Lexicographically first m (1-based) whose tuple is weakly typical; the last codebook is scanned vectorized."""
    k = p.k
    if inst.k != k: raise PmfError(f"instance has {inst.k} codebooks, pmf has k = {k}")
    M = inst.sizes
    if M.total == 0:
        return SearchResult(False, None, 0)
    if M.total > guard:
        raise GuardExceeded("codeword tuples to search", M.total, guard)
    levels = _levels(p)
    H = {T: entropy(p, T) for T in nonempty_subsets(p.variables)}
    ok = lambda T, syms: within(subset_rate(p, T, syms), H[T], delta)
    fixed = {0: inst.u0, k + 1: inst.u_side}
    if not all(ok(T, fixed) for T in levels[0]):
        return SearchResult(False, None, 0)
    checked = 0

    def descend(level: int, syms: dict, prefix: tuple[int, ...]) -> tuple[int, ...] | None:
        nonlocal checked
        book = inst.codebooks[level - 1]
        if level == k:
            cand = {**syms, k: book}
            mask = np.ones(len(book), dtype=bool)
            for T in levels[k]:
                mask &= ok(T, cand)
                if not mask.any():
                    break
            checked += len(book)
            hits = np.flatnonzero(mask)
            return prefix + (int(hits[0]) + 1,) if hits.size else None
        for m in range(len(book)):
            cand = {**syms, level: book[m]}
            if all(ok(T, cand) for T in levels[level]):
                found = descend(level + 1, cand, prefix + (m + 1,))
                if found:
                    return found
        return None

    witness = descend(1, fixed, ())
    return SearchResult(witness is not None, witness, checked)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length `parts` summing to `total`."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(parts)])
    return np.array(rows, dtype=np.int64)


def _cover_from_q(q: float, M: int) -> float:
    """1 - (1 - q)^M without forming M or (1 - q)^M."""
    if M <= 0 or q <= 0.0:
        return 0.0
    if q >= 1.0:
        return 1.0
    x = math.log(M) + math.log(-math.log1p(-q))
    return 1.0 if x > 709.0 else -math.expm1(-math.exp(x))


def collapsed_cover_probability(p: JointPmf, law: GenerationLaw, u0: np.ndarray, u_side: np.ndarray,
                                delta: float, M1: int, guard: float = DEFAULT_GUARD) -> tuple[float, float]:
    """
    k = 1 only. Returns (q, 1 - (1-q)^M1) where q = P{one fresh codeword is jointly
    typical with (u0, u_side)}, computed exactly by summing over the conditional
    types of the codeword within each (u_0, u_2) context.
    """
    if p.k != 1: raise PmfError("collapsed search is defined for k = 1")
    n = len(u0)
    fixed = {0: u0, 2: u_side}
    subsets = nonempty_subsets(p.variables)
    H = {T: entropy(p, T) for T in subsets}
    for T in subsets:
        if 1 not in T and not within(subset_rate(p, T, fixed), H[T], delta):
            return 0.0, 0.0
    touched = [T for T in subsets if 1 in T]
    A2 = p.size_of(2)
    ctx, counts = np.unique(u0 * A2 + u_side, return_counts=True)
    logw = np.zeros(1)
    stats = np.zeros((1, len(touched)))
    table1 = law.codeword_table(1)
    for code, n_ac in zip(ctx.tolist(), counts.tolist()):
        a, c = divmod(code, A2)
        support = np.flatnonzero(table1[a] > 0)
        comps = _compositions(n_ac, len(support))
        if len(logw) * len(comps) > guard:
            raise GuardExceeded("conditional types to enumerate", len(logw) * len(comps), guard)
        lw = gammaln(n_ac + 1) - gammaln(comps + 1).sum(axis=1) + comps @ np.log(table1[a, support])
        st = np.empty((len(comps), len(touched)))
        for i, T in enumerate(touched):
            pick = tuple(a if j == 0 else support if j == 1 else c for j in T)
            with np.errstate(divide="ignore", invalid="ignore"):
                lp = np.log(p.marginal_table(T)[pick])
                st[:, i] = np.where(comps > 0, comps * lp, 0.0).sum(axis=1)
        logw = (logw[:, None] + lw[None, :]).ravel()
        stats = (stats[:, None, :] + st[None, :, :]).reshape(-1, len(touched))
    rates = -stats / n
    mask = np.ones(len(logw), dtype=bool)
    for i, T in enumerate(touched):
        mask &= within(rates[:, i], H[T], delta)
    q = float(np.exp(logsumexp(logw[mask]))) if mask.any() else 0.0
    q = min(q, 1.0)
    return q, _cover_from_q(q, M1)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    success: bool
    witness: tuple[int, ...] | None = None
    cover_probability: float | None = None


@dataclass(frozen=True)
class CoverEstimate:
    n: int
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    confidence: float
    seed: int
    mode: str
    records: tuple[TrialRecord, ...] = field(default_factory=tuple, repr=False)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0: raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 < confidence < 1: raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p_hat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p_hat + z * z / (2.0 * trials)) / denom
    margin = z / denom * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials))
    return max(0.0, min(p_hat, centre - margin)), min(1.0, max(p_hat, centre + margin))


def resolve_mode(mode: SearchMode, M: CodebookSizes, max_codewords: int, generator: IndependentGenerator) -> str:
    total = sum(M.sizes)
    if mode == "auto":
        mode = "collapsed" if M.k == 1 and total > max_codewords and not generator.aliases(M) else "materialized"
    if mode == "collapsed" and (M.k != 1 or generator.aliases(M)):
        raise ValueError("collapsed search needs k = 1 and conditionally independent codewords")
    if mode == "materialized" and total > max_codewords:
        raise GuardExceeded("codewords to materialize", total, max_codewords)
    return mode


def estimate_cover_probability(law: GenerationLaw, p: JointPmf, n: int, M: CodebookSizes, delta: float,
                               trials: int, seed: int, *, generator: IndependentGenerator | None = None,
                               mode: SearchMode = "auto", workers: int = 1, confidence: float = 0.95,
                               max_codewords: int = DEFAULT_MAX_CODEWORDS,
                               guard: float = DEFAULT_GUARD) -> CoverEstimate:
    if trials < 1: raise ValueError(f"trials must be >= 1, got {trials}")
    gen = generator or IndependentGenerator()
    resolved = resolve_mode(mode, M, max_codewords, gen)
    log.info("estimate n=%d log_M=%s delta=%g trials=%d seed=%d mode=%s workers=%d", n,
             [round(math.log(m), 3) if m else None for m in M.sizes], delta, trials, seed, resolved, workers)

    def one(trial: int) -> TrialRecord:
        if resolved == "materialized":
            res = search_typical_tuple(gen.draw(law, n, M, seed, trial), p, delta, guard)
            return TrialRecord(trial, res.found, res.witness)
        u0, side = gen.draw_pair(law, n, seed, trial)
        _, cover = collapsed_cover_probability(p, law, u0, side, delta, M.sizes[0], guard)
        u = _stream(_key(seed, trial, ROLE_VERDICT)).random()
        return TrialRecord(trial, bool(u < cover), None, cover)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = tuple(pool.map(one, range(trials)))
    else:
        records = tuple(one(t) for t in range(trials))
    successes = sum(r.success for r in records)
    lo, hi = wilson_interval(successes, trials, confidence)
    return CoverEstimate(n, trials, successes, successes / trials, lo, hi, confidence, int(seed), resolved, records)


def _value_set_law(row: np.ndarray, m: int) -> dict[frozenset, float]:
    """Law of the set of distinct values among m i.i.d. draws from `row`."""
    parts: dict[frozenset, list[float]] = defaultdict(list)
    support = np.flatnonzero(row > 0).tolist()
    if len(support) == 1 and m > 0:
        return {frozenset(support): 1.0}
    for combo in itertools.product(support, repeat=m):
        parts[frozenset(combo)].append(math.prod(float(row[s]) for s in combo))
    return {s: math.fsum(ws) for s, ws in parts.items()}


def exact_oracle(law: GenerationLaw, p: JointPmf, n: int, M: CodebookSizes, F: EventSet,
                 guard: float = DEFAULT_GUARD) -> float:
    """Exact P{Z = 0} by enumerating (u_0^n, u_{k+1}^n) and the codebooks, last codebook in closed form."""
    k = p.k
    if M.k != k: raise PmfError(f"{M.k} codebook sizes for k = {k}")
    pw = power(p, n, guard)
    F.check(pw)
    if M.total == 0:
        return 1.0
    factors = [power_array(law.codeword_table(j), n) for j in range(1, k + 1)]
    sizes = [f.shape[1] for f in factors]
    pair = pw.marginal_table(SubsetId.of(0, k + 1))
    live = [tuple(x) for x in np.argwhere(pair > 0).tolist()]
    enforce_guard("oracle enumeration",
                  [(len(live), 1), (sizes[-1], 1)] + [(sizes[j], M.sizes[j]) for j in range(k - 1)], guard)
    last = M.sizes[-1]
    terms = []
    for a, c in live:
        sl = F.mask[(a,) + (slice(None),) * k + (c,)]
        laws = [_value_set_law(factors[j][a], M.sizes[j]) for j in range(k - 1)]
        acc = []
        for combo in itertools.product(*(d.items() for d in laws)):
            weight = math.prod(w for _, w in combo)
            sub = sl[np.ix_(*(sorted(s) for s, _ in combo), np.arange(sizes[-1]))]
            reach = sub.reshape(-1, sizes[-1]).any(axis=0)
            hit = math.fsum(factors[-1][a][reach].tolist())
            acc.append(weight * (1.0 - _cover_from_q(hit, last)))
        terms.append(float(pair[a, c]) * math.fsum(acc))
    return min(1.0, max(0.0, math.fsum(terms)))


@dataclass(frozen=True)
class AuditReport:
    generator: str
    passed: bool
    max_deviation: float            # exact codebook law against the product form
    patterns: tuple[str, ...]
    pairs_checked: int
    sampled_deviation: float = 0.0  # frequencies observed from `draw`
    sampled_tolerance: float = 0.0
    samples: int = 0

    def __bool__(self) -> bool:
        return self.passed


def _along(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim; shape[axis] = len(vec)
    return vec.reshape(shape)


def _overlap(m: Sequence[int], m2: Sequence[int]) -> SubsetId:
    return SubsetId.from_iterable(j for j in range(1, len(m) + 1) if m[j - 1] == m2[j - 1])


def _pair_law(rows: Sequence[np.ndarray], S: SubsetId) -> np.ndarray:
    """Law of (U_[k](m), U_[k](m')) given one u_0: ∏_j p(u_j|u_0) ∏_{j∉S} p(u'_j|u_0), u'_S = u_S."""
    k = len(rows)
    A = [len(r) for r in rows]
    law = np.ones(A + A)
    for j in range(1, k + 1):
        law = law * _along(rows[j - 1], j - 1, 2 * k)
        if j in S:
            shape = [A[j - 1] if i in (j - 1, k + j - 1) else 1 for i in range(2 * k)]
            law = law * np.eye(A[j - 1]).reshape(shape)
        else:
            law = law * _along(rows[j - 1], k + j - 1, 2 * k)
    return law


def _sampled_deviation(gen: IndependentGenerator, law: GenerationLaw, M: CodebookSizes,
                       pairs: list[tuple[tuple[int, ...], tuple[int, ...]]], samples: int, seed: int,
                       false_alarm: float) -> tuple[float, float]:
    """
    Run `gen.draw` at n = 1 and compare the frequency of every (u_0, U_[k](m), U_[k](m')) cell
    with p(u_0) times the product-form law. Returns the worst deviation and the tolerance, a
    Bonferroni-corrected normal band at the largest binomial variance.
    """
    k = law.k
    p0 = law.common_table()
    tables = [law.codeword_table(j) for j in range(1, k + 1)]
    draws = [gen.draw(law, 1, M, seed, t) for t in range(samples)]
    u0 = np.array([d.u0[0] for d in draws], dtype=np.int64)
    books = [np.stack([d.codebooks[j][:, 0] for d in draws]) for j in range(k)]
    shape = [len(p0)] + [t.shape[1] for t in tables] * 2
    worst = 0.0
    for m, m2 in pairs:
        counts = np.zeros(shape)
        idx = (u0,) + tuple(books[j][:, m[j] - 1] for j in range(k)) + tuple(books[j][:, m2[j] - 1] for j in range(k))
        np.add.at(counts, idx, 1.0)
        S = _overlap(m, m2)
        expected = np.stack([p0[a] * _pair_law([t[a] for t in tables], S) for a in range(len(p0))])
        worst = max(worst, float(np.abs(counts / samples - expected).max()))
    cells = len(pairs) * math.prod(shape)
    z = float(norm.ppf(1.0 - false_alarm / (2 * max(cells, 1))))
    return worst, z * math.sqrt(0.25 / samples) + 1.0 / samples


def assumption1_audit(law: GenerationLaw, M: CodebookSizes, generator: IndependentGenerator | None = None,
                      guard: float = DEFAULT_GUARD, *, samples: int = AUDIT_SAMPLES, seed: int = 0,
                      false_alarm: float = AUDIT_FALSE_ALARM) -> AuditReport:
    """
    Single-letter check that, for every m != m' with overlap S, the joint law of
    (U_[k](m), U_[k](m')) given U_0 is ∏_j p(u_j|u_0) ∏_{j∉S} p(u'_j|u_0) with u'_S = u_S.

    Two views are checked: the generator's exact codebook law (tolerance 1e-12) and, when
    samples > 0, the empirical frequencies of codebooks produced by `draw`.
    Codewords never depend on U_{k+1}, so conditioning on it changes nothing.
    """
    gen = generator or IndependentGenerator()
    k = law.k
    if M.k != k: raise PmfError(f"{M.k} codebook sizes for k = {k}")
    if samples < 0: raise ValueError(f"samples must be >= 0, got {samples}")
    p0 = law.common_table()
    A = [law.codeword_table(j).shape[1] for j in range(1, k + 1)]
    enforce_guard("codeword pairs to audit", [(m, 2) for m in M.sizes], guard)
    enforce_guard("codebook realizations to audit",
                  [(int((p0 > 0).sum()), 1)] + [(A[j], M.sizes[j]) for j in range(k)], guard)
    enforce_guard("codewords to sample", [(samples, 1), (sum(M.sizes), 1)], guard)
    index = {c: i for i, c in enumerate(gen.cells(M))}
    tuples = list(itertools.product(*(range(1, mj + 1) for mj in M.sizes)))
    ordered = list(itertools.permutations(tuples, 2))
    worst, patterns = 0.0, set()
    for u0 in np.flatnonzero(p0 > 0).tolist():
        real = list(gen.codebook_law(law, M, u0))
        R = np.array([r for r, _ in real], dtype=np.int64).reshape(len(real), -1)
        w = np.array([pr for _, pr in real])
        rows = [law.codeword_table(j)[u0] for j in range(1, k + 1)]
        for m, m2 in ordered:
            S = _overlap(m, m2)
            patterns.add(S.label())
            joint = np.zeros(A + A)
            idx = tuple(R[:, index[(j, m[j - 1])]] for j in range(1, k + 1)) + \
                tuple(R[:, index[(j, m2[j - 1])]] for j in range(1, k + 1))
            np.add.at(joint, idx, w)
            worst = max(worst, float(np.abs(joint - _pair_law(rows, S)).max()))
    pairs = len(ordered) * int((p0 > 0).sum())
    sampled, tolerance = (0.0, 0.0)
    if samples and ordered:
        sampled, tolerance = _sampled_deviation(gen, law, M, ordered, samples, seed, false_alarm)
    passed = worst <= AUDIT_TOLERANCE and sampled <= tolerance
    log.info("pairwise-law audit generator=%s passed=%s max_dev=%.3g sampled_dev=%.3g tol=%.3g pairs=%d",
             gen.name, passed, worst, sampled, tolerance, pairs)
    return AuditReport(gen.name, passed, worst, tuple(sorted(patterns)), pairs, sampled, tolerance, samples)
