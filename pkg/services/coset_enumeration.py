"""
coset_enumeration.py
Coset Enumeration
Todd-Coxeter enumeration (HLT with lookahead, and Felsch) over finitely
presented groups, and the order certification of the finite presentations of
SL_2(Z/rZ)
"""

import time
from collections import deque
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

from models.reports import CorollaryReport, EnumLimits, EnumStatistics, EnumSummary
from services.abelianization import abelianization
from services.cache_manager import CacheManager
from services.matrix_groups import (
    DEFAULT_MAX_ELEMENTS,
    bfs_group_order,
    check_relations,
    corollary_generators,
    exhaustive_sl2_count,
    phi_assignment,
)
from services.presentations import Presentation, format_presentation, make_corollary
from services.words import MissingGeneratorError, Word

logger = logging.getLogger(__name__)

STRATEGIES = ("hlt", "felsch")

Letters = List[int]


class _LimitReached(Exception):
    """Raised inside the engine; recoverable limits may be relieved by lookahead"""

    def __init__(self, reason: str, recoverable: bool):
        super().__init__(reason)
        self.reason = reason
        self.recoverable = recoverable


class CosetTable:
    """
    Coset table for a presentation and a subgroup given by generating words

    Column 2i holds the action of generator i and column 2i + 1 the action of
    its inverse, so col ^ 1 is the inverse column. Coset 0 is the subgroup.
    Coincidences are tracked in the union-find array p with the smaller
    coset as representative.
    """

    def __init__(self, presentation: Presentation, subgroup: Sequence[Word] = (),
                 limits: Optional[EnumLimits] = None, debug: bool = False):
        self.presentation = presentation
        self.generators = presentation.generators
        self.ncols = 2 * len(self.generators)
        self._column = {g: 2 * i for i, g in enumerate(self.generators)}
        self.limits = limits or EnumLimits()
        self.debug = debug

        # Shortest relators first; stable sort keeps presentation order on ties
        reduced = (self.letters(rel.cyclic_reduce()) for rel in presentation.relators)
        self.relators: List[Letters] = sorted((w for w in reduced if w), key=len)
        self.subgroup: List[Letters] = [self.letters(w) for w in subgroup]

        self.table: List[List[Optional[int]]] = [[None] * self.ncols]
        self.p: List[int] = [0]
        self.live = 1
        self.deductions: List[Tuple[int, int]] = []
        self.record_deductions = False
        self._conjugates: Dict[int, List[Letters]] = {}

        self.defined = 1
        self.coincidences = 0
        self.deduced = 0
        self.peak_live = 1
        self.lookahead_passes = 0
        self._deadline = (time.monotonic() + self.limits.time_budget_s
                          if self.limits.time_budget_s else None)

    def letters(self, word: Word) -> Letters:
        """Column indices of the letters of a word"""
        result = []
        for gen, exp in word.syllables:
            if gen not in self._column:
                raise MissingGeneratorError(f"generator {gen!r} is not in the presentation")
            col = self._column[gen]
            result.extend([col] * exp if exp > 0 else [col ^ 1] * -exp)
        return result

    # Live cosets and limits

    @property
    def omega(self) -> List[int]:
        return [c for c in range(len(self.table)) if self.p[c] == c]

    @property
    def index(self) -> int:
        return self.live

    def statistics(self) -> EnumStatistics:
        return EnumStatistics(
            cosets_defined=self.defined,
            coincidences=self.coincidences,
            deductions=self.deduced,
            peak_live_cosets=self.peak_live,
            lookahead_passes=self.lookahead_passes,
        )

    def _check_time(self):
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _LimitReached(f"time budget of {self.limits.time_budget_s}s exhausted",
                                recoverable=False)

    # Elementary operations

    def define(self, alpha: int, col: int) -> int:
        """New coset beta with alpha^col = beta"""
        if len(self.table) >= self.limits.max_cosets:
            raise _LimitReached(f"more than {self.limits.max_cosets} cosets defined",
                                recoverable=False)
        if self.live >= self.limits.max_live_cosets:
            raise _LimitReached(f"more than {self.limits.max_live_cosets} live cosets",
                                recoverable=True)
        if self.defined & 1023 == 0:
            self._check_time()

        beta = len(self.table)
        self.table.append([None] * self.ncols)
        self.p.append(beta)
        self.table[alpha][col] = beta
        self.table[beta][col ^ 1] = alpha
        self.defined += 1
        self.live += 1
        self.peak_live = max(self.peak_live, self.live)
        if self.record_deductions:
            self.deductions.append((alpha, col))
        return beta

    def rep(self, k: int) -> int:
        """Class representative, compressing the path"""
        p = self.p
        root = k
        while p[root] != root:
            root = p[root]
        while p[k] != root:
            p[k], k = root, p[k]
        return root

    def merge(self, k: int, lamda: int, queue: deque):
        phi, psi = self.rep(k), self.rep(lamda)
        if phi != psi:
            mu, v = min(phi, psi), max(phi, psi)
            self.p[v] = mu
            queue.append(v)
            self.live -= 1
            self.coincidences += 1

    def coincidence(self, alpha: int, beta: int):
        """Identify alpha and beta and everything their identification forces"""
        table = self.table
        queue: deque = deque()
        self.merge(alpha, beta, queue)
        while queue:
            gamma = queue.popleft()
            for col in range(self.ncols):
                delta = table[gamma][col]
                if delta is None:
                    continue
                inv = col ^ 1
                table[delta][inv] = None
                mu, nu = self.rep(gamma), self.rep(delta)
                if table[mu][col] is not None:
                    self.merge(nu, table[mu][col], queue)
                elif table[nu][inv] is not None:
                    self.merge(mu, table[nu][inv], queue)
                else:
                    table[mu][col] = nu
                    table[nu][inv] = mu
                    if self.record_deductions:
                        self.deductions.append((mu, col))
        if self.debug:
            self.check_inverse_consistency()

    def _deduce(self, f: int, col: int, b: int):
        self.table[f][col] = b
        self.table[b][col ^ 1] = f
        self.deduced += 1
        if self.record_deductions:
            self.deductions.append((f, col))
        if self.debug:
            self.check_inverse_consistency()

    def scan(self, alpha: int, word: Letters):
        """Trace word from alpha in both directions; deduce or identify, never define"""
        table = self.table
        f, i = alpha, 0
        b, j = alpha, len(word) - 1
        while i <= j and table[f][word[i]] is not None:
            f = table[f][word[i]]
            i += 1
        if i > j:
            if f != b:
                self.coincidence(f, b)
            return
        while j >= i and table[b][word[j] ^ 1] is not None:
            b = table[b][word[j] ^ 1]
            j -= 1
        if j < i:
            self.coincidence(f, b)
        elif j == i:
            self._deduce(f, word[i], b)

    def scan_and_fill(self, alpha: int, word: Letters):
        """Trace word from alpha, defining cosets until the trace closes"""
        table = self.table
        f, i = alpha, 0
        b, j = alpha, len(word) - 1
        while True:
            while i <= j and table[f][word[i]] is not None:
                f = table[f][word[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and table[b][word[j] ^ 1] is not None:
                b = table[b][word[j] ^ 1]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if j == i:
                self._deduce(f, word[i], b)
                return
            self.define(f, word[i])

    def lookahead(self) -> bool:
        """Scan every relator at every live coset without defining; True if cosets were freed"""
        self.lookahead_passes += 1
        before = self.live
        for beta in range(len(self.table)):
            if self.p[beta] != beta:
                continue
            for w in self.relators:
                self.scan(beta, w)
                if self.p[beta] != beta:
                    break
            if beta & 1023 == 0:
                self._check_time()
        logger.debug(f"Lookahead freed {before - self.live} cosets ({self.live} live)")
        return self.live < before

    def _retrying(self, action: Callable[[], None]):
        while True:
            try:
                action()
                return
            except _LimitReached as e:
                if not (e.recoverable and self.lookahead()):
                    raise

    # Strategies

    def run_hlt(self):
        for w in self.subgroup:
            self._retrying(lambda: self.scan_and_fill(0, w))
        self._hlt_pass()

    def _hlt_pass(self):
        alpha = 0
        while alpha < len(self.table):
            if self.p[alpha] == alpha:
                self._retrying(lambda: self._hlt_close(alpha))
            alpha += 1

    def _hlt_close(self, alpha: int):
        # a lookahead between retries may have merged alpha away
        if self.p[alpha] != alpha:
            return
        for w in self.relators:
            self.scan_and_fill(alpha, w)
            if self.p[alpha] != alpha:
                return
        for col in range(self.ncols):
            if self.p[alpha] != alpha:
                return
            if self.table[alpha][col] is None:
                self.define(alpha, col)

    def _build_conjugates(self):
        """Cyclic conjugates of relators and their inverses, grouped by first letter"""
        words = set()
        for rel in self.relators:
            inverse = [c ^ 1 for c in reversed(rel)]
            for w in (rel, inverse):
                for k in range(len(w)):
                    words.add(tuple(w[k:] + w[:k]))
        self._conjugates = {col: [] for col in range(self.ncols)}
        for w in sorted(words, key=lambda w: (len(w), w)):
            self._conjugates[w[0]].append(list(w))

    def process_deductions(self):
        while self.deductions:
            alpha, col = self.deductions.pop()
            if self.p[alpha] != alpha:
                continue
            for w in self._conjugates[col]:
                self.scan(alpha, w)
                if self.p[alpha] != alpha:
                    break
            if self.p[alpha] != alpha:
                continue
            beta = self.table[alpha][col]
            if beta is not None and self.p[beta] == beta:
                for w in self._conjugates[col ^ 1]:
                    self.scan(beta, w)
                    if self.p[beta] != beta:
                        break

    def run_felsch(self):
        self.record_deductions = True
        self._build_conjugates()
        for w in self.subgroup:
            self._retrying(lambda: (self.scan_and_fill(0, w), self.process_deductions()))
        self._retrying(self.process_deductions)
        alpha = 0
        while alpha < len(self.table):
            for col in range(self.ncols):
                if self.p[alpha] != alpha:
                    break
                if self.table[alpha][col] is None:
                    self._retrying(lambda: self._felsch_define(alpha, col))
            alpha += 1

    def _felsch_define(self, alpha: int, col: int):
        if self.p[alpha] == alpha and self.table[alpha][col] is None:
            self.define(alpha, col)
        self.process_deductions()

    # Completion

    def finish(self):
        """Settle remaining coincidences, then compress and standardize"""
        self.record_deductions = False
        self.deductions.clear()
        while True:
            before = self.coincidences
            for beta in range(len(self.table)):
                if self.p[beta] != beta:
                    continue
                for w in self.relators:
                    self.scan(beta, w)
                    if self.p[beta] != beta:
                        break
            for w in self.subgroup:
                self.scan(0, w)
            complete = self.is_complete()
            if self.coincidences == before and complete:
                break
            if not complete:
                self._hlt_pass()
            self._check_time()
        self.compress()
        self.standardize()

    def compress(self):
        """Drop dead cosets and renumber the live ones consecutively"""
        live = self.omega
        position = {c: i for i, c in enumerate(live)}
        self.table = [[position[self.rep(e)] if e is not None else None for e in self.table[c]]
                      for c in live]
        self.p = list(range(len(live)))
        self.live = len(live)

    def standardize(self):
        """Renumber cosets in breadth-first order from coset 0"""
        order = [0]
        seen = {0}
        for alpha in order:
            for beta in self.table[alpha]:
                if beta is not None and beta not in seen:
                    seen.add(beta)
                    order.append(beta)
        position = {c: i for i, c in enumerate(order)}
        self.table = [[position.get(e) if e is not None else None for e in self.table[c]]
                      for c in order]
        self.p = list(range(len(order)))
        self.live = len(order)

    # Inspection

    def is_complete(self) -> bool:
        """Every live coset has every entry defined"""
        return all(None not in self.table[c] for c in self.omega)

    def check_inverse_consistency(self):
        for alpha in range(len(self.table)):
            if self.p[alpha] != alpha:
                continue
            for col, beta in enumerate(self.table[alpha]):
                if beta is None or self.p[beta] != beta:
                    continue
                if self.table[beta][col ^ 1] != alpha:
                    raise RuntimeError(f"inverse consistency violated: {alpha}^{col} = {beta} "
                                       f"but {beta}^{col ^ 1} = {self.table[beta][col ^ 1]}")

    def trace(self, alpha: int, word: Letters) -> Optional[int]:
        for col in word:
            alpha = self.table[alpha][col]
            if alpha is None:
                return None
        return alpha

    def check_closed(self) -> bool:
        """Complete, inverse consistent, relators trivial everywhere, subgroup fixes coset 0"""
        n = len(self.table)
        for alpha, row in enumerate(self.table):
            for col, beta in enumerate(row):
                if beta is None or self.table[beta][col ^ 1] != alpha:
                    return False
        for alpha in range(n):
            for w in self.relators:
                if self.trace(alpha, w) != alpha:
                    return False
        return all(self.trace(0, w) == 0 for w in self.subgroup)

    def permutation(self, gen: str) -> List[int]:
        """Images of the cosets under right multiplication by gen"""
        col = self._column[gen]
        return [row[col] for row in self.table]

    def coset_representative(self, coset: int) -> Word:
        """A word w with 0^w = coset, read from the breadth-first spanning tree"""
        parent: Dict[int, Tuple[int, int]] = {0: (-1, -1)}
        queue = deque([0])
        while queue and coset not in parent:
            alpha = queue.popleft()
            for col, beta in enumerate(self.table[alpha]):
                if beta is not None and beta not in parent:
                    parent[beta] = (alpha, col)
                    queue.append(beta)
        if coset not in parent:
            raise ValueError(f"coset {coset} is not reachable from coset 0")
        syllables = []
        while coset != 0:
            coset, col = parent[coset]
            syllables.append((self.generators[col // 2], -1 if col & 1 else 1))
        return Word(reversed(syllables))

    def __repr__(self) -> str:
        return f"CosetTable({self.presentation.name or 'presentation'}, {self.live} live cosets)"


class EnumOutcome:
    """Result of one enumeration; limit outcomes carry statistics only"""

    def __init__(self, status: str, statistics: EnumStatistics,
                 table: Optional[CosetTable] = None, limit_reason: Optional[str] = None):
        self.status = status
        self.statistics = statistics
        self.table = table
        self.limit_reason = limit_reason

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    @property
    def index(self) -> Optional[int]:
        return len(self.table.table) if self.table is not None else None

    def to_summary(self, presentation: Presentation, strategy: str,
                   subgroup: Sequence[Word] = ()) -> EnumSummary:
        return EnumSummary(
            presentation=presentation.name or repr(presentation),
            strategy=strategy,
            subgroup=[str(w) for w in subgroup],
            status=self.status,
            index=self.index,
            limit_reason=self.limit_reason,
            statistics=self.statistics,
        )

    def __repr__(self) -> str:
        if self.completed:
            return f"EnumOutcome(completed, index={self.index})"
        return f"EnumOutcome(limit-exceeded: {self.limit_reason})"


def todd_coxeter(presentation: Presentation, subgroup: Sequence[Word] = (),
                 limits: Optional[EnumLimits] = None, strategy: str = "hlt",
                 debug: bool = False) -> EnumOutcome:
    """
    Enumerate the cosets of the subgroup generated by `subgroup`

    Args:
        presentation: the finitely presented group
        subgroup: generating words of the subgroup (empty for the trivial subgroup)
        limits: coset and time limits; exceeding one is an outcome, not an error
        strategy: "hlt" (relator based, with lookahead) or "felsch" (table based)
        debug: check inverse consistency after every deduction and coincidence
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    name = presentation.name or "presentation"
    table = CosetTable(presentation, subgroup, limits, debug=debug)
    start = time.monotonic()

    try:
        if strategy == "hlt":
            table.run_hlt()
        else:
            table.run_felsch()
        table.finish()
    except _LimitReached as e:
        logger.info(f"Enumeration of {name} ({strategy}) stopped: {e.reason}")
        return EnumOutcome("limit-exceeded", table.statistics(), limit_reason=e.reason)

    if debug and not table.check_closed():
        raise RuntimeError(f"enumeration of {name} produced a table that does not close")
    logger.info(f"Enumeration of {name} ({strategy}) completed: index {table.index}, "
                f"{table.defined} cosets defined, {table.coincidences} coincidences "
                f"in {time.monotonic() - start:.2f}s")
    return EnumOutcome("completed", table.statistics(), table=table)


# ============================================================================
# SL_2(Z/rZ) CERTIFICATION
# ============================================================================

def _enumerate_cached(presentation: Presentation, limits: EnumLimits, strategy: str,
                      cache: Optional[CacheManager]) -> Tuple[str, Optional[int], EnumStatistics, Optional[str]]:
    key = None
    if cache is not None:
        key = CacheManager.enumeration_key(format_presentation(presentation), [], strategy,
                                           limits.model_dump())
        cached = cache.get_enumeration(key)
        if cached is not None:
            return (cached["status"], cached["index"],
                    EnumStatistics(**cached["statistics"]), None)

    outcome = todd_coxeter(presentation, (), limits, strategy)
    if cache is not None and outcome.completed:
        cache.set_enumeration(key, {
            "status": outcome.status,
            "index": outcome.index,
            "statistics": outcome.statistics.model_dump(),
        })
    return outcome.status, outcome.index, outcome.statistics, outcome.limit_reason


def verify_corollary(r: int, limits: Optional[EnumLimits] = None, strategy: str = "hlt",
                     cache: Optional[CacheManager] = None,
                     max_elements: int = DEFAULT_MAX_ELEMENTS) -> CorollaryReport:
    """
    Certify <x, y | H_2 relators, x^r> = SL_2(Z/rZ): equal orders, the
    relators hold for x -> A, y -> Q_2 mod r, and those matrices generate
    """
    presentation = make_corollary(r)
    limits = limits or EnumLimits()

    status, index, statistics, limit_reason = _enumerate_cached(presentation, limits,
                                                                strategy, cache)

    generators = corollary_generators(r)
    labels = [str(g) for g in generators]
    bfs_order = cache.get_group_order(r, labels) if cache is not None else None
    if bfs_order is None:
        bfs_order = bfs_group_order(generators, r, max_elements).order
        if cache is not None:
            cache.set_group_order(r, labels, bfs_order)
    exhaustive = exhaustive_sl2_count(r)

    relators_satisfied = check_relations(presentation, phi_assignment(2).reduce(r)).passed
    generates_group = bfs_order == exhaustive
    orders_equal = status == "completed" and index == bfs_order

    failures = []
    if status == "completed" and not orders_equal:
        failures.append(f"(i) enumerated order {index} differs from BFS order {bfs_order}")
    if not relators_satisfied:
        failures.append("(ii) a relator is not the identity under x -> A, y -> Q_2 mod r")
    if not generates_group:
        failures.append(f"(iii) A and Q_2 generate {bfs_order} of {exhaustive} elements")

    report = CorollaryReport(
        r=r,
        status=status,
        enumerated_order=index,
        bfs_order=bfs_order,
        exhaustive_order=exhaustive,
        orders_equal=orders_equal,
        relators_satisfied=relators_satisfied,
        generates_group=generates_group,
        abelianization=str(abelianization(presentation)),
        failures=failures,
        statistics=statistics,
    )
    if status != "completed":
        logger.warning(f"SL2(Z/{r}) enumeration hit a limit: {limit_reason}")
    elif failures:
        logger.error(f"SL2(Z/{r}) certification failed: {failures}")
    else:
        logger.info(f"SL2(Z/{r}) certified: order {index}")
    return report
