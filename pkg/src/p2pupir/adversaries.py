"""Attacks on source anonymity by the database and by coalitions of users."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

from . import rng as _rng
from .designs import DesignError, Point, SetSystem, neighborhood, profile
from .protocols import Kind, ProtocolSpec, V1_STYLE, V2_STYLE, choose_submission


class InconsistentObservations(ValueError):
    """An attack eliminated every candidate: the observations cannot be linked."""


@dataclass(frozen=True)
class Step:
    observation: tuple          # (proxy,) for the database, (space, proxy) for users
    possible: frozenset[int]    # sources consistent with this observation alone
    eliminated: frozenset[int]  # removed from the running candidate set
    remaining: frozenset[int]


@dataclass(frozen=True)
class CandidateSet:
    candidates: frozenset[int]
    derivation: tuple[Step, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __contains__(self, x) -> bool:
        return x in self.candidates


def _intersect(start: frozenset[int], steps: Iterable[tuple[tuple, frozenset[int]]]) -> CandidateSet:
    current = start
    derivation = []
    for obs, possible in steps:
        nxt = current & possible
        derivation.append(Step(obs, possible, current - nxt, nxt))
        current = nxt
    if not current:
        raise InconsistentObservations("no user is consistent with every observation")
    return CandidateSet(current, tuple(derivation))


def db_candidates(design: SetSystem, kind, proxy: Point) -> CandidateSet:
    """Sources the database cannot rule out after seeing one proxy."""
    kind = Kind.parse(kind)
    j = design.pt(proxy)
    if kind is Kind.DBWM:
        possible = neighborhood(design, j)
    elif kind is Kind.DBWMS:
        possible = neighborhood(design, j) | {j}
    else:
        possible = frozenset(range(design.v))
    everyone = frozenset(range(design.v))
    return _intersect(everyone, [((j,), possible)])


def db_intersection_attack(design: SetSystem, kind, proxies: Sequence[Point]) -> CandidateSet:
    if not proxies:
        raise ValueError("need at least one observed proxy")
    steps = []
    for p in proxies:
        one = db_candidates(design, kind, p)
        steps.append(((design.pt(p),), one.candidates))
    return _intersect(frozenset(range(design.v)), steps)


def coalition_candidates(design: SetSystem, kind, observations: Sequence[tuple[int, Point]],
                         coalition: Iterable[Point]) -> CandidateSet:
    """Sources consistent with linked posts ``(memory space, proxy)`` read by ``coalition``."""
    kind = Kind.parse(kind)
    C = design.pts(coalition)
    if not C:
        raise ValueError("coalition must be nonempty")
    steps = []
    for space, proxy in observations:
        h = design.block_index(space)
        S = design.blocks[h]
        j = design.pt(proxy)
        if j not in S:
            raise ValueError(f"proxy {design.points[j]} is not in memory space {h}")
        if not S & C:
            raise ValueError(f"memory space {h} is outside the coalition's query sphere")
        possible = S - C
        if kind.proxy_never_source:
            possible = possible - {j}
        steps.append(((h, j), frozenset(possible)))
    return _intersect(frozenset(range(design.v)) - C, steps)


# -- (rho, c, kappa)-anonymity -------------------------------------------------

@dataclass(frozen=True)
class Witness:
    source: int
    blocks: tuple[int, ...]
    proxies: tuple[int, ...]
    coalition: tuple[int, ...]


@dataclass(frozen=True)
class AnonymityReport:
    design: str
    kind: Kind
    rho: int
    c: int
    kappa: int
    witness: Witness | None
    evaluated: int
    partial: bool = False

    def to_dict(self, design: SetSystem | None = None) -> dict:
        name = (lambda xs: [design.points[x] for x in xs]) if design else list
        w = self.witness
        return {
            "design": self.design, "protocol": self.kind.value, "rho": self.rho, "c": self.c,
            "kappa": self.kappa, "evaluated": self.evaluated, "partial": self.partial,
            "witness": None if w is None else {
                "source": name([w.source])[0], "blocks": list(w.blocks),
                "proxies": name(w.proxies), "coalition": name(w.coalition)},
        }


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _proxy_choices(kind: Kind, block: frozenset[int], source: int) -> list[int]:
    return sorted(block - {source}) if kind.proxy_never_source else sorted(block)


def anonymity_search_size(design: SetSystem, kind, rho: int, c: int) -> int:
    kind = Kind.parse(kind)
    total = 0
    coalitions = math.comb(design.v - 1, c)
    for i in range(design.v):
        per_block = [len(_proxy_choices(kind, design.blocks[j], i)) for j in design.blocks_through[i]]
        total += sum(per_block) ** rho * coalitions
    return total


def measure_anonymity(design: SetSystem, kind, rho: int, c: int,
                      budget: int = 50_000_000) -> AnonymityReport:
    """Smallest candidate set any size-``c`` coalition can force, by exhaustive search.

    Enumerates every source, every length-``rho`` sequence of its memory spaces
    (repetition allowed), every admissible proxy per post and every coalition
    not containing the source that reads all ``rho`` posts.  Enumeration is
    lexicographic and only strict improvements replace the witness, so the
    witness is the lexicographically smallest one.  If no coalition reads the
    posts (e.g. ``c = 0``) nothing is learned and ``kappa = v``.
    """
    kind = Kind.parse(kind)
    v = design.v
    if rho < 1:
        raise ValueError("rho must be at least 1")
    if not 0 <= c <= v - 1:
        raise ValueError("c must lie in [0, v-1]")
    masks = design.masks
    full = (1 << v) - 1
    best, witness, evaluated, partial = v, None, 0, False
    drop_proxy = kind.proxy_never_source

    for i in range(v):
        others = [x for x in range(v) if x != i]
        coalitions = [(C, sum(1 << x for x in C)) for C in combinations(others, c)]
        for blocks in product(design.blocks_through[i], repeat=rho):
            inter = full
            for h in blocks:
                inter &= masks[h]
            # coalitions reading every post; the proxies do not affect visibility
            seeing = [(C, cm) for C, cm in coalitions if all(cm & masks[h] for h in blocks)]
            choices = [_proxy_choices(kind, design.blocks[h], i) for h in blocks]
            for proxies in product(*choices):
                base = inter
                if drop_proxy:
                    for p in proxies:
                        base &= ~(1 << p)
                for C, cm in seeing:
                    evaluated += 1
                    size = _popcount(base & ~cm)
                    if size < best:
                        best = size
                        witness = Witness(i, blocks, proxies, C)
                if evaluated > budget:
                    partial = True
                    return AnonymityReport(design.name, kind, rho, c, best, witness, evaluated, partial)
    return AnonymityReport(design.name, kind, rho, c, best, witness, evaluated, partial)


def replay_witness(design: SetSystem, report: AnonymityReport) -> int:
    w = report.witness
    if w is None:
        return design.v
    obs = list(zip(w.blocks, w.proxies))
    return len(coalition_candidates(design, report.kind, obs, w.coalition))


# -- posteriors ----------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorTable:
    observer: int
    memory_space: int
    proxy: int
    probabilities: dict[int, Fraction]

    def as_float(self) -> dict[int, float]:
        return {i: float(p) for i, p in self.probabilities.items()}


def theoretical_posterior(design: SetSystem, kind, memory_space, proxy: Point,
                          observer: Point) -> PosteriorTable:
    """Closed-form source distribution seen by ``observer`` for a post in a regular PBD.

    Sources are weighted by ``1 / lambda_ij`` (``lambda_jj = r``), which gives
    ``lambda / (lambda + r(|S| - 2))`` for the proxy and ``r / (...)`` for the
    others under version 2, and the uniform ``1 / (|S| - 2)`` over non-proxies
    under version 1.  When the observer is the proxy the same weighting runs
    over ``|S| - 1`` candidates.
    """
    kind = Kind.parse(kind)
    if kind not in V1_STYLE + V2_STYLE:
        raise ValueError(f"no closed-form posterior for {kind.value}")
    prof = profile(design)
    if not (prof.flags.pbd and prof.flags.regular):
        raise DesignError(f"{design.name} is not a regular PBD; the closed-form posterior does not apply")
    h = design.block_index(memory_space)
    S = design.blocks[h]
    j, t = design.pt(proxy), design.pt(observer)
    if j not in S or t not in S:
        raise ValueError("observer and proxy must both belong to the memory space")
    r, lam = prof.r, prof.lambda_
    candidates = sorted(S - {t})
    if kind in V1_STYLE:
        weights = {i: Fraction(0) if i == j else Fraction(1, lam) for i in candidates}
    else:
        weights = {i: Fraction(1, r) if i == j else Fraction(1, lam) for i in candidates}
    total = sum(weights.values())
    return PosteriorTable(t, h, j, {i: w / total for i, w in weights.items()})


# -- average case ----------------------------------------------------------------

def _identifies(design: SetSystem, kind: Kind, observations, C: frozenset[int], source: int) -> bool:
    visible = [(h, p) for h, p in observations if h >= 0 and design.blocks[h] & C]
    if not visible:
        return design.v - len(C) == 1
    try:
        cand = coalition_candidates(design, kind, visible, C)
    except InconsistentObservations:
        return False
    return cand.candidates == {source}


def coalition_success_probability(design: SetSystem, kind, observations: Sequence[tuple[int, Point]],
                                  c: int, source: Point) -> Fraction:
    """Exact chance that a uniform size-``c`` coalition (source excluded) pins down the source."""
    kind = Kind.parse(kind)
    s = design.pt(source)
    obs = [(h if h < 0 else design.block_index(h), design.pt(p)) for h, p in observations]
    others = [x for x in range(design.v) if x != s]
    hits = total = 0
    for C in combinations(others, c):
        total += 1
        hits += _identifies(design, kind, obs, frozenset(C), s)
    return Fraction(hits, total)


@dataclass(frozen=True)
class SuccessEstimate:
    estimate: float
    stderr: float
    n_samples: int
    hits: int


def random_coalition_success_rate(design: SetSystem, kind, rho: int, c: int, source: Point,
                                  n_samples: int, seed: int,
                                  observations: Sequence[tuple[int, Point]] | None = None) -> SuccessEstimate:
    """Monte Carlo chance that a random coalition identifies ``source`` exactly.

    Each sample draws ``rho`` submissions from the protocol (unless fixed
    ``observations`` are given) and a uniform coalition of ``c`` users other
    than the source.  Posts the coalition cannot read are ignored; direct
    submissions are never readable.
    """
    kind = Kind.parse(kind)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    s = design.pt(source)
    spec = ProtocolSpec(kind)
    others = np.array([x for x in range(design.v) if x != s])
    fixed = None
    if observations is not None:
        fixed = [(h if h < 0 else design.block_index(h), design.pt(p)) for h, p in observations]
    gen = np.random.default_rng([seed, s, rho, c])
    hits = 0
    for n in range(n_samples):
        if fixed is None:
            obs = []
            for q in range(rho):
                plan = choose_submission(spec, design, s, _rng.Stream(seed, n * rho + q))
                obs.append((plan.memory_space, plan.proxy))
        else:
            obs = fixed
        C = frozenset(gen.choice(others, size=c, replace=False).tolist()) if c else frozenset()
        hits += _identifies(design, kind, obs, C, s)
    est = hits / n_samples
    return SuccessEstimate(est, math.sqrt(est * (1 - est) / n_samples), n_samples, hits)
