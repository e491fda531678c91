"""Seeded simulation of the P2P UPIR submission protocols.

The proxy-designated protocols (BIBD and covering-design versions, with an
optional query-hop extension) are stateless per query and are simulated in
batch with numpy.  ``choose_submission`` / ``apply_hops`` are the per-query
reference path; both consume the same counter-addressed draws (see ``rng``),
so a batch run and a query-by-query run give identical traces.

Draw layout per query stream: 0 source, 1 coin or proxy, 2 memory space,
3 proxy within the space, then ``4 + 3h`` (forward coin), ``5 + 3h`` (space)
and ``6 + 3h`` (next proxy) for hop ``h``.

The DBWM/DBWMS protocols keep a single slot per memory space and are
simulated round by round (``dbwm_round``).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import rng as _rng
from .designs import Point, SetSystem, profile

DIRECT = -1


class ProtocolError(ValueError):
    pass


class Kind(str, Enum):
    DBWM = "DBWM"
    DBWMS = "DBWMS"
    PD_BIBD_V1 = "PD_BIBD_V1"
    PD_BIBD_V2 = "PD_BIBD_V2"
    PD_COVER_V1 = "PD_COVER_V1"
    PD_COVER_V2 = "PD_COVER_V2"

    @property
    def proxy_designated(self) -> bool:
        return self.name.startswith("PD_")

    @property
    def proxy_never_source(self) -> bool:
        """Whether an observer of a posted query can rule out the proxy."""
        return self in (Kind.DBWM, Kind.PD_BIBD_V1, Kind.PD_COVER_V1)

    @classmethod
    def parse(cls, name) -> Kind:
        if isinstance(name, Kind):
            return name
        key = str(name).strip().upper().replace("-", "_")
        aliases = {"1": "DBWM", "P1": "DBWM", "2": "DBWMS", "P2": "DBWMS",
                   "3": "PD_BIBD_V1", "P3": "PD_BIBD_V1", "BIBD_V1": "PD_BIBD_V1",
                   "4": "PD_BIBD_V2", "P4": "PD_BIBD_V2", "BIBD_V2": "PD_BIBD_V2",
                   "5": "PD_COVER_V1", "P5": "PD_COVER_V1", "COVER_V1": "PD_COVER_V1",
                   "6": "PD_COVER_V2", "P6": "PD_COVER_V2", "COVER_V2": "PD_COVER_V2"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ProtocolError(f"unknown protocol {name!r}") from None


V1_STYLE = (Kind.PD_BIBD_V1, Kind.PD_COVER_V1)
V2_STYLE = (Kind.PD_BIBD_V2, Kind.PD_COVER_V2)


class Mode(IntEnum):
    SELF_DIRECT = 0
    SELF_VIA_SPACE = 1
    DELEGATED = 2


@dataclass(frozen=True)
class ProtocolSpec:
    kind: Kind
    p: float | None = None
    hop: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        if self.kind is Kind.DBWMS:
            if self.p is None or not 0 < self.p <= 1:
                raise ProtocolError("DBWMS needs a forwarding probability p in (0, 1]")
        elif self.p is not None:
            raise ProtocolError("p applies to DBWMS only")
        if self.hop is not None:
            if not self.kind.proxy_designated:
                raise ProtocolError("query hops apply to proxy-designated protocols only")
            if not 0 < self.hop <= 1:
                raise ProtocolError("p_hop must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "p": self.p, "hop": self.hop}

    @classmethod
    def from_dict(cls, d: dict) -> ProtocolSpec:
        return cls(d["kind"], d.get("p"), d.get("hop"))


def check_design(spec: ProtocolSpec, design: SetSystem) -> None:
    flags = profile(design).flags
    kind = spec.kind
    if kind in (Kind.PD_BIBD_V1, Kind.PD_BIBD_V2) and not flags.bibd:
        raise ProtocolError(f"{kind.value} needs a BIBD; {design.name} is not one")
    if kind in (Kind.PD_COVER_V1, Kind.PD_COVER_V2) and not flags.covering:
        raise ProtocolError(f"{kind.value} needs a covering design; {design.name} is not one")
    if kind in (Kind.DBWM, Kind.DBWMS) and not flags.configuration:
        raise ProtocolError(f"{kind.value} needs a configuration; {design.name} is not one")


@dataclass(frozen=True)
class SubmissionPlan:
    source: int
    proxy: int
    memory_space: int  # DIRECT (-1) when the source contacts the database itself
    mode: Mode


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    link_group: int
    source: int
    plan: SubmissionPlan
    hop_path: tuple[tuple[int, int], ...]

    @property
    def final_proxy(self) -> int:
        return self.hop_path[-1][1]


# -- workloads ---------------------------------------------------------------

@dataclass(frozen=True)
class LinkGroup:
    """``size`` linked queries from one source (``None``: drawn uniformly)."""

    size: int
    source: str | None = None


@dataclass(frozen=True)
class Workload:
    """Queries to simulate.

    Without groups every query is unlinked and has a fresh uniform source
    (its link group is its query id).  With groups, the sizes must add up to
    ``n_queries``; ``ordering`` is ``"sequential"`` or ``"round_robin"``.
    """

    n_queries: int
    groups: tuple[LinkGroup, ...] = ()
    ordering: str = "sequential"

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.n_queries < 1:
            raise ProtocolError("workload needs at least one query")
        if self.ordering not in ("sequential", "round_robin"):
            raise ProtocolError(f"unknown ordering {self.ordering!r}")
        if self.groups:
            if any(g.size < 1 for g in self.groups):
                raise ProtocolError("link groups must be nonempty")
            if sum(g.size for g in self.groups) != self.n_queries:
                raise ProtocolError("link group sizes must add up to n_queries")

    @property
    def uniform_sources(self) -> bool:
        return not self.groups

    @classmethod
    def linked(cls, *groups: LinkGroup, ordering: str = "sequential") -> Workload:
        return cls(sum(g.size for g in groups), groups, ordering)

    def to_dict(self) -> dict:
        return {"n_queries": self.n_queries, "ordering": self.ordering,
                "groups": [{"size": g.size, "source": g.source} for g in self.groups]}

    @classmethod
    def from_dict(cls, d: dict) -> Workload:
        groups = tuple(LinkGroup(int(g["size"]), g.get("source")) for g in d.get("groups", ()))
        return cls(int(d["n_queries"]), groups, d.get("ordering", "sequential"))


def assign_sources(design: SetSystem, workload: Workload, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth ``(source, link_group)`` per query id."""
    n = workload.n_queries
    if workload.uniform_sources:
        keys = _rng.stream_keys(seed, np.arange(n))
        return _rng.below_batch(keys, 0, design.v), np.arange(n, dtype=np.int64)
    group_source = []
    for g, grp in enumerate(workload.groups):
        if grp.source is None:
            group_source.append(_rng.Stream(seed, _rng.GROUP_NS + g).below(design.v, 0))
        else:
            group_source.append(design.pt(grp.source))
    if workload.ordering == "sequential":
        order = [g for g, grp in enumerate(workload.groups) for _ in range(grp.size)]
    else:
        left = [grp.size for grp in workload.groups]
        order = []
        while len(order) < n:
            for g in range(len(left)):
                if left[g]:
                    order.append(g)
                    left[g] -= 1
    groups = np.array(order, dtype=np.int64)
    return np.array(group_source, dtype=np.int64)[groups], groups


# -- lookup tables -----------------------------------------------------------

@dataclass(frozen=True)
class DesignTables:
    """Padded lookup tables for batch sampling (padding is -1)."""

    v: int
    r: np.ndarray          # (v,) degree
    through: np.ndarray    # (v, rmax) blocks through each point, ascending
    size: np.ndarray       # (b,) block sizes
    members: np.ndarray    # (b, kmax) sorted members
    pos: np.ndarray        # (v, b) position of point in block, -1 if absent
    lam: np.ndarray        # (v, v) blocks containing both (diagonal: degree)
    common: np.ndarray     # (v, v, lmax) those blocks, ascending
    incidence: np.ndarray  # (v, b) bool


@lru_cache(maxsize=64)
def design_tables(design: SetSystem) -> DesignTables:
    v, b = design.v, design.b
    r = np.array([len(t) for t in design.blocks_through], dtype=np.int64)
    through = np.full((v, r.max()), -1, dtype=np.int64)
    for x, t in enumerate(design.blocks_through):
        through[x, :len(t)] = t
    size = np.array([len(B) for B in design.blocks], dtype=np.int64)
    members = np.full((b, size.max()), -1, dtype=np.int64)
    pos = np.full((v, b), -1, dtype=np.int64)
    for j, B in enumerate(design.blocks):
        ms = sorted(B)
        members[j, :len(ms)] = ms
        pos[ms, j] = np.arange(len(ms))
    N = design.incidence.astype(bool)
    lam = (N.astype(np.int64) @ N.T.astype(np.int64))
    common = np.full((v, v, max(int(lam.max()), 1)), -1, dtype=np.int64)
    for i in range(v):
        for j in range(v):
            both = np.flatnonzero(N[i] & N[j])
            common[i, j, :len(both)] = both
    return DesignTables(v, r, through, size, members, pos, lam, common, N)


# -- per-query reference path -------------------------------------------------

def _other_member(design: SetSystem, space: int, writer: int, u: float) -> int:
    others = sorted(design.blocks[space] - {writer})
    return others[int(u * len(others))]


def choose_submission(spec: ProtocolSpec, design: SetSystem, source: Point,
                      stream: _rng.Stream) -> SubmissionPlan:
    """Where and through whom one query is submitted (draws 1-3 of ``stream``)."""
    kind = spec.kind
    if not kind.proxy_designated:
        raise ProtocolError(f"{kind.value} is stateful; use dbwm_round")
    s = design.pt(source)
    v = design.v
    if kind in (Kind.PD_BIBD_V1, Kind.PD_BIBD_V2):
        through = design.blocks_through[s]
        self_proxy = stream.random(1) < 1.0 / v
        if self_proxy and kind is Kind.PD_BIBD_V1:
            return SubmissionPlan(s, s, DIRECT, Mode.SELF_DIRECT)
        space = through[stream.below(len(through), 2)]
        if self_proxy:
            return SubmissionPlan(s, s, space, Mode.SELF_VIA_SPACE)
        proxy = _other_member(design, space, s, stream.random(3))
        return SubmissionPlan(s, proxy, space, Mode.DELEGATED)

    proxy = stream.below(v, 1)
    if proxy == s and kind is Kind.PD_COVER_V1:
        return SubmissionPlan(s, s, DIRECT, Mode.SELF_DIRECT)
    both = [j for j in design.blocks_through[s] if proxy in design.blocks[j]]
    space = both[stream.below(len(both), 2)]
    mode = Mode.SELF_VIA_SPACE if proxy == s else Mode.DELEGATED
    return SubmissionPlan(s, proxy, space, mode)


def apply_hops(plan: SubmissionPlan, p_hop: float, design: SetSystem,
               stream: _rng.Stream) -> tuple[tuple[int, int], ...]:
    """Path of (memory space, proxy) posts ending at the proxy that contacts DB."""
    if plan.mode is Mode.SELF_DIRECT:
        raise ProtocolError("a direct submission is never posted, so it cannot hop")
    if not 0 < p_hop <= 1:
        raise ProtocolError("p_hop must lie in (0, 1]")
    path = [(plan.memory_space, plan.proxy)]
    proxy, h = plan.proxy, 0
    while stream.random(4 + 3 * h) >= p_hop:
        through = design.blocks_through[proxy]
        space = through[stream.below(len(through), 5 + 3 * h)]
        proxy = _other_member(design, space, proxy, stream.random(6 + 3 * h))
        path.append((space, proxy))
        h += 1
    return tuple(path)


def simulate_query(spec: ProtocolSpec, design: SetSystem, source: Point, seed: int,
                   query_id: int) -> tuple[SubmissionPlan, tuple[tuple[int, int], ...]]:
    stream = _rng.Stream(seed, query_id)
    plan = choose_submission(spec, design, source, stream)
    if spec.hop is not None and plan.mode is not Mode.SELF_DIRECT:
        return plan, apply_hops(plan, spec.hop, design, stream)
    return plan, ((plan.memory_space, plan.proxy),)


def submission_distribution(spec: ProtocolSpec, design: SetSystem,
                            source: Point) -> dict[tuple[Mode, int, int], Fraction]:
    """Exact law of ``(mode, memory space, proxy)`` for one query from ``source``."""
    kind = spec.kind
    if not kind.proxy_designated:
        raise ProtocolError(f"{kind.value} has no per-query submission law")
    s = design.pt(source)
    v = design.v
    mine = [j for j, B in enumerate(design.blocks) if s in B]
    out: dict[tuple[Mode, int, int], Fraction] = {}

    def add(key, p):
        out[key] = out.get(key, Fraction(0)) + p

    if kind in (Kind.PD_BIBD_V1, Kind.PD_BIBD_V2):
        if kind is Kind.PD_BIBD_V1:
            add((Mode.SELF_DIRECT, DIRECT, s), Fraction(1, v))
        else:
            for j in mine:
                add((Mode.SELF_VIA_SPACE, j, s), Fraction(1, v * len(mine)))
        for j in mine:
            for p in design.blocks[j] - {s}:
                add((Mode.DELEGATED, j, p),
                    Fraction(v - 1, v) / len(mine) / (len(design.blocks[j]) - 1))
        return out

    for p in range(v):
        if p == s and kind is Kind.PD_COVER_V1:
            add((Mode.SELF_DIRECT, DIRECT, s), Fraction(1, v))
            continue
        both = [j for j in mine if p in design.blocks[j]]
        mode = Mode.SELF_VIA_SPACE if p == s else Mode.DELEGATED
        for j in both:
            add((mode, j, p), Fraction(1, v * len(both)))
    return out


# -- batch path ---------------------------------------------------------------

def _plan_batch(kind: Kind, T: DesignTables, src: np.ndarray, keys: np.ndarray):
    v = T.v
    if kind in (Kind.PD_BIBD_V1, Kind.PD_BIBD_V2):
        coin = _rng.uniform_batch(keys, 1) < 1.0 / v
        space = T.through[src, _rng.below_batch(keys, 2, T.r[src])]
        idx = _rng.below_batch(keys, 3, T.size[space] - 1)
        proxy = T.members[space, idx + (idx >= T.pos[src, space])]
        mode = np.full(len(src), Mode.DELEGATED, dtype=np.int8)
        proxy[coin] = src[coin]
        if kind is Kind.PD_BIBD_V1:
            mode[coin] = Mode.SELF_DIRECT
            space[coin] = DIRECT
        else:
            mode[coin] = Mode.SELF_VIA_SPACE
        return mode, space, proxy

    proxy = _rng.below_batch(keys, 1, v)
    slot = _rng.below_batch(keys, 2, T.lam[src, proxy])
    space = T.common[src, proxy, slot]
    me = proxy == src
    mode = np.where(me, Mode.SELF_VIA_SPACE, Mode.DELEGATED).astype(np.int8)
    if kind is Kind.PD_COVER_V1:
        mode[me] = Mode.SELF_DIRECT
        space[me] = DIRECT
    return mode, space, proxy


def _hops_batch(T: DesignTables, p_hop: float, keys, mode, space, proxy):
    n = len(mode)
    cur = proxy.copy()
    active = np.flatnonzero(mode != Mode.SELF_DIRECT)
    levels = []
    h = 0
    while len(active):
        k = keys[active]
        go_on = _rng.uniform_batch(k, 4 + 3 * h) >= p_hop
        active, k = active[go_on], k[go_on]
        if not len(active):
            break
        w = cur[active]
        sp = T.through[w, _rng.below_batch(k, 5 + 3 * h, T.r[w])]
        idx = _rng.below_batch(k, 6 + 3 * h, T.size[sp] - 1)
        nxt = T.members[sp, idx + (idx >= T.pos[w, sp])]
        levels.append((active, sp, nxt))
        cur[active] = nxt
        h += 1
    lengths = np.ones(n, dtype=np.int64)
    for idx, _, _ in levels:
        lengths[idx] += 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    hop_space = np.empty(offsets[-1], dtype=np.int64)
    hop_proxy = np.empty(offsets[-1], dtype=np.int64)
    hop_space[offsets[:-1]] = space
    hop_proxy[offsets[:-1]] = proxy
    for h, (idx, sp, nxt) in enumerate(levels, start=1):
        hop_space[offsets[idx] + h] = sp
        hop_proxy[offsets[idx] + h] = nxt
    return offsets, hop_space, hop_proxy


# -- traces -------------------------------------------------------------------

@dataclass(eq=False)
class Trace:
    """Columnar simulation output; ``records()`` yields ``QueryRecord`` views."""

    design: SetSystem
    spec: ProtocolSpec
    seed: int
    workload: Workload
    link_group: np.ndarray
    source: np.ndarray
    mode: np.ndarray
    space: np.ndarray
    proxy: np.ndarray
    hop_offsets: np.ndarray
    hop_space: np.ndarray
    hop_proxy: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.source)

    @property
    def hop_lengths(self) -> np.ndarray:
        return np.diff(self.hop_offsets)

    @property
    def final_proxy(self) -> np.ndarray:
        return self.hop_proxy[self.hop_offsets[1:] - 1]

    def record(self, i: int) -> QueryRecord:
        plan = SubmissionPlan(int(self.source[i]), int(self.proxy[i]), int(self.space[i]),
                              Mode(int(self.mode[i])))
        a, b = self.hop_offsets[i], self.hop_offsets[i + 1]
        path = tuple(zip(self.hop_space[a:b].tolist(), self.hop_proxy[a:b].tolist()))
        return QueryRecord(i, int(self.link_group[i]), plan.source, plan, path)

    def records(self) -> Iterator[QueryRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def identical_to(self, other: Trace) -> bool:
        cols = ("link_group", "source", "mode", "space", "proxy",
                "hop_offsets", "hop_space", "hop_proxy")
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in cols)

    @classmethod
    def from_records(cls, design, spec, seed, workload, records: Sequence[QueryRecord],
                     meta: dict | None = None) -> Trace:
        records = sorted(records, key=lambda r: r.query_id)
        lengths = [len(r.hop_path) for r in records]
        offsets = np.zeros(len(records) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = [h for r in records for h in r.hop_path]
        col = lambda xs, dt=np.int64: np.array(xs, dtype=dt)
        return cls(design, spec, seed, workload,
                   col([r.link_group for r in records]), col([r.source for r in records]),
                   col([int(r.plan.mode) for r in records], np.int8),
                   col([r.plan.memory_space for r in records]),
                   col([r.plan.proxy for r in records]), offsets,
                   col([h[0] for h in flat]), col([h[1] for h in flat]), dict(meta or {}))


def run_workload(spec: ProtocolSpec, design: SetSystem, workload: Workload, seed: int) -> Trace:
    check_design(spec, design)
    if not spec.kind.proxy_designated:
        return _run_dbwm(spec, design, workload, seed)
    source, groups = assign_sources(design, workload, seed)
    T = design_tables(design)
    keys = _rng.stream_keys(seed, np.arange(workload.n_queries))
    mode, space, proxy = _plan_batch(spec.kind, T, source, keys)
    if spec.hop is not None:
        offsets, hop_space, hop_proxy = _hops_batch(T, spec.hop, keys, mode, space, proxy)
    else:
        offsets = np.arange(len(source) + 1, dtype=np.int64)
        hop_space, hop_proxy = space.copy(), proxy.copy()
    return Trace(design, spec, seed, workload, groups, source, mode, space, proxy,
                 offsets, hop_space, hop_proxy)


# -- DBWM / DBWMS -------------------------------------------------------------

@dataclass
class Slot:
    kind: str  # "query" or "answer"
    owner: int
    query_id: int


@dataclass
class DbwmState:
    """One slot per memory space (``None`` is garbage) plus pending queries."""

    design: SetSystem
    spec: ProtocolSpec
    slots: list
    pending: list
    link_group: dict = field(default_factory=dict)
    retry_budget: int = 0
    rounds: int = 0
    failed_rounds: int = 0

    @classmethod
    def empty(cls, spec: ProtocolSpec, design: SetSystem, retry_budget: int | None = None) -> DbwmState:
        if spec.kind not in (Kind.DBWM, Kind.DBWMS):
            raise ProtocolError("DbwmState is for DBWM/DBWMS")
        rmax = max(len(t) for t in design.blocks_through)
        return cls(design, spec, [None] * design.b, [deque() for _ in range(design.v)],
                   retry_budget=retry_budget or 4 * rmax)

    def enqueue(self, user: int, query_id: int, link_group: int) -> None:
        self.pending[user].append(query_id)
        self.link_group[query_id] = link_group


def dbwm_round(state: DbwmState, acting_user: Point, rng) -> list[QueryRecord]:
    """One protocol run by ``acting_user``; returns the queries it forwarded.

    ``rng`` needs ``below(n)`` and ``random()``.  Restarts are bounded by
    ``state.retry_budget``; running out counts as a failed round.
    """
    d = state.design
    u = d.pt(acting_user)
    through = d.blocks_through[u]
    pending = state.pending[u]
    forwarded = []

    def emit(slot: Slot, space: int, mode: Mode):
        plan = SubmissionPlan(slot.owner, u, space, mode)
        forwarded.append(QueryRecord(slot.query_id, state.link_group[slot.query_id],
                                     slot.owner, plan, ((space, u),)))

    def post(space: int):
        q = pending.popleft()
        state.slots[space] = Slot("query", u, q)

    state.rounds += 1
    for _ in range(state.retry_budget):
        space = through[rng.below(len(through))]
        slot = state.slots[space]
        if slot is None:                                   # (a)
            if pending:
                post(space)
            return forwarded
        if slot.kind == "query" and slot.owner != u:       # (b)
            emit(slot, space, Mode.DELEGATED)
            state.slots[space] = Slot("answer", slot.owner, slot.query_id)
        elif slot.kind == "query":                         # (c) / 2'(c)
            if state.spec.kind is Kind.DBWMS and rng.random() < state.spec.p:
                emit(slot, space, Mode.SELF_VIA_SPACE)
                state.slots[space] = Slot("answer", u, slot.query_id)
        elif slot.owner != u:                              # (d)
            pass
        else:                                              # (e)
            state.slots[space] = None
            if pending:
                post(space)
            return forwarded
        if not pending:
            return forwarded
    state.failed_rounds += 1
    return forwarded


def _run_dbwm(spec: ProtocolSpec, design: SetSystem, workload: Workload, seed: int,
              max_rounds: int | None = None) -> Trace:
    source, groups = assign_sources(design, workload, seed)
    state = DbwmState.empty(spec, design)
    for q, (s, g) in enumerate(zip(source.tolist(), groups.tolist())):
        state.enqueue(s, q, g)
    n = workload.n_queries
    max_rounds = max_rounds or 10_000 + 500 * n
    done: list[QueryRecord] = []
    t = 0
    while len(done) < n:
        if t >= max_rounds:
            raise ProtocolError(f"DBWM simulation did not finish within {max_rounds} rounds")
        stream = _rng.SequentialStream(seed, _rng.ROUND_NS + t)
        done.extend(dbwm_round(state, stream.below(design.v), stream))
        t += 1
    meta = {"rounds": state.rounds, "failed_rounds": state.failed_rounds}
    return Trace.from_records(design, spec, seed, workload, done, meta)


# -- observer views -----------------------------------------------------------

@dataclass(frozen=True)
class DbView:
    query_id: np.ndarray
    proxy: np.ndarray
    link_group: np.ndarray


@dataclass(frozen=True)
class UserView:
    """Posts readable by one user (or a coalition, with ``seen_by`` columns)."""

    query_id: np.ndarray
    hop: np.ndarray
    memory_space: np.ndarray
    proxy: np.ndarray
    link_group: np.ndarray
    members: tuple[int, ...] = ()
    seen_by: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.query_id)

    def rows(self) -> list[tuple[int, int, int, int, int]]:
        return list(zip(self.query_id.tolist(), self.hop.tolist(), self.memory_space.tolist(),
                        self.proxy.tolist(), self.link_group.tolist()))


def db_view(trace: Trace) -> DbView:
    return DbView(np.arange(len(trace)), trace.final_proxy, trace.link_group.copy())


def _posts(trace: Trace):
    qid = np.repeat(np.arange(len(trace)), trace.hop_lengths)
    hop = np.arange(len(qid)) - trace.hop_offsets[qid]
    return qid, hop


def _visible(trace: Trace, observer: int, qid: np.ndarray) -> np.ndarray:
    inc = design_tables(trace.design).incidence
    sp = trace.hop_space
    seen = np.zeros(len(sp), dtype=bool)
    posted = sp != DIRECT
    seen[posted] = inc[observer, sp[posted]]
    return seen & (trace.source[qid] != observer)


def user_view(trace: Trace, observer: Point) -> UserView:
    u = trace.design.pt(observer)
    qid, hop = _posts(trace)
    m = _visible(trace, u, qid)
    return UserView(qid[m], hop[m], trace.hop_space[m], trace.hop_proxy[m],
                    trace.link_group[qid[m]], (u,), np.ones((int(m.sum()), 1), dtype=bool))


def coalition_view(trace: Trace, coalition: Iterable[Point]) -> UserView:
    members = tuple(sorted(trace.design.pts(coalition)))
    if not members:
        raise ProtocolError("empty coalition")
    qid, hop = _posts(trace)
    seen = np.stack([_visible(trace, u, qid) for u in members], axis=1)
    m = seen.any(axis=1)
    return UserView(qid[m], hop[m], trace.hop_space[m], trace.hop_proxy[m],
                    trace.link_group[qid[m]], members, seen[m])


# -- export -------------------------------------------------------------------

def trace_header(trace: Trace) -> dict:
    return {"type": "header", "design": trace.design.name, "protocol": trace.spec.to_dict(),
            "seed": trace.seed, "workload": trace.workload.to_dict(), "n_records": len(trace),
            **({"meta": trace.meta} if trace.meta else {})}


def trace_lines(trace: Trace, redact: bool = False) -> Iterator[str]:
    """Newline-delimited JSON: a header line, then one line per query.

    Points are written by label and memory spaces by index (``null`` for a
    direct submission).  ``redact`` keeps only what the database sees.
    """
    d = trace.design
    yield json.dumps(trace_header(trace) | {"redacted": redact})
    if redact:
        for q, p, g in zip(range(len(trace)), trace.final_proxy.tolist(), trace.link_group.tolist()):
            yield json.dumps({"query_id": q, "proxy": d.points[p], "link_group": g})
        return
    for rec in trace.records():
        sp = rec.plan.memory_space
        yield json.dumps({
            "query_id": rec.query_id,
            "link_group": rec.link_group,
            "source": d.points[rec.source],
            "plan": {"source": d.points[rec.source], "proxy": d.points[rec.plan.proxy],
                     "memory_space": None if sp == DIRECT else sp, "mode": rec.plan.mode.name},
            "hop_path": [[None if s == DIRECT else s, d.points[p]] for s, p in rec.hop_path],
        })


def trace_from_lines(lines: Iterable[str], design: SetSystem) -> Trace:
    it = (ln for ln in lines if ln.strip())
    header = json.loads(next(it))
    if header.get("type") != "header":
        raise ProtocolError("trace file lacks a header line")
    if header.get("redacted"):
        raise ProtocolError("redacted traces carry no ground truth and cannot be reloaded")
    if header["design"] != design.name:
        raise ProtocolError(f"trace was produced on {header['design']!r}, not {design.name!r}")
    spec = ProtocolSpec.from_dict(header["protocol"])
    records = []
    for ln in it:
        r = json.loads(ln)
        sp = r["plan"]["memory_space"]
        plan = SubmissionPlan(design.pt(r["plan"]["source"]), design.pt(r["plan"]["proxy"]),
                              DIRECT if sp is None else sp, Mode[r["plan"]["mode"]])
        path = tuple((DIRECT if s is None else s, design.pt(p)) for s, p in r["hop_path"])
        records.append(QueryRecord(r["query_id"], r["link_group"], plan.source, plan, path))
    return Trace.from_records(design, spec, header["seed"], Workload.from_dict(header["workload"]),
                              records, header.get("meta"))
