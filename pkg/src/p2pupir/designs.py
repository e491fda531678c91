"""Set systems describing which users share which memory spaces.

Points are dense integers ``0..v-1``; ``SetSystem.points`` holds their external
labels.  Blocks are kept as an ordered multiset of frozensets, so duplicate
blocks count separately in degrees and pair indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Point = int | str


class DesignError(ValueError):
    """A set system violates its invariants or an operation's preconditions."""

    def __init__(self, message: str, block_index: int | None = None):
        super().__init__(message)
        self.block_index = block_index


@dataclass(frozen=True)
class SetSystem:
    name: str
    points: tuple[str, ...]
    blocks: tuple[frozenset[int], ...]
    # A block equal to the whole point set is improper; some degenerate
    # fixtures (a lone shared space) need it anyway.
    allow_complete_blocks: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(str(p) for p in self.points))
        object.__setattr__(self, "blocks", tuple(frozenset(B) for B in self.blocks))
        v = len(self.points)
        if len(set(self.points)) != v:
            raise DesignError(f"{self.name}: duplicate point labels")
        if v < 2:
            raise DesignError(f"{self.name}: need at least 2 points")
        if not self.blocks:
            raise DesignError(f"{self.name}: no blocks")
        seen = set()
        for i, B in enumerate(self.blocks):
            if not B:
                raise DesignError(f"{self.name}: block {i} is empty", i)
            bad = [x for x in B if not (isinstance(x, (int, np.integer)) and 0 <= x < v)]
            if bad:
                raise DesignError(f"{self.name}: block {i} has unknown point {bad[0]!r}", i)
            if len(B) == v and not self.allow_complete_blocks:
                raise DesignError(f"{self.name}: block {i} is the full point set", i)
            seen |= B
        if len(seen) != v:
            missing = self.points[min(set(range(v)) - seen)]
            raise DesignError(f"{self.name}: point {missing} lies in no block")

    @classmethod
    def from_labels(cls, name: str, points: Sequence, blocks: Iterable[Iterable],
                    allow_complete_blocks: bool = False) -> SetSystem:
        labels = [str(p) for p in points]
        index = {p: i for i, p in enumerate(labels)}
        out = []
        for i, block in enumerate(blocks):
            members = [str(x) for x in block]
            if len(set(members)) != len(members):
                dup = next(x for x in members if members.count(x) > 1)
                raise DesignError(f"{name}: block {i} lists point {dup} twice", i)
            try:
                out.append(frozenset(index[x] for x in members))
            except KeyError as e:
                raise DesignError(f"{name}: block {i} has unknown point {e.args[0]}", i) from None
        return cls(name, tuple(labels), tuple(out), allow_complete_blocks)

    @property
    def v(self) -> int:
        return len(self.points)

    @property
    def b(self) -> int:
        return len(self.blocks)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    def pt(self, x: Point) -> int:
        """Resolve a label or dense id to a dense id."""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if 0 <= x < self.v:
                return int(x)
            raise DesignError(f"{self.name}: unknown point id {x}")
        try:
            return self._index[str(x)]
        except KeyError:
            raise DesignError(f"{self.name}: unknown point {x!r}") from None

    def pts(self, xs: Iterable[Point]) -> frozenset[int]:
        return frozenset(self.pt(x) for x in xs)

    def label(self, i: int) -> str:
        return self.points[i]

    def labels(self, xs: Iterable[int]) -> list[str]:
        return [self.points[i] for i in sorted(xs)]

    def block_index(self, spec: int | Iterable[Point]) -> int:
        """Resolve a block given by index or by its members (first match)."""
        if isinstance(spec, (int, np.integer)):
            if 0 <= spec < self.b:
                return int(spec)
            raise DesignError(f"{self.name}: no block {spec}")
        members = self.pts(spec)
        for i, B in enumerate(self.blocks):
            if B == members:
                return i
        raise DesignError(f"{self.name}: no block {sorted(self.labels(members))}")

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << x for x in B) for B in self.blocks)

    @cached_property
    def incidence(self) -> np.ndarray:
        N = np.zeros((self.v, self.b), dtype=np.int64)
        for j, B in enumerate(self.blocks):
            N[list(B), j] = 1
        return N

    @cached_property
    def blocks_through(self) -> tuple[tuple[int, ...], ...]:
        through = [[] for _ in range(self.v)]
        for j, B in enumerate(self.blocks):
            for x in B:
                through[x].append(j)
        return tuple(tuple(t) for t in through)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "points": list(self.points),
            "blocks": [[self.points[x] for x in sorted(B)] for B in self.blocks],
        }

    def relabel(self, perm: Sequence[int], name: str | None = None) -> SetSystem:
        """Move point ``i`` to position ``perm[i]`` (labels travel with points)."""
        points = [""] * self.v
        for i, j in enumerate(perm):
            points[j] = self.points[i]
        blocks = tuple(frozenset(perm[x] for x in B) for B in self.blocks)
        return SetSystem(name or self.name, tuple(points), blocks, self.allow_complete_blocks)


def load_design(path: str | Path) -> SetSystem:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DesignError(f"{path}: not valid JSON ({e})") from None
    return design_from_dict(data, default_name=Path(path).stem)


def design_from_dict(data: dict, default_name: str = "design") -> SetSystem:
    if not isinstance(data, dict) or "points" not in data or "blocks" not in data:
        raise DesignError("design needs 'points' and 'blocks'")
    return SetSystem.from_labels(data.get("name", default_name), data["points"], data["blocks"],
                                 bool(data.get("allow_complete_blocks", False)))


def dump_design(s: SetSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class DesignFlags:
    regular: bool
    uniform: bool
    covering: bool
    pbd: bool
    one_design: bool
    bibd: bool
    configuration: bool
    symmetric_bibd: bool
    supersimple: bool
    projective_plane_order: int | None

    @property
    def projective_plane(self) -> bool:
        return self.projective_plane_order is not None


@dataclass(frozen=True)
class DesignProfile:
    """Exact parameters of a set system.

    ``pair_index[i, j]`` counts blocks containing both ``i`` and ``j``; its
    diagonal holds the point degrees.
    """

    v: int
    b: int
    degree_of: tuple[int, ...]
    rank_of: tuple[int, ...]
    r: int | None
    k: int | None
    pair_index: np.ndarray = field(repr=False)
    lambda_: int | None
    lambda_min: int
    lambda_max: int
    mu_min: int | None
    mu_max: int | None
    flags: DesignFlags

    @property
    def params(self) -> tuple:
        """``(v, b, r, k, lambda)`` with ``None`` where not constant."""
        return (self.v, self.b, self.r, self.k, self.lambda_)

    def describe(self) -> str:
        f = self.flags
        if f.bibd:
            kind = f"({self.v},{self.b},{self.r},{self.k},{self.lambda_})-BIBD"
        elif f.configuration:
            kind = f"({self.v},{self.b},{self.r},{self.k})-configuration"
        elif f.one_design:
            kind = f"({self.v},{self.b},{self.r},{self.k})-1 design"
        elif f.pbd:
            kind = f"PBD on {self.v} points with lambda={self.lambda_}"
        elif f.covering:
            kind = f"covering design on {self.v} points, {self.b} blocks"
        else:
            kind = f"set system on {self.v} points, {self.b} blocks"
        extra = [name for name in ("symmetric_bibd", "supersimple") if getattr(f, name)]
        if f.projective_plane:
            extra.append(f"projective plane of order {f.projective_plane_order}")
        return kind + (" [" + ", ".join(extra) + "]" if extra else "")

    def to_dict(self) -> dict:
        f = self.flags
        return {
            "v": self.v, "b": self.b, "r": self.r, "k": self.k, "lambda": self.lambda_,
            "lambda_min": self.lambda_min, "lambda_max": self.lambda_max,
            "mu_min": self.mu_min, "mu_max": self.mu_max,
            "degrees": list(self.degree_of), "ranks": list(self.rank_of),
            "flags": {
                "regular": f.regular, "uniform": f.uniform, "covering": f.covering,
                "pbd": f.pbd, "one_design": f.one_design, "bibd": f.bibd,
                "configuration": f.configuration, "symmetric_bibd": f.symmetric_bibd,
                "supersimple": f.supersimple,
                "projective_plane_order": f.projective_plane_order,
            },
            "description": self.describe(),
        }


def _common(values) -> int | None:
    values = set(int(x) for x in values)
    return values.pop() if len(values) == 1 else None


def profile(s: SetSystem) -> DesignProfile:
    N = s.incidence
    pair = N @ N.T
    degrees = tuple(int(x) for x in pair.diagonal())
    ranks = tuple(len(B) for B in s.blocks)
    off = pair[~np.eye(s.v, dtype=bool)]
    lam_min, lam_max = int(off.min()), int(off.max())
    lam = lam_min if lam_min == lam_max and lam_min >= 1 else None
    if s.b >= 2:
        meet = (N.T @ N)[~np.eye(s.b, dtype=bool)]
        mu_min, mu_max = int(meet.min()), int(meet.max())
    else:
        mu_min = mu_max = None

    r, k = _common(degrees), _common(ranks)
    regular, uniform = r is not None, k is not None
    covering = lam_min >= 1
    pbd = lam is not None
    one_design = regular and uniform
    bibd = one_design and pbd
    configuration = one_design and lam_max <= 1
    symmetric = bibd and s.b == s.v
    supersimple = bibd and lam == 2 and (mu_max is None or mu_max <= 2)
    order = None
    if bibd and lam == 1 and s.b == s.v and k >= 3:
        n = k - 1
        if s.v == n * n + n + 1 and r == n + 1:
            order = n
    flags = DesignFlags(regular, uniform, covering, pbd, one_design, bibd, configuration,
                        symmetric, supersimple, order)
    return DesignProfile(s.v, s.b, degrees, ranks, r, k, pair, lam, lam_min, lam_max,
                         mu_min, mu_max, flags)


def dual(s: SetSystem) -> SetSystem:
    """Swap the roles of points and blocks.

    Dual point ``j`` is block ``j`` of ``s`` (labelled ``S<j+1>``); dual block
    ``i`` collects the blocks containing point ``i``.
    """
    for i, through in enumerate(s.blocks_through):
        if len(through) == s.b:
            raise DesignError(f"{s.name}: point {s.points[i]} lies in every block; dual block would be improper")
    labels = tuple(f"S{j + 1}" for j in range(s.b))
    blocks = tuple(frozenset(t) for t in s.blocks_through)
    return SetSystem(f"dual({s.name})", labels, blocks)


def develop_difference_set(base: Iterable[int], modulus: int, name: str | None = None) -> SetSystem:
    """Blocks ``base + i (mod modulus)`` for every ``i``."""
    base = sorted(set(int(x) % modulus for x in base)) if modulus > 0 else []
    if modulus < 3:
        raise DesignError("modulus must be at least 3")
    if not 2 <= len(base) < modulus:
        raise DesignError("base must have at least 2 and fewer than modulus elements")
    blocks = tuple(frozenset((x + i) % modulus for x in base) for i in range(modulus))
    name = name or f"dev{{{','.join(map(str, base))}}}mod{modulus}"
    return SetSystem(name, tuple(str(i) for i in range(modulus)), blocks)


@dataclass(frozen=True)
class AnonymityPartition:
    """Users grouped into anonymity sets; class ``l`` replaces base point ``l``."""

    classes: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        classes = tuple(tuple(str(x) for x in c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        if not classes or any(not c for c in classes):
            raise DesignError("anonymity classes must be nonempty")
        flat = [x for c in classes for x in c]
        if len(flat) != len(set(flat)):
            raise DesignError("anonymity classes overlap")

    @property
    def t_min(self) -> int:
        return min(len(c) for c in self.classes)

    @property
    def g(self) -> int:
        return len(self.classes)

    @classmethod
    def uniform(cls, g: int, t: int, prefix: str = "T") -> AnonymityPartition:
        return cls(tuple(tuple(f"{prefix}{l + 1}.{m + 1}" for m in range(t)) for l in range(g)))


def build_t_anonymity(base: SetSystem, partition: AnonymityPartition,
                      name: str | None = None) -> SetSystem:
    if not profile(base).flags.covering:
        raise DesignError(f"{base.name}: base is not a covering design")
    if partition.g != base.v:
        raise DesignError(f"partition has {partition.g} classes, base has {base.v} points")
    points = tuple(x for c in partition.classes for x in c)
    start = np.cumsum([0] + [len(c) for c in partition.classes])
    blocks = tuple(
        frozenset(i for l in B for i in range(start[l], start[l + 1])) for B in base.blocks
    )
    return SetSystem(name or f"{base.name}*t{partition.t_min}", points, blocks,
                     base.allow_complete_blocks)


def anonymity_sets_respected(s: SetSystem, partition: AnonymityPartition) -> bool:
    """Every class lies wholly inside or wholly outside every block."""
    for c in partition.classes:
        members = s.pts(c)
        for B in s.blocks:
            if not (members <= B or not members & B):
                return False
    return True


def is_covering(s: SetSystem) -> bool:
    covered = [0] * s.v
    for m in s.masks:
        for x in range(s.v):
            if m >> x & 1:
                covered[x] |= m
    full = (1 << s.v) - 1
    return all(c == full for c in covered)


def neighborhood(s: SetSystem, u: Point) -> frozenset[int]:
    u = s.pt(u)
    out: set[int] = set()
    for j in s.blocks_through[u]:
        out |= s.blocks[j]
    out.discard(u)
    return frozenset(out)


def remove_user(s: SetSystem, u: Point) -> tuple[SetSystem, list[int]]:
    """Delete ``u`` from every memory space.

    Returns the new system and the indices of the blocks whose key must be
    rotated.  Refuses when a block would become empty or improper.  Pairs not
    involving ``u`` keep all their blocks, so a covering design stays covering.
    """
    u = s.pt(u)
    rekey = list(s.blocks_through[u])
    if s.v - 1 < 2:
        raise DesignError(f"{s.name}: removing {s.points[u]} leaves fewer than 2 users")
    for j in rekey:
        if len(s.blocks[j]) < 2:
            raise DesignError(f"{s.name}: block {j} would become empty", j)
        if len(s.blocks[j]) - 1 == s.v - 1 and not s.allow_complete_blocks:
            raise DesignError(f"{s.name}: block {j} would become the full point set", j)

    def shift(x):
        return x - 1 if x > u else x

    blocks = tuple(frozenset(shift(x) for x in B if x != u) for B in s.blocks)
    points = s.points[:u] + s.points[u + 1:]
    try:
        out = SetSystem(s.name, points, blocks, s.allow_complete_blocks)
    except DesignError as e:
        raise DesignError(f"{s.name}: removing {s.points[u]} invalidates the design: {e}") from None
    return out, rekey


def greedy_cover(s: SetSystem) -> list[int]:
    """Blocks covering every point, picked greedily (ties: lowest index)."""
    uncovered = (1 << s.v) - 1
    chosen = []
    while uncovered:
        gains = [bin(m & uncovered).count("1") for m in s.masks]
        best = max(range(s.b), key=lambda j: (gains[j], -j))
        if gains[best] == 0:
            raise DesignError(f"{s.name}: blocks do not cover every point")
        chosen.append(best)
        uncovered &= ~s.masks[best]
    return chosen


def add_user(s: SetSystem, new_user: str) -> tuple[SetSystem, list[int]]:
    """Add a user to a greedy set cover of the memory spaces.

    Returns the new system and the (sorted) indices of the joined blocks.
    """
    new_user = str(new_user)
    if new_user in s._index:
        raise DesignError(f"{s.name}: user {new_user} already present")
    joined = sorted(greedy_cover(s))
    w = s.v
    blocks = tuple(B | {w} if j in joined else B for j, B in enumerate(s.blocks))
    return SetSystem(s.name, s.points + (new_user,), blocks, s.allow_complete_blocks), joined


def block_intersections(s: SetSystem) -> dict[tuple[int, int], int]:
    return {(i, j): len(s.blocks[i] & s.blocks[j]) for i, j in combinations(range(s.b), 2)}
