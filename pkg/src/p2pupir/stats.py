"""Monte Carlo estimators and per-cell tolerance verdicts for traces.

A cell with expected probability ``p`` estimated from ``n`` samples passes
when ``|p_hat - p| <= z * sqrt(p (1 - p) / n)``.  Cells expected to be exactly
0 or 1 therefore must match exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adversaries import theoretical_posterior
from .designs import Point, SetSystem
from .protocols import Mode, ProtocolSpec, Trace, Workload, run_workload

MIN_CONDITIONED = 100


class InsufficientSamples(ValueError):
    pass


@dataclass
class FrequencyTable:
    """Counts of ``row`` outcomes given ``col`` outcomes; probabilities are per column."""

    row_labels: list[str]
    col_labels: list[str]
    counts: np.ndarray
    row_axis: str = "source"
    col_axis: str = "proxy"

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def probabilities(self) -> np.ndarray:
        totals = self.col_totals
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, self.counts / np.maximum(totals, 1), np.nan)

    def to_dict(self) -> dict:
        return {"row_axis": self.row_axis, "col_axis": self.col_axis,
                "rows": self.row_labels, "cols": self.col_labels,
                "counts": self.counts.tolist(), "n": self.n}

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow([self.row_axis, self.col_axis, "count", "probability"])
        P = self.probabilities
        for i, rl in enumerate(self.row_labels):
            for j, cl in enumerate(self.col_labels):
                w.writerow([rl, cl, int(self.counts[i, j]), f"{P[i, j]:.10g}"])
        return out.getvalue()


@dataclass
class ToleranceVerdict:
    statistic: str
    max_abs_deviation: float
    z: float
    passed: bool
    cells: list[dict] = field(default_factory=list)

    def failures(self) -> list[dict]:
        return [c for c in self.cells if not c["pass"]]

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "max_abs_deviation": self.max_abs_deviation,
                "z": self.z, "pass": self.passed, "cells": self.cells}

    def to_csv(self) -> str:
        out = io.StringIO()
        if self.cells:
            w = csv.DictWriter(out, fieldnames=list(self.cells[0]))
            w.writeheader()
            w.writerows(self.cells)
        return out.getvalue()

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.statistic}: max |dev| {self.max_abs_deviation:.3g} (z={self.z})"


def per_cell_verdict(statistic: str, observed: np.ndarray, expected: np.ndarray, n: np.ndarray,
                     z: float = 4.0, labels: Sequence[tuple] | None = None) -> ToleranceVerdict:
    observed, expected = np.broadcast_arrays(np.asarray(observed, float), np.asarray(expected, float))
    n = np.broadcast_to(np.asarray(n, float), observed.shape).ravel()
    observed, expected = observed.ravel(), expected.ravel()
    bound = z * np.sqrt(expected * (1 - expected) / n)
    dev = np.abs(observed - expected)
    # exact cells (p in {0, 1}) tolerate float noise only
    ok = dev <= bound + 1e-12
    cells = []
    for idx in range(len(observed)):
        cell = {"cell": list(labels[idx]) if labels else idx, "observed": float(observed[idx]),
                "expected": float(expected[idx]), "n": int(n[idx]), "deviation": float(dev[idx]),
                "bound": float(bound[idx]), "pass": bool(ok[idx])}
        cells.append(cell)
    return ToleranceVerdict(statistic, float(dev.max()) if len(dev) else 0.0, z, bool(ok.all()), cells)


def two_sample_verdict(statistic: str, counts_a: np.ndarray, counts_b: np.ndarray, z: float = 4.0,
                       labels: Sequence[tuple] | None = None) -> ToleranceVerdict:
    """Per-cell check that two multinomial samples share one distribution (pooled variance)."""
    a, b = np.asarray(counts_a, float).ravel(), np.asarray(counts_b, float).ravel()
    na, nb = a.sum(), b.sum()
    pa, pb = a / na, b / nb
    pooled = (a + b) / (na + nb)
    bound = z * np.sqrt(pooled * (1 - pooled) * (1 / na + 1 / nb))
    dev = np.abs(pa - pb)
    ok = dev <= bound + 1e-12
    cells = [{"cell": list(labels[i]) if labels else i, "p_a": float(pa[i]), "p_b": float(pb[i]),
              "deviation": float(dev[i]), "bound": float(bound[i]), "pass": bool(ok[i])}
             for i in range(len(a))]
    return ToleranceVerdict(statistic, float(dev.max()), z, bool(ok.all()), cells)


def estimate_source_given_proxy(trace: Trace) -> FrequencyTable:
    """Empirical ``Pr[S = i | P = j]`` using the proxy that contacted the database."""
    if len(trace) == 0:
        raise InsufficientSamples("empty trace")
    v = trace.design.v
    counts = np.zeros((v, v), dtype=np.int64)
    np.add.at(counts, (trace.source, trace.final_proxy), 1)
    labels = list(trace.design.points)
    return FrequencyTable(labels, labels, counts)


def verify_db_anonymity(design: SetSystem, spec: ProtocolSpec, n_trials: int, seed: int,
                        z: float = 4.0) -> ToleranceVerdict:
    """Check ``Pr[S = i | P = j] = 1/v`` for every cell on a uniform-source run."""
    if not spec.kind.proxy_designated:
        raise ValueError(f"{spec.kind.value} does not claim anonymity against the database")
    if n_trials / design.v < MIN_CONDITIONED:
        raise InsufficientSamples(f"need at least {MIN_CONDITIONED * design.v} trials")
    trace = run_workload(spec, design, Workload(n_trials), seed)
    return uniformity_verdict(trace, z)


def uniformity_verdict(trace: Trace, z: float = 4.0) -> ToleranceVerdict:
    table = estimate_source_given_proxy(trace)
    v = trace.design.v
    n_col = np.broadcast_to(table.col_totals, table.counts.shape)
    labels = [(s, p) for s in table.row_labels for p in table.col_labels]
    return per_cell_verdict(f"Pr[S|P] on {trace.design.name}/{trace.spec.kind.value}",
                            table.probabilities, np.full(table.counts.shape, 1 / v), n_col, z, labels)


@dataclass
class PosteriorEstimate:
    table: FrequencyTable
    verdict: ToleranceVerdict
    theoretical: dict[str, float]
    n_conditioned: int


def estimate_observer_posterior(trace: Trace, observer: Point, memory_space, proxy: Point,
                                z: float = 4.0, min_conditioned: int = MIN_CONDITIONED) -> PosteriorEstimate:
    """Empirical source law for posts ``observer`` reads in ``memory_space`` with ``proxy``.

    Conditions on the initial post of queries not issued by the observer.
    """
    d = trace.design
    if trace.spec.hop is not None:
        raise ValueError("the closed-form posterior assumes no query hops")
    t, j = d.pt(observer), d.pt(proxy)
    h = d.block_index(memory_space)
    theory = theoretical_posterior(d, trace.spec.kind, h, j, t)
    mask = (trace.space == h) & (trace.proxy == j) & (trace.source != t)
    n = int(mask.sum())
    if n < min_conditioned:
        raise InsufficientSamples(f"conditioning event seen {n} times (< {min_conditioned})")
    sources = sorted(theory.probabilities)
    counts = np.array([[int((trace.source[mask] == i).sum())] for i in sources], dtype=np.int64)
    if counts.sum() != n:
        raise ValueError("trace has sources outside the memory space; not a protocol trace")
    label = f"{d.points[j]}@S{h}"
    table = FrequencyTable([d.points[i] for i in sources], [label], counts)
    expected = np.array([float(theory.probabilities[i]) for i in sources])
    verdict = per_cell_verdict(f"posterior of {d.points[t]} for {label}", counts[:, 0] / n, expected,
                               n, z, [(d.points[i],) for i in sources])
    return PosteriorEstimate(table, verdict, {d.points[i]: float(p) for i, p in theory.probabilities.items()}, n)


@dataclass
class HopStats:
    mean: float
    variance: float
    n: int
    expected_mean: float
    expected_variance: float
    sigma: float
    verdict: ToleranceVerdict


def hop_count_stats(trace: Trace, z: float = 4.0) -> HopStats:
    """Posts per query versus the geometric law with mean ``1/p_hop``.

    Direct submissions are never posted and are left out.
    """
    p = trace.spec.hop
    if p is None:
        raise ValueError("trace was produced without the query-hop extension")
    lengths = trace.hop_lengths[trace.mode != Mode.SELF_DIRECT].astype(float)
    n = len(lengths)
    if n == 0:
        raise InsufficientSamples("no posted queries")
    mean, var = float(lengths.mean()), float(lengths.var(ddof=1)) if n > 1 else 0.0
    exp_mean, exp_var = 1 / p, (1 - p) / p ** 2
    sigma = math.sqrt(exp_var / n)
    dev = abs(mean - exp_mean)
    ok = dev <= z * sigma + 1e-12
    verdict = ToleranceVerdict(f"mean hops (p_hop={p})", dev, z, ok,
                               [{"cell": "mean", "observed": mean, "expected": exp_mean, "n": n,
                                 "deviation": dev, "bound": z * sigma, "pass": ok}])
    return HopStats(mean, var, n, exp_mean, exp_var, sigma, verdict)


def variance_verdict(stats: HopStats, z: float = 4.0) -> ToleranceVerdict:
    """Sample variance versus ``(1 - p) / p**2`` using the geometric fourth moment."""
    p = 1 / stats.expected_mean
    q = 1 - p
    s2 = stats.expected_variance
    # fourth central moment of the geometric distribution
    mu4 = q * (p * p + 9 * q) / p ** 4
    se = math.sqrt(max(mu4 - s2 * s2, 0.0) / stats.n)
    dev = abs(stats.variance - s2)
    ok = dev <= z * se + 1e-12
    return ToleranceVerdict("hop-count variance", dev, z, ok,
                            [{"cell": "variance", "observed": stats.variance, "expected": s2,
                              "n": stats.n, "deviation": dev, "bound": z * se, "pass": ok}])


def joint_submission_counts(trace: Trace) -> dict[tuple[int, int, int, int], int]:
    """Counts of ``(source, mode, memory space, proxy)`` over the trace."""
    keys = np.stack([trace.source, trace.mode.astype(np.int64), trace.space, trace.proxy], axis=1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    return {tuple(int(x) for x in row): int(c) for row, c in zip(uniq, counts)}


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, default=float)
