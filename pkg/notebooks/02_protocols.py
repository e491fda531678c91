# %% [markdown]
# # Simulating the submission protocols
#
# Every query gets its own counter-addressed random stream, so a run is
# reproducible from its seed and a long run extends a short one.

# %%
import numpy as np

from p2pupir import fixtures
from p2pupir.protocols import (LinkGroup, ProtocolSpec, Workload, run_workload,
                               submission_distribution, trace_lines, user_view)

fano = fixtures.fano()
trace = run_workload(ProtocolSpec("PD_BIBD_V1"), fano, Workload(10), seed=7)
for rec in trace.records():
    p = rec.plan
    space = "direct" if p.memory_space < 0 else sorted(fano.labels(fano.blocks[p.memory_space]))
    print(rec.query_id, fano.points[rec.source], "->", fano.points[p.proxy], p.mode.name, space)

# %% [markdown]
# The exact law of one submission can be enumerated.  Summing out everything
# but the proxy shows each user is the proxy with probability 1/7, whoever
# the source is.

# %%
law = submission_distribution(ProtocolSpec("PD_COVER_V1"), fano, "U1")
marginal = {}
for (mode, space, proxy), pr in law.items():
    marginal[fano.points[proxy]] = marginal.get(fano.points[proxy], 0) + pr
print(marginal)

# %% [markdown]
# On a BIBD the BIBD and covering versions of each protocol are the same
# distribution.

# %%
for a, b in [("PD_BIBD_V1", "PD_COVER_V1"), ("PD_BIBD_V2", "PD_COVER_V2")]:
    same = all(submission_distribution(ProtocolSpec(a), fano, u) == submission_distribution(ProtocolSpec(b), fano, u)
               for u in fano.points)
    print(a, b, "identical" if same else "different")

# %% [markdown]
# Linked queries share a link group.  Here U3 sends three related queries
# and someone else sends two, interleaved.

# %%
w = Workload.linked(LinkGroup(3, "U3"), LinkGroup(2), ordering="round_robin")
t = run_workload(ProtocolSpec("PD_BIBD_V2"), fano, w, seed=1)
print([(g, fano.points[x]) for g, x in zip(t.link_group.tolist(), t.source.tolist())])

# %% [markdown]
# With query hops the designated proxy keeps re-posting with probability
# 1 - p_hop, so a query is posted 1/p_hop times on average.

# %%
t = run_workload(ProtocolSpec("PD_COVER_V2", hop=0.25), fixtures.bibd_10_15_6_4_2(), Workload(100_000), seed=3)
print("mean posts per query:", t.hop_lengths.mean())

# %% [markdown]
# The DBWM protocol is stateful: one slot per memory space, users acting in
# random order.  Its proxies are never the source.

# %%
c12 = fixtures.config_12_8_2_3()
t = run_workload(ProtocolSpec("DBWM"), c12, Workload(2000), seed=5)
print("proxy == source:", int(np.sum(t.proxy == t.source)), "rounds:", t.meta)

# %% [markdown]
# Observers only see the memory spaces they belong to.  A trace exports as
# newline-delimited JSON.

# %%
t = run_workload(ProtocolSpec("PD_BIBD_V1"), fano, Workload(50), seed=2)
print(len(user_view(t, "U5")), "of 50 queries are visible to U5")
print(next(iter(trace_lines(t))))
