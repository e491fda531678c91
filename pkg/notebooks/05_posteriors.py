# %% [markdown]
# # How much one member of a memory space learns
#
# A user reading a post in one of its spaces can compute the posterior over
# the other members being the source.  On a regular PBD the closed form
# weights each candidate by one over its pair count with the proxy.

# %%
from p2pupir import fixtures
from p2pupir.adversaries import theoretical_posterior
from p2pupir.protocols import ProtocolSpec, Workload, run_workload
from p2pupir.stats import estimate_observer_posterior

fano = fixtures.fano()
for kind in ("PD_BIBD_V1", "PD_BIBD_V2"):
    tab = theoretical_posterior(fano, kind, ["U1", "U4", "U5"], "U4", "U5")
    print(kind, {fano.points[i]: str(p) for i, p in tab.probabilities.items()})

# %% [markdown]
# Monte Carlo agrees cell by cell within four standard errors.

# %%
for kind in ("PD_BIBD_V1", "PD_BIBD_V2"):
    t = run_workload(ProtocolSpec(kind), fano, Workload(500_000), seed=11)
    est = estimate_observer_posterior(t, "U5", ["U1", "U4", "U5"], "U4")
    print(kind, est.n_conditioned, est.verdict)

bib = fixtures.bibd_10_15_6_4_2()
B = sorted(bib.blocks[0])
t = run_workload(ProtocolSpec("PD_BIBD_V2"), bib, Workload(1_000_000), seed=12)
est = estimate_observer_posterior(t, B[1], 0, B[0])
print(est.theoretical)
print(est.verdict.to_csv())
