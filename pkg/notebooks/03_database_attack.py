# %% [markdown]
# # What the database learns
#
# In DBWM the proxy is always a neighbour of the source.  When the design is
# a configuration whose neighbourhoods are small, linked queries let the
# database intersect the candidate sets.

# %%
from p2pupir import fixtures
from p2pupir.adversaries import db_intersection_attack
from p2pupir.protocols import ProtocolSpec, Workload, run_workload
from p2pupir.stats import estimate_source_given_proxy, uniformity_verdict, verify_db_anonymity

c12 = fixtures.config_12_8_2_3()
res = db_intersection_attack(c12, "DBWM", ["U2", "U11", "U8"])
for step in res.derivation:
    print("proxy", c12.points[step.observation[0]], "-> possible", c12.labels(step.possible),
          "remaining", c12.labels(step.remaining))
print("source:", c12.labels(res.candidates))

# %% [markdown]
# The same effect shows up statistically: the empirical law of the source
# given the proxy is far from uniform.

# %%
t = run_workload(ProtocolSpec("DBWM"), c12, Workload(20_000), seed=1)
print(uniformity_verdict(t))
print(estimate_source_given_proxy(t).counts[:, :3])

# %% [markdown]
# The proxy-designated protocols pick the proxy uniformly from all users, so
# the table is flat up to sampling noise.

# %%
for fixture, kind in [("fano", "PD_BIBD_V1"), ("bibd-10-15-6-4-2", "PD_BIBD_V2"),
                      ("covering-example", "PD_COVER_V1")]:
    print(fixture, verify_db_anonymity(fixtures.get_fixture(fixture), ProtocolSpec(kind), 200_000, seed=4))
