# %% [markdown]
# # Coalitions of curious users
#
# Users who read a memory space see the post and its proxy.  Pooling views
# and intersecting spaces over linked queries narrows down the source.

# %%
from p2pupir import fixtures
from p2pupir.adversaries import (coalition_candidates, coalition_success_probability,
                                 measure_anonymity, random_coalition_success_rate, replay_witness)

fano = fixtures.fano()
res = coalition_candidates(fano, "PD_BIBD_V2", [(["U1", "U2", "U3"], "U2"), (["U1", "U4", "U5"], "U4")],
                           ["U2", "U5"])
print("candidates:", fano.labels(res.candidates))

# %% [markdown]
# Brute force gives the worst case over sources, linked memory spaces,
# proxies and coalitions.  The witness replays to the same value.

# %%
for name, kind, rho, c in [("fano", "PD_BIBD_V2", 3, 1), ("fano", "PD_BIBD_V1", 1, 1),
                           ("bibd-10-15-6-4-2", "PD_BIBD_V2", 1, 2), ("sbibd-15-7-3", "PD_BIBD_V2", 2, 1),
                           ("supersimple-7-14-6-3-2", "PD_BIBD_V2", 2, 1), ("fano-t3", "PD_COVER_V2", 2, 1)]:
    s = fixtures.get_fixture(name)
    rep = measure_anonymity(s, kind, rho, c)
    print(f"{name:24s} {kind} rho={rho} c={c} kappa={rep.kappa} replay={replay_witness(s, rep)}")

# %% [markdown]
# The supersimple design shows why a large lambda is not enough: two of its
# blocks can meet in exactly two users, and a coalition holding one of them
# pins down the other.

# %%
ss = fixtures.supersimple_7_14_6_3_2()
w = measure_anonymity(ss, "PD_BIBD_V2", 2, 1).witness
print("source", ss.points[w.source], "spaces", [ss.labels(ss.blocks[h]) for h in w.blocks],
      "coalition", ss.labels(w.coalition))

# %% [markdown]
# The average case is kinder.  In the (15, 7, 3) design two memory spaces
# share three users; a random pair of users removes both others with
# probability 1 / C(14, 2).

# %%
sb = fixtures.sbibd_15_7_3()
i = min(sb.blocks[0] & sb.blocks[1])
obs = [(0, i), (1, i)]
print(coalition_success_probability(sb, "PD_BIBD_V2", obs, 2, i))
print(random_coalition_success_rate(sb, "PD_BIBD_V2", 2, 2, i, 20_000, seed=1, observations=obs))
