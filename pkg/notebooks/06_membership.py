# %% [markdown]
# # Users joining and leaving
#
# A new user joins a small set of memory spaces that together contain every
# existing user (greedy set cover), so it shares a space with everyone.
# A leaving user is dropped from its spaces, which then need new keys.

# %%
from p2pupir import fixtures
from p2pupir.designs import add_user, profile, remove_user

fano = fixtures.fano()
grown, joined = add_user(fano, "U8")
print("U8 joins", joined, "->", profile(grown).describe())

back, rekey = remove_user(grown, "U8")
print("rekey", rekey, "restored:", back == fano)

smaller, rekey = remove_user(fano, "U1")
print("without U1:", profile(smaller).describe(), "rekey", rekey)

# %% [markdown]
# The configuration has pairs that never meet; joining does not fix those,
# but every pair involving the newcomer is covered.

# %%
c12 = fixtures.config_12_8_2_3()
grown, joined = add_user(c12, "U13")
print(joined, profile(grown).describe())
