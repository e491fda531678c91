# %% [markdown]
# # Set systems and their profiles
#
# A memory space is a block of users sharing a key.  The protocols only care
# about a handful of combinatorial properties of the block layout, all of
# which `profile` computes from the incidence matrix.

# %%
from p2pupir import fixtures
from p2pupir.designs import (AnonymityPartition, build_t_anonymity, develop_difference_set,
                             dual, profile, SetSystem)

for name in fixtures.fixture_names():
    print(f"{name:26s} {profile(fixtures.get_fixture(name)).describe()}")

# %% [markdown]
# Designs can be written out by hand.  Repeated blocks are allowed (the
# blocks form a multiset) but a block may not list the same user twice.

# %%
tiny = SetSystem.from_labels("tiny", ["a", "b", "c", "d"],
                             [["a", "b"], ["b", "c"], ["c", "d"], ["a", "d"], ["a", "c"], ["b", "d"]])
p = profile(tiny)
print(p.describe())
print(p.pair_index)

# %% [markdown]
# Cyclic developments of difference sets give the two symmetric designs used
# throughout: the Fano plane from {1, 2, 4} mod 7 and a (15, 7, 3) design.

# %%
print(profile(develop_difference_set({1, 2, 4}, 7)).describe())
print(profile(develop_difference_set({0, 1, 2, 4, 5, 8, 10}, 15)).describe())

# %% [markdown]
# Swapping the roles of users and blocks gives the dual.  The dual of the
# (12, 8, 2, 3) configuration has 8 users in 12 blocks of size 2.

# %%
print(profile(dual(fixtures.config_12_8_2_3())).describe())

# %% [markdown]
# Replacing each user of a base design by a class of t users keeps every
# class together in every memory space.

# %%
grown = build_t_anonymity(fixtures.fano(), AnonymityPartition.uniform(7, 3))
print(profile(grown).describe())
print(sorted(grown.labels(grown.blocks[0])))
