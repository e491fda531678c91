import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from p2pupir import designs, fixtures
from p2pupir.designs import (AnonymityPartition, DesignError, SetSystem, add_user,
                             anonymity_sets_respected, build_t_anonymity, develop_difference_set,
                             dual, neighborhood, profile, remove_user)

from conftest import BIBD_FIXTURES, brute_covering, brute_pair_counts


def labels(s, xs):
    return set(s.labels(xs))


class TestSetSystem:
    def test_empty_block_rejected(self):
        with pytest.raises(DesignError) as e:
            SetSystem.from_labels("x", "abc", [["a", "b"], []])
        assert e.value.block_index == 1

    def test_full_block_rejected(self):
        with pytest.raises(DesignError, match="block 0 is the full point set"):
            SetSystem.from_labels("x", "ab", [["a", "b"]])

    def test_unknown_point(self):
        with pytest.raises(DesignError) as e:
            SetSystem.from_labels("x", "abc", [["a", "b"], ["c", "z"]])
        assert e.value.block_index == 1

    def test_duplicate_point_in_block(self):
        with pytest.raises(DesignError, match="block 1 lists point b twice"):
            SetSystem.from_labels("x", "abc", [["a", "c"], ["a", "b", "b"]])

    def test_point_in_no_block(self):
        with pytest.raises(DesignError, match="lies in no block"):
            SetSystem.from_labels("x", "abcd", [["a", "b"], ["b", "c"]])

    def test_duplicate_blocks_are_kept(self):
        s = SetSystem.from_labels("x", "abc", [["a", "b"], ["a", "b"], ["b", "c"]])
        p = profile(s)
        assert s.b == 3
        assert p.pair_index[0, 1] == 2
        assert p.degree_of == (2, 3, 1)

    def test_json_round_trip(self, tmp_path, bibd10):
        path = tmp_path / "d.json"
        designs.dump_design(bibd10, path)
        assert designs.load_design(path) == bibd10

    def test_loader_names_block(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "bad", "points": ["a", "b", "c"],
                                    "blocks": [["a", "b"], ["b", "c", "c"]]}))
        with pytest.raises(DesignError, match="block 1"):
            designs.load_design(path)

    def test_point_resolution(self, fano):
        assert fano.pt("U3") == 2
        assert fano.pt(2) == 2
        assert fano.block_index(["U4", "U1", "U5"]) == 1
        with pytest.raises(DesignError):
            fano.pt("U9")


class TestProfileGolden:
    def test_fano(self, fano):
        p = profile(fano)
        assert p.params == (7, 7, 3, 3, 1)
        assert p.flags.symmetric_bibd and p.flags.projective_plane_order == 2

    def test_config_12_8_2_3(self, config12):
        p = profile(config12)
        assert (p.v, p.b, p.r, p.k) == (12, 8, 2, 3)
        assert p.flags.configuration and not p.flags.pbd and not p.flags.covering

    def test_bibd_10(self, bibd10):
        p = profile(bibd10)
        assert p.params == (10, 15, 6, 4, 2)
        assert p.flags.bibd and not p.flags.symmetric_bibd

    def test_config_9(self):
        p = profile(fixtures.config_9_9_3_3())
        assert (p.v, p.b, p.r, p.k) == (9, 9, 3, 3)
        assert p.flags.configuration and not p.flags.bibd

    def test_one_design(self):
        p = profile(fixtures.one_design_5_5_3_3())
        assert (p.v, p.b, p.r, p.k) == (5, 5, 3, 3)
        assert p.flags.one_design and not p.flags.configuration and not p.flags.pbd

    def test_pbd_lambda2(self):
        p = profile(fixtures.pbd_lambda2())
        assert p.flags.pbd and p.lambda_ == 2
        assert not p.flags.uniform and not p.flags.regular

    def test_covering_example(self):
        p = profile(fixtures.covering_example())
        f = p.flags
        assert f.covering and not f.uniform and not f.regular and not f.pbd

    def test_uncovered_pair(self):
        s = SetSystem.from_labels("x", "ab", [["a"], ["b"]])
        assert not profile(s).flags.covering

    def test_difference_sets(self):
        assert profile(develop_difference_set({1, 2, 4}, 7)).params == (7, 7, 3, 3, 1)
        p = profile(develop_difference_set({0, 1, 2, 4, 5, 8, 10}, 15))
        assert p.params == (15, 15, 7, 7, 3) and p.flags.symmetric_bibd
        assert profile(develop_difference_set({0, 1}, 3)).params == (3, 3, 2, 2, 1)

    @pytest.mark.parametrize("base,mod", [({0, 1}, 2), ({0}, 5), (range(5), 5)])
    def test_difference_set_guards(self, base, mod):
        with pytest.raises(DesignError):
            develop_difference_set(base, mod)

    def test_supersimple_fixture(self):
        p = profile(fixtures.supersimple_7_14_6_3_2())
        assert p.params == (7, 14, 6, 3, 2) and p.flags.supersimple


@pytest.mark.parametrize("name", fixtures.fixture_names())
def test_profile_matches_brute_force(name):
    s = fixtures.get_fixture(name)
    p = profile(s)
    counts = brute_pair_counts(s)
    assert all(p.pair_index[i, j] == c for (i, j), c in counts.items())
    assert p.flags.covering == brute_covering(s)
    assert p.flags.pbd == (len(set(counts.values())) == 1 and min(counts.values()) >= 1)
    degrees = [sum(x in B for B in s.blocks) for x in range(s.v)]
    assert list(p.degree_of) == degrees
    f = p.flags
    assert f.one_design == (f.regular and f.uniform)
    assert f.bibd == (f.one_design and f.pbd)
    assert f.configuration == (f.one_design and max(counts.values()) <= 1)
    assert f.symmetric_bibd == (f.bibd and s.b == s.v)


@pytest.mark.parametrize("name", BIBD_FIXTURES)
def test_bibd_identities(name):
    s = fixtures.get_fixture(name)
    p = profile(s)
    v, b, r, k, lam = p.params
    assert b * k == v * r
    assert lam * (v - 1) == r * (k - 1)
    assert b >= v
    if p.flags.symmetric_bibd:
        assert all(len(A & B) == lam for A, B in combinations(s.blocks, 2))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(fixtures.fixture_names()), st.randoms(use_true_random=False))
def test_profile_label_invariant(name, rnd):
    s = fixtures.get_fixture(name)
    perm = list(range(s.v))
    rnd.shuffle(perm)
    t = s.relabel(perm)
    p, q = profile(s), profile(t)
    assert p.params == q.params and p.flags == q.flags and p.mu_min == q.mu_min
    P = np.array(perm)
    assert np.array_equal(q.pair_index[np.ix_(P, P)], p.pair_index)


class TestDual:
    def test_config_dual(self, config12):
        d = dual(config12)
        p = profile(d)
        assert (p.v, p.b, p.r, p.k) == (8, 12, 3, 2) and p.flags.one_design

    def test_fano_dual(self, fano):
        assert profile(dual(fano)).params == (7, 7, 3, 3, 1)

    @pytest.mark.parametrize("name", ["fano", "config-12-8-2-3", "bibd-10-15-6-4-2", "covering-example"])
    def test_involution(self, name):
        s = fixtures.get_fixture(name)
        dd = dual(dual(s))
        # dual point j of the double dual is point j of s
        assert sorted(map(sorted, dd.blocks)) == sorted(map(sorted, s.blocks))

    def test_point_in_every_block(self):
        s = SetSystem.from_labels("x", "abc", [["a", "b"], ["a", "c"]])
        with pytest.raises(DesignError):
            dual(s)


class TestTAnonymity:
    def test_fano_t3(self, fano):
        part = AnonymityPartition.uniform(7, 3)
        s = build_t_anonymity(fano, part)
        assert s.v == 21 and all(len(B) == 9 for B in s.blocks)
        assert brute_covering(s)
        for cls in part.classes:
            members = s.pts(cls)
            for B in s.blocks:
                assert members <= B or not (members & B)
        assert anonymity_sets_respected(s, part)

    def test_singletons_give_base(self, fano):
        part = AnonymityPartition(tuple((p,) for p in fano.points))
        s = build_t_anonymity(fano, part)
        assert s.points == fano.points and s.blocks == fano.blocks

    def test_single_block_base(self):
        base = SetSystem.from_labels("pair", ["x1", "x2"], [["x1", "x2"]], allow_complete_blocks=True)
        s = build_t_anonymity(base, AnonymityPartition((("a", "b"), ("c", "d", "e"))))
        assert s.b == 1 and len(s.blocks[0]) == 5

    def test_guards(self, fano, config12):
        with pytest.raises(DesignError):
            build_t_anonymity(config12, AnonymityPartition.uniform(12, 2))
        with pytest.raises(DesignError):
            build_t_anonymity(fano, AnonymityPartition.uniform(6, 2))
        with pytest.raises(DesignError):
            AnonymityPartition((("a", "b"), ("b", "c")))


class TestNeighborhood:
    def test_fano(self, fano):
        assert len(neighborhood(fano, "U1")) == 6

    def test_config(self, config12):
        assert labels(config12, neighborhood(config12, "U2")) == {"U1", "U3", "U5", "U10"}

    def test_single_block(self):
        s = fixtures.single_block()
        assert labels(s, neighborhood(s, "U1")) == {"U2"}


def min_cover_size(s):
    full = set(range(s.v))
    for size in range(1, s.b + 1):
        for combo in combinations(s.blocks, size):
            if set().union(*combo) == full:
                return size


class TestMembership:
    def test_remove_from_fano(self, fano):
        out, rekey = remove_user(fano, "U1")
        assert out.v == 6 and out.b == 7
        assert sorted(len(B) for B in out.blocks) == [2, 2, 2, 3, 3, 3, 3]
        assert rekey == [0, 1, 2]
        assert brute_covering(out)

    def test_remove_degenerate(self):
        with pytest.raises(DesignError):
            remove_user(fixtures.single_block(), "U1")

    def test_remove_refuses_improper_remnant(self):
        s = SetSystem.from_labels("x", "abc", [["a", "b"], ["a", "c"], ["b", "c"]])
        with pytest.raises(DesignError, match="full point set"):
            remove_user(s, "a")

    def test_add_to_fano(self, fano):
        out, joined = add_user(fano, "U8")
        assert len(joined) == 3 == min_cover_size(fano)
        assert joined == [0, 1, 2]
        assert brute_covering(out)
        w = out.pt("U8")
        assert [j for j, B in enumerate(out.blocks) if w in B] == joined

    def test_add_to_single_block(self):
        out, joined = add_user(fixtures.single_block(), "U3")
        assert joined == [0]

    def test_add_to_config(self, config12):
        out, joined = add_user(config12, "U13")
        assert len(joined) <= 6
        assert set().union(*(config12.blocks[j] for j in joined)) == set(range(12))
        # every pair involving the new user is covered; the old gaps remain
        w = out.pt("U13")
        assert all(any(w in B and x in B for B in out.blocks) for x in range(12))

    def test_add_existing(self, fano):
        with pytest.raises(DesignError):
            add_user(fano, "U1")

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(["fano", "bibd-10-15-6-4-2", "covering-example", "pbd-lambda2",
                            "sbibd-15-7-3", "fano-t3"]), st.data())
    def test_round_trip_preserves_covering(self, name, data):
        s = fixtures.get_fixture(name)
        grown, joined = add_user(s, "NEW")
        assert brute_covering(grown)
        back, rekey = remove_user(grown, "NEW")
        assert rekey == joined and back == s
        victim = data.draw(st.sampled_from(s.points))
        try:
            smaller, rekey = remove_user(s, victim)
        except DesignError:
            return
        assert brute_covering(smaller)
        assert rekey == [j for j, B in enumerate(s.blocks) if s.pt(victim) in B]
