import csv
import io
import json

import numpy as np
import pytest

from p2pupir import fixtures
from p2pupir.protocols import LinkGroup, ProtocolSpec, Workload, run_workload
from p2pupir.stats import (InsufficientSamples, estimate_observer_posterior,
                           estimate_source_given_proxy, hop_count_stats, joint_submission_counts,
                           per_cell_verdict, two_sample_verdict, uniformity_verdict,
                           variance_verdict, verify_db_anonymity)


class TestVerdicts:
    def test_bound_edges(self):
        v = per_cell_verdict("x", [0.5 + 4 * 0.05], [0.5], [100])
        assert v.passed  # exactly on the bound
        v = per_cell_verdict("x", [0.5 + 4 * 0.05 + 1e-6], [0.5], [100])
        assert not v.passed and len(v.failures()) == 1

    def test_exact_cells(self):
        assert per_cell_verdict("x", [0.0, 1.0], [0.0, 1.0], [10, 10]).passed
        assert not per_cell_verdict("x", [0.01], [0.0], [10_000]).passed

    def test_pass_iff_all_cells(self):
        obs = np.array([0.1, 0.2, 0.9])
        v = per_cell_verdict("x", obs, [0.1, 0.2, 0.5], 1000)
        assert v.passed == all(c["pass"] for c in v.cells)
        assert v.max_abs_deviation == pytest.approx(0.4)

    def test_two_sample(self):
        rng = np.random.default_rng(0)
        a = np.bincount(rng.integers(0, 5, 50_000), minlength=5)
        b = np.bincount(rng.integers(0, 5, 50_000), minlength=5)
        assert two_sample_verdict("same", a, b).passed
        c = np.bincount(rng.choice(5, 50_000, p=[0.3, 0.1, 0.2, 0.2, 0.2]), minlength=5)
        assert not two_sample_verdict("diff", a, c).passed

    def test_exports(self):
        v = per_cell_verdict("x", [0.5, 0.25], [0.5, 0.25], 100, labels=[("a",), ("b",)])
        rows = list(csv.DictReader(io.StringIO(v.to_csv())))
        assert [r["cell"] for r in rows] == ["['a']", "['b']"]
        assert json.loads(json.dumps(v.to_dict()))["pass"] is True
        assert str(v).startswith("PASS")


class TestFrequencyTable:
    def test_invariants(self, fano):
        t = run_workload(ProtocolSpec("PD_COVER_V2"), fano, Workload(5000), 1)
        tab = estimate_source_given_proxy(t)
        assert tab.n == 5000 and (tab.counts >= 0).all()
        np.testing.assert_allclose(tab.probabilities.sum(axis=0), 1)
        np.testing.assert_array_equal(tab.probabilities, tab.counts / tab.col_totals)
        rows = list(csv.reader(io.StringIO(tab.to_csv())))
        assert rows[0] == ["source", "proxy", "count", "probability"] and len(rows) == 50

    def test_single_query(self, fano):
        t = run_workload(ProtocolSpec("PD_COVER_V2"), fano, Workload(1), 1)
        tab = estimate_source_given_proxy(t)
        assert tab.n == 1 and tab.counts.sum() == 1
        j = int(t.final_proxy[0])
        assert tab.probabilities[t.source[0], j] == 1
        assert np.isnan(tab.probabilities[:, (j + 1) % 7]).all()

    def test_uses_final_proxy(self, fano):
        t = run_workload(ProtocolSpec("PD_COVER_V2", hop=0.5), fano, Workload(2000), 1)
        tab = estimate_source_given_proxy(t)
        assert tab.counts.sum(axis=0).tolist() == np.bincount(t.final_proxy, minlength=7).tolist()


class TestDbAnonymity:
    @pytest.mark.parametrize("name,kind", [("fano", "PD_COVER_V2"), ("covering-example", "PD_COVER_V1"),
                                           ("bibd-10-15-6-4-2", "PD_BIBD_V1")])
    def test_passes(self, name, kind):
        v = verify_db_anonymity(fixtures.get_fixture(name), ProtocolSpec(kind), 100_000, seed=2)
        assert v.passed, v.failures()[:3]

    def test_dbwm_contrast(self, config12):
        t = run_workload(ProtocolSpec("DBWM"), config12, Workload(20_000), 2)
        assert not uniformity_verdict(t).passed
        tab = estimate_source_given_proxy(t)
        # the source is never the proxy and never outside its neighbourhood
        assert (np.diag(tab.counts) == 0).all()

    def test_guards(self, config12, fano):
        with pytest.raises(ValueError):
            verify_db_anonymity(config12, ProtocolSpec("DBWM"), 10_000, 1)
        with pytest.raises(InsufficientSamples):
            verify_db_anonymity(fano, ProtocolSpec("PD_COVER_V2"), 699, 1)

    def test_reproducible(self, fano):
        a = verify_db_anonymity(fano, ProtocolSpec("PD_BIBD_V2"), 7000, 9)
        b = verify_db_anonymity(fano, ProtocolSpec("PD_BIBD_V2"), 7000, 9)
        assert a.to_dict() == b.to_dict()


class TestPosterior:
    def test_fano_v2(self, fano):
        t = run_workload(ProtocolSpec("PD_BIBD_V2"), fano, Workload(200_000), 4)
        est = estimate_observer_posterior(t, "U5", ["U1", "U4", "U5"], "U4")
        assert est.theoretical == {"U1": 0.75, "U4": 0.25}
        assert est.verdict.passed and est.n_conditioned > 1000

    def test_fano_v1_mass_one(self, fano):
        t = run_workload(ProtocolSpec("PD_BIBD_V1"), fano, Workload(100_000), 4)
        est = estimate_observer_posterior(t, "U5", ["U1", "U4", "U5"], "U4")
        assert est.verdict.passed
        row = est.table.row_labels.index("U1")
        assert est.table.counts[row, 0] == est.n_conditioned

    def test_bibd10_v2(self, bibd10):
        t = run_workload(ProtocolSpec("PD_BIBD_V2"), bibd10, Workload(400_000), 4)
        B = sorted(bibd10.blocks[0])
        est = estimate_observer_posterior(t, B[1], 0, B[0])
        assert est.verdict.passed
        assert est.theoretical[bibd10.points[B[0]]] == pytest.approx(1 / 7)

    def test_rare_event_refused(self, fano):
        t = run_workload(ProtocolSpec("PD_BIBD_V2"), fano, Workload(500), 4)
        with pytest.raises(InsufficientSamples):
            estimate_observer_posterior(t, "U5", ["U1", "U4", "U5"], "U4")

    def test_hops_refused(self, fano):
        t = run_workload(ProtocolSpec("PD_BIBD_V2", hop=0.5), fano, Workload(500), 4)
        with pytest.raises(ValueError):
            estimate_observer_posterior(t, "U5", ["U1", "U4", "U5"], "U4")


class TestHops:
    def test_p_one(self, fano):
        h = hop_count_stats(run_workload(ProtocolSpec("PD_BIBD_V2", hop=1.0), fano, Workload(1000), 1))
        assert h.mean == 1 and h.variance == 0 and h.verdict.passed

    @pytest.mark.parametrize("p", [0.25, 0.5])
    def test_geometric(self, bibd10, p):
        t = run_workload(ProtocolSpec("PD_COVER_V2", hop=p), bibd10, Workload(50_000), 3)
        h = hop_count_stats(t)
        assert h.verdict.passed and h.expected_mean == 1 / p
        assert variance_verdict(h).passed

    def test_variance_detects_wrong_law(self):
        # constant lengths have variance 0, far from the geometric value
        from p2pupir.stats import HopStats
        fake = HopStats(2.0, 0.0, 10_000, 2.0, 2.0, 0.01, None)
        assert not variance_verdict(fake).passed

    def test_direct_excluded(self, fano):
        t = run_workload(ProtocolSpec("PD_BIBD_V1", hop=0.5), fano, Workload(7000), 1)
        assert hop_count_stats(t).n == int((t.space >= 0).sum())

    def test_needs_hops(self, fano):
        with pytest.raises(ValueError):
            hop_count_stats(run_workload(ProtocolSpec("PD_BIBD_V2"), fano, Workload(10), 1))


def test_joint_counts(fano):
    t = run_workload(ProtocolSpec("PD_BIBD_V1"), fano, Workload.linked(LinkGroup(300, "U1")), 1)
    counts = joint_submission_counts(t)
    assert sum(counts.values()) == 300
    assert {k[0] for k in counts} == {0}
