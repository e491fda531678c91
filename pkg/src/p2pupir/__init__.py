"""Combinatorial designs, protocol simulation and attacks for peer-to-peer
user-private information retrieval."""

from .adversaries import (AnonymityReport, CandidateSet, InconsistentObservations, PosteriorTable,
                          coalition_candidates, coalition_success_probability, db_candidates,
                          db_intersection_attack, measure_anonymity, random_coalition_success_rate,
                          theoretical_posterior)
from .designs import (AnonymityPartition, DesignError, DesignProfile, SetSystem, add_user,
                      build_t_anonymity, develop_difference_set, dual, load_design, neighborhood,
                      profile, remove_user)
from .fixtures import get_fixture
from .protocols import (Kind, Mode, ProtocolSpec, Trace, Workload, LinkGroup, apply_hops,
                        choose_submission, coalition_view, db_view, run_workload, user_view)
from .stats import (estimate_observer_posterior, estimate_source_given_proxy, hop_count_stats,
                    verify_db_anonymity)

__all__ = [
    "AnonymityReport", "CandidateSet", "InconsistentObservations", "PosteriorTable",
    "coalition_candidates", "coalition_success_probability", "db_candidates",
    "db_intersection_attack", "measure_anonymity", "random_coalition_success_rate",
    "theoretical_posterior", "AnonymityPartition", "DesignError", "DesignProfile", "SetSystem",
    "add_user", "build_t_anonymity", "develop_difference_set", "dual", "load_design",
    "neighborhood", "profile", "remove_user", "get_fixture", "Kind", "Mode", "ProtocolSpec",
    "Trace", "Workload", "LinkGroup", "apply_hops", "choose_submission", "coalition_view",
    "db_view", "run_workload", "user_view", "estimate_observer_posterior",
    "estimate_source_given_proxy", "hop_count_stats", "verify_db_anonymity",
]

__version__ = "0.1.0"
