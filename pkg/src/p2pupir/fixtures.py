"""Named designs used by the tests, scripts and CLI."""

from __future__ import annotations

from typing import Callable

from .designs import (AnonymityPartition, DesignError, SetSystem, build_t_anonymity,
                      develop_difference_set)


def _users(n: int) -> list[str]:
    return [f"U{i}" for i in range(1, n + 1)]


def _blocks(*words: str) -> list[list[str]]:
    # "13" -> ["1", "3"]; single-character point names only
    return [list(w) for w in words]


def fano() -> SetSystem:
    blocks = [[1, 2, 3], [1, 4, 5], [1, 6, 7], [2, 4, 6], [2, 5, 7], [3, 4, 7], [3, 5, 6]]
    return SetSystem.from_labels("fano", _users(7), [[f"U{x}" for x in B] for B in blocks])


def config_12_8_2_3() -> SetSystem:
    blocks = [[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12],
              [1, 4, 7], [2, 5, 10], [3, 8, 11], [6, 9, 12]]
    return SetSystem.from_labels("config-12-8-2-3", _users(12),
                                 [[f"U{x}" for x in B] for B in blocks])


def bibd_10_15_6_4_2() -> SetSystem:
    words = ("0123", "0147", "0246", "0358", "0579", "0689", "1258", "1369",
             "1459", "1678", "2379", "2489", "2567", "3478", "3456")
    return SetSystem.from_labels("bibd-10-15-6-4-2", list("0123456789"), _blocks(*words))


def config_9_9_3_3() -> SetSystem:
    words = ("147", "258", "369", "159", "267", "348", "168", "249", "357")
    return SetSystem.from_labels("config-9-9-3-3", list("123456789"), _blocks(*words))


def one_design_5_5_3_3() -> SetSystem:
    return SetSystem.from_labels("one-design-5-5-3-3", list("12345"),
                                 _blocks("123", "451", "234", "512", "345"))


def pbd_lambda2() -> SetSystem:
    return SetSystem.from_labels("pbd-lambda2", list("12345"),
                                 _blocks("12", "25", "135", "145", "1234", "2345"))


def covering_example() -> SetSystem:
    return SetSystem.from_labels("covering-example", list("1234567"),
                                 _blocks("13", "23", "157", "124", "347", "356", "2567", "14567"))


def fano_cyclic() -> SetSystem:
    return develop_difference_set({1, 2, 4}, 7, name="fano-cyclic")


def sbibd_15_7_3() -> SetSystem:
    return develop_difference_set({0, 1, 2, 4, 5, 8, 10}, 15, name="sbibd-15-7-3")


def supersimple_7_14_6_3_2() -> SetSystem:
    # the cyclic planes developed from {1,2,4} and {3,5,6} share no line
    a = develop_difference_set({1, 2, 4}, 7)
    b = develop_difference_set({3, 5, 6}, 7)
    return SetSystem("supersimple-7-14-6-3-2", a.points, a.blocks + b.blocks)


def fano_t3() -> SetSystem:
    return build_t_anonymity(fano(), AnonymityPartition.uniform(7, 3), name="fano-t3")


def single_block() -> SetSystem:
    return SetSystem.from_labels("single-block", ["U1", "U2"], [["U1", "U2"]],
                                 allow_complete_blocks=True)


FIXTURES: dict[str, Callable[[], SetSystem]] = {
    "fano": fano,
    "config-12-8-2-3": config_12_8_2_3,
    "bibd-10-15-6-4-2": bibd_10_15_6_4_2,
    "config-9-9-3-3": config_9_9_3_3,
    "one-design-5-5-3-3": one_design_5_5_3_3,
    "pbd-lambda2": pbd_lambda2,
    "covering-example": covering_example,
    "fano-cyclic": fano_cyclic,
    "sbibd-15-7-3": sbibd_15_7_3,
    "supersimple-7-14-6-3-2": supersimple_7_14_6_3_2,
    "fano-t3": fano_t3,
    "single-block": single_block,
}


def get_fixture(name: str) -> SetSystem:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise DesignError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None


def fixture_names() -> list[str]:
    return list(FIXTURES)
