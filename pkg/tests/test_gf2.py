import numpy as np

from index_coding.modules.gf2 import GF2Basis, gf2_is_in_rowspan, gf2_rank, mask_of


def test_mask_of_xors_repeats():
    assert mask_of([0, 2]) == 0b101
    assert mask_of([1, 1]) == 0


def test_rank_of_dependent_rows():
    assert gf2_rank([0b011, 0b110, 0b101]) == 2
    assert gf2_rank([0b001, 0b010, 0b100]) == 3
    assert gf2_rank([]) == 0


def test_rowspan_membership():
    rows = [0b011, 0b110]
    assert gf2_is_in_rowspan(0b101, rows)
    assert not gf2_is_in_rowspan(0b001, rows)
    assert gf2_is_in_rowspan(0, rows)


def test_add_reports_new_rows():
    basis = GF2Basis()
    assert basis.add(0b11)
    assert basis.add(0b01)
    assert not basis.add(0b10)
    assert basis.rank == 2


def test_solve_recovers_payload(rng):
    a, b, c = (rng.integers(0, 2, size=16, dtype=np.uint8) for _ in range(3))
    basis = GF2Basis()
    basis.add(0b011, a ^ b)
    basis.add(0b110, b ^ c)
    basis.add(0b100, c)
    zero = np.zeros(16, dtype=np.uint8)
    assert np.array_equal(basis.solve(0b001, zero), a)
    assert np.array_equal(basis.solve(0b010, zero), b)
    assert not zero.any()


def test_solve_outside_span_is_none():
    basis = GF2Basis()
    basis.add(0b011, np.ones(4, dtype=np.uint8))
    assert basis.solve(0b001, np.zeros(4, dtype=np.uint8)) is None
