"""Exact step-function carrier: orthonormal waves, shifts, pairings."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evpos.errors import DepthExceeded
from evpos.irreducibility import classify
from evpos.stepfun import (
    PiecewiseConstantFn,
    ShiftStepProvider,
    irreducibility_witness_search,
    pairing,
    rademacher,
    shift_apply,
    vanishing_time,
    walsh,
)

dyadic = st.builds(
    Fraction,
    st.integers(min_value=0, max_value=64),
    st.just(64),
)


def numeric_pairing(k: int, j: int, t: Fraction, m: int = 9) -> Fraction:
    """Pairing by direct definition: integral of r_k(x+t) r_j(x) over [0, 1-t).

    Midpoint sampling on the 2^-m grid is exact for dyadic data of depth
    < m, giving an independent route to the same rational number.
    """
    rk, rj = rademacher(k), rademacher(j)
    total = Fraction(0)
    cells = 1 << m
    for i in range(cells):
        x = Fraction(2 * i + 1, 2 * cells)
        if x + t < 1:
            total += rk.value_at(x + t) * rj.value_at(x)
    return total / cells


class TestWaveFamily:
    def test_first_sign_function_values(self):
        r1 = rademacher(1)
        assert r1.value_at(Fraction(1, 4)) == 1
        assert r1.value_at(Fraction(3, 4)) == -1

    def test_orthonormality_up_to_63(self):
        ws = [walsh(n) for n in range(64)]
        for i in range(64):
            for j in range(i, 64):
                expected = 1 if i == j else 0
                assert ws[i].inner(ws[j]) == expected

    def test_walsh_is_product_of_sign_functions(self):
        assert walsh(3) == rademacher(1).product(rademacher(2))
        assert walsh(5) == rademacher(1).product(rademacher(3))
        assert walsh(0).values == (1,)

    def test_values_are_signs_with_zero_mean(self):
        for n in (1, 2, 3, 7):
            w = walsh(n)
            assert set(w.values) <= {1, -1}
            assert w.integral() == 0


class TestShift:
    def test_composition_law_at_quarter_steps(self):
        f = rademacher(2)
        twice = shift_apply(shift_apply(f, Fraction(1, 4)), Fraction(1, 4))
        assert twice == shift_apply(f, Fraction(1, 2))

    @given(dyadic, dyadic)
    @settings(max_examples=60)
    def test_composition_law_dyadic(self, s, t):
        f = walsh(5)
        assert shift_apply(shift_apply(f, s), t) == shift_apply(f, s + t)

    def test_nilpotent_at_one(self):
        for n in range(8):
            assert shift_apply(walsh(n), 1).is_zero

    def test_shift_preserves_modulus_order(self):
        f = walsh(3)
        g = f.scale(Fraction(1, 2))
        t = Fraction(3, 8)
        sf, sg = shift_apply(f, t), shift_apply(g, t)
        for i, v in enumerate(sg.values):
            assert abs(v) <= abs(sf.values[i])

    def test_vanishing_time_is_support_supremum(self):
        assert vanishing_time(walsh(5)) == 1
        shifted = shift_apply(walsh(2), Fraction(1, 4))
        assert vanishing_time(shifted) == Fraction(3, 4)
        assert shift_apply(shifted, Fraction(3, 4)).is_zero
        assert not shift_apply(shifted, Fraction(5, 8)).is_zero


class TestPairing:
    def test_frozen_exact_values(self):
        assert pairing(1, 1, Fraction(1, 4)) == Fraction(1, 4)
        assert pairing(1, 2, Fraction(1, 8)) == Fraction(1, 8)
        assert pairing(2, 1, Fraction(1, 8)) == Fraction(1, 8)
        assert pairing(1, 2, Fraction(3, 4)) == Fraction(-1, 4)
        assert pairing(2, 3, Fraction(1, 16)) == Fraction(1, 16)
        assert pairing(3, 1, Fraction(1, 2)) == 0
        assert pairing(4, 4, Fraction(1, 8)) == Fraction(7, 8)

    @pytest.mark.parametrize(
        "k,j,t",
        [
            (1, 2, Fraction(1, 8)),
            (2, 3, Fraction(1, 16)),
            (4, 4, Fraction(1, 8)),
            (3, 1, Fraction(5, 8)),
        ],
    )
    def test_against_direct_integral(self, k, j, t):
        assert pairing(k, j, t) == numeric_pairing(k, j, t)

    def test_identity_at_zero(self):
        for k in range(1, 5):
            assert pairing(k, k, 0) == 1

    def test_everything_vanishes_at_one(self):
        for k in range(1, 5):
            for j in range(1, 5):
                assert pairing(k, j, 1) == 0


class TestWitnessSearch:
    def test_all_offdiagonal_pairs_have_witnesses(self):
        for k in range(1, 5):
            for j in range(1, 5):
                if k == j:
                    continue
                t = irreducibility_witness_search(k, j, 10)
                assert t is not None and 0 < t < 1
                assert pairing(k, j, t) != 0

    def test_witness_is_scan_minimum(self):
        t = irreducibility_witness_search(1, 2, 4)
        for m in range(1, 16):
            c = Fraction(m, 16)
            if c >= t:
                break
            assert pairing(1, 2, c) == 0

    def test_depth_zero_rejected(self):
        with pytest.raises(DepthExceeded):
            irreducibility_witness_search(1, 2, 0)


class TestShiftStepProvider:
    def test_apply_delegates_to_shift(self):
        p = ShiftStepProvider(depth=3)
        f = walsh(3)
        assert p.apply(Fraction(1, 8), f) == shift_apply(f, Fraction(1, 8))

    def test_marks_nilpotency(self):
        p = ShiftStepProvider(depth=3)
        assert p.nilpotent_time == 1
        assert p.exact_arithmetic

    def test_condition_probe_is_exact_rational(self):
        p = ShiftStepProvider(depth=3)
        basis = p.condition_basis()
        val = p.condition_probe(Fraction(1, 8), basis[0], basis[1])
        assert isinstance(val, Fraction)
        assert val == Fraction(1, 8)

    def test_classifies_irreducible_not_persistent(self):
        rep = classify(ShiftStepProvider(depth=6))
        assert rep.classification == "IrreducibleNotPersistent"
        assert rep.witness_onset == 1
        assert rep.diagram_consistent
