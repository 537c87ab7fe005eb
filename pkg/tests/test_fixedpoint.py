import math
from fractions import Fraction
from statistics import median

import gmpy2
import numpy as np
import pytest

from bosonperm.fixedpoint import (
    DEFAULT_CONFIG,
    FixedPointComplex,
    FixedPointConfig,
    FixedPointOverflowError,
    fixed_complex_mul,
    perm_fixed,
    product_tree,
    to_fixed,
    worst_case_partial_sum_bound,
)
from bosonperm.linalg import haar_random_unitary
from bosonperm.permanent import (
    perm_bbfg_repeated,
    perm_multiprecision,
    relative_error,
)


def fx(z: complex) -> FixedPointComplex:
    return FixedPointComplex.from_complex(z)


def test_to_fixed_values():
    assert to_fixed(1.0) == 1 << 62
    assert to_fixed(-0.5) == -(1 << 61)
    # exact rational third vs the quantized double, both round-half-even
    assert to_fixed(Fraction(1, 3)) == round(Fraction(1 << 62, 3))
    assert to_fixed(1 / 3) == 1537228672809129216


def test_to_fixed_half_even():
    cfg = FixedPointConfig(input_bits=8, input_fraction_bits=4)
    assert to_fixed(Fraction(3, 32), cfg) == 2  # 1.5 rounds to even
    assert to_fixed(Fraction(5, 32), cfg) == 2  # 2.5 rounds to even


def test_to_fixed_range_error():
    with pytest.raises(ValueError):
        to_fixed(1.0000001)


def test_fixed_complex_mul_units():
    one = fx(1.0 + 0j)
    iu = fx(1j)
    assert fixed_complex_mul(one, one, 79).value == 1.0
    assert fixed_complex_mul(iu, iu, 79).value == -1.0
    assert fixed_complex_mul(one, iu, 79).value == 1j


def test_fixed_complex_mul_against_float_product(rng):
    # 26-bit significands make the binary64 product exact, so the fixed
    # product must land within quantization distance of it
    for _ in range(50):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.abs(z) * 1.25
        z = np.round(z * (1 << 26)) / (1 << 26)
        x, y = complex(z[0]), complex(z[1])
        got = fixed_complex_mul(fx(x), fx(y), 79).value
        assert abs(got - x * y) < 2 ** -60


def test_fixed_complex_mul_against_exact_product(rng):
    for _ in range(50):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.abs(z) * 1.25
        x, y = complex(z[0]), complex(z[1])
        got = fixed_complex_mul(fx(x), fx(y), 79)
        xf, yf = fx(x), fx(y)
        exact_re = Fraction(xf.real_raw * yf.real_raw - xf.imag_raw * yf.imag_raw, 1 << 124)
        exact_im = Fraction(xf.real_raw * yf.imag_raw + xf.imag_raw * yf.real_raw, 1 << 124)
        assert abs(Fraction(got.real_raw, 1 << 77) - exact_re) <= Fraction(1, 1 << 77)
        assert abs(Fraction(got.imag_raw, 1 << 77) - exact_im) <= Fraction(1, 1 << 77)


def test_fixed_complex_mul_overflow():
    big = FixedPointComplex((1 << 63) - 1, (1 << 63) - 1, 64, 62)
    with pytest.raises(FixedPointOverflowError):
        fixed_complex_mul(big, big, 79)


def test_product_tree_all_ones_exact():
    one = fx(1.0 + 0j)
    assert product_tree([one] * 40).value == 1.0


def test_product_tree_passthrough():
    v = fx(0.25 - 0.5j)
    out = product_tree([v])
    assert out.value == v.value
    assert out.width == DEFAULT_CONFIG.input_bits


def test_product_tree_against_multiprecision_reference(rng):
    for _ in range(10):
        z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        z /= np.abs(z) * 1.25
        vals = [fx(complex(x)) for x in z]
        got = product_tree(vals)
        old = gmpy2.get_context()
        gmpy2.set_context(gmpy2.context(precision=256))
        try:
            ref = gmpy2.mpc(1)
            for v in vals:
                ref *= gmpy2.mpc(gmpy2.mpfr(v.real_raw), gmpy2.mpfr(v.imag_raw)) / (1 << 62)
            raw = gmpy2.mpc(gmpy2.mpfr(got.real_raw), gmpy2.mpfr(got.imag_raw))
            rel = abs(raw / (1 << got.fraction_bits) - ref) / abs(ref)
            assert rel < gmpy2.mpfr(2) ** -64
        finally:
            gmpy2.set_context(old)


def test_product_tree_size_guard():
    one = fx(1.0 + 0j)
    with pytest.raises(ValueError):
        product_tree([one] * 65)
    with pytest.raises(ValueError):
        product_tree([])


def test_worst_case_bound_values():
    assert worst_case_partial_sum_bound(1) == 1.0
    w40 = worst_case_partial_sum_bound(40)
    assert 16 <= w40 < 32
    assert w40 == pytest.approx(27.224299251, rel=1e-9)


def test_worst_case_bound_matches_brute_force_orderings():
    # all-ones 2x2 normalized to entries 1/2: terms are 1 (both signs +)
    # and 0, so the worst partial sum over either evaluation order is 1
    terms = []
    for delta2 in (1, -1):
        col = 0.5 + delta2 * 0.5
        terms.append(delta2 * col * col)
    worst = 0.0
    for order in ([0, 1], [1, 0]):
        partial = 0.0
        for k in order:
            partial += terms[k]
            worst = max(worst, abs(partial))
    assert worst == worst_case_partial_sum_bound(2) == 1.0


def test_accumulator_budget_covers_all_sizes():
    for n in range(1, 41):
        need = math.ceil(math.log2(worst_case_partial_sum_bound(n))) + 1
        assert need <= DEFAULT_CONFIG.accumulator_integer_bits


def test_perm_fixed_identity():
    res = perm_fixed(np.eye(8, dtype=complex))
    assert abs(res.value - 1.0) < 2 ** -50
    assert res.engine == "fixedpoint"
    assert res.addend_count == 2 ** 7


def test_perm_fixed_matches_double_and_oracle():
    for seed in range(6):
        n = 6 + seed
        u = haar_random_unitary(n, 50 + seed)
        rf = perm_fixed(u)
        rd = perm_bbfg_repeated(u)
        ro = perm_multiprecision(u)
        assert relative_error(rf.value, rd.value) < 1e-10
        assert relative_error(rf.value, ro.value) < 1e-12


def test_perm_fixed_sixteen_mode_extended_comparison():
    u = haar_random_unitary(16, 1234)
    rf = perm_fixed(u)
    re_ = perm_bbfg_repeated(u, precision="extended")
    assert relative_error(rf.value, re_.value) < 1e-8


def test_perm_fixed_multiplicities(rng):
    u = haar_random_unitary(5, 77)
    m = np.array([1, 2, 2, 1, 2])
    n = np.array([2, 2, 1, 2, 1])
    rf = perm_fixed(u, m, n)
    ro = perm_multiprecision(u, m, n)
    assert relative_error(rf.value, ro.value) < 1e-12


def test_perm_fixed_stream_interleaving_is_bitwise_noop():
    u = haar_random_unitary(12, 3)
    v1 = perm_fixed(u, streams=1).value
    v4 = perm_fixed(u, streams=4).value
    v5 = perm_fixed(u, streams=5).value
    assert v1 == v4 == v5


def test_perm_fixed_overflow_hook():
    with pytest.raises(FixedPointOverflowError):
        perm_fixed(np.ones((8, 8), dtype=complex), scale=False)


def test_perm_fixed_photon_guard():
    with pytest.raises(ValueError):
        perm_fixed(np.eye(2, dtype=complex), [15, 15], [15, 15])


def test_monotone_width_law():
    wide = FixedPointConfig(
        tree_widths=tuple(w + 16 for w in DEFAULT_CONFIG.tree_widths))
    default_err = []
    wide_err = []
    for seed in range(50):
        n = 4 + seed % 5
        u = haar_random_unitary(n, 900 + seed)
        ref = perm_multiprecision(u).value
        default_err.append(relative_error(perm_fixed(u).value, ref))
        wide_err.append(relative_error(perm_fixed(u, config=wide).value, ref))
    assert median(wide_err) <= median(default_err) * (1 + 1e-9)


def test_config_validation_and_file_roundtrip(tmp_path):
    with pytest.raises(ValueError):
        FixedPointConfig(tree_widths=(79, 79, 110, 93, 158, 189))
    with pytest.raises(ValueError):
        FixedPointConfig(input_bits=8, input_fraction_bits=8)
    cfg = FixedPointConfig(accumulator_bits=256)
    path = tmp_path / "widths.json"
    cfg.to_file(path)
    assert FixedPointConfig.from_file(path) == cfg
    res = perm_fixed(haar_random_unitary(6, 5), config=cfg)
    assert "256" in res.precision


def test_normalization_contract_no_overflow():
    for seed in range(60):
        n = 2 + seed % 15
        u = haar_random_unitary(n, 7000 + seed)
        perm_fixed(u)  # must not raise
