import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fedsim import vectors
from fedsim.errors import ContractError, DomainError, NumericalAbort, ShapeError

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                          allow_infinity=False)


def vec(*vals):
    return np.array(vals, dtype=np.float64)


def test_square_hand_values():
    np.testing.assert_array_equal(vectors.square(vec(-2, 3)), vec(4, 9))


def test_sqrt_hand_values():
    np.testing.assert_array_equal(vectors.sqrt(vec(4, 0)), vec(2, 0))


def test_sign_convention_zero_maps_to_zero():
    np.testing.assert_array_equal(vectors.sign(vec(-0.5, 0, 7)), vec(-1, 0, 1))


def test_sqrt_rejects_negative():
    with pytest.raises(DomainError):
        vectors.sqrt(vec(1, -1e-12))


def test_div_hand_values():
    np.testing.assert_array_equal(vectors.div(vec(3, 8), vec(2, 4)), vec(1.5, 2))


def test_div_rejects_zero_divisor():
    with pytest.raises(DomainError):
        vectors.div(vec(1, 2), vec(1, 0))


def test_combine_length_mismatch():
    with pytest.raises(ShapeError):
        vectors.add(vec(1, 2), vec(1, 2, 3))


def test_scaled_add_convex_combination():
    out = vectors.scaled_add(0.9, vec(10, 10), 0.1, vec(0, 0))
    np.testing.assert_array_equal(out, vec(9, 9))


def test_sub_identity_case():
    np.testing.assert_array_equal(vectors.sub(vec(1, 1), vec(1, 1)), vec(0, 0))


def test_weighted_sum_hand_value():
    # 0.25 * 4 + 0.75 * 0 = 1
    out = vectors.weighted_sum([vec(4), vec(0)], [0.25, 0.75])
    np.testing.assert_array_equal(out, vec(1))


def test_weighted_sum_single_element_identity():
    np.testing.assert_array_equal(vectors.weighted_sum([vec(2, 2)], [1.0]), vec(2, 2))


def test_weighted_sum_symmetric_mean():
    np.testing.assert_array_equal(vectors.weighted_sum([vec(1), vec(3)], [0.5, 0.5]),
                                  vec(2))


def test_weighted_sum_rejects_bad_weight_sum():
    with pytest.raises(ContractError):
        vectors.weighted_sum([vec(1), vec(1)], [0.5, 0.6])


def test_weighted_sum_rejects_empty():
    with pytest.raises(ContractError):
        vectors.weighted_sum([], [])


def test_elementwise_dispatch_matches_named_ops():
    a = vec(0.25, 4.0)
    np.testing.assert_array_equal(vectors.elementwise("sqrt", a), vectors.sqrt(a))
    with pytest.raises(ContractError):
        vectors.elementwise("cube", a)


def test_combine_dispatch():
    a, b = vec(1, 2), vec(3, 4)
    np.testing.assert_array_equal(vectors.combine("scaled_add", a, b, 2.0, 0.5),
                                  vec(3.5, 6))


def test_ensure_finite_abort_message_names_coordinate():
    bad = vec(1.0, np.inf, 2.0)
    bad_input = np.array(bad)
    with pytest.raises(NumericalAbort, match="coordinate 1"):
        vectors.ensure_finite(bad_input, "unit test")


@given(arrays(np.float64, 5, elements=finite_floats))
def test_square_is_nonnegative(a):
    assert np.all(vectors.square(a) >= 0)


@given(arrays(np.float64, 7, elements=finite_floats), st.integers(2, 6))
@settings(max_examples=50)
def test_uniform_weighted_sum_is_mean(a, count):
    vs = [a + i for i in range(count)]
    out = vectors.weighted_sum(vs, [1.0 / count] * count)
    expected = sum(vs) / count
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


@given(arrays(np.float64, 6, elements=st.floats(min_value=1e-3, max_value=1e3)))
def test_square_then_divide_recovers_input(a):
    np.testing.assert_allclose(vectors.div(vectors.square(a), a), a, rtol=1e-12)
