import math
from fractions import Fraction

import pytest

from domains import ball, polydisc
from errors import ConfigError, InputError
from weights import (
    SublevelRegion,
    as_rational,
    combined,
    evaluate,
    in_sublevel,
    region_below_log,
    scaled,
    snapped_floor,
    toric,
    validate_negative,
    weight_from_dict,
    weight_sup,
    weight_to_dict,
)


def test_evaluate():
    w = toric([2])
    assert evaluate(w, [0.5]) == pytest.approx(2 * math.log(0.5))
    assert evaluate(w, [0]) == -math.inf
    assert evaluate(toric([1, 0]), [0.5, 0]) == pytest.approx(math.log(0.5))


def test_scale_and_fraction_coefficients():
    w = toric(["2/3"], scale=3)
    assert w.effective_exact() == (Fraction(2),)
    assert scaled(w, 2).effective()[0] == pytest.approx(4.0)
    assert combined(toric([1, 2]), toric([1, 0])).effective_exact() == (2, 2)


def test_validate_negative(disc):
    assert validate_negative(toric([2]), disc)
    assert not validate_negative(toric([2.0]), polydisc([2.0]))
    assert weight_sup(toric([1, 1]), ball(1.0, 2)) == pytest.approx(math.log(0.5))


def test_in_sublevel(disc):
    region = SublevelRegion(disc, toric([2]), 1.0)
    assert in_sublevel(region, [0.6])
    assert not in_sublevel(region, [0.61])
    assert in_sublevel(region, [0])


def test_region_below_log(disc):
    region = region_below_log(disc, toric([1]), 0.5)
    assert region.threshold == pytest.approx(math.log(2))
    with pytest.raises(InputError):
        region_below_log(disc, toric([1]), 1.5)


@pytest.mark.parametrize("value,expected", [
    (2.9999999999999996, 3),
    (2.5, 2),
    (Fraction(7, 2), 3),
    (-0.5, -1),
])
def test_snapped_floor(value, expected):
    assert snapped_floor(value) == expected


def test_as_rational():
    assert as_rational(0.5) == Fraction(1, 2)
    assert as_rational(math.pi) is None


def test_invalid_weights(disc):
    with pytest.raises(InputError):
        toric([-1])
    with pytest.raises(InputError):
        toric([0, 0])
    with pytest.raises(InputError):
        combined(toric([1]), toric([1, 1]))
    with pytest.raises(InputError):
        SublevelRegion(disc, toric([1]), -0.5)


def test_weight_dict():
    w = weight_from_dict({"type": "toric", "coeffs": ["1/2", 1], "scale": 2})
    assert w.effective_exact() == (Fraction(1), 2)
    assert weight_from_dict(weight_to_dict(w)) == w
    with pytest.raises(ConfigError, match="psi.type"):
        weight_from_dict({"type": "max", "coeffs": [1]}, "psi")
