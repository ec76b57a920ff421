import math

import numpy as np
import pytest

from domains import (
    ball,
    contains,
    contains_many,
    describe,
    domain_from_dict,
    domain_to_dict,
    euclidean_volume,
    log_shadow,
    polydisc,
)
from errors import ConfigError, InputError


def test_disc_membership(disc):
    assert contains(disc, [0])
    assert not contains(disc, [1])
    assert contains(disc, [0.999j])


def test_ball_membership(ball2):
    assert contains(ball2, [0.6, 0.7])
    assert not contains(ball2, [0.8, 0.7])


def test_dimension_mismatch(disc):
    with pytest.raises(InputError):
        contains(disc, [0.1, 0.2])


@pytest.mark.parametrize("domain,expected", [
    (polydisc([1.0]), math.pi),
    (ball(1.0, 2), math.pi ** 2 / 2),
    (polydisc([1.0, 2.0]), 4 * math.pi ** 2),
    (ball(2.0, 3), math.pi ** 3 * 2.0 ** 6 / 6),
])
def test_volumes(domain, expected):
    assert euclidean_volume(domain) == pytest.approx(expected, rel=1e-15)


def test_contains_many_matches_direct_inequality(rng):
    pts = (rng.uniform(-1.2, 1.2, (500, 2)) + 1j * rng.uniform(-1.2, 1.2, (500, 2)))
    box = polydisc([1.0, 0.8])
    expected = (np.abs(pts[:, 0]) < 1.0) & (np.abs(pts[:, 1]) < 0.8)
    np.testing.assert_array_equal(contains_many(box, pts), expected)

    b = ball(1.1, 2)
    expected = np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2 < 1.21
    np.testing.assert_array_equal(contains_many(b, pts), expected)


def test_invalid_radii():
    with pytest.raises(InputError):
        polydisc([1.0, -1.0])
    with pytest.raises(InputError):
        ball(float("inf"), 2)
    with pytest.raises(InputError):
        ball(1.0, 0)


def test_log_shadow_is_downward_closed():
    shadow = log_shadow(polydisc([1.0, 2.0]))
    assert shadow.contains([-1.0, 0.5])
    assert shadow.contains([-5.0, -3.0])
    assert not shadow.contains([0.1, 0.0])

    ball_shadow = log_shadow(ball(1.0, 2))
    assert ball_shadow.contains([-1.0, -1.0])
    assert not ball_shadow.contains([0.0, -0.1])


def test_dict_round_trip_and_errors():
    for domain in (polydisc([1.0, 0.5]), ball(2.0, 3)):
        assert domain_from_dict(domain_to_dict(domain)) == domain
    with pytest.raises(ConfigError, match="domain.kind"):
        domain_from_dict({"kind": "annulus"})
    with pytest.raises(ConfigError, match="radii"):
        domain_from_dict({"kind": "polydisc", "radii": []})
    assert describe(ball(1.0, 2)) == "ball(n=2, R=1)"
