import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperpot import (
    DiscreteSpace,
    InvalidRadiusError,
    InvariantViolationError,
    ball,
    ball_measure,
    canonical_radii,
    doubling_constant,
    quasi_triangle_constant,
    rescale,
)


def cyclic_space(n, power=1.0):
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    rho = np.minimum(diff, n - diff).astype(float) ** power
    return DiscreteSpace(
        rho=rho,
        haar=np.ones(n),
        identity=0,
        involution=(-idx) % n,
        dim_exponent=1.0,
    )


def brute_doubling(space, radii):
    worst = 1.0
    for x in range(space.n_points):
        for r in radii:
            small = space.haar[space.rho[x] < r].sum()
            large = space.haar[space.rho[x] < 2 * r].sum()
            worst = max(worst, large / small)
    return worst


def brute_quasi_const(space):
    n, rho = space.n_points, space.rho
    worst = 0.0
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            best = min(rho[x, z] + rho[z, y] for z in range(n))
            worst = max(worst, rho[x, y] / best)
    return worst


spaces = st.builds(
    lambda seed, n: _random_space(seed, n),
    st.integers(0, 2**31 - 1),
    st.integers(2, 7),
)


def _random_space(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 10.0, size=(n, n))
    rho = 0.5 * (a + a.T)
    np.fill_diagonal(rho, 0.0)
    return DiscreteSpace(
        rho=rho,
        haar=rng.uniform(0.1, 5.0, size=n),
        identity=0,
        involution=np.arange(n),
        dim_exponent=1.0,
    )


class TestConstruction:
    def test_rejects_asymmetric(self):
        rho = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(rho, np.ones(2), 0, np.arange(2), 1.0)

    def test_rejects_zero_off_diagonal(self):
        rho = np.zeros((2, 2))
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(rho, np.ones(2), 0, np.arange(2), 1.0)

    def test_rejects_nonpositive_haar(self):
        rho = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(rho, np.array([1.0, 0.0]), 0, np.arange(2), 1.0)

    def test_rejects_non_involutive_permutation(self):
        s = cyclic_space(4)
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(s.rho, s.haar, 0, np.array([1, 2, 3, 0]), 1.0)

    def test_rejects_involution_breaking_weights(self):
        rho = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 2.0], [1.0, 2.0, 0.0]])
        haar = np.array([1.0, 2.0, 3.0])
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(rho, haar, 0, np.array([0, 2, 1]), 1.0)

    def test_rejects_understated_quasi_const(self):
        s = cyclic_space(6, power=2.0)
        with pytest.raises(InvariantViolationError):
            DiscreteSpace(s.rho, s.haar, 0, s.involution, 1.0, quasi_const=1.5)

    def test_measures_quasi_const_when_omitted(self):
        assert cyclic_space(6).quasi_const == 1.0
        assert cyclic_space(6, power=2.0).quasi_const == 2.0


class TestBalls:
    def test_cyclic_ball_wraps(self):
        s = cyclic_space(6)
        assert set(ball(s, 0, 1.5)) == {0, 1, 5}
        assert set(ball(s, 0, 1.0)) == {0}
        assert set(ball(s, 2, 2.5)) == {0, 1, 2, 3, 4}

    def test_ball_measure_weighted(self):
        # three conjugacy-class sized weights
        rho = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
        s = DiscreteSpace(rho, np.array([1.0, 3.0, 2.0]), 0, np.arange(3), 1.0)
        assert ball_measure(s, 0, 10.0) == 6.0
        assert ball_measure(s, 0, 1.5) == 4.0
        assert ball_measure(s, 0, 0.5) == 1.0

    def test_rejects_nonpositive_radius(self):
        s = cyclic_space(4)
        with pytest.raises(InvalidRadiusError):
            ball(s, 0, 0.0)
        with pytest.raises(InvalidRadiusError):
            ball_measure(s, 0, -1.0)

    @given(spaces, st.floats(0.01, 20.0), st.floats(0.0, 5.0))
    def test_ball_monotone_in_radius(self, s, r, bump):
        inner = set(ball(s, 0, r).tolist())
        outer = set(ball(s, 0, r + bump).tolist())
        assert inner <= outer

    @given(spaces, st.integers(0, 6))
    def test_ball_content_constant_between_distances(self, s, ci):
        center = ci % s.n_points
        dist = np.unique(s.rho[center])
        for lo, hi in zip(dist[:-1], dist[1:]):
            a = ball_measure(s, center, lo + 0.25 * (hi - lo))
            b = ball_measure(s, center, lo + 0.75 * (hi - lo))
            assert a == b


class TestCanonicalRadii:
    def test_midpoints_plus_beyond_diameter(self):
        s = cyclic_space(6)
        np.testing.assert_allclose(
            canonical_radii(s, center=0), [0.5, 1.5, 2.5, 4.0]
        )

    def test_edge_mode_returns_distances(self):
        s = cyclic_space(6)
        np.testing.assert_allclose(
            canonical_radii(s, center=0, mode="edge"), [1.0, 2.0, 3.0]
        )

    def test_single_point_space(self):
        s = DiscreteSpace(
            np.zeros((1, 1)), np.ones(1), 0, np.zeros(1, dtype=int), 1.0
        )
        np.testing.assert_allclose(canonical_radii(s), [1.0])

    @given(spaces)
    def test_midpoint_grid_realizes_every_ball(self, s):
        # every distinct ball at the identity shows up for some grid radius
        grid = canonical_radii(s, center=0)
        seen = {frozenset(ball(s, 0, r).tolist()) for r in grid}
        fine = np.linspace(1e-6, s.diameter + 1.0, 200)
        want = {frozenset(ball(s, 0, r).tolist()) for r in fine}
        assert want <= seen


class TestDoubling:
    def test_cyclic_twelve(self):
        s = cyclic_space(12)
        assert doubling_constant(s) == pytest.approx(1.8)

    def test_cyclic_six(self):
        s = cyclic_space(6)
        assert doubling_constant(s) == pytest.approx(5.0 / 3.0)

    def test_single_point(self):
        s = DiscreteSpace(
            np.zeros((1, 1)), np.ones(1), 0, np.zeros(1, dtype=int), 1.0
        )
        assert doubling_constant(s) == 1.0

    @given(spaces)
    def test_matches_brute_force(self, s):
        radii = canonical_radii(s)
        assert doubling_constant(s, radii) == pytest.approx(brute_doubling(s, radii))

    @given(spaces, st.floats(0.1, 7.0))
    def test_invariant_under_uniform_weight_scaling(self, s, c):
        scaled = rescale(s, 1.0, c)
        assert doubling_constant(scaled) == pytest.approx(doubling_constant(s))


class TestQuasiTriangle:
    def test_metric_gives_one(self):
        assert quasi_triangle_constant(cyclic_space(8)) == 1.0

    def test_squared_metric(self):
        assert quasi_triangle_constant(cyclic_space(6, power=2.0)) == 2.0

    @settings(max_examples=30)
    @given(spaces)
    def test_matches_brute_force(self, s):
        assert quasi_triangle_constant(s) == pytest.approx(brute_quasi_const(s))

    @given(spaces)
    def test_constant_certifies_all_triples(self, s):
        c = quasi_triangle_constant(s)
        n, rho = s.n_points, s.rho
        slack = 1.0 + 1e-12
        for z in range(n):
            assert np.all(rho <= c * (rho[:, [z]] + rho[[z], :]) * slack)


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        s = cyclic_space(7, power=1.5)
        p = tmp_path / "space.json"
        s.save(p)
        t = DiscreteSpace.load(p)
        np.testing.assert_array_equal(s.rho, t.rho)
        np.testing.assert_array_equal(s.haar, t.haar)
        np.testing.assert_array_equal(s.involution, t.involution)
        assert (s.identity, s.dim_exponent) == (t.identity, t.dim_exponent)

    def test_keys(self):
        d = cyclic_space(3).to_dict()
        assert set(d) == {
            "n_points", "rho", "haar", "identity", "involution", "dim_exponent"
        }
        json.dumps(d)  # plain types only

    @given(spaces)
    def test_dict_round_trip(self, s):
        t = DiscreteSpace.from_dict(s.to_dict())
        np.testing.assert_array_equal(s.rho, t.rho)
        assert t.quasi_const == pytest.approx(s.quasi_const)


class TestRescale:
    def test_scales_distances_and_weights(self):
        s = cyclic_space(6)
        t = rescale(s, 2.0, 3.0)
        np.testing.assert_allclose(t.rho, 2.0 * s.rho)
        np.testing.assert_allclose(t.haar, 3.0 * s.haar)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            rescale(cyclic_space(4), 0.0, 1.0)
