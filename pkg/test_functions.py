"""
Anchor functions, McShane extension, combinators and the JSON function registry
"""
import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from functions.anchor import AnchorFunction, constant_function, lipschitz_regularize, mcshane_eval, random_lipschitz
from functions.base import function_from_dict
from functions.combined import Complement, Constant, Identity, Projection, Scaled, compose, concat, mean
from functions.lipschitz import lipschitz_estimate
from utils.errors import DimensionError, SchemaError
from utils.numerics import INF, NormKind, normalized_norm


def test_single_anchor_extends_by_distance():
    f = AnchorFunction([[0.5]], [[0.5]], 1.0)
    assert mcshane_eval(f, [0.7]).tolist() == pytest.approx([0.7])
    assert f([0.5]).tolist() == pytest.approx([0.5])


def test_two_anchors_interpolate_the_identity():
    f = AnchorFunction([[0.0], [1.0]], [[0.0], [1.0]], 1.0)
    assert f([0.3]).tolist() == pytest.approx([0.3])
    assert f([1.0]).tolist() == pytest.approx([1.0])


def test_extension_is_clamped_to_the_unit_cube():
    f = AnchorFunction([[0.0]], [[0.9]], 2.0)
    assert f([1.0]).tolist() == [1.0]


def test_anchors_breaking_lambda_are_rejected():
    with pytest.raises(ValueError, match="Lipschitz"):
        AnchorFunction([[0.0], [1.0]], [[0.0], [1.0]], 0.5)


def test_anchor_values_outside_the_cube_are_rejected():
    with pytest.raises(ValueError):
        AnchorFunction([[0.0]], [[1.5]], 1.0)


def test_mismatched_anchor_counts():
    with pytest.raises(DimensionError):
        AnchorFunction([[0.0], [1.0]], [[0.0]], 1.0)


def test_regularize_pulls_values_down_to_the_bound():
    f = lipschitz_regularize([([0.0], [0.0]), ([1.0], [0.9])], 0.5)
    assert f.values.ravel().tolist() == pytest.approx([0.0, 0.5])
    assert f.lipschitz_violation() is None


def test_regularize_keeps_regular_data():
    raw = [([0.0, 0.0], [0.2]), ([1.0, 1.0], [0.7])]
    f = lipschitz_regularize(raw, 1.0)
    assert f.values.ravel().tolist() == pytest.approx([0.2, 0.7])


@pytest.mark.parametrize("p", ["inf", 1, 2])
def test_regularize_yields_regular_anchors_for_every_norm(p):
    f = random_lipschitz(seed=3, n=3, m=2, lam=0.7, norm=p, anchor_count=12)
    assert f.lipschitz_violation() is None
    # extension agrees with the anchors
    for s, v in f.anchors:
        assert f(s) == pytest.approx(v)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from(["inf", 2]))
def test_random_function_respects_its_bound(seed, p):
    f = random_lipschitz(seed=seed, n=2, m=2, lam=0.8, norm=p)
    estimate = lipschitz_estimate(f, 2, sample_budget=200, seed=seed, norm=p)
    assert estimate <= f.lipschitz + 1e-9


def test_constant_function_has_zero_lambda():
    f = constant_function([0.25, 0.75], in_dim=3)
    assert f.lipschitz == 0.0
    assert f([0.1, 0.9, 0.5]).tolist() == pytest.approx([0.25, 0.75])


def test_wrong_input_dimension_is_rejected():
    with pytest.raises(DimensionError):
        Identity(2)([0.5])


def test_compose_multiplies_bounds():
    f = compose(Scaled(Identity(1), 0.5), Complement(Identity(1)))
    assert f.lipschitz == pytest.approx(0.5)
    assert f([0.4]).tolist() == pytest.approx([0.8])


def test_compose_checks_the_middle_dimension():
    with pytest.raises(DimensionError):
        compose(Identity(2), Identity(3))


def test_concat_bound_under_max_norm_is_the_larger_one():
    f = concat(Identity(2), Scaled(Identity(2), 0.25))
    assert f.out_dim == 4
    assert f.lipschitz == pytest.approx(1.0)
    assert f([0.2, 0.4]).tolist() == pytest.approx([0.2, 0.4, 0.05, 0.1])


def test_concat_bound_under_l2_weighs_blocks_by_width():
    norm = NormKind.parse(2)
    f = concat(Identity(1, norm), Scaled(Identity(1, norm), 0.5))
    assert f.lipschitz == pytest.approx(math.sqrt((1 + 0.25) / 2))


def test_mean_averages_values_and_bounds():
    f = mean(Identity(1), Complement(Identity(1)))
    assert f.lipschitz == pytest.approx(1.0)
    assert f([0.9]).tolist() == pytest.approx([0.5])


def test_combining_different_norms_is_an_error():
    with pytest.raises(ValueError):
        mean(Identity(1, INF), Identity(1, 2))


@pytest.mark.parametrize("p, expected", [("inf", 1.0), (1, 4.0), (2, 2.0)])
def test_projection_bound(p, expected):
    proj = Projection(4, 1, 1, p)
    assert proj.lipschitz == pytest.approx(expected)
    assert proj([0.1, 0.2, 0.3, 0.4]).tolist() == pytest.approx([0.2])


def test_projection_bound_is_tight_for_l2():
    proj = Projection(4, 0, 1, 2)
    x, y = np.zeros(4), np.array([1.0, 0.0, 0.0, 0.0])
    ratio = normalized_norm(proj(x) - proj(y), 2) / normalized_norm(x - y, 2)
    assert ratio == pytest.approx(proj.lipschitz)


def test_projection_must_fit():
    with pytest.raises(DimensionError):
        Projection(3, 2, 2)


def test_scaled_factor_must_be_a_contraction():
    with pytest.raises(ValueError):
        Scaled(Identity(1), 1.5)


def test_constant_outside_the_cube_is_rejected():
    with pytest.raises(ValueError):
        Constant([1.2], 1)


def test_nested_function_survives_json():
    inner = random_lipschitz(seed=11, n=2, m=1, lam=0.9, anchor_count=5)
    f = concat(Complement(inner), Scaled(Projection(2, 0, 1), 0.5))
    g = function_from_dict(f.to_dict())
    assert (g.in_dim, g.out_dim) == (2, 2)
    assert g.lipschitz == pytest.approx(f.lipschitz)
    for x in ([0.0, 0.0], [0.3, 0.8], [1.0, 0.5]):
        assert g(x).tolist() == f(x).tolist()


def test_unknown_function_type():
    with pytest.raises(SchemaError):
        function_from_dict({"type": "spline", "n": 1, "m": 1, "p": "inf", "lambda": "1"})


def test_anchor_dims_must_match_declaration():
    doc = AnchorFunction([[0.5]], [[0.5]], 1.0).to_dict()
    doc["m"] = 2
    with pytest.raises(SchemaError):
        function_from_dict(doc)


def test_estimate_of_identity_is_one():
    assert lipschitz_estimate(Identity(3), 3, sample_budget=100) == pytest.approx(1.0)


def test_estimate_of_constant_is_zero():
    assert lipschitz_estimate(Constant([0.5], 2), 2, sample_budget=50) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_mean_is_symmetric(seed):
    f = random_lipschitz(seed, 2, 2, 1.0)
    g = random_lipschitz(seed + 50, 2, 2, 0.5)
    forward, backward = mean(f, g), mean(g, f)
    assert forward.lipschitz == backward.lipschitz
    for x in np.random.default_rng(seed).random((20, 2)):
        assert np.array_equal(forward(x), backward(x))


@pytest.mark.parametrize("p", ["inf", 2])
def test_zero_lipschitz_random_function_is_constant(p):
    f = random_lipschitz(11, 3, 2, 0.0, p)
    assert f.lipschitz == 0.0
    reference = f(np.zeros(3))
    for x in np.random.default_rng(0).random((50, 3)):
        assert np.array_equal(f(x), reference)
    assert lipschitz_estimate(f, 3, sample_budget=100, norm=p) == 0.0


@pytest.mark.parametrize("p", ["inf", 2])
@pytest.mark.parametrize("seed", range(10))
def test_combined_maps_stay_within_their_certified_bounds(seed, p):
    f = random_lipschitz(seed, 2, 3, 1.5, p)
    g = random_lipschitz(seed + 100, 3, 2, 0.8, p)
    h = random_lipschitz(seed + 200, 2, 2, 1.2, p)
    k = random_lipschitz(seed + 300, 2, 1, 2.0, p)
    combos = [compose(f, g), concat(f, k), mean(compose(f, g), h), concat(mean(h, compose(f, g)), k)]
    for combo in combos:
        assert lipschitz_estimate(combo, 2, 400, seed, norm=p) <= combo.lipschitz + 1e-6
