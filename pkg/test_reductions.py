"""
Reductions between the Brouwer variants, local families and imitation games
"""
import math

import numpy as np
import pytest

from functions.combined import Complement, Constant, Identity, compose
from functions.lipschitz import lipschitz_estimate
from protocols.instances import COMP, CONCAT, LOCAL, MEAN, BrouwerInstance, random_instance
from reductions.brouwer import comp_to_concat, concat_to_mean, mean_to_comp
from reductions.imitation import (
    ImitationGame,
    Profile,
    comp_to_imitation_game,
    comp_to_nash,
    enumerate_approx_pure_nash,
    fixed_point_1d,
    nash_profile_to_point,
    rounded_fixed_point_profile,
)
from reductions.local import LocalFamily, local_eval, local_to_comp, random_local_family
from reductions.records import BackmapStep, EpsilonMap, ReductionRecord
from utils.errors import ReductionError, SchemaError, SizeLimitError

rng = np.random.default_rng(1234)
SAMPLE_POINTS_2D = rng.random((8, 2))
SAMPLE_POINTS_4D = rng.random((8, 4))


def test_concat_to_mean_halves_the_residual():
    src = random_instance(CONCAT, seed=5, n=2, lam=0.8, epsilon=0.2)
    record = concat_to_mean(src)
    assert record.target.kind == MEAN
    assert record.target.epsilon == pytest.approx(0.1)
    assert record.epsilon_map.scale == 2.0
    for x in SAMPLE_POINTS_2D:
        assert 2 * record.target.residual(x) == pytest.approx(src.residual(x))
    assert record.backmap([0.2, 0.4]).tolist() == [0.2, 0.4]


def test_mean_to_comp_is_pointwise_exact():
    src = random_instance(MEAN, seed=6, n=2, lam=1.0, epsilon=0.15)
    record = mean_to_comp(src)
    assert record.target.kind == COMP
    assert record.target.epsilon == src.epsilon
    for x in SAMPLE_POINTS_2D:
        assert record.target.evaluate(x) == pytest.approx(src.evaluate(x))


def test_comp_to_concat_scale_for_identities():
    src = BrouwerInstance(COMP, Identity(1), Identity(1), epsilon=0.4)
    record = comp_to_concat(src)
    assert record.epsilon_map.scale == pytest.approx(8.0)
    assert record.target.epsilon == pytest.approx(0.05)
    assert record.target.dim == 4
    # (a, x_1, b, x_2) with x_1 = x_2 is an exact fixed point
    point = np.array([0.3, 0.6, 0.7, 0.6])
    assert record.target.residual(point) == pytest.approx(0.0)
    assert record.backmap(point).tolist() == [0.6]


@pytest.mark.parametrize("p", ["inf", 2])
@pytest.mark.parametrize("seed", range(3))
def test_comp_to_concat_carries_any_residual_back(p, seed):
    src = random_instance(COMP, seed=seed, n=1, lam=0.9, epsilon=0.1, norm=p)
    record = comp_to_concat(src)
    for w in SAMPLE_POINTS_4D:
        e = record.target.residual(w)
        x = record.backmap(w)
        assert src.residual(x) <= record.epsilon_map(e) + 1e-12


def test_comp_to_concat_checks_c():
    src = random_instance(COMP, seed=0, n=1, m=2)
    with pytest.raises(ReductionError):
        comp_to_concat(src, c=1.5)
    assert comp_to_concat(src, c=2.0).epsilon_map.scale == pytest.approx(2 * 3 * (src.lambda_b + 1))


@pytest.mark.parametrize("p", ["inf", 2])
@pytest.mark.parametrize("n, m", [(1, 1), (1, 3), (2, 1)])
def test_comp_to_concat_claims_the_combinator_bounds(n, m, p):
    lam = 1.5
    src = random_instance(COMP, seed=3, n=n, m=m, lam=lam, norm=p)
    record = comp_to_concat(src)
    claim_a, claim_b = record.claimed_bounds
    assert claim_a == pytest.approx(record.target.f_a.lipschitz)
    assert claim_b == pytest.approx(record.target.f_b.lipschitz)
    if p == "inf":
        assert (claim_a, claim_b) == pytest.approx((lam, lam))
    else:
        total = 2 * (n + m)
        assert claim_a <= math.sqrt(total / n) * (lam + 1)
        assert claim_b <= math.sqrt(total / m) * (lam + 1)
    if n == m:
        assert max(claim_a, claim_b) <= 4 * (lam + 1)


@pytest.mark.parametrize("p", ["inf", 2])
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize(
    "kind, reduce",
    [(CONCAT, concat_to_mean), (MEAN, mean_to_comp), (COMP, comp_to_concat)],
    ids=["concat_to_mean", "mean_to_comp", "comp_to_concat"],
)
def test_reduction_targets_stay_within_their_claimed_bounds(kind, reduce, seed, p):
    src = random_instance(kind, seed=seed, n=2, lam=1.5, epsilon=0.2, norm=p)
    record = reduce(src)
    for f, claim in zip((record.target.f_a, record.target.f_b), record.claimed_bounds):
        assert lipschitz_estimate(f, f.in_dim, 400, seed, norm=p) <= claim + 1e-6


def test_reductions_check_the_source_kind():
    comp = random_instance(COMP, seed=0, n=1)
    with pytest.raises(ReductionError):
        concat_to_mean(comp)
    with pytest.raises(ReductionError):
        mean_to_comp(comp)
    with pytest.raises(ReductionError):
        local_to_comp(comp)


def test_chained_records_compose_scales_and_back_maps():
    src = random_instance(CONCAT, seed=2, n=2, epsilon=0.2)
    first = concat_to_mean(src)
    second = mean_to_comp(first.target)
    chain = first.then(second)
    assert chain.kinds == ["concat_to_mean", "mean_to_comp"]
    assert chain.source is src
    assert chain.target is second.target
    assert chain.epsilon_map.scale == pytest.approx(2.0)
    assert chain.backmap([0.1, 0.9]).tolist() == [0.1, 0.9]


def test_chaining_unrelated_records_fails():
    first = concat_to_mean(random_instance(CONCAT, seed=2, n=2))
    other = mean_to_comp(random_instance(MEAN, seed=3, n=2))
    with pytest.raises(ReductionError):
        first.then(other)


def test_record_survives_json():
    src = random_instance(COMP, seed=8, n=1, m=1)
    record = comp_to_concat(src, c=1.0)
    again = ReductionRecord.from_dict(record.to_dict())
    assert again.kinds == ["comp_to_concat"]
    assert again.epsilon_map == record.epsilon_map
    assert again.source.to_dict() == src.to_dict()
    assert again.backmap([0.1, 0.2, 0.3, 0.4]).tolist() == [0.4]


def test_unknown_backmap_step():
    with pytest.raises(SchemaError):
        BackmapStep("teleport").apply([0.5])


def test_epsilon_map_without_scale_stays_open():
    closed = EpsilonMap(2.0, "halves")
    open_ = EpsilonMap(None, "measured")
    assert closed(0.1) == pytest.approx(0.2)
    assert closed.target_for(0.2) == pytest.approx(0.1)
    assert closed.then(open_).scale is None
    assert open_(0.1) is None
    assert closed.then(EpsilonMap(3.0)).scale == pytest.approx(6.0)


# -- local families ----------------------------------------------------------


@pytest.fixture
def family():
    return random_local_family(seed=7, N=6, n=2, r=2, regions=2)


def test_local_family_is_seeded(family):
    again = random_local_family(seed=7, N=6, n=2, r=2, regions=2)
    assert again.to_dict() == family.to_dict()
    z = [0.3, 0.8]
    assert family.L(z) == again.L(z)
    assert len(family.L(z)) == 2


def test_local_to_comp_reproduces_every_member(family):
    record = local_to_comp(family, epsilon=0.2)
    assert record.source.kind == LOCAL
    assert record.target.kind == COMP
    assert record.target.f_a.out_dim == 2 * (2 ** 2 + 1)
    for z in SAMPLE_POINTS_2D:
        assert record.target.evaluate(z).tolist() == pytest.approx(local_eval(family, z).tolist())


def test_local_spread_bound_under_max_norm(family):
    record = local_to_comp(family)
    assert record.claimed_bounds[0] == pytest.approx(max(family.lipschitz, 1.0))


def test_local_family_json_keeps_inputs(family):
    again = LocalFamily.from_dict(family.to_dict())
    for z in SAMPLE_POINTS_2D:
        assert local_eval(again, z).tolist() == local_eval(family, z).tolist()


def test_local_family_limits():
    with pytest.raises(ValueError):
        LocalFamily(N=2, n=1, r=3)
    with pytest.raises(ValueError):
        local_eval(LocalFamily(N=4, n=1, r=1), [0.5])


def test_bump_vanishes_on_region_walls(family):
    z = np.array([0.5, 0.25])
    values = {tuple(family.f_prime(a, b, z)) for a in ((0, 0), (1, 1)) for b in ((0, 1), (1, 0))}
    assert len(values) == 1


def test_bump_vectors_are_drawn_per_key():
    wide = LocalFamily(N=12, n=3, r=12, seed=5)
    assert wide._bumps == {}
    first = wide.bump_vector(4 ** 12 - 1)
    assert first.shape == (3,)
    assert np.all(np.abs(first) <= 1.0)
    assert len(wide._bumps) == 1
    assert np.array_equal(LocalFamily(N=12, n=3, r=12, seed=5).bump_vector(4 ** 12 - 1), first)
    with pytest.raises(ValueError):
        wide.bump_vector(4 ** 12)


@pytest.mark.parametrize("p", ["inf", 2])
@pytest.mark.parametrize("seed", range(10))
def test_local_to_comp_maps_stay_within_their_claimed_bounds(seed, p):
    fam = random_local_family(seed=seed, N=6, n=2, r=2, regions=2, norm=p)
    record = local_to_comp(fam)
    f_a, f_b = record.target.f_a, record.target.f_b
    claim_a, claim_b = record.claimed_bounds
    assert lipschitz_estimate(f_a, 2, 400, seed, norm=p) <= claim_a + 1e-6
    # the selector is only Lipschitz on the range of the spread map
    on_range = lambda rng: f_a(rng.random(2))  # noqa: E731
    assert lipschitz_estimate(f_b, f_b.in_dim, 400, seed, norm=p, sampler=on_range) <= claim_b + 1e-6


@pytest.mark.slow
def test_local_to_comp_is_exact_on_many_points():
    rng = np.random.default_rng(99)
    for i in range(20):
        n = 1 + i % 4
        r = i % 4
        fam = random_local_family(seed=i, N=4 + i % 13, n=n, r=r, regions=2)
        target = local_to_comp(fam).target
        for z in rng.random((10_000, n)):
            assert np.array_equal(target.evaluate(z), local_eval(fam, z))


# -- imitation games ---------------------------------------------------------


def _euclidean_identity_comp():
    return BrouwerInstance(COMP, Identity(1, 2), Identity(1, 2), epsilon=0.1)


def test_identity_game_equilibria_sit_on_the_diagonal():
    game = comp_to_imitation_game(_euclidean_identity_comp(), 0.5)
    profiles = enumerate_approx_pure_nash(game, 0.0)
    assert [p.index for p in profiles] == [0, 4, 8]
    for p in profiles:
        assert p.x.tolist() == p.y.tolist()
        assert p.regret == 0.0


def test_imitation_games_need_the_euclidean_norm():
    with pytest.raises(ReductionError):
        comp_to_imitation_game(BrouwerInstance(COMP, Identity(1), Identity(1)), 0.5)


def test_profile_cap():
    with pytest.raises(SizeLimitError):
        comp_to_imitation_game(_euclidean_identity_comp(), 0.5, max_profiles=4)


def test_profile_cap_from_environment(monkeypatch):
    monkeypatch.setenv("FIXPOINT_MAX_PROFILES", "8")
    with pytest.raises(SizeLimitError):
        comp_to_imitation_game(_euclidean_identity_comp(), 0.5)


def test_game_json_rebuilds_from_source():
    game = comp_to_imitation_game(_euclidean_identity_comp(), 0.25)
    again = ImitationGame.from_dict(game.to_dict())
    assert again.profile_count == game.profile_count == 25
    assert np.array_equal(again.regret_table(), game.regret_table())


def test_nash_back_map_reads_x():
    record = comp_to_nash(_euclidean_identity_comp(), 0.5)
    profile = Profile(np.array([0.5]), np.array([0.5]), 4, 0.0)
    assert record.backmap(profile).tolist() == [0.5]
    assert record.backmap(profile.to_dict()).tolist() == [0.5]
    assert record.epsilon_map.scale is None


@pytest.mark.parametrize(
    "f, expected",
    [(Complement(Identity(1)), 0.5), (Constant([0.3], 1), 0.3)],
)
def test_fixed_point_1d(f, expected):
    assert fixed_point_1d(f) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_rounded_fixed_point_has_small_regret(seed):
    src = random_instance(COMP, seed=seed, n=1, lam=1.0, epsilon=0.1, norm=2)
    alpha = 0.1
    game = comp_to_imitation_game(src, alpha)
    x_star = fixed_point_1d(compose(src.f_a, src.f_b))
    x, y = rounded_fixed_point_profile(game, [x_star])
    # each player is at most (lambda + 1) * alpha / 2 off its best reply
    assert game.profile_regret(x, y) <= ((1.0 + 1.0) * alpha / 2) ** 2 + 1e-12


@pytest.mark.parametrize("alpha", [1 / 4, 1 / 8, 1 / 16])
@pytest.mark.parametrize("seed", range(10))
def test_rounded_fixed_point_regret_across_grids(alpha, seed):
    lam = 1.0
    src = random_instance(COMP, seed=seed, n=1, lam=lam, epsilon=0.1, norm=2)
    game = comp_to_imitation_game(src, alpha)
    x, y = rounded_fixed_point_profile(game, [fixed_point_1d(compose(src.f_a, src.f_b))])
    assert game.profile_regret(x, y) <= 8 * (lam + 1) ** 2 * alpha


@pytest.mark.parametrize("alpha", [1 / 4, 1 / 8, 1 / 16])
def test_residual_envelope_grows_with_the_regret_threshold(alpha):
    for seed in range(10):
        src = random_instance(COMP, seed=seed, n=1, lam=1.0, epsilon=0.1, norm=2)
        game = comp_to_imitation_game(src, alpha)
        x, y = rounded_fixed_point_profile(game, [fixed_point_1d(compose(src.f_a, src.f_b))])
        floor = game.profile_regret(x, y)
        envelope = []
        for extra in (0.0, 0.01, 0.04, 0.16):
            profiles = enumerate_approx_pure_nash(game, floor + extra)
            assert profiles
            envelope.append(max(src.residual(nash_profile_to_point(p)) for p in profiles))
        assert envelope == sorted(envelope)
        assert src.residual(x) <= envelope[0]


def test_imitation_games_need_a_closed_grid():
    with pytest.raises(ValueError):
        comp_to_imitation_game(_euclidean_identity_comp(), 0.3)
