"""Coalition tables, exact Shapley attribution, and profile summaries."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphoprobe.errors import DataError, DegenerateTaskError
from morphoprobe.perturb import PLAYERS
from morphoprobe.shapley import (FULL_MASK, N_COALITIONS, CoalitionTable,
                                 ShapleyProfile, coalition_value, dfm,
                                 generalization_variance, load_profile,
                                 load_table, save_profile, save_table,
                                 shapley_from_table,
                                 shapley_permutation_oracle, shapley_raw)


def _random_table(rng, attested_mask=FULL_MASK):
    base = rng.uniform(0.3, 0.7, size=N_COALITIONS)
    base[0] = 0.2
    base[FULL_MASK] = 0.95
    accs = base[np.arange(N_COALITIONS) & attested_mask]
    return CoalitionTable(accs=accs, model_id="m", task="t",
                          attested_mask=attested_mask)


# -- table basics -----------------------------------------------------------

def test_table_shape_checked():
    with pytest.raises(DataError):
        CoalitionTable(accs=np.zeros(100))


def test_values_normalization():
    table = _random_table(np.random.default_rng(0))
    v = table.values()
    assert v[0] == 0.0
    assert v[FULL_MASK] == 100.0
    assert coalition_value(table, 0) == 0.0
    assert coalition_value(table, FULL_MASK) == 100.0
    with pytest.raises(DataError):
        coalition_value(table, N_COALITIONS)


def test_degenerate_table_refused():
    table = CoalitionTable(accs=np.full(N_COALITIONS, 0.5))
    with pytest.raises(DegenerateTaskError):
        table.values()


# -- the closed-form fast path against first principles ---------------------

# Worked 3-player game: target/left/right with v({T})=80, v({L})=10,
# v({R})=5, v({T,L})=90, v({T,R})=85, v({L,R})=20, v(N)=100.
GAME3 = np.array([0.0, 80.0, 10.0, 90.0, 5.0, 85.0, 20.0, 100.0])


def test_fixed_three_player_game():
    phi = shapley_raw(GAME3, 3)
    assert phi.tolist() == [80.0, 12.5, 7.5]


def test_fixed_game_matches_permutation_oracle():
    def value_fn(coalition):
        mask = sum(1 << i for i in coalition)
        return float(GAME3[mask])

    oracle = shapley_permutation_oracle(value_fn, [0, 1, 2])
    assert oracle == {0: 80.0, 1: 12.5, 2: 7.5}


@given(st.integers(0, 2 ** 31 - 1), st.integers(3, 5))
@settings(max_examples=40, deadline=None)
def test_oracle_equivalence_random_games(seed, n):
    rng = np.random.default_rng(seed)
    values = rng.uniform(-50, 150, size=1 << n)
    values[0] = 0.0
    fast = shapley_raw(values, n)

    def value_fn(coalition):
        return float(values[sum(1 << i for i in coalition)])

    oracle = shapley_permutation_oracle(value_fn, list(range(n)))
    for i in range(n):
        assert fast[i] == pytest.approx(oracle[i], abs=1e-11)


def test_oracle_player_cap():
    with pytest.raises(DataError):
        shapley_permutation_oracle(lambda s: 0.0, list(range(7)))


def test_shapley_raw_shape_checked():
    with pytest.raises(DataError):
        shapley_raw(np.zeros(7), 3)


# -- axioms -----------------------------------------------------------------

def test_efficiency_on_random_tables():
    rng = np.random.default_rng(1)
    for _ in range(20):
        table = _random_table(rng)
        profile = shapley_from_table(table)
        assert sum(profile.phi.values()) == pytest.approx(100.0, abs=1e-9)


def test_symmetry_popcount_game():
    # A value that depends only on coalition size makes every player
    # interchangeable, so all nine shares are equal.
    sizes = np.array([bin(m).count("1") for m in range(N_COALITIONS)],
                     dtype=np.float64)
    phi = shapley_raw(100.0 * sizes / 9.0, 9)
    np.testing.assert_allclose(phi, 100.0 / 9.0, rtol=1e-12)


def test_dummy_players_get_zero():
    # Collapsing unattested coalitions onto the attested subset makes the
    # unattested players dummies; their shares must vanish exactly.
    attested = {-1, 0, 1}
    mask = sum(1 << i for i, p in enumerate(PLAYERS) if p in attested)
    table = _random_table(np.random.default_rng(2), attested_mask=mask)
    profile = shapley_from_table(table)
    for player in PLAYERS:
        if player not in attested:
            assert profile.phi[player] == 0.0
    # And the attested players carry the whole collapsed 3-player game.
    small = table.values()[[0, 8, 16, 24, 32, 40, 48, 56]]
    small_phi = shapley_raw(small, 3)
    for i, player in enumerate(sorted(attested)):
        assert profile.phi[player] == pytest.approx(small_phi[i], abs=1e-12)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(-10, 10, size=16)
    w = rng.uniform(-10, 10, size=16)
    a, b = rng.uniform(-3, 3, size=2)
    combined = shapley_raw(a * u + b * w, 4)
    separate = a * shapley_raw(u, 4) + b * shapley_raw(w, 4)
    np.testing.assert_allclose(combined, separate, atol=1e-10)


def test_additive_game_recovers_weights():
    # v(S) = sum of per-player weights: Shapley returns the weights.
    weights = np.array([5.0, -2.0, 11.0, 0.0])
    values = np.array([sum(weights[i] for i in range(4) if m >> i & 1)
                       for m in range(16)])
    np.testing.assert_allclose(shapley_raw(values, 4), weights, atol=1e-12)


# -- profiles ---------------------------------------------------------------

def _profile(overrides):
    phi = {p: 0.0 for p in PLAYERS}
    phi.update(overrides)
    return ShapleyProfile(phi=phi, task="t", model_id="m")


def test_profile_requires_all_players():
    with pytest.raises(DataError):
        ShapleyProfile(phi={0: 100.0})


def test_profile_summaries():
    p = _profile({-2: 10.0, -1: 30.0, 0: 50.0, 1: 5.0, 2: 5.0})
    assert p.left == 40.0
    assert p.right == 10.0
    assert p.target == 50.0
    assert p.context == 50.0
    assert p.left_right_ratio == 4.0
    assert p.summaries()["left_right_ratio"] == 4.0
    np.testing.assert_array_equal(
        p.vector, [0.0, 0.0, 10.0, 30.0, 50.0, 5.0, 5.0, 0.0, 0.0])


def test_ratio_edge_cases():
    assert _profile({-1: 40.0, 1: 0.0}).left_right_ratio == math.inf
    assert _profile({-1: 40.0, 1: -2.0}).left_right_ratio == math.inf
    assert math.isnan(_profile({-1: -1.0, 1: -1.0}).left_right_ratio)


def test_dfm():
    a = _profile({0: 100.0})
    b = _profile({-1: 100.0})
    assert dfm(a, a) == 0.0
    assert dfm(a, b) == pytest.approx(2.0)
    assert dfm(a.vector, b.vector) == pytest.approx(2.0)
    assert dfm(a, (a.vector + b.vector) / 2) == pytest.approx(1.0)


# -- generalization variance ------------------------------------------------

def test_generalization_variance_hand_case():
    a1 = np.zeros(9)
    a1[4] = 100.0                     # all target
    a2 = np.zeros(9)
    a2[3] = 100.0                     # all on -1
    profiles = {("aa", "N", "Num"): a1, ("aa", "V", "Tns"): a2}
    # The completed grid gains two cells holding the global mean, which
    # is also the axis mean; their distance is 0 and the observed cells
    # sit at L1 distance 1.0 from the mean.
    result = generalization_variance(profiles, "language")
    assert result.per_value == {"aa": pytest.approx(0.5)}
    assert result.overall == pytest.approx(0.5)


def test_generalization_variance_excludes_singletons():
    a = np.zeros(9)
    a[4] = 100.0
    profiles = {("aa", "N", "Num"): a, ("aa", "V", "Tns"): a,
                ("bb", "N", "Num"): a}
    result = generalization_variance(profiles, "language")
    assert set(result.per_value) == {"aa"}
    with pytest.raises(DataError, match="fewer than 2"):
        generalization_variance({("aa", "N", "Num"): a,
                                 ("bb", "V", "Tns"): a}, "language")


def test_generalization_variance_guards():
    with pytest.raises(DataError, match="axis"):
        generalization_variance({("a", "b", "c"): np.zeros(9)}, "model")
    with pytest.raises(DataError, match="no profiles"):
        generalization_variance({}, "language")


def test_identical_profiles_have_zero_variance():
    a = np.arange(9, dtype=float)
    profiles = {("aa", "N", "Num"): a, ("aa", "V", "Tns"): a,
                ("bb", "N", "Num"): a, ("bb", "V", "Tns"): a}
    for axis in ("language", "pos", "tag"):
        result = generalization_variance(profiles, axis)
        assert result.overall == 0.0


# -- persistence ------------------------------------------------------------

def test_table_roundtrip(tmp_path):
    table = _random_table(np.random.default_rng(3), attested_mask=0b111110)
    path = tmp_path / "deep" / "table.json"
    save_table(table, path)
    back = load_table(path)
    np.testing.assert_array_equal(back.accs, table.accs)
    assert back.attested_mask == table.attested_mask
    assert (back.model_id, back.task) == ("m", "t")


def test_profile_roundtrip_with_infinite_ratio(tmp_path):
    profile = _profile({-1: 60.0, 0: 40.0})
    path = tmp_path / "profile.json"
    save_profile(profile, path)
    obj = json.loads(path.read_text())
    assert obj["summaries"]["left_right_ratio"] is None
    assert obj["phi"]["-4-"] == 0.0 and obj["phi"]["4+"] == 0.0
    back = load_profile(path)
    assert back.phi == profile.phi
    assert back.left_right_ratio == math.inf
