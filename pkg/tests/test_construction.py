import random
from fractions import Fraction

import pytest

from nagata import (
    AnalyticL1Norm,
    CentralOverrideNorm,
    ConfigError,
    Element,
    LemmaParams,
    TowerVerificationError,
    WordNorm,
    ZStageNorm,
    build_tower,
    center_generator,
    choose_p,
    choose_params,
    find_h1,
    lemma_step,
    limit_norm,
    parse_group,
    slope_lower_bound,
    verify_lemma_conditions,
)
from nagata.construction import exponent_of_power

Z = parse_group("Z")
H3 = parse_group("H3")

STAGE1_LAYERS = ((4, (17,)),)
STAGE2_LAYERS = ((4, (17,)), (18, (1841, 58912)))


def stage1_closed_form(t):
    """One-coin norm, independently: t = 17q + r costs 4q plus the cheaper
    of walking r up or paying one more coin and walking 17 - r back."""
    t = abs(t)
    q, r = divmod(t, 17)
    return 4 * q + min(r, 4 + (17 - r))


# ---------------------------------------------------------------------------
# parameter choices


def test_choose_params_frozen():
    assert choose_params(2, 1, 3) == (17, 4)
    assert choose_params(3, 2, 17) == (433, 18)
    assert choose_params(4, 3, 109) == (7921, 110)


def test_choose_params_strict_sandwich():
    rng = random.Random(5)
    for _ in range(50):
        k = rng.randrange(1, 7)
        m = rng.randrange(1, 5)
        R = rng.randrange(1, 200)
        a, C = choose_params(k, m, R)
        assert R < C
        assert Fraction(C) < Fraction(a, 2 * k * m * m)


def test_choose_p_frozen():
    assert choose_p(2, 1) == (1,)
    assert choose_p(3, 2) == (1, 5)
    assert choose_p(4, 3) == (1, 6, 11)


def test_choose_p_gap_property():
    for k in (1, 2, 3, 4, 7):
        for m in (1, 2, 3, 4):
            p = choose_p(k, m)
            assert p[0] == 1
            for j in range(1, m):
                partial = sum(1 << pi for pi in p[:j])
                assert (1 << p[j]) > 2 * k * m * partial


def test_exponent_of_power():
    z = (0, 0, 1)
    assert exponent_of_power(H3, z, (0, 0, 7)) == 7
    assert exponent_of_power(H3, z, (0, 0, -3)) == -3
    assert exponent_of_power(H3, z, (0, 0, 0)) == 0
    assert exponent_of_power(H3, z, (0, 1, 0)) is None
    assert exponent_of_power(Z, (1,), (12,)) == 12


# ---------------------------------------------------------------------------
# slope certificates and h1 search


def test_slope_lower_bound():
    assert slope_lower_bound([]) == 1
    assert slope_lower_bound([(4, (17,))]) == Fraction(4, 17)
    assert slope_lower_bound(list(STAGE2_LAYERS)) == Fraction(9, 29456)


def test_find_h1_on_l1_norm():
    base = AnalyticL1Norm(Z)
    assert find_h1(base, (1,), 17, "exact") == 17
    assert find_h1(base, (1,), 17, "bounded") == 17
    assert find_h1(base, (1,), 1, "exact") == 1


def test_find_h1_frozen_on_stage_norm():
    handle = ZStageNorm(Z, STAGE1_LAYERS)
    assert find_h1(handle, (1,), 409, "bounded") == 1739
    assert find_h1(handle, (1,), 409, "exact") == 1735
    assert find_h1(handle, (1,), 433, "bounded") == 1841
    assert find_h1(handle, (1,), 433, "exact") == 1837


@pytest.mark.parametrize("a", [50, 100, 409])
def test_find_h1_exact_matches_scan(a):
    handle = ZStageNorm(Z, STAGE1_LAYERS)
    got = find_h1(handle, (1,), a, "exact")
    bound = -(-a * 17 // 4)  # ceil(a / slope)
    worst = max(t for t in range(1, bound + 1) if stage1_closed_form(t) < a)
    assert got == worst + 1
    # certifying property: nothing at or beyond h1 dips under a
    assert all(stage1_closed_form(t) >= a for t in range(got, 3 * bound))


def test_find_h1_without_slope_enumerates_ball():
    base = WordNorm(H3)
    assert find_h1(base, (0, 0, 1), 5, "exact") == 2
    with pytest.raises(ValueError):
        find_h1(base, (0, 0, 1), 5, "bounded")


# ---------------------------------------------------------------------------
# stage norms


def test_zstage_norm_matches_override_chain():
    # small synthetic two-layer system: the iterated closed form is only
    # practical near the origin, where its budget windows stay tiny
    layers = ((4, (17,)), (3, (9, 22)))
    stacked = ZStageNorm(Z, layers)
    lvl1 = CentralOverrideNorm(AnalyticL1Norm(Z), (1,), (17,), 4)
    lvl2 = CentralOverrideNorm(lvl1, (1,), (9, 22), 3)
    for t in range(-300, 301):
        assert stacked.value((t,)) == lvl2.value((t,)), t


def test_zstage_norm_stage_two_frozen_values():
    # the real stage-two system; values pinned by the shortest-path oracle
    # in test_coins.py and the slope certificate
    stacked = ZStageNorm(Z, STAGE2_LAYERS)
    assert stacked.value((17,)) == 4
    assert stacked.value((1841,)) == 18
    assert stacked.value((58912,)) == 18
    assert stacked.value((60753,)) == 36  # 1841 + 58912
    assert stacked.z_slope == Fraction(9, 29456)


def test_zstage_norm_rejects_bad_rate_order():
    with pytest.raises(ValueError):
        ZStageNorm(Z, ((4, (17,)), (20, (18,))))  # second rate not smaller


def test_lemma_params_admissibility():
    clean = LemmaParams(k=2, m=1, R=3, a=17, C=4, h1=17, p=(1,), h=(17,))
    assert clean.admissibility_issues() == []
    bad_c = LemmaParams(k=2, m=1, R=3, a=17, C=20, h1=17, p=(1,), h=(17,))
    assert any("C=20" in issue for issue in bad_c.admissibility_issues())
    bad_h = LemmaParams(k=2, m=1, R=3, a=17, C=4, h1=17, p=(1,), h=(16,))
    assert bad_h.admissibility_issues()


# ---------------------------------------------------------------------------
# one construction step


def test_stage_one_frozen_parameters(stage1):
    p = stage1.params
    assert (p.k, p.m, p.R) == (2, 1, 3)
    assert (p.a, p.C, p.h1) == (17, 4, 17)
    assert p.p == (1,)
    assert p.h == (17,)
    assert isinstance(stage1.handle, ZStageNorm)
    assert stage1.hom.exponents == (17,)
    assert stage1.system.overrides == {(17,): 4, (-17,): 4}


def test_stage_one_norm_values(stage1):
    handle = stage1.handle
    assert handle.value((17,)) == 4
    assert handle.value((68,)) == 16
    assert handle.value((2,)) == 2
    for t in range(-300, 301):
        assert handle.value((t,)) == stage1_closed_form(t)


def test_lemma_step_rejects_non_central_z():
    base = WordNorm(H3)
    with pytest.raises(ValueError):
        lemma_step(base, Element(H3, (1, 0, 0)), k=1, m=1, R=1)
    with pytest.raises(ValueError):
        lemma_step(AnalyticL1Norm(Z), Element(Z, (0,)), k=2, m=1, R=3)


def test_verify_conditions_stage_one(stage1):
    cert = verify_lemma_conditions(stage1, 60)
    assert cert.passed
    assert cert.admissible
    assert cert.window_size == 121
    cond1, cond2, cond3 = cert.conditions
    assert cond1.checked == 121 and cond1.passed
    assert cond2.checked == 121 and cond2.passed
    assert cond3.checked == 10 and cond3.passed  # 5 domain points, all pairs


def test_verify_conditions_radius_zero(stage1):
    cert = verify_lemma_conditions(stage1, 0)
    assert cert.window_size == 1
    assert cert.conditions[2].checked == 10  # domain ball is radius-independent
    assert cert.passed


def test_forced_weight_breaks_dilatation():
    base = AnalyticL1Norm(Z)
    z = Element(Z, (1,))
    result = lemma_step(base, z, k=2, m=1, R=3, param_overrides={"C": 20})
    assert result.params.C == 20
    cert = verify_lemma_conditions(result, 40)
    assert not cert.passed
    assert not cert.admissible
    assert any("C=20" in issue for issue in cert.admissibility_issues)
    cond3 = cert.conditions[2]
    assert not cond3.passed
    assert cond3.witnesses[0]["expected"] != cond3.witnesses[0]["got"]


def test_heisenberg_stage():
    base = WordNorm(H3)
    z = center_generator(H3)
    result = lemma_step(base, z, k=1, m=1, R=1, h1_mode="exact")
    p = result.params
    assert (p.a, p.C, p.h1, p.h) == (5, 2, 2, (2,))
    assert result.handle.value((0, 0, 4)) == 4  # two override letters
    assert result.handle.value((0, 0, 2)) == 2
    cert = verify_lemma_conditions(result, 4)
    assert cert.passed
    assert cert.conditions[2].checked == 3  # domain {-1, 0, 1}


# ---------------------------------------------------------------------------
# towers


TOWER_FROZEN = [
    # index, R, a, C, h1, p, h
    (1, 3, 17, 4, 17, (1,), (17,)),
    (2, 17, 433, 18, 1841, (1, 5), (1841, 58912)),
    (3, 109, 7921, 110, 25924553, (1, 6, 11), (25924553, 1659171392, 53093484544)),
]

TOWER_SIGMAS = [
    Fraction(4, 17),
    Fraction(9, 29456),
    Fraction(55, 26546742272),
]


def test_tower_frozen_parameters(tower3):
    assert len(tower3.stages) == 3
    for stage, (idx, R, a, C, h1, p, h) in zip(tower3.stages, TOWER_FROZEN):
        assert stage.index == idx
        assert stage.R == R
        assert (stage.params.a, stage.params.C, stage.params.h1) == (a, C, h1)
        assert stage.params.p == p
        assert stage.params.h == h
    assert [st.sigma for st in tower3.stages] == TOWER_SIGMAS


def test_tower_thresholds_follow_recurrence(tower3):
    M = tower3.M_seq
    k = tower3.k_seq
    R = M[0]
    for i, stage in enumerate(tower3.stages):
        assert stage.R == R
        if i + 1 < len(tower3.stages):
            R = max(M[i + 1], R + 1, 2 * k[i] * stage.params.C + 1)


def test_tower_h_powers_of_h1(tower3):
    for stage in tower3.stages:
        p, h1, h = stage.params.p, stage.params.h1, stage.params.h
        assert h[0] == h1 and p[0] == 1
        assert h == tuple(h1 if j == 0 else (1 << p[j]) * h1 for j in range(len(h)))


def test_tower_norms_nonincreasing(tower3):
    handles = [tower3.base] + [st.handle for st in tower3.stages]
    rng = random.Random(23)
    samples = list(range(-60, 61)) + [rng.randrange(-10**6, 10**6) for _ in range(40)]
    for t in samples:
        vals = [hd.value((t,)) for hd in handles]
        assert all(a >= b for a, b in zip(vals, vals[1:])), t


def test_tower_small_values_stay_fixed(tower3):
    # once a value falls at or below a stage threshold, later stages keep it
    handles = [st.handle for st in tower3.stages]
    Rs = [st.R for st in tower3.stages]
    for t in range(-200, 201):
        for i in range(len(handles) - 1):
            v = handles[i].value((t,))
            if v <= Rs[i]:
                assert handles[i + 1].value((t,)) == v, t


def test_tower_stage_diameters_stay_below_next_threshold(tower3):
    for i in range(len(tower3.stages) - 1):
        st = tower3.stages[i]
        diameter = 2 * tower3.k_seq[i] * st.params.C
        assert diameter < tower3.stages[i + 1].R


def test_tower_witness_pair_counts(tower3):
    assert [st.certificate.conditions[2].checked for st in tower3.stages] == [10, 300, 8256]
    assert all(st.certificate.passed for st in tower3.stages)


def test_tower_zero_steps():
    tower = build_tower(Z, (), (), 0)
    assert tower.limit_handle is tower.base
    assert limit_norm(tower, (5,)) == (5, True)


def test_tower_stage_handle_hook():
    seen = []
    build_tower(Z, (2, 3), (3, 5), 2, on_stage_handle=seen.append)
    assert len(seen) == 2
    assert all(isinstance(h, ZStageNorm) for h in seen)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"k_seq": (2, 2), "M_seq": (3, 5), "steps": 2},
        {"k_seq": (2, 3), "M_seq": (5, 5), "steps": 2},
        {"k_seq": (2,), "M_seq": (3,), "steps": 2},
        {"k_seq": (2,), "M_seq": (3,), "steps": -1},
        {"k_seq": (0, 1), "M_seq": (3, 5), "steps": 2},
        {"k_seq": (2, 3), "M_seq": (3, 5), "steps": 2, "h1_mode": "fast"},
    ],
)
def test_tower_config_errors(kwargs):
    with pytest.raises(ConfigError):
        build_tower(Z, **kwargs)


def test_tower_fault_injection_raises():
    with pytest.raises(TowerVerificationError) as exc:
        build_tower(Z, (2, 3), (3, 5), 2, stage_overrides={2: {"C": 20}})
    err = exc.value
    assert err.stage_index == 2
    assert not err.certificate.passed
    assert len(err.tower.stages) == 1  # stage one survived
    assert err.tower.stages[0].certificate.passed


# ---------------------------------------------------------------------------
# the limit norm


def test_limit_norm_frozen_values(tower3):
    assert limit_norm(tower3, (2,)) == (2, True)
    assert limit_norm(tower3, (17,)) == (4, True)
    assert limit_norm(tower3, (58912,)) == (18, True)
    assert limit_norm(tower3, (53093484544,)) == (110, False)


def test_limit_norm_on_huge_exponent(tower3):
    t = 2**70 + 12345
    value, stabilized = limit_norm(tower3, (t,))
    assert value == 2445970151686
    assert not stabilized
    assert Fraction(value) >= TOWER_SIGMAS[-1] * t


def test_limit_norm_slope_bound_random(tower3):
    sigma = tower3.stages[-1].sigma
    assert sigma == TOWER_SIGMAS[-1]
    rng = random.Random(29)
    handle = tower3.limit_handle
    for _ in range(50):
        t = rng.randrange(1, 2**75)
        v = handle.value((t,))
        assert Fraction(v) >= sigma * t
        assert v <= t  # never exceeds the l1 base norm


def test_stage_values_nonincreasing(tower3):
    rng = random.Random(31)
    for _ in range(30):
        t = rng.randrange(-10**9, 10**9)
        vals = tower3.stage_values((t,))
        assert vals == sorted(vals, reverse=True)
