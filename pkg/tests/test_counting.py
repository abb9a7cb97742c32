import pytest

from reconv import ArchConfig, init_params, match_pairs, pairs_csv, param_count


def cfg(m, l, tied, **kw):
    return ArchConfig(feature_maps=m, layers=l, tied=tied, **kw)


def test_golden_parameter_counts():
    assert param_count(cfg(71, 3, tied=False)) == 195473
    assert param_count(cfg(108, 3, tied=True)) == 195058


def test_hand_evaluated_minimal_count():
    # 8*8*3 + 9 + 2 + (640 + 10) = 853
    assert param_count(cfg(1, 1, tied=False)) == 853


def test_tied_count_independent_of_depth():
    for m in (16, 108, 256):
        counts = {param_count(cfg(m, l, tied=True)) for l in range(1, 17)}
        assert len(counts) == 1


def test_single_layer_tying_is_a_noop():
    for m in (1, 7, 64):
        assert param_count(cfg(m, 1, tied=True)) == param_count(cfg(m, 1, tied=False))


@pytest.mark.parametrize("m,l,tied,h", [
    (4, 3, True, 8), (4, 3, False, 8), (16, 2, True, 32),
    (9, 5, False, 32), (1, 1, True, 32),
])
def test_params_object_matches_count(m, l, tied, h):
    config = cfg(m, l, tied, input_h=h, input_w=h)
    params = init_params(config, seed=0)
    assert params.scalar_count() == param_count(config)


def test_match_pairs_includes_reference_pair():
    pairs = match_pairs(3, (16, 256), 0.01)
    match = [p for p in pairs if p.m_untied == 71 and p.m_tied == 108]
    assert len(match) == 1
    pair = match[0]
    assert (pair.p_untied, pair.p_tied) == (195473, 195058)
    assert pair.rel_diff == pytest.approx(415 / 195473, rel=1e-12)
    assert pair.rel_diff <= 0.01


def test_match_pairs_sorted_and_within_tolerance():
    pairs = match_pairs(3, (16, 128), 0.01)
    assert pairs == sorted(pairs, key=lambda p: (p.rel_diff, p.m_untied, p.m_tied))
    assert all(p.rel_diff <= 0.01 for p in pairs)
    for p in pairs:
        assert p.p_untied == param_count(cfg(p.m_untied, 3, tied=False))
        assert p.p_tied == param_count(cfg(p.m_tied, 3, tied=True))


def test_match_pairs_zero_tolerance_means_exact():
    for p in match_pairs(2, (16, 96), 0.0):
        assert p.p_untied == p.p_tied


def test_match_pairs_degenerate_and_empty_ranges():
    assert match_pairs(3, (50, 40), 0.01) == []
    single = match_pairs(3, (16, 16), 1.0)
    assert [(p.m_untied, p.m_tied) for p in single] == [(16, 16)]


def test_match_pairs_subrange_contained_in_superrange():
    inner = set((p.m_untied, p.m_tied) for p in match_pairs(3, (60, 120), 0.01))
    outer = set((p.m_untied, p.m_tied) for p in match_pairs(3, (16, 256), 0.01))
    assert inner <= outer


def test_match_pairs_rejects_negative_tolerance():
    with pytest.raises(ValueError):
        match_pairs(3, (16, 32), -0.1)


def test_pairs_csv_layout():
    text = pairs_csv(match_pairs(3, (71, 108), 0.01))
    lines = text.strip().split("\n")
    assert lines[0] == "L,m_untied,m_tied,p_untied,p_tied,rel_diff"
    rows = [line.split(",") for line in lines[1:]]
    assert ["3", "71", "108", "195473", "195058"] in [r[:5] for r in rows]
