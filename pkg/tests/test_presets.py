import pytest

from signed_consensus.env import check_assumptions
from signed_consensus.harness import ConfigError, constants_report
from signed_consensus.presets import (
    PRESETS,
    THM3_B,
    THM3_B_STAR,
    hypotheses,
    max_admissible_d,
    preset,
)


@pytest.mark.parametrize("name", PRESETS)
def test_cited_assumptions_hold(name):
    cfg = preset(name)
    rep = check_assumptions(cfg.schedule, cfg.T, cfg.K)
    assert cfg.assumptions
    assert rep.holds(cfg.assumptions)


@pytest.mark.parametrize("name", PRESETS)
def test_hypotheses_hold(name):
    hyp = hypotheses(preset(name))
    assert hyp and all(hyp.values()), hyp


def test_unknown():
    with pytest.raises(ConfigError):
        preset("thm9")


def test_two_block_initial_state():
    cfg = preset("thm1b")
    s = cfg.initial.resolve(cfg.n, cfg.partition(), None)
    assert s.tolist() == [0.0] * 3 + [1.0] * 3


def test_thm1a_decay():
    d = preset("thm1a").d
    assert (d.kind, d.gamma) == ("power", 2.0)
    assert d.summable()


def test_thm1a_clusters_not_strongly_connected():
    rep = check_assumptions(preset("thm1a").schedule, 10, 1)
    assert rep.partition.as_lists() == [[1, 2, 3], [4, 5, 6]]
    assert rep.A9 and not rep.A8


def test_thm2_d_is_admissible():
    cfg = preset("thm2")
    top = max_admissible_d(5, 1, 0.2, 0.05, 0.9, 0.9)
    assert 0 < cfg.d.c < top
    h = constants_report(cfg, M=20)["hypotheses"]
    assert h["x_minus_y_in_unit_interval"]


def test_thm3_below_threshold():
    cfg = preset("thm3")
    assert cfg.b.c == THM3_B < THM3_B_STAR
    assert cfg.params.alpha < 1 / (2 * (cfg.n - 1))


def test_thm4_partition():
    assert preset("thm4").partition().Tp == 2


def test_flip_compare_pairs_models():
    cfg = preset("flip-compare")
    assert cfg.compare_models and cfg.params.model == "relative"
    assert cfg.schedule == preset("thm1b").schedule
