import pytest

from models.records import TEST, TRAIN, EpisodeRecord
from services.errors import PlotError
from services.plotting import ema_smooth, mean_curves, render_curves, render_record_curves
from storage.records_csv import write_csv


def records_for(strategies=('ebe',), seeds=(0,), episodes=6):
    rows = []
    for strategy in strategies:
        for seed in seeds:
            for episode in range(1, episodes + 1):
                rows.append(EpisodeRecord(seed, strategy, episode, TRAIN,
                                          reward=float(episode + seed), steps=episode, h0=0.5))
    return rows


def test_zero_weight_keeps_the_raw_series():
    series = ema_smooth([3.0, -1.0, 7.0], 0.0)
    assert series.smoothed == series.raw == (3.0, -1.0, 7.0)


def test_constant_series_is_a_fixed_point():
    assert ema_smooth([2.5] * 5, 0.9).smoothed == (2.5,) * 5


def test_one_step_recurrence():
    smoothed = ema_smooth([0.0, 1.0], 0.99).smoothed
    assert smoothed[0] == 0.0
    assert smoothed[1] == pytest.approx(0.01)


@pytest.mark.parametrize('weight', [-0.1, 1.0])
def test_weight_out_of_range(weight):
    with pytest.raises(ValueError):
        ema_smooth([1.0], weight)


def test_mean_curves_average_across_seeds():
    curves = mean_curves(records_for(seeds=(0, 2), episodes=3), 'reward')
    episodes, means = curves['ebe']
    assert episodes.tolist() == [1, 2, 3]
    assert means.tolist() == [2.0, 3.0, 4.0]


def test_single_strategy_chart_has_one_smooth_and_one_raw_line(tmp_path):
    svg = render_record_curves(records_for(), ['reward'], 0.9, tmp_path / 'c.svg').read_text(encoding='utf-8')
    assert svg.count('id="smooth-reward-ebe"') == 1
    assert svg.count('id="raw-reward-ebe"') == 1


def test_legend_lists_each_strategy(tmp_path):
    records = records_for(strategies=('alpha_one', 'beta_two'))
    svg = render_record_curves(records, ['reward'], 0.9, tmp_path / 'c.svg').read_text(encoding='utf-8')
    assert svg.count('>alpha_one<') == 1
    assert svg.count('>beta_two<') == 1


def test_identical_inputs_give_identical_svg(tmp_path):
    csv_path = write_csv(records_for(strategies=('ebe', 'eps'), seeds=(0, 1)), tmp_path / 'runs.csv')
    first = render_curves([csv_path], ['reward', 'h0'], 0.99, tmp_path / 'a.svg')
    second = render_curves([csv_path], ['reward', 'h0'], 0.99, tmp_path / 'b.svg')
    assert first.read_bytes() == second.read_bytes()


def test_unknown_metric_is_rejected(tmp_path):
    with pytest.raises(PlotError):
        render_record_curves(records_for(), ['score'], 0.9, tmp_path / 'c.svg')
    assert not (tmp_path / 'c.svg').exists()


def test_missing_metric_values_are_rejected(tmp_path):
    with pytest.raises(PlotError):
        render_record_curves(records_for(), ['sq_error'], 0.9, tmp_path / 'c.svg')
    with pytest.raises(PlotError):
        render_record_curves(records_for(), ['reward'], 0.9, tmp_path / 'c.svg', phase=TEST)
