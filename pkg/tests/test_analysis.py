from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthmetric.analysis import (
    METRIC_ROWS,
    SUPER_METRIC,
    CorrelationCell,
    HeatmapTable,
    boxplot_csv,
    boxplot_from_csv,
    build_boxplot_table,
    build_heatmap_table,
    per_generator_correlations,
    property_rows,
    robustness_range,
    sign_consistency,
    stability_std,
)
from synthmetric.errors import (
    EmptySummaries,
    EmptyTable,
    InsufficientVariation,
    LengthMismatch,
    NoDefinedCells,
    TooFewCells,
    TooFewFamilies,
)
from synthmetric.fidelity import METRIC_IDS, FidelityVector
from synthmetric.figures import diverging_color, render_boxplot_svg, render_heatmap_svg
from synthmetric.stats import five_number_summary, pearson_corr, population_std
from synthmetric.supermetric import RunRecord, WeightVector, score

from . import oracles

SVG = "{http://www.w3.org/2000/svg}"


def cells_for(rhos, metric="HellingerMarginal", target="f1"):
    return [CorrelationCell(f"g{i}", metric, target, r, 5) for i, r in enumerate(rhos)]


# -- statistics -----------------------------------------------------------------


def test_pearson_examples():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson_corr(x, x) == pytest.approx(1.0, abs=1e-15)
    assert pearson_corr(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-15)
    assert pearson_corr([1, 2, 3], [1, 2, 4]) == pytest.approx(0.9819, abs=1e-4)
    with pytest.raises(InsufficientVariation):
        pearson_corr([1, 1, 1], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson_corr([1, 2, 3], [1, 2])
    with pytest.raises(LengthMismatch):
        pearson_corr([1, 2], [2, 1])


@settings(max_examples=100, deadline=None)
@given(
    st.integers(3, 100).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
            st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
        )
    )
)
def test_pearson_matches_oracle(xy):
    x, y = xy
    if max(x) == min(x) or max(y) == min(y):
        return
    mx, my = oracles.mean(x), oracles.mean(y)
    if sum((a - mx) ** 2 for a in x) < 1e-6 or sum((b - my) ** 2 for b in y) < 1e-6:
        return  # near-degenerate samples are ill-conditioned for any implementation
    assert pearson_corr(x, y) == pytest.approx(oracles.pearson(x, y), abs=1e-12)


def test_five_number_summary():
    assert five_number_summary([0.1, 0.2, 0.3, 0.4]) == pytest.approx((0.1, 0.15, 0.25, 0.35, 0.4))
    assert five_number_summary([0.7]) == (0.7,) * 5
    # odd count: the middle value belongs to neither half
    assert five_number_summary([1, 2, 3, 4, 5]) == (1.0, 1.5, 3.0, 4.5, 5.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30))
def test_five_number_summary_ordering(values):
    lo, q1, med, q3, hi = five_number_summary(values)
    assert lo <= q1 <= med <= q3 <= hi


# -- properties -----------------------------------------------------------------


def test_sign_consistency_examples():
    assert sign_consistency(cells_for([0.5, 0.3, -0.2])) == pytest.approx(2 / 3)
    assert sign_consistency(cells_for([0.1, 0.9, 0.4])) == 1.0
    assert sign_consistency(cells_for([-0.3])) == 1.0
    assert sign_consistency(cells_for([0.5, -0.5, 0.0])) == pytest.approx(2 / 3)
    assert sign_consistency(cells_for([0.5, None, -0.2, -0.1])) == pytest.approx(2 / 3)
    with pytest.raises(NoDefinedCells):
        sign_consistency(cells_for([None, None]))


def test_stability_examples():
    assert stability_std(cells_for([0.4, 0.4, 0.4])) == 0.0
    assert stability_std(cells_for([1.0, -1.0])) == 1.0
    with pytest.raises(TooFewCells):
        stability_std(cells_for([0.4, None]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=20), st.data())
def test_duplicate_generator_std(rhos, data):
    # an extra generator with value v raises the population std exactly when
    # |v - mean| > std * sqrt((n + 1) / n); a generator identical to a typical
    # one (at the mean) never does
    n = len(rhos)
    before = stability_std(cells_for(rhos))
    mean = float(np.mean(rhos))
    assert stability_std(cells_for(rhos + [mean])) <= before + 1e-12
    v = data.draw(st.sampled_from(rhos))
    after = stability_std(cells_for(rhos + [v]))
    bound = before * math.sqrt((n + 1) / n)
    if abs(v - mean) < bound - 1e-9:
        assert after <= before + 1e-12
    elif abs(v - mean) > bound + 1e-9:
        assert after >= before - 1e-12


def test_duplicating_an_extreme_generator_can_raise_std():
    assert stability_std(cells_for([0.0, 0.5, 1.0, 1.0])) > stability_std(cells_for([0.0, 0.5, 1.0]))


def test_robustness_examples():
    cells = cells_for([0.5, 0.7, 0.4])
    families = {"g0": "a", "g1": "a", "g2": "b"}
    assert robustness_range(cells, families) == pytest.approx(0.2)
    assert robustness_range(cells_for([0.3, 0.3]), {"g0": "a", "g1": "b"}) == 0.0
    with pytest.raises(TooFewFamilies):
        robustness_range(cells_for([0.3, 0.5]), {"g0": "a", "g1": "a"})


# -- correlation study ---------------------------------------------------------------


def synthetic_runs(n_gen=4, n_datasets=2, folds=3, seed=0):
    rng = np.random.default_rng(seed)
    runs = []
    for g in range(n_gen):
        for d in range(n_datasets):
            for f in range(folds):
                fid = FidelityVector(dict(zip(METRIC_IDS, rng.random(8))))
                runs.append(RunRecord(f"gen{g}", f"ds{d}", fid, rng.random(), rng.random(), fold=f))
    return runs


def test_cell_count_and_super_metric_path():
    runs = synthetic_runs()
    weights = {
        "ds0": WeightVector.from_array(np.arange(1.0, 9.0)),
        "ds1": WeightVector.uniform(),
    }
    cells = per_generator_correlations(runs, weights)
    assert len(cells) == 4 * 9 * 2
    # the SuperMetric cell is the plain correlation of per-dataset weighted scores
    pts = sorted((r for r in runs if r.generator_id == "gen1"), key=lambda r: (r.dataset_id, r.fold))
    s = [score(weights[r.dataset_id], r.fidelity) for r in pts]
    expected = oracles.pearson(s, [r.f1 for r in pts])
    cell = next(c for c in cells if c.generator_id == "gen1" and c.metric == SUPER_METRIC and c.target == "f1")
    assert cell.rho == pytest.approx(expected, abs=1e-12)
    assert cell.n_points == 6


def test_constant_metric_column_gives_undefined_cell():
    runs = synthetic_runs(n_gen=1)
    flat = [
        RunRecord(r.generator_id, r.dataset_id, FidelityVector({**r.fidelity.scores, METRIC_IDS[0]: 0.5}), r.recall, r.f1, r.fold)
        for r in runs
    ]
    cells = per_generator_correlations(flat, {"ds0": WeightVector.uniform(), "ds1": WeightVector.uniform()})
    assert all(c.rho is None for c in cells if c.metric == METRIC_IDS[0].value)
    assert all(c.rho is not None for c in cells if c.metric != METRIC_IDS[0].value)


def test_heatmap_table():
    runs = synthetic_runs()
    weights = {"ds0": WeightVector.uniform(), "ds1": WeightVector.uniform()}
    cells = per_generator_correlations(runs, weights)
    table = build_heatmap_table(cells)
    assert table.shape == (9, 4)
    assert table.row_labels == METRIC_ROWS
    assert table.col_labels == ("gen0", "gen1", "gen2", "gen3")
    look = {(c.metric, c.generator_id, c.target): c.rho for c in cells}
    for i, m in enumerate(table.row_labels):
        for j, g in enumerate(table.col_labels):
            assert table.values[i][j] == pytest.approx((look[(m, g, "recall")] + look[(m, g, "f1")]) / 2)
    assert build_heatmap_table(list(reversed(cells))) == table
    assert HeatmapTable.from_csv(table.to_csv()) == table


def test_heatmap_hand_average():
    cells = [
        CorrelationCell("a", "Mmd", "recall", 0.6, 5),
        CorrelationCell("a", "Mmd", "f1", 0.2, 5),
        CorrelationCell("b", "Mmd", "recall", 0.6, 5),
        CorrelationCell("b", "Mmd", "f1", None, 5),
    ]
    table = build_heatmap_table(cells)
    assert table.values == ((pytest.approx(0.4), None),)
    assert "a,b" in table.to_csv().splitlines()[0]
    assert table.to_csv().splitlines()[1].endswith(",")


def test_boxplot_table():
    cells = cells_for([0.1, 0.2, 0.3, 0.4], metric="Pmse", target="recall") + cells_for(
        [0.5], metric="Pmse", target="f1"
    )
    summaries = {s.target: s for s in build_boxplot_table(cells)}
    assert summaries["recall"].as_tuple() == pytest.approx((0.1, 0.15, 0.25, 0.35, 0.4))
    assert summaries["f1"].as_tuple() == (0.5,) * 5
    assert summaries["pooled"].n == 5
    with pytest.raises(NoDefinedCells):
        build_boxplot_table(cells_for([None], metric="Mmd"))
    assert build_boxplot_table(cells_for([None], metric="Mmd"), skip_empty=True) == []


def test_summaries_recompute_from_persisted_cells():
    runs = synthetic_runs(n_gen=5, seed=3)
    weights = {"ds0": WeightVector.uniform(), "ds1": WeightVector.uniform()}
    cells = per_generator_correlations(runs, weights)
    families = {f"gen{i}": "ab"[i % 2] for i in range(5)}
    restored = [CorrelationCell.from_dict(json.loads(json.dumps(c.to_dict()))) for c in cells]
    assert restored == cells
    assert property_rows(restored, families) == property_rows(cells, families)
    assert build_heatmap_table(restored) == build_heatmap_table(cells)
    box = build_boxplot_table(cells)
    assert boxplot_from_csv(boxplot_csv(box)) == box
    assert build_boxplot_table(restored) == box
    for row in property_rows(cells, families):
        sel = [c.rho for c in cells if c.metric == row["metric"] and c.target == row["target"]]
        assert row["stability_std"] == pytest.approx(population_std(sel))
        assert 0.0 <= row["consistency"] <= 1.0


# -- figures --------------------------------------------------------------------------


def test_diverging_scale():
    assert diverging_color(1.0) == "#ff0000"
    assert diverging_color(0.0) == "#ffffff"
    assert diverging_color(-1.0) == "#0000ff"
    assert diverging_color(3.0) == "#ff0000"


def test_heatmap_svg_single_red_cell():
    svg = render_heatmap_svg(HeatmapTable(("Mmd",), ("g",), ((1.0,),)))
    root = ET.fromstring(svg)
    rects = [r for r in root.iter(f"{SVG}rect") if r.get("fill") != "#ffffff"]
    assert [r.get("fill") for r in rects] == ["#ff0000"]
    assert "1.00" in [t.text for t in root.iter(f"{SVG}text")]


def test_heatmap_svg_cells():
    table = HeatmapTable(("a", "b"), ("x", "y", "z"), ((0.0, -0.5, None), (0.25, 1.0, -1.0)))
    svg = render_heatmap_svg(table)
    root = ET.fromstring(svg)
    fills = [r.get("fill") for r in root.iter(f"{SVG}rect")][1:]  # drop the background
    assert len(fills) == 6
    assert fills[0] == "#ffffff" and fills[2] == "#d9d9d9"
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "0.00" in texts and "-0.50" in texts and "-1.00" in texts
    assert svg == render_heatmap_svg(table)
    with pytest.raises(EmptyTable):
        render_heatmap_svg(HeatmapTable((), (), ()))


def test_boxplot_svg():
    cells = []
    for m in METRIC_ROWS:
        cells += cells_for([0.1, -0.3, 0.6], metric=m, target="f1")
    summaries = [s for s in build_boxplot_table(cells, skip_empty=True) if s.target == "pooled"]
    svg = render_boxplot_svg(summaries)
    root = ET.fromstring(svg)
    boxes = [g for g in root.iter(f"{SVG}g") if g.get("class") == "box"]
    assert len(boxes) == 9
    single = render_boxplot_svg(build_boxplot_table(cells_for([0.3], target="f1"), skip_empty=True)[:1])
    box_rect = next(g for g in ET.fromstring(single).iter(f"{SVG}g")).find(f"{SVG}rect")
    assert math.isclose(float(box_rect.get("height")), 0.0)
    with pytest.raises(EmptySummaries):
        render_boxplot_svg([])
