import json
import math

import numpy as np
import pytest

from multioss.bench import COMMON_METRIC, comparison_csv, compare_methods, generate_synthetic, run_seed
from multioss.instance import SelectionConfig, SelectionInstance, build_q, validate
from multioss.submodular import eval_f


def test_synthetic_shape():
    inst = generate_synthetic(100, 0, 7)
    assert inst.d_new.shape == (100, 100) and inst.loss_new.shape == (100,)
    assert inst.r == 0 and validate(inst) == []
    assert np.array_equal(inst.d_new, inst.d_new.T)


def test_synthetic_deterministic():
    a, b = generate_synthetic(6, 3, 11), generate_synthetic(6, 3, 11)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a != generate_synthetic(6, 3, 12)


def test_synthetic_single_frame():
    inst = generate_synthetic(1, 0, 0)
    assert inst.d_new.tolist() == [[0.0]] and inst.loss_new.shape == (1,)
    with pytest.raises(ValueError):
        generate_synthetic(0, 0, 0)


def test_run_seeds_distinct():
    seeds = {run_seed(s, r) for s in range(3) for r in range(50)}
    assert len(seeds) == 150


def test_compare_rows_and_runs():
    cfg = SelectionConfig(frac=0.5, p=1)
    rows = compare_methods([(s, generate_synthetic(8, 2, s)) for s in (1, 2)], cfg, 5)
    assert [r.instance_id for r in rows] == [1, 2]
    for row in rows:
        assert len(row.f_submod_runs) == 5 and row.common_metric == COMMON_METRIC
        assert all(math.isfinite(v) for v in [row.f_mcoss, row.f_thresh, *row.f_submod_runs])
        assert not row.errors


def test_compare_old_dominates():
    inst = SelectionInstance.build(d_new=[[0.0]], loss_new=[0.0], d_old=[[0.0]], loss_old=[1.0])
    rows = compare_methods([(0, inst)], SelectionConfig(rho=0.5, frac=1.0), 1)
    row = rows[0]
    assert row.selected["mcoss"] == [] and row.selected["threshmcoss"] == []
    f_empty = eval_f([], build_q(inst, 0.5))
    assert row.f_mcoss == row.f_thresh == row.f_submod_runs[0] == f_empty
    assert row.submod_median() == f_empty


def test_compare_records_failures():
    inst = generate_synthetic(5, 0, 3)
    rows = compare_methods([(3, inst)], SelectionConfig(frac=0.2, p=1), 2)
    assert "threshmcoss" in rows[0].errors and math.isnan(rows[0].f_thresh)
    text = comparison_csv(rows, {"note": "x"})
    assert "# error instance=3 method=threshmcoss" in text
    assert math.isfinite(rows[0].f_mcoss)


def test_compare_rejects_zero_runs():
    with pytest.raises(ValueError):
        compare_methods([], SelectionConfig(), 0)


def test_csv_layout():
    rows = compare_methods([(4, generate_synthetic(5, 1, 4))], SelectionConfig(frac=0.4), 3)
    lines = comparison_csv(rows, {"common_metric": COMMON_METRIC}).splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "instance_id,method,run,f_value"
    assert [l.split(",")[1] for l in lines[2:]] == ["mcoss", "threshmcoss", "submcoss", "submcoss", "submcoss"]
    value = lines[2].split(",")[3]
    assert float(value) == rows[0].f_mcoss
