import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplab.grids import (MediumParams, ScalarField, build_grid,
                           build_slanted_domain, field_from_json, field_mass,
                           field_to_csv, field_to_json, partition_half_ball)


def test_build_grid_1d_spacing():
    g = build_grid(1, 0, 1, 11)
    assert g.h == (0.1,)
    assert g.num_nodes == 11
    assert np.allclose(g.axes()[0], np.linspace(0, 1, 11))


def test_build_grid_2d_spacing():
    g = build_grid(2, (0, 0), (1, 2), (11, 21))
    assert g.h == (0.1, 0.1)
    assert g.shape == (11, 21)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        build_grid(1, 0, 0, 11)


def test_too_few_nodes_rejected():
    with pytest.raises(ValueError, match="at least 3"):
        build_grid(1, 0, 1, 2)


@settings(max_examples=50, deadline=None)
@given(cells=st.integers(5, 500), i=st.integers(0, 10_000),
       lo=st.floats(-10, 10), width=st.floats(0.1, 50))
def test_node_roundtrip_identity(cells, i, lo, width):
    g = build_grid(1, lo, lo + width, cells)
    idx = (i % cells,)
    x = g.node_coord(idx)
    assert g.nearest_node(x) == idx


def test_boundary_and_interior_masks():
    g = build_grid(2, (0, 0), (1, 1), (5, 5))
    b = g.boundary_mask()
    assert b.sum() == 16
    assert not g.interior_mask()[0, 0]
    assert g.interior_mask()[2, 2]


def test_volume_weights_sum_to_box_volume():
    g = build_grid(2, (0, 0), (2, 3), (21, 31))
    assert np.isclose(g.volume_weights().sum(), 6.0)


def test_field_rejects_nonfinite_and_shape_mismatch():
    g = build_grid(1, 0, 1, 5)
    with pytest.raises(ValueError, match="finite"):
        ScalarField(g, np.array([0, 1, np.inf, 0, 0.0]))
    with pytest.raises(ValueError, match="shape"):
        ScalarField(g, np.zeros(4))


def test_field_values_immutable():
    g = build_grid(1, 0, 1, 5)
    f = ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_medium_params_validation():
    with pytest.raises(ValueError, match="p > 2"):
        MediumParams(p=2.0)
    with pytest.raises(ValueError, match="eps"):
        MediumParams(p=3.0, eps=-1.0)
    MediumParams(p=2.0001)


def test_slanted_zero_slope_is_cylinder_bit_exact():
    g = build_grid(1, 0.0, 1.0, 17)
    dom = build_slanted_domain(g, t0=0.25, a=0.0, T=1.0)
    assert np.all(dom.activation == 0.25)


def test_slanted_affine_activation():
    g = build_grid(1, 0.0, 1.0, 11)
    dom = build_slanted_domain(g, t0=0.1, a=0.2, T=1.0)
    assert np.isclose(dom.activation[-1], 0.3)
    assert dom.max_activation < dom.T


def test_slanted_requires_room_before_end_time():
    g = build_grid(1, 0.0, 1.0, 11)
    with pytest.raises(ValueError, match="below T"):
        build_slanted_domain(g, t0=0.0, a=2.0, T=1.0)


class TestHalfBallPartition:
    def test_1d_example(self):
        g = build_grid(1, 0, 1, 11)
        part = partition_half_ball(g, 0.5, 0.3, 1.0)
        x = g.axes()[0]
        assert np.allclose(x[part.minus], [0.2, 0.3, 0.4])
        assert np.allclose(x[part.interface], [0.5])
        assert np.allclose(x[part.plus], [0.6, 0.7, 0.8])
        assert np.allclose(x[part.shell], [0.2])
        assert np.allclose(x[part.unknowns], [0.3, 0.4])

    def test_2d_left_half_disc(self):
        g = build_grid(2, (0, 0), (1, 1), (21, 21))
        part = partition_half_ball(g, (0.5, 0.5), 0.3, (1.0, 0.0))
        x, _ = g.meshgrid()
        assert (x[part.minus] < 0.5).all()
        assert (x[part.plus] > 0.5).all()
        assert part.minus.sum() == part.plus.sum()

    def test_zero_normal_rejected(self):
        g = build_grid(1, 0, 1, 11)
        with pytest.raises(ValueError, match="flat level"):
            partition_half_ball(g, 0.5, 0.3, 0.0)

    def test_ball_touching_boundary_rejected(self):
        g = build_grid(1, 0, 1, 11)
        with pytest.raises(ValueError, match="touches"):
            partition_half_ball(g, 0.5, 0.55, 1.0)

    def test_axis_relabel_invariance(self):
        g = build_grid(2, (0, 0), (1, 1), (21, 21))
        a = partition_half_ball(g, (0.5, 0.5), 0.3, (1.0, 0.0))
        b = partition_half_ball(g, (0.5, 0.5), 0.3, (0.0, 1.0))
        assert np.array_equal(b.minus, a.minus.T)
        assert np.array_equal(b.interface, a.interface.T)
        assert np.array_equal(b.shell, a.shell.T)

    def test_normal_scaling_irrelevant(self):
        g = build_grid(1, 0, 1, 21)
        a = partition_half_ball(g, 0.5, 0.3, 1.0)
        b = partition_half_ball(g, 0.5, 0.3, 0.05)
        assert np.array_equal(a.minus, b.minus)
        assert np.array_equal(a.interface, b.interface)


def test_field_json_roundtrip(tmp_path):
    g = build_grid(2, (0, 0), (1, 2), (5, 7))
    f = ScalarField(g, np.arange(35, dtype=float).reshape(5, 7) / 7.0)
    path = tmp_path / "f.json"
    field_to_json(f, path)
    back = field_from_json(path)
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)


def test_field_csv_columns(tmp_path):
    g = build_grid(1, 0, 1, 5)
    f = ScalarField(g, np.array([0.0, 1.0, 4.0, 9.0, 16.0]))
    path = tmp_path / "f.csv"
    field_to_csv(f, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,value"
    assert len(lines) == 6
    x, v = lines[2].split(",")
    assert float(x) == 0.25 and float(v) == 1.0


def test_field_json_header_contents():
    g = build_grid(1, -1, 1, 5)
    f = ScalarField.constant(g, 2.0)
    doc = json.loads(field_to_json(f))
    assert doc["grid"]["cells"] == [5]
    assert doc["grid"]["h"] == [0.5]
    assert doc["values"] == [2.0] * 5


def test_field_mass_trapezoid():
    g = build_grid(1, 0, 1, 11)
    f = ScalarField.constant(g, 3.0)
    assert np.isclose(field_mass(f), 3.0)
