import numpy as np
import pytest

from infocap.fieldio import (read_amplitude_field, read_momentum_field,
                             write_amplitude_field, write_momentum_field)
from infocap.fourier import PhysicalConstants, forward_transform
from infocap.kinematic import GridSpec, gaussian_amplitude_field


def test_amplitude_roundtrip(tmp_path):
    g = GridSpec([(-10.0, 10.0), (-5.0, 5.0)], [32, 16], "periodic")
    f = gaussian_amplitude_field(g, [1.0, 0.7],
                                 centers=[[0.0, 0.0], [1.0, -1.0]])
    path = tmp_path / "field.icf"
    write_amplitude_field(f, path)
    assert (tmp_path / "field.icf.json").exists()
    back = read_amplitude_field(path)
    np.testing.assert_array_equal(back.components, f.components)
    assert back.grid == f.grid
    np.testing.assert_array_equal(back.shifts, f.shifts)


def test_momentum_roundtrip(tmp_path):
    g = GridSpec([(0.0, 2 * np.pi)] * 2, [16, 16], "periodic")
    f = gaussian_amplitude_field(g, [0.5, 0.5], centers=[[np.pi, np.pi]])
    mom = forward_transform(f, PhysicalConstants(hbar=2.0, c=3.0))
    path = tmp_path / "mom.icf"
    write_momentum_field(mom, path)
    back = read_momentum_field(path)
    np.testing.assert_array_equal(back.components, mom.components)
    assert back.constants == mom.constants
    for a, b in zip(back.momentum_axes, mom.momentum_axes):
        np.testing.assert_array_equal(a, b)
    assert back.grid == mom.grid


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.icf"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        read_amplitude_field(path)


def test_kind_mismatch_rejected(tmp_path):
    g = GridSpec([(-1.0, 1.0)], [8])
    f = gaussian_amplitude_field(g, [0.2])
    path = tmp_path / "amp.icf"
    write_amplitude_field(f, path)
    with pytest.raises(ValueError, match="amplitude"):
        read_momentum_field(path)
