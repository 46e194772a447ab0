import math

import numpy as np
import pytest

from besovlab import synthetic
from besovlab.dyadic import DyadicDecomposition, Trajectory
from besovlab.fields import FieldError, Grid, RealField, SpectralField, forward_transform
from besovlab.persist import (
    atomic_write_text,
    load_field,
    save_field,
    shell_norms_csv,
    trajectory_csv,
)


class TestSnapshotFormat:
    def test_real_round_trip_bit_exact(self, grid64, rng, tmp_path):
        field = RealField(grid64, rng.standard_normal(grid64.shape))
        path = tmp_path / "field.bsvf"
        save_field(path, field)
        back = load_field(path)
        assert isinstance(back, RealField)
        assert np.array_equal(back.values, field.values)

    def test_spectral_round_trip_bit_exact(self, grid64, rng, tmp_path):
        field = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        path = tmp_path / "field.bsvf"
        save_field(path, field)
        back = load_field(path)
        assert isinstance(back, SpectralField)
        assert np.array_equal(back.coeffs, field.coeffs)

    def test_header_layout(self, grid64, tmp_path):
        path = tmp_path / "field.bsvf"
        save_field(path, synthetic.single_mode(grid64, 4))
        raw = path.read_bytes()
        assert raw[:4] == b"BSVF"
        assert int.from_bytes(raw[4:8], "little") == 1  # version
        assert int.from_bytes(raw[8:12], "little") == 2  # d
        assert int.from_bytes(raw[12:16], "little") == 64  # N
        assert int.from_bytes(raw[16:20], "little") == 0  # kind: real
        assert len(raw) == 32 + 8 * 64 * 64

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bsvf"
        path.write_bytes(b"NOPE" + b"\x00" * 60)
        with pytest.raises(FieldError):
            load_field(path)

    def test_truncated_payload(self, grid64, tmp_path):
        path = tmp_path / "field.bsvf"
        save_field(path, synthetic.single_mode(grid64, 4))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FieldError):
            load_field(path)

    def test_3d_round_trip(self, tmp_path, rng):
        g3 = Grid(3, 16)
        field = RealField(g3, rng.standard_normal(g3.shape))
        save_field(tmp_path / "f3.bsvf", field)
        back = load_field(tmp_path / "f3.bsvf")
        assert np.array_equal(back.values, field.values)


class TestAtomicWrites:
    def test_creates_directories(self, tmp_path):
        target = tmp_path / "a" / "b" / "out.txt"
        atomic_write_text(target, "hello\n")
        assert target.read_text() == "hello\n"

    def test_no_partial_files_left(self, tmp_path):
        atomic_write_text(tmp_path / "x.txt", "data")
        leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []


class TestCsv:
    def test_trajectory_columns(self):
        times = np.array([0.0, 0.5])
        rows = np.arange(10, dtype=float).reshape(2, 5)
        traj = Trajectory(times=times, j_min=0, j_max=4, p_list=(2.0, math.inf),
                          shell_norms={2.0: rows, math.inf: rows * 2},
                          field_l2=np.zeros(2), field_linf=np.zeros(2))
        text = trajectory_csv(traj)
        lines = text.strip().split("\n")
        assert lines[0] == "t,j,p,norm"
        assert len(lines) == 1 + 2 * 2 * 5
        assert lines[1].split(",") == ["0", "0", "2", "0"]
        assert any(",inf," in line for line in lines)

    def test_shell_csv(self, grid64, decomp64):
        theta = forward_transform(synthetic.single_mode(grid64, 4))
        text = shell_norms_csv(decomp64, theta, (2.0,))
        assert text.startswith("t,j,p,norm\n")
        assert len(text.strip().split("\n")) == 1 + decomp64.num_shells
