import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracpath.bv import PiecewiseLinearFn, StepFn
from fracpath.csvio import path_to_csv, read_path, read_pl, read_step, write_path, write_pl, write_step
from fracpath.fbm import FbmConfig, SampledPath, sample_circulant


class TestPath:
    def test_header_and_rows(self):
        text = path_to_csv(SampledPath([0.0, 0.5], [0.0, 1.25]), {"seed": 3})
        assert text == "# seed=3\nt,value\n0.0,0.0\n0.5,1.25\n"

    def test_round_trip_full_precision(self, tmp_path):
        p = sample_circulant(FbmConfig(steps=64, seed=2))
        write_path(tmp_path / "p.csv", p, {"hurst": 0.75})
        q = read_path(tmp_path / "p.csv")
        assert np.array_equal(p.times, q.times) and np.array_equal(p.values, q.values)

    @given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
    def test_round_trip_property(self, values):
        import tempfile
        from pathlib import Path

        p = SampledPath(np.arange(values.size, dtype=float), values)
        with tempfile.TemporaryDirectory() as d:
            write_path(Path(d) / "p.csv", p)
            assert np.array_equal(read_path(Path(d) / "p.csv").values, values)

    def test_wrong_header(self, tmp_path):
        (tmp_path / "x.csv").write_text("time,v\n0,0\n")
        with pytest.raises(ValueError, match="expected header"):
            read_path(tmp_path / "x.csv")


class TestFunctions:
    def test_pl_round_trip(self, tmp_path):
        f = PiecewiseLinearFn([0.0, 1.0, 2.5], [0.1, -0.3, 2.0])
        write_pl(tmp_path / "f.csv", f)
        g = read_pl(tmp_path / "f.csv")
        assert np.array_equal(f.knots, g.knots) and np.array_equal(f.values, g.values)

    def test_step_round_trip(self, tmp_path):
        f = StepFn(0.5, ((0.25, 1.0), (0.75, -2.0)), horizon=2.0)
        write_step(tmp_path / "s.csv", f)
        text = (tmp_path / "s.csv").read_text()
        assert "# initial=0.5" in text and "t,jump" in text
        assert read_step(tmp_path / "s.csv") == f

    def test_step_needs_initial(self, tmp_path):
        (tmp_path / "s.csv").write_text("t,jump\n0.5,1.0\n")
        with pytest.raises(ValueError, match="initial"):
            read_step(tmp_path / "s.csv")
