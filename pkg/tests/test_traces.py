import numpy as np
import pytest

from rkhs_dpp import ConvergenceTrace, KernelMatrix
from rkhs_dpp.traces import fmt


def scalar(values, direction="decreasing"):
    n = len(values)
    return ConvergenceTrace(tuple(f"n={i}" for i in range(n)), tuple(range(1, n + 1)), tuple(values), direction)


class TestConvergenceTrace:
    def test_monotone_scalar(self):
        assert scalar([3.0, 2.0, 2.0, 1.0]).is_monotone()
        assert not scalar([3.0, 2.0, 2.5]).is_monotone()
        assert scalar([3.0, 2.0, 2.5], "none").is_monotone()
        assert scalar([1.0, 1.0 + 1e-16], "decreasing").is_monotone(rtol=1e-12)

    def test_slack_sign(self):
        assert scalar([1.0, 2.0, 4.0], "increasing").monotone_slack() == pytest.approx(1.0)
        assert scalar([1.0, 0.5], "increasing").monotone_slack() == pytest.approx(-0.5)

    def test_matrix_trace(self):
        a = KernelMatrix((0, 1), np.eye(2))
        b = KernelMatrix((0, 1), [[2.0, 0.5], [0.5, 2.0]])
        tr = ConvergenceTrace(("a", "b"), (2, 2), (a, b), "increasing")
        assert not tr.is_scalar
        assert tr.monotone_slack() == pytest.approx(0.5)
        with pytest.raises(TypeError):
            tr.to_csv()

    def test_converged(self):
        assert scalar([1.0, 0.5, 0.5 + 1e-10, 0.5 + 2e-10]).converged()
        assert not scalar([1.0, 0.5, 0.25]).converged()
        assert not scalar([1.0, 1.0]).converged()

    def test_csv_round_trip(self):
        tr = scalar([1 / 3, 0.1, 2 / 7])
        text = tr.to_csv()
        assert text.splitlines()[0] == "window_label,n_sites,value,delta"
        back = ConvergenceTrace.from_csv(text, "decreasing")
        assert back.values == tr.values
        assert back.labels == tr.labels

    def test_fmt_round_trips(self):
        for x in [1 / 3, np.pi * 1e-200, 2.0**60 + 1, -0.0]:
            assert float(fmt(x)) == x

    def test_validation(self):
        with pytest.raises(ValueError):
            ConvergenceTrace(("a",), (1,), (1.0,), "sideways")
        with pytest.raises(ValueError):
            ConvergenceTrace(("a",), (1, 2), (1.0,))
