import json

import numpy as np
import pytest

from rkhs_dpp import (
    ConjugatedDiagonal,
    Diagonal,
    Explicit,
    OperatorSpec,
    Toeplitz,
    conjugated_power_diagonal,
    identity,
    power_diagonal,
    spec_from_dict,
    vanishing_symbol_toeplitz,
)
from rkhs_dpp.errors import ConfigParse, FamilyEvaluation, SiteNotInWindow
from rkhs_dpp.operators import offdiagonal_decay_ratio, polynomial_decay_toeplitz, symbol_minimum


class TestFamilies:
    def test_identity(self):
        np.testing.assert_array_equal(identity().matrix((0, 1, 2)), np.eye(3))

    def test_toeplitz_tridiagonal(self):
        t = Toeplitz((2, 1))
        np.testing.assert_array_equal(t.matrix((0, 1, 2)), [[2, 1, 0], [1, 2, 1], [0, 1, 2]])
        np.testing.assert_array_equal(t.block((0,), (5,)), [[0.0]])

    def test_toeplitz_band_truncates(self):
        t = Toeplitz((1.0, 0.3, 0.1), band=1)
        assert t.entry(0, 2) == 0.0
        assert t.entry(0, 1) == 0.3

    def test_conjugated_with_identity_c(self):
        spec = ConjugatedDiagonal(Toeplitz((1.0,)), power_diagonal(2))
        np.testing.assert_allclose(spec.matrix((0, 1)), np.diag([1.0, 0.25]))

    def test_conjugated_matches_dense_product(self):
        c = Toeplitz((1.0, 0.3, -0.1))
        spec = ConjugatedDiagonal(c, power_diagonal(2))
        window = list(range(-3, 4))
        z = list(range(-5, 6))  # covers everything within band reach
        cz = c.block(z, window)
        dense = cz.T @ np.diag(power_diagonal(2).diagonal(z)) @ cz
        np.testing.assert_allclose(spec.matrix(window), dense, rtol=1e-14, atol=1e-15)

    def test_conjugated_block_is_symmetric_slice(self):
        spec = conjugated_power_diagonal(band=16)
        full = spec.matrix(range(-6, 7))
        np.testing.assert_allclose(spec.block([-6, 0], [3, 6]), full[np.ix_([0, 6], [9, 12])], rtol=1e-14)
        np.testing.assert_allclose(full, full.T, rtol=0, atol=1e-16)

    def test_diagonal_table(self):
        d = spec_from_dict({"family": "diagonal", "kind": "table", "values": {"0": 2.0, "3": 0.5}})
        np.testing.assert_array_equal(d.diagonal([3, 0]), [0.5, 2.0])
        with pytest.raises(FamilyEvaluation):
            d.diagonal([1])

    def test_diagonal_rejects_nonpositive_and_nan(self):
        with pytest.raises(FamilyEvaluation):
            Diagonal("constant", value=0.0).diagonal([0])
        with pytest.raises(FamilyEvaluation):
            Diagonal("constant", value=float("nan")).diagonal([0])
        with pytest.raises(FamilyEvaluation):
            Diagonal("power", k=2000.0).diagonal([10**6])

    def test_explicit(self):
        e = Explicit((3, 7), [[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_array_equal(e.block([7], [3]), [[1.0]])
        with pytest.raises(SiteNotInWindow):
            e.block([0], [3])
        with pytest.raises(ConfigParse):
            Explicit((0, 1), [[1.0, 0.5], [0.0, 1.0]])


class TestSerialization:
    @pytest.mark.parametrize(
        "spec",
        [
            identity(),
            power_diagonal(3, 0.5),
            Diagonal("table", values=((0, 1.5), (2, 0.25)), default=1.0),
            Toeplitz((2.0, 1.0)),
            polynomial_decay_toeplitz(band=8),
            conjugated_power_diagonal(band=8),
            Explicit((0, 1), [[2.0, 0.1], [0.1, 1.0]]),
        ],
    )
    def test_round_trip_is_lossless(self, spec):
        text = spec.to_json()
        back = OperatorSpec.from_json(text)
        assert back == spec
        assert back.to_json() == text
        w = (-2, 0, 1) if not isinstance(spec, Explicit) else (0, 1)
        np.testing.assert_array_equal(back.matrix(w), spec.matrix(w))

    def test_documented_schema(self):
        d = json.loads('{"family": "conjugated", "c": {"coeffs": [1, 0.1], "band": 1},'
                       ' "d": {"kind": "power", "k": 2}}')
        spec = spec_from_dict(d)
        assert isinstance(spec, ConjugatedDiagonal)
        assert spec.d == power_diagonal(2)

    @pytest.mark.parametrize(
        "bad",
        [[], {"family": "banana"}, {"family": "toeplitz"}, {"family": "diagonal", "kind": "power"},
         {"family": "explicit", "sites": [0, 1], "matrix": [[1.0]]}],
    )
    def test_malformed(self, bad):
        with pytest.raises(ConfigParse):
            spec_from_dict(bad)


class TestDecayDiagnostics:
    def test_builtin_c_and_inverse_decay(self):
        ratio_c, ratio_inv = offdiagonal_decay_ratio(polynomial_decay_toeplitz(), m=6)
        assert ratio_c <= 1.0
        assert ratio_inv <= 1.0

    def test_symbols(self):
        assert symbol_minimum(polynomial_decay_toeplitz()) > 0.5
        assert abs(symbol_minimum(vanishing_symbol_toeplitz())) < 1e-12

    def test_tail_bound_declared(self):
        t = polynomial_decay_toeplitz(band=16)
        exact_tail = 2 * sum(0.2 / (1 + d**6) for d in range(17, 5000))
        assert 0 < exact_tail <= t.tail_bound
