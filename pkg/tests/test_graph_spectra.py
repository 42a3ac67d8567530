import numpy as np
import pytest

from star_sl.edge import SpectrumError, edge_zeros, edge_zeros_count, node_count
from star_sl.graph_spectra import (
    SpectrumTable, StarProblem, asymptotic_prediction, branch_classes, char_delta, find_eigenvalues,
    verify_assumptions,
)
from star_sl.sl_core import Potential

ZERO4 = [Potential.zero()] * 4


def zero_delta(m, p, rho):
    """Closed form of Delta for vanishing potentials on problem L."""
    c, s = np.cos(rho * np.pi), np.sin(rho * np.pi)
    return c ** (p - 1) * s ** (m - p - 1) * rho ** (p + 1.0 - m) * (-p * s * s + (m - p) * c * c)


@pytest.fixture(scope="module")
def zero_table():
    return find_eigenvalues(StarProblem.L(4, 2, ZERO4), 20)


class TestCharDelta:
    def test_examples(self):
        prob = StarProblem.L(4, 2, ZERO4)
        assert char_delta(prob, 1 / 64) == pytest.approx(4.0, abs=1e-10)
        assert char_delta(prob, 1 / 16) == pytest.approx(0.0, abs=1e-12)
        assert char_delta(prob, 1.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("m,p", [(4, 2), (5, 2), (5, 3), (6, 3)])
    def test_zero_potential_closed_form(self, m, p):
        prob = StarProblem.L(m, p, [Potential.zero()] * m)
        rho = np.linspace(0.05, 10, 400)
        np.testing.assert_allclose(char_delta(prob, rho ** 2), zero_delta(m, p, rho), atol=1e-9)

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            StarProblem.L(5, 4, [Potential.zero()] * 5)
        with pytest.raises(ValueError):
            StarProblem.L(3, 2, [Potential.zero()] * 3)
        with pytest.raises(ValueError):
            StarProblem.L(4, 2, ZERO4[:3])


class TestAsymptotics:
    def test_examples(self):
        assert asymptotic_prediction(4, 2, 1, 1) == pytest.approx(0.25)
        assert asymptotic_prediction(4, 2, 3, 3) == pytest.approx(2.5)
        assert asymptotic_prediction(5, 2, 1, 2) == pytest.approx(1 - np.arccos(np.sqrt(0.4)) / np.pi)
        assert asymptotic_prediction(5, 2, 1, 2) == pytest.approx(0.717953, abs=1e-6)

    @pytest.mark.parametrize("m,p", [(4, 2), (5, 2), (6, 2), (6, 4), (7, 3)])
    def test_class_counts(self, m, p):
        for nc in (p, p + 1):
            classes = branch_classes(m, nc)
            assert sum(c == "half" for c in classes.values()) == nc - 1
            assert sum(c == "int" for c in classes.values()) == m - nc - 1
            if nc >= 2:
                assert classes[3] == "half"
            if m - nc - 1 >= 1:
                assert classes[4] == "int"


class TestFindEigenvalues:
    def test_zero_potential_branches(self, zero_table):
        n = np.arange(1, 21)
        for k, shift in ((1, 0.75), (2, 0.25), (3, 0.5), (4, 0.0)):
            np.testing.assert_allclose(np.sqrt(zero_table.branch(k)), n - shift, atol=1e-8)

    def test_l0_first_branch(self):
        tab = find_eigenvalues(StarProblem.L0(4, 2, ZERO4), 3)
        assert np.sqrt(tab.get(1, 1)) == pytest.approx(1 / 6, abs=1e-9)

    def test_residual_small(self):
        pots = [Potential.cosine(c) for c in ([0.2, 0.1], [0.0, -0.1, 0.1], [0.05], [-0.1, 0.0, 0.2],
                                               [0.1, 0.1, 0.1])]
        prob = StarProblem.L(5, 2, pots)
        tab = find_eigenvalues(prob, 8)
        # Delta has O(rho^{m-1}) size near the eigenvalues
        h = 1e-7
        slope = (char_delta(prob, tab.lam + h) - char_delta(prob, tab.lam - h)) / (2 * h)
        assert np.all(np.abs(char_delta(prob, tab.lam)) <= 1e-8 * np.maximum(1.0, np.abs(slope)))

    def test_branch_counting_generic(self):
        pots = [Potential.cosine(c) for c in ([0.3, -0.2], [0.1, 0.05, -0.1], [0.0, 0.2], [0.15],
                                               [-0.05, -0.1, 0.1])]
        for prob in (StarProblem.L(5, 2, pots), StarProblem.L0(5, 2, pots)):
            tab = find_eigenvalues(prob, 10)
            classes = branch_classes(5, prob.neumann_count)
            for n in range(1, 11):
                assert np.count_nonzero(tab.n == n) == 5
            assert set(np.unique(tab.k)) == set(classes)

    def test_multiplicity_detected(self):
        # identical known edges force coincident poles; multiplicities must still be counted
        tab = find_eigenvalues(StarProblem.L(6, 3, [Potential.zero()] * 6), 5)
        np.testing.assert_allclose(np.sqrt(tab.branch(3)), np.arange(1, 6) - 0.5, atol=1e-9)
        np.testing.assert_allclose(np.sqrt(tab.branch(5)), np.arange(1, 6) - 0.5, atol=1e-9)

    def test_serialization(self, zero_table):
        back = SpectrumTable.from_json(zero_table.to_json(), 4, 2)
        assert np.array_equal(back.lam, zero_table.lam) and np.array_equal(back.k, zero_table.k)
        csv_text = zero_table.to_csv()
        assert csv_text.splitlines()[0] == "n,k,lambda,rho"
        back = SpectrumTable.from_csv(csv_text, 4, 2)
        np.testing.assert_allclose(back.lam, zero_table.lam, rtol=1e-15)

    def test_select_and_get(self, zero_table):
        sub = zero_table.select((1, 2), n_max=5)
        assert sub.lam.size == 10
        assert sub.get(2, 1) == pytest.approx(1.25 ** 2)
        with pytest.raises(KeyError):
            sub.get(6, 1)


class TestEdgeZeros:
    def test_zero_potential(self):
        np.testing.assert_allclose(np.sqrt(edge_zeros_count(Potential.zero(), "C", 5)),
                                   np.arange(5) + 0.5, atol=1e-10)
        np.testing.assert_allclose(np.sqrt(edge_zeros_count(Potential.zero(), "S", 5)),
                                   np.arange(1, 6), atol=1e-10)

    def test_node_count(self):
        assert node_count(Potential.zero(), "S", 10.0) == 3
        assert node_count(Potential.zero(), "C", 10.0) == 3

    def test_interlacing(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            p = Potential.cosine(rng.uniform(-0.5, 0.5, 3))
            nu = edge_zeros_count(p, "C", 12)
            theta = edge_zeros_count(p, "S", 11)
            merged = np.empty(23)
            merged[0::2], merged[1::2] = nu, theta
            assert np.all(np.diff(merged) > 0)


class TestAssumptions:
    def test_zero_potentials_fail_a1(self):
        pots = [Potential.zero()] * 4
        probL, probL0 = StarProblem.L(4, 2, pots), StarProblem.L0(4, 2, pots)
        rep = verify_assumptions(probL, probL0, find_eigenvalues(probL, 5), find_eigenvalues(probL0, 5))
        assert not rep.passed["A1"]
        assert "A1" in rep.failed() and not rep.ok

    def test_duplicate_eigenvalue_fails_a3(self):
        pots = [Potential.cosine(c) for c in ([0.3, -0.2], [0.1, 0.05, -0.1], [0.0, 0.2], [0.15],
                                               [-0.05, -0.1, 0.1])]
        probL, probL0 = StarProblem.L(5, 2, pots), StarProblem.L0(5, 2, pots)
        tabL = find_eigenvalues(probL, 4)
        lam = tabL.lam.copy()
        i = np.nonzero((tabL.n == 2) & (tabL.k == 1))[0][0]
        j = np.nonzero((tabL.n == 2) & (tabL.k == 2))[0][0]
        lam[j] = lam[i]
        dup = SpectrumTable(tabL.n, tabL.k, lam, 5, 2)
        rep = verify_assumptions(probL, probL0, dup, find_eigenvalues(probL0, 4))
        assert not rep.passed["A3"]

    def test_generic_fixture_passes(self, generic_fixture):
        rep = generic_fixture.report
        assert rep.ok
        assert min(rep.margins.values()) > 0
        assert rep.to_dict()["ok"] is True


def test_scan_rejects_inconsistent_counts(monkeypatch):
    import star_sl.edge as edge

    monkeypatch.setattr(edge, "node_count", lambda *a, **k: 10**6)
    with pytest.raises(SpectrumError):
        edge.edge_zeros(Potential.zero(), "S", 3.0)
