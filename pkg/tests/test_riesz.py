import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from star_sl.riesz import (
    ExpansionError, Family, GramConditionError, HVector, TrigAtom, frame_bound_check, gram_entry,
    hilbert_form_diag, model_family, operator_A, operator_A_roundtrip, recover_from_coefficients,
    shifted_gram, sine_family,
)

TWO_PI = 2 * np.pi


def quad_inner(f, g):
    return quad(lambda t: f(t) * g(t), 0, TWO_PI, limit=400, epsabs=1e-13, epsrel=1e-13)[0]


class TestGramEntry:
    def test_examples(self):
        for n in (1, 2, 7):
            assert gram_entry(TrigAtom("sin", n), TrigAtom("sin", n)) == pytest.approx(np.pi, abs=1e-14)
        assert gram_entry(TrigAtom("sin", 0.25), TrigAtom("sin", 1.25)) == pytest.approx(0.0, abs=1e-14)
        assert gram_entry(TrigAtom("sin", 0.25), TrigAtom("sin", 0.25)) == pytest.approx(np.pi, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(["cos", "sin"]), st.sampled_from(["cos", "sin"]),
           st.floats(0, 6), st.floats(0, 6), st.floats(-2, 2))
    def test_against_quadrature(self, ch_a, ch_b, wa, wb, scale):
        trig = {"cos": np.cos, "sin": np.sin}
        a, b = TrigAtom(ch_a, wa, scale), TrigAtom(ch_b, wb)
        want = scale * quad_inner(lambda t: trig[ch_a](wa * t), lambda t: trig[ch_b](wb * t))
        assert gram_entry(a, b) == pytest.approx(want, abs=1e-9)

    def test_symmetric(self):
        a, b = TrigAtom("cos", 1.3), TrigAtom("sin", 0.4)
        assert gram_entry(a, b) == pytest.approx(gram_entry(b, a), abs=1e-15)

    def test_atom_validation(self):
        with pytest.raises(ValueError):
            TrigAtom("tan", 1.0)
        with pytest.raises(ValueError):
            TrigAtom("sin", -1.0)
        with pytest.raises(TypeError):
            gram_entry(TrigAtom("sin", 1.0), HVector.zero())


def random_family(rng, size=12):
    w = np.sort(rng.uniform(0.2, 12, size)) + np.arange(size) * 0.05
    return Family(w, rng.uniform(-1, 1, size))


class TestFamily:
    def test_gram_symmetric_psd(self, rng):
        G = random_family(rng).gram()
        assert np.allclose(G, G.T)
        assert np.linalg.eigvalsh(G).min() > -1e-10

    def test_moments_match_inner(self, rng):
        fam = random_family(rng, 6)
        f = HVector(np.array([0.7, 2.2]), np.array([0.3, -0.4]), np.array([1.0, 0.5]))
        np.testing.assert_allclose(fam.moments(f), [f.inner(fam.element(i)) for i in range(6)], atol=1e-12)

    def test_hvector_inner_quadrature(self):
        f = HVector(np.array([0.7, 2.2]), np.array([0.3, -0.4]), np.array([1.0, 0.5]))
        g = HVector(np.array([1.5]), np.array([2.0]), np.array([-1.0]))
        n1 = quad_inner(lambda t: f.evaluate(t)[0], lambda t: g.evaluate(t)[0])
        n2 = quad_inner(lambda t: f.evaluate(t)[1], lambda t: g.evaluate(t)[1])
        assert f.inner(g) == pytest.approx(n1 + n2, abs=1e-10)

    def test_transforms(self):
        f = HVector(np.array([0.7, 2.2]), np.array([0.3, -0.4]), np.array([1.0, 0.5]))
        rho = 1.9
        want_c = quad(lambda t: f.evaluate(t)[0] * np.cos(rho * t), 0, TWO_PI, limit=200)[0]
        want_s = quad(lambda t: f.evaluate(t)[1] * np.sin(rho * t), 0, TWO_PI, limit=200)[0]
        assert f.cos_transform(rho) == pytest.approx(want_c, abs=1e-10)
        assert f.sin_transform(rho) == pytest.approx(want_s, abs=1e-10)
        # complex argument: analytic continuation of the closed form
        z = 1.1 + 0.3j
        want = quad(lambda t: (f.evaluate(t)[1] * np.sin(z * t)).real, 0, TWO_PI)[0]
        assert f.sin_transform(z).real == pytest.approx(want, abs=1e-9)

    def test_json(self):
        f = HVector(np.array([0.7, 2.2]), np.array([0.3, -0.4]), np.array([1.0, 0.5]))
        d = f.to_dict()
        assert set(d) == {"channel1_coeffs", "channel2_coeffs", "frequencies"}
        g = HVector.from_dict(d)
        assert np.array_equal(g.c1, f.c1) and np.array_equal(g.frequencies, f.frequencies)


class TestRecovery:
    def test_unit_vector(self):
        fam = model_family(np.arccos(np.sqrt(0.4)), 10)
        G = fam.gram()
        i = fam.labels.index((1, 1))
        rec = recover_from_coefficients(fam, G[:, i])
        want = np.zeros(len(fam))
        want[i] = 1.0
        assert np.max(np.abs(rec.coeffs - want)) <= 1e-10

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_random_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        fam = model_family(np.arccos(np.sqrt(0.4)), 20)
        f = fam.combine(rng.standard_normal(len(fam)))
        targets = fam.moments(f)
        rec = recover_from_coefficients(fam, targets)
        np.testing.assert_allclose(fam.moments(rec.hvector), targets, atol=1e-8 * np.abs(targets).max())

    def test_truncation_error_decreases(self):
        # f outside the span: distance to the truncated spans shrinks with N
        fam = model_family(np.arccos(np.sqrt(0.4)), 40)
        rng = np.random.default_rng(1)
        coef = rng.standard_normal(len(fam)) / (1 + np.array([n for n, _ in fam.labels])) ** 2
        f = fam.combine(coef)
        errs = []
        for n_trunc in (5, 10, 20):
            sub = fam.subset([n <= n_trunc for n, _ in fam.labels])
            rec = recover_from_coefficients(sub, sub.moments(f))
            errs.append((rec.hvector - f).norm())
        assert errs[0] > errs[1] > errs[2]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            recover_from_coefficients(sine_family([1.0, 2.0]), [1.0])

    def test_ridge_semantics(self):
        fam = sine_family([1.0, 1.0 + 1e-9, 2.0])
        with pytest.raises(GramConditionError):
            recover_from_coefficients(fam, [1.0, 1.0, 0.0], ridge=0.0)
        rec = recover_from_coefficients(fam, [1.0, 1.0, 0.0])
        assert rec.ridge > 0
        assert recover_from_coefficients(sine_family([1.0, 2.0]), [1.0, 0.0]).ridge == 0.0

    def test_model_family_conditioning_bounded(self):
        conds = [np.linalg.cond(model_family(np.arccos(np.sqrt(0.4)), n).gram()) for n in (10, 20, 40)]
        assert max(conds) < 2 * min(conds)
        assert max(conds) < 1e3

    def test_model_family_excludes_quarter_pi(self):
        with pytest.raises(ValueError):
            model_family(np.pi / 4, 5)

    def test_true_family_conditioning(self, generic_fixture):
        from star_sl.pipeline import vnk_family
        from star_sl.weyl import weyl_sum_g

        fx = generic_fixture
        g = weyl_sum_g(fx.probL, fx.specL)
        conds = [np.linalg.cond(vnk_family(fx.specL, g, n).gram()) for n in (10, 20, 30)]
        assert max(conds) < 3 * min(conds)
        mu_conds = [np.linalg.cond(sine_family(np.sqrt(fx.specL0.select((1, 2), n).lam)).gram())
                    for n in (10, 20, 30)]
        assert max(mu_conds) < 3 * min(mu_conds)

    def test_true_family_close_to_model(self, generic_fixture):
        # ||v_nk - v0_nk|| decays: the [N, 2N] block carries less than the [N/2, N] block
        from star_sl.pipeline import vnk_family
        from star_sl.weyl import weyl_sum_g

        fx = generic_fixture
        g = weyl_sum_g(fx.probL, fx.specL)
        true = vnk_family(fx.specL, g)
        model = model_family(fx.specL.alpha, 30)
        assert true.labels == model.labels
        d2 = np.array([(true.element(i) - model.element(i)).norm() ** 2 for i in range(len(true))])
        n = np.array([lab[0] for lab in true.labels])
        assert d2[(n > 15) & (n <= 30)].sum() <= 0.5 * d2[(n > 7) & (n <= 15)].sum()


class TestFrameBounds:
    @pytest.mark.parametrize("beta", [0.125, 0.25, 0.3, 0.4])
    @pytest.mark.parametrize("channel", ["sin", "cos"])
    def test_bounds(self, beta, channel):
        assert frame_bound_check(beta, 200, channel).passed

    def test_eighth_bounds(self):
        rep = frame_bound_check(0.125, 10)
        assert rep.lower == pytest.approx(np.pi * (1 - np.sqrt(2) / 2))
        assert rep.upper == pytest.approx(np.pi * (1 + np.sqrt(2) / 2))

    def test_quarter_tight(self):
        rep = frame_bound_check(0.25, 200)
        assert abs(rep.min_ratio - np.pi) <= 1e-10 and abs(rep.max_ratio - np.pi) <= 1e-10

    @pytest.mark.parametrize("beta", [0.1, 0.25, 0.3])
    def test_single_coefficient(self, beta):
        G = shifted_gram(beta, 5)
        n = np.arange(-5, 6)
        want = np.pi - np.sin(4 * beta * np.pi) / (2 * (2 * n + 2 * beta))
        np.testing.assert_allclose(np.diag(G), want, atol=1e-13)
        spread = abs(np.cos(2 * beta * np.pi))
        assert np.all(np.diag(G) >= np.pi * (1 - spread)) and np.all(np.diag(G) <= np.pi * (1 + spread))

    def test_beta_range(self):
        with pytest.raises(ValueError):
            frame_bound_check(0.5)


class TestHilbertForm:
    def test_examples(self):
        assert hilbert_form_diag(0.25) == pytest.approx(np.pi ** 2, abs=1e-10)
        assert hilbert_form_diag(0.125) == pytest.approx(2 * np.pi ** 2, abs=1e-10)
        assert hilbert_form_diag(0.3) == pytest.approx((np.pi / np.sin(0.6 * np.pi)) ** 2, abs=1e-6)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.01, 0.49))
    def test_general(self, beta):
        assert hilbert_form_diag(beta, 10**5) == pytest.approx((np.pi / np.sin(2 * np.pi * beta)) ** 2,
                                                               rel=1e-9)

    def test_integer_rejected(self):
        with pytest.raises(ValueError):
            hilbert_form_diag(0.5)


class TestOperatorA:
    alpha = np.arccos(np.sqrt(0.4))

    def test_integer_shift_unchanged(self):
        beta = self.alpha / np.pi
        v = HVector(np.array([1.5]), np.array([0.0]), np.array([1.0]))
        Av = operator_A(v, self.alpha)
        assert np.array_equal(Av.c1, v.c1) and np.array_equal(Av.c2, v.c2)
        assert beta > 0

    def test_channel_two_cancelled(self):
        # tan 2 alpha = 1, v = [-1/2 cos(beta t); sin(beta t)] has A v = [-1/2 cos(beta t); 0]
        alpha = np.pi / 8
        beta = alpha / np.pi
        v = HVector(np.array([beta]), np.array([-0.5 * np.tan(2 * alpha)]), np.array([1.0]))
        Av = operator_A(v, alpha)
        assert np.max(np.abs(Av.c2)) <= 1e-14
        assert Av.c1[0] == pytest.approx(-0.5)

    def test_model_images(self):
        fam = model_family(self.alpha, 4)
        t2 = np.tan(2 * self.alpha)
        for i, (n, k) in enumerate(fam.labels):
            Av = operator_A(fam.element(i), self.alpha)
            if k == 1:
                assert Av.c2[0] == pytest.approx(0.0, abs=1e-14)
                assert Av.c1[0] == pytest.approx(-0.5 * t2)
            elif k in (3, 4):
                assert Av.c2[0] == 1.0 and Av.c1[0] == 0.0

    def test_roundtrip_random(self, rng):
        fam = model_family(self.alpha, 8)
        for _ in range(50):
            v = fam.combine(rng.standard_normal(len(fam)))
            _, _, err = operator_A_roundtrip(v, self.alpha)
            assert err <= 1e-8

    def test_expansion_error(self):
        v = HVector(np.array([0.123]), np.array([1.0]), np.array([0.0]))
        with pytest.raises(ExpansionError):
            operator_A(v, self.alpha)
        with pytest.raises(ValueError):
            operator_A(v, np.pi / 4)
