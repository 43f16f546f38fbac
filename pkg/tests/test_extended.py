"""Cross-cutting checks: planar systems, reflections, negative q.

The planar dust exercises the l - dq bookkeeping with three Steiner
degrees; the reflected Cantor construction exercises the negative-rho
branch of the interval kernels against an equivalent orientation-preserving
system; negative q runs the same identities on the other side of the
moment scale.
"""

import math

import numpy as np
import pytest

from mftube import symbolic as sym
from mftube import tube
from mftube import zeta as zz
from mftube.exponents import arithmetic_structure, beta
from mftube.ifs import cantor_system, cut_set, system_from_dict


@pytest.fixture(scope="module")
def dust2d():
    """Four-corner planar dust with ratio 1/4: beta(q) = 1 - q."""
    maps = [{"ratio": 0.25, "translation": [tx, ty]}
            for tx in (0.0, 0.75) for ty in (0.0, 0.75)]
    return system_from_dict({"dimension": 2, "maps": maps,
                             "probabilities": [0.25] * 4})


@pytest.fixture(scope="module")
def reflected_cm():
    """S1 = x/3, S2 = 1 - x/3: same attractor and measure as the Cantor
    system, but through an orientation-reversing map."""
    return system_from_dict({
        "dimension": 1,
        "maps": [{"ratio": 1 / 3, "translation": [0.0]},
                 {"ratio": 1 / 3, "orthogonal": [[-1.0]],
                  "translation": [1.0]}],
        "probabilities": [0.5, 0.5],
    })


class TestPlanarDust:
    def test_beta_analytic(self, dust2d):
        for q in (-1.0, 0.0, 0.5, 2.0):
            assert beta(dust2d, q) == pytest.approx(1.0 - q, abs=1e-12)

    def test_arithmetic_u(self, dust2d):
        arith = arithmetic_structure(dust2d)
        assert arith.is_arithmetic
        assert arith.u == pytest.approx(math.log(4), rel=1e-12)
        assert arith.k == (1, 1, 1, 1)

    def test_sigma_has_three_degrees(self, dust2d):
        q = 0.5
        sig = sym.sigma(dust2d, q)
        assert len(sig.values) == 3
        # sigma_{q,l} = 4 (1/4)^q (1/4)^{l - 2q} = 4^{1 + q - l}
        for l in range(3):
            assert sig[l] == pytest.approx(4.0 ** (1 + q - l), rel=1e-13)

    def test_cut_set_partition(self, dust2d):
        rng = np.random.default_rng(5)
        for _ in range(50):
            r = float(np.exp(rng.uniform(math.log(1e-4), math.log(0.9))))
            cs = cut_set(dust2d, r)
            total = (cs.interior_prob_products.sum()
                     + cs.boundary_prob_products.sum())
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_symbolic_volume_direct_vs_renewal(self, dust2d):
        q = 0.5
        kap = sym.default_kappa(dust2d, q)
        assert kap.consistency_residual(sym.sigma(dust2d, q)) <= 1e-12
        for r in (0.011, 0.0031):
            direct = sym.symbolic_volume(dust2d, q, r, kap,
                                         method="direct").value
            renewal = sym.symbolic_volume(dust2d, q, r, kap,
                                          method="renewal").value
            assert renewal == pytest.approx(direct, rel=1e-11)

    def test_closed_form_periodic_matches_enumeration(self, dust2d):
        q = 0.5
        kap = sym.default_kappa(dust2d, q)
        b = beta(dust2d, q)
        for n in (3, 5, 7):
            r = 1.7 * 4.0 ** -n
            direct = sym.symbolic_volume(dust2d, q, r, kap).value * r ** b
            limit = sym.closed_form_periodic(dust2d, q, kap, r)
            assert limit == pytest.approx(direct, rel=1e-10)

    def test_residue_sum_reconstruction(self, dust2d):
        q = 0.5
        kap = sym.default_kappa(dust2d, q)
        r = 1.7 * 4.0 ** -5
        direct = sym.symbolic_volume(dust2d, q, r, kap).value
        spacing = 2 * math.pi / math.log(4)
        rec = zz.residue_sum_reconstruction(dust2d, q, kap, r,
                                            300 * spacing)
        assert rec.value == pytest.approx(direct, rel=1e-2)

    def test_contour_reconstruction(self, dust2d):
        q = 0.5
        kap = sym.default_kappa(dust2d, q)
        r = 1.7 * 4.0 ** -5
        direct = sym.symbolic_volume(dust2d, q, r, kap).value
        got = zz.contour_reconstruction(dust2d, q, kap, r, 3.0, 5e3)
        assert got == pytest.approx(direct, rel=1e-3)

    def test_montecarlo_dimension_slope(self, dust2d):
        est_grid = np.geomspace(0.003, 0.1, 8)
        vals = []
        for r in est_grid:
            est = tube.tube_volume(dust2d, 0.0, float(r), samples=40000,
                                   rng_seed=123)
            vals.append(est.value)
        slope = np.polyfit(-np.log(est_grid), np.log(vals), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.1)

    def test_excluded_exponent_at_q0(self, dust2d):
        # beta(0) = 1 collides with l - dq at l = 1: the closed forms must
        # refuse rather than divide by ~0
        kap = sym.default_kappa(dust2d, 0.0)
        from mftube.errors import ExcludedExponent
        with pytest.raises(ExcludedExponent):
            sym.closed_form_constant(dust2d, 0.0, kap)


class TestReflectedCantor:
    def test_same_measure_as_plain_cantor(self, reflected_cm, cm):
        rng = np.random.default_rng(11)
        for _ in range(40):
            a = float(rng.uniform(-0.1, 1.0))
            b = a + float(rng.uniform(0.01, 0.6))
            v_ref = tube.measure_interval(reflected_cm, (a, b))
            v_std = tube.measure_interval(cm, (a, b))
            assert v_ref == pytest.approx(v_std, abs=1e-10)

    def test_same_exact_tube_volume(self, reflected_cm, cm):
        for r in (0.2, 0.04, 3.0 ** -6):
            v_ref = tube.tube_volume_exact_1d(reflected_cm, r).value
            v_std = tube.tube_volume_exact_1d(cm, r).value
            assert v_ref == pytest.approx(v_std, rel=1e-12)

    def test_same_quadrature_q2(self, reflected_cm, cm):
        r = 3.0 ** -4
        v_ref = tube.tube_volume_quadrature_1d(reflected_cm, 2.0, r).value
        v_std = tube.tube_volume_quadrature_1d(cm, 2.0, r).value
        assert v_ref == pytest.approx(v_std, rel=1e-6)

    def test_same_exponents_and_poles(self, reflected_cm, cm):
        # exponents and zeta data depend only on (ratios, probs)
        assert beta(reflected_cm, 1.7) == pytest.approx(beta(cm, 1.7),
                                                        abs=1e-13)
        p_ref = zz.poles_arithmetic(reflected_cm, 0.0, 30.0)
        p_std = zz.poles_arithmetic(cm, 0.0, 30.0)
        assert len(p_ref) == len(p_std)
        for a, b in zip(p_ref, p_std):
            assert abs(a.location - b.location) <= 1e-12

    def test_tube_measure_ratio_through_reflection(self, reflected_cm):
        got = tube.tube_measure_ratio(reflected_cm, 2.0,
                                      reflected_cm.word([2]), 3.0 ** -6)
        assert got == pytest.approx(0.5, rel=0.03)


class TestNegativeQ:
    def test_scaling_identity_q_neg(self, cm, half_third):
        rng = np.random.default_rng(13)
        q = -1.0
        for system in (cm, half_third):
            d = system.dimension
            sig = sym.sigma(system, q)
            for _ in range(40):
                r = float(np.exp(rng.uniform(4 * math.log(system.r_min),
                                             math.log(system.r_min))))
                cs = cut_set(system, r)
                for l in range(d + 1):
                    e = l - d * q
                    lhs = sym.symbolic_C(system, q, l, r, cs) * r ** (-e)
                    rhs = (sig[l] * r ** (-e) + (sig[l] - 1.0)
                           * sym.rescaled_B(system, q, l, r))
                    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))

    def test_closed_form_periodic_q_neg(self, cm):
        q = -1.0
        kap = sym.default_kappa(cm, q)
        b = beta(cm, q)  # = 2 log2/log3, clear of {l - dq} = {1, 2}
        for n in (4, 8):
            r = 2 * 3.0 ** -n
            direct = sym.symbolic_volume(cm, q, r, kap).value * r ** b
            limit = sym.closed_form_periodic(cm, q, kap, r)
            assert limit == pytest.approx(direct, rel=1e-10)

    def test_poles_and_residue_sum_q_neg(self, cm):
        q = -1.0
        kap = sym.default_kappa(cm, q)
        spacing = 2 * math.pi / math.log(3)
        poles = zz.poles_arithmetic(cm, q, 300 * spacing)
        b = beta(cm, q)
        for p in poles:
            assert p.location.real == pytest.approx(b, abs=1e-10)
            assert p.simple
        r = 2 * 3.0 ** -7
        direct = sym.symbolic_volume(cm, q, r, kap).value
        rec = zz.residue_sum_reconstruction(cm, q, kap, r, 300 * spacing,
                                            poles=poles)
        assert rec.value == pytest.approx(direct, rel=1e-2)

    def test_alpha_le_beta_q_neg(self, half_third, quarter_eighth):
        from mftube.exponents import alpha
        for system in (half_third, quarter_eighth):
            for q in (-3.0, -1.5, -0.25):
                assert alpha(system, q) <= beta(system, q) + 1e-12
