import cmath
import json
import math

import numpy as np
import pytest

import blochkit as bk


def test_free_particle_monodromy_matches_closed_form():
    p = bk.catalog.free_particle(2.0)
    lam = 3.7
    s = math.sqrt(lam)
    m = bk.monodromy(p, lam)
    exact = np.array([[math.cos(2 * s), math.sin(2 * s) / s], [-s * math.sin(2 * s), math.cos(2 * s)]])
    assert np.max(np.abs(m.M - exact)) <= 1e-10
    assert abs(np.linalg.det(m.M) - 1.0) <= 10 * m.error_estimate + 1e-14


def test_classify_mathieu_band_and_gap():
    p = bk.catalog.mathieu(1.0)
    bands = bk.locate_bands(p, -1.0, 10.0)
    b = bands.bands[0]
    inside = bk.classify(p, 0.5 * (b.lo + b.hi))
    assert inside.bounded
    assert all(abs(k.representative.imag) < 1e-9 for k in inside.classes)
    gap = bk.classify(p, b.hi + 0.5 * (bands.bands[1].lo - b.hi))
    assert gap.sigma_tag == bk.SigmaTag.G3
    assert not gap.bounded
    assert bk.residual(p, 0.5 * (b.lo + b.hi), inside) <= 1e-5
    assert json.loads(inside.to_json())["sigma_tag"] == "sigma_g^3"


def test_sum_rule_with_drift():
    p = bk.catalog.constant_drift(0.5, 1.0)
    c = bk.classify(p, 7.0)
    modulus = 2 * math.pi
    total = bk.reduce_quasimomentum(sum(k.representative for k in c.classes), modulus)
    expected = bk.reduce_quasimomentum(0.5 / 1j, modulus)
    assert c.sigma_tag == bk.SigmaTag.G3
    assert bk.class_equal(total, expected, 1e-8)


def test_coefficient_json_round_trip():
    v = bk.PeriodicCoefficient.fourier(math.pi, [1.0, 0.0, 1.0])
    back = bk.PeriodicCoefficient.from_json(v.to_json())
    for x in np.linspace(-3, 3, 13):
        assert back(x) == v(x)
    with pytest.raises(ValueError):
        bk.PeriodicCoefficient.from_json('{"period": 1, "kind": "spline"}')


def test_hartree_energy_is_the_sum():
    h = bk.hartree_example([bk.catalog.mathieu_potential(1.0), bk.PeriodicCoefficient.constant(2 * math.pi, 0.0)],
                           [0.0, 0.3])
    assert h.energy == sum(h.factor_energies)
    assert h.residual([0.0, 0.0], [math.pi, 2 * math.pi]) <= 5e-5


def test_transform_round_trip():
    field = bk.bloch_floquet(np.array([[1.5]]), 16, [-1], [1], lambda r: cmath.exp(-r[0] ** 2), 8, 3)
    props = field.properties()
    assert props["quasi_periodicity"] <= 1e-10
    assert props["k_periodicity"] <= 1e-10
    assert field.inversion_error(8) <= 1e-10
    assert field.parseval_deviation() <= 1e-8


def test_intro_fixture_is_flagged():
    r = bk.intro_fixture()
    assert r["discrepancy"]
    assert not r["continuous"]
    assert abs(abs(r["multipliers"][0] * r["multipliers"][1]) - 1.0) <= 1e-8
