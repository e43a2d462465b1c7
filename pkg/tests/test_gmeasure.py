import math

import numpy as np
import pytest

from psustat.errors import ConfigurationError, DomainError, ResourceError
from psustat.gmeasure import (GroupMeasure, blaschke_sum, convolution_power, convolve,
                              delta_identity, first_moment, ordering_from_ball, weight_decay_rate)
from psustat.group import enumerate_ball, preset
from psustat.moebius import MoebiusMap, apply, classify, compose, inverse, random_map

from conftest import SQRT2, power


def random_measure(rng, n=3, complex_weights=True):
    w = rng.normal(size=n) + (1j * rng.normal(size=n) if complex_weights else 0)
    return GroupMeasure(tuple((random_map(rng, 1.0), x) for x in w))


def test_merge_and_prune(g_sqrt2):
    mu = GroupMeasure(((g_sqrt2, 0.25), (MoebiusMap(-SQRT2, -1), 0.25), (inverse(g_sqrt2), 0.0)))
    assert len(mu) == 1
    assert mu.weight_of(g_sqrt2) == 0.5


def test_probability_flag(g_sqrt2):
    assert GroupMeasure.dirac(g_sqrt2).is_probability()
    assert not GroupMeasure.dirac(g_sqrt2, 0.5).is_probability()
    assert not GroupMeasure.dirac(g_sqrt2, 1j).is_probability()
    assert GroupMeasure.uniform(preset("schottky")).is_probability()


def test_convolve_examples(g_sqrt2, rng):
    mu = random_measure(rng)
    out = convolve(delta_identity(), mu)
    assert len(out) == len(mu)
    for g, w in mu.atoms:
        assert abs(out.weight_of(g) - w) < 1e-15
    h = random_map(rng)
    d = convolve(GroupMeasure.dirac(g_sqrt2), GroupMeasure.dirac(h))
    assert len(d) == 1 and d.maps[0].isclose(compose(g_sqrt2, h), 1e-14)


def test_binomial_square(g_sqrt2):
    mu = GroupMeasure(((g_sqrt2, 0.5), (inverse(g_sqrt2), 0.5)))
    sq = convolve(mu, mu)
    assert len(sq) == 3
    assert abs(sq.weight_of(power(g_sqrt2, 2)) - 0.25) < 1e-15
    assert abs(sq.weight_of(MoebiusMap.identity()) - 0.5) < 1e-15
    assert abs(sq.weight_of(power(inverse(g_sqrt2), 2)) - 0.25) < 1e-15


def test_convolution_power_examples(rng):
    mu = random_measure(rng)
    zero = convolution_power(mu, 0)
    assert len(zero) == 1 and zero.maps[0] == MoebiusMap.identity()
    one = convolution_power(mu, 1)
    assert all(abs(one.weight_of(g) - w) < 1e-15 for g, w in mu.atoms)
    with pytest.raises(ConfigurationError):
        convolution_power(mu, -1)


def test_schottky_cube_support():
    mu = GroupMeasure.uniform(preset("schottky"))
    cube = convolution_power(mu, 3)
    # reduced words of length 3 (36) and 1 (4)
    assert len(cube) == 40
    assert cube.is_probability()


def test_cap():
    mu = GroupMeasure.uniform(preset("schottky"))
    with pytest.raises(ResourceError):
        convolve(convolution_power(mu, 3), mu, cap=50)


def test_associativity(rng):
    for _ in range(5):
        a, b, c = (random_measure(rng) for _ in range(3))
        lhs = convolve(convolve(a, b), c)
        rhs = convolve(a, convolve(b, c))
        assert len(lhs) == len(rhs)
        for g, w in lhs.atoms:
            assert abs(rhs.weight_of(g) - w) < 1e-10


def test_total_variation_submultiplicative(rng):
    for _ in range(20):
        a, b = random_measure(rng, 4), random_measure(rng, 4)
        assert convolve(a, b).total_variation() <= a.total_variation() * b.total_variation() + 1e-10


def test_first_moment_examples(g_sqrt2):
    assert first_moment(delta_identity()) == 0
    m = first_moment(GroupMeasure.dirac(g_sqrt2))
    r = 1 / SQRT2
    assert abs(m - math.log((1 + r) / (1 - r))) < 1e-14
    assert abs(m - classify(g_sqrt2).translation_length) < 1e-14
    assert abs(first_moment(GroupMeasure.dirac(g_sqrt2, 3.0)) - 3 * m) < 1e-13


def test_first_moment_subadditive():
    mu = GroupMeasure.uniform(preset("schottky"))
    m1 = first_moment(mu)
    for n in range(1, 5):
        assert first_moment(convolution_power(mu, n)) <= n * m1 + 1e-8


def test_blaschke_sum_examples(g_sqrt2):
    assert blaschke_sum(delta_identity()) == 1.0
    terms = np.array([blaschke_sum(GroupMeasure.dirac(power(g_sqrt2, n))) for n in range(1, 30)])
    # 1 - |g^n.0| ~ 2 e^{-n ell}: the partial sums converge geometrically
    ell = classify(g_sqrt2).translation_length
    assert np.allclose(terms[10:] / terms[9:-1], math.exp(-ell), rtol=1e-6)
    mu = GroupMeasure(tuple((power(g_sqrt2, n), 1.0) for n in range(1, 30)))
    assert abs(blaschke_sum(mu) - terms.sum()) < 1e-14


def test_blaschke_sum_schottky_grows():
    gens = preset("schottky")
    vals = [blaschke_sum(GroupMeasure(tuple((g, 1.0) for g in enumerate_ball(gens, N).maps)))
            for N in range(2, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_blaschke_sum_precision():
    g = MoebiusMap.hyperbolic(40.0)
    expected = 2 * math.exp(-40) / (1 + math.exp(-40))
    assert abs(blaschke_sum(GroupMeasure.dirac(g)) - expected) < 1e-12 * expected


def test_weight_decay_geometric(g_sqrt2):
    maps = [power(g_sqrt2, n) for n in range(1, 65)]
    w = 2.0 ** -np.arange(1, 65)
    mu = GroupMeasure(tuple(zip(maps, w / w.sum())))
    assert abs(weight_decay_rate(mu) - 0.5) < 0.02


def test_weight_decay_polynomial(g_sqrt2):
    for n_atoms, bound in ((64, 0.85), (128, 0.9)):
        maps = [power(g_sqrt2, n) for n in range(1, n_atoms + 1)]
        w = 1.0 / np.arange(1, n_atoms + 1) ** 2
        mu = GroupMeasure(tuple(zip(maps, w / w.sum())))
        assert weight_decay_rate(mu) >= bound


@pytest.mark.xfail(strict=True, reason="with 64 atoms the estimate is at most 4096^(-1/64) = 0.878")
def test_weight_decay_polynomial_64_atoms_reaches_0_9(g_sqrt2):
    maps = [power(g_sqrt2, n) for n in range(1, 65)]
    w = 1.0 / np.arange(1, 65) ** 2
    assert weight_decay_rate(GroupMeasure(tuple(zip(maps, w / w.sum())))) >= 0.9


def test_weight_decay_polynomial_bound():
    # max over the trailing half of (c / n^2)^(1/n) with c <= 1 sits at n = 64
    assert 4096 ** (-1 / 64) < 0.9


def test_weight_decay_padded():
    gens = preset("schottky")
    mu = GroupMeasure.uniform(gens)
    ball = enumerate_ball(gens, 3)
    assert weight_decay_rate(mu, ordering_from_ball(ball)) == 0.0
    with pytest.raises(DomainError):
        weight_decay_rate(GroupMeasure(()))


def test_json_round_trip(tmp_path, rng):
    import json
    mu = random_measure(rng)
    p = tmp_path / "mu.json"
    p.write_text(json.dumps(mu.to_json()))
    back = GroupMeasure.load(p)
    for g, w in mu.atoms:
        assert back.weight_of(g) == w
    with pytest.raises(ConfigurationError):
        GroupMeasure.from_json({"atoms": [], "bogus": 1})
