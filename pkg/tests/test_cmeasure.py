import json
import math

import numpy as np
import pytest

from psustat.cmeasure import (AtomicMeasure, FourierCoeffs, FourierMeasure, GridMeasure, atomic,
                              fourier, fourier_coeffs, from_json, grid_from_function, lebesgue,
                              load, markov_step, merge_atoms, point_mass, pushforward,
                              stationary_iterate, to_csv, to_grid)
from psustat.errors import ConfigurationError, PreconditionError, ResourceError
from psustat.gmeasure import GroupMeasure, delta_identity
from psustat.group import preset
from psustat.moebius import MoebiusMap, apply, classify, compose, random_map

from conftest import SQRT2


def smooth_grid(M=1024):
    return grid_from_function(lambda t: 1 + 0.5 * np.cos(t) + 0.3 * np.sin(2 * t), M)


def gentle_map(rng, max_b=0.3):
    return random_map(rng, max_b)


def test_lebesgue():
    a = fourier_coeffs(lebesgue(), 8)
    assert a[0] == 1 and np.count_nonzero(a.values) == 1
    rot = pushforward(MoebiusMap.rotation(1.234), lebesgue())
    assert np.allclose(fourier_coeffs(rot, 8).values, a.values, atol=1e-12)


def test_coefficient_examples():
    assert np.allclose(fourier_coeffs(point_mass(0.0), 10).values, 1.0)
    two = atomic([0.0, math.pi], [0.5, 0.5])
    ks = np.arange(-10, 11)
    assert np.allclose(fourier_coeffs(two, 10).values, (1 + (-1.0) ** ks) / 2, atol=1e-14)
    g = grid_from_function(lambda t: 1 + np.cos(t), 256)
    a = fourier_coeffs(g, 20)
    assert abs(a[0] - 1) < 1e-12 and abs(a[1] - 0.5) < 1e-12 and abs(a[-1] - 0.5) < 1e-12
    rest = np.delete(np.abs(a.values), [19, 20, 21])
    assert rest.max() < 1e-10


def test_coefficient_bound(rng):
    nu = atomic(rng.uniform(0, 2 * math.pi, 7))
    a = fourier_coeffs(nu, 50)
    assert a.max_abs() <= 1 + 1e-9 and a.is_hermitian()


def test_fourier_coeffs_container():
    fc = FourierCoeffs.from_dict({0: 1, 2: 0.25j})
    assert fc.K == 2 and fc[2] == 0.25j and fc[-2] == 0 and fc[7] == 0
    assert fc.resized(4).K == 4 and fc.resized(1).K == 1
    with pytest.raises(ConfigurationError):
        FourierCoeffs(np.zeros(4))


def test_normalization_flags():
    assert lebesgue().is_normalized()
    assert smooth_grid().is_normalized()
    assert not point_mass(0.0, 0.5).is_normalized()
    assert atomic([0.1, 0.2, 0.3]).is_normalized()


def test_merge_atoms_wraps():
    nu = merge_atoms(AtomicMeasure(np.array([0.0, 2 * math.pi - 1e-14, 1.0]),
                                   np.array([0.25, 0.25, 0.5])))
    assert len(nu) == 2
    assert abs(nu.mass - 1) < 1e-15
    pruned = merge_atoms(AtomicMeasure(np.array([0.0, 1.0]), np.array([1.0, 1e-17])))
    assert len(pruned) == 1


def test_pushforward_examples(rng):
    nu = atomic([0.1, 2.0, 4.0], [0.2, 0.3, 0.5])
    same = pushforward(MoebiusMap.identity(), nu)
    assert np.allclose(same.angles, nu.angles)
    rot = pushforward(MoebiusMap.rotation(0.5), nu)
    assert np.allclose(rot.angles, nu.angles + 0.5)
    g = random_map(rng, 0.8)
    moved = pushforward(g, nu)
    assert np.allclose(moved.points, apply(g, nu.points))
    gr = smooth_grid()
    for _ in range(5):
        assert abs(pushforward(random_map(rng, 0.5), gr).mass - 1) < 1e-9


def test_pushforward_composition(rng):
    nu = smooth_grid(1024)
    fnu = FourierMeasure(fourier_coeffs(nu, 32))
    for _ in range(3):
        g, h = gentle_map(rng), gentle_map(rng)
        lhs = fourier_coeffs(pushforward(g, pushforward(h, nu)), 16).values
        rhs = fourier_coeffs(pushforward(compose(g, h), nu), 16).values
        assert np.abs(lhs - rhs).max() < 1e-8
        lhs = pushforward(g, pushforward(h, fnu)).coeffs.values
        rhs = pushforward(compose(g, h), fnu).coeffs.values
        assert np.abs(lhs - rhs).max() < 1e-8


def test_hermitian_preserved(rng):
    nu = FourierMeasure(fourier_coeffs(smooth_grid(), 16))
    mu = GroupMeasure(((gentle_map(rng), 0.4), (gentle_map(rng), 0.6)))
    assert fourier_coeffs(pushforward(gentle_map(rng), nu), 16).is_hermitian(1e-12)
    assert fourier_coeffs(markov_step(mu, nu), 16).is_hermitian(1e-12)
    assert np.isrealobj(markov_step(mu, smooth_grid()).density)
    assert markov_step(mu, atomic([0.1, 0.2])).is_positive()


def test_grid_vs_atom():
    M, K, theta = 4096, 8, 2 * math.pi * 1000 / 4096
    t = 2 * math.pi * np.arange(M) / M
    d = np.angle(np.exp(1j * (t - theta)))
    width = 4 * 2 * math.pi / M
    bump = np.where(np.abs(d) < width / 2, np.cos(math.pi * d / width) ** 2, 0.0)
    g = GridMeasure(bump / bump.mean())
    diff = fourier_coeffs(g, K).values - fourier_coeffs(point_mass(theta), K).values
    assert np.abs(diff).max() < 4 * K / M


def test_markov_step_examples(g_sqrt2):
    nu = smooth_grid()
    assert np.allclose(markov_step(delta_identity(), nu).density, nu.density, atol=1e-12)
    xi = classify(g_sqrt2).fixed_points[0]
    fixed = point_mass(float(np.angle(xi)))
    out = markov_step(GroupMeasure.dirac(g_sqrt2), fixed)
    assert np.allclose(out.points, fixed.points, atol=1e-12) and abs(out.mass - 1) < 1e-15
    rots = GroupMeasure(((MoebiusMap.rotation(0.3), 0.5), (MoebiusMap.rotation(2.0), 0.5)))
    step = markov_step(rots, lebesgue())
    assert np.abs(fourier_coeffs(step, 16).values - fourier_coeffs(lebesgue(), 16).values).max() < 1e-9


def test_mass_invariance(rng):
    mu = GroupMeasure.uniform(preset("schottky"))
    for nu in (smooth_grid(), FourierMeasure(fourier_coeffs(smooth_grid(), 32)),
               atomic(rng.uniform(0, 6, 5))):
        assert abs(markov_step(mu, nu).mass - 1) < 1e-9


def test_markov_step_warns_and_caps(g_sqrt2):
    with pytest.warns(UserWarning):
        markov_step(GroupMeasure.dirac(g_sqrt2, 0.5), smooth_grid())
    nu = atomic(np.linspace(0, 6, 100))
    with pytest.raises(ResourceError):
        markov_step(GroupMeasure.uniform(preset("schottky")), nu, cap=50)


def test_iterate_rotation():
    mu = GroupMeasure.dirac(MoebiusMap.rotation(math.sqrt(2) * math.pi))
    res = stationary_iterate(mu, lebesgue())
    assert res.converged and res.iterations == 1 and res.history[0] < 1e-12


def test_iterate_hyperbolic_contracts():
    # hitting a point mass is limited by grid resolution: check the first iterates exactly
    g = MoebiusMap.hyperbolic(1.0, 0.7)
    theta_plus = float(np.angle(classify(g).fixed_points[0]))
    assert abs(theta_plus - 0.7) < 1e-12
    nu0 = grid_from_function(np.ones_like, 1024)
    prev = 0.0
    for n in range(1, 5):
        a1 = fourier_coeffs(stationary_iterate(GroupMeasure.dirac(g), nu0, max_iter=n).measure, 1)[1]
        # g^n_* Lebesgue is the harmonic measure of g^n.0 = tanh(n/2) e^{i theta_plus}
        assert abs(a1 - math.tanh(n / 2) * np.exp(-1j * theta_plus)) < 1e-12
        assert abs(a1) > prev
        prev = abs(a1)
    assert prev > 0.96


def test_iterate_schottky_residual_decreases():
    from psustat.stationarity import residual_report
    mu = GroupMeasure.uniform(preset("schottky"))
    nu0 = grid_from_function(np.ones_like, 1024)
    res = stationary_iterate(mu, nu0, max_iter=1)
    residuals = [residual_report(mu, res.measure).max_abs]
    for _ in range(5):
        nu = res.measure
        res = stationary_iterate(mu, nu, max_iter=2)
        residuals.append(residual_report(mu, res.measure).max_abs)
        assert abs(res.measure.mass - 1) < 1e-9 and res.measure.is_positive()
    # the generators pair up, so the residual is compared every second step
    assert all(b < a for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] < 0.05 * residuals[0]


def test_under_resolved_pushforward_is_conservative():
    g = MoebiusMap.hyperbolic(6.0, 1.0)
    nu = pushforward(g, grid_from_function(np.ones_like, 256))
    assert abs(nu.mass - 1) < 1e-12 and nu.density.min() >= 0
    assert nu.density.max() > 50


def test_iterate_preconditions(g_sqrt2):
    with pytest.raises(PreconditionError):
        stationary_iterate(GroupMeasure.dirac(g_sqrt2, 0.5), lebesgue())
    with pytest.raises(PreconditionError):
        stationary_iterate(GroupMeasure.dirac(g_sqrt2), lebesgue(), tol=0)
    with pytest.raises(PreconditionError):
        stationary_iterate(GroupMeasure.dirac(g_sqrt2), point_mass(0.0))


def test_to_grid():
    fm = fourier({0: 1, 1: 0.25, -1: 0.25})
    g = to_grid(fm, 64)
    assert np.allclose(g.density, 1 + 0.5 * np.cos(g.angles))
    resampled = to_grid(to_grid(fm, 64), 128)
    assert np.allclose(resampled.density, 1 + 0.5 * np.cos(resampled.angles))
    with pytest.raises(ConfigurationError):
        to_grid(point_mass(0.0))


@pytest.mark.parametrize("nu", [atomic([0.5, 1.5], [0.25, 0.75]), fourier({0: 1, 3: 0.1j, -3: -0.1j}),
                                grid_from_function(lambda t: 1 + np.sin(t), 32)])
def test_json_round_trip(nu, tmp_path):
    p = tmp_path / "nu.json"
    p.write_text(json.dumps(nu.to_json()))
    back = load(p)
    assert type(back) is type(nu)
    assert np.array_equal(fourier_coeffs(back, 5).values, fourier_coeffs(nu, 5).values)


def test_json_rejects_unknown():
    with pytest.raises(ConfigurationError):
        from_json({"kind": "atomic", "angles": [], "weights": [], "extra": 1})
    with pytest.raises(ConfigurationError):
        from_json({"kind": "blob"})


def test_csv():
    text = to_csv(atomic([0.5, 1.5]), K=2)
    lines = text.strip().splitlines()
    assert lines[0] == "angle,weight_re,weight_im"
    assert "k,a_re,a_im" in lines
    assert len(lines) == 1 + 2 + 1 + 5
