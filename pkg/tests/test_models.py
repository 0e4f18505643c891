import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaptooth.models import (
    DepthError,
    DispersiveDiffusive,
    LinearDispersive,
    NonlinearAdvective,
    PatchFields,
    ProbeParams,
    Smagorinski,
    SmagorinskiParams,
    smagorinski_rhs,
)


def line(values, first_is_depth=True, pad=3):
    """One row of fields; slot k is depth when (k + first) is even."""
    values = np.asarray(values, dtype=float)[None, :]
    k = np.arange(values.shape[1])
    mask = ((k % 2 == 0) == first_is_depth)[None, :]
    return PatchFields(values, mask, pad, values.shape[1] - pad)


def sampled(h, u, n=21, d=0.1, x0=0.0, pad=3):
    x = x0 + d * np.arange(n)
    mask = (np.arange(n) % 2 == 0)[None, :]
    vals = np.where(mask, h(x), u(x))
    return PatchFields(vals, mask, pad, n - pad), x[pad : n - pad], mask[0, pad : n - pad]


def test_quiescent_is_fixed():
    f = line(np.where(np.arange(15) % 2 == 0, 1.0, 0.0))
    assert np.all(smagorinski_rhs(f, SmagorinskiParams(tan_theta=0.0), 0.1) == 0)


def test_equilibrium_velocity():
    p = SmagorinskiParams(tan_theta=0.001)
    u0 = p.equilibrium_velocity
    assert u0 == pytest.approx(0.5730038, abs=1e-7)
    f = line(np.where(np.arange(15) % 2 == 0, 1.0, u0))
    assert np.abs(smagorinski_rhs(f, p, 0.02)).max() <= 1e-12


def test_depth_flux_by_hand():
    # depth 1 at even slots; slot 4 sits between u=-1 (slot 3) and u=+1 (slot 5)
    vals = np.array([1, 0, 1, -1, 1, 1, 1, 0, 1], dtype=float)
    f = PatchFields(vals[None, :], (np.arange(9) % 2 == 0)[None, :], 2, 7)
    out = smagorinski_rhs(f, SmagorinskiParams(tan_theta=0.0), 1.0)
    assert out[0, 4 - 2] == pytest.approx(-1.0)


def test_depth_error_names_slot():
    vals = np.where(np.arange(15) % 2 == 0, 1.0, 0.5)
    vals[6] = vals[8] = -0.1
    f = line(vals)
    with pytest.raises(DepthError) as err:
        smagorinski_rhs(f, SmagorinskiParams(), 0.1)
    assert err.value.column == 7


def test_depth_floor_avoids_error():
    vals = np.where(np.arange(15) % 2 == 0, 1.0, 0.5)
    vals[6] = vals[8] = -0.1
    out = smagorinski_rhs(line(vals), SmagorinskiParams(depth_floor=1e-3), 0.1)
    assert np.all(np.isfinite(out))


def test_mass_telescopes_on_a_loop():
    rng = np.random.default_rng(3)
    K = 40
    y = np.where(np.arange(K) % 2 == 1, 1 + 0.1 * rng.standard_normal(K), 0.3 * rng.standard_normal(K))
    ext = np.concatenate([y[-3:], y, y[:3]])
    mask = (np.arange(-3, K + 3) % 2 == 1)[None, :]
    out = smagorinski_rhs(PatchFields(ext[None, :], mask, 3, K + 3), SmagorinskiParams(), 0.05)
    assert abs(out[0][mask[0, 3 : K + 3]].sum()) <= 1e-12


def test_probe_zero_fields():
    f = line(np.zeros(15))
    p = ProbeParams(1, 2, 3, 4, 5, 6, 7)
    for system in (LinearDispersive(p), DispersiveDiffusive(p), NonlinearAdvective(p)):
        assert np.all(system.rhs(f, 0.1) == 0)


def test_first_difference_of_sampled_sine():
    k, d = 2.0, 0.05
    f, x, depth = sampled(lambda x: 0 * x, lambda x: np.sin(k * x), d=d)
    out = LinearDispersive().rhs(f, d)[0]
    want = -np.cos(k * x) * np.sin(k * d) / d
    np.testing.assert_allclose(out[depth], want[depth], atol=1e-13)


def test_third_difference_exact_on_cubic():
    f, x, depth = sampled(lambda x: 0 * x, lambda x: x**3, d=0.1)
    out = LinearDispersive(ProbeParams(c11=1.0)).rhs(f, 0.1)[0]
    # -u_x - u_xxx with u = x^3: the first difference is exact up to d^2 u'''/6
    np.testing.assert_allclose(out[depth], -(3 * x**2 + 0.01)[depth] - 6, atol=1e-10)


def test_second_difference_exact_on_quadratic():
    f, x, depth = sampled(lambda x: x**2, lambda x: 0 * x, d=0.1)
    out = DispersiveDiffusive(ProbeParams(c3=1.0)).rhs(f, 0.1)[0]
    np.testing.assert_allclose(out[depth], 2.0, atol=1e-10)


def test_diffusion_symbol_of_sine():
    k, d = 3.0, 0.04
    f, x, depth = sampled(lambda x: np.sin(k * x), lambda x: 0 * x, d=d)
    out = DispersiveDiffusive(ProbeParams(c3=1.0)).rhs(f, d)[0]
    want = -(2 - 2 * np.cos(2 * k * d)) / (4 * d * d) * np.sin(k * x)
    np.testing.assert_allclose(out[depth], want[depth], atol=1e-10)


def test_self_advection_of_ramp():
    f, x, depth = sampled(lambda x: 0 * x, lambda x: x, d=0.1)
    out = NonlinearAdvective(ProbeParams(c5=1.0)).rhs(f, 0.1)[0]
    np.testing.assert_allclose(out[~depth], -x[~depth], atol=1e-12)
    np.testing.assert_allclose(out[depth], -1.0, atol=1e-12)


def test_c5_zero_is_plain_wave():
    rng = np.random.default_rng(0)
    f = line(rng.standard_normal(17))
    np.testing.assert_array_equal(NonlinearAdvective().rhs(f, 0.2), LinearDispersive().rhs(f, 0.2))


@settings(max_examples=40, deadline=None)
@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=6, max_size=6),
    alpha=st.floats(-5, 5),
    seed=st.integers(0, 1000),
)
def test_probes_are_linear(coeffs, alpha, seed):
    p = ProbeParams(*coeffs, c5=0.0)
    f = line(np.random.default_rng(seed).standard_normal(19))
    g = PatchFields(alpha * f.values, f.depth_mask, f.lo, f.hi)
    for system in (LinearDispersive(p), DispersiveDiffusive(p), NonlinearAdvective(p)):
        a, b = system.rhs(g, 0.1), alpha * system.rhs(f, 0.1)
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_smagorinski_wrapper():
    f = line(np.where(np.arange(15) % 2 == 0, 1.0, 0.0))
    assert Smagorinski(SmagorinskiParams(tan_theta=0)).rhs(f, 0.1).shape == (1, 9)
