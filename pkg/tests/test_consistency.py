import math

import numpy as np
import pytest

from gaptooth.consistency import (
    PROBES,
    ConsistencyError,
    fit_slope,
    interpolated_state,
    macroscale_residual,
    run_convergence,
)
from gaptooth.coupling import CouplingScheme
from gaptooth.grid import Topology, build_lattice
from gaptooth.models import NonlinearAdvective, ProbeParams


def _lattice(m=20):
    return build_lattice(2 * math.pi, m, 9, 1 / 6, Topology.PERIODIC)


@pytest.mark.parametrize("probe", sorted(PROBES))
def test_constant_state_has_no_residual(probe):
    # third differences over d**3 amplify round-off in the interpolation weights
    assert macroscale_residual(PROBES[probe], CouplingScheme("cubic", 1 / 6), _lattice(), k=0) <= 1e-10


def test_non_resonant_wavenumber_is_rejected():
    with pytest.raises(ConsistencyError):
        macroscale_residual(PROBES["wave"], CouplingScheme("cubic", 1 / 6), _lattice(), k=1.5)


def test_bounded_lattice_is_rejected():
    lat = build_lattice(2 * math.pi, 20, 9, 1 / 6, Topology.BOUNDED)
    with pytest.raises(ConsistencyError):
        macroscale_residual(PROBES["wave"], CouplingScheme("cubic", 1 / 6), lat)


def test_too_few_levels():
    with pytest.raises(ConsistencyError, match="at least 4"):
        run_convergence("wave", "cubic", patch_counts=(10, 20, 40))
    with pytest.raises(ConsistencyError):
        run_convergence("wave", "cubic", patch_counts=(10, 12, 14, 16))


def test_interpolated_state_of_constant():
    lat = _lattice(10)
    y = interpolated_state(lat, CouplingScheme("quintic", 1 / 6), np.full(10, 2.5))
    np.testing.assert_allclose(y, 2.5, rtol=1e-13)


def test_slopes_increase_with_order():
    slopes = [run_convergence("wave", o, patch_counts=(10, 20, 40, 80)).slope for o in ("linear", "cubic", "quintic")]
    assert slopes == sorted(slopes)


def test_nonlinear_probe_tends_to_linear_wave():
    """Turning off c5 gives the wave-equation residuals exactly."""
    flat = run_convergence(NonlinearAdvective(ProbeParams(c5=0.0)), "cubic", patch_counts=(10, 20, 40, 80), amplitude=0.1)
    wave = run_convergence("wave", "cubic", patch_counts=(10, 20, 40, 80), amplitude=0.1)
    np.testing.assert_allclose(flat.residuals, wave.residuals, rtol=1e-10)
    small = run_convergence(NonlinearAdvective(ProbeParams(c5=1e-8)), "cubic", patch_counts=(10, 20, 40, 80), amplitude=0.1)
    np.testing.assert_allclose(small.residuals, wave.residuals, rtol=1e-5)


def test_fit_slope_on_exact_power_law():
    D = np.array([0.4, 0.2, 0.1, 0.05, 0.025])
    slope, res = fit_slope(D, 3 * D**4)
    assert slope == pytest.approx(4.0)
    assert res == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(fit_slope(D, np.zeros(5))[0])


def test_report_csv_has_one_row_per_level():
    rep = run_convergence("wave", "linear", patch_counts=(10, 20, 40, 80))
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "system,order,D,residual,slope"
    assert len(lines) == 5
    assert rep.passed


def test_continuum_reference_runs():
    lat = _lattice(40)
    res = macroscale_residual(PROBES["wave"], CouplingScheme("cubic", 1 / 6), lat, reference="continuum")
    assert 0 < res < 1e-2
    with pytest.raises(ValueError):
        macroscale_residual(PROBES["wave"], CouplingScheme("cubic", 1 / 6), lat, reference="other")
