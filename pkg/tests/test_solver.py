import warnings

import numpy as np
import pytest

import snls
import snls.solver as solver_mod
from snls.errors import GridMismatchError, InstabilityError, ParameterError

from conftest import l2_dist


@pytest.fixture(scope="module")
def setup():
    g = snls.Grid(1024, 100.0)
    v = snls.build_potential(snls.PotentialSpec(height=2.0, width=1.0), g)
    return g, v


def make_problem(g, v, u0, dt=1e-3, t_final=1.0, **kw):
    return snls.NlsProblem(grid=g, v=v, alpha=5.0, u0=u0, dt=dt, t_final=t_final, **kw)


class TestProblemValidation:
    def test_alpha_range(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        with pytest.raises(ParameterError):
            snls.NlsProblem(grid=g, v=v, alpha=3.0, u0=u0, dt=1e-3, t_final=1.0)
        # permissive mode admits subcritical powers
        p = snls.NlsProblem(grid=g, v=v, alpha=3.0, u0=u0, dt=1e-3, t_final=1.0, permissive=True)
        assert p.alpha == 3.0

    def test_record_times_validation(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        with pytest.raises(ParameterError):
            make_problem(g, v, u0, record_times=[0.5, 0.5])
        with pytest.raises(ParameterError):
            make_problem(g, v, u0, record_times=[0.5, 2.0])

    def test_zero_prepended(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        p = make_problem(g, v, u0, record_times=[0.5, 1.0])
        assert p.record_times[0] == 0.0

    def test_grid_mismatch(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(snls.Grid(256, 100.0))
        with pytest.raises(GridMismatchError):
            make_problem(g, v, u0)


class TestPhaseSubstep:
    def test_zero_field(self, setup):
        g, v = setup
        z = snls.ComplexField(g, np.zeros(g.n_points))
        out = snls.phase_substep(z, v, 5.0, 0.01)
        assert np.array_equal(out.values, z.values)

    def test_unit_modulus_global_phase(self, grid_small):
        vals = np.exp(1j * np.linspace(0, 4, grid_small.n_points))
        f = snls.ComplexField(grid_small, vals)
        dt = 0.3
        out = snls.phase_substep(f, np.zeros(grid_small.n_points), 5.0, dt)
        assert np.max(np.abs(out.values - np.exp(-1j * dt) * vals)) < 1e-14

    def test_modulus_preserved(self, setup, rng):
        g, v = setup
        vals = rng.standard_normal(g.n_points) + 1j * rng.standard_normal(g.n_points)
        f = snls.ComplexField(g, vals)
        out = snls.phase_substep(f, v, 4.5, 0.173)
        assert np.max(np.abs(np.abs(out.values) - np.abs(vals))) < 1e-13

    def test_negative_dt_reverses(self, setup):
        g, v = setup
        f = snls.gaussian_packet(g)
        there = snls.phase_substep(f, v, 5.0, 0.2)
        back = snls.phase_substep(there, v, 5.0, -0.2)
        assert np.max(np.abs(back.values - f.values)) < 1e-14


class TestSolve:
    def test_zero_initial_data(self, setup):
        g, v = setup
        z = snls.ComplexField(g, np.zeros(g.n_points))
        traj = snls.solve(make_problem(g, v, z, record_times=[0.5, 1.0]))
        for f in traj.fields:
            assert np.all(f.values == 0)
        assert np.all(traj.mass == 0) and np.all(traj.energy == 0)

    def test_first_snapshot_is_u0(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        traj = snls.solve(make_problem(g, v, u0, record_times=[1.0]))
        assert np.array_equal(traj.fields[0].values, u0.values)
        assert traj.times[0] == 0.0

    def test_mass_conserved(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        traj = snls.solve(make_problem(g, v, u0, dt=1e-3, t_final=2.0,
                                       record_times=np.arange(0, 2.2, 0.25)))
        m0 = traj.mass[0]
        assert np.max(np.abs(traj.mass - m0)) / m0 < 1e-10

    def test_energy_drift_quadratic_in_dt(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        rec = [0.5, 1.0]
        drifts = []
        for dt in (2e-3, 1e-3):
            traj = snls.solve(make_problem(g, v, u0, dt=dt, record_times=rec))
            drifts.append(np.max(np.abs(traj.energy - traj.energy[0])) / abs(traj.energy[0]))
        assert drifts[0] / drifts[1] > 3.5

    def test_small_data_tracks_free_flow(self):
        g = snls.Grid(1024, 120.0)
        u0 = snls.gaussian_packet(g, amplitude=0.01)
        traj = snls.solve(
            snls.NlsProblem(grid=g, v=np.zeros(g.n_points), alpha=5.0, u0=u0,
                            dt=1e-3, t_final=5.0)
        )
        free = snls.evolve_free(u0, 5.0)
        assert l2_dist(traj.final_field, free) < 1e-4

    def test_time_reversal(self, setup):
        # backward integration realized through the conjugation symmetry:
        # conj(u) solves the same equation with t -> -t for real V
        g, v = setup
        u0 = snls.gaussian_packet(g)
        fwd = snls.solve(make_problem(g, v, u0, dt=1e-3, t_final=1.0))
        w0 = snls.ComplexField(g, np.conj(fwd.final_field.values))
        bwd = snls.solve(make_problem(g, v, w0, dt=1e-3, t_final=1.0))
        recovered = snls.ComplexField(g, np.conj(bwd.final_field.values))
        assert l2_dist(recovered, u0) < 1e-8

    def test_linear_mode_matches_propagator(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        traj = snls.solve(make_problem(g, v, u0, dt=1e-2, t_final=1.0, linear=True))
        p = snls.PerturbedPropagator(g, v, dt=1e-2)
        assert l2_dist(traj.final_field, p.evolve(u0, 1.0)) < 1e-13

    def test_sup_norm_with_conserved_quantity_bound(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        traj = snls.solve(make_problem(g, v, u0, dt=1e-3, t_final=2.0,
                                       record_times=np.arange(0, 2.2, 0.2)))
        bound = snls.defocusing_sup_bound(traj.mass[0], traj.energy[0])
        assert np.max(traj.sup) <= 2.0 * bound

    def test_snapshot_lookup(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        traj = snls.solve(make_problem(g, v, u0, record_times=[0.25, 0.5, 1.0]))
        assert traj.snapshot_index(0.5) == 2
        assert traj.snapshot_index(0.33) is None
        assert np.array_equal(traj.field_at(0.25).values, traj.fields[1].values)


class TestGuardsAndWarnings:
    def test_blowup_guard(self, setup, monkeypatch):
        # two counter-propagating packets constructively interfere, roughly
        # doubling the sup norm; with the guard tightened to 1.5x this must
        # trip the instability error
        monkeypatch.setattr(solver_mod, "BLOWUP_FACTOR", 1.5)
        g, _ = setup
        vals = (
            snls.gaussian_packet(g, center=-5.0, momentum=2.5, width=3.0).values
            + snls.gaussian_packet(g, center=5.0, momentum=-2.5, width=3.0).values
        )
        u0 = snls.ComplexField(g, 0.1 * vals)  # weak enough to stay near-linear
        with pytest.raises(InstabilityError):
            snls.solve(snls.NlsProblem(grid=g, v=np.zeros(g.n_points), alpha=5.0,
                                       u0=u0, dt=1e-2, t_final=1.5))

    def test_wraparound_warning(self):
        g = snls.Grid(256, 30.0)
        u0 = snls.gaussian_packet(g, momentum=2.0)
        prob = snls.NlsProblem(grid=g, v=np.zeros(256), alpha=5.0, u0=u0,
                               dt=1e-2, t_final=6.0)
        with pytest.warns(UserWarning, match="wrap-around"):
            traj = snls.solve(prob)
        assert any("wrap-around" in w for w in traj.warnings)

    def test_resolution_warning(self):
        g = snls.Grid(64, 40.0)
        u0 = snls.gaussian_packet(g, width=0.4)
        prob = snls.NlsProblem(grid=g, v=np.zeros(64), alpha=5.0, u0=u0,
                               dt=1e-2, t_final=0.1)
        with pytest.warns(UserWarning, match="resolution"):
            traj = snls.solve(prob)
        assert any("resolution" in w for w in traj.warnings)

    def test_clean_run_has_no_warnings(self, setup):
        g, v = setup
        u0 = snls.gaussian_packet(g)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            traj = snls.solve(make_problem(g, v, u0, t_final=0.5))
        assert traj.warnings == ()
