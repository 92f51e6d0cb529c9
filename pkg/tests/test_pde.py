import numpy as np
import pytest

from dualflow import flux as fx
from dualflow import measure as ms
from dualflow import pde

ATTR = fx.quadratic_attractive()
REP = fx.quadratic_repulsive()


def dirac_grid(x_min=-3.0, x_max=1.0, n=200, x0=0.0, m=1.0):
    return ms.sample_to_grid(ms.AtomicMeasure.from_pairs([(x0, m)]),
                             x_min, x_max, n)


class TestStableDt:
    def test_positive_and_cfl_scaled(self):
        f = dirac_grid()
        dt1 = pde.stable_dt(f, ATTR, 0.45)
        dt2 = pde.stable_dt(f, ATTR, 0.9)
        assert dt1 > 0
        assert dt2 == pytest.approx(2 * dt1)

    def test_rest_state_needs_dt_max(self):
        # constant-velocity model with a = 0: no waves, dt unbounded
        still = fx.polynomial([0.0])
        f = dirac_grid()
        assert pde.stable_dt(f, still, 0.45) == np.inf
        assert pde.stable_dt(f, still, 0.45, dt_max=0.25) == 0.25

    def test_step_rejects_infinite_dt(self):
        still = fx.polynomial([0.0])
        state = pde.SolverState(0.0, dirac_grid())
        with pytest.raises(pde.SolverError):
            pde.step(state, still)


class TestStepInvariants:
    @pytest.mark.parametrize("model", [ATTR, REP])
    def test_mass_conserved_exactly(self, model):
        state = pde.SolverState(0.0, dirac_grid())
        for _ in range(50):
            state = pde.step(state, model)
        assert state.field.total_mass == 1.0
        assert state.field.u_faces[0] == 0.0

    @pytest.mark.parametrize("model", [ATTR, REP])
    def test_monotonicity_preserved(self, model):
        state = pde.SolverState(0.0, dirac_grid())
        for _ in range(50):
            state = pde.step(state, model)
            assert np.all(np.diff(state.field.u_faces) >= -1e-14)

    def test_bounds_preserved(self):
        # monotone scheme: u stays within [0, total mass]
        state = pde.SolverState(0.0, dirac_grid())
        for _ in range(50):
            state = pde.step(state, REP)
        u = state.field.u_faces
        assert u.min() >= -1e-14
        assert u.max() <= 1.0 + 1e-14


class TestShockTransport:
    def test_attractive_dirac_moves_at_center_of_mass_speed(self):
        # unit Dirac at 0, a(u) = -u: travels at -(1/2)
        snaps = pde.run(dirac_grid(n=400), ATTR, 1.0)
        final = snaps[-1].field
        atom = ms.extract_atoms(final)
        assert atom.n_atoms == 1
        assert atom.masses[0] == pytest.approx(1.0, abs=1e-6)
        assert atom.positions[0] == pytest.approx(-0.5, abs=2 * final.dx)

    def test_riemann_shock_speed(self):
        # a(u) = -u, states 0 / 1: shock speed (A(1)-A(0))/1 = -1/2
        f = ms.GridField(-2.0, 1.0, 300,
                         np.where(np.linspace(-2.0, 1.0, 301) >= 0.0, 1.0, 0.0))
        snaps = pde.run(f, ATTR, 1.0)
        final = snaps[-1].field
        mid = ms.quantile(final, 0.5)
        assert mid == pytest.approx(-0.5, abs=3 * final.dx)


class TestRarefaction:
    def test_repulsive_dirac_spreads_linearly(self):
        # exact profile: u(t,x) = clamp(x/t, 0, 1)
        snaps = pde.run(dirac_grid(x_min=-1.0, x_max=3.0, n=400), REP, 1.0,
                        cfl=0.9)
        final = snaps[-1].field
        exact = np.clip(final.faces / 1.0, 0.0, 1.0)
        err = final.dx * np.sum(np.abs(final.u_faces - exact))
        assert err < 0.02

    def test_density_bound_no_foot_spike(self):
        snaps = pde.run(dirac_grid(x_min=-1.0, x_max=3.0, n=400), REP, 2.0,
                        cfl=0.9, output_times=[0.5, 1.0, 2.0])
        for s in snaps:
            if s.t == 0.0:
                continue
            dens = s.field.cell_masses / s.field.dx
            assert dens.max() <= 1.0 / s.t + 2 * s.field.dx / s.t


class TestRun:
    def test_output_times_hit_exactly(self):
        snaps = pde.run(dirac_grid(), ATTR, 1.0, output_times=[0.0, 0.3, 0.7])
        assert [s.t for s in snaps] == [0.0, 0.3, 0.7, 1.0]

    def test_bad_arguments(self):
        f = dirac_grid()
        with pytest.raises(ValueError):
            pde.run(f, ATTR, -1.0)
        with pytest.raises(ValueError):
            pde.run(f, ATTR, 1.0, cfl=1.5)
        with pytest.raises(ValueError):
            pde.run(f, ATTR, 1.0, output_times=[2.0])

    def test_boundary_contact_warns(self):
        # domain too small: the shock hits the left edge before t = 4
        with pytest.warns(RuntimeWarning, match="boundary"):
            pde.run(dirac_grid(x_min=-1.0, x_max=1.0, n=100), ATTR, 4.0)


class TestMomentum:
    @pytest.mark.parametrize("model", [ATTR, REP])
    def test_total_momentum_is_flux_increment(self, model):
        snaps = pde.run(dirac_grid(x_min=-3.0, x_max=3.0, n=300), model, 0.5)
        q = pde.momentum_field(snaps[-1], model)
        assert float(q.sum()) == pytest.approx(fx.eval_A(model, 1.0), abs=1e-12)

    def test_velocity_bracket(self):
        # q_i / rho_i stays inside the velocity range wherever mass sits
        snaps = pde.run(dirac_grid(), ATTR, 1.0)
        rho = snaps[-1].field.cell_masses
        q = pde.momentum_field(snaps[-1], ATTR)
        sel = rho > 1e-10
        ratio = q[sel] / rho[sel]
        amin, amax = fx.a_range(ATTR, 0.0, 1.0)
        assert np.all(ratio >= amin - 1e-10)
        assert np.all(ratio <= amax + 1e-10)
