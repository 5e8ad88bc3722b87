import math

import numpy as np
import pytest
import scipy.linalg

from qnet import lindblad as lb
from qnet import network as nw
from qnet import qops
from qnet import scenarios as sc

C = 0.01


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def line(n, c=C, omega=1.0, **drive):
    """n sites on one ladder rung, all mutually resonant."""
    sites = tuple(nw.SiteSpec(j + 1, (0, j), omega) for j in range(n))
    hop = c * (np.ones((n, n)) - np.eye(n))
    return nw.NetworkSpec(sites, nw.DriveSpec(**drive), tuple(map(tuple, hop)))


@pytest.fixture
def driven():
    return nw.default_network(drive_strength=38.8)


@pytest.fixture
def rates():
    return lb.DissipatorSpec(gamma_s=2e-4, gamma_d=1e-4, gamma_deph=(1e-3, 2e-3, 0.0, 5e-4))


class TestMasterRhs:
    def test_ground_state_stationary(self):
        net = nw.default_network()
        rho = qops.ket2dm(qops.basis_state("gggg"))
        d = lb.master_rhs(rho, 3.0, net, lb.DissipatorSpec())
        assert np.max(np.abs(np.diag(d))) == 0.0

    def test_traceless_hermitian(self, driven, rates):
        rng = np.random.default_rng(0)
        for _ in range(10):
            d = lb.master_rhs(random_density(16, rng), rng.uniform(0, 100), driven, rates)
            assert abs(np.trace(d)) < 1e-12
            assert np.max(np.abs(d - d.conj().T)) < 1e-14

    def test_single_qubit_dephasing_rate(self):
        # the printed form gives d rho_ge / dt = -(i omega + gamma) rho_ge
        gamma = 0.03
        sites = (nw.SiteSpec(1, (0, 0)), nw.SiteSpec(2, (0, 1)))
        net = nw.NetworkSpec(sites, nw.DriveSpec(), ((0.0, 0.0), (0.0, 0.0)))
        dis = lb.DissipatorSpec(gamma_deph=(gamma, 0.0), source_site=1, drain_site=2)
        plus = np.array([1, 1]) / math.sqrt(2)
        rho0 = np.kron(np.outer(plus, plus), np.diag([1.0, 0.0])).astype(complex)
        L = lb.liouvillian_matrix(net, dis, 0.0)
        for t in (10.0, 50.0):
            rho = lb.unvec(scipy.linalg.expm(L * t) @ lb.vec(rho0), 4)
            red = qops.partial_trace(rho, [1])
            assert abs(abs(red[0, 1]) - 0.5 * math.exp(-gamma * t)) < 1e-12
            np.testing.assert_allclose(np.diag(red).real, [0.5, 0.5], atol=1e-14)

    def test_shape_mismatch(self, driven):
        with pytest.raises(ValueError):
            lb.master_rhs(np.eye(4) / 4, 0.0, driven, lb.DissipatorSpec())


class TestLiouvillian:
    def test_zero(self):
        sites = (nw.SiteSpec(1, (0, 0), 0.0), nw.SiteSpec(2, (0, 1), 0.0))
        net = nw.NetworkSpec(sites, nw.DriveSpec(omega_d=0.0, delta_omega=0.0), ((0, 0), (0, 0)))
        dis = lb.DissipatorSpec(source_site=1, drain_site=2)
        assert not np.any(lb.liouvillian_matrix(net, dis, 0.0))

    def test_matches_rhs(self, driven, rates):
        rng = np.random.default_rng(1)
        t = 12.3
        L = lb.liouvillian_matrix(driven, rates, t)
        for _ in range(16):
            rho = random_density(16, rng)
            diff = L @ lb.vec(rho) - lb.vec(lb.master_rhs(rho, t, driven, rates))
            assert np.max(np.abs(diff)) < 1e-12

    def test_matrix_units(self, driven, rates):
        L = lb.liouvillian_matrix(driven, rates, 0.7)
        for k in range(0, 256, 17):
            e = np.zeros(256, complex)
            e[k] = 1.0
            np.testing.assert_allclose(L[:, k], lb.vec(lb.master_rhs(lb.unvec(e, 16), 0.7, driven, rates)), atol=1e-15)

    def test_spectrum_non_expanding(self, driven, rates):
        w = np.linalg.eigvals(lb.liouvillian_matrix(driven, rates, 4.0))
        assert np.max(w.real) <= 1e-10


class TestEvolve:
    def test_rabi_transfer(self):
        net = line(2)
        rho0 = qops.ket2dm(qops.basis_state("eg"))
        dis = lb.DissipatorSpec(source_site=1, drain_site=2)
        traj = lb.evolve(rho0, net, dis, t_end=math.pi / (2 * C), pair=(1, 2))
        assert abs(traj.population(2)[-1] - 1.0) < 1e-6
        assert traj.ct[-1] == pytest.approx(math.pi / 2)

    def test_pump_closed_form(self):
        net = nw.default_network(c=0.0)
        gs = 2e-3
        dis = lb.DissipatorSpec(gamma_s=gs)
        traj = lb.evolve(qops.ket2dm(qops.basis_state("gggg")), net, dis, t_end=500.0)
        expected = 1.0 - np.exp(-2 * gs * traj.t)
        assert np.max(np.abs(traj.population(1) - expected)) < 1e-8

    def test_expm_oracle(self, rates):
        net = nw.default_network(drive_strength=0.0)
        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        t_end = 1.0 / net.c
        traj = lb.evolve(rho0, net, rates, t_end=t_end, keep_states=True)
        L = lb.liouvillian_matrix(net, rates, 0.0)
        exact = lb.unvec(scipy.linalg.expm(L * t_end) @ lb.vec(rho0), 16)
        assert np.max(np.abs(traj.states[-1] - exact)) < 1e-8

    def test_cross_sector_coherence(self, rates):
        # a superposition of 0 and 1 excitations occupies the +-1 sectors too
        net = nw.default_network(drive_strength=0.0)
        ket = (qops.basis_state("gggg") + qops.basis_state("gegg")) / math.sqrt(2)
        rho0 = qops.ket2dm(ket)
        traj = lb.evolve(rho0, net, rates, t_end=100.0, keep_states=True)
        exact = lb.unvec(scipy.linalg.expm(lb.liouvillian_matrix(net, rates, 0.0) * 100.0) @ lb.vec(rho0), 16)
        # these coherences rotate at the carrier, so RK4 phase error is ~1e-6 here;
        # a dropped sector would leave an O(0.3) gap
        assert np.max(np.abs(traj.states[-1] - exact)) < 1e-5
        assert abs(traj.states[-1][0, 4]) > 0.1

    def test_driven_against_rhs_integration(self, driven, rates):
        from scipy.integrate import solve_ivp

        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        traj = lb.evolve(rho0, driven, rates, t_end=60.0, keep_states=True)
        sol = solve_ivp(
            lambda t, y: lb.vec(lb.master_rhs(lb.unvec(y, 16), t, driven, rates)),
            (0, 60.0), lb.vec(rho0), rtol=1e-11, atol=1e-13, method="DOP853",
        )
        assert np.max(np.abs(traj.states[-1] - lb.unvec(sol.y[:, -1], 16))) < 1e-8

    def test_integrity(self, driven, rates):
        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        traj = lb.evolve(rho0, driven, rates, t_end=1000.0)
        d = traj.diagnostics
        assert d["max_trace_drift"] < 1e-8
        assert d["max_herm_residual"] < 1e-10
        assert d["min_eig"] >= -1e-8
        assert np.all(np.diff(traj.t) > 0)
        assert np.all(traj.populations >= -1e-8) and np.all(traj.populations <= 1 + 1e-8)
        assert np.all(traj.populations.sum(axis=1) <= 4 + 1e-8)

    def test_excitation_non_increasing_without_pump(self, driven):
        dis = lb.DissipatorSpec(gamma_d=5e-3, gamma_deph=(1e-3,) * 4)
        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        traj = lb.evolve(rho0, driven, dis, t_end=1000.0)
        total = traj.populations.sum(axis=1)
        assert np.all(np.diff(total) <= 1e-10)

    def test_rk45_cross_check(self):
        cfg = sc.default_config("entangled", drive=38.8)
        rho0 = sc.initial_state(cfg.initial)
        t_end = cfg.horizon / cfg.network.c
        fixed = lb.evolve(rho0, cfg.network, cfg.dissipators, t_end=t_end)
        adaptive = lb.evolve(rho0, cfg.network, cfg.dissipators, lb.IntegratorSpec(method="rk45"), t_end=t_end)
        np.testing.assert_allclose(adaptive.t, fixed.t)
        assert np.max(np.abs(adaptive.populations - fixed.populations)) < 1e-6

    def test_observers(self, driven, rates):
        rho0 = sc.initial_state(sc.InitialStateSpec("mixed"))
        n = nw.number_operator(driven)
        traj = lb.evolve(rho0, driven, rates, t_end=50.0, observers={"N": lambda r: np.trace(n @ r).real})
        np.testing.assert_allclose(traj.observables["N"], traj.populations.sum(axis=1), atol=1e-12)

    def test_pair_states(self, driven, rates):
        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        traj = lb.evolve(rho0, driven, rates, t_end=50.0, keep_states=True)
        np.testing.assert_allclose(traj.pair_states, qops.partial_trace(traj.states, [2, 4]), atol=1e-15)

    def test_divergence_reported(self, driven):
        rho0 = sc.initial_state(sc.InitialStateSpec("entangled"))
        with pytest.raises(lb.IntegrationError):
            lb.evolve(rho0, driven, lb.DissipatorSpec(), lb.IntegratorSpec(dt=5.0, record_every=1), t_end=2000.0)

    def test_invalid_state(self, driven):
        with pytest.raises(qops.InvalidStateError):
            lb.evolve(np.diag([1.0] + [0.1] * 15), driven, lb.DissipatorSpec(), t_end=1.0)

    def test_wrong_dimension(self, driven):
        with pytest.raises(ValueError):
            lb.evolve(np.eye(4) / 4, driven, lb.DissipatorSpec(), t_end=1.0)


class TestTimeGrid:
    @pytest.mark.parametrize("t_end", [1.0, 1000.0, 10000.0])
    def test_covers_exactly(self, t_end):
        net = nw.default_network(drive_strength=18.0)
        n_rec, m, dt = lb.time_grid(t_end, net, lb.IntegratorSpec())
        assert n_rec * m * dt == pytest.approx(t_end, rel=1e-14)
        assert dt <= 2 * math.pi / nw.max_frequency(net) / 160 + 1e-15

    def test_explicit_dt_is_upper_bound(self):
        net = nw.default_network()
        _, _, dt = lb.time_grid(1000.0, net, lb.IntegratorSpec(dt=0.03))
        assert dt <= 0.03

    def test_record_every(self):
        net = nw.default_network()
        n_rec, m, dt = lb.time_grid(100.0, net, lb.IntegratorSpec(dt=0.1, record_every=5))
        assert (n_rec, m) == (200, 5)

    @pytest.mark.parametrize("kw", [{"method": "euler"}, {"dt": -1.0}, {"rel_tol": 0.0}, {"record_every": 0}])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            lb.IntegratorSpec(**kw)


class TestDissipatorSpec:
    def test_negative_rate(self):
        with pytest.raises(ValueError):
            lb.DissipatorSpec(gamma_s=-1.0)

    def test_same_sites(self):
        with pytest.raises(ValueError):
            lb.DissipatorSpec(source_site=2, drain_site=2)

    def test_default_rates(self):
        dis = lb.default_dissipators(gamma=1e-3)
        assert dis.gamma_d == pytest.approx(1e-4)
        assert dis.gamma_s == pytest.approx(2e-4)
        assert dis.gamma_deph == (1e-3,) * 4
