import math
import warnings

import numpy as np
import pytest

from qnet import network as nw
from qnet import qops


@pytest.fixture
def net():
    return nw.default_network(drive_strength=38.8)


def two_site(c=0.01):
    sites = (nw.SiteSpec(1, (0, 0)), nw.SiteSpec(2, (0, 1)))
    return nw.NetworkSpec(sites, nw.DriveSpec(), ((0.0, c), (c, 0.0)))


class TestGeometry:
    def test_ladder(self, net):
        assert nw.ladder_offset(net, 1) == 0.0
        assert nw.ladder_offset(net, 3) == 0.25
        assert nw.ladder_offset(net, 4) == 0.0

    def test_site_phase(self, net):
        assert nw.site_phase(net, 1) == 0.0
        assert nw.site_phase(net, 3) == pytest.approx(2 * math.pi)
        other = net.with_drive(phi_x=math.pi, phi_y=0.0)
        assert nw.site_phase(other, 2) == pytest.approx(math.pi)
        assert nw.site_phase(other, 3) == pytest.approx(math.pi)

    def test_unknown_site(self, net):
        with pytest.raises(KeyError):
            nw.ladder_offset(net, 5)

    def test_rescaled_drive(self, net):
        assert net.drive.eta_d * net.drive.omega_d == pytest.approx(0.388)
        assert net.drive_strength == pytest.approx(38.8)


class TestValidation:
    def test_resonance_enforced(self):
        with pytest.raises(ValueError, match="resonance"):
            nw.DriveSpec(omega_d=0.25, delta_omega=0.3)

    def test_r_positive(self):
        with pytest.raises(ValueError):
            nw.DriveSpec(r=0, delta_omega=0.0)

    def test_duplicate_coords(self):
        sites = (nw.SiteSpec(1, (0, 0)), nw.SiteSpec(2, (0, 0)))
        with pytest.raises(ValueError):
            nw.NetworkSpec(sites, nw.DriveSpec(), ((0, 0), (0, 0)))

    def test_negative_coords(self):
        with pytest.raises(ValueError):
            nw.SiteSpec(1, (-1, 0))

    def test_asymmetric_hopping(self):
        sites = (nw.SiteSpec(1, (0, 0)), nw.SiteSpec(2, (0, 1)))
        with pytest.raises(ValueError):
            nw.NetworkSpec(sites, nw.DriveSpec(), ((0, 0.1), (0.2, 0)))

    def test_large_hopping_warns(self):
        with pytest.warns(UserWarning, match="rotating-wave"):
            nw.default_network(c=0.2)

    def test_small_hopping_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            nw.default_network(c=0.01)


class TestOnsite:
    def test_caption_value(self, net):
        assert nw.onsite_coefficient(net, 1, 0.0) == pytest.approx(1.388, abs=1e-12)

    def test_undriven_constant(self):
        net = nw.default_network()
        vals = [nw.onsite_coefficient(net, 3, t) for t in (0.0, 1.3, 17.0)]
        assert vals == [1.25] * 3

    def test_site3_at_zero(self, net):
        d = net.drive
        expected = 1.0 + 0.25 + d.eta_d * d.omega_d * math.cos(2 * math.pi)
        assert nw.onsite_coefficient(net, 3, 0.0) == pytest.approx(expected, abs=1e-15)

    def test_periodic(self, net):
        period = 2 * math.pi / net.drive.omega_d
        for t in np.linspace(0, 40, 7):
            for j in range(1, 5):
                assert abs(nw.onsite_coefficient(net, j, t + period) - nw.onsite_coefficient(net, j, t)) < 1e-12


class TestHamiltonian:
    def test_zero_hopping(self):
        net = nw.default_network(c=0.0)
        assert not np.any(nw.hopping_hamiltonian(net))

    def test_two_site_block(self):
        h = nw.hopping_hamiltonian(two_site())
        np.testing.assert_array_equal(h[1:3, 1:3], [[0, 0.01], [0.01, 0]])
        assert h[0, 0] == 0 and h[3, 3] == 0

    def test_conserves_excitations(self, net):
        n = nw.number_operator(net)
        h = nw.hopping_hamiltonian(net)
        assert np.max(np.abs(h @ n - n @ h)) < 1e-14
        for t in np.random.default_rng(0).uniform(0, 100, 5):
            ht = nw.hamiltonian(net, t)
            assert np.max(np.abs(ht @ n - n @ ht)) < 1e-13

    def test_hermitian(self, net):
        for t in np.random.default_rng(1).uniform(0, 1000, 5):
            h = nw.hamiltonian(net, t)
            assert np.max(np.abs(h - h.conj().T)) < 1e-14

    def test_diagonal_when_cos_vanishes(self):
        # phases 0 everywhere, so cos(omega_d t) = 0 at t = pi / (2 omega_d)
        net = nw.default_network(c=0.0, drive_strength=0.0, phi_x=0.0, phi_y=0.0).with_drive(eta_d=1.3)
        h = nw.hamiltonian(net, math.pi / (2 * net.drive.omega_d))
        expected = sum(nw.static_energy(net, j) * qops.site_operator(4, j, qops.NUMBER) for j in range(1, 5))
        assert np.max(np.abs(h - expected)) < 1e-15

    def test_matrix_element(self, net):
        h = nw.hamiltonian(net, 0.0)
        e = qops.basis_state("eggg")
        assert (e.conj() @ h @ e).real == pytest.approx(nw.onsite_coefficient(net, 1, 0.0), abs=1e-15)

    def test_max_frequency(self, net):
        assert nw.max_frequency(net) == pytest.approx(1.0 + 0.25 + 0.388)
