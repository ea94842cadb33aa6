import numpy as np
import pytest

from solitonlab.errors import NodeProximityError
from solitonlab.pilot_wave import (
    CoherentState,
    EigenstateSuperposition,
    NumericField,
    PlaneWave,
    evaluate,
    evaluate_with_gradient,
    guidance_velocity,
    phase_data,
    pilot_from_dict,
    pilot_grid_fields,
    pilot_to_dict,
    uniform_displacement,
)
from solitonlab.spectral_core import (
    ComplexField,
    PhysicalConstants,
    free_potential,
    gaussian_field,
    make_grid,
)

NAT = PhysicalConstants()


def free_gaussian_oracle(x, t, sigma0=1.0):
    """Closed-form freely spreading packet matching gaussian_field(sigma0)."""
    z = 1.0 + 0.5j * t / sigma0 ** 2
    return (2 * np.pi * sigma0 ** 2) ** -0.25 / np.sqrt(z) * np.exp(
        -x ** 2 / (4 * sigma0 ** 2 * z))


def fd_phase_gradient(spec, t, x, h=1e-5):
    psi = evaluate(spec, t, x)
    dpsi = (evaluate(spec, t, x + h) - evaluate(spec, t, x - h)) / (2 * h)
    return np.imag(np.conj(psi) * dpsi) / np.abs(psi) ** 2


def fd_phase_laplacian(spec, t, x, h=1e-4):
    return (fd_phase_gradient(spec, t, x + h) - fd_phase_gradient(spec, t, x - h)) / (2 * h)


class TestPlaneWave:
    def test_unit_modulus_everywhere(self):
        spec = PlaneWave(k=[1.7])
        xs = np.linspace(-5, 5, 11)
        assert np.allclose(np.abs(evaluate(spec, 0.3, xs)), 1.0)

    def test_phase_data(self):
        spec = PlaneWave(k=[0.9])
        d = phase_data(spec, 1.0, 2.0)
        assert d.grad_phase[0] == 0.9
        assert d.laplacian_phase == 0.0

    def test_velocity_is_hbar_k_over_m(self):
        c = PhysicalConstants(hbar=2.0, mass=0.5)
        spec = PlaneWave(k=[1.25], constants=c)
        v = guidance_velocity(spec, 0.0, 0.0)
        assert np.isclose(v[0], 2.0 * 1.25 / 0.5)


class TestCoherentState:
    def test_peak_amplitude_prefactor(self):
        spec = CoherentState(omega=1.0, amplitude=[2.0])
        peak = abs(evaluate(spec, 0.0, 2.0))
        assert np.isclose(peak, (1.0 / np.pi) ** 0.25, rtol=1e-12)

    def test_solves_linear_equation(self):
        # residual against the independent split-step propagation
        from solitonlab.spectral_core import harmonic_potential, l2_norm, split_step_linear

        g = make_grid(1, 512, [24.0])
        x = g.meshgrid()[0]
        spec = CoherentState(omega=1.0, amplitude=[2.0])
        f0 = ComplexField(g, evaluate(spec, 0.0, x))
        T = 2 * np.pi
        n = int(round(T / 1e-3))
        fT = split_step_linear(f0, harmonic_potential(1.0, NAT), T / n, n, NAT)
        resid = l2_norm(ComplexField(g, fT.values - evaluate(spec, T, x)))
        assert resid < 1e-6

    def test_phase_linear_in_position(self):
        spec = CoherentState(omega=1.0, amplitude=[2.0])
        t = 0.77
        g1 = phase_data(spec, t, -1.0).grad_phase[0]
        g2 = phase_data(spec, t, 1.4).grad_phase[0]
        assert np.isclose(g1, g2, rtol=1e-14)
        assert phase_data(spec, t, 0.2).laplacian_phase == 0.0

    def test_velocity_and_trajectory_family(self):
        spec = CoherentState(omega=1.0, amplitude=[2.0])
        ts = np.linspace(0, 2 * np.pi, 9)
        for t in ts:
            v = guidance_velocity(spec, t, 0.1)
            assert np.isclose(v[0], -2.0 * np.sin(t), atol=1e-13)
        disp = uniform_displacement(spec, 0.0, np.pi / 3)
        assert np.isclose(disp[0], 2.0 * (np.cos(np.pi / 3) - 1.0))

    def test_independent_axis_phases(self):
        spec = CoherentState(omega=1.0, amplitude=[1.0, 2.0],
                             phase_offsets=[0.0, np.pi / 2])
        c = spec.center(0.0)
        assert np.allclose(c, [1.0, 0.0], atol=1e-15)
        v = guidance_velocity(spec, 0.0, [1.0, 0.0])
        assert np.allclose(v, [0.0, -2.0], atol=1e-13)


class TestSuperposition:
    def test_node_detected_at_origin(self):
        spec = EigenstateSuperposition(terms=[(1, 1.0)], omega=1.0)
        with pytest.raises(NodeProximityError):
            phase_data(spec, 0.0, 0.0)

    def test_phase_data_matches_fd_oracle(self):
        spec = EigenstateSuperposition(
            terms=[(0, 0.6), (1, 0.5j), (3, 0.4 + 0.2j)], omega=1.0)
        for t, x in ((0.0, 0.9), (1.3, -0.7), (2.1, 1.8)):
            d = phase_data(spec, t, x)
            assert np.isclose(d.grad_phase[0], fd_phase_gradient(spec, t, x),
                              rtol=1e-6, atol=1e-8)
            assert np.isclose(d.laplacian_phase, fd_phase_laplacian(spec, t, x),
                              rtol=1e-4, atol=1e-6)

    def test_empty_coefficients_rejected(self):
        with pytest.raises(ValueError):
            EigenstateSuperposition(terms=[(0, 0.0)], omega=1.0)


class TestAnalyticDerivativeConsistency:
    @pytest.mark.parametrize("spec", [
        PlaneWave(k=[1.1]),
        CoherentState(omega=1.0, amplitude=[1.5]),
        EigenstateSuperposition(terms=[(0, 0.8), (2, 0.6j)], omega=1.0),
    ])
    def test_gradient_matches_fd(self, spec):
        t, x, h = 0.4, 0.63, 1e-6
        _, grads = evaluate_with_gradient(spec, t, x)
        fd = (evaluate(spec, t, x + h) - evaluate(spec, t, x - h)) / (2 * h)
        assert np.isclose(grads[0], fd, rtol=1e-8, atol=1e-10)


class TestNumericField:
    def make_free_pilot(self, dt_max=0.01):
        g = make_grid(1, 1024, [40.0])
        base = gaussian_field(g, 1.0)
        return NumericField(base, free_potential(), constants=NAT, dt_max=dt_max), g

    def test_matches_spreading_oracle_on_nodes(self):
        pilot, g = self.make_free_pilot()
        t = 1.5
        ax = g.axes()[0]
        for i in (400, 512, 600):
            got = evaluate(pilot, t, float(ax[i]))
            want = free_gaussian_oracle(float(ax[i]), t)
            assert abs(got - want) < 1e-9

    def test_matches_spreading_oracle_between_nodes(self):
        # off-node queries interpolate linearly: error bounded by dx^2 |psi''|/8
        pilot, g = self.make_free_pilot()
        t = 1.5
        for x in (-1.2, 0.4, 2.0):
            got = evaluate(pilot, t, x)
            want = free_gaussian_oracle(x, t)
            assert abs(got - want) < 1e-4

    def test_phase_data_against_closed_form(self):
        pilot, g = self.make_free_pilot()
        t, x = 2.0, 1.1
        d = phase_data(pilot, t, x)
        # grad phase of the spreading packet: x t / (4 sigma0^4 + t^2) * ...
        sigma0 = 1.0
        grad = x * t / (4 * sigma0 ** 4 + t ** 2)
        lap = t / (4 * sigma0 ** 4 + t ** 2)
        assert np.isclose(d.grad_phase[0], grad, rtol=1e-4, atol=1e-6)
        assert np.isclose(d.laplacian_phase, lap, rtol=1e-4, atol=1e-6)

    def test_outside_grid_errors(self):
        pilot, g = self.make_free_pilot()
        with pytest.raises(ValueError):
            evaluate(pilot, 0.1, 25.0)

    def test_rescaling_leaves_velocity_invariant(self):
        g = make_grid(1, 512, [40.0])
        base = gaussian_field(g, 1.0, momentum=[0.7])
        lam = 0.031 - 2.4j
        p1 = NumericField(base, free_potential(), constants=NAT)
        p2 = NumericField(ComplexField(g, lam * base.values), free_potential(),
                          constants=NAT)
        t, x = 0.8, 0.5
        v1 = guidance_velocity(p1, t, x)
        v2 = guidance_velocity(p2, t, x)
        assert np.isclose(v1[0], v2[0], rtol=1e-12)


class TestGridFields:
    def test_matches_pointwise_accessors(self):
        g = make_grid(1, 256, [16.0])
        x = g.meshgrid()[0]
        spec = EigenstateSuperposition(terms=[(0, 0.7), (1, 0.7)], omega=1.0)
        fields = pilot_grid_fields(spec, g, 0.37)
        i = 180
        d = phase_data(spec, 0.37, float(x[i]))
        assert np.isclose(fields.grad_phase[0][i], d.grad_phase[0], rtol=1e-10)
        assert np.isclose(fields.lap_phase[i], d.laplacian_phase, rtol=1e-10)


class TestSerialization:
    @pytest.mark.parametrize("spec", [
        PlaneWave(k=[1.0, -0.5]),
        CoherentState(omega=2.0, amplitude=[1.0], phase_offsets=[0.3]),
        EigenstateSuperposition(terms=[(0, 0.6), (3, 0.8j)], omega=1.5),
    ])
    def test_round_trip(self, spec):
        back = pilot_from_dict(pilot_to_dict(spec), constants=spec.constants)
        assert type(back) is type(spec)
        xs = np.linspace(-1, 1, 7)
        if spec.dims == 1:
            assert np.allclose(evaluate(back, 0.21, xs), evaluate(spec, 0.21, xs))
