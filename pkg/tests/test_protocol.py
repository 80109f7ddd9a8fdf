import numpy as np
import pytest

from epsim import (
    AncillaSpec,
    CapacityError,
    DensityOperator,
    GridError,
    ModeDescriptor,
    ModeLayout,
    ProtocolConfig,
    PureState,
    StateValidationError,
    coherent_coefficients,
    equal_different_measurement,
    hiding_operation,
    layout_of,
    mode_overlap_integral,
    occupation_cnot,
    particle_entanglement,
    phase_grid_register_state,
    phase_rotated_ancilla,
    reference_phase_shift,
    register_sector_weights,
    run_transfer,
    sector_decompose,
    tensor_product,
    trace_distance,
    transfer_entanglement,
    truncated_phase_state,
    two_mode_ancilla_state,
)
from conftest import random_two_site_state, shared_double, shared_single


def register_layout_single():
    return ModeLayout((ModeDescriptor("reg_a", "A", "register", 1),
                       ModeDescriptor("reg_b", "B", "register", 1)))


def register_layout_double():
    return ModeLayout((ModeDescriptor("reg_a1", "A", "register", 1),
                       ModeDescriptor("reg_a2", "A", "register", 1),
                       ModeDescriptor("reg_b1", "B", "register", 1),
                       ModeDescriptor("reg_b2", "B", "register", 1)))


def expected_single_register_mixture():
    layout = register_layout_single()
    return DensityOperator.from_mixture([
        (0.5, PureState.basis_state(layout, (1, 0))),
        (0.5, PureState.basis_state(layout, (0, 1))),
    ])


def expected_double_register_mixture():
    layout = register_layout_double()
    bell = PureState(layout, {(1, 0, 0, 1): 2 ** -0.5, (0, 1, 1, 0): 2 ** -0.5})
    return DensityOperator.from_mixture([
        (0.25, PureState.basis_state(layout, (1, 1, 0, 0))),
        (0.25, PureState.basis_state(layout, (0, 0, 1, 1))),
        (0.5, bell),
    ])


def mixture_from_sectors(state, config):
    """Independent route to the register output: map each local-number
    sector of the input onto register labels and mix with its weight."""
    layout = state.layout
    reg_modes = config.register_modes()
    reg_layout = ModeLayout(tuple(reg_modes))
    field_order = [f.id for site in ("A", "B") for f in config.field_modes(site)]
    positions = [layout.index(fid) for fid in field_order]
    ensemble = []
    for sector in sector_decompose(state).sectors:
        amps = {tuple(label[p] for p in positions): amp
                for label, amp in sector.state.amplitudes.items()}
        ensemble.append((sector.probability, PureState(reg_layout, amps)))
    return DensityOperator.from_mixture(ensemble)


class TestTruncatedPhaseState:
    def test_m1_theta0(self):
        state = truncated_phase_state(1, 0.0)
        assert state.amplitudes[(0,)] == pytest.approx(2 ** -0.5)
        assert state.amplitudes[(1,)] == pytest.approx(2 ** -0.5)

    def test_normalized(self, rng):
        for m, theta in [(5, 0.3), (16, 2.0), (33, -1.2)]:
            assert truncated_phase_state(m, theta).norm() == pytest.approx(1.0, abs=1e-12)

    def test_overlap_matches_geometric_sum(self):
        m = 9
        theta, theta2 = 0.7, 2.4
        a = truncated_phase_state(m, theta)
        b = truncated_phase_state(m, theta2)
        direct = a.overlap(b)
        closed = sum(np.exp(1j * (m - n) * (theta - theta2)) for n in range(m + 1)) / (m + 1)
        assert direct == pytest.approx(closed, abs=1e-12)


class TestPhaseRotatedAncilla:
    def test_theta_zero_reproduces_coefficients(self):
        spec = coherent_coefficients(4.0, 25)
        state = phase_rotated_ancilla(spec, 0.0)
        for n in range(21):
            expected = spec.coefficients[n]
            if abs(expected) > 0:
                assert state.amplitudes[(n,)] == pytest.approx(expected)

    def test_normalized_any_theta(self):
        spec = coherent_coefficients(4.0, 25)
        for theta in (0.1, 1.0, 5.5):
            assert phase_rotated_ancilla(spec, theta).norm() == pytest.approx(1.0, abs=1e-12)

    def test_mean_theta_independent(self):
        spec = coherent_coefficients(4.0, 25)
        base = spec.mean
        for theta in (0.3, 2.1):
            state = phase_rotated_ancilla(spec, theta)
            mean = sum(n * abs(a) ** 2 for (n,), a in state.amplitudes.items())
            assert mean == pytest.approx(base, abs=1e-12)


class TestCoherentCoefficients:
    def test_vacuum_limit(self):
        spec = coherent_coefficients(0.0, 4)
        assert spec.coefficients[0] == pytest.approx(1.0)
        assert np.allclose(spec.coefficients[1:], 0.0)

    def test_normalized(self):
        spec = coherent_coefficients(25.0, 75)
        assert np.linalg.norm(spec.coefficients) == pytest.approx(1.0, abs=1e-12)

    def test_mean_close_to_nbar(self):
        spec = coherent_coefficients(25.0, 75)
        assert abs(spec.mean - 25.0) / 25.0 < 0.01

    def test_negative_nbar_rejected(self):
        with pytest.raises(ValueError):
            coherent_coefficients(-1.0, 10)

    def test_small_truncation_warns(self):
        with pytest.warns(UserWarning):
            coherent_coefficients(25.0, 30)


class TestTwoModeAncilla:
    def test_single_coefficient(self):
        spec = AncillaSpec(3, [1.0, 0.0, 0.0, 0.0])
        state = two_mode_ancilla_state(spec)
        assert state.amplitudes == {(3, 0): pytest.approx(1.0)}

    def test_total_number_constant(self):
        spec = coherent_coefficients(1.0, 12)
        state = two_mode_ancilla_state(spec)
        for label in state.amplitudes:
            assert sum(label) == 12

    def test_matches_phase_integral_quadrature(self):
        # sqrt(M+1)/K * sum_j |psi(theta_j)> |c(theta_j)> over a uniform grid
        # reproduces sum_n c_n |M-n, n> once the grid resolves the bandwidth.
        spec = coherent_coefficients(1.5, 14)
        m = spec.M
        k = 2 * m + 3
        acc = np.zeros((m + 1, m + 1), dtype=complex)
        for j in range(k):
            theta = 2 * np.pi * j / k
            psi = np.exp(-1j * (m - np.arange(m + 1)) * theta) / np.sqrt(m + 1)
            c = spec.coefficients * np.exp(1j * np.arange(m + 1) * theta)
            acc += np.outer(psi, c)
        acc *= np.sqrt(m + 1) / k
        state = two_mode_ancilla_state(spec)
        for (sink, ref), amp in state.amplitudes.items():
            assert acc[sink, ref] == pytest.approx(amp, abs=1e-10)
            acc[sink, ref] = 0.0
        assert np.max(np.abs(acc)) < 1e-10


class TestOccupationCnot:
    def layout(self):
        return layout_of(ModeDescriptor("f", "A", "field", 1),
                         ModeDescriptor("r", "A", "register", 1))

    def test_copies_occupation(self):
        state = PureState(self.layout(), {(1, 0): 1.0})
        out = occupation_cnot(state, "f", "r")
        assert out.amplitudes == {(1, 1): pytest.approx(1.0)}

    def test_vacuum_fixed(self):
        state = PureState(self.layout(), {(0, 0): 1.0})
        out = occupation_cnot(state, "f", "r")
        assert out.amplitudes == {(0, 0): pytest.approx(1.0)}

    def test_on_shared_pair(self):
        reg = ModeDescriptor("reg_a", "A", "register", 1)
        state = tensor_product(shared_single(),
                               PureState.basis_state(layout_of(reg), (0,)))
        out = occupation_cnot(state, "a", "reg_a")
        assert out.amplitudes[(1, 0, 1)] == pytest.approx(2 ** -0.5)
        assert out.amplitudes[(0, 1, 0)] == pytest.approx(2 ** -0.5)

    def test_capacity_violation(self):
        layout = layout_of(ModeDescriptor("f", "A", "field", 2),
                           ModeDescriptor("r", "A", "register", 1))
        state = PureState(layout, {(2, 0): 1.0})
        with pytest.raises(CapacityError):
            occupation_cnot(state, "f", "r")


class TestHidingOperation:
    def layout(self, sink_cap=8):
        return layout_of(ModeDescriptor("sink", "A", "field", sink_cap),
                         ModeDescriptor("src", "A", "field", 2),
                         ModeDescriptor("reg", "A", "register", 2))

    def test_moves_source_onto_sink(self):
        state = PureState(self.layout(), {(2, 1, 1): 1.0})
        out = hiding_operation(state, "reg", "src", "sink")
        assert out.amplitudes == {(3, 0, 1): pytest.approx(1.0)}

    def test_control_zero_is_identity(self):
        state = PureState(self.layout(), {(2, 1, 0): 1.0})
        out = hiding_operation(state, "reg", "src", "sink")
        assert out.amplitudes == {(2, 1, 0): pytest.approx(1.0)}

    def test_norm_preserved_on_superpositions(self):
        state = PureState(self.layout(), {(2, 1, 1): 0.6, (1, 2, 2): 0.8})
        out = hiding_operation(state, "reg", "src", "sink")
        assert out.norm() == pytest.approx(1.0, abs=1e-12)
        assert out.amplitudes[(3, 0, 1)] == pytest.approx(0.6)
        assert out.amplitudes[(3, 0, 2)] == pytest.approx(0.8)

    def test_sink_overflow(self):
        state = PureState(self.layout(sink_cap=2), {(2, 1, 1): 1.0})
        with pytest.raises(CapacityError):
            hiding_operation(state, "reg", "src", "sink")

    def test_collision_rejected(self):
        # (x=3, y=0) and (x=2, y=1) both map to (3, 0) under control 1.
        state = PureState(self.layout(), {(3, 0, 1): 0.6, (2, 1, 1): 0.8})
        with pytest.raises(StateValidationError):
            hiding_operation(state, "reg", "src", "sink")


class TestRunTransfer:
    def test_single_particle_mixture(self):
        config = ProtocolConfig(shared_single(), AncillaSpec.uniform(16),
                                AncillaSpec.uniform(16))
        rho = run_transfer(config)
        assert trace_distance(rho, expected_single_register_mixture()) < 1e-12

    def test_two_copy_mixture(self):
        config = ProtocolConfig(shared_double(), AncillaSpec.uniform(8),
                                AncillaSpec.uniform(8))
        rho = run_transfer(config)
        assert trace_distance(rho, expected_double_register_mixture()) < 1e-12

    def test_random_states_match_sector_mixture(self):
        for seed in range(5):
            rng = np.random.RandomState(4000 + seed)
            state = random_two_site_state(rng, 2)
            config = ProtocolConfig(state, AncillaSpec.uniform(8),
                                    AncillaSpec.uniform(8))
            rho = run_transfer(config)
            oracle = mixture_from_sectors(state, config)
            assert trace_distance(rho, oracle) < 1e-10

    def test_sector_weights_match_input(self):
        state = shared_double()
        config = ProtocolConfig(state, AncillaSpec.uniform(8), AncillaSpec.uniform(8))
        weights = register_sector_weights(run_transfer(config))
        probs = sector_decompose(state).probabilities()
        assert set(weights) == set(probs)
        for n, w in weights.items():
            assert w == pytest.approx(probs[n], abs=1e-10)

    def test_transfer_entanglement_equals_particle_entanglement(self):
        for seed in range(5):
            rng = np.random.RandomState(5000 + seed)
            state = random_two_site_state(rng, 2)
            config = ProtocolConfig(state, AncillaSpec.uniform(8),
                                    AncillaSpec.uniform(8))
            assert transfer_entanglement(run_transfer(config)) == pytest.approx(
                particle_entanglement(state), abs=1e-9)

    def test_headroom_too_small(self):
        with pytest.raises(CapacityError):
            ProtocolConfig(shared_double(), AncillaSpec.uniform(8),
                           AncillaSpec.uniform(8), sink_headroom=1)

    def test_protocol_empties_field_modes(self):
        from epsim import transfer_final_state

        config = ProtocolConfig(shared_double(), AncillaSpec.uniform(8),
                                AncillaSpec.uniform(8))
        final = transfer_final_state(config)
        field_idx = [final.layout.index(mid) for mid in ("a1", "b1", "a2", "b2")]
        for label in final.amplitudes:
            assert all(label[i] == 0 for i in field_idx)


class TestModeOverlapIntegral:
    def test_k_zero(self):
        spec = coherent_coefficients(4.0, 25)
        assert mode_overlap_integral(0, spec, 0.7) == pytest.approx(1.0 / 26)

    def test_closed_form(self):
        spec = coherent_coefficients(4.0, 25)
        theta = 1.3
        for k in (1, 2, 3):
            weight = float(np.sum(np.abs(spec.coefficients[k:]) ** 2))
            expected = weight / 26 * np.exp(1j * k * theta)
            assert mode_overlap_integral(k, spec, theta) == pytest.approx(expected, abs=1e-14)

    def test_matches_quadrature(self):
        from oracles import overlap_integral_quadrature
        spec = coherent_coefficients(6.0, 32)
        theta = 0.9
        for k in (0, 1, 2):
            oracle = overlap_integral_quadrature(k, spec, theta)
            assert mode_overlap_integral(k, spec, theta) == pytest.approx(oracle, abs=1e-9)

    def test_k_beyond_truncation(self):
        spec = AncillaSpec.uniform(4)
        with pytest.warns(UserWarning):
            value = mode_overlap_integral(7, spec, 0.2)
        assert value == 0.0


class TestPhaseGridRegisterState:
    def config(self, m):
        return ProtocolConfig(shared_single(), AncillaSpec.uniform(m),
                              AncillaSpec.uniform(m))

    def test_single_particle_bound(self):
        m = 32
        rho_grid = phase_grid_register_state(self.config(m), 2 * m + 3)
        exact = run_transfer(self.config(m))
        assert trace_distance(rho_grid, exact) <= 3.0 / (m + 1)

    def test_distance_strictly_decreasing(self):
        distances = []
        for m in (8, 16, 32):
            rho_grid = phase_grid_register_state(self.config(m), 2 * m + 3)
            exact = run_transfer(self.config(m))
            distances.append(trace_distance(rho_grid, exact))
        assert distances[0] > distances[1] > distances[2]
        for m, d in zip((8, 16, 32), distances):
            assert d <= 3.0 / (m + 1)

    def test_converges_for_large_truncation(self):
        m = 64
        rho_grid = phase_grid_register_state(self.config(m), 2 * m + 3)
        exact = run_transfer(self.config(m))
        assert trace_distance(rho_grid, exact) < 0.05

    def test_boundary_weight_in_trace(self):
        m = 16
        rho_grid = phase_grid_register_state(self.config(m), 2 * m + 3)
        assert rho_grid.trace() == pytest.approx(1.0 + 2.0 / (m + 1), abs=1e-10)

    def test_grid_too_small(self):
        with pytest.raises(GridError):
            phase_grid_register_state(self.config(8), 10)

    def test_two_copy_within_bound(self):
        m = 16
        config = ProtocolConfig(shared_double(), AncillaSpec.uniform(m),
                                AncillaSpec.uniform(m))
        rho_grid = phase_grid_register_state(config, 2 * m + 3)
        exact = run_transfer(config)
        assert trace_distance(rho_grid, exact) <= 3.0 / (m + 1)

    def test_matches_pointwise_oracle(self):
        # Independent per-point reconstruction with the real hiding gate.
        from oracles import phase_grid_oracle

        m = 8
        for state in (shared_single(), shared_double()):
            config = ProtocolConfig(state, AncillaSpec.uniform(m),
                                    AncillaSpec.uniform(m))
            rho_grid = phase_grid_register_state(config, 2 * m + 3)
            labels, mat = phase_grid_oracle(config, 2 * m + 3)
            assert labels == rho_grid.basis
            np.testing.assert_allclose(mat, rho_grid.matrix, atol=1e-12)


class TestEqualDifferentMeasurement:
    def test_two_copy_outcomes(self):
        rho = expected_double_register_mixture()
        outcomes = equal_different_measurement(rho)
        assert len(outcomes) == 2
        by_kind = {(o.outcome_a, o.outcome_b): o for o in outcomes}
        eq = by_kind[("equal", "equal")]
        diff = by_kind[("different", "different")]
        assert eq.probability == pytest.approx(0.5, abs=1e-12)
        assert diff.probability == pytest.approx(0.5, abs=1e-12)
        assert eq.entanglement == pytest.approx(0.0, abs=1e-10)
        assert diff.entanglement == pytest.approx(1.0, abs=1e-10)
        average = sum(o.probability * o.entanglement for o in outcomes)
        assert average == pytest.approx(0.5, abs=1e-10)

    def test_product_register_state(self):
        layout = register_layout_double()
        rho = DensityOperator.from_pure(PureState.basis_state(layout, (0, 0, 0, 0)))
        outcomes = equal_different_measurement(rho)
        assert len(outcomes) == 1
        assert outcomes[0].probability == pytest.approx(1.0)
        assert outcomes[0].entanglement == pytest.approx(0.0)

    def test_wrong_register_count(self):
        rho = expected_single_register_mixture()
        with pytest.raises(Exception):
            equal_different_measurement(rho)


class TestReferencePhaseShift:
    def test_invariant_subspace_projector(self):
        layout = register_layout_double()
        bell = PureState(layout, {(1, 0, 0, 1): 2 ** -0.5, (0, 1, 1, 0): 2 ** -0.5})
        rho = DensityOperator.from_pure(bell)
        shifted = reference_phase_shift(rho, 0.8, -1.7)
        assert trace_distance(shifted, rho) < 1e-12

    def test_transfer_outputs_invariant(self):
        config = ProtocolConfig(shared_double(), AncillaSpec.uniform(8),
                                AncillaSpec.uniform(8))
        rho = run_transfer(config)
        for theta in np.linspace(0, 2 * np.pi, 5, endpoint=False):
            for phi in np.linspace(0, 2 * np.pi, 5, endpoint=False):
                shifted = reference_phase_shift(rho, theta, phi)
                assert trace_distance(shifted, rho) < 1e-12

    def test_zero_angles_identity(self):
        rho = expected_single_register_mixture()
        shifted = reference_phase_shift(rho, 0.0, 0.0)
        np.testing.assert_allclose(shifted.matrix, rho.matrix, atol=1e-15)
