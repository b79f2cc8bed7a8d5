import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xrgate.motion_filter import (
    FilterConfig,
    FilterState,
    evaluate,
    step,
)


def executable_oracle(p, prev_p, theta, prev_theta, phi, prev_phi, config):
    """Independent restatement of the four-layer rule for cross-checking."""
    d = math.sqrt(sum((a - b) ** 2 for a, b in zip(p, prev_p)))
    layer1 = d >= config.min_move
    layer2 = d >= config.ik_min_move
    layer3 = max(abs(a - b) for a, b in zip(theta, prev_theta)) <= config.max_raw_jump
    layer4 = max(abs(a - b) for a, b in zip(phi, prev_phi)) <= config.max_ik_jump
    return layer1 and layer2 and layer3 and layer4


def seeded_state(position=(0.0, 0.0, 0.0), angles=(0.0, 0.0, 0.0)):
    return FilterState(
        position=position, raw_angles=angles, ik_angles=angles, initialized=True
    )


def test_stationary_frame_is_rejected_by_the_deadband():
    config = FilterConfig(min_move=0.002, ik_min_move=0.002)
    decision = evaluate((0.0, 0.0, 0.0), (0, 0, 0), (0, 0, 0), seeded_state(), config)
    assert decision.layers[0] is False
    assert decision.executable is False
    assert decision.distance == 0.0


def test_all_layers_passing_makes_the_frame_executable():
    config = FilterConfig(0.002, 0.002, 0.1, 0.1)
    decision = evaluate(
        (0.01, 0.0, 0.0), (0.05, 0, 0), (0.05, 0, 0), seeded_state(), config
    )
    assert decision.layers == (True, True, True, True)
    assert decision.executable is True
    assert decision.distance == pytest.approx(0.01)


def test_raw_jump_rejects_regardless_of_other_layers():
    config = FilterConfig(0.002, 0.002, 0.1, 0.1)
    decision = evaluate(
        (0.01, 0.0, 0.0), (0.5, 0, 0), (0.05, 0, 0), seeded_state(), config
    )
    assert decision.layers[2] is False
    assert decision.executable is False


def test_layer_results_are_recorded_individually():
    config = FilterConfig(0.002, 0.005, 0.1, 0.1)
    decision = evaluate(
        (0.003, 0.0, 0.0), (0.0, 0, 0), (0.5, 0, 0), seeded_state(), config
    )
    assert decision.layers == (True, False, True, False)
    assert decision.executable is False


def test_executable_equals_conjunction_on_10k_random_instances(rng):
    mismatches = 0
    for _ in range(10_000):
        m = int(rng.integers(1, 8))
        prev_p = tuple(rng.uniform(-1, 1, 3))
        prev_angles = tuple(rng.uniform(-3, 3, m))
        prev_phi = tuple(rng.uniform(-3, 3, m))
        state = FilterState(prev_p, prev_angles, prev_phi, initialized=True)
        config = FilterConfig(
            min_move=float(rng.uniform(0, 0.05)),
            ik_min_move=float(rng.uniform(0, 0.05)),
            max_raw_jump=float(rng.uniform(0, 0.5)),
            max_ik_jump=float(rng.uniform(0, 0.5)),
        )
        p = tuple(prev_p[i] + rng.uniform(-0.05, 0.05) for i in range(3))
        theta = tuple(prev_angles[i] + rng.uniform(-0.6, 0.6) for i in range(m))
        phi = tuple(prev_phi[i] + rng.uniform(-0.6, 0.6) for i in range(m))
        decision = evaluate(p, theta, phi, state, config)
        expected = executable_oracle(p, prev_p, theta, prev_angles, phi, prev_phi, config)
        if decision.executable != expected:
            mismatches += 1
        assert decision.executable == all(decision.layers)
    assert mismatches == 0


@settings(max_examples=300, deadline=None)
@given(
    data=st.data(),
    m=st.integers(min_value=1, max_value=6),
)
def test_oracle_equivalence_property(data, m):
    finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
    threshold = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
    prev_p = data.draw(st.tuples(finite, finite, finite))
    p = data.draw(st.tuples(finite, finite, finite))
    prev_theta = tuple(data.draw(finite) for _ in range(m))
    theta = tuple(data.draw(finite) for _ in range(m))
    prev_phi = tuple(data.draw(finite) for _ in range(m))
    phi = tuple(data.draw(finite) for _ in range(m))
    config = FilterConfig(
        data.draw(threshold), data.draw(threshold), data.draw(threshold), data.draw(threshold)
    )
    state = FilterState(prev_p, prev_theta, prev_phi, initialized=True)
    decision = evaluate(p, theta, phi, state, config)
    assert decision.executable == executable_oracle(
        p, prev_p, theta, prev_theta, phi, prev_phi, config
    )


def test_threshold_monotonicity(rng):
    # Raising the jump limits can only accept more; raising the deadbands
    # can only reject more.
    for _ in range(500):
        state = seeded_state(angles=tuple(rng.uniform(-1, 1, 4)))
        p = tuple(rng.uniform(-0.03, 0.03, 3))
        theta = tuple(rng.uniform(-1.2, 1.2, 4))
        phi = tuple(rng.uniform(-1.2, 1.2, 4))
        base = evaluate(p, theta, phi, state, FilterConfig(0.002, 0.002, 0.15, 0.15))
        looser_jumps = evaluate(p, theta, phi, state, FilterConfig(0.002, 0.002, 0.3, 0.3))
        higher_deadband = evaluate(p, theta, phi, state, FilterConfig(0.01, 0.01, 0.15, 0.15))
        if base.executable:
            assert looser_jumps.executable
        if higher_deadband.executable:
            assert base.executable


def test_deadband_pair_is_invariant_under_threshold_swap(rng):
    for _ in range(500):
        state = seeded_state()
        p = tuple(rng.uniform(-0.01, 0.01, 3))
        config = FilterConfig(0.002, 0.006, 0.15, 0.15)
        swapped = FilterConfig(0.006, 0.002, 0.15, 0.15)
        a = evaluate(p, (0, 0), (0, 0), seeded_state(angles=(0, 0)), config)
        b = evaluate(p, (0, 0), (0, 0), seeded_state(angles=(0, 0)), swapped)
        assert a.executable == b.executable
        # The pair acts as a single deadband at max(min_move, ik_min_move).
        d = math.dist(p, (0.0, 0.0, 0.0))
        assert a.executable == (d >= 0.006)


def test_evaluate_requires_initialized_state():
    with pytest.raises(ValueError):
        evaluate((0, 0, 0), (0,), (0,), FilterState.empty(), FilterConfig())


def test_dimension_mismatch_names_expected_and_actual():
    state = seeded_state(angles=(0.0, 0.0, 0.0))
    with pytest.raises(ValueError) as excinfo:
        evaluate((0, 0, 0), (0.0, 0.0), (0.0, 0.0, 0.0), state, FilterConfig())
    assert "expected 3" in str(excinfo.value)
    assert "raw=2" in str(excinfo.value)


def test_non_finite_input_is_rejected_not_raised():
    state = seeded_state()
    decision = evaluate((math.nan, 0, 0), (0, 0, 0), (0, 0, 0), state, FilterConfig())
    assert decision.executable is False
    assert decision.reason == "non-finite"
    assert decision.layers == (False, False, False, False)


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        FilterConfig(min_move=-0.001)


class TestStep:
    def test_first_frame_bootstraps_without_command(self):
        result = step((0.1, 0, 0), (0.2, 0.3), (0.2, 0.3), FilterState.empty(), FilterConfig())
        assert result.command is None
        assert result.decision.reason == "bootstrap"
        assert result.state.initialized
        assert result.state.position == (0.1, 0.0, 0.0)

    def test_slow_drift_accumulates_to_the_deadband(self):
        # 0.5 mm per frame against a 2 mm deadband: frames 2-4 rejected,
        # frame 5 has accumulated 2.0 mm against the held reference.
        config = FilterConfig(min_move=0.002, ik_min_move=0.002)
        state = FilterState.empty()
        emitted_at = []
        for k in range(5):
            x = k * 0.0005
            decision, state, command = step((x, 0, 0), (0.0,), (0.0,), state, config)
            if command is not None:
                emitted_at.append(k)
        assert emitted_at == [4]

    def test_teleport_rejected_then_smooth_frame_accepted(self):
        config = FilterConfig(0.002, 0.002, 0.15, 0.15)
        state = FilterState.empty()
        _, state, _ = step((0.0, 0, 0), (0.0,), (0.0,), state, config)
        # Teleport: huge IK step.
        decision, state, command = step((1.0, 0, 0), (0.1,), (2.0,), state, config)
        assert command is None
        assert decision.layers[3] is False
        assert state.position == (0.0, 0.0, 0.0)
        # Next frame smooth relative to the *last accepted* reference.
        decision, state, command = step((0.01, 0, 0), (0.05,), (0.05,), state, config)
        assert command == (0.05,)
        assert decision.executable

    def test_stationary_stream_emits_nothing_after_bootstrap(self):
        config = FilterConfig()
        state = FilterState.empty()
        commands = []
        for _ in range(600):
            _, state, command = step((0.3, 0.2, 0.1), (0.5, 0.5), (0.5, 0.5), state, config)
            if command is not None:
                commands.append(command)
        assert commands == []

    def test_step_is_deterministic(self, rng):
        config = FilterConfig()
        inputs = [
            (tuple(rng.uniform(-1, 1, 3)), tuple(rng.uniform(-1, 1, 2)), tuple(rng.uniform(-1, 1, 2)))
            for _ in range(200)
        ]

        def run():
            state = FilterState.empty()
            out = []
            for p, theta, phi in inputs:
                decision, state, command = step(p, theta, phi, state, config)
                out.append((decision, command))
            return out

        assert run() == run()

    def test_rejected_frames_hold_references(self):
        config = FilterConfig(min_move=0.01, ik_min_move=0.01)
        state = FilterState.empty()
        _, state, _ = step((0.0, 0, 0), (0.0,), (0.0,), state, config)
        _, held, _ = step((0.001, 0, 0), (0.0,), (0.0,), state, config)
        assert held is state
