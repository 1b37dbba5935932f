"""Unit tests for the IMEX stepper and the run driver."""

from dataclasses import replace

import numpy as np
import pytest

from src.exceptions import ConfigurationError, DtUnderflow, StepRejected
from src.models.state import ModelParams, VerdictKind
from src.services.discretization import build_grid, face_gradient, integrate
from src.services.stepper import (
    RecordListSink,
    StepperConfig,
    _advance,
    admissible_dt,
    run,
    step,
)
from tests.fixtures.test_data import constant_state, smooth_state


class TestStepperConfig:
    """Test validation of the stepping controls."""

    def test_defaults(self):
        """Test the default controls are accepted."""
        cfg = StepperConfig(horizon=1.0)
        assert cfg.cfl == 0.4
        assert cfg.adaptive is True
        assert cfg.stride == 10

    def test_collects_every_problem(self):
        """Test all invalid controls are reported together."""
        with pytest.raises(ConfigurationError) as excinfo:
            StepperConfig(horizon=1.0, cfl=0.0, growth=1.0)
        problems = excinfo.value.details["problems"]
        assert "cfl must lie in (0, 1]" in problems
        assert "growth must exceed 1" in problems

    def test_dt_bounds_ordered(self):
        """Test dt_min must be below dt_max."""
        with pytest.raises(ConfigurationError):
            StepperConfig(horizon=1.0, dt_min=1e-2, dt_max=1e-3)


class TestAdmissibleDt:
    """Test the step-size bound."""

    def test_flat_signal_uses_dt_max(self, equilibrium_state):
        """Test a constant v leaves only the dt_max cap."""
        cfg = StepperConfig(horizon=1.0, dt_max=5e-3)
        assert admissible_dt(equilibrium_state.grid, equilibrium_state.v, cfg) == 5e-3

    def test_cfl_bound(self, grid5):
        """Test a steep v is limited by the advective CFL number."""
        state = smooth_state(grid5, amplitude=0.5)
        cfg = StepperConfig(horizon=1.0, dt_max=1.0)
        dt = admissible_dt(grid5, state.v, cfg)
        grad_max = float(np.max(np.abs(face_gradient(grid5, state.v))))
        assert dt <= cfg.cfl * grid5.h / grad_max
        assert dt < 1.0


class TestStep:
    """Test a single IMEX step."""

    def test_equilibrium_is_stationary(self, params5, equilibrium_state):
        """Test u = v = w = 1 is preserved to roundoff."""
        cfg = StepperConfig(horizon=1.0)
        new = step(params5, equilibrium_state, cfg)
        for f in (new.u, new.v, new.w):
            assert np.max(np.abs(f.values - 1.0)) <= 1e-12
        assert new.t == pytest.approx(1e-3)
        assert new.last_dt == pytest.approx(1e-3)
        assert new.dt == pytest.approx(1.1e-3)

    def test_w_mass_after_one_step(self, params5, grid5):
        """Test w solves (1 + dt) w = dt u for u = 2, v = w = 0."""
        dt = 1e-3
        state = constant_state(grid5, 2.0, 0.0, 0.0, dt=dt)
        new = step(params5, state, StepperConfig(horizon=1.0))
        expected = dt * 2.0 * grid5.volume / (1.0 + dt)
        assert integrate(grid5, new.w) == pytest.approx(expected, rel=1e-10)
        assert np.all(new.u.values == 2.0)
        assert np.all(new.v.values == 0.0)

    def test_mass_and_positivity(self, params5, grid5):
        """Test u mass is conserved and u stays nonnegative over several steps."""
        state = smooth_state(grid5, amplitude=0.1, dt=1e-3)
        mass0 = integrate(grid5, state.u)
        cfg = StepperConfig(horizon=1.0)
        for _ in range(20):
            state = step(params5, state, cfg)
            assert np.min(state.u.values) >= 0.0
        assert abs(integrate(grid5, state.u) - mass0) <= 1e-12 * mass0

    def test_fixed_step_mode(self, params5, equilibrium_state):
        """Test adaptive=False keeps the trial step."""
        cfg = StepperConfig(horizon=1.0, adaptive=False)
        new = step(params5, equilibrium_state, cfg)
        assert new.dt == equilibrium_state.dt

    def test_limit_clips_step(self, params5, equilibrium_state):
        """Test the remaining horizon caps the step."""
        new, _ = _advance(params5, equilibrium_state, StepperConfig(horizon=1.0), limit=2.5e-4)
        assert new.last_dt == 2.5e-4

    def test_underflow(self, params5, equilibrium_state):
        """Test a trial step below dt_min raises DtUnderflow."""
        state = replace(equilibrium_state, dt=1e-4)
        cfg = StepperConfig(horizon=1.0, dt_min=1e-3)
        with pytest.raises(DtUnderflow) as excinfo:
            step(params5, state, cfg)
        assert excinfo.value.dt == 1e-4

    def test_rejection_halves_dt(self, params5, equilibrium_state, mocker):
        """Test a rejected trial is retried with half the step."""
        fields = (equilibrium_state.u, equilibrium_state.v, equilibrium_state.w)
        imex = mocker.patch(
            "src.services.stepper._imex_step",
            side_effect=[StepRejected("Negative u beyond roundoff"), fields],
        )
        new, rejections = _advance(params5, equilibrium_state, StepperConfig(horizon=1.0))
        assert rejections == 1
        assert imex.call_args_list[0].args[2] == 1e-3
        assert imex.call_args_list[1].args[2] == 5e-4
        assert new.last_dt == 5e-4

    def test_repeated_rejection_underflows(self, params5, equilibrium_state, mocker):
        """Test halving stops at dt_min."""
        mocker.patch("src.services.stepper._imex_step",
                     side_effect=StepRejected("Non-finite u after step"))
        cfg = StepperConfig(horizon=1.0, dt_min=1e-5)
        with pytest.raises(DtUnderflow) as excinfo:
            step(params5, equilibrium_state, cfg)
        assert excinfo.value.details["rejections"] == 7


class TestRun:
    """Test the run driver and verdict classification."""

    def test_equilibrium_reaches_horizon(self, params5, grid5):
        """Test the constant state runs to the horizon with a GLOBAL verdict."""
        state = constant_state(grid5, 1.0, 1.0, 1.0, dt=2.0 ** -6)
        cfg = StepperConfig(horizon=0.5, dt_max=0.1, adaptive=False, stride=10)
        sink = RecordListSink()
        verdict = run(params5, state, cfg, sink)

        assert verdict.kind is VerdictKind.GLOBAL_WITHIN_HORIZON
        assert verdict.t_end == 0.5
        assert verdict.evidence["steps_accepted"] == 32
        assert verdict.evidence["steps_rejected"] == 0
        assert verdict.evidence["max_mass_drift"] <= 1e-12

    def test_emission_schedule(self, params5, grid5):
        """Test records are the initial state, every stride-th step and the final state."""
        state = constant_state(grid5, 1.0, 1.0, 1.0, dt=2.0 ** -6)
        cfg = StepperConfig(horizon=0.5, dt_max=0.1, adaptive=False, stride=10)
        sink = RecordListSink()
        run(params5, state, cfg, sink)

        times = [r.t for r in sink.records]
        assert times == [0.0, 10 / 64, 20 / 64, 30 / 64, 0.5]

    def test_final_step_on_stride(self, params5, grid5):
        """Test the final state is not written twice."""
        state = constant_state(grid5, 1.0, 1.0, 1.0, dt=2.0 ** -6)
        cfg = StepperConfig(horizon=0.5, dt_max=0.1, adaptive=False, stride=8)
        sink = RecordListSink()
        run(params5, state, cfg, sink)
        assert len(sink.records) == 5

    def test_dt_initial_override(self, params5, grid5):
        """Test dt_initial replaces the state's trial step."""
        state = constant_state(grid5, 1.0, 1.0, 1.0, dt=1e-3)
        cfg = StepperConfig(horizon=0.5, dt_max=0.1, adaptive=False, dt_initial=2.0 ** -6)
        verdict = run(params5, state, cfg, RecordListSink())
        assert verdict.evidence["steps_accepted"] == 32

    def test_underflow_after_escalation_is_blowup(self, params5, equilibrium_state, mocker):
        """Test an underflow after sup u grew by blowup_factor is BlowupIndicated."""
        grid = equilibrium_state.grid
        escalated = replace(constant_state(grid, 1e7, 1.0, 1.0, t=1e-3, dt=1e-3), last_dt=1e-3)
        mocker.patch(
            "src.services.stepper._advance",
            side_effect=[(escalated, 0), DtUnderflow("Admissible step fell below dt_min", dt=1e-13)],
        )
        verdict = run(params5, equilibrium_state, StepperConfig(horizon=1.0), RecordListSink())

        assert verdict.kind is VerdictKind.BLOWUP_INDICATED
        assert verdict.sup_u_end == 1e7
        assert verdict.evidence["dt_final"] == 1e-13

    def test_underflow_without_escalation_is_inconclusive(self, params5, equilibrium_state, mocker):
        """Test an underflow at bounded sup u is Inconclusive."""
        mocker.patch(
            "src.services.stepper._advance",
            side_effect=DtUnderflow("Admissible step fell below dt_min", dt=1e-13),
        )
        sink = RecordListSink()
        verdict = run(params5, equilibrium_state, StepperConfig(horizon=1.0), sink)

        assert verdict.kind is VerdictKind.INCONCLUSIVE
        assert verdict.t_end == 0.0
        assert len(sink.records) == 1

    def test_energy_decreases(self, params5):
        """Test F decreases along a smooth run."""
        grid = build_grid(5, 1.0, 128)
        state = smooth_state(grid, amplitude=0.1, dt=2.5e-3)
        cfg = StepperConfig(horizon=0.05, adaptive=False)
        verdict = run(params5, state, cfg, RecordListSink())
        assert verdict.evidence["F_final"] < verdict.evidence["F_initial"]


class TestConvergence:
    """Test first-order convergence in time."""

    def test_energy_step_doubling(self, params5):
        """Test terminal energy differences halve with the step."""
        grid = build_grid(5, 1.0, 128)
        horizon = 0.05
        finals = []
        for divisions in (20, 40, 80):
            state = smooth_state(grid, amplitude=0.1, dt=horizon / divisions)
            cfg = StepperConfig(horizon=horizon, adaptive=False, stride=1000)
            finals.append(run(params5, state, cfg, RecordListSink()).evidence["F_final"])

        ratio = (finals[0] - finals[1]) / (finals[1] - finals[2])
        assert 1.7 <= ratio <= 2.3

    def test_identity_residual_step_doubling(self, params5):
        """Test the summed |dF + dt D| residual halves with the step."""
        grid = build_grid(5, 1.0, 128)
        horizon = 0.05
        sums = []
        for divisions in (20, 40, 80):
            state = smooth_state(grid, amplitude=0.1, dt=horizon / divisions)
            cfg = StepperConfig(horizon=horizon, adaptive=False, stride=1000)
            verdict = run(params5, state, cfg, RecordListSink())
            sums.append(verdict.evidence["sum_identity_residual"])

        assert sums[2] > 0.0
        assert 1.7 <= sums[0] / sums[1] <= 2.3
        assert 1.7 <= sums[1] / sums[2] <= 2.3

    def test_w_mass_error_is_first_order(self, params5, grid5):
        """Test the w mass error against e^{-t} halves with the step."""
        errors = []
        for dt in (2e-3, 1e-3):
            state = constant_state(grid5, 2.0, 1.0, 0.0, dt=dt)
            cfg = StepperConfig(horizon=0.5, adaptive=False, stride=1000)
            errors.append(run(params5, state, cfg, RecordListSink()).evidence["max_w_mass_error"])

        assert errors[1] > 0.0
        assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.05)

    def test_elliptic_w_tracks_u(self, grid5):
        """Test tau = eps = 0 sets w equal to u after each step."""
        params = ModelParams(dim=5, radius=1.0, tau=0, eps=0)
        state = smooth_state(grid5, amplitude=0.1, dt=1e-3)
        new = step(params, state, StepperConfig(horizon=1.0))
        assert np.array_equal(new.w.values, new.u.values)
