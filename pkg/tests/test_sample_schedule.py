import math

import numpy as np
import pytest

from zulf_engine.core.sample_schedule import (ErrorModel, SimulationBudget, schedule,
                                              schedule_for_fmax, shot_count)
from zulf_engine.errors import DomainError


def test_shot_count():
    assert shot_count(0.01) == 10_000
    assert shot_count(0.1) == 100
    assert shot_count(0.3) == 12
    with pytest.raises(DomainError):
        shot_count(1.0)


def test_epsilon_follows_decoherence_then_caps():
    budget = SimulationBudget()
    assert budget.epsilon_at(0.0) == budget.epsilon_max
    assert budget.epsilon_at(1e-3) == pytest.approx(1 - math.exp(-1e-3))
    assert budget.epsilon_at(0.5) == budget.epsilon_max
    assert budget.t_cap == pytest.approx(0.0050125, rel=1e-4)
    with pytest.raises(DomainError):
        budget.epsilon_at(-1.0)


def test_n_scaled_model_tightens_with_cluster_size():
    capped = SimulationBudget(t2=10.0)
    scaled = SimulationBudget(t2=10.0, error_model=ErrorModel.N_SCALED)
    assert scaled.epsilon_at(1e-3, n_spins=4) == pytest.approx(1 - math.exp(-4e-4))
    assert scaled.epsilon_at(1e-3, n_spins=4) > capped.epsilon_at(1e-3, n_spins=4)
    assert scaled.error_model is ErrorModel("n-scaled")


def test_methane_schedule(methane_proton):
    sched = schedule(methane_proton, SimulationBudget())
    assert sched.n_points == 400
    assert sched.timepoints[0] == pytest.approx(1 / 6)
    assert sched.timepoints[-1] == 1.0
    assert np.all(np.diff(sched.timepoints) > 0)
    ratios = sched.timepoints[1:] / sched.timepoints[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)
    assert sched.n_shots == 10_000


def test_single_point_schedule_sits_at_t_max():
    sched = schedule_for_fmax(3.0, SimulationBudget(t_max=2.0, t2=2.0, n_points=1))
    assert sched.timepoints.tolist() == [2.0]


def test_slow_hamiltonian_starts_at_t_max():
    sched = schedule_for_fmax(0.1, SimulationBudget(n_points=5))
    np.testing.assert_allclose(sched.timepoints, 1.0)


def test_empty_hamiltonian_has_no_schedule():
    with pytest.raises(DomainError):
        schedule_for_fmax(0.0, SimulationBudget())


def test_acquisition_window():
    budget = SimulationBudget.acquisition(t2=0.5, t_max_factor=4.0)
    assert budget.t_max == pytest.approx(2.0)
    assert budget.gamma2 == pytest.approx(2.0)
    with pytest.raises(DomainError):
        SimulationBudget.acquisition(t_max_factor=6.0)


@pytest.mark.parametrize("kwargs", [{"t_max": 0.0}, {"t2": -1.0}, {"epsilon_max": 1.0},
                                    {"epsilon_meas": 0.0}, {"n_points": 0}, {"coeff_bits": 0}])
def test_budget_validation(kwargs):
    with pytest.raises(DomainError):
        SimulationBudget(**kwargs)


def test_overrides_skip_none():
    budget = SimulationBudget().with_overrides(t_max=2.0, t2=None)
    assert budget.t_max == 2.0 and budget.t2 == SimulationBudget().t2


def test_t_max_factor_override_follows_the_new_t2():
    budget = SimulationBudget().with_overrides(t2=0.25, t_max_factor=5.0)
    assert budget.t_max == pytest.approx(1.25)
    assert SimulationBudget(t2=2.0).with_overrides(t_max_factor=3.0).t_max == pytest.approx(6.0)
    with pytest.raises(DomainError):
        SimulationBudget().with_overrides(t_max=2.0, t_max_factor=3.0)
    with pytest.raises(DomainError):
        SimulationBudget().with_overrides(t_max_factor=2.5)
