import numpy as np
import pytest

from reachcost.arm import ArmModel, State, forward_dynamics, reference_arm
from reachcost.features import Trajectory


@pytest.fixture(scope="session")
def model() -> ArmModel:
    return reference_arm()


def random_config(rng: np.random.Generator, model: ArmModel):
    """A random in-bounds configuration with moderate velocity and torque."""
    q = np.array([
        rng.uniform(model.q_min[0] + 0.05, model.q_max[0] - 0.05),
        rng.uniform(model.q_min[1] + 0.05, model.q_max[1] - 0.05),
    ])
    v = rng.uniform(-4.0, 4.0, size=2)
    tau = rng.uniform(-15.0, 15.0, size=2)
    return q, v, tau


def random_trajectory(rng: np.random.Generator, model: ArmModel,
                      T: int = 12, dt: float = 0.02) -> Trajectory:
    """Roll random bounded torques forward from a random interior start."""
    q = np.array([rng.uniform(0.4, 1.2), rng.uniform(0.8, 1.6)])
    v = np.zeros(2)
    states = [np.concatenate([q, v])]
    controls = rng.uniform(-6.0, 6.0, size=(T, 2))
    for t in range(T):
        a = forward_dynamics(model, q, v, controls[t])
        v = v + a * dt
        q = q + v * dt
        states.append(np.concatenate([q, v]))
    return Trajectory(dt=dt, states=np.asarray(states), controls=controls)
