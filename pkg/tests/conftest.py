import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "det",
    derandomize=True,
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("det")


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Compile the event kernel once so timed tests measure steady state."""
    from ftasep.dynamics import SimState, StopRule, run_until
    from ftasep.lattice import Configuration
    from ftasep.rng import RngStream

    state = SimState(Configuration.ring("110100"))
    run_until(state, StopRule(max_events=5), RngStream(0, 0))
    seg = SimState(Configuration.segment("110100"), exit_right=True)
    run_until(seg, StopRule(max_events=5), RngStream(0, 1))


def random_ring(rng: np.random.Generator, L: int):
    from ftasep.lattice import Configuration

    occ = rng.integers(0, 2, L).astype(np.uint8)
    return Configuration.ring(bytes(occ.tolist()))
