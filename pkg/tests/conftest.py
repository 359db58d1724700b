import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bresse.model import BeamConfig, DampingSpec, LoadSpec, NonlinearitySpec, SegmentParams, sl1_config
from bresse.spatial import BeamState, build_grid

settings.register_profile(
    "bresse", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("bresse")


def linear_sl1(l=1.0):
    """First-study coefficients with damping, potentials and loads switched off."""
    return sl1_config(l=l).replace(
        damping=DampingSpec.none(), nonlinearity=NonlinearitySpec.zero(), loads=LoadSpec.zero()
    )


def unit_config(l=0.0, L=10.0, L0=4.0):
    p = SegmentParams(rho=1.0, beta=1.0, k=1.0, sigma=1.0, lam=1.0)
    return BeamConfig(p, p, l, L, L0)


def bump(center, radius=1.0, amp=1.0):
    def f(x):
        r = (np.asarray(x, dtype=float) - center) / radius
        return amp * np.where(np.abs(r) < 1, (1 - r**2) ** 6, 0.0)

    return f


def bump_state(grid):
    """Smooth data supported away from the ends and from L0 = 4."""
    disp = {
        "phi": bump(2.5), "psi": bump(2.0), "omega": bump(3.0),
        "u": bump(6.5), "v": bump(7.0), "w": bump(6.0),
    }
    return BeamState.from_functions(grid, disp)


@pytest.fixture
def sl1_grid():
    return build_grid(10.0, 4.0, 0.1, (2.0, 6.0))


ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    """Record one acceptance line; printed at the end of the session as well."""
    line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
