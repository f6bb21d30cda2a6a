import math

import pytest
from hypothesis import HealthCheck, settings

from ricker_stage import ModelParams

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# Figure 1 caption values
FIG1 = dict(lam=3.0, a=0.7936, b=0.0891)


def scalar_orbit(lam, a_seq, b, c, s_seq, x0, x1, steps):
    """Straight transcription of the folded recursion, kept apart from the package."""
    xs = [x0, x1]
    for n in range(1, steps + 1):
        p, q = xs[-2], xs[-1]
        a = a_seq[n % len(a_seq)]
        s = s_seq[n % len(s_seq)]
        g = 0.0 if p == 0 else p**lam * math.exp(a - b * q - c * p)
        xs.append(s * q + g)
    return xs


@pytest.fixture(scope="session")
def fig1():
    return ModelParams.autonomous(FIG1["lam"], FIG1["a"], b=FIG1["b"])


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
