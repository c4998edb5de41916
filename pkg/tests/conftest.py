import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Values transcribed from the worked examples; builders are tested against these.
CONTINGENCY_A = np.array(
    [
        [1, 1, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 1, 1],
        [1, 0, 0, 1, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 1, 0, 0, 1, 0],
    ]
)
CONTINGENCY_X1 = [0, 2, 3, 0, 1, 2, 0, 1, 1]
CONTINGENCY_X2 = [0, 3, 2, 0, 0, 3, 0, 1, 1]
CONTINGENCY_Y = [5, 3, 2, 0, 4]
CONTINGENCY_LB = [
    [1, -1, 0, -1, 1, 0, 0, 0, 0],
    [-1, 0, 1, 1, 0, -1, 0, 0, 0],
    [1, -1, 0, 0, 0, 0, -1, 1, 0],
    [0, 0, 0, 1, 0, -1, -1, 0, 1],
]
CONTINGENCY_MB = [
    [0, 0, 0, 0, 1, -1, 0, -1, 1],
    [0, 0, 0, 1, -1, 0, -1, 1, 0],
    [0, 0, 0, 1, 0, -1, -1, 0, 1],
    [0, 1, -1, 0, -1, 1, 0, 0, 0],
    [0, 1, -1, 0, 0, 0, 0, -1, 1],
    [1, -1, 0, -1, 1, 0, 0, 0, 0],
    [1, -1, 0, 0, 0, 0, -1, 1, 0],
    [1, 0, -1, -1, 0, 1, 0, 0, 0],
    [1, 0, -1, 0, 0, 0, -1, 0, 1],
]
MTA_MB = [
    [1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, -1, 1, 0, 0, 0, 0, 0, 0],
    [0, -1, 0, -1, 0, 1, 0, 0, 0],
    [0, 0, 0, -1, 0, 0, 1, 0, 0],
    [0, -1, 0, -1, 0, 0, 0, 1, 0],
    [0, -1, 0, -1, 0, 0, 0, 0, 1],
]
MTA_LB = [
    [1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, -1, 1, 0, 0, 0, 0, 1, -1],
    [0, 0, 1, 0, 0, 0, 1, 0, -1],
    [0, 0, 0, 1, 0, 0, -1, 0, 0],
    [0, 0, -1, 0, 0, 1, -1, 1, -1],
    [0, 0, 0, 0, 0, 0, 0, 1, -1],
]
MTA_X1 = [0, 363, 0, 22, 174, 0, 0, 0, 0]
MTA_X2 = [0, 361, 2, 22, 174, 0, 0, 0, 0]
MTA_Y = [363, 22, 174]
SUFF_LB = [
    [0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 1, 1, 0, -1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1, 0],
    [0, -1, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0],
    [1, -2, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, -2, 1, 0],
    [1, -2, 0, 0, 1, 0, 0, 1, -1, 0, 1, 0, -2, 1, 0],
    [1, -2, 0, 0, 0, 1, 0, 1, -1, 0, 1, 0, -1, 0, 0],
    [1, -2, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, -2, 1, 0],
]
SUFF_X1 = [652, 4865, 794, 253, 18, 234, 62, 260, 26, 221, 67, 19, 0, 32, 4]
SUFF_X2 = [684, 4901, 694, 253, 31, 154, 161, 192, 49, 365, 0, 19, 0, 0, 4]
SUFF_Y = [6030, 1312, 161, 4, 629, 622, 6279, 1623, 8680]
BAND_X1 = [1, 0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]
BAND_Y = [1, 1, 1, 1, 1, 1, 1, 0, 0]


@pytest.fixture(scope="session")
def band_fiber():
    from latentmult import fiber, models

    spec = models.build_bandmisread(3)
    return spec, fiber.enumerate_fiber(spec.A, BAND_Y)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
