import pytest

from ivmediation.population import MediatorResponse, OutcomeProfile, Population, Stratum

POP_A_DICT = {
    "p_z": 0.5,
    "p_d": 0.5,
    "strata": [
        {"weight": 0.5, "m": [[0, 1], [1, 1]], "y": [[0, 2], [1, 4]], "noise_sd": 1.0},
        {"weight": 0.5, "m": [[0, 0], [0, 1]], "y": [[1, 1], [1, 3]], "noise_sd": 1.0},
    ],
}


def make_pop_a(noise_sd=1.0):
    return Population.from_dict(POP_A_DICT).with_noise(noise_sd)


def single_stratum(m, y, p_z=0.5, p_d=0.5, noise_sd=0.0):
    return Population([Stratum(1.0, MediatorResponse(m), OutcomeProfile(y), noise_sd)], p_z, p_d)


@pytest.fixture
def pop_a():
    return make_pop_a()


@pytest.fixture
def pop_a_noiseless():
    return make_pop_a(0.0)


@pytest.fixture
def unconfounded():
    """Identical outcome profiles across strata: no mediator-outcome confounding."""
    y = ((1.0, 2.5), (2.0, 4.0))
    return Population(
        [
            Stratum(0.3, MediatorResponse(((0, 1), (1, 1))), OutcomeProfile(y), 1.0),
            Stratum(0.5, MediatorResponse(((0, 0), (0, 1))), OutcomeProfile(y), 1.0),
            Stratum(0.2, MediatorResponse(((0, 0), (1, 1))), OutcomeProfile(y), 1.0),
        ],
        p_z=0.4,
        p_d=0.5,
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
