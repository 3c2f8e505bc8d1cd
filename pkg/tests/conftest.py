import logfire
import pytest

from src.expr.compiled import parse_field
from src.integrate.settings import IntegratorSettings
from src.region.region import ball, box


@pytest.fixture(autouse=True)
def quiet_logfire():
    # The CLI reconfigures logfire on every invocation; reset it before each test.
    logfire.configure(send_to_logfire=False, console=False)
    yield


@pytest.fixture
def settings():
    return IntegratorSettings()


@pytest.fixture
def fast():
    """Looser settings for randomized and two-dimensional checks."""
    return IntegratorSettings(rel_tol=1e-5, abs_tol=1e-8, max_depth=6)


@pytest.fixture
def unit():
    return box([0.0], [1.0])


@pytest.fixture
def square():
    return box([-1.0, -1.0], [1.0, 1.0])


@pytest.fixture
def disk():
    return ball([0.0, 0.0], 1.0)


def field(source: str, dim: int = 1, **kwargs):
    return parse_field(source, dim, **kwargs)
