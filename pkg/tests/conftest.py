import math

import pytest
from hypothesis import settings

from winding import example_a, validate_domain

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec_a():
    return validate_domain(example_a(), 16 * math.pi)
