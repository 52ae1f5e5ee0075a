import os
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from moldsched.core import Instance
from moldsched.instances import GeneratorConfig, generate

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def e2() -> Instance:
    """d=1, P=2, two independent jobs with t(1)=2 and t(2)=1."""
    return Instance.build([2], [("a", {(1,): 2, (2,): 1}), ("b", {(1,): 2, (2,): 1})])


def gen(kind, n, d, seed, **kw):
    return generate(GeneratorConfig(kind, n=n, d=d, seed=seed, **kw))


@pytest.fixture
def E2():
    return e2()


@pytest.fixture
def F():
    return Fraction
