import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from algebroid.chart import builtin_chart, builtin_corpus
from algebroid.poly import Poly

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

CORPUS = {ch.name: ch for ch in builtin_corpus()}


@pytest.fixture(params=sorted(CORPUS))
def any_chart(request):
    return CORPUS[request.param]


@pytest.fixture
def rng():
    return random.Random(1234)


coefficients = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def polys(nvars: int, max_degree: int = 2, max_terms: int = 3):
    exps = st.tuples(*[st.integers(0, max_degree) for _ in range(nvars)]) if nvars else st.just(())
    return st.dictionaries(exps, coefficients, max_size=max_terms).map(lambda t: Poly(nvars, t))


def seeds():
    return st.integers(0, 2 ** 32 - 1)


def chart_named(name):
    return CORPUS.get(name) or builtin_chart(name)
