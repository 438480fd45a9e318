import random

from hypothesis import HealthCheck, settings, strategies as st

from planarlab.algebra import random_poly

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def polys(draw, nvars=2, degree=4, density=0.6):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_poly(random.Random(seed), nvars, degree, density)
