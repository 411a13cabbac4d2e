import numpy as np
import pytest

from weylscope.geometry import DomainSpec, build_domain


@pytest.fixture(scope="session")
def unit_circle():
    return build_domain(DomainSpec(kind="disk", radius=1.0), 256)


@pytest.fixture(scope="session")
def disk2():
    return build_domain(DomainSpec(kind="disk", radius=2.0), 256)


@pytest.fixture(scope="session")
def ellipse21():
    return build_domain(DomainSpec(kind="ellipse", a=2.0, b=1.0), 512)


@pytest.fixture(scope="session")
def ellipse_small():
    return build_domain(DomainSpec(kind="ellipse", a=1.0, b=0.8), 512)


@pytest.fixture(scope="session")
def cw002():
    return build_domain(
        DomainSpec(kind="constant_width", h0=0.5, harmonics=[(3, 0.02, 0.0)]),
        256)


@pytest.fixture(scope="session")
def cw004():
    return build_domain(
        DomainSpec(kind="constant_width", h0=0.5, harmonics=[(3, 0.04, 0.0)]),
        256)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
