import pytest

from isinglab.census import contour_census


@pytest.fixture(scope="session")
def census_3x3():
    return contour_census(half=1, include_nested=True)


@pytest.fixture(scope="session")
def census_5x5_nested():
    return contour_census(half=2, include_nested=True)
