import pytest

from nagata import AnalyticL1Norm, build_tower, center_generator, lemma_step, parse_group


@pytest.fixture(scope="session")
def z_group():
    return parse_group("Z")


@pytest.fixture(scope="session")
def h3_group():
    return parse_group("H3")


@pytest.fixture(scope="session")
def stage1(z_group):
    """The (k=2, m=1, R=3) instance on Z: a=17, C=4, h=(17)."""
    base = AnalyticL1Norm(z_group)
    return lemma_step(base, center_generator(z_group), k=2, m=1, R=3)


@pytest.fixture(scope="session")
def tower3(z_group):
    """Three stages on Z with k=(2,3,4), M=(3,5,7); shared across tests."""
    return build_tower(z_group, (2, 3, 4), (3, 5, 7), 3, verify_radius=60)
