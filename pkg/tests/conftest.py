import pytest

from diskalloc import load_paper_example


@pytest.fixture(scope="session")
def instance():
    """The bundled example: 8 unit files, disks (3, 3, 2), 3 stages."""
    return load_paper_example()
