import numpy as np
import pytest

from homogflow import CellGeometry, CoefficientField, Disk

DISK_R = 0.25


@pytest.fixture(scope="session")
def identity():
    return CoefficientField.identity()


@pytest.fixture(scope="session")
def unit_h():
    return CoefficientField.constant(1.0)


@pytest.fixture(scope="session")
def disk_geom16():
    return CellGeometry(block=Disk(center=(0.5, 0.5), radius=DISK_R), resolution=16)


@pytest.fixture(scope="session")
def disk_geom32():
    return CellGeometry(block=Disk(center=(0.5, 0.5), radius=DISK_R), resolution=32)


@pytest.fixture(scope="session")
def disk_mesh32(disk_geom32):
    from homogflow import build_unit_cell_mesh

    return build_unit_cell_mesh(disk_geom32)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
