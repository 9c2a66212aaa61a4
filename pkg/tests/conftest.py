import pytest

from models.field import GridSpec
from models.motion import sample_motion
from services.chirka_service import extend_motion

# reduced solver mesh for the unit tests; the acceptance suite runs at full size
MESH_NODES = 24


@pytest.fixture(scope="session")
def extended():
    """The sample five-point motion extended at r = 0.5 over a 6 x 6 plane grid."""
    grid = GridSpec.spanning(-1.4, 1.4, -1.4, 1.4, 6, 6)
    return extend_motion(sample_motion(), 0.5, grid, mesh_nodes=MESH_NODES)
