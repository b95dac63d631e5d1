import numpy as np
import pytest

from src.kinematics.skeleton import default_skeleton
from src.sdfdata.mesh import TriMesh
from src.sdfdata.primitives import box_mesh, icosphere


def winding_number(mesh: TriMesh, points) -> np.ndarray:
    """Generalized winding number: sum of signed solid angles / 4 pi (1 inside, 0 outside)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    tri = mesh.triangle_corners()
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        a, b, c = tri[:, 0] - p, tri[:, 1] - p, tri[:, 2] - p
        la, lb, lc = (np.linalg.norm(x, axis=1) for x in (a, b, c))
        num = np.einsum("ij,ij->i", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("ij,ij->i", a, b) * lc
               + np.einsum("ij,ij->i", b, c) * la + np.einsum("ij,ij->i", c, a) * lb)
        out[i] = np.sum(2.0 * np.arctan2(num, den)) / (4.0 * np.pi)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def skel():
    return default_skeleton()


@pytest.fixture(scope="session")
def unit_sphere():
    return icosphere(1.0, 4)


@pytest.fixture(scope="session")
def small_sphere():
    return icosphere(0.5, 2)


@pytest.fixture(scope="session")
def unit_box():
    return box_mesh()


@pytest.fixture
def winding():
    return winding_number
