import numpy as np
import pytest

from paralab.paraproduct import ParaproductConfig
from paralab.scene import build_scene
from paralab.speccalc import MultiplierFamily, eigendecompose, make_quadrature


@pytest.fixture(scope="session")
def circle64():
    scene = build_scene("circle", n=64)
    spec = eigendecompose(scene)
    fam = MultiplierFamily(order=8)
    quad = make_quadrature(spec, fam)
    return scene, spec, fam, quad


@pytest.fixture(scope="session")
def circle64_cfg(circle64):
    _, _, fam, quad = circle64
    return ParaproductConfig(fam, quad)


@pytest.fixture(scope="session")
def circle9():
    scene = build_scene("circle", n=9)
    spec = eigendecompose(scene)
    fam = MultiplierFamily(order=8)
    quad = make_quadrature(spec, fam)
    return scene, spec, fam, quad


@pytest.fixture(scope="session")
def torus8():
    scene = build_scene("torus2", nx=8, ny=8)
    spec = eigendecompose(scene)
    fam = MultiplierFamily(order=8)
    quad = make_quadrature(spec, fam)
    return scene, spec, fam, quad


@pytest.fixture(scope="session")
def heis():
    scene = build_scene("heisenberg", nx=8, ny=8, nz=8)
    spec = eigendecompose(scene)
    return scene, spec


def random_kernel_free(spec, seed, count=1):
    rng = np.random.default_rng(seed)
    out = [spec.remove_kernel(rng.standard_normal(spec.n))
           for _ in range(count)]
    return out[0] if count == 1 else out
