import numpy as np
import pytest
from hypothesis import settings

from qgraph import parse_graph_file

settings.register_profile("qgraph", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("qgraph")

ACCEPTANCE_LINES = []

GRAPHS = {
    "interval_dd": "vertex a boundary_D\nvertex b boundary_D\nedge e a b length 1 potential zero\n",
    "loop": "vertex a internal\nedge e a a length 1 potential zero\n",
    "figure_eight": "vertex a internal\nedge l1 a a length 1 potential zero\nedge l2 a a length 1.5 potential zero\n",
    "theta": ("vertex a internal\nvertex b internal\nedge e1 a b length 1 potential zero\n"
              "edge e2 a b length 1.2 potential zero\nedge e3 a b length 0.8 potential zero\n"),
    "path3": ("vertex a boundary_D\nvertex b internal\nvertex c internal\nvertex d boundary_K\n"
              "edge e1 a b length 1 potential zero\nedge e2 b c length 1 potential zero\n"
              "edge e3 c d length 1 potential zero\nroot a\n"),
    "loop_ray": "vertex a internal\nedge l a a length 1 potential zero\nray r a support 0 potential zero\n",
    "star_rays": ("vertex v0 boundary_D\nvertex v1 internal\nedge e0 v0 v1 length 1 potential zero\n"
                  "ray r1 v1 support 1 potential pw 0.0 -3\nray r2 v1 support 1 potential zero\nroot v0\n"),
    "lasso": ("vertex v0 boundary_D\nvertex v1 internal\nedge e0 v0 v1 length 1 potential zero\n"
              "edge l v1 v1 length 1.3 potential zero\nroot v0\n"),
    "chain": ("vertex v0 boundary_K\nvertex v1 internal\nvertex v2 internal\n"
              "edge e0 v0 v1 length 1 potential zero\nedge e1 v1 v2 length 0.7 potential zero\n"
              "ray r v2 support 1 potential pw 0.0 -2\nroot v0\n"),
    "loop_ray_root": ("vertex v0 boundary_D\nvertex v1 internal\nedge e0 v0 v1 length 1 potential zero\n"
                      "edge l v1 v1 length 1.3 potential pw 0.0 -8\nray r v1 support 1.0 potential pw 0.0 -6\n"
                      "root v0\n"),
}


@pytest.fixture
def graphs():
    return {k: parse_graph_file(v) for k, v in GRAPHS.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_lambdas(rng, n, min_imag=0.5, re=(-20.0, 60.0), im=(0.5, 10.0)):
    re_ = rng.uniform(*re, n)
    im_ = rng.uniform(max(min_imag, im[0]), im[1], n) * rng.choice([-1, 1], n)
    return re_ + 1j * im_


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
