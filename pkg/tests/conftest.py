import numpy as np
import pytest

from retinex_unroll.solver import SolverState


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def naive_conv(img, k):
    """Direct periodic convolution with explicit index arithmetic."""
    h, w = img.shape[:2]
    n = k.shape[0]
    c = n // 2
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(n):
                for v in range(n):
                    acc = acc + k[u, v] * img[(i - u + c) % h, (j - v + c) % w]
            out[i, j] = acc
    return out


def blur_matrix(k, h, w):
    """Dense (h*w, h*w) circulant matrix of periodic convolution with k."""
    n = k.shape[0]
    c = n // 2
    m = np.zeros((h * w, h * w))
    for i in range(h):
        for j in range(w):
            for u in range(n):
                for v in range(n):
                    m[i * w + j, ((i - u + c) % h) * w + (j - v + c) % w] += k[u, v]
    return m


def random_kernel(rng, size):
    k = rng.random((size, size))
    return k / k.sum()


def random_state(rng, h=4, w=4, c=1, scale=1.0):
    img = lambda: rng.uniform(0.05, 1.0, (h, w, c)) * scale
    mp = lambda: rng.uniform(0.05, 1.0, (h, w)) * scale
    return SolverState(
        I=img(), R=img(), Z=img(), P=img(), L=mp(), Q=mp(),
        Gamma=rng.normal(0, 0.3, (h, w, c)),
        Omega=rng.normal(0, 0.3, (h, w)),
        Delta=rng.normal(0, 0.3, (h, w, c)),
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
