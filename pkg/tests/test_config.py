import math

import pytest

from anharmonic.config import ConfigError, parse

BASE = """
[oscillator]
k = 2
ell = 1
gamma = 0.5
"""


def test_minimal():
    cfg = parse(BASE)
    assert (cfg.spec.k, cfg.spec.ell, cfg.spec.gamma) == (2, 1, 0.5)
    assert cfg.disc.basis == "hermite" and cfg.disc.N == 256


def test_full():
    cfg = parse(BASE + """
[discretization]
N = 128
[norms]
pairs = [[2, "inf", 2, 2], [1, 1, inf, inf]]
m = 2
[experiment]
seed = 7
lambda = [0.0, 1.0]
q = 1.5
[output]
dir = "out"
""")
    assert cfg.pairs == ((2.0, math.inf, 2.0, 2.0), (1.0, 1.0, math.inf, math.inf))
    assert cfg.seed == 7 and cfg.experiment["lambda"] == 1j and cfg.out == "out"


@pytest.mark.parametrize("text", [
    "[oscillator]\nk = 0\nell = 1\n",
    "[oscillator]\nk = 1\nell = 1\ngamma = -1\n",
    "[oscillator]\nk = 1.5\nell = 1\n",
    "[oscillator]\nk = 1\nell = 1\ndim = 2\n",
    "[oscillator]\nk = 1\nell = 1\ncolour = 3\n",
    "ell = 1\n",
    "[oscillator\nk=1",
    BASE + "[discretization]\nN = 4\n",
    BASE + "[discretization]\nbasis = \"grid\"\nL = 5.0\n",
    BASE + "[discretization]\nbasis = \"grid\"\nL = -5.0\nM = 100\n",
    BASE + "[discretization]\nbasis = \"spline\"\n",
    BASE + "[norms]\npairs = [[2, 2, 2]]\n",
    BASE + "[norms]\npairs = [[0, 2, 2, 2]]\n",
    BASE + "[experiment]\nfit_window = [100, 110]\n",
    BASE + "[experiment]\ntimes = [1.0, 0.5]\n",
    BASE + "[experiment]\nsteps = 10\n",
    BASE + "[experiment]\nseed = -3\n",
    BASE + "[experiment]\nwhatever = 1\n",
    BASE + "[experiment]\nq = 0.5\n",
])
def test_rejections(text):
    with pytest.raises(ConfigError):
        parse(text)
