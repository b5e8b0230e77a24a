"""The compiled and pure-Python kernel paths must agree bit for bit."""
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import hashlib, numpy as np
from cayleywalk import USING_NUMBA
from cayleywalk.samplers import derive, uniform_on_sphere_batch, hitting_sample, uniform_permutation
from cayleywalk.walk import run
from cayleywalk.geodesic import shadow_geodesic, greedy_geodesic
from cayleywalk.branching import join_weights
h = hashlib.sha256()
tr = run(300, 400, derive(1, 0))
h.update(tr.final.tobytes()); h.update(tr.kinds.tobytes()); h.update(tr.distances.tobytes())
sh = shadow_geodesic(tr, derive(1, 1))
h.update(sh.path.ti.tobytes()); h.update(sh.k_history.tobytes()); h.update(sh.gap_history.tobytes())
X = uniform_on_sphere_batch(200, 80, 20, derive(1, 2))
h.update(X.tobytes())
h.update(join_weights(X[0], X[1]).tobytes())
h.update(hitting_sample(300, 0.3, derive(1, 3)).perm.array.tobytes())
h.update(uniform_permutation(500, derive(1, 4)).array.tobytes())
h.update(greedy_geodesic(uniform_permutation(50, derive(1, 5)), derive(1, 6)).ti.tobytes())
print(USING_NUMBA, h.hexdigest())
"""


def _run(flag):
    env = dict(os.environ)
    env["CAYLEYWALK_NO_NUMBA"] = flag
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    using, digest = out.stdout.split()
    return using == "True", digest


def test_numba_and_fallback_agree():
    pytest.importorskip("numba")
    fast_using, fast = _run("0")
    slow_using, slow = _run("1")
    assert fast_using and not slow_using
    assert fast == slow
