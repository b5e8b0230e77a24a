import itertools
from collections import deque

import numpy as np
import pytest

from cayleywalk import Permutation


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_perms(n):
    for img in itertools.permutations(range(1, n + 1)):
        yield Permutation(img)


def bfs_distances(n):
    """Cayley-graph distance from the identity for every element of S_n."""
    start = tuple(range(n))
    dist = {start: 0}
    queue = deque([start])
    gens = list(itertools.combinations(range(n), 2))
    while queue:
        v = queue.popleft()
        for i, j in gens:
            w = list(v)
            w[i], w[j] = w[j], w[i]
            w = tuple(w)
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def bfs_path_counts(n):
    """Number of shortest paths from every element of S_n to the identity."""
    dist = bfs_distances(n)
    gens = list(itertools.combinations(range(n), 2))
    count = {}
    for v in sorted(dist, key=dist.get):
        if dist[v] == 0:
            count[v] = 1
            continue
        total = 0
        for i, j in gens:
            w = list(v)
            w[i], w[j] = w[j], w[i]
            w = tuple(w)
            if dist[w] == dist[v] - 1:
                total += count[w]
        count[v] = total
    return dist, count


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
