import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_chain(rng, n_pivots, r_c=0.006, turn=(math.radians(10), math.radians(150)), margin=0.004,
                 max_out_of_plane=0.95):
    """Random non-degenerate pivot chain whose bends fit between pivots.

    Each forward segment keeps away from the preceding bend normal so the
    in-plane projection is well defined.
    """
    x = random_unit(rng)
    pts = [rng.uniform(-0.1, 0.1, 3)]
    dirs = [x]
    normal = None
    while len(dirs) < n_pivots - 1:
        d = random_unit(rng)
        t = math.acos(np.clip(d @ dirs[-1], -1, 1))
        if not turn[0] <= t <= turn[1]:
            continue
        if normal is not None and abs(d @ normal) > max_out_of_plane:
            continue
        normal = np.cross(dirs[-1], d)
        normal /= np.linalg.norm(normal)
        dirs.append(d)
    turns = [math.acos(np.clip(a @ b, -1, 1)) for a, b in zip(dirs[:-1], dirs[1:])]
    tans = [r_c * math.tan(t / 2) for t in turns]
    for k, d in enumerate(dirs):
        need = (tans[k - 1] if k > 0 else 0.0) + (tans[k] if k < len(tans) else 0.0)
        pts.append(pts[-1] + (need + margin + rng.uniform(0.0, 0.05)) * d)
    return np.array(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
