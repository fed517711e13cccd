import os
import subprocess
import sys
from importlib import resources

import numpy as np

from tonerec import _kernels
from tonerec.synthetic import write_fixture


def _backend_with(env_value):
    env = dict(os.environ)
    env.pop("TONEREC_DISABLE_NUMBA", None)
    if env_value is not None:
        env["TONEREC_DISABLE_NUMBA"] = env_value
    code = "from tonerec import _kernels; print(_kernels.BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.strip()


def test_env_flag_selects_numpy():
    assert _backend_with("1") == "numpy"
    assert _backend_with(None) == ("numba" if _kernels.HAVE_NUMBA else "numpy")


def test_kernels_agree_on_random_matrix(fixture_corpus):
    from tonerec.matrices import build_user_item

    m = build_user_item(fixture_corpus)
    dense, mask = m.dense()
    for target in range(len(m)):
        for co_rated in (True, False):
            a, oa = _kernels.pcc_row_numba(m.indptr, m.indices, m.data, m.means, target, co_rated)
            b, ob = _kernels.pcc_row_numpy(dense, mask, m.means, target, co_rated)
            assert np.array_equal(oa, ob)
            assert np.allclose(a, b, atol=1e-12, equal_nan=True)


def test_bundled_fixture_regenerates(tmp_path):
    movies, ratings = write_fixture(tmp_path)
    bundled = resources.files("tonerec.data.fixture")
    assert movies.read_bytes() == bundled.joinpath("movies.csv").read_bytes()
    assert ratings.read_bytes() == bundled.joinpath("ratings.csv").read_bytes()
