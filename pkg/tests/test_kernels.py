import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qafny import _kernels as K
from qafny._kernels import _pykernels as py

try:
    from qafny._kernels import _ckernels as cy
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def rand_vec(seed, d):
    r = np.random.default_rng(seed)
    v = r.normal(size=1 << d) + 1j * r.normal(size=1 << d)
    return v / np.linalg.norm(v)


def dense_1q(m, q, d):
    out = np.eye(1)
    for w in reversed(range(d)):
        out = np.kron(out, m if w == q else np.eye(2))
    return out


def test_1q_against_kron_oracle():
    m = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    for d in (1, 3, 4):
        for q in range(d):
            v = rand_vec(q, d)
            w = v.copy()
            K.apply_1q(w, *m.ravel(), q)
            assert np.allclose(w, dense_1q(m, q, d) @ v)


def test_phase_and_swaps_against_index_oracle():
    d = 4
    v = rand_vec(1, d)
    w = v.copy()
    K.apply_phase(w, 2, 1j)
    assert np.allclose(w, [z * (1j if i >> 2 & 1 else 1) for i, z in enumerate(v)])
    w = v.copy()
    K.apply_cx(w, 0, 3)
    assert np.allclose(w, [v[i ^ 8 if i & 1 else i] for i in range(16)])
    w = v.copy()
    K.apply_ccx(w, 1, 2, 0)
    assert np.allclose(w, [v[i ^ 1 if i & 6 == 6 else i] for i in range(16)])


@needs_ext
def test_compiled_backend_is_selected():
    assert K.BACKEND == "cython"


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 8))
def test_backends_agree(seed, d):
    rng = np.random.default_rng(seed)
    v = rand_vec(seed, d)
    a, b = v.copy(), v.copy()
    for _ in range(10):
        q, r, s = (int(x) for x in rng.permutation(d)[:3]) if d >= 3 else (0, 1, None)
        m = rng.normal(size=4) + 1j * rng.normal(size=4)
        for mod in (cy, py):
            w = a if mod is cy else b
            mod.apply_1q(w, *m, q)
            mod.apply_phase(w, r, complex(np.exp(1j * m[0].real)))
            mod.apply_cx(w, q, r)
            if s is not None:
                mod.apply_ccx(w, q, r, s)
    assert np.allclose(a, b, atol=1e-12)


def test_env_var_forces_fallback():
    env = dict(os.environ, QAFNY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from qafny import _kernels as K; print(K.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
