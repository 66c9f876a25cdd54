"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is. Set ``METALP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from metalp import _pykernels as python_backend

try:
    from metalp import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("METALP_PURE_PYTHON") != "1":
    backend, BACKEND_NAME = compiled_backend, "cython"
else:
    backend, BACKEND_NAME = python_backend, "python"

graph_paths = backend.graph_paths
build_tree = backend.build_tree
predict_tree = backend.predict_tree
