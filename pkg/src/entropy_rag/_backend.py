"""Select the compiled kernels when available, else the pure-Python ones.

Set ``ENTROPY_RAG_BACKEND`` to ``python`` to force the fallback or to
``compiled`` to fail loudly when the extension is missing.
"""

from __future__ import annotations

import os

_requested = os.environ.get("ENTROPY_RAG_BACKEND", "auto").lower()
if _requested not in {"auto", "python", "compiled"}:
    raise ImportError(f"unknown ENTROPY_RAG_BACKEND {_requested!r}")

kernels = None
if _requested != "python":
    try:
        from . import _kernels as kernels
    except ImportError:
        if _requested == "compiled":
            raise
if kernels is None:
    from . import _pykernels as kernels

BACKEND = "python" if kernels.__name__.endswith("_pykernels") else "compiled"

entropy = kernels.entropy
fnv1a64 = kernels.fnv1a64
hash_counts = kernels.hash_counts
topk_inner_product = kernels.topk_inner_product
