"""Backend selection for the inner loops.

The compiled Cython module is preferred when present; otherwise the numpy
fallback in _pyloops is used.  Set ACBENCH_BACKEND=python to force the
fallback or ACBENCH_BACKEND=compiled to require the extension.
"""

import os

from . import _pyloops

_requested = os.environ.get("ACBENCH_BACKEND", "auto").strip().lower()

if _requested in ("auto", "", "compiled"):
    try:
        from . import _fastloops as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "ACBENCH_BACKEND=compiled but the _fastloops extension is "
                "not built; install with a C compiler or unset the variable")
        _impl = _pyloops
elif _requested in ("python", "pure"):
    _impl = _pyloops
else:
    raise ValueError(f"unrecognized ACBENCH_BACKEND={_requested!r}; "
                     "use 'compiled', 'python', or 'auto'")

critic_chunk = _impl.critic_chunk
nav_iteration = _impl.nav_iteration
nav_eval = _impl.nav_eval
rbf_batch = _impl.rbf_batch

BACKEND = _impl.BACKEND


def backend_name() -> str:
    return BACKEND


def get_backend(name: str):
    """Fetch a specific backend module (for tests and benchmarks)."""
    if name in ("python", "pure"):
        return _pyloops
    if name == "compiled":
        from . import _fastloops  # raises ImportError if not built
        return _fastloops
    raise ValueError(f"unknown backend {name!r}")
