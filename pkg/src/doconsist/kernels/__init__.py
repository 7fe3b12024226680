"""Hot-kernel backend selection.

The compiled Cython backend (``_fast``) is preferred when importable; the
numpy fallback (``_pure``) is always available. Override the choice with
the DOCONSIST_BACKEND environment variable ("fast" or "pure"). Both
backends implement the contract documented in ``_pure``.
"""

import os

from . import _pure


def _load_fast():
    try:
        from . import _fast  # noqa: F401 (compiled extension, may be absent)

        return _fast
    except ImportError:
        return None


def get_backend(name: str):
    """Return the named backend module ("fast" or "pure")."""
    if name == "pure":
        return _pure
    if name == "fast":
        fast = _load_fast()
        if fast is None:
            raise ImportError("compiled kernel backend is not built")
        return fast
    raise ValueError(f"unknown backend {name!r}")


_requested = os.environ.get("DOCONSIST_BACKEND", "").strip().lower()
if _requested:
    _active = get_backend(_requested)
else:
    _active = _load_fast() or _pure

BACKEND = "fast" if _active is not _pure else "pure"

pair_mlp_forward = _active.pair_mlp_forward
pair_mlp_backward = _active.pair_mlp_backward
decode_forward = _active.decode_forward
decode_backward = _active.decode_backward
