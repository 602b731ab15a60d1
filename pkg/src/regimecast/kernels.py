"""Backend dispatch for the numerical hot kernels.

Prefers the compiled extension (regimecast._kernels) and falls back to the
numpy implementation when the extension is not built. Set the environment
variable REGIMECAST_KERNELS to "native" or "numpy" to force a backend;
"native" raises if the extension is missing.
"""

from __future__ import annotations

import os

from .errors import ConfigError

_choice = os.environ.get("REGIMECAST_KERNELS", "auto").strip().lower()

if _choice in ("auto", "native"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "native":
            raise
        from . import _kernels_numpy as _impl  # type: ignore[no-redef]
elif _choice == "numpy":
    from . import _kernels_numpy as _impl  # type: ignore[no-redef]
else:
    raise ConfigError(f"REGIMECAST_KERNELS must be auto, native, or numpy, got {_choice!r}")

BACKEND: str = _impl.BACKEND

assign_labels = _impl.assign_labels
linear_predict = _impl.linear_predict
linear_grad = _impl.linear_grad
linear_sgd_epoch = _impl.linear_sgd_epoch
mlp_predict = _impl.mlp_predict
mlp_grad = _impl.mlp_grad
mlp_sgd_epoch = _impl.mlp_sgd_epoch
