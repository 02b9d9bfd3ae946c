"""Diffusion-policy soft actor-critic for resource-constrained provider selection."""

try:
    from d2sac._core import *  # noqa: F401,F403  (installed layout)
except ImportError:  # pragma: no cover - in-tree test layout
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
