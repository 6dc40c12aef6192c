"""Financial chaos index, causal uncertainty networks, and market-efficiency tests.

Submodules are imported lazily so that the command-line entry point can pin
BLAS threading before numpy is first loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "panel",
    "fcix",
    "varmodel",
    "egc",
    "mht",
    "netstats",
    "synth",
    "cli",
    "errors",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
