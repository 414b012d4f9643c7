"""Python surface for the selekt data-selection engine."""

try:
    from selekt._selekt_core import *  # noqa: F401,F403
except ImportError:  # running against a bare build tree
    from _selekt_core import *  # noqa: F401,F403
