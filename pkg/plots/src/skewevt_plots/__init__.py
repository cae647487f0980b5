"""Publication-style figures from skewevt CSV outputs.

The plotter never recomputes statistics: it draws exactly the columns the
experiments emitted (the KS annotation is the maximum of the emitted abs_diff
column, the error bars are the emitted standard errors). The only derived
element is the guide line on decay plots, which is fitted in display space
and labeled as a guide; a slope from the experiment's JSON summary takes
precedence when provided.
"""

__version__ = "0.1.0"

from .figures import FigureResult, FigureSpec, render  # noqa: F401
