"""Best-split search kernel for the regression-tree ensembles.

The compiled Cython kernel is used when the extension built; otherwise the
numpy fallback is selected. Both implement the identical scan (same sort
order, same sequential accumulation) so results are bit-identical.
"""

from ._split_py import best_split as best_split_py

try:
    from ._split_cy import best_split as best_split_cy
except ImportError:
    best_split_cy = None

best_split = best_split_cy if best_split_cy is not None else best_split_py

USING_COMPILED_KERNEL = best_split_cy is not None

__all__ = ["best_split", "best_split_py", "best_split_cy", "USING_COMPILED_KERNEL"]
