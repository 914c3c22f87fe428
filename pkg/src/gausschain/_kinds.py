"""Integer codes shared by the compiled and pure-Python kernels.

Keep in sync with the ``DEF``-style constants at the top of ``_core.pyx``.
"""

# covariance models
MODEL_DENSE = 0
MODEL_POWEXP = 1
MODEL_SCALEDEXP = 2
MODEL_IDENTITY = 3

# test functionals
FUNC_CONST = 0
FUNC_COORD = 1
FUNC_MAX = 2
FUNC_NORM = 3
FUNC_INDICATOR = 4
FUNC_BASKET = 5
