import numpy as np


class ConvergenceWarning(UserWarning):
    pass


def check_binary(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be a 1-D sequence over {0, 1}")
    if y.min() == y.max():
        raise ValueError("both classes must be present to fit a classifier")
    return y.astype(np.int64)
