"""Closed-form 1D diffusion blocks in the LGL nodal basis, k = 1..4.

Each entry is ``(nonbeta, betapart)`` with both matrices already scaled by
``h**2``: the block is ``(nonbeta + beta * betapart) / h**2`` with ``beta``
dimensionless. Used to check :func:`etdg.assembly.assemble_1d`.
"""

import numpy as np

_s5 = np.sqrt(5.0)
_s21 = np.sqrt(21.0)
_s37 = np.sqrt(3.0 / 7.0)


def _blocks_k1():
    dm1 = ([[2, -5], [-1, 4]], [[0, 4], [0, -2]])
    d0 = ([[0, 0], [0, 0]], [[-4, 2], [2, -4]])
    d1 = ([[4, -1], [-5, 2]], [[-2, 0], [4, 0]])
    return dm1, d0, d1


def _blocks_k2():
    dm1 = ([[-9 / 2, 18, -63 / 2], [3 / 4, -3, 39 / 4], [-3 / 2, 6, -33 / 2]],
           [[0, 0, 9], [0, 0, -3 / 2], [0, 0, 3]])
    d0 = ([[7, 16, 7], [-1 / 2, -14, -1 / 2], [7, 16, 7]],
          [[-9, 0, -3], [3 / 2, 0, 3 / 2], [-3, 0, -9]])
    d1 = ([[-33 / 2, 6, -3 / 2], [39 / 4, -3, 3 / 4], [-63 / 2, 18, -9 / 2]],
          [[3, 0, 0], [-3 / 2, 0, 0], [9, 0, 0]])
    return dm1, d0, d1


def _blocks_k3():
    r = _s5
    dm1 = ([[8, -20 * (-1 + r), 20 * (1 + r), -108],
            [-2 / r, 5 - r, -5 - r, 3 + 51 / r],
            [2 / r, -5 + r, 5 + r, 3 - 51 / r],
            [-2, -5 + 5 * r, -5 * (1 + r), 42]],
           [[0, 0, 0, 16], [0, 0, 0, -4 / r], [0, 0, 0, 4 / r], [0, 0, 0, -4]])
    d0 = ([[30, 10 * (1 + r), -10 * (-1 + r), -20],
           [2 - 2 * r, -30, 20, 2 * (1 + r)],
           [2 * (1 + r), 20, -30, 2 - 2 * r],
           [-20, -10 * (-1 + r), 10 * (1 + r), 30]],
          [[-16, 0, 0, 4], [4 / r, 0, 0, -4 / r], [-4 / r, 0, 0, 4 / r], [4, 0, 0, -16]])
    d1 = ([[42, -5 * (1 + r), -5 + 5 * r, -2],
           [3 - 51 / r, 5 + r, -5 + r, 2 / r],
           [3 + 51 / r, -5 - r, 5 - r, -2 / r],
           [-108, 20 * (1 + r), -20 * (-1 + r), 8]],
          [[-4, 0, 0, 0], [4 / r, 0, 0, 0], [-4 / r, 0, 0, 0], [16, 0, 0, 0]])
    return dm1, d0, d1


def _blocks_k4():
    q, t = _s21, _s37
    dm1 = ([[-25 / 2, -175 / 12 * (-7 + q), -200 / 3, 175 / 12 * (7 + q), -275],
            [15 / 14, 5 / 4 * (-7 + q), 40 / 7, -5 / 4 * (7 + q), 330 / 7 + 15 * t],
            [-15 / 16, -35 / 32 * (-7 + q), -5, 35 / 32 * (7 + q), -285 / 8],
            [15 / 14, 5 / 4 * (-7 + q), 40 / 7, -5 / 4 * (7 + q), 330 / 7 - 15 * t],
            [-5 / 2, -35 / 12 * (-7 + q), -40 / 3, 35 / 12 * (7 + q), -85]],
           [[0, 0, 0, 0, 25], [0, 0, 0, 0, -15 / 7], [0, 0, 0, 0, 15 / 8],
            [0, 0, 0, 0, -15 / 7], [0, 0, 0, 0, 5]])
    d0 = ([[165 / 2, 7 / 6 * (35 + 4 * q), 16 / 3, -7 / 6 * (-35 + 4 * q), 81 / 2],
           [-135 / 14 + 6 * t, -385 / 6, 688 / 21, -133 / 6, -135 / 14 - 6 * t],
           [207 / 16, 1519 / 48, -110 / 3, 1519 / 48, 207 / 16],
           [-135 / 14 - 6 * t, -133 / 6, 688 / 21, -385 / 6, -135 / 14 + 6 * t],
           [81 / 2, -7 / 6 * (-35 + 4 * q), 16 / 3, 7 / 6 * (35 + 4 * q), 165 / 2]],
          [[-25, 0, 0, 0, -5], [15 / 7, 0, 0, 0, 15 / 7], [-15 / 8, 0, 0, 0, -15 / 8],
           [15 / 7, 0, 0, 0, 15 / 7], [-5, 0, 0, 0, -25]])
    d1 = ([[-85, 35 / 12 * (7 + q), -40 / 3, -35 / 12 * (-7 + q), -5 / 2],
           [330 / 7 - 15 * t, -5 / 4 * (7 + q), 40 / 7, 5 / 4 * (-7 + q), 15 / 14],
           [-285 / 8, 35 / 32 * (7 + q), -5, -35 / 32 * (-7 + q), -15 / 16],
           [330 / 7 + 15 * t, -5 / 4 * (7 + q), 40 / 7, 5 / 4 * (-7 + q), 15 / 14],
           [-275, 175 / 12 * (7 + q), -200 / 3, -175 / 12 * (-7 + q), -25 / 2]],
          [[5, 0, 0, 0, 0], [-15 / 7, 0, 0, 0, 0], [15 / 8, 0, 0, 0, 0],
           [-15 / 7, 0, 0, 0, 0], [25, 0, 0, 0, 0]])
    return dm1, d0, d1


_BUILDERS = {1: _blocks_k1, 2: _blocks_k2, 3: _blocks_k3, 4: _blocks_k4}


def tabulated_blocks(k):
    """Return ``{-1: (nonbeta, betapart), 0: ..., 1: ...}`` scaled by ``h**2``."""
    if k not in _BUILDERS:
        raise KeyError(f"no tabulated blocks for k={k} (available: 1-4)")
    out = {}
    for off, (a, b) in zip((-1, 0, 1), _BUILDERS[k]()):
        out[off] = (np.array(a, dtype=float), np.array(b, dtype=float))
    return out
