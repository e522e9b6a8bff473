"""Matrices and constants exactly as they appear in print.

Nothing here is derived; these are reference values that the rest of the
package is audited against.
"""
from __future__ import annotations

import numpy as np


def printed_A_av(L1, L2, L3, L4, C1, C2, Co, R, D):
    """Averaged coefficient matrix as typeset, entry by entry."""
    A = np.zeros((7, 7))
    A[0, 4] = 1 / L1
    A[1, 4] = -(1 - D) / L2
    A[2, 4] = 1 / L3
    A[2, 5] = (D - 1) / L3
    A[3, 4] = D / L4
    A[3, 5] = -(D - 1) / L4
    A[4, 0] = 1 / C1
    A[4, 1] = -D / C1
    A[4, 2] = -(D - 1) / C1
    A[5, 2] = (1 - D) / C2
    A[5, 3] = -1 / C2
    A[6, 3] = -D / Co
    A[6, 6] = (1 - D) / (R * Co)
    return A


# symbolic text of each printed A_av cell, used in discrepancy listings
PRINTED_A_AV_TEXT = {
    (0, 4): "1/L1",
    (1, 4): "-(1-D)/L2",
    (2, 4): "1/L3",
    (2, 5): "(D-1)/L3",
    (3, 4): "D/L4",
    (3, 5): "-(D-1)/L4",
    (4, 0): "1/C1",
    (4, 1): "-D/C1",
    (4, 2): "-(D-1)/C1",
    (5, 2): "(1-D)/C2",
    (5, 3): "-1/C2",
    (6, 3): "-D/Co",
    (6, 6): "(1-D)/(R*Co)",
}


def printed_B_av(L1, L2, L4, C1, C2, D):
    B = np.zeros((7, 2))
    B[0, 0] = D / L1
    B[1, 0] = D / L2
    B[3, 0] = -D / L4
    B[4, 1] = D / C1
    B[5, 1] = D / C2
    return B


PRINTED_B_AV_TEXT = {
    (0, 0): "D/L1",
    (1, 0): "D/L2",
    (3, 0): "-D/L4",
    (4, 1): "D/C1",
    (5, 1): "D/C2",
}

PRINTED_C_AV = np.array([[0, 0, 0, 0, 0, 0, 1.0]])


# Identified 4-state continuous-time model (reference only, never re-fitted).
IDENTIFIED_A = np.array([
    [-7.759e-05, 0.0009677, 1.597e-05, -5.414e-05],
    [0.002662, -0.006506, -0.03907, 0.0573],
    [-0.002347, 0.02966, -0.05055, 0.5153],
    [-0.001938, 0.008198, -0.06152, -0.411],
])
IDENTIFIED_B = np.array([[1.072e-06], [-0.006722], [0.01811], [-0.04098]])
IDENTIFIED_C = np.array([[-3414, -1.634, 0.01353, -0.0003253]])
IDENTIFIED_D = np.array([[0.0]])
IDENTIFIED_K = np.array([[-0.0002757], [-0.4944], [0.777], [0.6606]])
IDENTIFIED_FPE = 1.787e-06
IDENTIFIED_MSE = 1.782e-06

# Vo(s)/V(s) second-order transfer function, descending powers of s
IDENTIFIED_TF_NUM = (0.005823, -4.897e-06)
IDENTIFIED_TF_DEN = (1.0, 0.0004363, 1.428e-15)
