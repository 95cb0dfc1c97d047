"""Flat decision-vector layout for the transcription.

Three design scalars up front, then one block of width 10 per time step:
split fraction, front motor force, rear motor force split into a
nonnegative traction/regeneration pair, two brake forces, the rearward
transfer force, the battery power split pair, and the battery energy at
the start of the step interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK = 10

GAMMA, S_M, S_B = 0, 1, 2

SIGMA = 0
F_M_F = 1
F_M_R_POS = 2
F_M_R_NEG = 3
F_BRK_F = 4
F_BRK_R = 5
F_TR_F = 6
P_B_POS = 7
P_B_NEG = 8
E_B = 9

FIELD_NAMES = ["sigma", "F_m_f", "F_m_r_pos", "F_m_r_neg", "F_brk_f",
               "F_brk_r", "F_tr_f", "P_b_pos", "P_b_neg", "E_b"]


@dataclass(frozen=True)
class DecisionLayout:
    n_steps: int

    @property
    def n(self) -> int:
        return 3 + BLOCK * self.n_steps

    def idx(self, field: int, k: int) -> int:
        if not 0 <= field < BLOCK or not 0 <= k < self.n_steps:
            raise IndexError("field or step out of range")
        return 3 + BLOCK * k + field

    def col(self, field: int) -> np.ndarray:
        """Flat positions of one field across all steps."""
        return 3 + BLOCK * np.arange(self.n_steps) + field

    def get(self, x: np.ndarray, field: int) -> np.ndarray:
        return x[self.col(field)]

    def set(self, x: np.ndarray, field: int, values) -> None:
        x[self.col(field)] = values

    def step_of(self, flat: int) -> tuple[str, int] | tuple[str, None]:
        """Map a flat position back to (field name, step) for diagnostics."""
        if flat < 3:
            return (["gamma", "S_m", "S_b"][flat], None)
        off = flat - 3
        return FIELD_NAMES[off % BLOCK], off // BLOCK
