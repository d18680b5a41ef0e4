from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["GridSpec", "VALIDATION_GRID"]


@dataclass(frozen=True)
class GridSpec:
    """Log-uniform grid on ``R_+``: ``u = log t`` sampled at ``u_k = -U + k h``.

    ``h = 2U/N`` and the grid is periodic in the FFT sense, so the last node
    is ``U - h``.  ``p`` is carried along for the ``t^{1/p}`` weights.
    """

    U: float
    N: int
    p: float = 2.0

    def __post_init__(self):
        if not self.U > 0:
            raise ValueError(f"U must be positive, got {self.U!r}")
        n = int(self.N)
        if n != self.N or n < 16 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N!r}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.U / self.N

    @cached_property
    def u(self) -> np.ndarray:
        return -self.U + self.h * np.arange(self.N)

    @cached_property
    def t(self) -> np.ndarray:
        return np.exp(self.u)

    @cached_property
    def xi(self) -> np.ndarray:
        """Mellin frequencies in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def with_p(self, p: float) -> "GridSpec":
        return GridSpec(self.U, self.N, p)

    def phi_weight(self) -> np.ndarray:
        """Diagonal of ``Phi``: ``t^{1/p}``."""
        return np.exp(self.u / self.p)


VALIDATION_GRID = GridSpec(U=40.0, N=16384)
