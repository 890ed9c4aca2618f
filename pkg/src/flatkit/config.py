"""Run configuration shared by the decomposition driver, verifier and CLI."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass
class Config:
    seed: int = 42
    trials: int = 8                  # random points per generic-rank test
    one_dim: bool = False            # keep a single projectable direction
    explore_branches: bool = False   # enumerate redundant-input eliminations
    max_shift: int | None = None     # shift budget for verification (None: n+q+2)
    q_limit: int = 10                # largest input shift accepted in candidates
    straightening: bool = True       # False forces StraighteningFailed
    numeric_points: int = 100        # sample size of numeric certificates
    numeric_tolerance: float = 1e-9
    newton_tolerance: float = 1e-12
    newton_max_iter: int = 100
    newton_max_halvings: int = 30
    sample_radius: Fraction = Fraction(1, 2)   # half-width of the numeric box
    verify_output: bool = True
