"""Shared grids and operator bundles, assembled once per session."""

from __future__ import annotations

import numpy as np
import pytest

from fkdv.assembly import OperatorMatrices, assemble_operators
from fkdv.fem import Grid


@pytest.fixture(scope="session")
def grid64() -> Grid:
    return Grid(0.0, 2.0 * np.pi, 64)


@pytest.fixture(scope="session")
def ops64(grid64: Grid) -> OperatorMatrices:
    """Operators for alpha = 1.5 on the shared 64-element grid."""
    return assemble_operators(grid64, 1.5)
