"""Dense complex matrices with labeled block structure.

Index spaces are ordered label lists (field, channel-1, channel-2, bin)
flattened into one axis; every matrix carries its row and column space so
that compositions are dimension- and meaning-checked.  Two channel
conventions appear: mode spaces label (direction, polarization) per field
and continuity-row spaces label (field class 'E'|'H', polarization).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix

FIELDS = ("s", "i")  # 'i' entries carry idler creation-operator components
MODE_CHANNELS = (("F", "x"), ("B", "x"), ("F", "y"), ("B", "y"))
ROW_CHANNELS = (("E", "x"), ("E", "y"), ("H", "x"), ("H", "y"))


@dataclass(frozen=True)
class Space:
    """Ordered index space: fields x channels x bins."""

    name: str
    bins: int
    channels: tuple = MODE_CHANNELS

    @property
    def dim(self) -> int:
        return len(FIELDS) * len(self.channels) * self.bins

    def offset(self, field: str, c1: str, c2: str) -> slice:
        fi = FIELDS.index(field)
        ci = self.channels.index((c1, c2))
        start = (fi * len(self.channels) + ci) * self.bins
        return slice(start, start + self.bins)

    def labels(self):
        for f in FIELDS:
            for c1, c2 in self.channels:
                for k in range(self.bins):
                    yield (f, c1, c2, k)

    def compatible(self, other: "Space") -> bool:
        return self.bins == other.bins and self.channels == other.channels


def mode_space(name: str, bins: int) -> Space:
    return Space(name, bins, MODE_CHANNELS)


def row_space(name: str, bins: int) -> Space:
    return Space(name, bins, ROW_CHANNELS)


class BlockMatrix:
    """Complex matrix together with its row/column index spaces."""

    def __init__(self, row: Space, col: Space, data=None):
        self.row = row
        self.col = col
        if data is None:
            data = np.zeros((row.dim, col.dim), dtype=complex)
        data = np.asarray(data, dtype=complex)
        if data.shape != (row.dim, col.dim):
            raise ValueError(
                f"data shape {data.shape} does not match spaces "
                f"({row.dim}, {col.dim})"
            )
        self.data = data

    @classmethod
    def identity(cls, space: Space) -> "BlockMatrix":
        return cls(space, space, np.eye(space.dim, dtype=complex))

    def block(self, rlabel, clabel):
        return self.data[self.row.offset(*rlabel), self.col.offset(*clabel)]

    def set_block(self, rlabel, clabel, values):
        self.data[self.row.offset(*rlabel), self.col.offset(*clabel)] = values

    def add_block(self, rlabel, clabel, values):
        self.data[self.row.offset(*rlabel), self.col.offset(*clabel)] += values

    def __matmul__(self, other: "BlockMatrix") -> "BlockMatrix":
        if not self.col.compatible(other.row):
            raise ValueError(
                f"cannot compose {self.col.name} with {other.row.name}"
            )
        return BlockMatrix(self.row, other.col, self.data @ other.data)

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix(self.row, self.col, self.data + other.data)

    def __sub__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix(self.row, self.col, self.data - other.data)

    def __neg__(self) -> "BlockMatrix":
        return BlockMatrix(self.row, self.col, -self.data)

    def scaled(self, factor) -> "BlockMatrix":
        return BlockMatrix(self.row, self.col, factor * self.data)

    def solve(self, rhs: "BlockMatrix", context="") -> "BlockMatrix":
        """self^{-1} @ rhs with a singularity check."""
        if not self.row.compatible(rhs.row):
            raise ValueError("row spaces differ in solve")
        try:
            out = np.linalg.solve(self.data, rhs.data)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(f"singular matrix {context or self.row.name}") from exc
        if not np.all(np.isfinite(out)):
            raise SingularMatrix(f"non-finite solve result {context}")
        return BlockMatrix(self.col, rhs.col, out)

    def inv(self, context="") -> "BlockMatrix":
        return self.solve(BlockMatrix.identity(self.row), context)

    def condition_number(self) -> float:
        """1-norm condition estimate (exact inverse; matrices are small)."""
        try:
            inv = np.linalg.inv(self.data)
        except np.linalg.LinAlgError:
            return np.inf
        return float(
            np.linalg.norm(self.data, 1) * np.linalg.norm(inv, 1)
        )

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def copy(self) -> "BlockMatrix":
        return BlockMatrix(self.row, self.col, self.data.copy())

    def write_csv(self, path):
        """Dump with human-readable row/column labels."""
        rlabels = ["/".join(map(str, lab)) for lab in self.row.labels()]
        clabels = ["/".join(map(str, lab)) for lab in self.col.labels()]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("row\\col," + ",".join(clabels) + "\n")
            for i, rl in enumerate(rlabels):
                vals = ",".join(
                    f"{v.real:.17g}{v.imag:+.17g}j" for v in self.data[i]
                )
                fh.write(rl + "," + vals + "\n")
