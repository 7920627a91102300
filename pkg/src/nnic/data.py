"""Sample containers, domains, and CSV ingestion."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DataFormatError, DomainError

__all__ = ["Domain", "Dataset", "as_sample_matrix", "read_csv", "write_csv"]

TWO_PI = 2.0 * np.pi


class Domain(enum.Enum):
    """Sample space tag attached to each model family."""

    REALS = "reals"
    NONNEG = "nonneg"
    POSITIVE = "positive"
    TORUS = "torus"

    def contains(self, x):
        """Elementwise membership for a batch ``x`` of shape (n, d)."""
        x = np.asarray(x, dtype=float)
        finite = np.all(np.isfinite(x), axis=-1)
        if self is Domain.REALS:
            return finite
        if self is Domain.NONNEG:
            return finite & np.all(x >= 0.0, axis=-1)
        if self is Domain.POSITIVE:
            return finite & np.all(x > 0.0, axis=-1)
        return finite & np.all((x >= 0.0) & (x < TWO_PI), axis=-1)


def as_sample_matrix(x, d):
    """Coerce ``x`` to a float (n, d) matrix.

    Accepts (n, d) arrays; for d = 1 also scalars and flat (n,) arrays.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and d == 1:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        if d == 1:
            x = x.reshape(-1, 1)
        elif x.shape[0] == d:
            x = x.reshape(1, d)
        else:
            raise ValueError(f"cannot interpret shape {x.shape} as points in {d} dimensions")
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"expected an (n, {d}) sample matrix, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Dataset:
    """An (n, d) sample matrix tagged with the domain it lives on."""

    x: np.ndarray
    domain: Domain

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValueError(f"dataset must be a non-empty 2-D matrix, got shape {x.shape}")
        inside = self.domain.contains(x)
        if not np.all(inside):
            row = int(np.flatnonzero(~inside)[0])
            raise DomainError(f"row {row + 1} lies outside domain '{self.domain.value}'")
        object.__setattr__(self, "x", x)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]


def read_csv(path):
    """Read an (n, d) sample matrix from a ``x1,...,xd`` headed CSV file.

    Raises :class:`DataFormatError` with a 1-based line number for a bad
    header, a row of the wrong arity, or a non-numeric field.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    lines = [line for line in lines if line.strip() != ""]
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = [field.strip() for field in lines[0].split(",")]
    expected = [f"x{i}" for i in range(1, len(header) + 1)]
    if header != expected:
        raise DataFormatError(
            f"{path}, line 1: header must be {','.join(expected)} (got {','.join(header)})"
        )
    d = len(header)
    rows = np.empty((len(lines) - 1, d))
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != d:
            raise DataFormatError(
                f"{path}, line {lineno}: expected {d} fields, got {len(fields)}"
            )
        try:
            rows[lineno - 2] = [float(field) for field in fields]
        except ValueError:
            raise DataFormatError(f"{path}, line {lineno}: non-numeric field") from None
    if rows.shape[0] == 0:
        raise DataFormatError(f"{path}: no data rows")
    return rows


def write_csv(path, x):
    """Write an (n, d) sample matrix with the ``x1,...,xd`` header.

    Floats are written with shortest round-trip precision, so reading the
    file back reproduces the array bit for bit.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    header = ",".join(f"x{i}" for i in range(1, x.shape[1] + 1))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(header + "\n")
        for row in x:
            handle.write(",".join(repr(float(v)) for v in row) + "\n")
