"""Tabulated spectra: rows of (E, N, gamma, err, method) with metadata."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = ["DosTable", "CSV_HEADER"]

CSV_HEADER = ("E", "N", "gamma", "err", "method")


def _fmt(x: float) -> str:
    # repr round-trips and is locale independent
    return repr(float(x))


@dataclass
class DosTable:
    """Integrated density of states and Lyapunov exponent on an energy grid.

    Parameters
    ----------
    E, N, gamma, err : array_like
        Columns; ``E`` must be strictly increasing.
    method : list of str
        Route used for each row.
    metadata : dict
        ``spec`` (JSON text), ``grid``, ``seed`` and ``version``.
    """

    E: np.ndarray
    N: np.ndarray
    gamma: np.ndarray
    err: np.ndarray
    method: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float)
        self.N = np.asarray(self.N, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.err = np.asarray(self.err, dtype=float)
        if isinstance(self.method, str):
            self.method = [self.method] * self.E.size
        self.method = list(self.method)
        n = self.E.size
        if not all(a.size == n for a in (self.N, self.gamma, self.err)) or len(self.method) != n:
            raise DomainError("DosTable columns must have equal length")
        if n > 1 and not np.all(np.diff(self.E) > 0):
            raise DomainError("DosTable energies must be strictly increasing")

    def __len__(self):
        return self.E.size

    def rows(self):
        return list(zip(self.E, self.N, self.gamma, self.err, self.method))

    def is_monotone(self) -> bool:
        """N non-decreasing within the quoted errors, separately per method."""
        for m in set(self.method):
            sel = np.array([mm == m for mm in self.method])
            n, e = self.N[sel], np.nan_to_num(self.err[sel], nan=0.0, posinf=0.0)
            if np.any(np.diff(n) < -(e[1:] + e[:-1]) - 1e-14 * np.abs(n[1:])):
                return False
        return True

    # -- I/O ---------------------------------------------------------------
    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for E, N, g, e, m in self.rows():
            w.writerow([_fmt(E), _fmt(N), _fmt(g), _fmt(e), m])
        return buf.getvalue()

    def write(self, path) -> tuple[Path, Path]:
        """Write ``path`` (CSV) and ``path + '.json'`` (metadata)."""
        path = Path(path)
        path.write_text(self.to_csv_text())
        side = path.with_name(path.name + ".json")
        side.write_text(json.dumps(self.metadata, indent=2, sort_keys=True))
        return path, side

    @classmethod
    def from_csv_text(cls, text: str, metadata=None) -> "DosTable":
        rd = csv.reader(io.StringIO(text))
        header = tuple(next(rd))
        if header != CSV_HEADER:
            raise DomainError(f"unexpected header {header}")
        cols = list(zip(*rd)) or [(), (), (), (), ()]
        return cls(*(np.array([float(v) for v in c]) for c in cols[:4]), list(cols[4]),
                   metadata or {})

    @classmethod
    def read(cls, path) -> "DosTable":
        path = Path(path)
        side = path.with_name(path.name + ".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        return cls.from_csv_text(path.read_text(), meta)
