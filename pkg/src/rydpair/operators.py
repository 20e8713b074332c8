"""Single-atom multipole and momentum matrix elements with a persistent cache.

A multipole element factorizes into a radial moment and an angular factor,

    <n l j mj| p_{kappa q} |n' l' j' mj'> =
        <n l j| r^kappa |n' l' j'> * <l j mj| sqrt(4 pi/(2 kappa+1)) Y_{kappa q} |l' j' mj'> ,

in units of e a_0^kappa.  Orbital and spin momentum elements use the same
factorization with the radial moment replaced by the radial overlap.

Selection rules (same spin; l + l' + kappa even; |l - l'| <= kappa <= l + l';
|j - j'| <= kappa <= j + j'; mj = mj' + q; |q| <= kappa; and for momentum
operators l = l', |j - j'| <= 1) cull matrix elements before any radial
integration; culling is exact, it only skips work the angular algebra would
zero out anyway.

Radial moments dominate the cost of Stark maps and pair-potential scans and
depend only on the level pair, not on (mj, q), so they are memoized in an
:class:`ElementCache`: an in-memory table in front of an optional SQLite
file.  Entries are keyed by a version stamp derived from the species data
file hash and the radial grid settings, so stale values can never leak
across data or parameter changes.
"""

from __future__ import annotations

import sqlite3
import threading
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .angular import HalfInteger, momentum_angular_element, multipole_angular_element
from .errors import ConfigError
from .radial import DEFAULT_DX, radial_matrix_element
from .species import SpeciesModel, SpeciesRegistry, StateOne


@dataclass(frozen=True, order=True)
class MultipoleElementKey:
    """Cache key of one radial moment: species, canonically ordered level
    pair, moment order, and wave-function method.  mj and q are excluded
    because the angular factor is recomputed cheaply."""

    species: str
    n1: int
    l1: int
    tj1: int
    n2: int
    l2: int
    tj2: int
    kappa: int
    method: str

    @classmethod
    def for_states(cls, bra: StateOne, ket: StateOne, kappa: int, method: str) -> "MultipoleElementKey":
        a = (bra.n, bra.l, bra.j.twice)
        b = (ket.n, ket.l, ket.j.twice)
        if b < a:
            a, b = b, a
        return cls(bra.species, a[0], a[1], a[2], b[0], b[1], b[2], kappa, method)


_SCHEMA = """
CREATE TABLE IF NOT EXISTS elements (
    version TEXT NOT NULL,
    species TEXT NOT NULL,
    n1 INTEGER NOT NULL, l1 INTEGER NOT NULL, tj1 INTEGER NOT NULL,
    n2 INTEGER NOT NULL, l2 INTEGER NOT NULL, tj2 INTEGER NOT NULL,
    kappa INTEGER NOT NULL,
    method TEXT NOT NULL,
    value REAL NOT NULL,
    PRIMARY KEY (version, species, n1, l1, tj1, n2, l2, tj2, kappa, method)
)
"""


class ElementCache:
    """Two-level memoization of radial moments.

    The dictionary layer serves repeated queries within a process; the
    optional SQLite layer (write-ahead journal) persists across runs and
    is shared between processes.  All entries carry the version stamp; a
    stamp change makes old rows invisible rather than deleting them, so
    several parameter sets can share one file.

    A corrupted store is discarded and rebuilt with a warning; the cache
    never returns a value that was not computed under the active stamp.
    """

    def __init__(
        self,
        path: str | Path | None,
        version: str,
        grid_signature: tuple[float, float | None, bool] | None = None,
    ):
        self.version = version
        self.grid_signature = grid_signature
        self.path = str(path) if path is not None else None
        self.hits = 0
        self.misses = 0
        self.computes = 0
        self._lock = threading.Lock()
        self._memory: dict[MultipoleElementKey, float] = {}
        self._conn: sqlite3.Connection | None = None
        if self.path is not None:
            Path(self.path).parent.mkdir(parents=True, exist_ok=True)
            self._connect()

    def _connect(self) -> None:
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute(_SCHEMA)
            self._conn.commit()
        except sqlite3.DatabaseError as exc:
            self._rebuild(exc)

    def _rebuild(self, exc: Exception) -> None:
        warnings.warn(f"element cache {self.path} is corrupted ({exc}); rebuilding", stacklevel=3)
        if self._conn is not None:
            try:
                self._conn.close()
            except sqlite3.DatabaseError:
                pass
            self._conn = None
        Path(self.path).unlink(missing_ok=True)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute(_SCHEMA)
        self._conn.commit()

    def _select(self, key: MultipoleElementKey) -> float | None:
        if self._conn is None:
            return None
        query = (
            "SELECT value FROM elements WHERE version=? AND species=? AND n1=? AND l1=? AND tj1=?"
            " AND n2=? AND l2=? AND tj2=? AND kappa=? AND method=?"
        )
        params = (
            self.version,
            key.species,
            key.n1,
            key.l1,
            key.tj1,
            key.n2,
            key.l2,
            key.tj2,
            key.kappa,
            key.method,
        )
        try:
            row = self._conn.execute(query, params).fetchone()
        except sqlite3.DatabaseError as exc:
            self._rebuild(exc)
            return None
        return None if row is None else float(row[0])

    def _insert(self, key: MultipoleElementKey, value: float) -> None:
        if self._conn is None:
            return
        try:
            self._conn.execute(
                "INSERT OR REPLACE INTO elements VALUES (?,?,?,?,?,?,?,?,?,?,?)",
                (
                    self.version,
                    key.species,
                    key.n1,
                    key.l1,
                    key.tj1,
                    key.n2,
                    key.l2,
                    key.tj2,
                    key.kappa,
                    key.method,
                    value,
                ),
            )
            self._conn.commit()
        except sqlite3.DatabaseError as exc:
            self._rebuild(exc)

    def get_or_compute(self, key: MultipoleElementKey, compute: Callable[[], float]) -> float:
        with self._lock:
            if key in self._memory:
                self.hits += 1
                return self._memory[key]
            stored = self._select(key)
            if stored is not None:
                self.hits += 1
                self._memory[key] = stored
                return stored
            self.misses += 1
        # The integration runs outside the lock so concurrent misses can
        # compute in parallel; identical keys yield identical values, so
        # last-writer-wins is harmless.
        value = float(compute())
        with self._lock:
            self.computes += 1
            self._memory[key] = value
            self._insert(key, value)
        return value

    def stats(self) -> dict:
        with self._lock:
            current = total = 0
            if self._conn is not None:
                try:
                    total = self._conn.execute("SELECT COUNT(*) FROM elements").fetchone()[0]
                    current = self._conn.execute(
                        "SELECT COUNT(*) FROM elements WHERE version=?", (self.version,)
                    ).fetchone()[0]
                except sqlite3.DatabaseError as exc:
                    self._rebuild(exc)
            return {
                "path": self.path,
                "version": self.version,
                "memory_entries": len(self._memory),
                "stored_current_version": current,
                "stored_total": total,
                "hits": self.hits,
                "misses": self.misses,
                "computes": self.computes,
            }

    def clear(self, all_versions: bool = False) -> int:
        """Drop cached entries; returns the number of removed rows."""
        with self._lock:
            self._memory.clear()
            if self._conn is None:
                return 0
            try:
                if all_versions:
                    cur = self._conn.execute("DELETE FROM elements")
                else:
                    cur = self._conn.execute("DELETE FROM elements WHERE version=?", (self.version,))
                self._conn.commit()
                return cur.rowcount
            except sqlite3.DatabaseError as exc:
                self._rebuild(exc)
                return 0

    def close(self) -> None:
        with self._lock:
            if self._conn is not None:
                self._conn.close()
                self._conn = None


def cache_version(
    registry: SpeciesRegistry,
    dx: float = DEFAULT_DX,
    spin_orbit: bool = True,
    r_min_a0: float | None = None,
) -> str:
    """The version stamp tying cached values to the species data file and
    the radial grid settings that produced them."""
    rmin = "auto" if r_min_a0 is None else f"{r_min_a0:g}"
    return f"{registry.file_hash[:16]}:dx={dx:g}:so={int(spin_orbit)}:rmin={rmin}"


def open_cache(
    path: str | Path | None,
    registry: SpeciesRegistry,
    dx: float = DEFAULT_DX,
    spin_orbit: bool = True,
    r_min_a0: float | None = None,
) -> ElementCache:
    """Open (or create) an element cache stamped for the given data file."""
    version = cache_version(registry, dx=dx, spin_orbit=spin_orbit, r_min_a0=r_min_a0)
    return ElementCache(path, version, grid_signature=(dx, r_min_a0, spin_orbit))


def cache_get_or_compute(cache: ElementCache | None, key: MultipoleElementKey, compute: Callable[[], float]) -> float:
    """Memoized lookup; with no cache the value is computed directly."""
    if cache is None:
        return float(compute())
    return cache.get_or_compute(key, compute)


def multipole_selection_allowed(bra: StateOne, ket: StateOne, kappa: int, q: int) -> bool:
    """Selection rules for <bra| p_{kappa q} |ket>; False means exact zero."""
    if abs(q) > kappa:
        return False
    if (bra.l + ket.l + kappa) % 2 != 0:
        return False
    if not abs(bra.l - ket.l) <= kappa <= bra.l + ket.l:
        return False
    if not float(abs(bra.j - ket.j)) <= kappa <= float(bra.j + ket.j):
        return False
    if bra.mj is None or ket.mj is None:
        raise ConfigError("multipole elements need mj on both states")
    if bra.mj != ket.mj + HalfInteger(q):
        return False
    return True


def momentum_selection_allowed(bra: StateOne, ket: StateOne, q: int) -> bool:
    """Selection rules for orbital/spin momentum elements (rank 1)."""
    if abs(q) > 1:
        return False
    if bra.l != ket.l:
        return False
    if float(abs(bra.j - ket.j)) > 1:
        return False
    if bra.mj is None or ket.mj is None:
        raise ConfigError("momentum elements need mj on both states")
    if bra.mj != ket.mj + HalfInteger(q):
        return False
    return True


def _radial_moment(
    model: SpeciesModel,
    bra: StateOne,
    ket: StateOne,
    kappa: int,
    cache: ElementCache | None,
    method: str,
    dx: float,
    r_min_a0: float | None,
    spin_orbit: bool,
) -> float:
    if cache is not None and cache.grid_signature is not None:
        if cache.grid_signature != (dx, r_min_a0, spin_orbit):
            raise ConfigError(
                f"cache was opened for grid settings {cache.grid_signature}, "
                f"query uses {(dx, r_min_a0, spin_orbit)}"
            )
    key = MultipoleElementKey.for_states(bra, ket, kappa, method)
    return cache_get_or_compute(
        cache,
        key,
        lambda: radial_matrix_element(
            model, bra, ket, kappa, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit
        ),
    )


def multipole_element(
    model: SpeciesModel,
    bra: StateOne,
    ket: StateOne,
    kappa: int,
    q: int,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """<bra| p_{kappa q} |ket> in units of e a_0^kappa.

    Real under the chosen phase conventions.  Selection-rule culling short
    circuits to exactly zero before any radial work.
    """
    if bra.species != ket.species or bra.species != model.name:
        raise ConfigError(f"matrix element needs one species, got {bra.species}/{ket.species} on {model.name}")
    if kappa < 1:
        raise ConfigError(f"multipole order must be >= 1, got {kappa}")
    if not multipole_selection_allowed(bra, ket, kappa, q):
        return 0.0
    angular = multipole_angular_element(bra.l, bra.j, bra.mj, kappa, q, ket.l, ket.j, ket.mj)
    if angular == 0.0:
        return 0.0
    radial = _radial_moment(model, bra, ket, kappa, cache, method, dx, r_min_a0, spin_orbit)
    return radial * angular


def scalar_moment(
    model: SpeciesModel,
    bra: StateOne,
    ket: StateOne,
    kappa: int,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """<bra| r^kappa |ket> in units of a_0^kappa.

    r^kappa is a scalar on the angular variables, so the element vanishes
    unless (l, j, mj) coincide; n may differ.
    """
    if bra.species != ket.species or bra.species != model.name:
        raise ConfigError(f"matrix element needs one species, got {bra.species}/{ket.species} on {model.name}")
    if bra.mj is None or ket.mj is None:
        raise ConfigError("scalar elements need mj on both states")
    if (bra.l, bra.j, bra.mj) != (ket.l, ket.j, ket.mj):
        return 0.0
    return _radial_moment(model, bra, ket, kappa, cache, method, dx, r_min_a0, spin_orbit)


def momentum_element(
    model: SpeciesModel,
    bra: StateOne,
    operator: str,
    q: int,
    ket: StateOne,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """<bra| l_{1q} |ket> or <bra| s_{1q} |ket> in units of hbar.

    The momentum operators act on the angular variables only, so the
    radial factor is the overlap of the two radial wave functions (unity
    for identical levels, small for different n at equal l).
    """
    if bra.species != ket.species or bra.species != model.name:
        raise ConfigError(f"matrix element needs one species, got {bra.species}/{ket.species} on {model.name}")
    if operator not in ("l", "s"):
        raise ConfigError(f"momentum operator must be 'l' or 's', got {operator!r}")
    if not momentum_selection_allowed(bra, ket, q):
        return 0.0
    angular = momentum_angular_element(operator, bra.l, bra.j, bra.mj, q, ket.j, ket.mj)
    if angular == 0.0:
        return 0.0
    overlap = _radial_moment(model, bra, ket, 0, cache, method, dx, r_min_a0, spin_orbit)
    return overlap * angular
