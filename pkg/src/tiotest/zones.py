"""Difference-bound matrices, clock regions and bounded difference relations.

A bound is a pair ``(value, flag)`` where ``flag`` is 1 for a non-strict
bound (``<=``) and 0 for a strict one (``<``).  Python tuple ordering then
matches the usual ordering of difference bounds: ``(v, 0) < (v, 1)``.  The
unbounded entry is ``INF_BOUND``.  Values are ints, or Fractions when a zone
carries rational timestamps.

A ``Dbm`` over clocks ``x1..xn`` stores ``d[i][j]`` bounding ``xi - xj``
with index 0 the constant-zero reference clock.  Every public operation
returns a canonical (shortest-path closed) matrix, so structural equality is
set equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

Number = Union[int, Fraction]
Bound = tuple

INF = float("inf")
INF_BOUND: Bound = (INF, 0)
LE_ZERO: Bound = (0, 1)
LT_ZERO: Bound = (0, 0)


class EmptyZoneError(ValueError):
    """Raised when an operation needs a nonempty zone."""

    code = "EMPTY_ZONE"


def _norm(value: Number) -> Number:
    # integral Fractions become ints; int arithmetic is much cheaper
    if type(value) is Fraction and value.denominator == 1:
        return value.numerator
    return value


def le(value: Number) -> Bound:
    return (_norm(value), 1)


def lt(value: Number) -> Bound:
    return (_norm(value), 0)


def add_bounds(a: Bound, b: Bound) -> Bound:
    # identity tests on INF are a fast path only; float infinity arithmetic
    # would give the same result
    if a[0] is INF or b[0] is INF:
        return INF_BOUND
    return (a[0] + b[0], a[1] & b[1])


def negate_bound(b: Bound) -> Bound:
    """Bound of the complement half-space: not (x <= v) is (-x < -v)."""
    return (-b[0], 1 - b[1])


def _close(m: list[Bound], n: int) -> bool:
    """Floyd-Warshall in place; returns False if the zone is empty."""
    for k in range(n):
        rk = k * n
        for i in range(n):
            ri = i * n
            dik = m[ri + k]
            if dik[0] is INF:
                continue
            for j in range(n):
                dkj = m[rk + j]
                if dkj[0] is INF:
                    continue
                s = (dik[0] + dkj[0], dik[1] & dkj[1])
                if s < m[ri + j]:
                    m[ri + j] = s
        if m[k * n + k] < LE_ZERO:
            return False
    for i in range(n):
        if m[i * n + i] < LE_ZERO:
            return False
    return True


def _empty_matrix(n: int) -> tuple[Bound, ...]:
    return tuple([(-1, 0)] * (n * n))


@dataclass(frozen=True)
class Dbm:
    """A canonical zone over ``clocks`` (reference clock implicit at index 0)."""

    clocks: tuple[str, ...]
    m: tuple[Bound, ...]

    # construction -----------------------------------------------------

    @staticmethod
    def universe(clocks: Sequence[str]) -> Dbm:
        n = len(clocks) + 1
        m = [INF_BOUND] * (n * n)
        for i in range(n):
            m[i * n + i] = LE_ZERO
            m[i] = LE_ZERO
        return Dbm(tuple(clocks), tuple(m))

    @staticmethod
    def zero(clocks: Sequence[str]) -> Dbm:
        n = len(clocks) + 1
        return Dbm(tuple(clocks), tuple([LE_ZERO] * (n * n)))

    @staticmethod
    def empty(clocks: Sequence[str]) -> Dbm:
        return Dbm(tuple(clocks), _empty_matrix(len(clocks) + 1))

    @staticmethod
    def from_matrix(clocks: Sequence[str], m: Iterable[Bound]) -> Dbm:
        """Canonicalize a raw matrix (row-major, reference first)."""
        n = len(clocks) + 1
        raw = list(m)
        if len(raw) != n * n:
            raise ValueError("matrix size does not match clocks")
        if not _close(raw, n):
            return Dbm.empty(clocks)
        return Dbm(tuple(clocks), tuple(raw))

    @staticmethod
    def point(clocks: Sequence[str], valuation: Mapping[str, Number]) -> Dbm:
        z = Dbm.universe(clocks)
        for c in clocks:
            v = valuation[c]
            z = z.constrain(c, None, le(v)).constrain(None, c, le(-v))
        return z

    # basic queries ----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.clocks) + 1

    def index(self, clock: str | None) -> int:
        return 0 if clock is None else self.clocks.index(clock) + 1

    def get(self, i: int, j: int) -> Bound:
        return self.m[i * self.dim + j]

    def bound(self, x: str | None, y: str | None) -> Bound:
        """Canonical bound on ``x - y`` (None is the reference clock)."""
        return self.get(self.index(x), self.index(y))

    def is_empty(self) -> bool:
        return self.m[0] < LE_ZERO

    def __bool__(self) -> bool:
        return not self.is_empty()

    def includes(self, other: Dbm) -> bool:
        """Set inclusion ``other <= self`` for zones over the same clocks."""
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        return all(b <= a for a, b in zip(self.m, other.m))

    def contains_point(self, valuation: Mapping[str, Number]) -> bool:
        if self.is_empty():
            return False
        vals = [0] + [valuation[c] for c in self.clocks]
        n = self.dim
        for i in range(n):
            for j in range(n):
                b = self.m[i * n + j]
                if b[0] == INF:
                    continue
                d = vals[i] - vals[j]
                if d > b[0] or (d == b[0] and not b[1]):
                    return False
        return True

    # set operations -----------------------------------------------------

    def constrain(self, x: str | None, y: str | None, b: Bound) -> Dbm:
        """Intersect with ``x - y`` bounded by ``b``."""
        if self.is_empty():
            return self
        i, j = self.index(x), self.index(y)
        n = self.dim
        if b >= self.m[i * n + j]:
            return self
        if add_bounds(b, self.m[j * n + i]) < LE_ZERO:
            return Dbm.empty(self.clocks)
        m = list(self.m)
        m[i * n + j] = b
        # incremental closure through the tightened edge
        for p in range(n):
            dpi = m[p * n + i]
            if dpi[0] is INF:
                continue
            for q in range(n):
                djq = m[j * n + q]
                if djq[0] is INF:
                    continue
                s = add_bounds(add_bounds(dpi, b), djq)
                if s < m[p * n + q]:
                    m[p * n + q] = s
        for p in range(n):
            if m[p * n + p] < LE_ZERO:
                return Dbm.empty(self.clocks)
        return Dbm(self.clocks, tuple(m))

    def intersect(self, other: Dbm) -> Dbm:
        _same_clocks(self, other)
        if self.is_empty():
            return self
        if other.is_empty():
            return other
        m = [a if a <= b else b for a, b in zip(self.m, other.m)]
        if m == list(self.m):
            return self
        if m == list(other.m):
            return other
        return Dbm.from_matrix(self.clocks, m)

    def up(self) -> Dbm:
        """Time successors (delay by any nonnegative amount)."""
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for i in range(1, n):
            m[i * n] = INF_BOUND
        return Dbm(self.clocks, tuple(m))

    def down(self) -> Dbm:
        """Time predecessors within the nonnegative orthant."""
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for i in range(1, n):
            best = LE_ZERO
            for j in range(1, n):
                if m[j * n + i] < best:
                    best = m[j * n + i]
            m[i] = best
        return Dbm(self.clocks, tuple(m))

    def reset(self, clocks: Iterable[str], value: int = 0) -> Dbm:
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for c in clocks:
            x = self.index(c)
            for j in range(n):
                m[x * n + j] = add_bounds(le(value), m[j]) if j != x else LE_ZERO
                m[j * n + x] = add_bounds(m[j * n], le(-value)) if j != x else LE_ZERO
        return Dbm(self.clocks, tuple(m))

    def free(self, clocks: Iterable[str]) -> Dbm:
        """Existentially quantify ``clocks`` (they become arbitrary >= 0)."""
        if self.is_empty():
            return self
        n = self.dim
        m = list(self.m)
        for c in clocks:
            x = self.index(c)
            for j in range(n):
                if j != x:
                    m[x * n + j] = INF_BOUND
                    m[j * n + x] = m[j * n]
        return Dbm(self.clocks, tuple(m))

    def extrapolate(self, bounds: Mapping[str, int] | int) -> Dbm:
        """Classical maximal-constant extrapolation."""
        if self.is_empty():
            return self
        n = self.dim
        k = [0] + [
            bounds if isinstance(bounds, int) else bounds.get(c, 0) for c in self.clocks
        ]
        m = list(self.m)
        changed = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                b = m[i * n + j]
                if b[0] != INF and b > le(k[i]):
                    m[i * n + j] = INF_BOUND
                    changed = True
                elif b < lt(-k[j]):
                    m[i * n + j] = lt(-k[j])
                    changed = True
        if not changed:
            return self
        return Dbm.from_matrix(self.clocks, m)

    def project(self, keep: Sequence[str]) -> Dbm:
        """Existential projection onto ``keep`` (in the given order)."""
        if self.is_empty():
            return Dbm.empty(keep)
        idx = [0] + [self.index(c) for c in keep]
        n = self.dim
        return Dbm(tuple(keep), tuple(self.m[i * n + j] for i in idx for j in idx))

    def embed(self, clocks: Sequence[str]) -> Dbm:
        """Re-express over a superset clock list; new clocks are unconstrained."""
        if tuple(clocks) == self.clocks:
            return self
        if self.is_empty():
            return Dbm.empty(clocks)
        target = Dbm.universe(clocks)
        n, t = self.dim, len(clocks) + 1
        pos = [0] + [list(clocks).index(c) + 1 for c in self.clocks]
        m = list(target.m)
        for i in range(n):
            for j in range(n):
                m[pos[i] * t + pos[j]] = self.m[i * n + j]
        return Dbm.from_matrix(clocks, m)

    def rename(self, mapping: Mapping[str, str]) -> Dbm:
        return Dbm(tuple(mapping.get(c, c) for c in self.clocks), self.m)

    def subtract(self, other: Dbm) -> list[Dbm]:
        """Pairwise-disjoint zones whose union is ``self \\ other``."""
        _same_clocks(self, other)
        if self.is_empty():
            return []
        if other.is_empty() or self.intersect(other).is_empty():
            return [self]
        out: list[Dbm] = []
        rest = self
        n = self.dim
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                b = other.m[i * n + j]
                if b[0] == INF or b >= rest.m[i * n + j]:
                    continue
                x = None if i == 0 else self.clocks[i - 1]
                y = None if j == 0 else self.clocks[j - 1]
                outside = rest.constrain(y, x, negate_bound(b))
                if not outside.is_empty():
                    out.append(outside)
                rest = rest.constrain(x, y, b)
                if rest.is_empty():
                    return out
        return out

    def upper(self, clock: str) -> Bound:
        return self.bound(clock, None)

    def lower(self, clock: str) -> Bound:
        """Lower bound of ``clock`` as the bound on ``0 - clock``."""
        return self.bound(None, clock)

    def sample(self) -> dict[str, Fraction]:
        """Some rational point of a nonempty zone (deterministic)."""
        if self.is_empty():
            raise EmptyZoneError("cannot sample an empty zone")
        z = self
        out: dict[str, Fraction] = {}
        for c in self.clocks:
            lo_b, hi_b = z.lower(c), z.upper(c)
            lo = Fraction(-lo_b[0])
            if hi_b[0] == INF:
                v = lo if lo_b[1] else lo + Fraction(1, 2)
            else:
                hi = Fraction(hi_b[0])
                if lo_b[1]:
                    v = lo
                elif hi_b[1] and hi == lo:
                    v = hi
                else:
                    v = lo + (hi - lo) / 2
            out[c] = v
            z = z.constrain(c, None, le(v)).constrain(None, c, le(-v))
        return out

    def atoms(self) -> list[tuple[str, str | None, str, Number]]:
        """A readable constraint list ``(x, y, op, c)`` describing the zone.

        Rectangular atoms come first; a difference atom is listed only when
        the rectangular part alone does not imply it.
        """
        if self.is_empty():
            return [("0", None, "<", 0)]
        out: list[tuple[str, str | None, str, Number]] = []
        rect = Dbm.universe(self.clocks)
        for c in self.clocks:
            lo, hi = self.lower(c), self.upper(c)
            if hi[0] != INF and lo == (-hi[0], 1) and hi[1]:
                out.append((c, None, "=", hi[0]))
            else:
                if lo != LE_ZERO:
                    out.append((c, None, ">=" if lo[1] else ">", -lo[0]))
                if hi[0] != INF:
                    out.append((c, None, "<=" if hi[1] else "<", hi[0]))
            rect = rect.constrain(c, None, hi).constrain(None, c, lo)
        for a, b in itertools.combinations(self.clocks, 2):
            up, down = self.bound(a, b), self.bound(b, a)
            need_up = up < rect.bound(a, b)
            need_down = down < rect.bound(b, a)
            if need_up and need_down and up[1] and down == (-up[0], 1):
                out.append((a, b, "=", up[0]))
                continue
            if need_up:
                out.append((a, b, "<=" if up[1] else "<", up[0]))
            if need_down:
                out.append((a, b, ">=" if down[1] else ">", -down[0]))
        return out

    def __str__(self) -> str:
        atoms = self.atoms()
        if not atoms:
            return "true"
        parts = []
        for x, y, op, c in atoms:
            lhs = x if y is None else f"{x}-{y}"
            parts.append(f"{lhs}{op}{c}")
        return " && ".join(parts)


def _same_clocks(a: Dbm, b: Dbm) -> None:
    if a.clocks != b.clocks:
        raise ValueError(f"clock mismatch: {a.clocks} vs {b.clocks}")


# federations (finite unions of zones) -------------------------------------


def fed_subtract(zs: Sequence[Dbm], others: Sequence[Dbm]) -> list[Dbm]:
    out = [z for z in zs if not z.is_empty()]
    for o in others:
        nxt: list[Dbm] = []
        for z in out:
            nxt.extend(z.subtract(o))
        out = nxt
        if not out:
            break
    return out


def fed_is_empty(zs: Sequence[Dbm]) -> bool:
    return all(z.is_empty() for z in zs)


def fed_includes(big: Sequence[Dbm], small: Sequence[Dbm]) -> bool:
    return not fed_subtract(small, big)


def fed_equal(a: Sequence[Dbm], b: Sequence[Dbm]) -> bool:
    return fed_includes(a, b) and fed_includes(b, a)


def fed_intersect(a: Sequence[Dbm], b: Sequence[Dbm]) -> list[Dbm]:
    out = []
    for x in a:
        for y in b:
            z = x.intersect(y)
            if not z.is_empty():
                out.append(z)
    return out


def fed_disjoint(zs: Sequence[Dbm]) -> list[Dbm]:
    """Rewrite a union as pairwise-disjoint zones."""
    out: list[Dbm] = []
    for z in zs:
        out.extend(fed_subtract([z], out))
    return out


def fed_reduce(zs: Iterable[Dbm]) -> list[Dbm]:
    """Drop empty zones and zones included in another one."""
    items = [z for z in zs if not z.is_empty()]
    kept: list[Dbm] = []
    for i, z in enumerate(items):
        dominated = False
        for j, w in enumerate(items):
            if i != j and w.includes(z) and (not z.includes(w) or j < i):
                dominated = True
                break
        if not dominated:
            kept.append(z)
    return kept


def fed_contains_point(zs: Sequence[Dbm], valuation: Mapping[str, Number]) -> bool:
    return any(z.contains_point(valuation) for z in zs)


# regions ---------------------------------------------------------------------


def _frac(v: Fraction) -> Fraction:
    return v - (v.numerator // v.denominator)


def region_of(valuation: Mapping[str, Number], clocks: Sequence[str], max_const: int) -> Dbm:
    """The region (for ``max_const``) containing a nonnegative valuation."""
    vals = {c: Fraction(valuation[c]) for c in clocks}
    z = Dbm.universe(clocks)
    for c in clocks:
        v = vals[c]
        if v > max_const:
            z = z.constrain(None, c, lt(-max_const))
        elif _frac(v) == 0:
            z = z.constrain(c, None, le(int(v))).constrain(None, c, le(-int(v)))
        else:
            f = int(v - _frac(v))
            z = z.constrain(c, None, lt(f + 1)).constrain(None, c, lt(-f))
    inside = [c for c in clocks if vals[c] <= max_const]
    for a, b in itertools.combinations(inside, 2):
        d = vals[a] - vals[b]
        if _frac(d) == 0:
            z = z.constrain(a, b, le(int(d))).constrain(b, a, le(-int(d)))
        else:
            f = int(d - _frac(d))
            z = z.constrain(a, b, lt(f + 1)).constrain(b, a, lt(-f))
    return z


def is_region(z: Dbm, max_const: int) -> bool:
    if z.is_empty():
        return False
    return region_of(z.sample(), z.clocks, max_const) == z


@lru_cache(maxsize=None)
def enumerate_regions(clocks: tuple[str, ...], max_const: int) -> tuple[Dbm, ...]:
    """All regions over ``clocks`` for ``max_const``, in a fixed order."""
    n = len(clocks)
    den = n + 1
    values = [Fraction(i, den) for i in range((max_const + 1) * den + 1)]
    seen: dict[Dbm, None] = {}
    for combo in itertools.product(values, repeat=n):
        r = region_of(dict(zip(clocks, combo)), clocks, max_const)
        seen.setdefault(r, None)
    return tuple(seen)


def _next_point(v: dict[str, Fraction], max_const: int) -> dict[str, Fraction] | None:
    inside = [c for c in v if v[c] <= max_const]
    if not inside:
        return None
    fracs = [_frac(v[c]) for c in inside]
    if any(f == 0 for f in fracs):
        gaps = [1 - f for f in fracs if f > 0]
        delta = min(gaps) / 2 if gaps else Fraction(1, 2)
    else:
        delta = 1 - max(fracs)
    return {c: x + delta for c, x in v.items()}


@lru_cache(maxsize=None)
def time_successor_regions(r: Dbm, max_const: int) -> tuple[Dbm, ...]:
    """Regions met by letting time elapse from ``r`` (``r`` first)."""
    out = [r]
    v = r.sample()
    while True:
        nv = _next_point(v, max_const)
        if nv is None:
            break
        nr = region_of(nv, r.clocks, max_const)
        if nr != out[-1]:
            out.append(nr)
        v = nv
    return tuple(out)


def widen_region(r: Dbm, max_const: int) -> Dbm:
    """Smallest ``max_const``-region containing a region for a larger constant."""
    return region_of(r.sample(), r.clocks, max_const)


# relations -----------------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    """A closed conjunction of bounds on clock differences (no reference clock).

    ``diff[i*n + j]`` bounds ``clocks[i] - clocks[j]``.
    """

    clocks: tuple[str, ...]
    diff: tuple[Bound, ...]
    max_const: int

    @staticmethod
    def equal_clocks(clocks: Sequence[str], max_const: int) -> Relation:
        n = len(clocks)
        return Relation(tuple(clocks), tuple([LE_ZERO] * (n * n)), max_const)

    def bound(self, x: str, y: str) -> Bound:
        n = len(self.clocks)
        return self.diff[self.clocks.index(x) * n + self.clocks.index(y)]

    def to_dbm(self) -> Dbm:
        """The relation as a zone of nonnegative valuations."""
        n = len(self.clocks)
        t = n + 1
        m = list(Dbm.universe(self.clocks).m)
        for i in range(n):
            for j in range(n):
                m[(i + 1) * t + j + 1] = self.diff[i * n + j]
        return Dbm.from_matrix(self.clocks, m)

    def __str__(self) -> str:
        parts = []
        for a, b in itertools.combinations(self.clocks, 2):
            up, down = self.bound(a, b), self.bound(b, a)
            if up[0] != INF and up[1] and down == (-up[0], 1):
                parts.append(f"{a}-{b}={up[0]}")
                continue
            lo = "" if down[0] == INF else f"{-down[0]}{'<=' if down[1] else '<'}"
            hi = "" if up[0] == INF else f"{'<=' if up[1] else '<'}{up[0]}"
            if lo or hi:
                parts.append(f"{lo}{a}-{b}{hi}")
        return " && ".join(parts) if parts else "true"


def _widen_bound(b: Bound, max_const: int) -> Bound:
    if b[0] == INF:
        return b
    if b[0] > max_const:
        return INF_BOUND
    if b[0] < -max_const:
        return lt(-max_const)
    return b


def hull_relation(z: Dbm, max_const: int) -> Relation:
    """Least relation with constants in ``[-M, M]`` containing the zone ``z``."""
    if z.is_empty():
        raise EmptyZoneError("hull of an empty zone")
    n = len(z.clocks)
    diff = [INF_BOUND] * (n * n)
    for i in range(n):
        for j in range(n):
            diff[i * n + j] = LE_ZERO if i == j else _widen_bound(z.get(i + 1, j + 1), max_const)
    _close(diff, n)
    return Relation(z.clocks, tuple(diff), max_const)


def induced_guard(region: Dbm, relation: Relation, keep: Sequence[str]) -> Dbm:
    """Projection onto ``keep`` of ``region`` intersected with ``relation``."""
    full = relation.to_dbm()
    return full.intersect(region.embed(full.clocks)).project(keep)
