"""Market and allocation primitives shared by every mechanism.

Students and schools are dense indices: students 0..n-1, schools 0..m-1.
Market files may use arbitrary integer ids; the loader maps them onto
indices (ascending id order) and keeps the original ids for round-tripping
and reporting.  All algorithmic code works on indices.

Markets and allocations are immutable after construction and every
operation here is a pure function, so instances can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "UNASSIGNED",
    "Market",
    "Allocation",
    "MarketFormatError",
    "UndersuppliedMarketError",
    "UnrankedSchoolError",
    "rank_of",
    "effective_ranks",
    "validate_market",
    "validate_allocation",
    "balance_capacities",
    "load_market",
    "save_market",
]

#: Sentinel used in ``Allocation.assignment`` for students without a seat.
UNASSIGNED = -1


class MarketFormatError(ValueError):
    """Market file cannot be parsed, or the parsed market is invalid."""


class UndersuppliedMarketError(ValueError):
    """Total school capacity cannot seat the student population."""


class UnrankedSchoolError(ValueError):
    """A school was used where the student never ranked it."""


@dataclass(frozen=True)
class Market:
    """A school choice market.

    capacities: seats per school.
    prefs: per student, school indices from most to least preferred.
        Lists may be partial; schools left out are unacceptable to the
        student.
    priorities: per school, student indices from highest to lowest
        priority.  Students left out are unacceptable to the school.
    student_ids / school_ids: external labels (strictly increasing),
        defaulting to 0..n-1 and 0..m-1.
    """

    capacities: tuple[int, ...]
    prefs: tuple[tuple[int, ...], ...]
    priorities: tuple[tuple[int, ...], ...]
    student_ids: tuple[int, ...] = ()
    school_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        object.__setattr__(self, "prefs", tuple(tuple(int(s) for s in p) for p in self.prefs))
        object.__setattr__(
            self, "priorities", tuple(tuple(int(t) for t in p) for p in self.priorities)
        )
        sids = self.student_ids or range(len(self.prefs))
        object.__setattr__(self, "student_ids", tuple(int(i) for i in sids))
        cids = self.school_ids or range(len(self.capacities))
        object.__setattr__(self, "school_ids", tuple(int(i) for i in cids))

    @property
    def n_students(self) -> int:
        return len(self.prefs)

    @property
    def n_schools(self) -> int:
        return len(self.capacities)

    @property
    def total_seats(self) -> int:
        return sum(self.capacities)

    @property
    def is_balanced(self) -> bool:
        """Total capacity equals the number of students."""
        return self.total_seats == self.n_students

    @property
    def has_full_lists(self) -> bool:
        """Every student ranks every school."""
        return all(len(p) == self.n_schools for p in self.prefs)

    # Cached derived views.  cached_property writes straight into
    # __dict__, which is fine on a frozen dataclass; the arrays are
    # marked read-only so sharing them cannot break immutability.

    @cached_property
    def list_lengths(self) -> np.ndarray:
        """(n,) length of each student's preference list."""
        arr = np.fromiter((len(p) for p in self.prefs), dtype=np.int64, count=self.n_students)
        arr.setflags(write=False)
        return arr

    @cached_property
    def rank_table(self) -> np.ndarray:
        """(n, m) 1-based rank of each school for each student.

        Unranked schools get the sentinel m + 2, strictly above every
        effective rank (the worst effective rank is m + 1).
        """
        n, m = self.n_students, self.n_schools
        table = np.full((n, m), m + 2, dtype=np.int64)
        if n and m and all(len(p) == m for p in self.prefs):
            idx = np.asarray(self.prefs, dtype=np.int64)
            table[np.arange(n)[:, None], idx] = np.arange(1, m + 1)[None, :]
        else:
            for t, plist in enumerate(self.prefs):
                if plist:
                    table[t, list(plist)] = np.arange(1, len(plist) + 1)
        table.setflags(write=False)
        return table

    @cached_property
    def priority_table(self) -> np.ndarray:
        """(m, n) 1-based priority position of each student at each school.

        Students a school does not rank get the sentinel n + 2, strictly
        above the n + 1 cutoff used for vacant seats.
        """
        n, m = self.n_students, self.n_schools
        table = np.full((m, n), n + 2, dtype=np.int64)
        if n and m and all(len(p) == n for p in self.priorities):
            idx = np.asarray(self.priorities, dtype=np.int64)
            table[np.arange(m)[:, None], idx] = np.arange(1, n + 1)[None, :]
        else:
            for s, plist in enumerate(self.priorities):
                if plist:
                    table[s, list(plist)] = np.arange(1, len(plist) + 1)
        table.setflags(write=False)
        return table

    @cached_property
    def priority_pos(self) -> tuple[dict[int, int], ...]:
        """Per school, student -> 0-based position in its priority list."""
        return tuple({t: i for i, t in enumerate(p)} for p in self.priorities)


@dataclass(frozen=True)
class Allocation:
    """Per-student school index, or UNASSIGNED."""

    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", tuple(int(s) for s in self.assignment))

    @property
    def n_students(self) -> int:
        return len(self.assignment)

    @property
    def unassigned_count(self) -> int:
        return sum(1 for s in self.assignment if s == UNASSIGNED)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.int64)


def rank_of(market: Market, student: int, school: int) -> int:
    """1-based rank of ``school`` in the student's list.

    ``UNASSIGNED`` gets list length + 1 (the convention used throughout
    the statistics: being unassigned is one worse than the last ranked
    school).  Asking about a school the student never ranked raises
    UnrankedSchoolError; callers must treat such schools as unacceptable.
    """
    plist = market.prefs[student]
    if school == UNASSIGNED:
        return len(plist) + 1
    try:
        return plist.index(school) + 1
    except ValueError:
        raise UnrankedSchoolError(
            f"student {student} does not rank school {school}"
        ) from None


def effective_ranks(market: Market, allocation: Allocation) -> np.ndarray:
    """(n,) effective rank per student: realized rank, or k+1 if unassigned."""
    a = allocation.as_array()
    ranks = market.list_lengths + 1
    assigned = np.nonzero(a >= 0)[0]
    if assigned.size:
        ranks[assigned] = market.rank_table[assigned, a[assigned]]
    return ranks


def validate_market(market: Market) -> list[str]:
    """Every invariant violation with its location; empty list means ok.

    Violations are data, not errors: a malformed market is still a value
    you can inspect.
    """
    n, m = market.n_students, market.n_schools
    problems: list[str] = []
    for s, cap in enumerate(market.capacities):
        if cap < 1:
            problems.append(f"school {s}: capacity must be at least 1, got {cap}")
    for t, plist in enumerate(market.prefs):
        seen: set[int] = set()
        for s in plist:
            if not 0 <= s < m:
                problems.append(f"student {t}: unknown school id {s}")
            elif s in seen:
                problems.append(f"student {t}: duplicate school {s} in preference list")
            seen.add(s)
    if len(market.priorities) != m:
        problems.append(
            f"priorities cover {len(market.priorities)} schools, expected {m}"
        )
    for s, plist in enumerate(market.priorities):
        seen = set()
        for t in plist:
            if not 0 <= t < n:
                problems.append(f"school {s}: unknown student id {t}")
            elif t in seen:
                problems.append(f"school {s}: duplicate student {t} in priority list")
            seen.add(t)
    if len(market.student_ids) != n:
        problems.append("student_ids length does not match number of students")
    elif any(a >= b for a, b in zip(market.student_ids, market.student_ids[1:])):
        problems.append("student_ids must be strictly increasing")
    if len(market.school_ids) != m:
        problems.append("school_ids length does not match number of schools")
    elif any(a >= b for a, b in zip(market.school_ids, market.school_ids[1:])):
        problems.append("school_ids must be strictly increasing")
    return problems


def validate_allocation(market: Market, allocation: Allocation) -> list[str]:
    """Violations of the allocation invariants against ``market``."""
    problems: list[str] = []
    if allocation.n_students != market.n_students:
        problems.append(
            f"allocation covers {allocation.n_students} students, "
            f"market has {market.n_students}"
        )
        return problems
    filled = [0] * market.n_schools
    for t, s in enumerate(allocation.assignment):
        if s == UNASSIGNED:
            continue
        if not 0 <= s < market.n_schools:
            problems.append(f"student {t}: unknown school id {s}")
            continue
        filled[s] += 1
        if s not in market.prefs[t]:
            problems.append(f"student {t}: assigned school {s} they never ranked")
    for s, count in enumerate(filled):
        if count > market.capacities[s]:
            problems.append(
                f"school {s}: {count} students assigned, capacity {market.capacities[s]}"
            )
    return problems


def balance_capacities(market: Market) -> Market:
    """Shrink capacities until total seats equal the student count.

    Surplus seats are removed one at a time from the school with the
    largest remaining capacity (lowest index on ties), never reducing a
    school below one seat unless total demand forces it.  Preferences
    and priorities are untouched; the operation is idempotent.
    """
    surplus = market.total_seats - market.n_students
    if surplus < 0:
        raise UndersuppliedMarketError(
            f"undersupplied market: {market.total_seats} seats for "
            f"{market.n_students} students"
        )
    if surplus == 0:
        return market
    caps = list(market.capacities)
    for _ in range(surplus):
        pool = [s for s, c in enumerate(caps) if c > 1]
        if not pool:
            pool = [s for s, c in enumerate(caps) if c > 0]
        target = max(pool, key=lambda s: (caps[s], -s))
        caps[target] -= 1
    return replace(market, capacities=tuple(caps))


# Market file format (UTF-8 text):
#   [schools]     lines "school_id,capacity"
#   [students]    lines "student_id,pref1;pref2;..."
#   [priorities]  lines "school_id,stud1;stud2;..."   (section optional)
# save_market emits canonical ordering: ids ascending within each section.

_SECTIONS = ("[schools]", "[students]", "[priorities]")


def load_market(path: str | Path) -> Market:
    """Parse a market file; raises MarketFormatError with a line number."""
    # utf-8-sig: tolerate (and strip) a byte-order mark
    lines = Path(path).read_text(encoding="utf-8-sig").splitlines()
    schools: dict[int, int] = {}
    students: dict[int, list[int]] = {}
    priorities: dict[int, list[int]] = {}
    section = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line in _SECTIONS:
            section = line
            continue
        if section is None:
            raise MarketFormatError(f"line {lineno}: content before any section header")
        head, sep, tail = line.partition(",")
        if not sep:
            raise MarketFormatError(f"line {lineno}: expected 'id,...', got {line!r}")
        try:
            ident = int(head)
        except ValueError:
            raise MarketFormatError(f"line {lineno}: bad id {head!r}") from None
        try:
            if section == "[schools]":
                if ident in schools:
                    raise MarketFormatError(f"line {lineno}: duplicate school row {ident}")
                schools[ident] = int(tail)
            else:
                items = [int(tok) for tok in tail.split(";") if tok.strip()]
                if section == "[students]":
                    if ident in students:
                        raise MarketFormatError(
                            f"line {lineno}: duplicate student row {ident}"
                        )
                    students[ident] = items
                else:
                    if ident in priorities:
                        raise MarketFormatError(
                            f"line {lineno}: duplicate priorities row {ident}"
                        )
                    priorities[ident] = items
        except MarketFormatError:
            raise
        except ValueError as exc:
            raise MarketFormatError(f"line {lineno}: {exc}") from None

    if not students:
        raise MarketFormatError("no students")
    if not schools:
        raise MarketFormatError("no schools")

    school_ids = sorted(schools)
    student_ids = sorted(students)
    school_index = {sid: i for i, sid in enumerate(school_ids)}
    student_index = {tid: i for i, tid in enumerate(student_ids)}

    for sid in priorities:
        if sid not in school_index:
            raise MarketFormatError(f"priorities given for unknown school id {sid}")

    def map_schools(tid: int, ids: list[int]) -> tuple[int, ...]:
        out = []
        for sid in ids:
            if sid not in school_index:
                raise MarketFormatError(f"student {tid}: unknown school id {sid}")
            out.append(school_index[sid])
        return tuple(out)

    def map_students(sid: int, ids: list[int]) -> tuple[int, ...]:
        out = []
        for tid in ids:
            if tid not in student_index:
                raise MarketFormatError(f"school {sid}: unknown student id {tid}")
            out.append(student_index[tid])
        return tuple(out)

    market = Market(
        capacities=tuple(schools[sid] for sid in school_ids),
        prefs=tuple(map_schools(tid, students[tid]) for tid in student_ids),
        priorities=tuple(map_students(sid, priorities.get(sid, [])) for sid in school_ids),
        student_ids=tuple(student_ids),
        school_ids=tuple(school_ids),
    )
    problems = validate_market(market)
    if problems:
        raise MarketFormatError("invalid market: " + "; ".join(problems))
    return market


def save_market(market: Market, path: str | Path) -> None:
    """Write ``market`` in the canonical file format (ids ascending)."""
    out = ["[schools]"]
    for s, cap in enumerate(market.capacities):
        out.append(f"{market.school_ids[s]},{cap}")
    out.append("[students]")
    for t, plist in enumerate(market.prefs):
        tokens = ";".join(str(market.school_ids[s]) for s in plist)
        out.append(f"{market.student_ids[t]},{tokens}")
    out.append("[priorities]")
    for s, plist in enumerate(market.priorities):
        tokens = ";".join(str(market.student_ids[t]) for t in plist)
        out.append(f"{market.school_ids[s]},{tokens}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
