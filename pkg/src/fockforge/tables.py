"""Lookup tables A(Q, i_low) and incoming-register selectors J.

For an interaction with outgoing legs (q_1..q_g) the table maps a total
momentum Q and a row number to an ordered g-tuple of outgoing momenta that
sums to Q.  Legs of the same particle type are stored in one canonical
order: non-increasing for bosons, strictly decreasing for fermions.  Rows
for a fixed Q run in lexicographically decreasing order.

Counting helpers use a knapsack-style recursion over momentum values, so the
row count and the row width ``a`` are available at large cutoffs without
listing rows.
"""

from __future__ import annotations

import itertools as it
import math
from dataclasses import dataclass, field
from functools import lru_cache


def multichoose(n, k):
    if k == 0:
        return 1
    if n <= 0:
        return 0
    return math.comb(n + k - 1, k)


def leg_groups(particles):
    """Positions of legs sharing a particle type, in first-appearance order."""
    groups = {}
    for pos, p in enumerate(particles):
        groups.setdefault(p, []).append(pos)
    return list(groups.values())


def q_ranges(h, g, cutoffs):
    """Per-dimension window of total momentum reachable by both h incoming
    and g outgoing in-cutoff legs."""
    out = []
    for j, (lo, hi) in enumerate(cutoffs.per_dim):
        qlo, qhi = max(h * lo, g * lo), min(h * hi, g * hi)
        if j == 0 and cutoffs.light_front_q:
            qhi = min(qhi, cutoffs.K)
        out.append((qlo, qhi))
    return tuple(out)


def _in_ranges(Q, ranges):
    return all(lo <= x <= hi for x, (lo, hi) in zip(Q, ranges))


def grid(ranges):
    if any(lo > hi for lo, hi in ranges):
        return []
    return list(it.product(*(range(lo, hi + 1) for lo, hi in ranges)))


def grid_size(ranges):
    return math.prod(max(0, hi - lo + 1) for lo, hi in ranges)


@dataclass
class LookupTable:
    ranges: tuple
    rows: dict = field(default_factory=dict)   # Q -> list of tuples of momenta

    @property
    def a(self):
        return max((len(r) for r in self.rows.values()), default=0)

    @property
    def n_rows(self):
        return sum(len(r) for r in self.rows.values())

    def lookup(self, Q, i_low):
        rows = self.rows.get(tuple(Q))
        if rows is None or not 0 <= i_low < len(rows):
            return None
        return rows[i_low]

    def index_of(self, Q, outgoing):
        rows = self.rows.get(tuple(Q))
        if rows is None:
            return None
        try:
            return rows.index(tuple(outgoing))
        except ValueError:
            return None

    def as_dict(self):
        """{(Q, i_low): tuple} with scalar momenta unwrapped in one dimension."""
        out = {}
        for Q, rows in self.rows.items():
            for il, row in enumerate(rows):
                key = Q[0] if len(Q) == 1 else Q
                val = tuple(n[0] if len(n) == 1 else n for n in row)
                out[(key, il)] = val
        return out


def _ordered_ok(row, particles):
    for a in range(len(row)):
        for b in range(a + 1, len(row)):
            if particles[a] == particles[b]:
                if particles[a].fermionic:
                    if not row[a] > row[b]:
                        return False
                elif not row[a] >= row[b]:
                    return False
    return True


def build_lookup_table(interaction, cutoffs):
    """Materialize every row.  Meant for small cutoffs."""
    particles = [leg.particle for leg in interaction.outgoing]
    ranges = q_ranges(interaction.h, interaction.g, cutoffs)
    table = LookupTable(ranges)
    g = len(particles)
    if g == 0:
        if _in_ranges((0,) * cutoffs.dims, ranges):
            table.rows[(0,) * cutoffs.dims] = [()]
        return table
    moms = sorted(cutoffs.momenta(), reverse=True)
    dims = cutoffs.dims
    lo = [l for l, _ in cutoffs.per_dim]
    hi = [h for _, h in cutoffs.per_dim]

    def rec(prefix, partial):
        left = g - len(prefix)
        if left == 0:
            Q = tuple(partial)
            if _in_ranges(Q, ranges) and _ordered_ok(prefix, particles):
                table.rows.setdefault(Q, []).append(tuple(prefix))
            return
        for n in moms:
            # prune on the reachable window of the final sum
            s = [partial[j] + n[j] for j in range(dims)]
            ok = True
            for j in range(dims):
                rlo, rhi = ranges[j]
                if s[j] + (left - 1) * lo[j] > rhi or s[j] + (left - 1) * hi[j] < rlo:
                    ok = False
                    break
            if ok:
                rec(prefix + [n], s)

    rec([], [0] * dims)
    for rows in table.rows.values():
        rows.sort(reverse=True)
    return table


def _group_counts(size, fermionic, cutoffs):
    """{sum: number of canonical tuples} for one group of identical legs."""
    return dict(_group_counts_cached(size, fermionic, cutoffs.per_dim))


@lru_cache(maxsize=None)
def _group_counts_cached(size, fermionic, per_dim):
    values = list(it.product(*(range(lo, hi + 1) for lo, hi in per_dim)))
    zero = (0,) * len(per_dim)
    # dp[c] = {sum: count} over multisets (or sets) of c values
    dp = [dict() for _ in range(size + 1)]
    dp[0][zero] = 1
    for v in values:
        order = range(size, 0, -1) if fermionic else range(1, size + 1)
        for c in order:
            src = dp[c - 1]
            if not src:
                continue
            dst = dp[c]
            for s, n in list(src.items()):
                t = tuple(a + b for a, b in zip(s, v))
                dst[t] = dst.get(t, 0) + n
    return tuple(dp[size].items())


def table_stats(interaction, cutoffs):
    """(ranges, a, n_rows, counts per Q) without listing rows."""
    particles = [leg.particle for leg in interaction.outgoing]
    ranges = q_ranges(interaction.h, interaction.g, cutoffs)
    zero = (0,) * cutoffs.dims
    total = {zero: 1}
    for grp in leg_groups(particles):
        counts = _group_counts(len(grp), particles[grp[0]].fermionic, cutoffs)
        nxt = {}
        for s1, n1 in total.items():
            for s2, n2 in counts.items():
                t = tuple(a + b for a, b in zip(s1, s2))
                nxt[t] = nxt.get(t, 0) + n1 * n2
        total = nxt
    per_q = {Q: n for Q, n in total.items() if _in_ranges(Q, ranges) and n}
    a = max(per_q.values(), default=0)
    return ranges, a, sum(per_q.values()), per_q


# incoming selectors

def j_rows(interaction, register_count):
    """All selector tuples J in lexicographic order.  Legs of one type take
    non-decreasing register numbers."""
    particles = [leg.particle for leg in interaction.incoming]
    rows = []
    for J in it.product(range(1, register_count + 1), repeat=len(particles)):
        if _j_ok(J, particles):
            rows.append(J)
    return rows


def _j_ok(J, particles):
    for a in range(len(J)):
        for b in range(a + 1, len(J)):
            if particles[a] == particles[b] and J[a] > J[b]:
                return False
    return True


def j_count(interaction, register_count):
    particles = [leg.particle for leg in interaction.incoming]
    return math.prod(multichoose(register_count, len(grp)) for grp in leg_groups(particles))


def j_rank(J, interaction, register_count):
    """Position of J in the order of `j_rows`, by counting smaller tuples."""
    particles = [leg.particle for leg in interaction.incoming]
    h = len(J)
    rank = 0
    for pos in range(h):
        for smaller in range(1, J[pos]):
            prefix = tuple(J[:pos]) + (smaller,)
            if _j_ok(prefix, particles[:pos + 1]):
                rank += _completions(prefix, particles, register_count)
    return rank


def _completions(prefix, particles, register_count):
    """Number of valid selectors extending ``prefix``."""
    pos = len(prefix)
    if pos == len(particles):
        return 1
    total = 1
    for grp in leg_groups(particles):
        fixed = [prefix[p] for p in grp if p < pos]
        free = len([p for p in grp if p >= pos])
        floor = max(fixed) if fixed else 1
        total *= multichoose(register_count - floor + 1, free)
    return total
