"""Combinatorial index maps h, h', H^n, H'^n and their exhaustive audits.

The maps route pair/triple index terms into shared buckets; the audits
certify the two properties everything downstream leans on: H^n never
produces the same bucket twice, and H'^n produces at most 5 copies.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

__all__ = [
    "AUDIT_CAP",
    "Triple",
    "h",
    "h_prime",
    "H_n",
    "H_prime_n",
    "audit_H",
    "audit_H_prime",
    "HashAuditReport",
]

AUDIT_CAP = 60


class Triple(NamedTuple):
    a: int
    b: int
    c: int


def _check_n(n: int) -> None:
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")


def h(i: int, n: int) -> int:
    """Bucket index for i in [n]; lands in [n] and never equals i."""
    _check_n(n)
    if not 1 <= i <= n:
        raise ValueError(f"i must be in [1, {n}], got {i}")
    # Python % already gives the nonnegative residue, so h(1) wraps to n
    return 1 + ((i - 2) % n)


def h_prime(i: int, r: int, n: int) -> int:
    """Bucket index for (i, r); lands in [n] and avoids {i, r} for n >= 3."""
    _check_n(n)
    if not 1 <= i <= n:
        raise ValueError(f"i must be in [1, {n}], got {i}")
    if not 1 <= r <= n - 1:
        raise ValueError(f"r must be in [1, {n - 1}], got {r}")
    if i < n:
        return 1 + ((i + r - 1) % n)
    return 1 + (r % (n - 1))


def H_n(i: int, j: int, n: int) -> list[Triple]:
    """Route the pair (i, j), i < j <= n, to 2-4 triples over [n+1]."""
    _check_n(n)
    if not (1 <= i < j <= n):
        raise ValueError(f"need 1 <= i < j <= {n}, got ({i}, {j})")
    out: list[Triple] = []
    hi = h(i, n)
    if j == n and i == 1:
        out.append(Triple(i, n + 1, hi))
    else:
        out.append(Triple(i, j, hi))
        out.append(Triple(j, n + 1, hi))
    hj = h(j, n)
    if i == j - 1:
        out.append(Triple(j, n + 1, hj))
    else:
        out.append(Triple(i, j, hj))
        out.append(Triple(i, n + 1, hj))
    return out


def _route_half(a: int, b: int, r: int, n: int) -> list[Triple]:
    # one-sided routing; the second triple is skipped when b is already
    # the bucket of (a, r), otherwise both (a,b) and (b,r) get a copy
    c = h_prime(a, r, n)
    if b == c:
        raw = [(a, r, c)]
    else:
        raw = [(a, b, c), (b, r, c)]
    return [Triple(min(x, y), max(x, y), z) for x, y, z in raw]


def H_prime_n(i: int, j: int, r: int, n: int) -> list[Triple]:
    """Route the triple (i, j, r), i < j <= n, r <= n-1, to 2-4 triples.

    First two components of every output triple come out sorted.
    """
    _check_n(n)
    if not (1 <= i < j <= n):
        raise ValueError(f"need 1 <= i < j <= {n}, got ({i}, {j})")
    if not 1 <= r <= n - 1:
        raise ValueError(f"r must be in [1, {n - 1}], got {r}")
    return _route_half(i, j, r, n) + _route_half(j, i, r, n)


@dataclass
class HashAuditReport:
    """Outcome of an exhaustive audit over all admissible inputs."""

    n: int
    total: int
    max_multiplicity: int
    histogram: dict[int, int]
    violations: list[str] = field(default_factory=list)
    # only audit_H_prime fills these: per-r maxima and the pooled witnesses
    per_r_max: dict[int, int] | None = None
    worst_triples: list[Triple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        status = "ok" if self.ok else f"FAILED ({len(self.violations)} violations)"
        return (
            f"n={self.n}: {self.total} triples, "
            f"max multiplicity {self.max_multiplicity}, {status}"
        )


def _audit_cap(n: int) -> None:
    _check_n(n)
    if n > AUDIT_CAP:
        raise ValueError(f"audit cap is n <= {AUDIT_CAP}, got {n}")


def audit_H(n: int) -> HashAuditReport:
    """Exhaustively audit H^n: no duplicate triples, components in range."""
    _audit_cap(n)
    counts: Counter[Triple] = Counter()
    violations: list[str] = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for t in H_n(i, j, n):
                counts[t] += 1
                if not (1 <= t.a < t.b <= n + 1):
                    violations.append(f"{t} from ({i},{j}): first two out of range")
                if not 1 <= t.c <= n:
                    violations.append(f"{t} from ({i},{j}): third out of range")
                if t.c in (t.a, t.b):
                    violations.append(f"{t} from ({i},{j}): bucket collides")
    for t, c in counts.items():
        if c > 1:
            violations.append(f"duplicate triple {t} appears {c} times")
    hist = Counter(counts.values())
    max_mult = max(counts.values()) if counts else 0
    return HashAuditReport(
        n=n,
        total=sum(counts.values()),
        max_multiplicity=max_mult,
        histogram=dict(sorted(hist.items())),
        violations=violations,
    )


def audit_H_prime(n: int) -> HashAuditReport:
    """Exhaustively audit H'^n: at most 5 copies of any triple.

    Multiplicities are pooled over r (the bound is about the full
    collation); the report also carries the per-r maxima.
    """
    _audit_cap(n)
    pooled: Counter[Triple] = Counter()
    per_r_max: dict[int, int] = {}
    violations: list[str] = []
    for r in range(1, n):
        counts_r: Counter[Triple] = Counter()
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                for t in H_prime_n(i, j, r, n):
                    counts_r[t] += 1
                    if not (1 <= t.a <= t.b <= n):
                        violations.append(f"{t} from ({i},{j},{r}): out of range")
                    if not 1 <= t.c <= n:
                        violations.append(f"{t} from ({i},{j},{r}): bucket out of range")
                    # at n=2 the wrap h'(2,1)=1 collides with r and the
                    # exclusion is vacuous; it holds for every n >= 3
                    if n >= 3 and t.c in (t.a, t.b):
                        violations.append(f"{t} from ({i},{j},{r}): bucket collides")
        per_r_max[r] = max(counts_r.values()) if counts_r else 0
        pooled.update(counts_r)
    max_mult = max(pooled.values()) if pooled else 0
    if max_mult > 5:
        offenders = [t for t, c in pooled.items() if c > 5]
        violations.append(f"multiplicity {max_mult} > 5 for {offenders[:5]}")
    hist = Counter(pooled.values())
    worst = sorted(t for t, c in pooled.items() if c == max_mult)
    return HashAuditReport(
        n=n,
        total=sum(pooled.values()),
        max_multiplicity=max_mult,
        histogram=dict(sorted(hist.items())),
        violations=violations,
        per_r_max=per_r_max,
        worst_triples=worst[:10],
    )
