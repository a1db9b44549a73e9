"""Metric property audits, empirical C estimation, violation injection.

Covers four jobs: exhaustive metric checks on pairwise costs, the
generalized (n, C)-metric check on a shared cost tensor, the same check
on a sampled tensor of transport values, and the feasibility probe for
reconstructing a joint from three bivariate masses.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import lp
from .core import Atom, JointMass
from .transport import PairwiseCost

__all__ = [
    "SENTINEL",
    "DistanceTensor",
    "MetricReport",
    "GluingResult",
    "check_metric",
    "check_n_metric_cost",
    "check_W_tensor",
    "leave_one_out_ratios",
    "inject_violations",
    "no_gluing_check",
]

# unsampled entries carry this exact value so downstream consumers that
# cannot skip entries see something very large instead of garbage
SENTINEL = 1e9

ZERO_TOL = 1e-12
TRIANGLE_SLACK = 1e-8
COMPAT_TOL = 1e-9


class DistanceTensor:
    """Symmetric order-2 or order-3 tensor with explicit sampling mask.

    Values are stored once per strictly increasing index tuple; reads
    with permuted indices resolve to the same entry.  Unsampled entries
    read as SENTINEL.  `modified` tracks entries rewritten by
    inject_violations so later passes can avoid them.
    """

    def __init__(self, order: int, size: int) -> None:
        if order not in (2, 3):
            raise ValueError(f"order must be 2 or 3, got {order}")
        if size < order:
            raise ValueError(f"size {size} is too small for order {order}")
        self.order = order
        self.size = size
        self.values: dict[tuple[int, ...], float] = {}
        self.sampled: set[tuple[int, ...]] = set()
        self.modified: set[tuple[int, ...]] = set()

    def _key(self, idx: Sequence[int]) -> tuple[int, ...]:
        if len(idx) != self.order:
            raise ValueError(f"expected {self.order} indices, got {len(idx)}")
        key = tuple(sorted(int(i) for i in idx))
        if len(set(key)) != self.order:
            raise ValueError(f"indices must be distinct, got {tuple(idx)}")
        if key[0] < 0 or key[-1] >= self.size:
            raise ValueError(f"index out of range for size {self.size}: {tuple(idx)}")
        return key

    def set(self, idx: Sequence[int], value: float) -> None:
        v = float(value)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"value must be finite and nonnegative, got {value}")
        key = self._key(idx)
        self.values[key] = v
        self.sampled.add(key)

    def get(self, idx: Sequence[int]) -> float:
        return self.values.get(self._key(idx), SENTINEL)

    def is_sampled(self, idx: Sequence[int]) -> bool:
        return self._key(idx) in self.sampled

    def all_keys(self) -> Iterator[tuple[int, ...]]:
        return combinations(range(self.size), self.order)

    @property
    def n_sampled(self) -> int:
        return len(self.sampled)

    def copy(self) -> "DistanceTensor":
        out = DistanceTensor(self.order, self.size)
        out.values = dict(self.values)
        out.sampled = set(self.sampled)
        out.modified = set(self.modified)
        return out

    def to_csv(self, path: str) -> None:
        # every increasing tuple is written, unsampled ones as sentinel,
        # so the file fully determines (order, size)
        with open(path, "w") as fh:
            for key in self.all_keys():
                value = self.values.get(key, SENTINEL)
                flag = 1 if key in self.sampled else 0
                fh.write(",".join(str(i) for i in key) + f",{value!r},{flag}\n")

    @classmethod
    def from_csv(cls, path: str) -> "DistanceTensor":
        rows: list[tuple[tuple[int, ...], float, int]] = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) not in (4, 5):
                    raise ValueError(f"{path}:{lineno}: expected 4 or 5 fields")
                try:
                    idx = tuple(int(p) for p in parts[:-2])
                    value = float(parts[-2])
                    flag = int(parts[-1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                if flag not in (0, 1):
                    raise ValueError(f"{path}:{lineno}: sampled flag must be 0 or 1")
                rows.append((idx, value, flag))
        if not rows:
            raise ValueError(f"{path}: empty tensor file")
        order = len(rows[0][0])
        size = 1 + max(max(idx) for idx, _, _ in rows)
        out = cls(order, size)
        for idx, value, flag in rows:
            if len(idx) != order:
                raise ValueError(f"{path}: inconsistent index arity")
            if flag:
                out.set(idx, value)
        return out


@dataclass
class MetricReport:
    """Outcome of a property audit; None means the item was not assessed."""

    nonnegative: bool | None = None
    identity: bool | None = None
    symmetric: bool | None = None
    triangle: bool | None = None
    violations: list[dict] = field(default_factory=list)
    empirical_C: float | None = None
    n_checked: int = 0

    @property
    def ok(self) -> bool:
        return all(f is not False for f in
                   (self.nonnegative, self.identity, self.symmetric, self.triangle))

    def to_json(self) -> str:
        payload = {
            "nonnegative": self.nonnegative,
            "identity": self.identity,
            "symmetric": self.symmetric,
            "triangle": self.triangle,
            "empirical_C": self.empirical_C,
            "n_checked": self.n_checked,
            "violations": self.violations,
        }
        return json.dumps(payload, sort_keys=True)

    def summary(self) -> str:
        status = "ok" if self.ok else f"FAILED ({len(self.violations)} violations)"
        c = "" if self.empirical_C is None else f", empirical_C={self.empirical_C:.6g}"
        return f"{self.n_checked} checks, {status}{c}"


class _PairView:
    """Uniform pair lookup over a PairwiseCost or a raw pair->matrix dict.

    Raw dicts are accepted so the audit can run on data the strict
    container would reject (that rejection is itself what gets audited).
    """

    def __init__(self, d: PairwiseCost | Mapping[tuple, np.ndarray]):
        if isinstance(d, PairwiseCost):
            self._raw = {key: d.get(*key) for key in d.pairs}
        else:
            self._raw = {tuple(k): np.asarray(v, dtype=float) for k, v in d.items()}
        self.pairs = {tuple(sorted(k)) for k in self._raw}

    def get(self, i: int, j: int) -> np.ndarray:
        if (i, j) in self._raw:
            return self._raw[(i, j)]
        return self._raw[(j, i)].T

    def stored_both_ways(self, i: int, j: int) -> bool:
        return (i, j) in self._raw and (j, i) in self._raw


def check_metric(
    d: PairwiseCost | Mapping[tuple, np.ndarray],
    atoms: Sequence[Sequence[Atom]],
) -> MetricReport:
    """Exhaustively audit nonnegativity, symmetry, identity, triangle."""
    rep = MetricReport(nonnegative=True, identity=True, symmetric=True, triangle=True)
    view = _PairView(d)
    for (i, j) in sorted(view.pairs):
        m = view.get(i, j)
        rep.n_checked += m.size
        neg = np.argwhere(m < 0)
        for s, t in neg:
            rep.nonnegative = False
            rep.violations.append({"kind": "nonnegativity",
                                   "where": [i, j, int(s), int(t)],
                                   "margin": float(m[s, t])})
        if i == j and not np.allclose(m, m.T, rtol=0.0, atol=ZERO_TOL):
            rep.symmetric = False
            rep.violations.append({"kind": "symmetry", "where": [i, j], "margin": 0.0})
        if i != j and view.stored_both_ways(i, j):
            if not np.allclose(view.get(i, j), view.get(j, i).T,
                               rtol=0.0, atol=ZERO_TOL):
                rep.symmetric = False
                rep.violations.append({"kind": "symmetry", "where": [i, j],
                                       "margin": 0.0})
        for s in range(m.shape[0]):
            for t in range(m.shape[1]):
                same = atoms[i][s] == atoms[j][t]
                zero = abs(m[s, t]) <= ZERO_TOL
                if same != zero:
                    rep.identity = False
                    rep.violations.append({"kind": "identity",
                                           "where": [i, j, s, t],
                                           "margin": float(m[s, t])})
    present = view.pairs
    n_spaces = len(atoms)
    for i in range(n_spaces):
        for j in range(n_spaces):
            if tuple(sorted((i, j))) not in present or i == j:
                continue
            for k in range(n_spaces):
                if k in (i, j):
                    continue
                if (tuple(sorted((i, k))) not in present
                        or tuple(sorted((k, j))) not in present):
                    continue
                a = view.get(i, j)
                b = view.get(i, k)
                c = view.get(k, j)
                # min-plus product: cheapest detour through space k
                detour = (b[:, :, None] + c[None, :, :]).min(axis=1)
                rep.n_checked += a.size
                bad = np.argwhere(a > detour + TRIANGLE_SLACK)
                for s, t in bad:
                    rep.triangle = False
                    rep.violations.append({"kind": "triangle",
                                           "where": [i, j, k, int(s), int(t)],
                                           "margin": float(a[s, t] - detour[s, t])})
    return rep


def check_n_metric_cost(
    cost: np.ndarray,
    atoms: Sequence[Atom],
    C: float = 1.0,
    tol: float = ZERO_TOL,
) -> MetricReport:
    """Audit the four generalized-metric properties of a shared cost tensor.

    `cost` is an n-way array over one common atom list; the generalized
    triangle inequality is scanned over every (n+1)-tuple of indices.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.ndim
    m = len(atoms)
    if cost.shape != (m,) * n:
        raise ValueError(f"cost shape {cost.shape} does not match {m} atoms")
    rep = MetricReport(nonnegative=True, identity=True, symmetric=True, triangle=True)
    rep.n_checked += cost.size
    if np.any(cost < 0):
        rep.nonnegative = False
        s = tuple(int(v) for v in np.argwhere(cost < 0)[0])
        rep.violations.append({"kind": "nonnegativity", "where": list(s),
                               "margin": float(cost[s])})
    for perm in permutations(range(n)):
        if not np.allclose(cost, np.transpose(cost, perm), rtol=0.0, atol=tol):
            rep.symmetric = False
            rep.violations.append({"kind": "symmetry", "where": list(perm),
                                   "margin": 0.0})
    # atoms are pairwise distinct within one list, so "all atoms equal"
    # collapses to "all indices equal"
    for idx in np.ndindex(*cost.shape):
        all_equal = all(atoms[t] == atoms[idx[0]] for t in idx[1:])
        zero = abs(cost[idx]) <= tol
        if all_equal != zero:
            rep.identity = False
            rep.violations.append({"kind": "identity", "where": list(idx),
                                   "margin": float(cost[idx])})
    lhs = C * np.expand_dims(cost, n)
    rhs = np.zeros((m,) * (n + 1))
    for r in range(1, n + 1):
        rhs = rhs + np.expand_dims(cost, r - 1)
    rep.n_checked += rhs.size
    gap = rhs - lhs
    bad = np.argwhere(gap < -tol)
    for row in bad:
        rep.triangle = False
        rep.violations.append({"kind": "triangle",
                               "where": [int(v) for v in row],
                               "margin": float(gap[tuple(row)])})
    denom_ok = np.expand_dims(cost, n) > ZERO_TOL
    if np.any(denom_ok):
        ratios = np.where(denom_ok, rhs / np.maximum(np.expand_dims(cost, n), ZERO_TOL),
                          np.inf)
        rep.empirical_C = float(ratios.min())
    return rep


def leave_one_out_ratios(
    values: Mapping[tuple[int, ...], float], universe: Sequence[int]
) -> dict[tuple[int, ...], float]:
    """Ratios (sum of the other leave-one-outs) / (this leave-one-out).

    `values` maps each size-(k-1) subset of `universe` (sorted tuples) to
    its transport value; near-zero denominators are skipped.
    """
    uni = sorted(universe)
    ratios: dict[tuple[int, ...], float] = {}
    for x in uni:
        denom_key = tuple(v for v in uni if v != x)
        denom = values[denom_key]
        if denom <= ZERO_TOL:
            continue
        num = 0.0
        for y in uni:
            if y == x:
                continue
            num += values[tuple(v for v in uni if v != y)]
        ratios[denom_key] = num / denom
    return ratios


def check_W_tensor(T: DistanceTensor, C: float = 1.0,
                   slack: float = TRIANGLE_SLACK) -> MetricReport:
    """Scan every fully sampled 4-subset for generalized triangle failures.

    All four leave-one-out roles of each subset are checked; empirical_C
    is the smallest ratio seen over roles with nonzero left side.
    """
    if T.order != 3:
        raise ValueError("check_W_tensor needs an order-3 tensor")
    rep = MetricReport(nonnegative=True, symmetric=True, triangle=True)
    if any(v < 0 for v in T.values.values()):
        rep.nonnegative = False
    best: float | None = None
    for subset in combinations(range(T.size), 4):
        triples = list(combinations(subset, 3))
        if not all(t in T.sampled for t in triples):
            continue
        vals = {t: T.values[t] for t in triples}
        total = sum(vals.values())
        for t in triples:
            rep.n_checked += 1
            lhs = vals[t]
            rhs = total - lhs
            if C * lhs > rhs + slack:
                rep.triangle = False
                rep.violations.append({"kind": "triangle",
                                       "where": list(subset), "lhs": list(t),
                                       "margin": float(rhs - C * lhs)})
            if lhs > ZERO_TOL:
                ratio = rhs / lhs
                if best is None or ratio < best:
                    best = ratio
    rep.empirical_C = best
    return rep


def inject_violations(
    T: DistanceTensor,
    rng: np.random.Generator,
    fraction: float = 0.20,
    factor: float = 1.3,
    count_all_entries: bool = False,
) -> DistanceTensor:
    """Rewrite sampled entries until `fraction` of them break the C=1 bound.

    Each step draws a fully sampled 4-subset, picks the unlocked triple
    needing the smallest raise to dominate the other three, and raises it
    by factor*delta.  All four triples of a targeted subset are then
    locked against later rewrites: raising a triple that sits on the
    right-hand side of an earlier violation would shrink that violation's
    margin, possibly erasing it.  Raises too small to clear the audit
    slack are skipped.  The denominator counts sampled entries unless
    count_all_entries is set.
    """
    if T.order != 3:
        raise ValueError("inject_violations needs an order-3 tensor")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if factor <= 1.0:
        raise ValueError(f"factor must exceed 1, got {factor}")
    out = T.copy()
    base = math.comb(T.size, 3) if count_all_entries else len(T.sampled)
    target = math.ceil(fraction * base)
    if target == 0:
        return out
    locked: set[tuple[int, ...]] = set(out.modified)
    done = 0
    attempts = 0
    max_attempts = 10_000 * max(target, 1)
    while done < target:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                f"could not find enough fully sampled 4-subsets "
                f"(modified {done} of {target})")
        subset = tuple(sorted(rng.choice(T.size, size=4, replace=False).tolist()))
        triples = list(combinations(subset, 3))
        if not all(t in out.sampled for t in triples):
            continue
        vals = {t: out.values[t] for t in triples}
        total = sum(vals.values())
        # delta is the raise putting this triple level with the other three;
        # the post-raise margin is (factor-1)*delta, which must beat the
        # slack check_W_tensor grants
        deltas = {t: (total - vals[t]) - vals[t] for t in triples}
        free = [t for t in triples
                if t not in locked
                and (factor - 1.0) * deltas[t] > 10.0 * TRIANGLE_SLACK]
        if not free:
            continue
        t_min = min(free, key=lambda t: (deltas[t], t))
        out.values[t_min] = vals[t_min] + factor * deltas[t_min]
        out.modified.add(t_min)
        locked.update(triples)
        done += 1
    return out


@dataclass
class GluingResult:
    feasible: bool
    witness: JointMass | None = None


def no_gluing_check(p12: JointMass, p13: JointMass, p23: JointMass,
                    tol: float = COMPAT_TOL) -> GluingResult:
    """Probe for a trivariate mass with the three given bivariate marginals.

    Incompatible univariate marginals raise; a clean Infeasible therefore
    always means the obstruction is genuinely three-dimensional.
    """
    for j, name in ((p12, "p12"), (p13, "p13"), (p23, "p23")):
        if j.entries.ndim != 2:
            raise ValueError(f"{name} must be bivariate")
    m1, m2 = p12.entries.shape
    m1b, m3 = p13.entries.shape
    m2b, m3b = p23.entries.shape
    if m1 != m1b or m2 != m2b or m3 != m3b:
        raise ValueError("bivariate shapes disagree on a shared axis")
    checks = [
        ("axis 1", p12.entries.sum(axis=1), p13.entries.sum(axis=1)),
        ("axis 2", p12.entries.sum(axis=0), p23.entries.sum(axis=1)),
        ("axis 3", p13.entries.sum(axis=0), p23.entries.sum(axis=0)),
    ]
    for name, a, b in checks:
        err = float(np.abs(a - b).max())
        if err > tol:
            raise ValueError(f"incompatible univariate marginals on {name} "
                             f"(max deviation {err:.3g})")
    # unknowns r[i,j,k] flattened row-major; three marginal blocks
    A = np.vstack([
        np.tile(np.eye(m2 * m3), (1, m1)),
        np.kron(np.eye(m1), np.tile(np.eye(m3), (1, m2))),
        np.kron(np.eye(m1 * m2), np.ones((1, m3))),
    ])
    b = np.concatenate([p23.entries.ravel(), p13.entries.ravel(),
                        p12.entries.ravel()])
    status, x = lp.feasible(A, b)
    if status != lp.FEASIBLE:
        return GluingResult(False)
    r = np.clip(x, 0.0, None).reshape(m1, m2, m3)
    return GluingResult(True, JointMass(r / r.sum()))
