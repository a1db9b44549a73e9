"""Experiment orchestration: corpora, signatures, tensors, clustering runs.

The pipeline turns a family-labeled graph corpus into spectral-signature
distributions, fills a distance tensor under one of four backends, and
scores clusterers against the known labels.  Every random stream derives
from the master seed through one documented scheme:

    seed(t, u) = master XOR splitmix64(t * GAMMA + u)

with GAMMA the splitmix64 increment.  Stream ids: t=0 corpus graph u,
t=1 tuple sampling (u=0 pairs, u=1 triples), t=2+j clustering trial j.
Tuple solves are deterministic LPs, so any evaluation order (including a
parallel one) produces the same tensors; files are emitted with sorted
keys and repr floats and rerun byte for byte.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field, fields
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import hashes
from .clustering import (
    ClusteringSolution,
    build_hypergraph,
    clustering_error,
    nhcut,
    spectral_cluster,
    ttm,
    tune_threshold,
)
from .constructions import collinear_instance, planar_counterexample
from .core import Atom, DiscreteDistribution, JointMass, braket, conditional, glue, marginal
from .graphs import DEFAULT_FAMILIES, generate, load_graph, perturb, signature
from .metric_props import (
    DistanceTensor,
    check_W_tensor,
    inject_violations,
    leave_one_out_ratios,
    no_gluing_check,
)
from .transport import (
    PairwiseCost,
    barycenter_mmot,
    euclidean_cost,
    mmot,
    pairwise_mmot,
    wasserstein,
)

__all__ = [
    "BACKENDS",
    "CLUSTERERS",
    "ExperimentConfig",
    "ExperimentReport",
    "CorpusGraph",
    "splitmix64",
    "derive_seed",
    "parse_config_text",
    "load_config_file",
    "build_corpus",
    "signature_distribution",
    "compute_tensor",
    "empirical_C_pairs",
    "cmd_distances",
    "cmd_cluster",
    "cmd_inject",
    "cmd_verify",
]

BACKENDS = ("wd_pairwise", "mmot_pairwise", "mmot_barycenter", "mmot_nonmetric")
CLUSTERERS = ("spectral", "ttm", "nhcut")

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """The splitmix64 output scrambler as a pure function."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def derive_seed(master: int, t: int, u: int) -> int:
    return (master ^ splitmix64((t * GAMMA + u) & _MASK)) & _MASK


def _stream(master: int, t: int, u: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, t, u)))


_FAMILY_NAMES = tuple(name for name, _ in DEFAULT_FAMILIES)
_FAMILY_PARAMS = {name: params for name, params in DEFAULT_FAMILIES}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, fully serializable description of one experiment run."""

    seed: int
    families: tuple[str, ...] = _FAMILY_NAMES
    graphs_per_family: int = 10
    perturb_p: float = 0.05
    input_dir: str | None = None
    top_k: int = 16
    backend: str = "mmot_pairwise"
    ell: int = 1
    pairs_budget: int = 150
    triples_budget: int = 100
    sampling: str = "triples"
    threshold_grid: tuple[float, ...] | None = None
    clusterer: str = "ttm"
    trials: int = 20
    out_dir: str = "results"

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int):
            raise ValueError("config key 'seed': must be an integer")
        for fam in self.families:
            if fam not in _FAMILY_PARAMS:
                raise ValueError(f"config key 'families': unknown family {fam!r}")
        if not self.families and self.input_dir is None:
            raise ValueError("config key 'families': need at least one family")
        if self.backend not in BACKENDS:
            raise ValueError(f"config key 'backend': {self.backend!r} not in {BACKENDS}")
        if self.clusterer not in CLUSTERERS:
            raise ValueError(f"config key 'clusterer': {self.clusterer!r} not in {CLUSTERERS}")
        for key in ("graphs_per_family", "top_k", "ell", "pairs_budget",
                    "triples_budget", "trials"):
            val = getattr(self, key)
            if not isinstance(val, int) or val < 1:
                raise ValueError(f"config key {key!r}: must be a positive integer, got {val!r}")
        if not 0.0 <= self.perturb_p <= 1.0:
            raise ValueError(f"config key 'perturb_p': must be in [0, 1], got {self.perturb_p}")
        if self.threshold_grid is not None and not self.threshold_grid:
            raise ValueError("config key 'threshold_grid': must be nonempty when given")
        if self.sampling not in ("triples", "blocks"):
            raise ValueError(
                f"config key 'sampling': must be 'triples' or 'blocks', got {self.sampling!r}")
        if self.ell != 1 and self.backend != "mmot_nonmetric":
            raise ValueError(
                f"config key 'ell': backend {self.backend!r} supports ell=1 only")

    def to_json(self) -> str:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["families"] = list(self.families)
        if self.threshold_grid is not None:
            data["threshold_grid"] = list(self.threshold_grid)
        return json.dumps(data, sort_keys=True)


def _parse_families(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_grid(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(",") if part.strip())


_CONFIG_PARSERS: dict[str, Callable[[str], object]] = {
    "seed": int,
    "families": _parse_families,
    "graphs_per_family": int,
    "perturb_p": float,
    "input_dir": str,
    "top_k": int,
    "backend": str,
    "ell": int,
    "pairs_budget": int,
    "triples_budget": int,
    "sampling": str,
    "threshold_grid": _parse_grid,
    "clusterer": str,
    "trials": int,
    "out_dir": str,
}


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"config line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate config key {key!r}")
        try:
            values[key] = _CONFIG_PARSERS[key](raw)
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: cannot parse {raw!r}: {exc}") from None
    return values


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


@dataclass(frozen=True)
class CorpusGraph:
    graph_id: str
    family: str
    label: int
    graph: Graph


def _corpus_from_dir(input_dir: str) -> list[CorpusGraph]:
    names = sorted(
        f for f in os.listdir(input_dir)
        if f.endswith(".csv") and f != "labels.csv"
    )
    if not names:
        raise ValueError(f"no graph csv files in {input_dir}")
    labels: dict[str, int] = {}
    labels_path = os.path.join(input_dir, "labels.csv")
    if os.path.exists(labels_path):
        raw: dict[str, int] = {}
        with open(labels_path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                name, _, lab = line.partition(",")
                try:
                    raw[name.strip()] = int(lab)
                except ValueError:
                    raise ValueError(f"{labels_path}:{lineno}: bad label {lab!r}") from None
        remap = {lab: i for i, lab in enumerate(sorted(set(raw.values())))}
        labels = {name: remap[lab] for name, lab in raw.items()}
    out = []
    for name in names:
        stem = name[:-4]
        out.append(CorpusGraph(
            graph_id=stem,
            family=stem,
            label=labels.get(stem, -1),
            graph=load_graph(os.path.join(input_dir, name)),
        ))
    return out


def build_corpus(config: ExperimentConfig) -> list[CorpusGraph]:
    """Labeled graphs: perturbed family copies, or csv files from a directory."""
    if config.input_dir is not None:
        return _corpus_from_dir(config.input_dir)
    out = []
    gi = 0
    for label, fam in enumerate(config.families):
        for copy in range(config.graphs_per_family):
            rng = _stream(config.seed, 0, gi)
            base = generate(fam, _FAMILY_PARAMS[fam], rng)
            g = perturb(base, config.perturb_p, rng)
            out.append(CorpusGraph(f"{fam}-{copy:02d}", fam, label, g))
            gi += 1
    return out


def signature_distribution(sig) -> DiscreteDistribution:
    """Uniform distribution over the signature's eigenvalue multiset.

    Coincident eigenvalues merge into one atom carrying the multiplicity,
    since support atoms must be pairwise distinct.
    """
    atoms: list[Atom] = []
    counts: list[int] = []
    for z in sig.values:
        a = Atom.point(float(z.real), float(z.imag))
        for idx, existing in enumerate(atoms):
            if existing == a:
                counts[idx] += 1
                break
        else:
            atoms.append(a)
            counts.append(1)
    masses = np.array(counts, dtype=float) / float(len(sig.values))
    return DiscreteDistribution(atoms, masses)


def _check_backend_ell(backend: str, ell: int) -> None:
    if backend in ("wd_pairwise", "mmot_pairwise", "mmot_barycenter") and ell != 1:
        raise ValueError(f"backend {backend!r} supports ell=1 only, got ell={ell}")


def _area_cost_tensor(ps: Sequence[DiscreteDistribution]) -> np.ndarray:
    """Triangle-area cost across three supports; gamma = half the smallest
    positive area so coincidence penalties never dominate real triangles."""
    a0, a1, a2 = (p.atoms for p in ps)
    c0 = np.array([a.coords() for a in a0])
    c1 = np.array([a.coords() for a in a1])
    c2 = np.array([a.coords() for a in a2])
    # 2x area via the cross product, vectorized over the grid
    u = c1[None, :, None, :] - c0[:, None, None, :]
    v = c2[None, None, :, :] - c0[:, None, None, :]
    areas = 0.5 * np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    eq01 = np.array([[x == y for y in a1] for x in a0])
    eq02 = np.array([[x == y for y in a2] for x in a0])
    eq12 = np.array([[x == y for y in a2] for x in a1])
    n_eq = (eq01[:, :, None].astype(int)
            + eq02[:, None, :].astype(int)
            + eq12[None, :, :].astype(int))
    positive = areas[areas > 1e-12]
    gamma = 0.5 * float(positive.min()) if positive.size else 1e-9
    cost = np.where(n_eq >= 1, gamma, areas)
    return np.where(n_eq == 3, 0.0, cost)


def _tuple_distance(backend: str, ps: Sequence[DiscreteDistribution], ell: int) -> float:
    if backend == "wd_pairwise":
        p, q = ps
        return wasserstein(p, q, euclidean_cost(p, q), ell=ell).value
    if backend == "mmot_pairwise":
        cost = PairwiseCost({
            (s, t): euclidean_cost(ps[s], ps[t]) for s, t in combinations(range(3), 2)
        })
        return pairwise_mmot(list(ps), cost, ell=ell).value
    if backend == "mmot_barycenter":
        omega: list[Atom] = []
        for p in ps:
            for a in p.atoms:
                if not any(o == a for o in omega):
                    omega.append(a)
        coords = np.array([o.coords() for o in omega])
        base = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
        return barycenter_mmot(list(ps), omega, base).value
    if backend == "mmot_nonmetric":
        return mmot(list(ps), _area_cost_tensor(ps), ell=ell).value
    raise ValueError(f"unknown backend {backend!r}")


def _blocked_triples(n: int, budget: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Triples grouped into complete 4-subsets, covering every object first.

    Violation injection needs fully sampled 4-subsets and the clusterers
    need every object in at least one sampled triple; uniform triple
    sampling provides neither at realistic budgets.  A shuffled first
    pass covers all objects in chunks of four (a short last chunk is
    topped up with already-covered objects), further random 4-subsets
    spend the remaining budget, and leftover capacity goes to uniform
    triples so exactly `budget` triples come back.
    """
    if n < 4:
        raise ValueError(f"blocked sampling needs at least 4 objects, got {n}")
    seen: set[tuple[int, ...]] = set()
    triples: set[tuple[int, ...]] = set()
    perm = [int(v) for v in rng.permutation(n)]
    for start in range(0, n, 4):
        chunk = perm[start:start + 4]
        while len(chunk) < 4:
            extra = int(rng.integers(n))
            if extra not in chunk:
                chunk.append(extra)
        sub = tuple(sorted(chunk))
        seen.add(sub)
        triples.update(combinations(sub, 3))
    if len(triples) > budget:
        raise ValueError(
            f"triples_budget {budget} cannot cover {n} objects in blocks "
            f"mode, need at least {len(triples)}")
    total_subsets = math.comb(n, 4)
    while len(triples) + 4 <= budget and len(seen) < total_subsets:
        pick = tuple(sorted(int(v) for v in rng.choice(n, size=4, replace=False)))
        if pick not in seen:
            seen.add(pick)
            triples.update(combinations(pick, 3))
    while len(triples) < budget:
        pick = tuple(sorted(int(v) for v in rng.choice(n, size=3, replace=False)))
        triples.add(pick)
    return sorted(triples)


def compute_tensor(config: ExperimentConfig,
                   dists: Sequence[DiscreteDistribution]) -> DistanceTensor:
    """Fill a distance tensor over seeded sampled index tuples."""
    _check_backend_ell(config.backend, config.ell)
    order = 2 if config.backend == "wd_pairwise" else 3
    budget = config.pairs_budget if order == 2 else config.triples_budget
    n = len(dists)
    if n < order:
        raise ValueError(f"need at least {order} graphs, got {n}")
    universe = list(combinations(range(n), order))
    rng = _stream(config.seed, 1, 0 if order == 2 else 1)
    if budget >= len(universe):
        chosen = universe
    elif order == 3 and config.sampling == "blocks":
        chosen = _blocked_triples(n, budget, rng)
    else:
        picks = rng.choice(len(universe), size=budget, replace=False)
        chosen = [universe[i] for i in sorted(picks.tolist())]
    T = DistanceTensor(order=order, size=n)
    for tup in chosen:
        T.set(tup, _tuple_distance(config.backend, [dists[i] for i in tup], config.ell))
    return T


def empirical_C_pairs(T: DistanceTensor, tol: float = 1e-12) -> float | None:
    """Smallest (d_ik+d_kj)/d_ij over sampled triangles; None if none usable."""
    if T.order != 2:
        raise ValueError("need an order-2 tensor")
    best = None
    for i, j, k in combinations(range(T.size), 3):
        pairs = [(i, j), (i, k), (j, k)]
        if not all(p in T.sampled for p in pairs):
            continue
        d = {p: T.values[p] for p in pairs}
        for (a, b), (x, y), (s, t) in ((pairs[0], pairs[1], pairs[2]),
                                       (pairs[1], pairs[0], pairs[2]),
                                       (pairs[2], pairs[0], pairs[1])):
            if d[(a, b)] > tol:
                ratio = (d[(x, y)] + d[(s, t)]) / d[(a, b)]
                if best is None or ratio < best:
                    best = ratio
    return best


def _write_json(path: str, data: object) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_distances(config: ExperimentConfig) -> dict:
    """Build the corpus, compute signatures, and write one distance tensor."""
    started = time.monotonic()
    _check_backend_ell(config.backend, config.ell)
    corpus = build_corpus(config)
    dists = [signature_distribution(signature(cg.graph, config.top_k)) for cg in corpus]
    T = compute_tensor(config, dists)
    os.makedirs(config.out_dir, exist_ok=True)
    manifest = {
        "config": json.loads(config.to_json()),
        "graphs": [
            {
                "graph_id": cg.graph_id,
                "family": cg.family,
                "label": cg.label,
                "nodes": cg.graph.n,
                "edges": cg.graph.num_edges,
                "support": dists[i].size,
            }
            for i, cg in enumerate(corpus)
        ],
    }
    corpus_path = os.path.join(config.out_dir, "corpus.json")
    _write_json(corpus_path, manifest)
    tensor_path = os.path.join(config.out_dir, f"tensor_{config.backend}.csv")
    T.to_csv(tensor_path)
    meta = {
        "backend": config.backend,
        "ell": config.ell,
        "order": T.order,
        "n_graphs": len(corpus),
        "n_sampled": T.n_sampled,
        "transport_solves": T.n_sampled,
    }
    meta_path = os.path.join(config.out_dir, f"distances_{config.backend}.json")
    _write_json(meta_path, meta)
    elapsed = time.monotonic() - started
    print(f"{config.backend}: {T.n_sampled} tuples over {len(corpus)} graphs "
          f"-> {tensor_path} ({elapsed:.1f}s)")
    return {"tensor": tensor_path, "corpus": corpus_path, "meta": meta_path}


@dataclass(frozen=True)
class ExperimentReport:
    backend: str
    clusterer: str
    trials: int
    k: int
    n_graphs: int
    errors: tuple[float, ...]
    thresholds: tuple[float | None, ...]
    median_error: float
    histogram_edges: tuple[float, ...]
    histogram_counts: tuple[int, ...]
    empirical_C: float | None
    work: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.errors) != self.trials:
            raise ValueError(f"{len(self.errors)} errors for {self.trials} trials")

    def to_json(self) -> str:
        data = {
            "backend": self.backend,
            "clusterer": self.clusterer,
            "trials": self.trials,
            "k": self.k,
            "n_graphs": self.n_graphs,
            "errors": list(self.errors),
            "thresholds": list(self.thresholds),
            "median_error": self.median_error,
            "histogram_edges": list(self.histogram_edges),
            "histogram_counts": list(self.histogram_counts),
            "empirical_C": self.empirical_C,
            "work": self.work,
        }
        return json.dumps(data, sort_keys=True)


def _truth_labels(corpus: list[CorpusGraph]) -> tuple[int, ...]:
    labels = tuple(cg.label for cg in corpus)
    if any(lab < 0 for lab in labels):
        raise ValueError("corpus has no truth labels (labels.csv missing?)")
    return labels


def cmd_cluster(config: ExperimentConfig, tensor_path: str) -> tuple[ExperimentReport, str]:
    """Score the configured clusterer on a tensor file, tuning thresholds per trial."""
    started = time.monotonic()
    T = DistanceTensor.from_csv(tensor_path)
    corpus = build_corpus(config)
    if len(corpus) != T.size:
        raise ValueError(f"tensor is over {T.size} objects, corpus has {len(corpus)}")
    truth = _truth_labels(corpus)
    k = len(set(truth))
    needs = 2 if config.clusterer == "spectral" else 3
    if T.order != needs:
        raise ValueError(f"clusterer {config.clusterer!r} needs an order-{needs} "
                         f"tensor, got order {T.order}")
    errors: list[float] = []
    thresholds: list[float | None] = []
    for trial in range(config.trials):
        rng = _stream(config.seed, 2 + trial, 0)
        if config.clusterer == "spectral":
            sol = spectral_cluster(T, k, rng)
            errors.append(clustering_error(sol, truth))
            thresholds.append(None)
        else:
            method = ttm if config.clusterer == "ttm" else nhcut
            def run(tensor: DistanceTensor, th: float) -> ClusteringSolution:
                return method(build_hypergraph(tensor, th), k, rng)
            th, err = tune_threshold(T, truth, run, config.threshold_grid)
            errors.append(err)
            thresholds.append(th)
    counts, edges = np.histogram(np.array(errors), bins=10, range=(0.0, 1.0))
    emp_c = (check_W_tensor(T).empirical_C if T.order == 3 else empirical_C_pairs(T))
    report = ExperimentReport(
        backend=config.backend,
        clusterer=config.clusterer,
        trials=config.trials,
        k=k,
        n_graphs=len(corpus),
        errors=tuple(float(e) for e in errors),
        thresholds=tuple(thresholds),
        median_error=float(np.median(np.array(errors))),
        histogram_edges=tuple(float(e) for e in edges),
        histogram_counts=tuple(int(c) for c in counts),
        empirical_C=emp_c,
        work={"clusterings": config.trials},
    )
    os.makedirs(config.out_dir, exist_ok=True)
    report_path = os.path.join(
        config.out_dir, f"report_{config.clusterer}_{config.backend}.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    hist_path = os.path.join(
        config.out_dir, f"hist_{config.clusterer}_{config.backend}.dat")
    with open(hist_path, "w") as fh:
        fh.write("# bin_left bin_right count\n")
        for left, right, count in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{left!r} {right!r} {int(count)}\n")
    elapsed = time.monotonic() - started
    print(f"{config.clusterer} on {config.backend}: median error "
          f"{report.median_error:.3f} over {config.trials} trials ({elapsed:.1f}s)")
    return report, report_path


def cmd_inject(tensor_path: str, fraction: float, factor: float, seed: int,
               out_tensor: str, out_report: str | None = None) -> dict:
    """Corrupt a tensor with targeted triangle violations; report the C drop."""
    T = DistanceTensor.from_csv(tensor_path)
    before = check_W_tensor(T).empirical_C
    rng = np.random.Generator(np.random.PCG64(seed))
    injected = inject_violations(T, rng, fraction=fraction, factor=factor)
    after = check_W_tensor(injected).empirical_C
    injected.to_csv(out_tensor)
    summary = {
        "fraction": fraction,
        "factor": factor,
        "seed": seed,
        "n_sampled": injected.n_sampled,
        "n_modified": len(injected.modified),
        "empirical_C_before": before,
        "empirical_C_after": after,
    }
    if out_report is not None:
        _write_json(out_report, summary)
    print(f"injected {summary['n_modified']} of {summary['n_sampled']} entries; "
          f"empirical_C {before} -> {after}")
    return summary


def _verify_gluing() -> str:
    third = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]) / 3.0
    res = no_gluing_check(JointMass(third), JointMass(third),
                          JointMass(np.ones((3, 3)) / 9.0))
    if res.feasible:
        raise AssertionError("obstructed marginal system reported feasible")
    rng = np.random.Generator(np.random.PCG64(20260819))
    r = rng.random((3, 3, 3))
    joint = JointMass(r / r.sum())
    p12 = marginal(joint, [0, 1])
    p13 = marginal(joint, [0, 2])
    p23 = marginal(joint, [1, 2])
    res2 = no_gluing_check(p12, p13, p23)
    if not res2.feasible or res2.witness is None:
        raise AssertionError("marginals of a genuine joint reported infeasible")
    w = res2.witness.entries
    worst = max(
        float(np.abs(w.sum(axis=2) - p12.entries).max()),
        float(np.abs(w.sum(axis=1) - p13.entries).max()),
        float(np.abs(w.sum(axis=0) - p23.entries).max()),
    )
    if worst > 1e-9:
        raise AssertionError(f"witness marginals off by {worst:.3g}")
    return "obstructed system infeasible; random joint feasible with clean witness"


def _verify_planar() -> str:
    inst = planar_counterexample(0.01)
    expected = {(0, 1, 2): 0.5, (0, 1, 3): 0.125,
                (0, 2, 3): 0.1275, (1, 2, 3): 0.1275}
    for trip, want in expected.items():
        got = inst.w_values[trip]
        if abs(got - want) > 1e-8:
            raise AssertionError(f"W{trip} = {got}, expected {want}")
    if inst.margin <= 0:
        raise AssertionError("no strict triangle violation")
    return f"all four transport values exact; violation margin {inst.margin:.4f}"


def _verify_hashes() -> str:
    for n in range(2, 41):
        rep = hashes.audit_H(n)
        if not rep.ok:
            raise AssertionError(f"pair-map audit failed at n={n}: {rep.summary()}")
        rep2 = hashes.audit_H_prime(n)
        if not rep2.ok or rep2.max_multiplicity > 5:
            raise AssertionError(f"triple-map audit failed at n={n}: {rep2.summary()}")
    rep4 = hashes.audit_H_prime(4)
    if rep4.max_multiplicity != 5 or hashes.Triple(2, 3, 1) not in rep4.worst_triples:
        raise AssertionError("expected multiplicity 5 at (2,3,1) for n=4")
    return "index maps collision-free and within multiplicity 5 for n = 2..40"


def _verify_glue(n_cases: int = 20) -> str:
    rng = np.random.Generator(np.random.PCG64(31337))
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(3, 5))
        sizes = [int(rng.integers(2, 5)) for _ in range(n)]
        k = int(rng.integers(0, n))
        q_k = rng.random(sizes[k]) + 0.1
        q_k /= q_k.sum()
        conds = {}
        for i in range(n):
            if i == k:
                continue
            m = rng.random((sizes[i], sizes[k])) + 0.1
            conds[i] = conditional(JointMass((m / m.sum(axis=0)) * q_k))
        joint = glue(q_k, conds, k)
        worst = max(worst, float(np.abs(marginal(joint, [k]).entries - q_k).max()))
        for i, q in conds.items():
            pair = marginal(joint, [i, k]).entries
            if i > k:
                pair = pair.T
            worst = max(worst, float(np.abs(pair - q.entries * q_k).max()))
    if worst > 1e-12:
        raise AssertionError(f"glued marginals off by {worst:.3g}")
    return f"{n_cases} glued joints reproduce pivot and pair marginals (max {worst:.1e})"


def _verify_triangle(n_cases: int = 20) -> str:
    rng = np.random.Generator(np.random.PCG64(90210))
    worst = -1.0
    for _ in range(n_cases):
        sizes = [int(rng.integers(2, 5)) for _ in range(3)]
        pts = [rng.random((m, 2)) * 4.0 for m in sizes]
        r = rng.random(tuple(sizes)) + 1e-3
        joint = JointMass(r / r.sum())
        cost = {}
        for a, b in combinations(range(3), 2):
            cost[(a, b)] = np.linalg.norm(
                pts[a][:, None, :] - pts[b][None, :, :], axis=2)
        for ell in (1, 2, 3):
            w = {}
            for a, b in combinations(range(3), 2):
                pair = marginal(joint, [a, b]).entries
                w[(a, b)] = braket(cost[(a, b)], pair, ell) ** (1.0 / ell)
            for (i, j, k) in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
                lhs = w[tuple(sorted((i, j)))]
                rhs = w[tuple(sorted((i, k)))] + w[tuple(sorted((k, j)))]
                worst = max(worst, lhs - rhs)
    if worst > 1e-9:
        raise AssertionError(f"pair-value triangle inequality violated by {worst:.3g}")
    return f"{n_cases} joints satisfy the pair-value triangle bound for ell=1,2,3"


def _verify_collinear() -> str:
    dists, cost = collinear_instance(4, 3)
    universe = range(5)
    values = {}
    for subset in combinations(universe, 4):
        sub_cost = PairwiseCost({
            (a, b): cost.get(subset[a], subset[b])
            for a, b in combinations(range(4), 2)
        })
        values[subset] = pairwise_mmot([dists[i] for i in subset], sub_cost).value
    ratios = leave_one_out_ratios(values, universe)
    emp_c = min(ratios.values())
    if emp_c > 3.0 + 1e-6 or abs(emp_c - 3.0) > 1e-3:
        raise AssertionError(f"collinear ratio {emp_c}, expected 3")
    return f"collinear family attains the leave-one-out ratio bound ({emp_c:g})"


_VERIFY_CHECKS = (
    ("gluing-infeasibility", _verify_gluing),
    ("planar-counterexample", _verify_planar),
    ("index-map-audits", _verify_hashes),
    ("glue-marginals", _verify_glue),
    ("pair-triangle", _verify_triangle),
    ("collinear-ratio", _verify_collinear),
)


def cmd_verify() -> int:
    """Run the reproduction suite; return 0 when every check passes."""
    failures = 0
    for name, check in _VERIFY_CHECKS:
        try:
            detail = check()
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}: {detail}")
    total = len(_VERIFY_CHECKS)
    print(f"{total - failures} of {total} checks passed")
    return 0 if failures == 0 else 1
