"""Level-set decomposition at level 1: excursions, their reduction, the
Galton-Watson set of level individuals, the subordinated level tree, the
excursion point process with its exploration functional, and the
reconstruction algorithm.

Genealogy convention: the level parent of v is the individual owning the
excursion chunk in which v's first passage at 1 regenerates (the last
1-point on the ancestral line before v's debut).  This is the regeneration
structure that makes the set of level individuals a Galton-Watson tree and
the chunk counts telescope.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import constants
from .builder import DecoratedTree
from .errors import MalformedSequence
from .lamperti import time_change
from .levy import BV

LEVEL = 1.0


@dataclass(frozen=True)
class MarkedExcursion:
    """One reduced excursion chunk logged on an individual's segment."""

    owner: tuple[int, ...]
    a_index: float          # local time through the chunk's root passage
    root_age: float         # pssMp age of the root passage on S_owner
    mark_age: float         # next passage, or the segment end when ultimate
    ultimate: bool          # mark decoration differs from 1
    z_count: int            # first returns to 1 away from the marked segment
    child_debuts: tuple[tuple[int, ...], ...]

    @property
    def n_count(self) -> int:
        # n = Z + 1 when the mark decoration equals 1, else n = Z
        return self.z_count if self.ultimate else self.z_count + 1


@dataclass(frozen=True)
class LevelMember:
    label: tuple[int, ...]
    level_parent: tuple[int, ...] | None
    passages: tuple[float, ...]    # pssMp ages of the passages at level 1
    positions: tuple[float, ...]   # cumulative local time through each passage
    total: float                   # L(1, S_u)
    chunks: tuple[MarkedExcursion, ...]
    spine_dist: float              # L(1, [root, debut])


@dataclass(frozen=True)
class LevelDecomposition:
    members: dict  # label -> LevelMember

    @property
    def count(self) -> int:
        return len(self.members)

    def offspring_counts(self) -> dict:
        out = {}
        for m in self.members.values():
            out[m.label] = sum(ch.z_count for ch in m.chunks)
        return out

    def total_local_time(self) -> float:
        return float(sum(m.total for m in self.members.values()))


def _passage_data(node, mode, eps=constants.EPS_TOTAL):
    """(ages_t, positions, total) of level-1 passages on one segment.

    BV: exact crossings, each of mass 1/|slope|, a start exactly at the
    level included.  DIFFUSION: crossing clusters separated by at least
    EXC_MERGE_FACTOR * dt; the clock is the windowed local time, and
    clusters adding no clock mass are folded away.
    """
    skel = node.skeleton
    y = float(np.log(LEVEL / node.birth_size))
    if mode == BV:
        ages_s = skel.crossings(y)
        if ages_s.size == 0:
            return np.empty(0), np.empty(0), 0.0
        slope = skel.segments[0][1]
        mass = 1.0 / abs(slope)
        ages_t = np.atleast_1d(time_change(node.decoration, ages_s))
        positions = mass * np.arange(1, len(ages_s) + 1)
        return ages_t, positions, float(positions[-1])
    vals = skel.values
    s = vals - y
    ind = np.abs(s) < eps
    clock = np.concatenate([[0.0], np.cumsum(ind[:-1]) * skel.dt / (2 * eps)])
    total = float(clock[-1])
    cross = list(np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0] + 1)
    if s[0] == 0.0:
        cross = [0] + cross
    if not cross:
        return np.empty(0), np.empty(0), total
    merge_gap = constants.EXC_MERGE_FACTOR
    clusters = [[cross[0]]]
    for k in cross[1:]:
        if k - clusters[-1][-1] <= merge_gap:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    ages_idx, positions = [], []
    prev = 0.0
    for cl in clusters:
        rep = cl[-1]
        a = float(clock[min(rep + 1, len(clock) - 1)])
        if a - prev <= 1e-12:
            continue  # spurious grid crossing the clock never saw
        ages_idx.append(rep)
        positions.append(a)
        prev = a
    if not ages_idx:
        return np.empty(0), np.empty(0), total
    ages_s = np.array(ages_idx, dtype=float) * skel.dt
    ages_t = np.atleast_1d(time_change(node.decoration, ages_s))
    return ages_t, np.array(positions), total


def decompose_excursions(tree: DecoratedTree) -> LevelDecomposition:
    """Log every segment at its level-1 passages and reduce: each chunk
    records its local-time index, root and mark, Z (first returns off the
    marked segment) and the labels regenerating there."""
    if abs(tree.start - LEVEL) > 1e-9:
        raise ValueError("excursion decomposition expects a tree started at 1")
    kids: dict = {label: [] for label in tree.nodes}
    for node in tree.nodes.values():
        if node.parent is not None:
            kids[node.parent].append(node)
    for lst in kids.values():
        lst.sort(key=lambda n: n.label)
    cache: dict = {}

    def data(node):
        if node.label not in cache:
            cache[node.label] = _passage_data(node, tree.mode)
        return cache[node.label]

    def hitters(node):
        """Labels whose first passage at 1 regenerates inside the current
        excursion; explores only the pre-passage part of each segment."""
        ages_t, _, _ = data(node)
        first = ages_t[0] if ages_t.size else None
        out = [node.label] if first is not None else []
        for child in kids[node.label]:
            if first is None or child.attach_age < first:
                out.extend(hitters(child))
        return out

    members: dict = {}
    root_ages, _, _ = data(tree.root())
    work = [((), None, 0.0)] if root_ages.size else []
    while work:
        label, parent_label, spine_dist = work.pop()
        node = tree.nodes[label]
        ages_t, positions, total = data(node)
        m = len(ages_t)
        chunks = []
        for k in range(m):
            lo = ages_t[k]
            ultimate = k + 1 == m
            hi = np.inf if ultimate else ages_t[k + 1]
            found: list = []
            for child in kids[label]:
                if lo < child.attach_age <= hi:
                    found.extend(hitters(child))
            # the ultimate chunk sits at the full local time L_u(z_u); on
            # grid paths the windowed clock keeps growing a little after
            # the last passage, and the index must absorb that tail
            a_index = total if ultimate else float(positions[k])
            chunks.append(MarkedExcursion(
                owner=label, a_index=a_index, root_age=float(lo),
                mark_age=float(node.lifetime if ultimate else hi),
                ultimate=ultimate, z_count=len(found), child_debuts=tuple(found)))
            for v in found:
                work.append((v, label, spine_dist + a_index))
        members[label] = LevelMember(label=label, level_parent=parent_label,
                                     passages=tuple(ages_t), positions=tuple(positions),
                                     total=total, chunks=tuple(chunks),
                                     spine_dist=spine_dist)
    return LevelDecomposition(members=members)


# ---------------------------------------------------------------------------
# the concatenated excursion process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcursionProcess:
    order: tuple  # labels in depth-first local-time order
    boundaries: tuple[float, ...]  # A(j), cumulative totals, A(0) = 0
    atoms: tuple  # (time index, MarkedExcursion), strictly increasing times
    f_values: tuple[int, ...]  # F just after each atom
    phi: float  # first time F = -1

    @property
    def total(self) -> float:
        return self.boundaries[-1]


def build_excursion_process(tree: DecoratedTree,
                            dec: LevelDecomposition | None = None) -> ExcursionProcess:
    """Order the level individuals by maximal root local-time distance
    (lexicographic tie-break), concatenate their chunk streams, and track
    the exploration functional F = sum (n - 1)."""
    if dec is None:
        dec = decompose_excursions(tree)
    if not dec.members:
        return ExcursionProcess(order=(), boundaries=(0.0,), atoms=(),
                                f_values=(), phi=float("nan"))
    heap = [(-0.0, ())]
    order = []
    boundaries = [0.0]
    atoms = []
    clock = 0.0
    while heap:
        _, label = heapq.heappop(heap)
        member = dec.members[label]
        order.append(label)
        for chunk in member.chunks:
            atoms.append((clock + chunk.a_index, chunk))
            for v in chunk.child_debuts:
                heapq.heappush(heap, (-dec.members[v].spine_dist, v))
        clock += member.total
        boundaries.append(clock)
    f_vals = []
    f = 0
    phi = float("nan")
    for t, chunk in atoms:
        f += chunk.n_count - 1
        f_vals.append(f)
        if f == -1 and np.isnan(phi):
            phi = t
    return ExcursionProcess(order=tuple(order), boundaries=tuple(boundaries),
                            atoms=tuple(atoms), f_values=tuple(f_vals), phi=phi)


# ---------------------------------------------------------------------------
# the subordinated level tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelTreeNode:
    node_id: int
    parent: int | None
    edge_length: float
    kind: str  # root | branch | leaf


@dataclass(frozen=True)
class LevelTree:
    nodes: tuple[LevelTreeNode, ...]

    @property
    def total_length(self) -> float:
        return float(sum(n.edge_length for n in self.nodes))

    def edge_lengths(self) -> np.ndarray:
        return np.array([n.edge_length for n in self.nodes if n.parent is not None])

    def children_map(self) -> dict:
        out: dict = {n.node_id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None:
                out[n.parent].append(n.node_id)
        return out

    def multiplicity_counts(self) -> dict:
        """Count of nodes by outer degree (leaves are 0, branches >= 2)."""
        kids = self.children_map()
        out: dict = {}
        for n in self.nodes:
            if n.parent is None:
                continue
            d = len(kids[n.node_id])
            out[d] = out.get(d, 0) + 1
        return out

    def signature(self, ndigits: int = 9):
        """Canonical rooted-shape signature with rounded edge lengths;
        equality is isomorphism with matching lengths."""
        kids = self.children_map()
        by_id = {n.node_id: n for n in self.nodes}
        root = next(n for n in self.nodes if n.parent is None)

        def sig(i):
            subs = sorted(sig(j) for j in kids[i])
            return (round(by_id[i].edge_length, ndigits), tuple(subs))

        return sig(root.node_id)

    def to_json(self) -> dict:
        return {"nodes": [{"id": n.node_id, "parent": n.parent,
                           "edge_length": n.edge_length, "kind": n.kind}
                          for n in self.nodes]}

    @classmethod
    def from_json(cls, obj: dict) -> "LevelTree":
        return cls(nodes=tuple(LevelTreeNode(node_id=d["id"], parent=d["parent"],
                                             edge_length=float(d["edge_length"]),
                                             kind=d["kind"])
                               for d in obj["nodes"]))


def build_level_tree(tree: DecoratedTree,
                     dec: LevelDecomposition | None = None) -> LevelTree:
    """Contract each individual level set to a segment of length L(1,S_u)
    and glue along the excursion identifications.  Multiplicity-2 points
    (pass-through chunks) are not stored."""
    if dec is None:
        dec = decompose_excursions(tree)
    nodes = [LevelTreeNode(node_id=0, parent=None, edge_length=0.0, kind="root")]
    counter = [0]

    def new_node(parent, length, kind):
        counter[0] += 1
        nodes.append(LevelTreeNode(node_id=counter[0], parent=parent,
                                   edge_length=float(length), kind=kind))
        return counter[0]

    work = [((), 0, 0.0)] if dec.members else []
    while work:
        label, parent, length = work.pop()
        member = dec.members[label]
        prev_pos = 0.0
        for chunk in member.chunks:
            if chunk.ultimate:
                tail = length + (member.total - prev_pos)
                if chunk.z_count == 0:
                    new_node(parent, tail, "leaf")
                elif chunk.z_count == 1:
                    # multiplicity-2 point: the child segment extends the edge
                    work.append((chunk.child_debuts[0], parent, tail))
                else:
                    nid = new_node(parent, tail, "branch")
                    for v in chunk.child_debuts:
                        work.append((v, nid, 0.0))
            elif chunk.z_count >= 1:
                length += chunk.a_index - prev_pos
                nid = new_node(parent, length, "branch")
                for v in chunk.child_debuts:
                    work.append((v, nid, 0.0))
                parent = nid
                prev_pos = chunk.a_index
                length = 0.0
    return LevelTree(nodes=tuple(nodes))


def reconstruct_level_tree(atoms) -> LevelTree:
    """Replay the depth-first construction from the (time, n) atoms with
    n != 1: the current tip absorbs the gap since the previous atom; n = 0
    closes a leaf, n >= 2 opens n active tips, and the last tip in
    depth-first order is always extended next."""
    nodes = [LevelTreeNode(node_id=0, parent=None, edge_length=0.0, kind="root")]
    counter = [0]
    stack = [0]  # parent ids of active tips, LIFO
    prev_t = 0.0
    for t, k in atoms:
        if k == 1:
            raise MalformedSequence("atoms with n = 1 do not belong in the encoding")
        if not stack:
            raise MalformedSequence("active tips exhausted before the atom sequence")
        if t < prev_t:
            raise MalformedSequence("atom times must be nondecreasing")
        parent = stack.pop()
        counter[0] += 1
        nid = counter[0]
        kind = "leaf" if k == 0 else "branch"
        nodes.append(LevelTreeNode(node_id=nid, parent=parent,
                                   edge_length=float(t - prev_t), kind=kind))
        prev_t = t
        for _ in range(int(k)):
            stack.append(nid)
    if stack:
        raise MalformedSequence("active tips remain after the atom sequence")
    return LevelTree(nodes=tuple(nodes))


def encoding_atoms(proc: ExcursionProcess):
    """(time, n) stream of the n != 1 atoms, the input of reconstruction."""
    return [(t, ch.n_count) for t, ch in proc.atoms if ch.n_count != 1]


# ---------------------------------------------------------------------------
# empirical excursion measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcursionMeasureEstimate:
    """Empirical functionals of the excursion measure, estimated from the
    ancestral-segment chunks of independent replicas, divided by v(0)."""

    v0: float
    n_replicas: int
    rate_n: dict          # n value -> intensity estimate (= beta_k for k != 1)
    rate_n_ultimate: dict  # same, ultimate chunks only
    z_integral: float     # int Z dN

    def beta(self, k: int) -> float:
        return self.rate_n.get(k, 0.0)

    @property
    def total_rate_non1(self) -> float:
        return float(sum(v for k, v in self.rate_n.items() if k != 1))

    def branching_mean(self) -> float:
        """sum_k (k - 1) beta_k over k != 1; negative iff subcritical."""
        return float(sum((k - 1) * v for k, v in self.rate_n.items() if k != 1))


def estimate_excursion_measure(ancestral_chunks, v0: float) -> ExcursionMeasureEstimate:
    """``ancestral_chunks``: iterable of per-replica lists of the root
    individual's MarkedExcursion chunks."""
    counts: dict = {}
    counts_ult: dict = {}
    z_sum = 0.0
    n_rep = 0
    for chunks in ancestral_chunks:
        n_rep += 1
        for ch in chunks:
            counts[ch.n_count] = counts.get(ch.n_count, 0) + 1
            if ch.ultimate:
                counts_ult[ch.n_count] = counts_ult.get(ch.n_count, 0) + 1
            z_sum += ch.z_count
    if n_rep == 0:
        raise ValueError("need at least one replica")
    scale = 1.0 / (n_rep * v0)
    return ExcursionMeasureEstimate(
        v0=v0, n_replicas=n_rep,
        rate_n={k: c * scale for k, c in sorted(counts.items())},
        rate_n_ultimate={k: c * scale for k, c in sorted(counts_ult.items())},
        z_integral=z_sum * scale,
    )


def derived_offspring_samples(est: ExcursionMeasureEstimate, n_samples: int,
                              rng: np.random.Generator) -> np.ndarray:
    """Offspring law implied by the estimated chunk-class rates: draw iid
    chunk classes, accumulate Z (n - 1 before the first ultimate chunk, n
    at it), stop at the first ultimate chunk."""
    classes = []
    weights = []
    for k, rate in est.rate_n.items():
        ult = est.rate_n_ultimate.get(k, 0.0)
        if rate - ult > 0:
            classes.append((k - 1, False))
            weights.append(rate - ult)
        if ult > 0:
            classes.append((k, True))
            weights.append(ult)
    weights = np.array(weights)
    probs = weights / weights.sum()
    out = np.empty(n_samples, dtype=int)
    for i in range(n_samples):
        total = 0
        while True:
            j = rng.choice(len(classes), p=probs)
            z, ultimate = classes[j]
            total += z
            if ultimate:
                break
        out[i] = total
    return out
