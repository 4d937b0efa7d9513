"""Tornado-style cascade code: layered sparse XOR checks closed by a small MDS tail.

Symbols are numbered globally in packet order: the k source symbols, then
each check layer in turn, then the tail repair symbols.  Layer ``i + 1``
has ``ceil(decay * s_i)`` checks; every layer-``i`` symbol is XORed into
up to ``degree`` distinct checks of the next layer.  Layering stops once a
layer has at most ``tail_threshold`` symbols; that last layer is protected
by the Cauchy MDS code.

Encoding touches every edge once and decoding is a peeling process in which
each edge is retired once, so both run in time linear in k for a fixed
packet length.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from .core import (
    CodeParameters,
    DecodeOutcome,
    Insufficient,
    Packet,
    ParameterError,
    Stalled,
    Success,
    collect_packets,
    pad_message,
    split_payloads,
    unpad_message,
)
from .field import INV_TABLE, MUL_TABLE
from .mds import build_cauchy_matrix, encode_repairs, recover_sources
from .prng import SplitMix64, derive_seed


@dataclass(frozen=True)
class CascadeGraph:
    layers: tuple[int, ...]
    # edges[i][u]: sorted distinct next-layer check positions fed by symbol u of layer i
    edges: tuple[tuple[tuple[int, ...], ...], ...]
    tail_repairs: int
    degree: int
    decay: Fraction

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for size in self.layers:
            out.append(out[-1] + size)
        return tuple(out)

    @property
    def k(self) -> int:
        return self.layers[0]

    @property
    def depth(self) -> int:
        """Number of check layers (t)."""
        return len(self.layers) - 1

    @property
    def total_symbols(self) -> int:
        return sum(self.layers) + self.tail_repairs

    @property
    def edge_count(self) -> int:
        return sum(len(targets) for layer in self.edges for targets in layer)

    def edge_bound(self) -> Fraction:
        """Linear bound d*(k + t)/(1 - decay) on the number of edges.

        Ceiling rounding adds less than 1/(1 - decay) to each layer size, which
        is where the per-layer term comes from.
        """
        return self.degree * Fraction(self.k + self.depth) / (1 - self.decay)

    def tail_indices(self) -> range:
        start = self.offsets[-2]
        return range(start, start + self.layers[-1])

    def repair_indices(self) -> range:
        start = self.offsets[-1]
        return range(start, start + self.tail_repairs)


def layer_sizes(k: int, decay: Fraction, tail_threshold: int) -> list[int]:
    sizes = [k]
    while sizes[-1] > tail_threshold:
        nxt = math.ceil(decay * sizes[-1])
        sizes.append(min(nxt, sizes[-1] - 1))
    return sizes


def build_cascade_graph(
    params: CodeParameters,
    degree: int | None = None,
    decay: Fraction | None = None,
    tail_threshold: int | None = None,
) -> CascadeGraph:
    degree = params.degree if degree is None else degree
    decay = params.decay if decay is None else Fraction(decay)
    tail_threshold = params.tail_threshold if tail_threshold is None else tail_threshold
    return _build_graph(params.k, params.p, degree, decay, tail_threshold, params.seed)


@lru_cache(maxsize=32)
def _build_graph(k: int, p: int, degree: int, decay: Fraction, tail_threshold: int, seed: int) -> CascadeGraph:
    if degree < 2:
        raise ParameterError("cascade degree must be at least 2")
    if not 0 < decay < 1:
        raise ParameterError("cascade decay must lie strictly between 0 and 1")
    if tail_threshold < 1:
        raise ParameterError("tail threshold must be at least 1")
    sizes = layer_sizes(k, decay, tail_threshold)
    checks = sum(sizes[1:])
    tail = sizes[-1]
    # the tail absorbs the rounding slack between the nominal s_t repairs and p - k
    repairs = (p - k) - checks
    if repairs < 0 or tail + repairs > 256:
        achievable = Fraction(k + checks + tail, k)
        raise ParameterError(
            f"stretch budget p - k = {p - k} cannot hold {checks} checks plus an MDS tail "
            f"for {tail} symbols; c = {achievable} is achievable with these settings"
        )
    edges = []
    for i in range(len(sizes) - 1):
        rng = SplitMix64(derive_seed(seed, i))
        width = sizes[i + 1]
        layer = []
        for _ in range(sizes[i]):
            targets = {rng.below(width) for _ in range(degree)}
            layer.append(tuple(sorted(targets)))
        edges.append(tuple(layer))
    return CascadeGraph(tuple(sizes), tuple(edges), repairs, degree, decay)


@dataclass(frozen=True)
class _Topology:
    """Constraint view of a graph: each check equals the XOR of its in-neighbours."""

    members: tuple[tuple[int, ...], ...]  # constraint -> global symbols (check first)
    memberships: tuple[tuple[int, ...], ...]  # global symbol -> constraints


def _topology(graph: CascadeGraph) -> _Topology:
    cached = graph.__dict__.get("_topology")
    if cached is not None:
        return cached
    offsets = graph.offsets
    k = graph.k
    members: list[list[int]] = [[offsets[1] + j] for j in range(sum(graph.layers[1:]))]
    for i, layer in enumerate(graph.edges):
        base, nxt = offsets[i], offsets[i + 1]
        for u, targets in enumerate(layer):
            for t in targets:
                members[nxt + t - k].append(base + u)
    memberships: list[list[int]] = [[] for _ in range(graph.total_symbols)]
    for cid, mem in enumerate(members):
        for sym in mem:
            memberships[sym].append(cid)
    topo = _Topology(tuple(map(tuple, members)), tuple(map(tuple, memberships)))
    graph.__dict__["_topology"] = topo
    return topo


def encode_symbols(sources: list[int], graph: CascadeGraph) -> list[int]:
    """All check-layer symbol values (as ints), layer by layer."""
    values = list(sources)
    current = sources
    for i, layer in enumerate(graph.edges):
        nxt = [0] * graph.layers[i + 1]
        for value, targets in zip(current, layer):
            for t in targets:
                nxt[t] ^= value
        values.extend(nxt)
        current = nxt
    return values


def _to_rows(values: list[int], size: int) -> np.ndarray:
    raw = b"".join(v.to_bytes(size, "little") for v in values)
    return np.frombuffer(raw, dtype=np.uint8).reshape(len(values), size)


@lru_cache(maxsize=32)
def _tail_cauchy(tail: int, repairs: int) -> np.ndarray:
    return build_cauchy_matrix(tail, repairs)


def cascade_encode(padded: bytes, params: CodeParameters, graph: CascadeGraph, block_id: int = 0) -> list[Packet]:
    size = params.payload_bytes
    chunks = split_payloads(padded, params)
    values = encode_symbols([int.from_bytes(c, "little") for c in chunks], graph)
    packets = [Packet(block_id, i, c) for i, c in enumerate(chunks)]
    packets += [
        Packet(block_id, i, v.to_bytes(size, "little"))
        for i, v in enumerate(values[params.k:], start=params.k)
    ]
    if graph.tail_repairs:
        tail = _to_rows(values[-graph.layers[-1]:], size)
        repairs = encode_repairs(tail, graph.tail_repairs, _tail_cauchy(graph.layers[-1], graph.tail_repairs))
        start = len(values)
        packets += [Packet(block_id, start + j, r.tobytes()) for j, r in enumerate(repairs)]
    if len(packets) != params.p:
        raise ParameterError(f"graph produces {len(packets)} packets but params say p={params.p}")
    return packets


@dataclass
class PeelingState:
    """Decoder bookkeeping.

    A known symbol's value is ``values[s]`` XORed with the inactive variables
    whose bits are set in ``masks[s]``; masks stay zero unless peeling stalled
    and inactivation kicked in.  Each constraint tracks how many of its
    members are unknown and the XOR of the known ones.
    """

    graph: CascadeGraph
    payload_bytes: int
    known: list[bool]
    values: list[int]
    masks: list[int]
    residual_count: list[int]
    residual_xor: list[int]
    residual_mask: list[int]
    ready: deque = field(default_factory=deque)
    rounds: list[int] = field(default_factory=list)
    inactivated: list[int] = field(default_factory=list)
    tail_recovered: int = 0
    tail_solved: bool = False
    unknown_sources: int = 0
    unknown_core: int = 0

    def unknown_in_layer(self, layer: int) -> int:
        offsets = self.graph.offsets
        return sum(
            not self.known[s] or self.masks[s] != 0
            for s in range(offsets[layer], offsets[layer + 1])
        )


def _init_state(received: dict[int, bytes], graph: CascadeGraph, payload_bytes: int) -> PeelingState:
    topo = _topology(graph)
    total = graph.total_symbols
    known = [False] * total
    values = [0] * total
    for idx, payload in received.items():
        known[idx] = True
        values[idx] = int.from_bytes(payload, "little")
    counts = []
    xors = []
    for mem in topo.members:
        c = 0
        x = 0
        for s in mem:
            if known[s]:
                x ^= values[s]
            else:
                c += 1
        counts.append(c)
        xors.append(x)
    core = graph.offsets[-1]
    return PeelingState(
        graph,
        payload_bytes,
        known,
        values,
        [0] * total,
        counts,
        xors,
        [0] * len(counts),
        unknown_sources=sum(not known[s] for s in range(graph.k)),
        unknown_core=sum(not known[s] for s in range(core)),
    )


def _learn(state: PeelingState, sym: int, value: int, mask: int, topo: _Topology, pending: deque) -> None:
    state.known[sym] = True
    state.values[sym] = value
    state.masks[sym] = mask
    if sym < state.graph.k and not mask:
        state.unknown_sources -= 1
    state.unknown_core -= 1
    for cid in topo.memberships[sym]:
        state.residual_count[cid] -= 1
        state.residual_xor[cid] ^= value
        state.residual_mask[cid] ^= mask
        if state.residual_count[cid] == 1:
            pending.append(cid)


def _try_tail(state: PeelingState, topo: _Topology, pending: deque) -> None:
    """MDS-decode the last layer once enough of its block is numerically known."""
    graph = state.graph
    if state.tail_solved:
        return
    tail = graph.tail_indices()
    missing = [s for s in tail if not state.known[s]]
    if not missing:
        # symbolic tail values still need the repair equations later
        state.tail_solved = not any(state.masks[s] for s in tail)
        return
    block = list(tail) + list(graph.repair_indices())
    have = {j: state.values[s] for j, s in enumerate(block) if state.known[s] and not state.masks[s]}
    if len(have) < len(tail):
        return
    size = state.payload_bytes
    rows = {j: np.frombuffer(v.to_bytes(size, "little"), dtype=np.uint8) for j, v in have.items()}
    solved = recover_sources(rows, len(tail), graph.tail_repairs, _tail_cauchy(len(tail), graph.tail_repairs))
    for s in missing:
        _learn(state, s, int.from_bytes(solved[s - tail.start].tobytes(), "little"), 0, topo, pending)
        state.tail_recovered += 1
    state.tail_solved = not any(state.masks[s] for s in tail)


def _drain(state: PeelingState, topo: _Topology, until_core: bool) -> None:
    """FIFO peeling over ``state.ready``, one generation per recorded round."""
    tail = state.graph.tail_indices()

    def done() -> bool:
        return not (state.unknown_core if until_core else state.unknown_sources)

    while state.ready and not done():
        pending: deque = deque()
        recovered = 0
        for cid in state.ready:
            if state.residual_count[cid] != 1:
                continue
            sym = next(s for s in topo.members[cid] if not state.known[s])
            _learn(state, sym, state.residual_xor[cid], state.residual_mask[cid], topo, pending)
            recovered += 1
            if not state.tail_solved and sym in tail:
                _try_tail(state, topo, pending)
            if done():
                break
        if recovered:
            state.rounds.append(recovered)
        state.ready = pending


def _inactivate_one(state: PeelingState, topo: _Topology) -> bool:
    """Turn one unknown symbol into a fresh symbolic variable.

    Picks the lowest-indexed constraint with the fewest (>= 2) unknowns and,
    within it, the unknown symbol sitting in the most constraints.
    """
    best = None
    best_count = None
    for cid, count in enumerate(state.residual_count):
        if count >= 2 and (best_count is None or count < best_count):
            best, best_count = cid, count
            if count == 2:
                break
    if best is None:
        return False
    candidates = [s for s in topo.members[best] if not state.known[s]]
    sym = max(candidates, key=lambda s: (len(topo.memberships[s]), -s))
    var = len(state.inactivated)
    state.inactivated.append(sym)
    pending: deque = deque()
    _learn(state, sym, 0, 1 << var, topo, pending)
    state.ready = pending
    return True


def _mask_vector(mask: int, width: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes(-(-width // 8) or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:width].copy()


def _solve_inactive(state: PeelingState, topo: _Topology) -> None:
    """Solve for the inactive variables and substitute them into the source symbols."""
    graph = state.graph
    size = state.payload_bytes
    width = len(state.inactivated)
    coefs = []
    rhs = []
    for cid, mask in enumerate(state.residual_mask):
        if mask and state.residual_count[cid] == 0:
            coefs.append(_mask_vector(mask, width))
            rhs.append(state.residual_xor[cid].to_bytes(size, "little"))
    if not state.tail_solved and graph.tail_repairs:
        tail = list(graph.tail_indices())
        cauchy = _tail_cauchy(len(tail), graph.tail_repairs)
        for j, rep in enumerate(graph.repair_indices()):
            if not state.known[rep] or any(not state.known[s] for s in tail):
                continue
            coef = np.zeros(width, dtype=np.uint8)
            acc = np.frombuffer(state.values[rep].to_bytes(size, "little"), dtype=np.uint8).copy()
            for u, s in enumerate(tail):
                c = int(cauchy[j, u])
                if state.masks[s]:
                    coef ^= MUL_TABLE[c][_mask_vector(state.masks[s], width)]
                acc ^= MUL_TABLE[c][np.frombuffer(state.values[s].to_bytes(size, "little"), dtype=np.uint8)]
            coefs.append(coef)
            rhs.append(acc.tobytes())
    if not coefs:
        state.unknown_sources = sum(not state.known[s] or state.masks[s] != 0 for s in range(graph.k))
        return
    system = np.concatenate(
        [np.stack(coefs), np.frombuffer(b"".join(rhs), dtype=np.uint8).reshape(len(rhs), size)], axis=1
    )
    reduced, pivots = _rref(system, width)
    solution: dict[int, int] = {}
    free = np.ones(width, dtype=bool)
    free[pivots] = False
    for r, col in enumerate(pivots):
        if not reduced[r, :width][free].any():
            solution[col] = int.from_bytes(reduced[r, width:].tobytes(), "little")
    for s in range(graph.k):
        mask = state.masks[s]
        if not mask:
            continue
        bits = [v for v in range(width) if mask >> v & 1]
        if all(v in solution for v in bits):
            value = state.values[s]
            for v in bits:
                value ^= solution[v]
        else:
            value = _reduce_against(reduced, pivots, _mask_vector(mask, width), width, state.values[s], size)
            if value is None:
                continue
        state.values[s] = value
        state.masks[s] = 0
    state.unknown_sources = sum(not state.known[s] or state.masks[s] != 0 for s in range(graph.k))


def _rref(system: np.ndarray, width: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2^8), pivoting only in the first ``width`` columns."""
    a = system.copy()
    rows = a.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(width):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, col])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        lead = int(a[r, col])
        if lead != 1:
            a[r] = MUL_TABLE[INV_TABLE[lead]][a[r]]
        factors = a[:, col].copy()
        factors[r] = 0
        hit = np.flatnonzero(factors)
        if hit.size:
            a[hit] ^= MUL_TABLE[factors[hit][:, None], a[r][None, :]]
        pivots.append(col)
        r += 1
    return a, pivots


def _reduce_against(
    reduced: np.ndarray, pivots: list[int], vec: np.ndarray, width: int, base: int, size: int
) -> int | None:
    """Value of ``base`` XOR vec.x if vec lies in the row space, else None."""
    vec = vec.copy()
    acc = np.frombuffer(base.to_bytes(size, "little"), dtype=np.uint8).copy()
    for r, col in enumerate(pivots):
        a = int(vec[col])
        if a:
            vec ^= MUL_TABLE[a][reduced[r, :width]]
            acc ^= MUL_TABLE[a][reduced[r, width:]]
    if vec.any():
        return None
    return int.from_bytes(acc.tobytes(), "little")


def peel(
    received: dict[int, bytes], graph: CascadeGraph, payload_bytes: int, inactivation: bool = True
) -> PeelingState:
    """Tail MDS step, then FIFO peeling; optionally finish a stalled decode by inactivation.

    Pure peeling (``inactivation=False``) stops at the first stall.  With
    inactivation, each stall turns one unknown symbol into a symbolic
    variable so peeling can continue; the few variables introduced are then
    solved from the leftover equations by dense elimination.
    """
    topo = _topology(graph)
    state = _init_state(received, graph, payload_bytes)
    if state.unknown_sources == 0:
        return state
    _try_tail(state, topo, deque())
    state.ready = deque(cid for cid, c in enumerate(state.residual_count) if c == 1)
    _drain(state, topo, until_core=False)
    if not inactivation or not state.unknown_sources:
        return state
    # finish peeling every core symbol so each constraint yields an equation
    state.ready = deque(cid for cid, c in enumerate(state.residual_count) if c == 1)
    _drain(state, topo, until_core=True)
    while state.unknown_core and _inactivate_one(state, topo):
        _drain(state, topo, until_core=True)
    if state.inactivated:
        _solve_inactive(state, topo)
    return state


@dataclass(frozen=True)
class DecodeStats:
    rounds: tuple[int, ...]
    peeled: int
    tail_recovered: int
    inactivations: int
    unresolved_sources: int
    unresolved_by_layer: tuple[int, ...]
    stall_layer: int | None


def decode_stats(state: PeelingState) -> DecodeStats:
    """Per-round recovery counts and, for a stalled decode, the lowest layer left incomplete."""
    by_layer = tuple(state.unknown_in_layer(i) for i in range(len(state.graph.layers)))
    stall = None
    if state.unknown_sources:
        stall = next(i for i, u in enumerate(by_layer) if u)
    return DecodeStats(
        rounds=tuple(state.rounds),
        peeled=sum(state.rounds),
        tail_recovered=state.tail_recovered,
        inactivations=len(state.inactivated),
        unresolved_sources=state.unknown_sources,
        unresolved_by_layer=by_layer,
        stall_layer=stall,
    )


def cascade_decode_state(
    packets: Iterable[Packet], params: CodeParameters, graph: CascadeGraph, inactivation: bool = True
) -> tuple[DecodeOutcome, PeelingState | None]:
    received = collect_packets(packets, params)
    if len(received) < params.k:
        return Insufficient(len(received) * params.l, params.k * params.l), None
    state = peel(received, graph, params.payload_bytes, inactivation)
    if state.unknown_sources:
        return Stalled(state.unknown_sources), state
    size = params.payload_bytes
    padded = b"".join(v.to_bytes(size, "little") for v in state.values[:params.k])
    return Success(unpad_message(padded)), state


def cascade_decode(
    packets: Iterable[Packet], params: CodeParameters, graph: CascadeGraph, inactivation: bool = True
) -> DecodeOutcome:
    return cascade_decode_state(packets, params, graph, inactivation)[0]


class CascadeCodec:
    def __init__(self, inactivation: bool = True):
        self.inactivation = inactivation

    def encode(self, message: bytes, params: CodeParameters, block_id: int = 0) -> list[Packet]:
        return cascade_encode(pad_message(message, params), params, build_cascade_graph(params), block_id)

    def decode(self, packets: Iterable[Packet], params: CodeParameters) -> DecodeOutcome:
        return cascade_decode(packets, params, build_cascade_graph(params), self.inactivation)
