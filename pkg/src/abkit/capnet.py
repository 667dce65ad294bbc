"""Lumped capacitance networks and the matrix algebra built on them.

A network is a set of labelled nodes, each with a capacitance to ground, plus
pairwise capacitances between nodes.  All capacitances are stored in
femtofarads, which keeps matrix entries O(1)-O(100) for realistic circuits.

The node capacitance matrix has ``C_ii = ground(i) + sum_j pair(i, j)`` on the
diagonal and ``-pair(i, j)`` off the diagonal, so each row sums to the ground
capacitance of its node.  Floating-qubit mode analysis proceeds by a congruence
transform onto sum/difference modes, followed by inversion and selection of the
retained (qubit) block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, SingularNetworkError

# Condition number above which matrix inversion is refused as unreliable.
CONDITION_LIMIT = 1e12

MODE_FREE = "free"
MODE_QUBIT = "qubit"
MODE_INTERMEDIATE = "intermediate"


def _as_pair_key(a: str, b: str) -> tuple[str, str]:
    if a == b:
        raise InputError(f"pair capacitance ({a!r}, {b!r}): self-pairs are not allowed")
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class CapacitanceNetwork:
    """Labelled node graph with ground and pairwise capacitances (fF).

    ``pairs`` keys are unordered: they are normalised to sorted tuples, so
    ``pair_cap(a, b) == pair_cap(b, a)`` by construction.
    """

    nodes: tuple[str, ...]
    ground: Mapping[str, float] = field(default_factory=dict)
    pairs: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        nodes = tuple(str(n) for n in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise InputError("network nodes: duplicate labels")
        known = set(nodes)

        ground: dict[str, float] = {}
        for node, cap in dict(self.ground).items():
            if node not in known:
                raise InputError(f"ground capacitance: unknown node {node!r}")
            ground[node] = _checked_cap(cap, f"ground capacitance of node {node!r}")
        for node in nodes:
            ground.setdefault(node, 0.0)

        pairs: dict[tuple[str, str], float] = {}
        for (a, b), cap in dict(self.pairs).items():
            key = _as_pair_key(str(a), str(b))
            for n in key:
                if n not in known:
                    raise InputError(f"pair capacitance {key}: unknown node {n!r}")
            if key in pairs:
                raise InputError(f"pair capacitance {key}: duplicate entry")
            pairs[key] = _checked_cap(cap, f"pair capacitance {key}")

        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "pairs", pairs)

    def ground_cap(self, node: str) -> float:
        return self.ground[node]

    def pair_cap(self, a: str, b: str) -> float:
        return self.pairs.get(_as_pair_key(a, b), 0.0)

    def node_total(self, node: str) -> float:
        """Ground capacitance plus every pair capacitance touching ``node``."""
        total = self.ground[node]
        for (a, b), cap in self.pairs.items():
            if node == a or node == b:
                total += cap
        return total

    def scaled(self, factor: float) -> "CapacitanceNetwork":
        """Return a copy with every capacitance multiplied by ``factor``."""
        if factor <= 0:
            raise InputError(f"scale factor must be positive, got {factor}")
        return CapacitanceNetwork(
            self.nodes,
            {n: c * factor for n, c in self.ground.items()},
            {k: c * factor for k, c in self.pairs.items()},
        )


def _checked_cap(value: float, what: str) -> float:
    cap = float(value)
    if not math.isfinite(cap) or cap < 0:
        raise InputError(f"{what}: must be finite and >= 0, got {value}")
    return cap


@dataclass(frozen=True)
class CapacitanceMatrix:
    """Square symmetric node (or mode) capacitance matrix in fF."""

    labels: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        n = len(self.labels)
        if m.shape != (n, n):
            raise InputError(f"capacitance matrix: shape {m.shape} does not match {n} labels")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.T).max() > 1e-9 * scale:
            raise InputError("capacitance matrix: not symmetric")
        eigvals = np.linalg.eigvalsh(m)
        if eigvals.min() < -1e-9 * scale:
            raise InputError(
                f"capacitance matrix: not positive semidefinite "
                f"(min eigenvalue {eigvals.min():.3e} fF)"
            )
        m.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "entries", m)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"capacitance matrix: unknown label {label!r}") from None


@dataclass(frozen=True)
class ModeLabel:
    """Name and kind of one output mode of a transform."""

    name: str
    kind: str  # one of MODE_FREE, MODE_QUBIT, MODE_INTERMEDIATE


@dataclass(frozen=True)
class ModeTransform:
    """Invertible linear map from node fluxes to circuit modes."""

    matrix: np.ndarray
    mode_labels: tuple[ModeLabel, ...]

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        n = len(self.mode_labels)
        if m.shape != (n, n):
            raise InputError(f"mode transform: shape {m.shape} does not match {n} modes")
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise InputError(f"mode transform: singular matrix (condition number {cond:.3e})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "mode_labels", tuple(self.mode_labels))

    def mode_names(self, kind: str | None = None) -> tuple[str, ...]:
        return tuple(m.name for m in self.mode_labels if kind is None or m.kind == kind)


@dataclass(frozen=True)
class InverseBlock:
    """Retained block of an inverted mode capacitance matrix (1/fF)."""

    labels: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        n = len(self.labels)
        if m.shape != (n, n):
            raise InputError(f"inverse block: shape {m.shape} does not match {n} labels")
        if np.abs(m - m.T).max() > 1e-9 * max(np.abs(m).max(), 1e-30):
            raise InputError("inverse block: not symmetric")
        if np.any(np.diag(m) <= 0):
            raise InputError("inverse block: diagonal entries must be strictly positive")
        m.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "entries", m)

    def entry(self, a: str, b: str) -> float:
        i = self.labels.index(a)
        j = self.labels.index(b)
        return float(self.entries[i, j])


def build_matrix(net: CapacitanceNetwork, order: Sequence[str] | None = None) -> CapacitanceMatrix:
    """Assemble the node capacitance matrix of ``net`` in the given node order.

    Diagonal entries are the node totals (ground plus incident pair
    capacitances), off-diagonal entries are minus the pair capacitances.
    """
    if order is None:
        order = net.nodes
    order = tuple(str(n) for n in order)
    if sorted(order) != sorted(net.nodes):
        unknown = [n for n in order if n not in net.nodes]
        if unknown:
            raise InputError(f"build_matrix: unknown node label {unknown[0]!r} in order")
        raise InputError("build_matrix: order must be a permutation of the network nodes")

    n = len(order)
    idx = {node: i for i, node in enumerate(order)}
    m = np.zeros((n, n))
    for (a, b), cap in net.pairs.items():
        i, j = idx[a], idx[b]
        m[i, j] -= cap
        m[j, i] -= cap
    for node, i in idx.items():
        m[i, i] = net.node_total(node)
    return CapacitanceMatrix(order, m)


def floating_pair_transform(
    pairs: Sequence[tuple[str, str]],
    passthrough: Sequence[str] = (),
    order: Sequence[str] | None = None,
) -> ModeTransform:
    """Build the sum/difference mode transform for floating qubit pads.

    Each pad pair ``(a, b)`` contributes a free sum mode ``a+b`` and a qubit
    difference mode ``b-a`` (flux of ``b`` minus flux of ``a``; the pair order
    fixes the sign convention of the qubit mode).  Passthrough nodes map to
    themselves and are tagged intermediate.  Entries of the resulting matrix
    are all in {-1, 0, 1}.

    ``order`` fixes the node ordering of both axes; it defaults to the sorted
    node labels.  Output mode rows sit at the positions of their nodes: the sum
    row at the first position the pair occupies in ``order``, the difference
    row at the second.
    """
    pair_list = [(str(a), str(b)) for a, b in pairs]
    passthrough = [str(n) for n in passthrough]
    seen: set[str] = set()
    for a, b in pair_list:
        if a == b:
            raise InputError(f"floating pair ({a!r}, {b!r}): nodes must differ")
        for n in (a, b):
            if n in seen:
                raise InputError(f"floating pairs: node {n!r} appears more than once")
            seen.add(n)
    for n in passthrough:
        if n in seen:
            raise InputError(f"passthrough node {n!r} also appears in a pair")
        seen.add(n)

    if order is None:
        order = sorted(seen)
    order = [str(n) for n in order]
    if sorted(order) != sorted(seen):
        raise InputError("floating_pair_transform: order must list exactly the pair and passthrough nodes")

    idx = {node: i for i, node in enumerate(order)}
    n = len(order)
    matrix = np.zeros((n, n))
    labels: list[ModeLabel | None] = [None] * n

    for a, b in pair_list:
        ia, ib = idx[a], idx[b]
        first, second = min(ia, ib), max(ia, ib)
        # Sum (free) mode at the pair's first position, difference (qubit) at the second.
        matrix[first, ia] = 1.0
        matrix[first, ib] = 1.0
        matrix[second, ia] = -1.0
        matrix[second, ib] = 1.0
        labels[first] = ModeLabel(f"{a}+{b}", MODE_FREE)
        labels[second] = ModeLabel(f"{b}-{a}", MODE_QUBIT)
    for node in passthrough:
        i = idx[node]
        matrix[i, i] = 1.0
        labels[i] = ModeLabel(node, MODE_INTERMEDIATE)

    return ModeTransform(matrix, tuple(labels))  # type: ignore[arg-type]


def transform_matrix(cap: CapacitanceMatrix, transform: ModeTransform) -> CapacitanceMatrix:
    """Congruence-transform ``cap`` into the mode frame of ``transform``.

    Returns ``(S^-1)^T C S^-1`` computed by linear solves against ``S``; the
    congruence preserves symmetry and positive semidefiniteness.
    """
    s = transform.matrix
    if s.shape[0] != cap.entries.shape[0]:
        raise InputError(
            f"transform_matrix: dimension mismatch "
            f"({cap.entries.shape[0]} nodes vs {s.shape[0]} modes)"
        )
    # (S^-1)^T C S^-1 = solve(S^T, solve(S^T, C^T)^T)
    half = np.linalg.solve(s.T, cap.entries)
    full = np.linalg.solve(s.T, half.T).T
    full = 0.5 * (full + full.T)
    return CapacitanceMatrix(transform.mode_names(), full)


def reduce_and_invert(cap: CapacitanceMatrix, keep: Sequence[str]) -> InverseBlock:
    """Invert the full matrix, then select the rows/columns named by ``keep``.

    Inversion happens before selection, so discarded modes still load the
    retained ones.  Uses a pivoted linear solve rather than an explicit
    inverse; condition numbers above ``CONDITION_LIMIT`` raise
    :class:`SingularNetworkError` naming the mode closest to decoupling.
    """
    keep = [str(k) for k in keep]
    if len(set(keep)) != len(keep):
        raise InputError("reduce_and_invert: duplicate labels in keep")
    cols = [cap.index(k) for k in keep]

    m = cap.entries
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        eigvals, eigvecs = np.linalg.eigh(m)
        worst = np.argmax(np.abs(eigvecs[:, np.argmin(np.abs(eigvals))]))
        raise SingularNetworkError(
            f"capacitance matrix is singular or near-singular "
            f"(condition number {cond:.3e}); mode {cap.labels[worst]!r} decouples"
        )

    rhs = np.zeros((m.shape[0], len(cols)))
    for j, c in enumerate(cols):
        rhs[c, j] = 1.0
    inv_cols = np.linalg.solve(m, rhs)
    block = inv_cols[cols, :]
    block = 0.5 * (block + block.T)
    return InverseBlock(tuple(keep), block)


# ---------------------------------------------------------------------------
# Netlist JSON interface
# ---------------------------------------------------------------------------

_NETLIST_KEYS = {"nodes", "ground", "pairs"}
_PAIR_KEYS = {"a", "b", "c_fF"}


def netlist_from_dict(data: dict, source: str = "netlist", extra_keys: Iterable[str] = ()) -> CapacitanceNetwork:
    """Build a network from parsed netlist JSON, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected a JSON object at top level")
    allowed = _NETLIST_KEYS | set(extra_keys)
    unknown = set(data) - allowed
    if unknown:
        raise InputError(f"{source}: unknown key {sorted(unknown)[0]!r}")
    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise InputError(f"{source}: 'nodes' must be a list of strings")
    ground = data.get("ground", {})
    if not isinstance(ground, dict):
        raise InputError(f"{source}: 'ground' must be an object mapping node to fF")
    pairs_raw = data.get("pairs", [])
    if not isinstance(pairs_raw, list):
        raise InputError(f"{source}: 'pairs' must be a list")
    pairs: dict[tuple[str, str], float] = {}
    for i, entry in enumerate(pairs_raw):
        if not isinstance(entry, dict) or set(entry) != _PAIR_KEYS:
            raise InputError(f"{source}: pairs[{i}] must have exactly keys a, b, c_fF")
        key = _as_pair_key(str(entry["a"]), str(entry["b"]))
        if key in pairs:
            raise InputError(f"{source}: pairs[{i}]: duplicate pair {key}")
        pairs[key] = entry["c_fF"]
    try:
        return CapacitanceNetwork(tuple(nodes), ground, pairs)
    except InputError as exc:
        raise InputError(f"{source}: {exc}") from None


def parse_netlist(text: str, source: str = "netlist") -> CapacitanceNetwork:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None
    return netlist_from_dict(data, source)


def load_netlist(path: str) -> CapacitanceNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read(), source=path)
