"""Path enumeration, role classification (chain/fork/collider),
d-separation, backdoor paths and adjustment sets.

A path traverses edges in either direction; a bidirected edge carries an
arrowhead at both endpoints, so it behaves like a fork through a hidden
common cause and can never make its endpoints into through-going chains.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import GraphTooLarge, NoValidSet, PathExplosion
from .graph import BIDIRECTED, CausalGraph, Edge

CHAIN = "chain"
FORK = "fork"
COLLIDER = "collider"

BLOCK_NONCOLLIDER = "non-collider adjusted"
BLOCK_COLLIDER = "collider not adjusted or descended-into"

ROLE_CONFOUNDER = "confounder"
ROLE_MEDIATOR = "mediator"
ROLE_COLLIDER = "collider"
ROLE_NEUTRAL = "neutral"

DEFAULT_MAX_LEN = 16
DEFAULT_PATH_CAP = 100_000

# exhaustive subset search beyond this many candidate nodes is refused
MAX_ADJUSTMENT_CANDIDATES = 12


@dataclass(frozen=True)
class Path:
    """Simple walk between two nodes; ``edges[i]`` joins ``nodes[i]`` and
    ``nodes[i+1]`` and may be traversed against its direction."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.edges)

    def role_at(self, position: int) -> str:
        """Role of the intermediate node at ``position`` (1..len-1)."""
        if not 0 < position < len(self.nodes) - 1:
            raise ValueError("endpoints carry no role")
        node = self.nodes[position]
        head_in = self.edges[position - 1].arrow_at(node)
        head_out = self.edges[position].arrow_at(node)
        if head_in and head_out:
            return COLLIDER
        if not head_in and not head_out:
            return FORK
        return CHAIN

    def describe(self) -> str:
        parts = [self.nodes[0]]
        for i, edge in enumerate(self.edges):
            if edge.kind == BIDIRECTED:
                glyph = "<->"
            elif edge.source == self.nodes[i]:
                glyph = "->"
            else:
                glyph = "<-"
            parts.append(glyph)
            parts.append(self.nodes[i + 1])
        return " ".join(parts)

    def is_directed_forward(self) -> bool:
        """True when every edge is directed and traversed source to target."""
        return all(e.is_directed and e.source == self.nodes[i] for i, e in enumerate(self.edges))


@dataclass(frozen=True)
class NodeRole:
    node: str
    role: str


@dataclass(frozen=True)
class Blocker:
    node: str
    reason: str


@dataclass(frozen=True)
class PathStatus:
    path: Path
    roles: tuple[NodeRole, ...]
    open: bool
    blockers: tuple[Blocker, ...]


@dataclass(frozen=True)
class AdjustmentReport:
    exposure: str
    outcome: str
    valid_sets: tuple[frozenset[str], ...]
    minimal_sets: tuple[frozenset[str], ...]
    variable_roles: dict[str, tuple[str, ...]]


def _walk(g, source, target, max_len, cap, collider_free):
    """DFS over simple mixed paths; optionally prunes collider junctions."""
    g.index(source)
    g.index(target)
    found: list[Path] = []
    nodes = [source]
    edges: list[Edge] = []
    on_path = {source}

    def extend():
        here = nodes[-1]
        for edge in g.incident(here):
            nxt = edge.other(here)
            if nxt in on_path:
                continue
            if collider_free and edges:
                head_in = edges[-1].arrow_at(here)
                head_out = edge.arrow_at(here)
                if head_in and head_out:
                    continue
            nodes.append(nxt)
            edges.append(edge)
            if nxt == target:
                found.append(Path(tuple(nodes), tuple(edges)))
                if len(found) > cap:
                    raise PathExplosion(cap)
            elif len(edges) < max_len:
                on_path.add(nxt)
                extend()
                on_path.discard(nxt)
            nodes.pop()
            edges.pop()

    extend()
    kind_rank = {False: 1, True: 0}
    found.sort(
        key=lambda p: (
            tuple(g.index(n) for n in p.nodes),
            tuple(kind_rank[e.is_directed] for e in p.edges),
        )
    )
    return found


def all_paths(
    g: CausalGraph,
    source: str,
    target: str,
    max_len: int = DEFAULT_MAX_LEN,
    cap: int = DEFAULT_PATH_CAP,
) -> list[Path]:
    """Every simple path between two nodes, any edge orientations, up to
    ``max_len`` edges; deterministic lexicographic order."""
    if source == target:
        raise ValueError("path endpoints must differ")
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    return _walk(g, source, target, max_len, cap, collider_free=False)


def treks(
    g: CausalGraph,
    source: str,
    target: str,
    max_len: int = DEFAULT_MAX_LEN,
    cap: int = DEFAULT_PATH_CAP,
) -> list[Path]:
    """Collider-free simple paths (at most one bidirected edge follows)."""
    if source == target:
        raise ValueError("trek endpoints must differ")
    return _walk(g, source, target, max_len, cap, collider_free=True)


def directed_paths(
    g: CausalGraph,
    source: str,
    target: str,
    avoiding: frozenset[str] | set[str] = frozenset(),
    cap: int = DEFAULT_PATH_CAP,
) -> list[Path]:
    """Forward-directed simple paths from source to target that avoid the
    given intermediate nodes."""
    g.index(source)
    g.index(target)
    found: list[Path] = []
    nodes = [source]
    edges: list[Edge] = []
    on_path = {source}

    def extend():
        here = nodes[-1]
        for child in g.sorted_nodes(g.children(here)):
            if child in on_path or (child != target and child in avoiding):
                continue
            edge = Edge(here, child)
            nodes.append(child)
            edges.append(edge)
            if child == target:
                found.append(Path(tuple(nodes), tuple(edges)))
                if len(found) > cap:
                    raise PathExplosion(cap)
            else:
                on_path.add(child)
                extend()
                on_path.discard(child)
            nodes.pop()
            edges.pop()

    extend()
    found.sort(key=lambda p: tuple(g.index(n) for n in p.nodes))
    return found


def path_status(g: CausalGraph, path: Path, adjusted=frozenset()) -> PathStatus:
    """Open/blocked status of one path under an adjustment set.

    Open iff every non-collider on the path is unadjusted and every
    collider is adjusted or has an adjusted descendant.
    """
    adjusted = frozenset(adjusted)
    for node in adjusted:
        g.index(node)
    if path.source in adjusted or path.target in adjusted:
        raise ValueError("path endpoints cannot be adjusted")
    roles = []
    blockers = []
    for k in range(1, len(path.nodes) - 1):
        node = path.nodes[k]
        role = path.role_at(k)
        roles.append(NodeRole(node, role))
        if role == COLLIDER:
            if node not in adjusted and not (g.descendants(node) & adjusted):
                blockers.append(Blocker(node, BLOCK_COLLIDER))
        elif node in adjusted:
            blockers.append(Blocker(node, BLOCK_NONCOLLIDER))
    return PathStatus(path, tuple(roles), open=not blockers, blockers=tuple(blockers))


def backdoor_paths(
    g: CausalGraph,
    exposure: str,
    outcome: str,
    max_len: int | None = None,
    cap: int = DEFAULT_PATH_CAP,
) -> list[Path]:
    """Paths from exposure to outcome whose first step enters the exposure
    through an arrowhead (incoming directed edge or bidirected edge)."""
    if max_len is None:
        max_len = max(1, len(g.nodes))
    paths = all_paths(g, exposure, outcome, max_len=max_len, cap=cap)
    return [p for p in paths if p.edges[0].arrow_at(exposure)]


def is_d_separated(g: CausalGraph, u: str, v: str, given=frozenset(), cap: int = DEFAULT_PATH_CAP) -> bool:
    """True when every path between u and v is blocked by ``given``."""
    for p in all_paths(g, u, v, max_len=max(1, len(g.nodes)), cap=cap):
        if path_status(g, p, given).open:
            return False
    return True


def adjustment_sets(g: CausalGraph, exposure: str, outcome: str, cap: int = DEFAULT_PATH_CAP) -> AdjustmentReport:
    """Valid and minimal backdoor adjustment sets plus per-variable roles.

    A set is valid when it blocks every backdoor path and contains no
    descendant of the exposure.  Enumeration is exhaustive over subsets of
    the allowed candidates and refuses graphs with more than
    MAX_ADJUSTMENT_CANDIDATES of them.
    """
    if exposure == outcome:
        raise ValueError("exposure and outcome must differ")
    g.index(exposure)
    g.index(outcome)

    forbidden = g.descendants(exposure) | {exposure, outcome}
    candidates = g.sorted_nodes(n for n in g.nodes if n not in forbidden)
    if len(candidates) > MAX_ADJUSTMENT_CANDIDATES:
        raise GraphTooLarge(
            f"{len(candidates)} candidate nodes exceed the exhaustive-search "
            f"limit of {MAX_ADJUSTMENT_CANDIDATES}"
        )

    backdoor = backdoor_paths(g, exposure, outcome, cap=cap)
    valid: list[frozenset[str]] = []
    for size in range(len(candidates) + 1):
        for combo in combinations(candidates, size):
            s = frozenset(combo)
            if all(not path_status(g, p, s).open for p in backdoor):
                valid.append(s)
    if not valid:
        raise NoValidSet(
            f"no subset of {{{', '.join(candidates)}}} blocks every backdoor "
            f"path between {exposure!r} and {outcome!r}"
        )
    minimal = [s for s in valid if not any(t < s for t in valid)]

    roles = _variable_roles(g, exposure, outcome, backdoor, cap)
    return AdjustmentReport(
        exposure=exposure,
        outcome=outcome,
        valid_sets=tuple(valid),
        minimal_sets=tuple(minimal),
        variable_roles=roles,
    )


def _variable_roles(g, exposure, outcome, backdoor, cap):
    third = [n for n in g.nodes if n not in (exposure, outcome)]
    on_directed: set[str] = set()
    for p in directed_paths(g, exposure, outcome, cap=cap):
        on_directed.update(p.nodes[1:-1])
    noncollider_on_backdoor: set[str] = set()
    for p in backdoor:
        for k in range(1, len(p.nodes) - 1):
            if p.role_at(k) != COLLIDER:
                noncollider_on_backdoor.add(p.nodes[k])
    collider_on_any: set[str] = set()
    for p in all_paths(g, exposure, outcome, max_len=max(1, len(g.nodes)), cap=cap):
        for k in range(1, len(p.nodes) - 1):
            if p.role_at(k) == COLLIDER:
                collider_on_any.add(p.nodes[k])

    roles: dict[str, tuple[str, ...]] = {}
    for node in third:
        labels = []
        if node in noncollider_on_backdoor:
            labels.append(ROLE_CONFOUNDER)
        if node in on_directed:
            labels.append(ROLE_MEDIATOR)
        if node in collider_on_any:
            labels.append(ROLE_COLLIDER)
        roles[node] = tuple(labels) if labels else (ROLE_NEUTRAL,)
    return roles
