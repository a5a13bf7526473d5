"""Real-world graph ingestion: a GML subset and a plain-text node/edge list.

Both readers apply the same cleaning policy: self-loops dropped, parallel
edges collapsed, nodes without coordinates dropped with their edges, and only
the largest connected component kept.
"""

from __future__ import annotations

import bisect
import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .graph import SpatialNetwork, components, project_and_normalize

log = logging.getLogger(__name__)

LATLON = "latlon"
PLANAR = "xy"


@dataclass
class RawGraph:
    """Graph with original node ids (input order preserved) and per-node coordinates.

    ``coords`` holds (lat, lon) degrees for ``LATLON`` graphs and unit-square
    (x, y) for ``PLANAR`` graphs.
    """

    ids: list
    coords: dict
    edges: list[tuple]
    coord_kind: str = LATLON
    dropped: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.ids)


def clean(ids, coords, edges, coord_kind=LATLON, source="input") -> RawGraph:
    dropped = {"no_coords": [], "self_loops": 0, "duplicates": 0, "outside_lcc": []}
    keep = [i for i in ids if i in coords]
    missing = [i for i in ids if i not in coords]
    if missing:
        log.warning("%s: dropping %d node(s) without coordinates: %s", source, len(missing), missing)
        dropped["no_coords"] = missing
    kept = set(keep)
    seen = set()
    out_edges = []
    for u, v in edges:
        if u == v:
            dropped["self_loops"] += 1
            continue
        if u not in kept or v not in kept:
            continue
        key = frozenset((u, v))
        if key in seen:
            dropped["duplicates"] += 1
            continue
        seen.add(key)
        out_edges.append((u, v))
    if len(keep) >= 1:
        index = {v: k for k, v in enumerate(keep)}
        adj = np.zeros((len(keep), len(keep)), dtype=bool)
        for u, v in out_edges:
            adj[index[u], index[v]] = adj[index[v], index[u]] = True
        labels = components(adj)
        counts = np.bincount(labels)
        big = int(np.argmax(counts))
        if counts.size > 1:
            lost = [keep[k] for k in range(len(keep)) if labels[k] != big]
            log.warning(
                "%s: graph has %d components; keeping the largest (%d nodes), dropping %d node(s)",
                source, counts.size, counts[big], len(lost),
            )
            dropped["outside_lcc"] = lost
            keep = [keep[k] for k in range(len(keep)) if labels[k] == big]
            kept = set(keep)
            out_edges = [(u, v) for u, v in out_edges if u in kept]
    if len(keep) < 2:
        raise DataError(f"{source}: fewer than 2 nodes survive cleaning")
    return RawGraph(keep, {i: coords[i] for i in keep}, out_edges, coord_kind, dropped)


_TOKEN = re.compile(r'\[|\]|"(?:[^"\\]|\\.)*"|[^\s\[\]"]+|"')


def _tokenize(text: str):
    newlines = [m.start() for m in re.finditer("\n", text)]
    for m in _TOKEN.finditer(text):
        line = bisect.bisect_left(newlines, m.start()) + 1
        t = m.group(0)
        if t in ("[", "]"):
            yield t, None, line
        elif t == '"':
            raise DataError("unterminated string", line)
        elif t.startswith('"'):
            yield "str", t[1:-1], line
        else:
            yield "atom", t, line


def _gml_value(tok):
    kind, val, _ = tok
    if kind == "str":
        return val
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        return val


def _parse_gml_list(tokens, depth=0):
    items = []
    for tok in tokens:
        kind, val, line = tok
        if kind == "]":
            if depth == 0:
                raise DataError("unbalanced ']'", line)
            return items
        if kind != "atom" or not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", val):
            raise DataError(f"expected a key, found {val!r}", line)
        try:
            nxt = next(tokens)
        except StopIteration:
            raise DataError(f"key {val!r} has no value", line) from None
        if nxt[0] == "[":
            items.append((val, _parse_gml_list(tokens, depth + 1), line))
        elif nxt[0] == "]":
            raise DataError(f"key {val!r} has no value", nxt[2])
        else:
            items.append((val, _gml_value(nxt), line))
    if depth:
        raise DataError("unterminated '[' block at end of input")
    return items


def _as_float(v):
    if isinstance(v, (int, float)):
        return float(v)
    try:
        return float(v)
    except (TypeError, ValueError):
        return None


def parse_gml(text: str, source: str = "gml") -> RawGraph:
    """Parse the GML subset used by network topology datasets.

    Recognised: ``graph [ node [ id Latitude Longitude ] edge [ source target ] ]``.
    Every other key is ignored.
    """
    items = _parse_gml_list(iter(_tokenize(text)))
    graphs = [v for k, v, _ in items if k == "graph" and isinstance(v, list)]
    if not graphs:
        raise DataError(f"{source}: no 'graph [ ... ]' block found")
    ids, coords, edges = [], {}, []
    for key, val, line in graphs[0]:
        if key == "node" and isinstance(val, list):
            attrs = {k: v for k, v, _ in val}
            if "id" not in attrs:
                raise DataError("node block without id", line)
            nid = attrs["id"]
            if nid in coords or nid in ids:
                raise DataError(f"duplicate node id {nid}", line)
            ids.append(nid)
            lat, lon = _as_float(attrs.get("Latitude")), _as_float(attrs.get("Longitude"))
            if lat is not None and lon is not None:
                coords[nid] = (lat, lon)
        elif key == "edge" and isinstance(val, list):
            attrs = {k: v for k, v, _ in val}
            if "source" not in attrs or "target" not in attrs:
                raise DataError("edge block without source/target", line)
            edges.append((attrs["source"], attrs["target"], line))
    known = set(ids)
    for u, v, line in edges:
        for x in (u, v):
            if x not in known:
                raise DataError(f"edge references unknown node id {x}", line)
    return clean(ids, coords, [(u, v) for u, v, _ in edges], LATLON, source)


def _node_id(tok: str):
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        return tok


_NODE_HEADERS = {("node_id", "lat", "lon"), ("id", "lat", "lon"), ("node_id", "x", "y"), ("id", "x", "y")}
_EDGE_HEADERS = {("source", "target")}


def parse_edge_list(text: str, source: str = "edge list") -> RawGraph:
    """Parse the sectioned text format (see README, "Edge-list format").

    ``nodes:`` rows are ``id,lat,lon``; a ``positions:`` section carries
    planar ``id,x,y`` in the unit square instead. ``edges:`` rows are
    ``source,target``.
    """
    section = None
    coord_kind = None
    ids, coords, edges = [], {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("nodes:", "positions:", "edges:"):
            if low != "edges:":
                kind = LATLON if low == "nodes:" else PLANAR
                if coord_kind is not None and coord_kind != kind:
                    raise DataError("cannot mix 'nodes:' and 'positions:' sections", lineno)
                coord_kind = kind
            section = low[:-1]
            continue
        cells = [c.strip() for c in line.split(",")]
        if section is None:
            raise DataError("data row before any 'nodes:'/'edges:' section", lineno)
        if section in ("nodes", "positions"):
            if tuple(c.lower() for c in cells) in _NODE_HEADERS:
                continue
            if len(cells) != 3:
                raise DataError(f"expected 'id,{'lat,lon' if section == 'nodes' else 'x,y'}', got {line!r}", lineno)
            nid = _node_id(cells[0])
            if nid in coords or nid in ids:
                raise DataError(f"duplicate node id {nid}", lineno)
            ids.append(nid)
            if cells[1] == "" or cells[2] == "":
                continue
            try:
                a, b = float(cells[1]), float(cells[2])
            except ValueError:
                raise DataError(f"non-numeric coordinate in {line!r}", lineno) from None
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DataError(f"non-finite coordinate in {line!r}", lineno)
            coords[nid] = (a, b)
        else:
            if tuple(c.lower() for c in cells) in _EDGE_HEADERS:
                continue
            if len(cells) != 2:
                raise DataError(f"expected 'source,target', got {line!r}", lineno)
            u, v = _node_id(cells[0]), _node_id(cells[1])
            for x in (u, v):
                if x not in ids:
                    raise DataError(f"edge references unknown node id {x}", lineno)
            edges.append((u, v))
    if coord_kind is None:
        raise DataError(f"{source}: no 'nodes:' or 'positions:' section")
    if coord_kind == PLANAR:
        for nid, (x, y) in coords.items():
            if not (0 <= x <= 1 and 0 <= y <= 1):
                raise DataError(f"planar position of node {nid} lies outside the unit square")
    return clean(ids, coords, edges, coord_kind, source)


def serialize_edge_list(raw: RawGraph) -> str:
    if raw.coord_kind == PLANAR:
        lines = ["positions:", "id,x,y"]
    else:
        lines = ["nodes:", "node_id,lat,lon"]
    for i in raw.ids:
        a, b = raw.coords[i]
        lines.append(f"{i},{a!r},{b!r}")
    lines += ["edges:", "source,target"]
    lines += [f"{u},{v}" for u, v in raw.edges]
    return "\n".join(lines) + "\n"


def network_to_raw(G: SpatialNetwork) -> RawGraph:
    ids = list(range(G.n))
    coords = {i: (float(G.positions[i, 0]), float(G.positions[i, 1])) for i in ids}
    return RawGraph(ids, coords, G.edges(), PLANAR)


def to_spatial_network(raw: RawGraph) -> SpatialNetwork:
    """Relabel ids densely in input order, project coordinates, assign unit weights."""
    index = {nid: k for k, nid in enumerate(raw.ids)}
    if raw.coord_kind == LATLON:
        pos = project_and_normalize([raw.coords[i] for i in raw.ids])
    else:
        pos = np.array([raw.coords[i] for i in raw.ids], dtype=float)
    edges = [(index[u], index[v]) for u, v in raw.edges]
    return SpatialNetwork(pos, edges)


def load_graph(path) -> SpatialNetwork:
    """Read a ``.gml`` file or an edge-list file into a SpatialNetwork."""
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc}") from exc
    raw = parse_gml(text, str(p)) if p.suffix.lower() == ".gml" else parse_edge_list(text, str(p))
    return to_spatial_network(raw)
