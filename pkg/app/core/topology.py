# The module generates random circular WSN topologies around a single sink and
# persists scenarios (parameters, coordinates, sink ids and the full Q matrix) as JSON.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import json
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, ValidationError

from app.config import settings
from app.core.channel import build_quality_matrix
from app.core.exceptions import GenerationError, ScenarioParseError
from app.core.logger import console
from app.models.network import (
    INTERFERENCE_PRR,
    ChannelParams,
    LinkQualityMatrix,
    Network,
    Node,
    TopologyParams,
)

SINK_ID = 0
SCENARIO_VERSION = 1

Scenario = Tuple[Network, LinkQualityMatrix, ChannelParams, Optional[TopologyParams]]


def routable_graph(Q: LinkQualityMatrix) -> nx.DiGraph:
    """Directed graph of the links above the interference-only level."""
    graph = nx.DiGraph()
    graph.add_nodes_from(Q.receivers)
    rows, cols = np.nonzero(Q.values > INTERFERENCE_PRR)
    graph.add_edges_from((Q.transmitters[i], Q.receivers[j]) for i, j in zip(rows, cols))
    return graph


def unreachable_transceivers(net: Network, Q: LinkQualityMatrix) -> List[int]:
    graph = routable_graph(Q)
    reaching = set()
    for sink in net.sinks:
        reaching |= nx.ancestors(graph, sink)
    return [t for t in net.transceiver_ids if t not in reaching]


def _draw_positions(rng: np.random.Generator, tp: TopologyParams) -> List[Node]:
    # One (angle, radius) pair per node in node order; inner nodes come first.
    draws = rng.random((tp.n, 2))
    inner = tp.inner_count
    nodes = [Node(id=SINK_ID, x=0.0, y=0.0)]
    for index, (u_angle, u_radius) in enumerate(draws):
        angle = 2.0 * math.pi * u_angle
        if index < inner:
            radius = tp.inner_radius * math.sqrt(u_radius)
        else:
            radius = math.sqrt(tp.inner_radius ** 2 + u_radius * (tp.radius ** 2 - tp.inner_radius ** 2))
        nodes.append(Node(id=index + 1, x=radius * math.cos(angle), y=radius * math.sin(angle)))
    return nodes


def generate_topology(
    tp: TopologyParams,
    cp: ChannelParams,
    max_redraws: Optional[int] = None,
) -> Tuple[Network, LinkQualityMatrix]:
    """
    Places one sink (id 0) at the center and n transceivers (ids 1..n) around it:
    floor(n*lam/(lam+1)) uniformly in the inner disk, the rest uniformly in the
    annulus. Every transceiver is a packet source. Draws come from a PCG64 stream
    seeded with tp.seed; a draw in which some transceiver cannot reach the sink over
    transmission-range links is discarded and the stream continues.
    """
    if tp.inner_radius > tp.radius:
        raise GenerationError("Inner radius exceeds the topology radius", tp.seed)
    limit = settings.MAX_TOPOLOGY_REDRAWS if max_redraws is None else max_redraws
    rng = np.random.Generator(np.random.PCG64(tp.seed))

    for attempt in range(limit + 1):
        nodes = _draw_positions(rng, tp)
        net = Network(
            nodes=tuple(nodes),
            sinks=frozenset({SINK_ID}),
            transceivers=frozenset(node.id for node in nodes if node.id != SINK_ID),
        )
        Q = build_quality_matrix(net, cp)
        stranded = unreachable_transceivers(net, Q)
        if not stranded:
            if attempt:
                console.debug(f"Seed {tp.seed}: connected topology after {attempt} redraw(s).")
            return net, Q
        console.debug(f"Seed {tp.seed}: draw {attempt} leaves {len(stranded)} transceiver(s) disconnected.")

    raise GenerationError(f"No connected topology of {tp.n} nodes after {limit} redraws", tp.seed)


# --- Scenario files ---

class ScenarioNode(BaseModel):
    id: int
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    is_sink: bool


class ScenarioParams(BaseModel):
    channel: ChannelParams = Field(default_factory=ChannelParams)
    topology: Optional[TopologyParams] = None


class ScenarioDocument(BaseModel):
    """On-disk layout. q rows follow the transceivers in id order, columns all nodes in id order."""
    version: int = SCENARIO_VERSION
    params: ScenarioParams
    nodes: List[ScenarioNode]
    q: List[List[float]]


def _line_of(text: str, field: str) -> Optional[int]:
    position = text.find(f'"{field}"')
    return text.count("\n", 0, position) + 1 if position >= 0 else None


def save_scenario(
    path: Union[str, Path],
    net: Network,
    Q: LinkQualityMatrix,
    cp: ChannelParams,
    tp: Optional[TopologyParams] = None,
) -> Path:
    """Writes the scenario as UTF-8 JSON; floats use the shortest round-trip representation."""
    path = Path(path)
    order = {p: j for j, p in enumerate(Q.receivers)}
    rows = [Q.values[Q.row_index[t]] for t in net.transceiver_ids]
    q = [[float(row[order[p]]) for p in net.node_ids] for row in rows]
    document = ScenarioDocument(
        params=ScenarioParams(channel=cp, topology=tp),
        nodes=[
            ScenarioNode(id=p, x=net.positions[p][0], y=net.positions[p][1], is_sink=p in net.sinks)
            for p in net.node_ids
        ],
        q=q,
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document.model_dump(mode="json"), indent=1), encoding="utf-8")
    console.debug(f"Scenario with {len(net.node_ids)} nodes written to {path}.")
    return path


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Reads a scenario written by save_scenario (or authored by hand in the same layout)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(str(path), "<file>", str(e)) from e

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(str(path), "<document>", e.msg, line=e.lineno) from e

    try:
        document = ScenarioDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first["loc"]
        field = ".".join(str(part) if isinstance(part, str) else f"[{part}]" for part in loc).replace(".[", "[")
        top = str(loc[0]) if loc else "<document>"
        raise ScenarioParseError(str(path), field or top, first["msg"], line=_line_of(text, top)) from e

    sinks = frozenset(node.id for node in document.nodes if node.is_sink)
    if not sinks:
        raise ScenarioParseError(str(path), "nodes.is_sink", "no node is marked as sink", line=_line_of(text, "nodes"))
    try:
        net = Network(
            nodes=tuple(Node(id=node.id, x=node.x, y=node.y) for node in document.nodes),
            sinks=sinks,
            transceivers=frozenset(node.id for node in document.nodes if not node.is_sink),
        )
    except ValidationError as e:
        raise ScenarioParseError(str(path), "nodes", e.errors()[0]["msg"], line=_line_of(text, "nodes")) from e

    expected = (len(net.transceiver_ids), len(net.node_ids))
    if len(document.q) != expected[0] or any(len(row) != expected[1] for row in document.q):
        raise ScenarioParseError(
            str(path), "q", f"expected a {expected[0]} x {expected[1]} matrix", line=_line_of(text, "q"),
        )
    try:
        Q = LinkQualityMatrix(transmitters=net.transceiver_ids, receivers=net.node_ids, values=document.q)
    except ValidationError as e:
        raise ScenarioParseError(str(path), "q", e.errors()[0]["msg"], line=_line_of(text, "q")) from e

    console.debug(f"Scenario {path} loaded: {len(net.transceiver_ids)} transceivers, sinks {sorted(net.sinks)}.")
    return net, Q, document.params.channel, document.params.topology


if __name__ == "__main__":
    params = settings.topology_params(n=50, seed=7)
    network, matrix = generate_topology(params, settings.channel_params)
    links = matrix.values[matrix.values > INTERFERENCE_PRR]
    console.display_data_as_table(
        {
            "transceivers": len(network.transceiver_ids),
            "inner nodes": params.inner_count,
            "routable links": int(links.size),
            "weakest routable PRR": f"{links.min():.4f}",
        },
        f"Topology n={params.n}, seed={params.seed}",
    )
