"""Structural feature extraction and ranking of candidate lock sites."""
from __future__ import annotations

from dataclasses import dataclass, asdict

from .netlist import Netlist

# score weights: downstream influence, depth, output-cone coverage, observability
W_TFO, W_DEPTH, W_CONE, W_OBS = 0.35, 0.25, 0.20, 0.20


@dataclass(frozen=True)
class NodeFeatures:
    """Per-gate-output structural features."""

    node: str
    depth: int           # longest input-to-node path, in gates
    fanout: int          # number of distinct gates reading the node
    tfo_size: int        # gates strictly downstream
    cone_coverage: float # fraction of primary outputs reachable
    observability: float # 1 / (1 + shortest gate-distance to an output)


@dataclass(frozen=True)
class CircuitStats:
    gate_count: int
    max_depth: int
    n_inputs: int
    n_outputs: int


@dataclass(frozen=True)
class RankedSites:
    """Gate outputs ordered by locking desirability (score desc, id asc)."""

    entries: tuple[tuple[str, float], ...]
    circuit_stats: CircuitStats

    def nodes(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)


def compute_features(n: Netlist) -> dict[str, NodeFeatures]:
    """Extract :class:`NodeFeatures` for every gate output of a valid netlist."""
    topo = n.topo_gates()
    sinks = n.sink_map()
    inputs = set(n.inputs_all)

    depth: dict[str, int] = {s: 0 for s in inputs}
    for g in topo:
        depth[g.output] = 1 + max((depth.get(f, 0) for f in g.fanin), default=0)

    # word-packed reachable-set DP over the reversed DAG
    gate_bit = {g.output: 1 << i for i, g in enumerate(topo)}
    out_positions: dict[str, int] = {}
    for i, o in enumerate(n.primary_outputs):
        out_positions.setdefault(o, 1 << i)
    n_outputs = len(n.primary_outputs)

    reach_gates: dict[str, int] = {}
    reach_outs: dict[str, int] = {}
    dist_out: dict[str, int] = {}
    for g in reversed(topo):
        s = g.output
        rg = 0
        ro = out_positions.get(s, 0)
        d = 0 if s in out_positions else None
        for snk in sinks.get(s, ()):
            rg |= gate_bit[snk.output] | reach_gates[snk.output]
            ro |= reach_outs[snk.output]
            dd = dist_out.get(snk.output)
            if dd is not None and (d is None or dd + 1 < d):
                d = dd + 1
        reach_gates[s] = rg
        reach_outs[s] = ro
        if d is not None:
            dist_out[s] = d

    feats = {}
    for g in topo:
        s = g.output
        d = dist_out.get(s)
        feats[s] = NodeFeatures(
            node=s,
            depth=depth[s],
            fanout=len({snk.output for snk in sinks.get(s, ())}),
            tfo_size=reach_gates[s].bit_count(),
            cone_coverage=(reach_outs[s].bit_count() / n_outputs) if n_outputs else 0.0,
            observability=1.0 / (1 + d) if d is not None else 0.0,
        )
    return feats


def rank_nodes(n: Netlist, feats: dict[str, NodeFeatures]) -> RankedSites:
    """Score and order gate outputs; scores are a convex combination in [0, 1]."""
    g_total = max(len(n.gates), 1)
    d_max = max((f.depth for f in feats.values()), default=1) or 1
    scored = []
    for s, f in feats.items():
        score = (W_TFO * f.tfo_size / g_total
                 + W_DEPTH * f.depth / d_max
                 + W_CONE * f.cone_coverage
                 + W_OBS * f.observability)
        scored.append((s, score))
    scored.sort(key=lambda e: (-e[1], e[0]))
    stats = CircuitStats(
        gate_count=len(n.gates),
        max_depth=max((f.depth for f in feats.values()), default=0),
        n_inputs=len(n.primary_inputs),
        n_outputs=len(n.primary_outputs),
    )
    return RankedSites(tuple(scored), stats)


def analysis_report(n: Netlist) -> dict:
    """JSON-ready report: circuit stats plus per-node features and scores."""
    feats = compute_features(n)
    ranked = rank_nodes(n, feats)
    return {
        "circuit": n.name,
        "stats": asdict(ranked.circuit_stats),
        "nodes": [
            {"node": node, "score": score, **asdict(feats[node])}
            for node, score in ranked.entries
        ],
    }
