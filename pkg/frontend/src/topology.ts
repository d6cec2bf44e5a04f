// Topology graph: components as nodes, connectors as edges between the
// components attached to them; constraint violations highlight their
// witnesses.

import { Topology } from "./api.js";

export interface GraphNode {
  handle: string;
  tags: string[];
  offending: boolean;
  x: number;
  y: number;
}

export interface GraphEdge {
  from: string;
  to: string;
  channel: number;
  tags: string[];
}

export interface Graph {
  nodes: GraphNode[];
  edges: GraphEdge[];
  openConnectors: { channel: number; at: string }[];   // attached to one end only
}

export function buildGraph(topo: Topology, offenders: Set<string> = new Set(),
                           width = 480, height = 300): Graph {
  const nodes: GraphNode[] = topo.components.map((c, i) => {
    const angle = (2 * Math.PI * i) / Math.max(1, topo.components.length);
    return {
      handle: c.handle,
      tags: c.tags,
      offending: offenders.has(c.handle),
      x: width / 2 + (width / 2 - 60) * Math.cos(angle),
      y: height / 2 + (height / 2 - 40) * Math.sin(angle),
    };
  });
  const edges: GraphEdge[] = [];
  const open: { channel: number; at: string }[] = [];
  for (const conn of topo.connectors) {
    const ends = topo.attachments
      .filter(([, ch]) => ch === conn.channel)
      .map(([h]) => h);
    if (ends.length === 1) open.push({ channel: conn.channel, at: ends[0] });
    for (let i = 0; i < ends.length; i++) {
      for (let j = i + 1; j < ends.length; j++) {
        edges.push({ from: ends[i], to: ends[j],
                     channel: conn.channel, tags: conn.tags });
      }
    }
  }
  return { nodes, edges, openConnectors: open };
}

export function witnessHandles(
  violations: { witness: Record<string, string> }[]): Set<string> {
  const out = new Set<string>();
  for (const v of violations) {
    for (const handle of Object.values(v.witness)) out.add(handle);
  }
  return out;
}
