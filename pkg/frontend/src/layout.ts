// Deterministic force-directed layout for small transition-system graphs:
// spring forces along edges, pairwise repulsion, centre gravity, fixed
// iteration count. No randomness, so renders are reproducible.

export interface LayoutNode {
  id: number;
  x: number;
  y: number;
}

export interface LayoutEdge {
  src: number;
  dst: number;
}

export function layoutGraph(
  numNodes: number,
  edges: LayoutEdge[],
  width = 640,
  height = 420,
  iterations = 150,
): LayoutNode[] {
  if (numNodes === 0) return [];
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 2 - 40;
  const nodes: LayoutNode[] = [];
  for (let i = 0; i < numNodes; i += 1) {
    const angle = (2 * Math.PI * i) / numNodes;
    nodes.push({ id: i, x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) });
  }
  if (numNodes === 1) {
    nodes[0].x = cx;
    nodes[0].y = cy;
    return nodes;
  }
  const ideal = Math.min(160, (2 * radius) / Math.sqrt(numNodes));
  const springs = edges.filter((e) => e.src !== e.dst);
  for (let step = 0; step < iterations; step += 1) {
    const t = 1 - step / iterations;             // cooling
    const fx = new Array(numNodes).fill(0);
    const fy = new Array(numNodes).fill(0);
    for (let i = 0; i < numNodes; i += 1) {
      for (let j = i + 1; j < numNodes; j += 1) {
        let dx = nodes[i].x - nodes[j].x;
        let dy = nodes[i].y - nodes[j].y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-6) {
          // deterministic tie-break for coincident nodes
          dx = 0.1 * (i - j);
          dy = 0.07 * (i + 1);
          d2 = dx * dx + dy * dy;
        }
        const push = (ideal * ideal) / d2;
        fx[i] += dx * push;
        fy[i] += dy * push;
        fx[j] -= dx * push;
        fy[j] -= dy * push;
      }
    }
    for (const { src, dst } of springs) {
      const dx = nodes[dst].x - nodes[src].x;
      const dy = nodes[dst].y - nodes[src].y;
      const d = Math.sqrt(dx * dx + dy * dy) || 1;
      const pull = (d - ideal) / d / 4;
      fx[src] += dx * pull;
      fy[src] += dy * pull;
      fx[dst] -= dx * pull;
      fy[dst] -= dy * pull;
    }
    for (const node of nodes) {
      fx[node.id] += (cx - node.x) / 50;
      fy[node.id] += (cy - node.y) / 50;
    }
    const cap = 12 * t + 1;
    for (const node of nodes) {
      const mx = Math.max(-cap, Math.min(cap, fx[node.id]));
      const my = Math.max(-cap, Math.min(cap, fy[node.id]));
      node.x = Math.max(24, Math.min(width - 24, node.x + mx));
      node.y = Math.max(24, Math.min(height - 24, node.y + my));
    }
  }
  return nodes;
}
