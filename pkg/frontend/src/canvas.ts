/**
 * Canvas view state: node boxes, edges, and the viewport transform.
 * Layout moves are the only optimistic mutation; fact and narrative state
 * always waits for the server. A side-by-side layout mode lays charts on
 * the left and text on the right with carts between, as an alternative to
 * the free-form flow layout.
 */

export interface NodeBox {
  id: string;
  kind: 'vis' | 'text';
  x: number;
  y: number;
  w: number;
  h: number;
}

export type LayoutMode = 'flow' | 'sideBySide';

export class CanvasView {
  nodes = new Map<string, NodeBox>();
  edges: Array<[string, string]> = [];
  panX = 0;
  panY = 0;
  zoom = 1;
  layoutMode: LayoutMode = 'flow';

  addNode(box: NodeBox): void {
    this.nodes.set(box.id, { ...box });
  }

  removeNode(id: string): void {
    this.nodes.delete(id);
    this.edges = this.edges.filter(([from, to]) => from !== id && to !== id);
  }

  addEdge(from: string, to: string): void {
    this.edges.push([from, to]);
  }

  moveNode(id: string, x: number, y: number): void {
    const node = this.nodes.get(id);
    if (!node) throw new Error(`unknown canvas node '${id}'`);
    node.x = x;
    node.y = y;
  }

  resizeNode(id: string, w: number, h: number): void {
    const node = this.nodes.get(id);
    if (!node) throw new Error(`unknown canvas node '${id}'`);
    node.w = w;
    node.h = h;
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
  }

  zoomAt(factor: number, cx: number, cy: number): void {
    const next = Math.min(4, Math.max(0.25, this.zoom * factor));
    const scale = next / this.zoom;
    // keep the world point under (cx, cy) fixed while zooming
    this.panX = cx - (cx - this.panX) * scale;
    this.panY = cy - (cy - this.panY) * scale;
    this.zoom = next;
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [(sx - this.panX) / this.zoom, (sy - this.panY) / this.zoom];
  }

  /** Effective box per the active layout; sideBySide ignores stored x/y. */
  layoutBox(id: string): NodeBox {
    const node = this.nodes.get(id);
    if (!node) throw new Error(`unknown canvas node '${id}'`);
    if (this.layoutMode === 'flow') return { ...node };
    const column = node.kind === 'vis' ? 0 : 1;
    const siblings = [...this.nodes.values()].filter((n) => n.kind === node.kind);
    const rowIndex = siblings.findIndex((n) => n.id === id);
    return {
      ...node,
      x: column === 0 ? 40 : 760,
      y: 40 + rowIndex * (node.h + 40),
    };
  }

  edgePath(from: string, to: string): string {
    const a = this.layoutBox(from);
    const b = this.layoutBox(to);
    const x0 = a.x + a.w;
    const y0 = a.y + a.h / 2;
    const x1 = b.x;
    const y1 = b.y + b.h / 2;
    const mid = (x0 + x1) / 2;
    return `M ${x0} ${y0} C ${mid} ${y0}, ${mid} ${y1}, ${x1} ${y1}`;
  }
}
