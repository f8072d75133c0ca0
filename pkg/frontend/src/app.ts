/**
 * Application shell: binds the flow canvas, chart widgets, carts, narrative
 * controls, recommendation cards, and review previews to the DOM and the API
 * client. State shown to the user always mirrors the latest server response;
 * only node dragging updates the view before the server confirms.
 */

import { ApiClient, StaleSelectionError } from './api.js';
import { CanvasView } from './canvas.js';
import { TextCartView, VisCartView } from './cart.js';
import { NarrativeControls } from './narrative.js';
import { RecommendationCards } from './recommendCards.js';
import { ReviewPage } from './review.js';
import { ChartWidget, Row } from './widgets/base.js';
import { BarWidget } from './widgets/bar.js';
import { LineWidget } from './widgets/line.js';
import { PieDonutWidget, StackedBarWidget, SunburstWidget } from './widgets/parts.js';
import { ScatterWidget } from './widgets/scatter.js';
import { Callout, ChartSpec } from './wire.js';

const WIDGET_BOX = { width: 420, height: 280 };

export function widgetFor(spec: ChartSpec, rows: Row[]): ChartWidget {
  switch (spec.chartType) {
    case 'scatterplot':
      return new ScatterWidget(spec, rows, WIDGET_BOX);
    case 'bar':
      return new BarWidget(spec, rows, WIDGET_BOX);
    case 'line':
      return new LineWidget(spec, rows, WIDGET_BOX);
    case 'stackedBar':
      return new StackedBarWidget(spec, rows, WIDGET_BOX);
    case 'pieDonut':
      return new PieDonutWidget(spec, rows, WIDGET_BOX);
    case 'sunburst':
      return new SunburstWidget(spec, rows, WIDGET_BOX);
  }
}

interface VisNodeState {
  id: string;
  widget: ChartWidget;
  cart: VisCartView | null;
}

interface TextNodeState {
  id: string;
  cart: TextCartView | null;
  narrative: NarrativeControls;
  cards: RecommendationCards;
}

export class App {
  readonly canvas = new CanvasView();
  readonly visNodes = new Map<string, VisNodeState>();
  readonly textNodes = new Map<string, TextNodeState>();
  storyId: string | null = null;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  async start(name = 'untitled story'): Promise<void> {
    const story = await this.api.createStory(name);
    this.storyId = story.id;
    this.redraw();
  }

  async addChartNode(spec: ChartSpec, rows: Row[]): Promise<string> {
    const created = await this.api.createNode({
      storyId: this.storyId,
      kind: 'vis',
      spec,
    });
    const id = created.node.id;
    this.visNodes.set(id, { id, widget: widgetFor(spec, rows), cart: null });
    this.canvas.addNode({ id, kind: 'vis', x: 40, y: 40, w: 440, h: 420 });
    this.redraw();
    return id;
  }

  async addTextNode(): Promise<string> {
    const created = await this.api.createNode({ storyId: this.storyId, kind: 'text' });
    const id = created.node.id;
    this.textNodes.set(id, {
      id,
      cart: null,
      narrative: new NarrativeControls(this.api, id),
      cards: new RecommendationCards([]),
    });
    this.canvas.addNode({ id, kind: 'text', x: 560, y: 40, w: 420, h: 360 });
    this.redraw();
    return id;
  }

  async connect(from: string, to: string): Promise<void> {
    const result = await this.api.connect(from, to);
    this.canvas.addEdge(from, to);
    this.applyCartDeltas(result.carts);
    this.redraw();
  }

  /** Route a widget-emitted callout through the server and refresh the cart. */
  async dispatchCallout(nodeId: string, callout: Callout): Promise<void> {
    const state = this.visNodes.get(nodeId);
    if (!state) throw new Error(`unknown vis node '${nodeId}'`);
    const hierarchy = await this.api.callout(nodeId, callout);
    if (state.cart) state.cart.refresh(hierarchy);
    else state.cart = new VisCartView(hierarchy);
    this.redraw();
  }

  async checkoutSelection(nodeId: string): Promise<void> {
    const state = this.visNodes.get(nodeId);
    if (!state?.cart) return;
    try {
      const carts = await this.api.selectFacts(nodeId, state.cart.selectionPayload());
      this.applyCartDeltas(carts);
    } catch (err) {
      if (err instanceof StaleSelectionError) {
        state.cart.markStale();
      } else {
        throw err;
      }
    }
    this.redraw();
  }

  private applyCartDeltas(carts: Record<string, import('./wire.js').TextCart>): void {
    for (const [nodeId, cart] of Object.entries(carts)) {
      const state = this.textNodes.get(nodeId);
      if (!state) continue;
      if (state.cart) state.cart.refresh(cart);
      else state.cart = new TextCartView(cart);
    }
  }

  async recommendFor(nodeId: string, selectedText: string): Promise<void> {
    const state = this.textNodes.get(nodeId);
    if (!state) throw new Error(`unknown text node '${nodeId}'`);
    const result = await this.api.recommend(nodeId, selectedText);
    state.cards = new RecommendationCards(result.recommendations, result.reason ?? null);
    this.redraw();
  }

  async openReview(format: 'continuous' | 'scrollytelling' | 'stepper'): Promise<ReviewPage> {
    if (!this.storyId) throw new Error('no story open');
    const render = await this.api.exportStory(this.storyId, format);
    return new ReviewPage(render);
  }

  toggleLayout(): void {
    this.canvas.layoutMode = this.canvas.layoutMode === 'flow' ? 'sideBySide' : 'flow';
    this.redraw();
  }

  private nodeHtml(id: string): string {
    const box = this.canvas.layoutBox(id);
    const vis = this.visNodes.get(id);
    const text = this.textNodes.get(id);
    const body = vis
      ? `<div class="chart">${vis.widget.svg()}</div>${vis.cart ? vis.cart.html() : ''}` +
        '<button data-action="checkout">Send selected facts</button>'
      : text
        ? `<div class="editor" contenteditable="true" data-node="${id}"></div>` +
          (text.cart ? text.cart.html() : '') +
          text.narrative.html() +
          text.cards.html() +
          '<button data-action="recommend">Recommend Visualization</button>'
        : '';
    return (
      `<div class="node ${vis ? 'vis-node' : 'text-node'}" data-node-id="${id}" ` +
      `style="transform: translate(${box.x}px, ${box.y}px); width:${box.w}px; min-height:${box.h}px">` +
      `${body}</div>`
    );
  }

  redraw(): void {
    const edges = this.canvas.edges
      .map(([from, to]) => `<path d="${this.canvas.edgePath(from, to)}" class="edge"></path>`)
      .join('');
    const nodes = [...this.canvas.nodes.keys()].map((id) => this.nodeHtml(id)).join('');
    this.root.innerHTML =
      `<div class="canvas ${this.canvas.layoutMode}" ` +
      `style="transform: translate(${this.canvas.panX}px, ${this.canvas.panY}px) scale(${this.canvas.zoom})">` +
      `<svg class="edges">${edges}</svg>${nodes}</div>`;
  }
}
