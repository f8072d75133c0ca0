/**
 * API client for the engine. The view layer never computes facts or
 * narratives: everything it displays flows through this client, and a
 * RecordingTransport can wrap any transport to prove that in tests
 * (the network-log assertion).
 */

import {
  Callout,
  DatasetSummary,
  DatasetSummarySchema,
  Hierarchy,
  HierarchySchema,
  Narrative,
  NarrativeSchema,
  parseWire,
  RecommendResultSchema,
  StoryRender,
  StoryRenderSchema,
  TextCart,
  TextCartSchema,
} from './wire.js';
import { z } from 'zod';

export interface WireResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<WireResponse>;
}

export class FetchTransport implements Transport {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  async request(method: string, path: string, body?: unknown): Promise<WireResponse> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return { status: response.status, body: await response.json() };
  }
}

/** Wraps a transport and logs every response; tests assert displayed strings
 * against this log to prove they originated from the server. */
export class RecordingTransport implements Transport {
  readonly log: Array<{ method: string; path: string; response: WireResponse }> = [];

  constructor(private inner: Transport) {}

  async request(method: string, path: string, body?: unknown): Promise<WireResponse> {
    const response = await this.inner.request(method, path, body);
    this.log.push({ method, path, response });
    return response;
  }

  /** One searchable blob of everything the server ever sent. */
  responseText(): string {
    return this.log.map((entry) => JSON.stringify(entry.response.body)).join('\n');
  }
}

export type RouteHandler = (body: unknown) => WireResponse | unknown;

/** Offline transport serving canned payloads; used by tests and demos. */
export class MockTransport implements Transport {
  private routes: Array<{ method: string; matcher: RegExp; handler: RouteHandler }> = [];

  on(method: string, matcher: RegExp | string, handler: RouteHandler): this {
    const pattern =
      typeof matcher === 'string'
        ? new RegExp(`^${matcher.replace(/[.*+?^${}()|[\]\\]/g, '\\$&')}$`)
        : matcher;
    this.routes.push({ method: method.toUpperCase(), matcher: pattern, handler });
    return this;
  }

  async request(method: string, path: string, body?: unknown): Promise<WireResponse> {
    for (const route of this.routes) {
      if (route.method === method.toUpperCase() && route.matcher.test(path)) {
        const out = route.handler(body);
        if (out && typeof out === 'object' && 'status' in (out as object) && 'body' in (out as object)) {
          return out as WireResponse;
        }
        return { status: 200, body: out };
      }
    }
    return { status: 404, body: { code: 'not_found', message: `no route for ${method} ${path}` } };
  }
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

/** 409 from a selection that references facts from an earlier callout. */
export class StaleSelectionError extends ApiError {}

function errorFrom(response: WireResponse): ApiError {
  const body = (response.body ?? {}) as { code?: string; message?: string };
  const code = body.code ?? 'unknown_error';
  const message = body.message ?? `request failed with status ${response.status}`;
  if (code === 'facts_stale') return new StaleSelectionError(response.status, code, message);
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private transport: Transport) {}

  private async call<T>(
    method: string,
    path: string,
    body: unknown,
    schema: z.ZodType<T> | null,
    label: string,
  ): Promise<T> {
    const response = await this.transport.request(method, path, body);
    if (response.status >= 400) throw errorFrom(response);
    if (schema === null) return response.body as T;
    return parseWire(schema, response.body, label);
  }

  createStory(name: string): Promise<{ id: string; name: string }> {
    return this.call('POST', '/stories', { name }, null, 'story');
  }

  uploadDataset(storyId: string, name: string, csv: string): Promise<DatasetSummary> {
    return this.call('POST', '/datasets', { storyId, name, csv }, DatasetSummarySchema, 'dataset summary');
  }

  createNode(body: Record<string, unknown>): Promise<{ node: { id: string; kind: string } }> {
    return this.call('POST', '/nodes', body, null, 'node');
  }

  deleteNode(nodeId: string): Promise<{ carts: Record<string, TextCart> }> {
    return this.call('DELETE', `/nodes/${nodeId}`, undefined, null, 'delete');
  }

  connect(from: string, to: string): Promise<{ carts: Record<string, TextCart> }> {
    return this.call('POST', '/edges', { from, to }, null, 'edge');
  }

  disconnect(from: string, to: string): Promise<{ carts: Record<string, TextCart> }> {
    return this.call('DELETE', '/edges', { from, to }, null, 'edge');
  }

  callout(nodeId: string, callout: Callout): Promise<Hierarchy> {
    return this.call('POST', `/nodes/${nodeId}/callout`, callout, HierarchySchema, 'hierarchy');
  }

  async selectFacts(nodeId: string, factIds: string[]): Promise<Record<string, TextCart>> {
    const body = await this.call<{ carts: Record<string, unknown> }>(
      'POST',
      `/nodes/${nodeId}/facts/select`,
      { factIds },
      null,
      'selection',
    );
    const carts: Record<string, TextCart> = {};
    for (const [id, cart] of Object.entries(body.carts ?? {})) {
      carts[id] = parseWire(TextCartSchema, cart, 'text cart');
    }
    return carts;
  }

  generateNarrative(nodeId: string): Promise<Narrative> {
    return this.call('POST', `/nodes/${nodeId}/narrative`, {}, NarrativeSchema, 'narrative');
  }

  acceptNarrative(nodeId: string, accepted: boolean): Promise<Narrative> {
    return this.call(
      'POST',
      `/nodes/${nodeId}/narrative/accept`,
      { accepted },
      NarrativeSchema,
      'narrative',
    );
  }

  reviseNarrative(
    nodeId: string,
    mode: 'shorten' | 'expand' | 'regenerate' | 'custom',
    targetSpan: [number, number],
    customInstruction = '',
  ): Promise<Narrative> {
    return this.call(
      'POST',
      `/nodes/${nodeId}/narrative/revise`,
      { mode, targetSpan, customInstruction },
      NarrativeSchema,
      'narrative',
    );
  }

  recommend(nodeId: string, selectedText: string) {
    return this.call(
      'POST',
      `/nodes/${nodeId}/recommend`,
      { selectedText },
      RecommendResultSchema,
      'recommendations',
    );
  }

  materialize(nodeId: string, index: number): Promise<{ node: { id: string } }> {
    return this.call('POST', `/nodes/${nodeId}/recommend/materialize`, { index }, null, 'materialize');
  }

  async exportStory(storyId: string, format: string): Promise<StoryRender> {
    const body = await this.call<{ render: unknown }>(
      'GET',
      `/stories/${storyId}/export?format=${format}`,
      undefined,
      null,
      'export',
    );
    return parseWire(StoryRenderSchema, body.render, 'story render');
  }
}
