// Gateway client: the console holds no authoritative state, everything is
// re-derivable from these routes plus the event stream.

import { HyperDoc, textDoc } from "./hypertext.js";

export interface BindingRow {
  name: string;
  id: number;
  type: string;
}

export interface ConnectionRow {
  name: string;
  channel: number;
}

export interface BehaviourRow {
  handle: string;
  label: string | null;
  status: string;
  detached?: boolean;
  styleTag?: string | null;
  connections?: ConnectionRow[];
  parts?: string[];
}

export interface ViewRow {
  label: string;
  behaviourId: number;
  handle: string;
  status: string;
  connections: ConnectionRow[];
  exports: string[];
}

export interface EvalResponse {
  run: string;
  status: string;
  rendered: string | null;
  bindings: Record<string, { id: number; type: string; rendered: string }>;
  removed: string[];
}

export interface StreamItem {
  type: string;
  step?: number;
  kind?: string;
  subjects?: (string | number)[];
  payload?: string | null;
  name?: string;
  id?: number;
  run?: string;
  status?: string;
  cursor?: number;
}

export interface Topology {
  components: { handle: string; tags: string[] }[];
  connectors: { channel: number; tags: string[] }[];
  attachments: [string, number][];
}

export class ApiError extends Error {
  constructor(public status: number, public phase: string, message: string) {
    super(message);
  }
}

async function expectOk(resp: Response): Promise<any> {
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body.phase ?? "http", body.message ?? resp.statusText);
  }
  return body;
}

export class ApiClient {
  constructor(public base: string, private fetchFn: typeof fetch = fetch) {}

  private async get(path: string): Promise<any> {
    return expectOk(await this.fetchFn(this.base + path));
  }

  private async post(path: string, body: unknown): Promise<any> {
    return expectOk(await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  bindings(): Promise<BindingRow[]> {
    return this.get("/v1/bindings");
  }

  behaviours(): Promise<BehaviourRow[]> {
    return this.get("/v1/behaviours");
  }

  eval(doc: HyperDoc): Promise<EvalResponse> {
    return this.post("/v1/eval", { hypertext: doc });
  }

  evalText(text: string): Promise<EvalResponse> {
    return this.eval(textDoc(text));
  }

  decompose(handle: string, timeoutSteps?: number): Promise<ViewRow[]> {
    return this.post(`/v1/behaviours/${handle}/decompose`,
                     timeoutSteps === undefined ? {} : { timeoutSteps });
  }

  reify(id: number): Promise<HyperDoc> {
    return this.get(`/v1/values/${id}/reify`);
  }

  async reflect(doc: HyperDoc): Promise<number> {
    return (await this.post("/v1/reflect", { hypertext: doc })).id;
  }

  compose(parts: { label: string; id: number }[],
          unifications: [string, string][]): Promise<{ handle: string; id: number }> {
    return this.post("/v1/compose", { parts, unifications });
  }

  checkStyle(name: string, handle: string):
      Promise<{ style: string; ok: boolean;
                violations: { formula: string; witness: Record<string, string> }[] }> {
    return this.get(`/v1/styles/${name}/check?handle=${encodeURIComponent(handle)}`);
  }

  topology(handle: string): Promise<Topology> {
    return this.get(`/v1/snapshot/topology?handle=${encodeURIComponent(handle)}`);
  }

  trace(start = 0): Promise<StreamItem[]> {
    return this.get(`/v1/trace?start=${start}`);
  }

  traceHash(): Promise<{ hash: string; events: number }> {
    return this.get("/v1/trace/hash");
  }
}

// Event subscription: a persistent socket in the browser, cursor polling
// where sockets are unavailable.  Items always arrive in log order.
export interface Subscription {
  close(): void;
}

export function subscribe(
  base: string,
  cursor: number,
  onItem: (item: StreamItem) => void,
  pollMs = 100,
): Subscription {
  const wsCtor: any = (globalThis as any).WebSocket;
  if (wsCtor) {
    const url = base.replace(/^http/, "ws") + `/v1/events?cursor=${cursor}`;
    const sock = new wsCtor(url);
    sock.onmessage = (ev: MessageEvent) => onItem(JSON.parse(ev.data as string));
    return { close: () => sock.close() };
  }
  let at = cursor;
  let live = true;
  const tick = async () => {
    while (live) {
      try {
        const resp = await fetch(base + `/v1/trace?start=${at}`);
        const items: StreamItem[] = await resp.json();
        for (const item of items) {
          at += 1;
          onItem(item);
        }
      } catch {
        // gateway briefly unavailable; keep polling
      }
      await new Promise((r) => setTimeout(r, pollMs));
    }
  };
  void tick();
  return { close: () => { live = false; } };
}
