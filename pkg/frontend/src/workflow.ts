// The guided evolution loop: decompose a composite, open each view's
// reification in an editor tab, reflect the edited representations, and
// compose the result with label and unification pickers.

import { ApiClient, ViewRow } from "./api.js";
import { Atom, HyperDoc, toBuffer, toDocument } from "./hypertext.js";

export interface EvolveTab {
  view: ViewRow;
  doc: HyperDoc;
  buffer: Atom[];
}

export interface EvolveSession {
  handle: string;
  views: ViewRow[];
  tabs: EvolveTab[];
}

export interface ComposePart {
  label: string;
  // exactly one of: the untouched original behaviour, or an edited document
  behaviourId?: number;
  doc?: HyperDoc;
}

export async function startEvolve(api: ApiClient, handle: string,
                                  timeoutSteps?: number): Promise<EvolveSession> {
  const views = await api.decompose(handle, timeoutSteps);
  const tabs: EvolveTab[] = [];
  for (const view of views) {
    const doc = await api.reify(view.behaviourId);
    tabs.push({ view, doc, buffer: toBuffer(doc) });
  }
  return { handle, views, tabs };
}

export function tabDocument(tab: EvolveTab): HyperDoc {
  return toDocument(tab.buffer);
}

export async function composeEvolved(
  api: ApiClient,
  parts: ComposePart[],
  unifications: [string, string][],
): Promise<{ handle: string; id: number }> {
  const resolved: { label: string; id: number }[] = [];
  for (const part of parts) {
    if (part.behaviourId !== undefined) {
      resolved.push({ label: part.label, id: part.behaviourId });
    } else if (part.doc) {
      resolved.push({ label: part.label, id: await api.reflect(part.doc) });
    } else {
      throw new Error(`part ${part.label} has neither a behaviour nor a document`);
    }
  }
  return api.compose(resolved, unifications);
}
