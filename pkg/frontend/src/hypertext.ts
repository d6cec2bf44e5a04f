// Hyper-text interchange documents and the editor buffer over them.
//
// Link chips are atomic in the editor: text edits only ever touch text atoms,
// so a buffer -> document round trip preserves link identifiers exactly.

export type Segment = { t: string } | { l: number; d: string };

export interface HyperDoc {
  version: number;
  segments: Segment[];
  manifest: { id: number; d: string }[];
}

export type Atom =
  | { kind: "text"; text: string }
  | { kind: "chip"; link: number; display: string };

export function isLink(seg: Segment): seg is { l: number; d: string } {
  return "l" in seg;
}

export function manifestOf(segments: Segment[]): { id: number; d: string }[] {
  const seen = new Map<number, string>();
  for (const seg of segments) {
    if (isLink(seg) && !seen.has(seg.l)) seen.set(seg.l, seg.d);
  }
  return [...seen.entries()].map(([id, d]) => ({ id, d }));
}

export function makeDoc(segments: Segment[]): HyperDoc {
  return { version: 1, segments, manifest: manifestOf(segments) };
}

export function textDoc(text: string): HyperDoc {
  return makeDoc([{ t: text }]);
}

export function toBuffer(doc: HyperDoc): Atom[] {
  return doc.segments.map((seg) =>
    isLink(seg)
      ? { kind: "chip", link: seg.l, display: seg.d } as Atom
      : { kind: "text", text: seg.t } as Atom);
}

export function toDocument(atoms: Atom[]): HyperDoc {
  const segments: Segment[] = [];
  for (const atom of atoms) {
    if (atom.kind === "chip") {
      segments.push({ l: atom.link, d: atom.display });
    } else if (atom.text.length > 0) {
      const last = segments[segments.length - 1];
      if (last && !isLink(last)) last.t += atom.text;
      else segments.push({ t: atom.text });
    }
  }
  return makeDoc(segments);
}

export function editText(atoms: Atom[], index: number, text: string): Atom[] {
  const atom = atoms[index];
  if (!atom || atom.kind !== "text") {
    throw new Error(`atom ${index} is not editable text`);
  }
  const out = atoms.slice();
  out[index] = { kind: "text", text };
  return out;
}

export function deleteAtom(atoms: Atom[], index: number): Atom[] {
  if (index < 0 || index >= atoms.length) throw new Error(`no atom ${index}`);
  return atoms.slice(0, index).concat(atoms.slice(index + 1));
}

export function carrier(doc: HyperDoc): string {
  return doc.segments
    .map((seg) => (isLink(seg) ? `⟦${seg.d}#${seg.l}⟧` : seg.t))
    .join("");
}

// The same edit operations the store applies server-side; used to build the
// evolved sources without ever touching a link identifier.
export type Edit =
  | ["replaceTextRange", number, number, number, string]
  | ["removeSegment", number]
  | ["insertLink", number, number, number, string];

export function transform(doc: HyperDoc, edits: Edit[]): HyperDoc {
  let segments = doc.segments.map((s) => ({ ...s }));
  for (const edit of edits) {
    if (edit[0] === "replaceTextRange") {
      const [, idx, start, end, text] = edit;
      const seg = segments[idx];
      if (!seg || isLink(seg)) throw new Error(`segment ${idx} is not text`);
      if (start < 0 || end > seg.t.length || start > end) {
        throw new Error(`range ${start}:${end} out of bounds`);
      }
      seg.t = seg.t.slice(0, start) + text + seg.t.slice(end);
    } else if (edit[0] === "removeSegment") {
      const [, idx] = edit;
      if (idx < 0 || idx >= segments.length) throw new Error(`no segment ${idx}`);
      segments = segments.slice(0, idx).concat(segments.slice(idx + 1));
    } else {
      const [, idx, pos, link, display] = edit;
      const seg = segments[idx];
      if (!seg || isLink(seg)) throw new Error(`segment ${idx} is not text`);
      if (pos < 0 || pos > seg.t.length) throw new Error(`position ${pos} out of bounds`);
      const pieces: Segment[] = [];
      if (pos > 0) pieces.push({ t: seg.t.slice(0, pos) });
      pieces.push({ l: link, d: display });
      if (pos < seg.t.length) pieces.push({ t: seg.t.slice(pos) });
      segments = segments.slice(0, idx).concat(pieces, segments.slice(idx + 1));
    }
  }
  // normalise: merge adjacent text segments, drop empties
  const merged: Segment[] = [];
  for (const seg of segments) {
    if (isLink(seg)) {
      merged.push(seg);
    } else if (seg.t.length > 0) {
      const last = merged[merged.length - 1];
      if (last && !isLink(last)) last.t += seg.t;
      else merged.push({ t: seg.t });
    }
  }
  return makeDoc(merged);
}

export function linkIndex(doc: HyperDoc, display: string): number {
  const i = doc.segments.findIndex((s) => isLink(s) && s.d === display);
  if (i < 0) throw new Error(`no link named ${display}`);
  return i;
}

export function textIndex(doc: HyperDoc, needle: string, from = 0): number {
  const i = doc.segments.findIndex(
    (s, k) => k >= from && !isLink(s) && s.t.includes(needle));
  if (i < 0) throw new Error(`no text segment containing ${JSON.stringify(needle)}`);
  return i;
}
