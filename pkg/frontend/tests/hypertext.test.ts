import { describe, expect, it } from "vitest";

import {
  Atom, carrier, deleteAtom, editText, linkIndex, makeDoc, manifestOf,
  textIndex, toBuffer, toDocument, transform,
} from "../src/hypertext.js";

const doc = makeDoc([
  { t: "value system = compose{ s as server_abs(" },
  { l: 1, d: "count" },
  { t: ") and c1 as " },
  { l: 2, d: "client_abs" },
  { t: "() and c2 as " },
  { l: 2, d: "client_abs" },
  { t: "() }" },
]);

describe("interchange documents", () => {
  it("builds the manifest with one entry per distinct link", () => {
    expect(doc.manifest).toEqual([
      { id: 1, d: "count" },
      { id: 2, d: "client_abs" },
    ]);
  });

  it("renders the carrier with link tokens", () => {
    expect(carrier(doc)).toContain("⟦count#1⟧");
    expect(carrier(doc)).toContain("⟦client_abs#2⟧");
  });
});

describe("editor buffer", () => {
  it("round trips without touching link identifiers", () => {
    const back = toDocument(toBuffer(doc));
    expect(back.segments).toEqual(doc.segments);
    expect(back.manifest).toEqual(doc.manifest);
  });

  it("text edits cannot split or alter a chip", () => {
    const buffer = toBuffer(doc);
    expect(() => editText(buffer, 1, "oops")).toThrow();
    const edited = editText(buffer, 0, "value sys2 = compose{ s as server_abs(");
    expect(toDocument(edited).manifest).toEqual(doc.manifest);
  });

  it("random text edits preserve the link multiset", () => {
    let buffer = toBuffer(doc);
    let seed = 1234;
    const rand = () => (seed = (seed * 1103515245 + 12345) % 2 ** 31) / 2 ** 31;
    for (let i = 0; i < 200; i++) {
      const textIdxs = buffer
        .map((a, k) => (a.kind === "text" ? k : -1))
        .filter((k) => k >= 0);
      const pick = textIdxs[Math.floor(rand() * textIdxs.length)];
      buffer = editText(buffer, pick, `txt${i} `.repeat(1 + (i % 3)));
    }
    const links = toDocument(buffer).segments.filter((s) => "l" in s);
    expect(links.map((s: any) => s.l).sort()).toEqual([1, 2, 2]);
  });

  it("deleting a chip removes its id cleanly", () => {
    const buffer = toBuffer(doc);
    const without = deleteAtom(buffer, 1);
    const ids = toDocument(without).manifest.map((m) => m.id);
    expect(ids).toEqual([2]);
  });
});

describe("transform edits", () => {
  it("replaces text ranges and removes segments", () => {
    const out = transform(doc, [
      ["replaceTextRange", 0, "value system".indexOf("system"),
       "value system".length, "renamed"],
      ["removeSegment", 5],
    ]);
    expect(carrier(out)).toContain("value renamed =");
    expect(out.manifest.map((m) => m.id)).toEqual([1, 2]);
    const remaining = out.segments.filter((s) => "l" in s);
    expect(remaining).toHaveLength(2);
  });

  it("inserts links by splitting text segments", () => {
    const out = transform(makeDoc([{ t: "view(a = 1, b = )" }]), [
      ["insertLink", 0, "view(a = 1, b = ".length, 9, "cell"],
    ]);
    expect(carrier(out)).toBe("view(a = 1, b = ⟦cell#9⟧)");
  });

  it("rejects out-of-bounds edits", () => {
    expect(() => transform(doc, [["replaceTextRange", 0, 0, 9999, "x"]])).toThrow();
    expect(() => transform(doc, [["removeSegment", 99]])).toThrow();
    expect(() => transform(doc, [["insertLink", 1, 0, 5, "x"]])).toThrow();
  });

  it("finds segments by link name and text content", () => {
    expect(linkIndex(doc, "client_abs")).toBe(3);
    expect(textIndex(doc, "compose{")).toBe(0);
    expect(textIndex(doc, "() ", 4)).toBe(4);
  });
});

describe("manifest independence", () => {
  it("display names carry no identity", () => {
    const stripped = makeDoc(doc.segments.map((s) =>
      "l" in s ? { l: s.l, d: "" } : s));
    expect(manifestOf(stripped.segments).map((m) => m.id))
      .toEqual(doc.manifest.map((m) => m.id));
  });
});
