// Browser entry point: wires the model, editor and workflow to the DOM.

import { ApiClient, BehaviourRow, StreamItem, subscribe } from "./api.js";
import { Atom, carrier, editText, textDoc, toBuffer, toDocument } from "./hypertext.js";
import { ConsoleModel } from "./model.js";
import { buildGraph, witnessHandles } from "./topology.js";
import { EvolveSession, composeEvolved, startEvolve, tabDocument } from "./workflow.js";

const base = location.origin.replace(/\/$/, "");
const api = new ApiClient(base);
const model = new ConsoleModel();

const $ = (id: string) => document.getElementById(id)!;

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

// -- bindings and behaviours -------------------------------------------------

async function refresh(): Promise<void> {
  model.setBindings(await api.bindings());
  model.setBehaviours(await api.behaviours());
  renderBindings();
  renderBehaviours();
  void renderTopology();
}

function renderBindings(): void {
  const list = $("bindings");
  list.replaceChildren();
  for (const b of model.bindings) {
    const row = el("li");
    row.append(el("b", "", b.name), el("span", "muted", ` : ${b.type} `));
    const reifyBtn = el("button", "", "reify") as HTMLButtonElement;
    reifyBtn.onclick = async () => openEditor(`${b.name}`, await api.reify(b.id));
    row.append(reifyBtn);
    list.append(row);
  }
}

function renderBehaviours(): void {
  const table = $("behaviours");
  table.replaceChildren();
  for (const b of model.behaviours) {
    const row = el("tr");
    row.append(
      el("td", "", b.handle),
      el("td", "", b.label ?? ""),
      el("td", `status-${model.statusOf(b.handle)}`,
         model.statusOf(b.handle) + (b.detached ? " (detached)" : "")),
      el("td", "muted", (b.connections ?? []).map((c) => c.name).join(", ")),
    );
    const actions = el("td");
    if (b.status === "COMPOSITE") {
      const evolve = el("button", "", "evolve") as HTMLButtonElement;
      evolve.onclick = () => void evolve_(b);
      actions.append(evolve);
    }
    row.append(actions);
    table.append(row);
  }
}

// -- hyper-code editor: text inputs between atomic link chips -----------------

interface EditorState {
  name: string;
  buffer: Atom[];
}

let editor: EditorState | null = null;

function openEditor(name: string, doc: Parameters<typeof toBuffer>[0]): void {
  editor = { name, buffer: toBuffer(doc) };
  renderEditor();
}

function renderEditor(): void {
  const pane = $("editor");
  pane.replaceChildren();
  if (!editor) return;
  pane.append(el("h3", "", editor.name));
  const box = el("div", "buffer");
  editor.buffer.forEach((atom, i) => {
    if (atom.kind === "chip") {
      const chip = el("span", "chip", atom.display || `#${atom.link}`);
      chip.title = `link #${atom.link}`;
      chip.onmouseenter = async () => {
        chip.title = carrier(await api.reify(atom.link));
      };
      box.append(chip);
    } else {
      const area = el("textarea") as HTMLTextAreaElement;
      area.value = atom.text;
      area.rows = Math.max(1, atom.text.split("\n").length);
      area.oninput = () => {
        editor!.buffer = editText(editor!.buffer, i, area.value);
      };
      box.append(area);
    }
  });
  pane.append(box);
  const reflect = el("button", "", "reflect") as HTMLButtonElement;
  reflect.onclick = async () => {
    try {
      const id = await api.reflect(toDocument(editor!.buffer));
      log(`reflected ${editor!.name} -> #${id}`);
      await refresh();
    } catch (err) {
      log(`reflect failed: ${(err as Error).message}`, true);
    }
  };
  pane.append(reflect);
}

// -- evolve workflow ----------------------------------------------------------

async function evolve_(comp: BehaviourRow): Promise<void> {
  let session: EvolveSession;
  try {
    session = await startEvolve(api, comp.handle);
  } catch (err) {
    log(`decompose failed: ${(err as Error).message}`, true);
    return;
  }
  log(`decomposed ${comp.handle}: ${session.views.map((v) => v.label).join(", ")}`);
  const pane = $("workflow");
  pane.replaceChildren(el("h3", "", `evolving ${comp.handle}`));
  for (const tab of session.tabs) {
    const open = el("button", "", `edit ${tab.view.label}`) as HTMLButtonElement;
    open.onclick = () => openEditor(tab.view.label, tabDocument(tab));
    pane.append(open);
  }
  const go = el("button", "", "compose evolved system") as HTMLButtonElement;
  go.onclick = async () => {
    const labels = session.views.map((v) => v.label).join(" and ");
    const unify = (prompt(`unifications for ${labels} (a::c ~ b::d, comma separated)`)
                   ?? "").split(",").map((s) => s.trim()).filter(Boolean)
      .map((pair) => pair.split("~").map((s) => s.trim()) as [string, string]);
    try {
      const result = await composeEvolved(
        api,
        session.views.map((v) => ({ label: v.label, behaviourId: v.behaviourId })),
        unify);
      log(`composed ${result.handle}`);
      await refresh();
    } catch (err) {
      log(`compose failed: ${(err as Error).message}`, true);
    }
  };
  pane.append(go);
}

// -- topology -----------------------------------------------------------------

async function renderTopology(): Promise<void> {
  const svg = $("topology");
  svg.replaceChildren();
  const comp = model.behaviours.find((b) => b.status === "COMPOSITE");
  if (!comp) return;
  const offending = witnessHandles(
    model.violations().map((v) => ({ witness: { w: String(v.subjects?.[0] ?? "") } })));
  const graph = buildGraph(await api.topology(comp.handle), offending);
  const ns = "http://www.w3.org/2000/svg";
  for (const edge of graph.edges) {
    const a = graph.nodes.find((n) => n.handle === edge.from)!;
    const b = graph.nodes.find((n) => n.handle === edge.to)!;
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("class", "edge");
    svg.append(line);
  }
  for (const node of graph.nodes) {
    const dot = document.createElementNS(ns, "circle");
    dot.setAttribute("cx", String(node.x));
    dot.setAttribute("cy", String(node.y));
    dot.setAttribute("r", "16");
    dot.setAttribute("class", node.offending ? "node offending" : "node");
    svg.append(dot);
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", String(node.x));
    label.setAttribute("y", String(node.y - 20));
    label.setAttribute("text-anchor", "middle");
    label.textContent = `${node.handle}${node.tags.length ? " : " + node.tags.join("+") : ""}`;
    svg.append(label);
  }
}

// -- feed and input -----------------------------------------------------------

function log(text: string, isError = false): void {
  const item = el("li", isError ? "error" : "", text);
  $("feed").prepend(item);
}

function onStream(item: StreamItem): void {
  model.apply(item);
  if (item.type === "trace") {
    log(`${item.step} ${item.kind} ${(item.subjects ?? []).join(",")}` +
        (item.payload ? ` ${item.payload}` : ""));
    renderBehaviours();
  } else if (item.type === "binding" || item.type === "eval-complete") {
    void refresh();
  }
}

function wireInput(): void {
  const input = $("input") as HTMLTextAreaElement;
  const run = $("run") as HTMLButtonElement;
  run.onclick = async () => {
    try {
      const result = await api.eval(textDoc(input.value));
      log(`eval ${result.run}: ${result.status}` +
          (result.rendered ? ` = ${result.rendered}` : ""));
      input.value = "";
      await refresh();
    } catch (err) {
      log(`eval failed: ${(err as Error).message}`, true);
    }
  };
}

async function boot(): Promise<void> {
  wireInput();
  await refresh();
  subscribe(base, model.cursor, onStream);
}

void boot();
