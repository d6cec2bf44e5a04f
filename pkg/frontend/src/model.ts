// Console state: rows fetched from the gateway plus a fold over the event
// stream, so the behaviour table mirrors the latest event-stream state even
// between refreshes.

import { BehaviourRow, BindingRow, StreamItem } from "./api.js";

export class ConsoleModel {
  bindings: BindingRow[] = [];
  behaviours: BehaviourRow[] = [];
  feed: StreamItem[] = [];
  feedLimit = 500;
  cursor = 0;
  dirtyBindings = false;
  private statusOverride = new Map<string, string>();

  setBindings(rows: BindingRow[]): void {
    this.bindings = rows;
    this.dirtyBindings = false;
  }

  setBehaviours(rows: BehaviourRow[]): void {
    this.behaviours = rows;
    this.statusOverride.clear();
  }

  apply(item: StreamItem): void {
    this.cursor += 1;
    if (item.type === "heartbeat" || item.type === "resync") {
      this.cursor -= 1;   // markers are not log entries
      return;
    }
    this.feed.push(item);
    if (this.feed.length > this.feedLimit) {
      this.feed.splice(0, this.feed.length - this.feedLimit);
    }
    if (item.type === "binding") {
      this.dirtyBindings = true;
      return;
    }
    if (item.type !== "trace" || !item.subjects) return;
    const subject = String(item.subjects[0]);
    switch (item.kind) {
      case "TERMINATE":
        this.statusOverride.set(subject, "TERMINATED");
        break;
      case "BLOCK":
        this.statusOverride.set(subject, "BLOCKED");
        break;
      case "SPAWN":
      case "SEND_RECV":
      case "CHOICE_COMMIT":
      case "REPLICATE_CLONE":
        this.statusOverride.set(subject, "RUNNING");
        if (item.kind === "SEND_RECV" && item.subjects.length > 1) {
          this.statusOverride.set(String(item.subjects[1]), "RUNNING");
        }
        break;
    }
  }

  statusOf(handle: string): string {
    const row = this.behaviours.find((b) => b.handle === handle);
    return this.statusOverride.get(handle) ?? row?.status ?? "UNKNOWN";
  }

  violations(): StreamItem[] {
    return this.feed.filter((i) => i.kind === "CONSTRAINT_VIOLATION");
  }
}
