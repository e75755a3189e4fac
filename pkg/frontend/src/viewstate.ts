import type { StateMsg } from "./protocol.js";

// Plot history: the last PLOT_CAPACITY state messages (100 s at the
// decimated 30 Hz stream).
export const PLOT_CAPACITY = 3000;

/** Time-ordered ring buffer of state messages. */
export class StateRing {
  private items: StateMsg[];
  private head = 0; // next write slot
  private count = 0;

  constructor(readonly capacity: number = PLOT_CAPACITY) {
    this.items = new Array(capacity);
  }

  get length(): number {
    return this.count;
  }

  latest(): StateMsg | null {
    if (this.count === 0) return null;
    return this.items[(this.head - 1 + this.capacity) % this.capacity];
  }

  /** Append one state; out-of-order samples are dropped, a time rewind
   *  (session reset) clears the history first. */
  push(state: StateMsg): boolean {
    const last = this.latest();
    if (last !== null) {
      if (state.t === last.t) return false;
      if (state.t < last.t) {
        if (state.t === 0) this.clear(); // reset rewinds to t = 0
        else return false;
      }
    }
    this.items[this.head] = state;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count += 1;
    return true;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }

  /** Chronological copy of the buffered states. */
  toArray(): StateMsg[] {
    const out: StateMsg[] = new Array(this.count);
    const start = (this.head - this.count + this.capacity) % this.capacity;
    for (let k = 0; k < this.count; k++) {
      out[k] = this.items[(start + k) % this.capacity];
    }
    return out;
  }
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export type ViewState = {
  ring: StateRing;
  connection: ConnectionStatus;
  scenario: string | null;
};

export function createViewState(): ViewState {
  return { ring: new StateRing(), connection: "connecting", scenario: null };
}
