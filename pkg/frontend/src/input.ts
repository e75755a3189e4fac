import type { InputMsg } from "./protocol.js";

export const V_STEP = 0.25; // m/s per arrow press
export const V_MIN = 0;
export const V_MAX = 3;
export const MAX_INPUT_HZ = 20;
export const OFFLINE_QUEUE_MS = 1000;

export type SendFn = (msg: InputMsg) => boolean; // false while disconnected
export type ScheduleFn = (fn: () => void, ms: number) => unknown;

/**
 * Turns key presses and slider moves into throttled input messages.
 *
 * The first change in a quiet period goes out immediately; further changes
 * within the minimum interval coalesce into one trailing message carrying
 * the latest values, so a held key emits at most MAX_INPUT_HZ messages per
 * second.  While disconnected, messages are queued for up to one second and
 * replayed on reconnect; anything older is stale and silently dropped.
 */
export class InputController {
  vPed = 0;
  iPed = 0;
  sentCount = 0;

  private lastSentAt = -Infinity;
  private dirty = false;
  private timerArmed = false;
  private queue: { msg: InputMsg; at: number }[] = [];

  constructor(
    private readonly send: SendFn,
    private readonly now: () => number = () => Date.now(),
    private readonly schedule: ScheduleFn = (fn, ms) => setTimeout(fn, ms),
  ) {}

  stepUp(): void {
    this.setSpeed(this.vPed + V_STEP);
  }

  stepDown(): void {
    this.setSpeed(this.vPed - V_STEP);
  }

  setSpeed(v: number): void {
    const clamped = Math.min(Math.max(v, V_MIN), V_MAX);
    if (clamped !== this.vPed) {
      this.vPed = clamped;
      this.dirty = true;
      this.maybeEmit();
    }
  }

  setIntention(i: number): void {
    const clamped = Math.min(Math.max(i, 0), 1);
    if (clamped !== this.iPed) {
      this.iPed = clamped;
      this.dirty = true;
      this.maybeEmit();
    }
  }

  /** Re-send queued messages after a reconnect; returns how many went out. */
  flushQueue(): number {
    const cutoff = this.now() - OFFLINE_QUEUE_MS;
    const fresh = this.queue.filter((q) => q.at >= cutoff);
    this.queue = [];
    let sent = 0;
    for (const q of fresh) {
      if (this.send(q.msg)) sent += 1;
    }
    return sent;
  }

  private maybeEmit(): void {
    const interval = 1000 / MAX_INPUT_HZ;
    const elapsed = this.now() - this.lastSentAt;
    if (elapsed >= interval) {
      this.emitNow();
    } else if (!this.timerArmed) {
      this.timerArmed = true;
      this.schedule(() => {
        this.timerArmed = false;
        if (this.dirty) this.emitNow();
      }, interval - elapsed);
    }
  }

  private emitNow(): void {
    this.dirty = false;
    this.lastSentAt = this.now();
    const msg: InputMsg = { type: "input", v_ped: this.vPed, i_ped: this.iPed };
    this.sentCount += 1;
    if (!this.send(msg)) {
      this.queue.push({ msg, at: this.lastSentAt });
      if (this.queue.length > 64) this.queue.shift();
    }
  }
}
