import { describe, expect, it } from "vitest";
import type { StateMsg } from "../src/protocol.js";
import { StateRing } from "../src/viewstate.js";

function state(t: number, v = 0): StateMsg {
  return {
    type: "state", t,
    veh: { d: 40 - t, v, a: 0 },
    ped: { d: -6, v: 0, i_raw: 0, i_eff: 0 },
    mode: "Crossing",
    flags: { ped_in_ca: false, ped_in_nz: false, ped_gone: false,
             ped_crossed: false, veh_gone: false },
  };
}

describe("StateRing", () => {
  it("stays time ordered and drops stale samples", () => {
    const ring = new StateRing(10);
    expect(ring.push(state(0.1))).toBe(true);
    expect(ring.push(state(0.2))).toBe(true);
    expect(ring.push(state(0.15))).toBe(false); // out of order
    expect(ring.push(state(0.2))).toBe(false);  // duplicate tick
    const ts = ring.toArray().map((s) => s.t);
    expect(ts).toEqual([0.1, 0.2]);
  });

  it("wraps at capacity keeping the newest samples", () => {
    const ring = new StateRing(5);
    for (let k = 1; k <= 12; k++) ring.push(state(k * 0.1));
    expect(ring.length).toBe(5);
    const ts = ring.toArray().map((s) => Math.round(s.t * 10));
    expect(ts).toEqual([8, 9, 10, 11, 12]);
    expect(ring.latest()!.t).toBeCloseTo(1.2);
  });

  it("a rewind to t=0 clears the history (session reset)", () => {
    const ring = new StateRing(10);
    ring.push(state(0.5));
    ring.push(state(0.6));
    expect(ring.push(state(0))).toBe(true);
    expect(ring.toArray().map((s) => s.t)).toEqual([0]);
  });
});
