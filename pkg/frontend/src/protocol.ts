// Wire types for the session server's JSON-over-websocket protocol.

export type Flags = {
  ped_in_ca: boolean;
  ped_in_nz: boolean;
  ped_gone: boolean;
  ped_crossed: boolean;
  veh_gone: boolean;
  timeout?: boolean;
};

export type StateMsg = {
  type: "state";
  t: number;
  veh: { d: number; v: number; a: number };
  ped: { d: number; v: number; i_raw: number; i_eff: number };
  mode: string | null;
  flags: Flags;
};

export type HelloMsg = { type: "hello"; scenario: string };
export type ServerMsg = StateMsg | HelloMsg;

export type InputMsg = { type: "input"; v_ped?: number; i_ped?: number; t?: number };
export type ControlMsg = {
  type: "control";
  action: "start" | "pause" | "reset" | "set_pace";
  value?: number;
};
export type ClientMsg = InputMsg | ControlMsg;

// Geometry and thresholds delivered by the session endpoints; the client
// renders zone bands and chart guide lines from these, never recomputing
// any simulation logic itself.
export type SessionParams = {
  i_ped_h: number;
  i_ped_l: number;
  v_veh_d: number;
  d_nz: number;
  d_ca: number;
  l_corridor: number;
  crossing_length: number;
};

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { type?: unknown };
  if (msg.type === "hello" && typeof (msg as HelloMsg).scenario === "string") {
    return msg as HelloMsg;
  }
  if (msg.type === "state") {
    const s = msg as StateMsg;
    if (typeof s.t === "number" && s.veh && s.ped && s.flags) return s;
  }
  return null;
}
