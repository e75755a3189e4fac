import type { ClientMsg, ServerMsg } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";

export type SocketHandle = {
  send: (msg: ClientMsg) => boolean;
  close: () => void;
};

/** Connect to a session's websocket with a callback-based surface. */
export function connectSession(
  sessionId: string,
  onMsg: (msg: ServerMsg) => void,
  onStatus: (open: boolean) => void,
): SocketHandle {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}/sessions/${sessionId}/ws`);
  ws.onopen = () => onStatus(true);
  ws.onclose = () => onStatus(false);
  ws.onmessage = (ev) => {
    const msg = parseServerMsg(String(ev.data));
    if (msg) onMsg(msg);
  };
  return {
    send: (msg) => {
      if (ws.readyState !== WebSocket.OPEN) return false;
      ws.send(JSON.stringify(msg));
      return true;
    },
    close: () => ws.close(),
  };
}
