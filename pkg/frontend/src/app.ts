import { drawChart, pluck } from "./charts.js";
import { InputController } from "./input.js";
import type { SessionParams, StateMsg } from "./protocol.js";
import { renderScene } from "./scene.js";
import { createViewState } from "./viewstate.js";
import { connectSession, type SocketHandle } from "./ws.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const view = createViewState();
let params: SessionParams | null = null;
let sessionId: string | null = null;
let socket: SocketHandle | null = null;

const controller = new InputController((msg) => socket?.send(msg) ?? false);

async function loadScenarios(): Promise<void> {
  const resp = await fetch("/scenarios");
  const names: string[] = (await resp.json()).scenarios;
  const select = $<HTMLSelectElement>("scenario");
  select.innerHTML = "";
  for (const name of names) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = name;
    if (name === "live") opt.selected = true;
    select.appendChild(opt);
  }
}

async function openSession(): Promise<void> {
  socket?.close();
  const scenario = $<HTMLSelectElement>("scenario").value;
  const pace = Number($<HTMLInputElement>("pace").value) || 1.0;
  const resp = await fetch("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ scenario, pace }),
  });
  if (!resp.ok) {
    $("status").textContent = `open failed: ${await resp.text()}`;
    return;
  }
  const body = await resp.json();
  sessionId = body.id as string;
  params = body.params as SessionParams;
  view.ring.clear();
  view.scenario = scenario;
  $("status").textContent = `session ${sessionId} (${scenario}${body.live ? ", live" : ", spectator"})`;
  $<HTMLAnchorElement>("trace").href = `/sessions/${sessionId}/trace`;

  socket = connectSession(
    sessionId,
    (msg) => {
      if (msg.type === "state") view.ring.push(msg);
    },
    (open) => {
      view.connection = open ? "open" : "closed";
      if (open) controller.flushQueue();
      $("conn").textContent = view.connection;
    },
  );
}

function control(action: "start" | "pause" | "reset"): void {
  socket?.send({ type: "control", action });
}

function bindInputs(): void {
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowUp") {
      controller.stepUp();
      ev.preventDefault();
    } else if (ev.key === "ArrowDown") {
      controller.stepDown();
      ev.preventDefault();
    }
    $("vped").textContent = controller.vPed.toFixed(2);
  });
  $<HTMLInputElement>("intention").addEventListener("input", (ev) => {
    const value = Number((ev.target as HTMLInputElement).value);
    controller.setIntention(value);
    $("islider").textContent = value.toFixed(2);
  });
  $("open").addEventListener("click", () => void openSession());
  $("start").addEventListener("click", () => control("start"));
  $("pause").addEventListener("click", () => control("pause"));
  $("reset").addEventListener("click", () => {
    control("reset");
    view.ring.clear();
  });
  $<HTMLInputElement>("pace").addEventListener("change", (ev) => {
    const value = Number((ev.target as HTMLInputElement).value);
    if (value > 0) socket?.send({ type: "control", action: "set_pace", value });
  });
}

function frame(): void {
  const scene = $<HTMLCanvasElement>("scene");
  const chartV = $<HTMLCanvasElement>("chart-v");
  const chartI = $<HTMLCanvasElement>("chart-i");
  const states = view.ring.toArray();
  const latest: StateMsg | null = view.ring.latest();

  renderScene(scene.getContext("2d")!, scene.width, scene.height, latest, params);
  if (states.length >= 2 && params) {
    const t = pluck(states, (s) => s.t);
    drawChart(chartV.getContext("2d")!, chartV.width, chartV.height, t, [
      { label: "v_veh", color: "#9fb4c8", values: pluck(states, (s) => s.veh.v) },
      { label: "v_ped", color: "#f2c14e", values: pluck(states, (s) => s.ped.v) },
    ], [], 0, Math.max(params.v_veh_d * 1.2, 3.5));
    drawChart(chartI.getContext("2d")!, chartI.width, chartI.height, t, [
      { label: "i_raw", color: "#f2c14e", values: pluck(states, (s) => s.ped.i_raw) },
      { label: "i_eff", color: "#b07fd4", values: pluck(states, (s) => s.ped.i_eff) },
    ], [
      { y: params.i_ped_h, label: "i_ped_h", color: "#d43d3d" },
      { y: params.i_ped_l, label: "i_ped_l", color: "#3fa34d" },
    ], 0, 1);
  }
  if (latest) {
    $("simt").textContent = latest.t.toFixed(2);
    $("mode").textContent = latest.mode ?? "—";
  }
  requestAnimationFrame(frame);
}

void loadScenarios().then(() => {
  bindInputs();
  requestAnimationFrame(frame);
});
