import type { SessionParams, StateMsg } from "./protocol.js";

// Bird's-eye rendering of the crossing.  World frame: the conflict point is
// the origin, the vehicle drives left-to-right along +x (so its world x is
// -d_veh), the pedestrian walks bottom-to-top along +y (world y = d_ped).

export type Rect = { x: number; y: number; w: number; h: number };

export type SceneLayout = {
  metersPerPixel: number;
  road: Rect;
  crossing: Rect;
  nearZone: Rect;
  collisionArea: Rect;
  collisionHot: boolean;
  vehicle: Rect;
  pedestrian: { x: number; y: number; r: number };
  badge: string;
};

export const VEHICLE_LENGTH = 4.5; // m, drawn size only
export const VEHICLE_WIDTH = 1.9;

export function worldToScreen(
  wx: number,
  wy: number,
  width: number,
  height: number,
  mpp: number,
): { x: number; y: number } {
  return { x: width / 2 + wx / mpp, y: height / 2 - wy / mpp };
}

export function sceneLayout(
  state: StateMsg,
  params: SessionParams,
  width: number,
  height: number,
): SceneLayout {
  // fit the approach corridor and the whole crossing span with some air
  const spanX = 2 * Math.max(Math.abs(state.veh.d) + VEHICLE_LENGTH, 25);
  const spanY = params.crossing_length + 6;
  const mpp = Math.max(spanX / width, spanY / height);
  const toPx = (m: number) => m / mpp;
  const center = worldToScreen(0, 0, width, height, mpp);

  const roadHalf = toPx(params.d_ca);
  const road: Rect = { x: 0, y: center.y - roadHalf, w: width, h: 2 * roadHalf };
  const crossing: Rect = {
    x: center.x - toPx(params.l_corridor),
    y: 0,
    w: 2 * toPx(params.l_corridor),
    h: height,
  };
  const nearZone: Rect = {
    x: crossing.x,
    y: center.y - toPx(params.d_nz),
    w: crossing.w,
    h: 2 * toPx(params.d_nz),
  };
  const collisionArea: Rect = {
    x: crossing.x,
    y: center.y - toPx(params.d_ca),
    w: crossing.w,
    h: 2 * toPx(params.d_ca),
  };

  const vehCenter = worldToScreen(-state.veh.d, 0, width, height, mpp);
  const vehicle: Rect = {
    x: vehCenter.x - toPx(VEHICLE_LENGTH),
    y: vehCenter.y - toPx(VEHICLE_WIDTH) / 2,
    w: toPx(VEHICLE_LENGTH),
    h: toPx(VEHICLE_WIDTH),
  };

  const pedPos = worldToScreen(0, state.ped.d, width, height, mpp);
  return {
    metersPerPixel: mpp,
    road,
    crossing,
    nearZone,
    collisionArea,
    collisionHot: state.flags.ped_in_ca,
    vehicle,
    pedestrian: { x: pedPos.x, y: pedPos.y, r: Math.max(toPx(0.35), 3) },
    badge: state.mode ?? "—",
  };
}

const MODE_COLORS: Record<string, string> = {
  Crossing: "#3fa34d",
  Stopping: "#d43d3d",
  Done: "#4d7fd4",
};

export function renderScene(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  state: StateMsg | null,
  params: SessionParams | null,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#1b2129";
  ctx.fillRect(0, 0, width, height);
  if (!state || !params) {
    ctx.fillStyle = "#667788";
    ctx.font = "14px sans-serif";
    ctx.fillText("waiting for session…", width / 2 - 60, height / 2);
    return;
  }
  const lay = sceneLayout(state, params, width, height);

  ctx.fillStyle = "#394450";
  ctx.fillRect(lay.road.x, lay.road.y, lay.road.w, lay.road.h);
  ctx.fillStyle = "#46525f";
  ctx.fillRect(lay.crossing.x, lay.crossing.y, lay.crossing.w, lay.crossing.h);
  ctx.fillStyle = "rgba(220, 180, 60, 0.15)";
  ctx.fillRect(lay.nearZone.x, lay.nearZone.y, lay.nearZone.w, lay.nearZone.h);
  ctx.fillStyle = lay.collisionHot ? "rgba(212, 61, 61, 0.45)"
                                   : "rgba(212, 61, 61, 0.15)";
  ctx.fillRect(lay.collisionArea.x, lay.collisionArea.y,
               lay.collisionArea.w, lay.collisionArea.h);

  ctx.fillStyle = "#9fb4c8";
  ctx.fillRect(lay.vehicle.x, lay.vehicle.y, lay.vehicle.w, lay.vehicle.h);
  ctx.fillStyle = "#f2c14e";
  ctx.beginPath();
  ctx.arc(lay.pedestrian.x, lay.pedestrian.y, lay.pedestrian.r, 0, 2 * Math.PI);
  ctx.fill();

  ctx.fillStyle = MODE_COLORS[lay.badge] ?? "#8899aa";
  ctx.fillRect(8, 8, 86, 22);
  ctx.fillStyle = "#0d1117";
  ctx.font = "bold 13px sans-serif";
  ctx.fillText(lay.badge, 16, 24);
}
