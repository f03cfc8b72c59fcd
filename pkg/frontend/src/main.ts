// DOM wiring for the operator console. Pure presentation: every number
// shown comes from the service (plus the ledger cross-check).
import { ApiClient } from "./api";
import {
  ACTION_COLORS,
  ACTION_LABELS,
  blockBoundaries,
  linearScale,
  linePath,
  ribbonPath,
} from "./chart";
import { cumulativeRewards, ledgerCheck } from "./ledger";
import { fanIsOrdered, SessionView, WhatIf } from "./schema";
import { SessionController } from "./state";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 860;
const H = 260;
const PAD = 36;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function traceChart(view: SessionView): SVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${W} ${H}`,
    width: String(W),
    height: String(H),
    class: "trace-chart",
  });
  const days = view.trace.day;
  const ys = view.trace.y;
  const firstDay = days.length ? days[0] : view.day;
  const lastDay = firstDay + Math.max(view.config.t_horizon, days.length);
  const sx = linearScale(firstDay, lastDay, PAD, W - PAD);
  const maxY = Math.max(10, ...ys);
  const sy = linearScale(0, maxY * 1.1, H - PAD, PAD);

  for (const b of blockBoundaries(firstDay, view.config.t_horizon, view.delta)) {
    svg.appendChild(svgEl("line", {
      x1: String(sx(b)), x2: String(sx(b)), y1: String(PAD), y2: String(H - PAD),
      class: "block-marker",
    }));
  }
  // day-0 marker, visible even before any data arrives
  svg.appendChild(svgEl("line", {
    x1: String(sx(firstDay)), x2: String(sx(firstDay)),
    y1: String(PAD), y2: String(H - PAD), class: "day0-marker",
  }));
  if (days.length > 0) {
    for (let i = 0; i < days.length; i++) {
      svg.appendChild(svgEl("circle", {
        cx: String(sx(days[i])), cy: String(sy(ys[i])), r: "2.4",
        fill: ACTION_COLORS[view.trace.action[i]] ?? "#555",
      }));
    }
    svg.appendChild(svgEl("path", {
      d: linePath(days, ys, sx, sy), class: "trace-line",
    }));
  }
  return svg;
}

function whatifPanel(view: SessionView, whatif: WhatIf | null): HTMLElement {
  const panel = el("div", { class: "panel", id: "whatif" });
  panel.appendChild(el("h2", {}, "what-if forecasts"));
  if (view.status !== "awaiting_decision" || whatif === null) {
    panel.classList.add("hidden");
    return panel;
  }
  const fans = el("div", { class: "fans" });
  for (const a of [1, 2, 3, 4]) {
    const fan = whatif.per_action[String(a) as "1" | "2" | "3" | "4"];
    const box = el("div", { class: "fan" });
    const ok = fanIsOrdered(fan);
    const w = 200;
    const h = 110;
    const svg = svgEl("svg", { viewBox: `0 0 ${w} ${h}`, width: String(w), height: String(h) });
    const xs = [...fan.icu_q50.keys()];
    const top = Math.max(10, ...fan.icu_q95);
    const sx = linearScale(0, xs.length - 1, 4, w - 4);
    const sy = linearScale(0, top * 1.1, h - 4, 4);
    svg.appendChild(svgEl("path", {
      d: ribbonPath(xs, fan.icu_q05, fan.icu_q95, sx, sy),
      fill: ACTION_COLORS[a], "fill-opacity": "0.25", stroke: "none",
    }));
    svg.appendChild(svgEl("path", {
      d: linePath(xs, fan.icu_q50, sx, sy),
      stroke: ACTION_COLORS[a], fill: "none", "stroke-width": "1.5",
    }));
    box.appendChild(svg);
    const badge = el("div", { class: "badge" },
      `${a} · ${ACTION_LABELS[a]} · E[return] ${fan.expected_return.toFixed(0)}`);
    if (!ok) badge.classList.add("bad");
    box.appendChild(badge);
    fans.appendChild(box);
  }
  panel.appendChild(fans);
  return panel;
}

export function renderDashboard(
  root: HTMLElement,
  controller: SessionController,
): void {
  const state = controller.snapshot();
  root.replaceChildren();

  if (state.schemaBroken) {
    root.appendChild(el("div", { class: "banner error" },
      "service contract mismatch: response failed schema validation"));
    return;
  }
  if (state.error) {
    root.appendChild(el("div", { class: "banner error" }, state.error));
  }
  const view = state.view;
  if (!view) {
    root.appendChild(el("div", { class: "banner" }, "no session"));
    return;
  }

  const head = el("div", { class: "head" });
  head.appendChild(el("h1", {}, `session ${view.id}`));
  head.appendChild(el("div", {},
    `planner ${view.planner} · block ${view.block}/${view.n_blocks} · day ${view.day} · status ${view.status}`));
  root.appendChild(head);

  root.appendChild(traceChart(view));

  const ledger = ledgerCheck(view);
  const ledgerBox = el("div", { class: "panel" });
  ledgerBox.appendChild(el("h2", {}, "reward ledger"));
  ledgerBox.appendChild(el("div", { id: "ledger-total" },
    `total reward ${ledger.reportedTotal.toFixed(2)}`));
  if (!ledger.consistent) {
    ledgerBox.appendChild(el("div", { class: "banner error" },
      `ledger mismatch: client sum ${ledger.total} != service ${ledger.reportedTotal}`));
  }
  const cum = cumulativeRewards(view.trace.reward);
  if (cum.length) {
    ledgerBox.appendChild(el("div", {},
      `cumulative by day: ${cum[cum.length - 1].toFixed(2)} over ${cum.length} days`));
  }
  root.appendChild(ledgerBox);

  const rec = el("div", { class: "panel" });
  rec.appendChild(el("h2", {}, "recommendation"));
  if (view.recommendation && view.status === "awaiting_decision") {
    const a = view.recommendation.action;
    rec.appendChild(el("div", { class: "rec", id: "recommended-action" },
      `${a} · ${ACTION_LABELS[a]}`));
    const controls = el("div", { class: "controls" });
    const accept = el("button", { id: "accept" }, "accept");
    accept.addEventListener("click", async () => {
      await controller.submitDecision("recommended");
    });
    controls.appendChild(accept);
    for (const a2 of [1, 2, 3, 4]) {
      const btn = el("button", { class: "override" }, `override ${a2}`);
      btn.addEventListener("click", async () => {
        await controller.submitDecision(a2);
      });
      controls.appendChild(btn);
    }
    rec.appendChild(controls);
  } else {
    rec.appendChild(el("div", {}, "session finished — controls disabled"));
  }
  root.appendChild(rec);

  root.appendChild(whatifPanel(view, state.whatif));
}

export function bootConsole(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? "http://127.0.0.1:8000";
  const api = new ApiClient(base);
  const controller = new SessionController(api);
  const root = document.getElementById("app")!;
  controller.subscribe(() => renderDashboard(root, controller));

  const starter = document.getElementById("start")!;
  starter.addEventListener("click", async () => {
    await controller.create({
      preset: "desk",
      t_horizon: 60, warmup_days: 30, horizon: 30, k_draws: 4,
      episodes: 200, n_theta: 40, n_x: 24, seed: Number(
        (document.getElementById("seed") as HTMLInputElement).value || "0"),
    });
    await controller.pollWhatif();
  });

  // poll at 1 Hz while a step may be advancing elsewhere
  setInterval(async () => {
    const s = controller.snapshot();
    if (s.view && s.view.status === "awaiting_decision" && !s.busy && !s.whatif) {
      await controller.pollWhatif();
    }
  }, 1000);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootConsole();
}
