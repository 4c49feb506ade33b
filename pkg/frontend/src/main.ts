/**
 * DOM wiring.  Everything stateful lives in the view model; this module only
 * routes events (stream messages, button clicks, form submissions) through
 * the pure functions and re-renders the affected panels.  All rendering
 * happens in one place, driven by snapshot arrival order.
 */

import { ApiClient, Ack, EventInput } from "./api.js";
import { openSnapshotStream } from "./sse.js";
import {
  ViewModel,
  initialViewModel,
  applySnapshot,
  selectAgent,
  siteMarkers,
  agentMarkers,
  taskRows,
  buildingFlags,
  tokenSeries,
  graphOwners,
  selectedGraph,
  validateInjection,
  recordAck,
} from "./viewmodel.js";
import { chartGeometry, polylinePoints, axisTicks, DEFAULT_BOX } from "./chart.js";
import { layoutGraph, KIND_COLORS } from "./graphLayout.js";

const api = new ApiClient("");
let vm: ViewModel = initialViewModel();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function update(next: ViewModel): void {
  vm = next;
  render();
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

function render(): void {
  renderBanner();
  renderHeader();
  renderChips();
  renderMap();
  renderTasks();
  renderChart();
  renderGraph();
  renderFormChoices();
}

function renderBanner(): void {
  const banner = $("banner");
  if (vm.banner !== null) {
    banner.textContent = vm.banner;
    banner.classList.remove("hidden");
  } else {
    banner.classList.add("hidden");
  }
}

function renderHeader(): void {
  const snap = vm.snapshot;
  $("status-turn").textContent = snap === null ? "–" : String(snap.turn);
  $("status-phase").textContent = snap === null ? "connecting" : snap.phase;
  $("status-mode").textContent = snap === null ? "" : snap.mode;
  $("status-tokens").textContent = snap === null ? "" : `${snap.cumulativeTokens} tokens`;
}

function renderChips(): void {
  const box = $("chips");
  box.innerHTML = vm.chips
    .map(
      (chip) =>
        `<span class="chip ${chip.ok ? "chip-ok" : "chip-err"}">${escapeHtml(chip.text)}</span>`,
    )
    .join("");
}

function renderMap(): void {
  const box = $("map");
  const sites = siteMarkers(vm);
  const agents = agentMarkers(vm);
  if (sites.length === 0) {
    box.innerHTML = `<p class="muted">waiting for first snapshot…</p>`;
    return;
  }
  box.innerHTML = sites
    .map((site) => {
      const here = agents.filter((a) => a.site === site.id);
      const flags: string[] = [];
      if (site.blocked) flags.push(`<span class="flag flag-blocked">blocked</span>`);
      if (site.needsCleaning) flags.push(`<span class="flag flag-dirty">needs cleaning</span>`);
      if (site.cleaned) flags.push(`<span class="flag flag-done">cleaned</span>`);
      if (site.delivered) flags.push(`<span class="flag flag-done">delivered</span>`);
      const markerHtml = here
        .map((a) => {
          const classes = ["marker"];
          if (a.composite) classes.push("marker-composite");
          if (a.disabled) classes.push("marker-disabled");
          const cargo = a.cargo.length > 0 ? ` ⋅ ${a.cargo.join(",")}` : "";
          return `<span class="${classes.join(" ")}">${escapeHtml(a.label)}${escapeHtml(cargo)}</span>`;
        })
        .join("");
      const pkgHtml = site.packages
        .map((p) => `<span class="pkg">${escapeHtml(p)}</span>`)
        .join("");
      return `<div class="site ${site.blocked ? "site-blocked" : ""}">
        <div class="site-name">${escapeHtml(site.id)}</div>
        <div class="site-flags">${flags.join("")}</div>
        <div class="site-agents">${markerHtml}</div>
        <div class="site-pkgs">${pkgHtml}</div>
      </div>`;
    })
    .join("");
}

function renderTasks(): void {
  const pending = taskRows(vm);
  const flags = buildingFlags(vm);
  $("tasks").innerHTML =
    pending.length === 0
      ? `<li class="muted">none declared</li>`
      : pending
          .map(
            (t) =>
              `<li class="${t.done ? "task-done" : ""}">${escapeHtml(t.label)}${t.done ? " ✓" : ""}</li>`,
          )
          .join("");
  $("flags").innerHTML = flags
    .map((f) => {
      const bits: string[] = [];
      if (f.cleaned) bits.push("cleaned");
      else if (f.needsCleaning) bits.push("needs cleaning");
      if (f.stage2) bits.push("delivered");
      else if (f.stage1) bits.push("package inside");
      return `<li><strong>${escapeHtml(f.id)}</strong> ${bits.length > 0 ? bits.join(", ") : "—"}</li>`;
    })
    .join("");
}

function renderChart(): void {
  const series = tokenSeries(vm);
  const geom = chartGeometry(series.perTurn, series.cumulative, vm.chartWindow);
  const ticks = axisTicks(geom.maxY, 4);
  const box = DEFAULT_BOX;
  const tickHtml = ticks
    .map((t) => {
      const y = box.padY + (box.height - 2 * box.padY) * (1 - t / Math.max(1, geom.maxY));
      return `<text x="2" y="${y + 3}" class="tick">${t}</text>
        <line x1="${box.padX - 4}" y1="${y}" x2="${box.width - box.padX}" y2="${y}" class="grid"/>`;
    })
    .join("");
  $("chart").innerHTML = `
    ${tickHtml}
    <polyline class="line-cum" points="${polylinePoints(geom.cumulative)}"/>
    <polyline class="line-turn" points="${polylinePoints(geom.perTurn)}"/>
  `;
  $("chart-range").textContent =
    series.perTurn.length === 0 ? "no data" : `turns ${geom.firstTurn}–${geom.lastTurn}`;
}

function renderGraph(): void {
  const graph = selectedGraph(vm);
  const svg = $("graph");
  if (graph === null) {
    svg.innerHTML = "";
    $("graph-caption").textContent = "no graph";
    return;
  }
  const layout = layoutGraph(graph);
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  const edgeHtml = layout.edges
    .map((e) => `<line x1="${e.x1}" y1="${e.y1}" x2="${e.x2}" y2="${e.y2}" class="edge"/>`)
    .join("");
  const nodeHtml = layout.nodes
    .map(
      (n) => `<g>
        <circle cx="${n.x}" cy="${n.y}" r="9" fill="${n.color}">
          <title>#${n.id} ${escapeHtml(n.kind)} (turn ${n.turn}, ${escapeHtml(n.producer)}): ${escapeHtml(n.content)}</title>
        </circle>
        <text x="${n.x}" y="${n.y + 20}" class="node-label">${escapeHtml(n.label)}</text>
      </g>`,
    )
    .join("");
  svg.innerHTML = edgeHtml + nodeHtml;
  $("graph-caption").textContent =
    `${graph.owner}: ${graph.nodes.length} thoughts, ${graph.edges.length} links`;
  $("legend").innerHTML = Object.entries(KIND_COLORS)
    .map(
      ([kind, color]) =>
        `<span class="legend-item"><span class="swatch" style="background:${color}"></span>${kind}</span>`,
    )
    .join("");
}

function renderFormChoices(): void {
  const snap = vm.snapshot;
  if (snap === null) return;
  const buildings = snap.buildings.map((b) => b.id).sort();
  const agents = snap.agents
    .filter((a) => a.memberOf === null)
    .map((a) => a.id)
    .sort();
  const packages = Object.keys(snap.packages).sort();
  fillSelect("inject-building", buildings);
  fillSelect("inject-agent", agents);
  fillSelect("task-target", buildings);
  fillSelect("task-package", ["", ...packages]);
  fillSelect("graph-select", graphOwners(vm), vm.selectedAgent ?? undefined);
}

function fillSelect(id: string, options: string[], forced?: string): void {
  const select = $(id) as HTMLSelectElement;
  const previous = forced ?? select.value;
  const html = options
    .map((o) => `<option value="${escapeHtml(o)}">${escapeHtml(o === "" ? "(none)" : o)}</option>`)
    .join("");
  if (select.innerHTML !== html) select.innerHTML = html;
  if (options.includes(previous)) select.value = previous;
}

// ---------------------------------------------------------------------------
// Commands and injections
// ---------------------------------------------------------------------------

async function refreshState(): Promise<void> {
  try {
    const snap = await api.state();
    update(applySnapshot(vm, snap as unknown));
  } catch (err) {
    update({ ...vm, banner: `state fetch failed: ${String(err)}` });
  }
}

function wireControl(id: string, action: () => Promise<Ack>): void {
  $(id).addEventListener("click", () => {
    void action()
      .then((ack) => {
        if (!ack.ok) update({ ...vm, banner: ack.error ?? "command failed" });
      })
      .catch((err) => update({ ...vm, banner: String(err) }));
  });
}

function submitInjection(event: EventInput, errorId: string): void {
  const errorBox = $(errorId);
  const reason = validateInjection(vm, event);
  if (reason !== null) {
    errorBox.textContent = reason;
    return;
  }
  errorBox.textContent = "";
  void api
    .inject(event)
    .then((ack) => {
      if (!ack.ok) errorBox.textContent = ack.error ?? "rejected";
      update(recordAck(vm, event, ack));
    })
    .catch((err) => {
      errorBox.textContent = String(err);
    });
}

function wireForms(): void {
  $("inject-block").addEventListener("click", () => {
    const building = ($("inject-building") as HTMLSelectElement).value;
    submitInjection({ kind: "BuildingBlocked", payload: { building } }, "inject-error");
  });
  $("inject-unblock").addEventListener("click", () => {
    const building = ($("inject-building") as HTMLSelectElement).value;
    submitInjection({ kind: "BuildingUnblocked", payload: { building } }, "inject-error");
  });
  $("inject-disable").addEventListener("click", () => {
    const agent = ($("inject-agent") as HTMLSelectElement).value;
    submitInjection({ kind: "AgentDisabled", payload: { agent } }, "inject-error");
  });
  $("inject-enable").addEventListener("click", () => {
    const agent = ($("inject-agent") as HTMLSelectElement).value;
    submitInjection({ kind: "AgentEnabled", payload: { agent } }, "inject-error");
  });
  $("task-add").addEventListener("click", () => {
    const kind = ($("task-kind") as HTMLSelectElement).value;
    const target = ($("task-target") as HTMLSelectElement).value;
    const packageId = ($("task-package") as HTMLSelectElement).value;
    const payload: Record<string, string> = { taskKind: kind, target };
    if (packageId !== "") payload.packageId = packageId;
    submitInjection({ kind: "NewTask", payload }, "task-error");
  });
  $("instruction-send").addEventListener("click", () => {
    const input = $("instruction-text") as HTMLInputElement;
    submitInjection({ kind: "HumanInstruction", payload: { text: input.value } }, "instruction-error");
  });
  ($("graph-select") as HTMLSelectElement).addEventListener("change", (ev) => {
    update(selectAgent(vm, (ev.target as HTMLSelectElement).value));
  });
}

function start(): void {
  wireControl("btn-step", () => api.step());
  wireControl("btn-run", () => api.run());
  wireControl("btn-pause", () => api.pause());
  wireForms();
  render();
  void refreshState();
  openSnapshotStream("/stream", {
    onSnapshot: (raw) => update(applySnapshot(vm, raw)),
    onDrop: () => update({ ...vm, banner: "stream disconnected — retrying" }),
    onGarbage: () => update({ ...vm, banner: "malformed snapshot: not valid JSON" }),
  });
}

start();
