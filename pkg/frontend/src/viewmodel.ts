/**
 * Dashboard state and the pure projections the panels render from.
 *
 * The view model mirrors the most recently accepted snapshot plus local UI
 * state (selected agent, chart window, acknowledgement chips).  All
 * projections are pure functions of the view model, so the rendering layer
 * contains no logic of its own and everything here is unit-testable.
 */

import { Snapshot, GraphInfo, SnapshotFormatError, parseSnapshot } from "./types.js";
import { Ack, EventInput } from "./api.js";

export interface AckChip {
  text: string;
  ok: boolean;
  atTurn: number | null;
}

export interface ViewModel {
  snapshot: Snapshot | null;
  banner: string | null;
  selectedAgent: string | null;
  chartWindow: number;
  chips: AckChip[];
  snapshotsSeen: number;
}

const MAX_CHIPS = 8;

export function initialViewModel(): ViewModel {
  return {
    snapshot: null,
    banner: null,
    selectedAgent: null,
    chartWindow: 60,
    chips: [],
    snapshotsSeen: 0,
  };
}

/**
 * Fold one received payload into the view model.  A well-formed snapshot
 * replaces the current one and clears any error banner; a malformed payload
 * sets the banner and leaves the previous snapshot (and thus the previous
 * rendered view) untouched.
 */
export function applySnapshot(vm: ViewModel, raw: unknown): ViewModel {
  let snapshot: Snapshot;
  try {
    snapshot = parseSnapshot(raw);
  } catch (err) {
    const reason = err instanceof SnapshotFormatError ? err.message : String(err);
    return { ...vm, banner: `malformed snapshot: ${reason}` };
  }
  const owners = Object.keys(snapshot.graphs).sort();
  const selected =
    vm.selectedAgent !== null && snapshot.graphs[vm.selectedAgent] !== undefined
      ? vm.selectedAgent
      : (owners[0] ?? null);
  return {
    ...vm,
    snapshot,
    banner: null,
    selectedAgent: selected,
    snapshotsSeen: vm.snapshotsSeen + 1,
  };
}

export function selectAgent(vm: ViewModel, agentId: string): ViewModel {
  if (vm.snapshot === null || vm.snapshot.graphs[agentId] === undefined) return vm;
  return { ...vm, selectedAgent: agentId };
}

export function setChartWindow(vm: ViewModel, window: number): ViewModel {
  return { ...vm, chartWindow: Math.max(1, Math.floor(window)) };
}

// ---------------------------------------------------------------------------
// Map panel
// ---------------------------------------------------------------------------

export interface SiteMarker {
  id: string;
  blocked: boolean;
  needsCleaning: boolean;
  cleaned: boolean;
  delivered: boolean;
  packages: string[];
}

export interface AgentMarker {
  id: string;
  site: string;
  label: string;
  composite: boolean;
  members: string[];
  disabled: boolean;
  cargo: string[];
}

/** All known sites: the depot first, then buildings in id order. */
export function siteMarkers(vm: ViewModel): SiteMarker[] {
  const snap = vm.snapshot;
  if (snap === null) return [];
  const ids = new Set<string>(snap.buildings.map((b) => b.id));
  for (const agent of snap.agents) ids.add(agent.location);
  for (const loc of Object.values(snap.packages)) {
    if (!loc.startsWith("carried:")) ids.add(loc);
  }
  const buildingById = new Map(snap.buildings.map((b) => [b.id, b]));
  const blocked = new Set(snap.blocked);
  const sorted = [...ids].sort((a, b) => {
    const aDepot = buildingById.has(a) ? 1 : 0;
    const bDepot = buildingById.has(b) ? 1 : 0;
    if (aDepot !== bDepot) return aDepot - bDepot;
    return a < b ? -1 : a > b ? 1 : 0;
  });
  return sorted.map((id) => {
    const b = buildingById.get(id);
    const packages = Object.entries(snap.packages)
      .filter(([, loc]) => loc === id)
      .map(([pid]) => pid)
      .sort();
    return {
      id,
      blocked: blocked.has(id),
      needsCleaning: b?.needsCleaning ?? false,
      cleaned: b?.cleaned ?? false,
      delivered: b?.deliveryStage2Done ?? false,
      packages,
    };
  });
}

/**
 * One marker per body on the map.  A live composite appears as a single
 * marker labeled with its member ids; the members themselves do not get
 * markers of their own while absorbed.
 */
export function agentMarkers(vm: ViewModel): AgentMarker[] {
  const snap = vm.snapshot;
  if (snap === null) return [];
  const liveMembers = new Map<string, string[]>();
  for (const comp of snap.compositions) {
    if (comp.dissolvedAtTurn === null) liveMembers.set(comp.compositeId, comp.members);
  }
  return snap.agents
    .filter((a) => a.active)
    .map((a) => {
      const members = liveMembers.get(a.id) ?? [];
      const composite = members.length > 0;
      return {
        id: a.id,
        site: a.location,
        label: composite ? `${a.id} [${members.join("+")}]` : a.id,
        composite,
        members,
        disabled: a.disabled,
        cargo: [...a.cargo].sort(),
      };
    })
    .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
}

// ---------------------------------------------------------------------------
// Task panel
// ---------------------------------------------------------------------------

export interface TaskRow {
  label: string;
  kind: string;
  target: string;
  done: boolean;
}

export interface BuildingFlagRow {
  id: string;
  cleaned: boolean;
  needsCleaning: boolean;
  stage1: boolean;
  stage2: boolean;
}

/**
 * One row per declared task.  The server keeps the declared list stable and
 * tracks progress on the buildings, so doneness is derived from the target
 * building's flags: Clean is done once the building is cleaned, Deliver once
 * both delivery stages are through.
 */
export function taskRows(vm: ViewModel): TaskRow[] {
  const snap = vm.snapshot;
  if (snap === null) return [];
  const buildingById = new Map(snap.buildings.map((b) => [b.id, b]));
  return snap.pendingTasks.map((t) => {
    const b = buildingById.get(t.target);
    const done =
      b !== undefined &&
      (t.kind === "Clean" ? b.cleaned : b.deliveryStage1Done && b.deliveryStage2Done);
    return {
      label:
        t.packageId !== null ? `${t.kind} ${t.packageId} to ${t.target}` : `${t.kind} ${t.target}`,
      kind: t.kind,
      target: t.target,
      done,
    };
  });
}

export function buildingFlags(vm: ViewModel): BuildingFlagRow[] {
  const snap = vm.snapshot;
  if (snap === null) return [];
  return [...snap.buildings]
    .sort((a, b) => (a.id < b.id ? -1 : 1))
    .map((b) => ({
      id: b.id,
      cleaned: b.cleaned,
      needsCleaning: b.needsCleaning,
      stage1: b.deliveryStage1Done,
      stage2: b.deliveryStage2Done,
    }));
}

// ---------------------------------------------------------------------------
// Token chart
// ---------------------------------------------------------------------------

export interface TokenSeries {
  turns: number[];
  perTurn: number[];
  cumulative: number[];
}

/**
 * Token usage per turn with a cumulative prefix sum.  The cumulative series
 * is non-decreasing by construction and its last element equals the server's
 * running total whenever the snapshot is internally consistent.
 */
export function tokenSeries(vm: ViewModel): TokenSeries {
  const perTurn = vm.snapshot?.perTurnTokens ?? [];
  const cumulative: number[] = [];
  let total = 0;
  for (const v of perTurn) {
    total += v;
    cumulative.push(total);
  }
  return { turns: perTurn.map((_, i) => i), perTurn: [...perTurn], cumulative };
}

// ---------------------------------------------------------------------------
// Graph panel
// ---------------------------------------------------------------------------

export function graphOwners(vm: ViewModel): string[] {
  if (vm.snapshot === null) return [];
  return Object.keys(vm.snapshot.graphs).sort();
}

export function selectedGraph(vm: ViewModel): GraphInfo | null {
  if (vm.snapshot === null || vm.selectedAgent === null) return null;
  return vm.snapshot.graphs[vm.selectedAgent] ?? null;
}

// ---------------------------------------------------------------------------
// Injection form
// ---------------------------------------------------------------------------

const EVENT_KINDS: ReadonlySet<string> = new Set([
  "BuildingBlocked",
  "BuildingUnblocked",
  "AgentDisabled",
  "AgentEnabled",
  "NewTask",
  "HumanInstruction",
]);

/**
 * Client-side validation of an injection form against the latest snapshot.
 * Returns null when the event can be submitted, otherwise a human-readable
 * reason.  The server performs its own authoritative validation; this check
 * exists to catch typos before a round trip.
 */
export function validateInjection(vm: ViewModel, event: EventInput): string | null {
  const snap = vm.snapshot;
  if (snap === null) return "no snapshot received yet";
  if (!EVENT_KINDS.has(event.kind)) return `unknown event kind '${event.kind}'`;

  const buildings = new Set(snap.buildings.map((b) => b.id));
  const agents = new Set(snap.agents.map((a) => a.id));

  if (event.atTurn !== undefined) {
    if (!Number.isInteger(event.atTurn) || event.atTurn < 0) {
      return `event turn must be a non-negative integer, got ${event.atTurn}`;
    }
  }

  switch (event.kind) {
    case "BuildingBlocked":
    case "BuildingUnblocked": {
      const building = event.payload.building ?? "";
      if (!buildings.has(building)) return `unknown building '${building}'`;
      return null;
    }
    case "AgentDisabled":
    case "AgentEnabled": {
      const agent = event.payload.agent ?? "";
      if (!agents.has(agent)) return `unknown agent '${agent}'`;
      return null;
    }
    case "NewTask": {
      const kind = event.payload.taskKind ?? "";
      if (kind !== "Clean" && kind !== "Deliver") return `unknown task kind '${kind}'`;
      const target = event.payload.target ?? "";
      if (!buildings.has(target)) return `unknown building '${target}'`;
      const packageId = event.payload.packageId;
      if (packageId !== undefined && snap.packages[packageId] === undefined) {
        return `unknown package '${packageId}'`;
      }
      return null;
    }
    case "HumanInstruction": {
      const text = (event.payload.text ?? "").trim();
      if (text.length === 0) return "instruction text is empty";
      return null;
    }
    default:
      return null;
  }
}

/** Text for the acknowledgement chip shown after an injection round trip. */
export function ackChipText(event: EventInput, ack: Ack): string {
  if (!ack.ok) return `rejected: ${ack.error ?? "unknown error"}`;
  const turn = ack.appliesAtTurn;
  switch (event.kind) {
    case "BuildingBlocked":
      return `${event.payload.building} blocked from turn ${turn}`;
    case "BuildingUnblocked":
      return `${event.payload.building} unblocked from turn ${turn}`;
    case "AgentDisabled":
      return `${event.payload.agent} disabled from turn ${turn}`;
    case "AgentEnabled":
      return `${event.payload.agent} enabled from turn ${turn}`;
    case "NewTask":
      return `task ${event.payload.taskKind} ${event.payload.target} queued for turn ${turn}`;
    case "HumanInstruction":
      return `"${event.payload.text}" accepted for turn ${turn}`;
    default:
      return ack.message ?? "accepted";
  }
}

export function recordAck(vm: ViewModel, event: EventInput, ack: Ack): ViewModel {
  const chip: AckChip = {
    text: ackChipText(event, ack),
    ok: ack.ok,
    atTurn: ack.appliesAtTurn ?? null,
  };
  const chips = [...vm.chips, chip].slice(-MAX_CHIPS);
  return { ...vm, chips };
}
