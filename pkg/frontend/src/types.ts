/**
 * Wire types for the simulation control plane, plus a structural parser.
 *
 * Every payload that enters the dashboard passes through parseSnapshot so the
 * rendering layer only ever sees well-formed data.  A payload that fails the
 * checks raises SnapshotFormatError; callers surface that as an error banner
 * and keep showing the previous good snapshot.
 */

export type Phase = "AwaitingStep" | "Running" | "Completed";

export interface AgentInfo {
  id: string;
  kind: string;
  capabilities: string[];
  moveCostPerEdge: number;
  location: string;
  cargo: string[];
  active: boolean;
  memberOf: string | null;
  disabled: boolean;
  transit: unknown;
}

export interface BuildingInfo {
  id: string;
  needsCleaning: boolean;
  cleaned: boolean;
  deliveryStage1Done: boolean;
  deliveryStage2Done: boolean;
}

export interface TaskInfo {
  kind: string;
  target: string;
  packageId: string | null;
}

export interface CompositionInfo {
  compositeId: string;
  members: string[];
  controller: string;
  formedAtTurn: number;
  dissolvedAtTurn: number | null;
}

export interface GraphNodeInfo {
  id: number;
  kind: string;
  content: string;
  producer: string;
  turn: number;
}

export interface GraphEdgeInfo {
  from: number;
  to: number;
}

export interface GraphInfo {
  owner: string;
  nodes: GraphNodeInfo[];
  edges: GraphEdgeInfo[];
}

export interface RunReportInfo {
  mode: string;
  seed: number;
  scenarioHash: string;
  completed: boolean;
  makespanTurns: number | null;
  perTurnTokens: number[];
  cumulativeTokens: number;
  activePerTurn: number[];
  compositionsFormed: number;
  eventsHandled: number;
}

export interface Snapshot {
  turn: number;
  phase: Phase;
  mode: string;
  completed: boolean;
  agents: AgentInfo[];
  buildings: BuildingInfo[];
  blocked: string[];
  packages: Record<string, string>;
  pendingTasks: TaskInfo[];
  compositions: CompositionInfo[];
  graphs: Record<string, GraphInfo>;
  perTurnTokens: number[];
  cumulativeTokens: number;
  activePerTurn: number[];
  report: RunReportInfo | null;
  queuedEvents: unknown[];
  lastRecord: Record<string, unknown> | null;
}

export class SnapshotFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SnapshotFormatError";
  }
}

function fail(path: string, expected: string): never {
  throw new SnapshotFormatError(`${path}: expected ${expected}`);
}

function asRecord(value: unknown, path: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    fail(path, "an object");
  }
  return value as Record<string, unknown>;
}

function asArray(value: unknown, path: string): unknown[] {
  if (!Array.isArray(value)) fail(path, "an array");
  return value;
}

function asString(value: unknown, path: string): string {
  if (typeof value !== "string") fail(path, "a string");
  return value;
}

function asNumber(value: unknown, path: string): number {
  if (typeof value !== "number" || Number.isNaN(value)) fail(path, "a number");
  return value;
}

function asBoolean(value: unknown, path: string): boolean {
  if (typeof value !== "boolean") fail(path, "a boolean");
  return value;
}

function asStringOrNull(value: unknown, path: string): string | null {
  if (value === null) return null;
  return asString(value, path);
}

function asNumberOrNull(value: unknown, path: string): number | null {
  if (value === null) return null;
  return asNumber(value, path);
}

function stringArray(value: unknown, path: string): string[] {
  return asArray(value, path).map((v, i) => asString(v, `${path}[${i}]`));
}

function numberArray(value: unknown, path: string): number[] {
  return asArray(value, path).map((v, i) => asNumber(v, `${path}[${i}]`));
}

function parseAgent(value: unknown, path: string): AgentInfo {
  const rec = asRecord(value, path);
  return {
    id: asString(rec.id, `${path}.id`),
    kind: asString(rec.kind, `${path}.kind`),
    capabilities: stringArray(rec.capabilities, `${path}.capabilities`),
    moveCostPerEdge: asNumber(rec.moveCostPerEdge, `${path}.moveCostPerEdge`),
    location: asString(rec.location, `${path}.location`),
    cargo: stringArray(rec.cargo, `${path}.cargo`),
    active: asBoolean(rec.active, `${path}.active`),
    memberOf: asStringOrNull(rec.memberOf, `${path}.memberOf`),
    disabled: asBoolean(rec.disabled, `${path}.disabled`),
    transit: rec.transit ?? null,
  };
}

function parseBuilding(value: unknown, path: string): BuildingInfo {
  const rec = asRecord(value, path);
  return {
    id: asString(rec.id, `${path}.id`),
    needsCleaning: asBoolean(rec.needsCleaning, `${path}.needsCleaning`),
    cleaned: asBoolean(rec.cleaned, `${path}.cleaned`),
    deliveryStage1Done: asBoolean(rec.deliveryStage1Done, `${path}.deliveryStage1Done`),
    deliveryStage2Done: asBoolean(rec.deliveryStage2Done, `${path}.deliveryStage2Done`),
  };
}

function parseTask(value: unknown, path: string): TaskInfo {
  const rec = asRecord(value, path);
  return {
    kind: asString(rec.kind, `${path}.kind`),
    target: asString(rec.target, `${path}.target`),
    packageId: asStringOrNull(rec.packageId ?? null, `${path}.packageId`),
  };
}

function parseComposition(value: unknown, path: string): CompositionInfo {
  const rec = asRecord(value, path);
  return {
    compositeId: asString(rec.compositeId, `${path}.compositeId`),
    members: stringArray(rec.members, `${path}.members`),
    controller: asString(rec.controller, `${path}.controller`),
    formedAtTurn: asNumber(rec.formedAtTurn, `${path}.formedAtTurn`),
    dissolvedAtTurn: asNumberOrNull(rec.dissolvedAtTurn ?? null, `${path}.dissolvedAtTurn`),
  };
}

function parseGraph(value: unknown, path: string): GraphInfo {
  const rec = asRecord(value, path);
  const nodes = asArray(rec.nodes, `${path}.nodes`).map((n, i) => {
    const node = asRecord(n, `${path}.nodes[${i}]`);
    return {
      id: asNumber(node.id, `${path}.nodes[${i}].id`),
      kind: asString(node.kind, `${path}.nodes[${i}].kind`),
      content: asString(node.content, `${path}.nodes[${i}].content`),
      producer: asString(node.producer, `${path}.nodes[${i}].producer`),
      turn: asNumber(node.turn, `${path}.nodes[${i}].turn`),
    };
  });
  const edges = asArray(rec.edges, `${path}.edges`).map((e, i) => {
    const edge = asRecord(e, `${path}.edges[${i}]`);
    return {
      from: asNumber(edge.from, `${path}.edges[${i}].from`),
      to: asNumber(edge.to, `${path}.edges[${i}].to`),
    };
  });
  return { owner: asString(rec.owner, `${path}.owner`), nodes, edges };
}

function parseReport(value: unknown, path: string): RunReportInfo | null {
  if (value === null || value === undefined) return null;
  const rec = asRecord(value, path);
  return {
    mode: asString(rec.mode, `${path}.mode`),
    seed: asNumber(rec.seed, `${path}.seed`),
    scenarioHash: asString(rec.scenarioHash, `${path}.scenarioHash`),
    completed: asBoolean(rec.completed, `${path}.completed`),
    makespanTurns: asNumberOrNull(rec.makespanTurns ?? null, `${path}.makespanTurns`),
    perTurnTokens: numberArray(rec.perTurnTokens, `${path}.perTurnTokens`),
    cumulativeTokens: asNumber(rec.cumulativeTokens, `${path}.cumulativeTokens`),
    activePerTurn: numberArray(rec.activePerTurn, `${path}.activePerTurn`),
    compositionsFormed: asNumber(rec.compositionsFormed, `${path}.compositionsFormed`),
    eventsHandled: asNumber(rec.eventsHandled, `${path}.eventsHandled`),
  };
}

const PHASES: ReadonlySet<string> = new Set(["AwaitingStep", "Running", "Completed"]);

/** Validate an arbitrary payload and return it as a typed Snapshot. */
export function parseSnapshot(raw: unknown): Snapshot {
  const rec = asRecord(raw, "snapshot");
  const phase = asString(rec.phase, "snapshot.phase");
  if (!PHASES.has(phase)) fail("snapshot.phase", `one of ${[...PHASES].join(", ")}`);

  const packagesRec = asRecord(rec.packages, "snapshot.packages");
  const packages: Record<string, string> = {};
  for (const [pid, loc] of Object.entries(packagesRec)) {
    packages[pid] = asString(loc, `snapshot.packages.${pid}`);
  }

  const graphsRec = asRecord(rec.graphs, "snapshot.graphs");
  const graphs: Record<string, GraphInfo> = {};
  for (const [owner, g] of Object.entries(graphsRec)) {
    graphs[owner] = parseGraph(g, `snapshot.graphs.${owner}`);
  }

  return {
    turn: asNumber(rec.turn, "snapshot.turn"),
    phase: phase as Phase,
    mode: asString(rec.mode, "snapshot.mode"),
    completed: asBoolean(rec.completed, "snapshot.completed"),
    agents: asArray(rec.agents, "snapshot.agents").map((a, i) =>
      parseAgent(a, `snapshot.agents[${i}]`),
    ),
    buildings: asArray(rec.buildings, "snapshot.buildings").map((b, i) =>
      parseBuilding(b, `snapshot.buildings[${i}]`),
    ),
    blocked: stringArray(rec.blocked, "snapshot.blocked"),
    packages,
    pendingTasks: asArray(rec.pendingTasks, "snapshot.pendingTasks").map((t, i) =>
      parseTask(t, `snapshot.pendingTasks[${i}]`),
    ),
    compositions: asArray(rec.compositions, "snapshot.compositions").map((c, i) =>
      parseComposition(c, `snapshot.compositions[${i}]`),
    ),
    graphs,
    perTurnTokens: numberArray(rec.perTurnTokens, "snapshot.perTurnTokens"),
    cumulativeTokens: asNumber(rec.cumulativeTokens, "snapshot.cumulativeTokens"),
    activePerTurn: numberArray(rec.activePerTurn, "snapshot.activePerTurn"),
    report: parseReport(rec.report, "snapshot.report"),
    queuedEvents: Array.isArray(rec.queuedEvents) ? rec.queuedEvents : [],
    lastRecord:
      rec.lastRecord === null || rec.lastRecord === undefined
        ? null
        : asRecord(rec.lastRecord, "snapshot.lastRecord"),
  };
}
