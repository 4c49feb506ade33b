/**
 * HTTP client for the simulation server.  The dashboard talks to exactly
 * three endpoints: GET /state, POST /command, GET /stream (the stream is
 * handled in sse.ts).  The fetch implementation is injectable for tests.
 */

import { Snapshot, parseSnapshot } from "./types.js";

export interface Ack {
  ok: boolean;
  message?: string;
  error?: string;
  turn?: number;
  phase?: string;
  appliesAtTurn?: number;
}

export interface EventInput {
  kind: string;
  payload: Record<string, string>;
  atTurn?: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  async state(): Promise<Snapshot> {
    const res = await this.fetchFn(`${this.baseUrl}/state`);
    if (!res.ok) throw new Error(`GET /state failed: HTTP ${res.status}`);
    return parseSnapshot(await res.json());
  }

  private async command(body: Record<string, unknown>): Promise<Ack> {
    const res = await this.fetchFn(`${this.baseUrl}/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new Error(`POST /command failed: HTTP ${res.status}`);
    return (await res.json()) as Ack;
  }

  step(): Promise<Ack> {
    return this.command({ kind: "Step" });
  }

  run(): Promise<Ack> {
    return this.command({ kind: "Run" });
  }

  pause(): Promise<Ack> {
    return this.command({ kind: "Pause" });
  }

  inject(event: EventInput): Promise<Ack> {
    const body: Record<string, unknown> = { kind: "InjectEvent", event: { ...event } };
    return this.command(body);
  }

  blockBuilding(building: string, atTurn?: number): Promise<Ack> {
    return this.inject(withTurn({ kind: "BuildingBlocked", payload: { building } }, atTurn));
  }

  unblockBuilding(building: string, atTurn?: number): Promise<Ack> {
    return this.inject(withTurn({ kind: "BuildingUnblocked", payload: { building } }, atTurn));
  }

  disableAgent(agent: string, atTurn?: number): Promise<Ack> {
    return this.inject(withTurn({ kind: "AgentDisabled", payload: { agent } }, atTurn));
  }

  enableAgent(agent: string, atTurn?: number): Promise<Ack> {
    return this.inject(withTurn({ kind: "AgentEnabled", payload: { agent } }, atTurn));
  }

  newTask(kind: string, target: string, packageId?: string): Promise<Ack> {
    const payload: Record<string, string> = { taskKind: kind, target };
    if (packageId !== undefined) payload.packageId = packageId;
    return this.inject({ kind: "NewTask", payload });
  }

  instruction(text: string): Promise<Ack> {
    return this.inject({ kind: "HumanInstruction", payload: { text } });
  }
}

function withTurn(event: EventInput, atTurn?: number): EventInput {
  if (atTurn !== undefined) return { ...event, atTurn };
  return event;
}

export interface ReportRow {
  turn: number;
  mode: string;
  tokensTurn: number;
  tokensCum: number;
  activeAgents: number;
}

export const REPORT_CSV_HEADER = "turn,mode,tokens_turn,tokens_cum,active_agents";

/**
 * Parse the per-turn report CSV written by the server.  Strict: the header
 * must match exactly and every row must have five fields with numeric
 * turn/token/agent columns.
 */
export function parseReportCsv(text: string): ReportRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0] !== REPORT_CSV_HEADER) {
    throw new Error(`report csv: expected header '${REPORT_CSV_HEADER}'`);
  }
  return lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== 5) {
      throw new Error(`report csv row ${i + 1}: expected 5 fields, got ${parts.length}`);
    }
    const [turn, mode, tokensTurn, tokensCum, activeAgents] = parts as [
      string,
      string,
      string,
      string,
      string,
    ];
    const row: ReportRow = {
      turn: Number(turn),
      mode,
      tokensTurn: Number(tokensTurn),
      tokensCum: Number(tokensCum),
      activeAgents: Number(activeAgents),
    };
    for (const [field, value] of Object.entries(row)) {
      if (field !== "mode" && (typeof value !== "number" || Number.isNaN(value))) {
        throw new Error(`report csv row ${i + 1}: field '${field}' is not numeric`);
      }
    }
    return row;
  });
}
