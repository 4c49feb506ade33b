/**
 * End-to-end test against the real simulation server.  The server process is
 * started exactly as an operator would start it; the test then drives the
 * dashboard's own client modules through the documented HTTP surface:
 * inject an instruction, watch the task appear, run to completion, and check
 * the token chart series against the server-written report CSV.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { existsSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { ApiClient, parseReportCsv } from "../src/api.js";
import { Snapshot } from "../src/types.js";
import {
  initialViewModel,
  applySnapshot,
  validateInjection,
  ackChipText,
  tokenSeries,
  agentMarkers,
  taskRows,
} from "../src/viewmodel.js";
import { chartGeometry } from "../src/chart.js";

const STARTUP_MS = 30_000;
const RUN_MS = 90_000;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      server.close(() => resolve(address.port));
    });
    server.on("error", reject);
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor<T>(
  poll: () => Promise<T | null>,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const value = await poll();
    if (value !== null) return value;
    await sleep(150);
  }
  throw new Error(`timed out waiting for ${what}`);
}

describe("dashboard against a live server", () => {
  let child: ChildProcess;
  let client: ApiClient;
  let workDir: string;
  let csvPath: string;
  let stderr = "";

  beforeAll(async () => {
    const port = await freePort();
    workDir = mkdtempSync(join(tmpdir(), "dashboard-e2e-"));
    csvPath = join(workDir, "report.csv");
    child = spawn(
      "python3",
      [
        "-m",
        "cgot_sim.cli",
        "serve",
        "--scenario",
        "default",
        "--mode",
        "cgot",
        "--seed",
        "7",
        "--host",
        "127.0.0.1",
        "--port",
        String(port),
        "--interval",
        "1",
        "--out",
        csvPath,
      ],
      { cwd: workDir, stdio: ["ignore", "ignore", "pipe"] },
    );
    child.stderr?.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
    });
    client = new ApiClient(`http://127.0.0.1:${port}`);
    await waitFor(
      async () => {
        if (child.exitCode !== null) {
          throw new Error(`server exited early (code ${child.exitCode}): ${stderr}`);
        }
        try {
          return await client.state();
        } catch {
          return null;
        }
      },
      STARTUP_MS,
      `server startup (stderr: ${stderr || "empty"})`,
    );
  }, STARTUP_MS + 5_000);

  afterAll(async () => {
    child?.kill("SIGTERM");
    await sleep(200);
    if (child && child.exitCode === null) child.kill("SIGKILL");
    rmSync(workDir, { recursive: true, force: true });
  });

  it(
    "injects an instruction, applies it, runs to completion, and matches the report CSV",
    async () => {
      // Initial snapshot renders four solo markers and four pending tasks.
      let vm = applySnapshot(initialViewModel(), (await client.state()) as unknown);
      expect(vm.banner).toBeNull();
      const first = vm.snapshot as Snapshot;
      expect(first.turn).toBe(0);
      expect(first.phase).toBe("AwaitingStep");
      expect(agentMarkers(vm).map((m) => m.id)).toEqual(["RA", "RB", "V1", "V2"]);
      expect(taskRows(vm)).toHaveLength(4);
      const deliverB2Count = (): number =>
        taskRows(vm).filter((t) => t.kind === "Deliver" && t.target === "B2").length;
      const tasksBefore = taskRows(vm).length;
      const deliverB2Before = deliverB2Count();

      // Client-side validation passes, the server acknowledges with the turn
      // at which the instruction lands, and the chip phrases that turn.
      const event = { kind: "HumanInstruction", payload: { text: "deliver B2" } };
      expect(validateInjection(vm, event)).toBeNull();
      const ack = await client.instruction("deliver B2");
      expect(ack.ok).toBe(true);
      expect(ack.message).toContain("applies at turn");
      expect(typeof ack.appliesAtTurn).toBe("number");
      expect(ackChipText(event, ack)).toBe(`"deliver B2" accepted for turn ${ack.appliesAtTurn}`);

      // The new task is visible in the snapshot after the next step.
      const stepAck = await client.step();
      expect(stepAck.ok).toBe(true);
      vm = applySnapshot(vm, (await client.state()) as unknown);
      const afterStep = vm.snapshot as Snapshot;
      expect(afterStep.turn).toBe(1);
      expect(afterStep.turn - (ack.appliesAtTurn ?? 0)).toBeLessThanOrEqual(2);
      expect(taskRows(vm)).toHaveLength(tasksBefore + 1);
      expect(deliverB2Count()).toBe(deliverB2Before + 1);

      // A bad injection is refused by the server with a reason the form shows inline.
      const bad = await client.blockBuilding("B9");
      expect(bad.ok).toBe(false);
      expect(bad.error).toBe("unknown building 'B9'");

      // Run to completion.
      const runAck = await client.run();
      expect(runAck.ok).toBe(true);
      const finalSnap = await waitFor(
        async () => {
          const snap = await client.state();
          return snap.phase === "Completed" ? snap : null;
        },
        RUN_MS,
        "run completion",
      );
      vm = applySnapshot(vm, finalSnap as unknown);
      expect(finalSnap.completed).toBe(true);
      expect(finalSnap.report?.completed).toBe(true);
      const finalRows = taskRows(vm);
      expect(finalRows).toHaveLength(tasksBefore + 1);
      expect(finalRows.every((t) => t.done)).toBe(true);

      // The delivery the instruction created actually happened.
      const b2 = finalSnap.buildings.find((b) => b.id === "B2");
      expect(b2?.deliveryStage2Done).toBe(true);

      // The chart series and the server-written CSV agree exactly.
      await waitFor(
        () => Promise.resolve(existsSync(csvPath) ? true : null),
        10_000,
        "report csv",
      );
      const rows = parseReportCsv(readFileSync(csvPath, "utf8"));
      const series = tokenSeries(vm);
      expect(rows.map((r) => r.turn)).toEqual(series.turns);
      expect(rows.map((r) => r.tokensTurn)).toEqual(series.perTurn);
      expect(rows.map((r) => r.tokensCum)).toEqual(series.cumulative);
      expect(rows.map((r) => r.tokensTurn)).toEqual(finalSnap.perTurnTokens);
      expect(rows.at(-1)?.tokensCum).toBe(finalSnap.cumulativeTokens);
      expect(rows.map((r) => r.activeAgents)).toEqual(finalSnap.activePerTurn);
      expect(rows.every((r) => r.mode === "cgot")).toBe(true);

      // The rendered cumulative line never dips (y grows downward in SVG).
      const geom = chartGeometry(series.perTurn, series.cumulative, series.perTurn.length);
      const ys = geom.cumulative.map((p) => p.y);
      for (let i = 1; i < ys.length; i++) {
        expect(ys[i]!).toBeLessThanOrEqual(ys[i - 1]!);
      }
    },
    RUN_MS + 30_000,
  );
});
