import { describe, expect, it } from "vitest";
import { parseSnapshot, SnapshotFormatError } from "../src/types.js";
import { turnZeroSnapshot, compositeSnapshot } from "./helpers.js";

describe("parseSnapshot", () => {
  it("accepts a turn-zero payload and preserves its fields", () => {
    const snap = parseSnapshot(turnZeroSnapshot());
    expect(snap.turn).toBe(0);
    expect(snap.phase).toBe("AwaitingStep");
    expect(snap.mode).toBe("cgot");
    expect(snap.agents.map((a) => a.id)).toEqual(["RA", "RB", "V1", "V2"]);
    expect(snap.buildings).toHaveLength(3);
    expect(snap.pendingTasks).toHaveLength(4);
    expect(snap.packages).toEqual({ p1: "PackageSite", p2: "PackageSite" });
    expect(Object.keys(snap.graphs).sort()).toEqual(["RA", "RB", "V1", "V2"]);
    expect(snap.graphs.RA?.nodes).toHaveLength(2);
    expect(snap.report?.seed).toBe(7);
    expect(snap.lastRecord).toBeNull();
  });

  it("accepts a mid-run payload with composites", () => {
    const snap = parseSnapshot(compositeSnapshot());
    expect(snap.compositions).toHaveLength(2);
    expect(snap.compositions[0]?.members).toEqual(["RA", "V1"]);
    expect(snap.compositions[0]?.dissolvedAtTurn).toBeNull();
    expect(snap.blocked).toEqual(["B2"]);
    expect(snap.graphs.C1?.edges).toContainEqual({ from: 0, to: 8 });
    expect(snap.perTurnTokens).toEqual([716, 726]);
  });

  it("rejects a non-object payload", () => {
    expect(() => parseSnapshot("nope")).toThrow(SnapshotFormatError);
    expect(() => parseSnapshot(null)).toThrow(SnapshotFormatError);
    expect(() => parseSnapshot([1, 2])).toThrow(SnapshotFormatError);
  });

  it("rejects a payload with a missing agents list", () => {
    const raw = turnZeroSnapshot();
    delete raw.agents;
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.agents/);
  });

  it("rejects an unknown phase", () => {
    const raw = turnZeroSnapshot();
    raw.phase = "Flying";
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.phase/);
  });

  it("rejects a non-numeric turn", () => {
    const raw = turnZeroSnapshot();
    raw.turn = "zero";
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.turn/);
  });

  it("rejects a malformed agent entry and names its path", () => {
    const raw = turnZeroSnapshot();
    (raw.agents as Record<string, unknown>[])[1]!.location = 42;
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.agents\[1\]\.location/);
  });

  it("rejects a graph node with a string id", () => {
    const raw = turnZeroSnapshot();
    const graphs = raw.graphs as Record<string, { nodes: Record<string, unknown>[] }>;
    graphs.RA!.nodes[0]!.id = "zero";
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.graphs\.RA\.nodes\[0\]\.id/);
  });

  it("rejects a package location that is not a string", () => {
    const raw = turnZeroSnapshot();
    (raw.packages as Record<string, unknown>).p1 = 7;
    expect(() => parseSnapshot(raw)).toThrow(/snapshot\.packages\.p1/);
  });

  it("treats missing queuedEvents as an empty list", () => {
    const raw = turnZeroSnapshot();
    delete raw.queuedEvents;
    expect(parseSnapshot(raw).queuedEvents).toEqual([]);
  });

  it("accepts a null report", () => {
    const raw = turnZeroSnapshot();
    raw.report = null;
    expect(parseSnapshot(raw).report).toBeNull();
  });
});
