/**
 * Snapshot fixtures shaped exactly like the server's /state and /stream
 * payloads.  Built as plain JSON objects (type `unknown`) so tests exercise
 * the same parsing path as live traffic.
 */

type Json = Record<string, unknown>;

function agent(over: Json): Json {
  return {
    id: "RA",
    kind: "Robot",
    capabilities: ["CleanBuilding", "CarryInside"],
    moveCostPerEdge: 2,
    location: "PackageSite",
    cargo: [],
    active: true,
    memberOf: null,
    disabled: false,
    transit: null,
    ...over,
  };
}

function building(over: Json): Json {
  return {
    id: "B1",
    needsCleaning: false,
    cleaned: false,
    deliveryStage1Done: false,
    deliveryStage2Done: false,
    ...over,
  };
}

function initialNodes(owner: string, base: number): Json[] {
  return [
    {
      id: base,
      kind: "Initial",
      content: `${owner} ready at PackageSite`,
      producer: owner,
      turn: 0,
    },
    {
      id: base + 1,
      kind: "Initial",
      content: "goals pending",
      producer: owner,
      turn: 0,
    },
  ];
}

function report(over: Json): Json {
  return {
    mode: "cgot",
    seed: 7,
    scenarioHash: "abc123",
    completed: false,
    makespanTurns: null,
    perTurnTokens: [],
    cumulativeTokens: 0,
    activePerTurn: [],
    compositionsFormed: 0,
    eventsHandled: 0,
    ...over,
  };
}

/** The default scenario as the server reports it before the first step. */
export function turnZeroSnapshot(): Json {
  return {
    turn: 0,
    phase: "AwaitingStep",
    mode: "cgot",
    completed: false,
    agents: [
      agent({ id: "RA" }),
      agent({ id: "RB", capabilities: ["CleanBuilding", "CarryInside"] }),
      agent({
        id: "V1",
        kind: "Vehicle",
        capabilities: ["CarryPackage", "CarryRobot"],
        moveCostPerEdge: 1,
      }),
      agent({
        id: "V2",
        kind: "Vehicle",
        capabilities: ["CarryPackage", "CarryRobot"],
        moveCostPerEdge: 1,
      }),
    ],
    buildings: [
      building({ id: "B1", needsCleaning: true }),
      building({ id: "B2" }),
      building({ id: "B3", needsCleaning: true }),
    ],
    blocked: [],
    packages: { p1: "PackageSite", p2: "PackageSite" },
    pendingTasks: [
      { kind: "Deliver", target: "B1", packageId: "p1" },
      { kind: "Deliver", target: "B3", packageId: "p2" },
      { kind: "Clean", target: "B1", packageId: null },
      { kind: "Clean", target: "B3", packageId: null },
    ],
    compositions: [],
    graphs: {
      RA: { owner: "RA", nodes: initialNodes("RA", 0), edges: [] },
      RB: { owner: "RB", nodes: initialNodes("RB", 2), edges: [] },
      V1: { owner: "V1", nodes: initialNodes("V1", 4), edges: [] },
      V2: { owner: "V2", nodes: initialNodes("V2", 6), edges: [] },
    },
    perTurnTokens: [],
    cumulativeTokens: 0,
    activePerTurn: [],
    report: report({}),
    queuedEvents: [],
    lastRecord: null,
  };
}

/** A mid-run snapshot with two live composites and some progress. */
export function compositeSnapshot(): Json {
  const base = turnZeroSnapshot();
  const c1Nodes = [
    ...initialNodes("RA", 0),
    ...initialNodes("V1", 4),
    {
      id: 8,
      kind: "CompositionMarker",
      content: "C1 formed from RA, V1",
      producer: "C1",
      turn: 1,
    },
    { id: 9, kind: "Intermediate", content: "heading to B1", producer: "C1", turn: 1 },
    { id: 10, kind: "Output", content: "Move(B1)", producer: "C1", turn: 1 },
  ];
  return {
    ...base,
    turn: 2,
    phase: "AwaitingStep",
    blocked: ["B2"],
    agents: [
      agent({ id: "RA", active: false, memberOf: "C1", location: "B1" }),
      agent({ id: "RB", active: false, memberOf: "C2", location: "B3" }),
      agent({
        id: "V1",
        kind: "Vehicle",
        capabilities: ["CarryPackage", "CarryRobot"],
        moveCostPerEdge: 1,
        active: false,
        memberOf: "C1",
        location: "B1",
      }),
      agent({
        id: "V2",
        kind: "Vehicle",
        capabilities: ["CarryPackage", "CarryRobot"],
        moveCostPerEdge: 1,
        active: false,
        memberOf: "C2",
        location: "B3",
      }),
      agent({
        id: "C1",
        kind: "Composite",
        capabilities: ["CarryInside", "CarryPackage", "CarryRobot", "CleanBuilding"],
        moveCostPerEdge: 1,
        location: "B1",
        cargo: ["p1"],
        active: true,
      }),
      agent({
        id: "C2",
        kind: "Composite",
        capabilities: ["CarryInside", "CarryPackage", "CarryRobot", "CleanBuilding"],
        moveCostPerEdge: 1,
        location: "B3",
        cargo: ["p2"],
        active: true,
      }),
    ],
    packages: { p1: "carried:C1", p2: "carried:C2" },
    compositions: [
      {
        compositeId: "C1",
        members: ["RA", "V1"],
        controller: "V1",
        formedAtTurn: 1,
        dissolvedAtTurn: null,
      },
      {
        compositeId: "C2",
        members: ["RB", "V2"],
        controller: "V2",
        formedAtTurn: 1,
        dissolvedAtTurn: null,
      },
    ],
    graphs: {
      C1: {
        owner: "C1",
        nodes: c1Nodes,
        edges: [
          { from: 0, to: 8 },
          { from: 4, to: 8 },
          { from: 8, to: 9 },
          { from: 9, to: 10 },
        ],
      },
      C2: { owner: "C2", nodes: initialNodes("C2", 20), edges: [] },
    },
    perTurnTokens: [716, 726],
    cumulativeTokens: 1442,
    activePerTurn: [4, 4],
    report: report({ perTurnTokens: [716, 726], cumulativeTokens: 1442, activePerTurn: [4, 4] }),
  };
}
