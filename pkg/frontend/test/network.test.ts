import { beforeEach, describe, expect, test, vi } from "vitest";

import { ApiClient, GraphDoc } from "../src/api";
import {
  findNodeByName,
  layoutGraph,
  neighborhood,
  nodeRadius,
  renderNetwork,
} from "../src/network";

const TWO_NODES: GraphDoc = {
  version: 1,
  nodes: [
    { dim: 1, name: "Sleep Quality", size: 10 },
    { dim: 2, name: "Worry", size: 6 },
  ],
  edges: [],
};

const TRIANGLE: GraphDoc = {
  version: 1,
  nodes: [
    { dim: 1, name: "A", size: 5 },
    { dim: 2, name: "B", size: 4 },
    { dim: 3, name: "C", size: 3 },
  ],
  edges: [{ source: 1, target: 2, weight: 2 }],
};

describe("geometry", () => {
  test("node area is proportional to indicator count", () => {
    const r1 = nodeRadius(10);
    const r2 = nodeRadius(6);
    expect((r1 * r1) / (r2 * r2)).toBeCloseTo(10 / 6, 10);
  });

  test("layout positions every node and resolves edge endpoints", () => {
    const layout = layoutGraph(TRIANGLE, 50);
    expect(layout.nodes).toHaveLength(3);
    for (const node of layout.nodes) {
      expect(Number.isFinite(node.x)).toBe(true);
      expect(Number.isFinite(node.y)).toBe(true);
    }
    const edge = layout.edges[0];
    const source = layout.nodes.find((n) => n.dim === 1)!;
    expect(edge.x1).toBe(source.x);
  });

  test("neighborhood includes the node and its direct peers", () => {
    expect(neighborhood(TRIANGLE, 1)).toEqual(new Set([1, 2]));
    expect(neighborhood(TRIANGLE, 3)).toEqual(new Set([3]));
  });

  test("find node by case-insensitive substring", () => {
    expect(findNodeByName(TWO_NODES.nodes, "worry")?.dim).toBe(2);
    expect(findNodeByName(TWO_NODES.nodes, "")).toBeNull();
    expect(findNodeByName(TWO_NODES.nodes, "nothing")).toBeNull();
  });
});

describe("network screen", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  function makeScreen(doc: GraphDoc) {
    const api = new ApiClient("");
    (api as unknown as { graph: unknown }).graph = vi.fn(async () => doc);
    (api as unknown as { dimension: unknown }).dimension = vi.fn(async () => ({
      dimension: {
        index: 1,
        name: "Sleep Quality",
        definition: "about sleep",
        example_indicators: ["a", "b", "c"],
        indicator_count: 10,
      },
      page: 1,
      page_size: 10,
      total: 10,
      items: [],
    }));
    const screen = renderNetwork(api, () => "demo");
    document.body.append(screen.root);
    return screen;
  }

  test("renders one sized circle per node", async () => {
    const screen = makeScreen(TWO_NODES);
    await screen.load();
    const circles = [...screen.root.querySelectorAll("circle")];
    expect(circles).toHaveLength(2);
    const bySize = Object.fromEntries(
      circles.map((c) => [c.getAttribute("data-dim"), Number(c.getAttribute("r"))]),
    );
    expect((bySize["1"] ** 2) / (bySize["2"] ** 2)).toBeCloseTo(10 / 6, 6);
    expect(screen.root.querySelectorAll("line")).toHaveLength(0);
  });

  test("clicking a node filters to its neighborhood and shows detail", async () => {
    const screen = makeScreen(TRIANGLE);
    await screen.load();
    const target = screen.root.querySelector('circle[data-dim="1"]')!;
    target.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await Promise.resolve();
    await Promise.resolve();
    const dims = [...screen.root.querySelectorAll("circle")].map((c) =>
      c.getAttribute("data-dim"),
    );
    expect(dims.sort()).toEqual(["1", "2"]); // node 3 is outside the neighborhood
    expect(screen.root.textContent).toContain("Sleep Quality");
  });

  test("search centers the viewport on the match", async () => {
    const screen = makeScreen(TWO_NODES);
    await screen.load();
    const input = screen.root.querySelector("input") as HTMLInputElement;
    input.value = "worry";
    const go = [...screen.root.querySelectorAll("button")].find(
      (b) => b.textContent === "Go",
    )!;
    go.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const viewport = screen.root.querySelector("g.viewport")!;
    expect(viewport.getAttribute("transform")).toMatch(/^translate\(/);
  });

  test("fetch failure shows retry banner and retry reloads", async () => {
    const api = new ApiClient("");
    let failures = 1;
    (api as unknown as { graph: unknown }).graph = vi.fn(async () => {
      if (failures-- > 0) throw new Error("boom");
      return TWO_NODES;
    });
    const screen = renderNetwork(api, () => "demo");
    document.body.append(screen.root);
    await screen.load();
    const banner = screen.root.querySelector(".banner") as HTMLElement;
    expect(banner.style.display).toBe("");
    expect(banner.textContent).toContain("boom");
    const retry = banner.querySelector("button")!;
    retry.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await vi.waitFor(() => {
      expect(screen.root.querySelectorAll("circle")).toHaveLength(2);
    });
  });
});
