// Network tool: the dimension graph as an interactive force-directed view.
// Layout runs client-side; the service ships layout-free graph JSON.

import {
  forceCenter,
  forceCollide,
  forceLink,
  forceManyBody,
  forceSimulation,
  type SimulationLinkDatum,
  type SimulationNodeDatum,
} from "d3-force";
import { ApiClient, GraphDoc, GraphNode } from "./api";
import { clear, el, svgEl } from "./dom";
import { RequestSequencer } from "./state";

export const VIEW_WIDTH = 900;
export const VIEW_HEIGHT = 560;
const RADIUS_SCALE = 7;

// Area-proportional radius: r^2 scales with the indicator count.
export function nodeRadius(size: number): number {
  return Math.max(5, RADIUS_SCALE * Math.sqrt(size));
}

export interface LayoutNode extends SimulationNodeDatum {
  dim: number;
  name: string;
  size: number;
  x: number;
  y: number;
}

export interface LayoutEdge {
  source: number;
  target: number;
  weight: number;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Layout {
  nodes: LayoutNode[];
  edges: LayoutEdge[];
}

export function layoutGraph(doc: GraphDoc, ticks = 300): Layout {
  const nodes = doc.nodes.map((node) => ({ ...node })) as LayoutNode[];
  type Link = SimulationLinkDatum<LayoutNode> & { weight: number };
  const links: Link[] = doc.edges.map((edge) => ({
    source: edge.source,
    target: edge.target,
    weight: edge.weight,
  }));
  const simulation = forceSimulation(nodes)
    .force("charge", forceManyBody().strength(-250))
    .force(
      "link",
      forceLink<LayoutNode, Link>(links)
        .id((node) => node.dim)
        .distance(130),
    )
    .force("center", forceCenter(VIEW_WIDTH / 2, VIEW_HEIGHT / 2))
    .force("collide", forceCollide<LayoutNode>().radius((n) => nodeRadius(n.size) + 6))
    .stop();
  for (let i = 0; i < ticks; i++) simulation.tick();
  const edges: LayoutEdge[] = links.map((link) => {
    const source = link.source as LayoutNode;
    const target = link.target as LayoutNode;
    return {
      source: source.dim,
      target: target.dim,
      weight: link.weight,
      x1: source.x,
      y1: source.y,
      x2: target.x,
      y2: target.y,
    };
  });
  return { nodes, edges };
}

export function neighborhood(doc: GraphDoc, dim: number): Set<number> {
  const keep = new Set([dim]);
  for (const edge of doc.edges) {
    if (edge.source === dim) keep.add(edge.target);
    if (edge.target === dim) keep.add(edge.source);
  }
  return keep;
}

export function findNodeByName(nodes: GraphNode[], query: string): GraphNode | null {
  const needle = query.trim().toLowerCase();
  if (!needle) return null;
  return nodes.find((node) => node.name.toLowerCase().includes(needle)) ?? null;
}

export interface NetworkScreen {
  root: HTMLElement;
  load(): Promise<void>;
  layout: Layout | null;
}

export function renderNetwork(
  api: ApiClient,
  getNetworkId: () => string | null,
  onOpenDimension?: (dim: number) => void,
): NetworkScreen {
  const sequencer = new RequestSequencer();
  const searchInput = el("input", { type: "text", placeholder: "Find a dimension…" });
  const searchButton = el("button", { class: "primary" }, ["Go"]);
  const resetButton = el("button", {}, ["Show all"]);
  const banner = el("div", { class: "banner", style: "display:none;" });
  const canvasWrap = el("div");
  const detail = el("div", { class: "panel", style: "display:none;" });

  let doc: GraphDoc | null = null;
  let focused: number | null = null;
  let viewTransform: string | null = null;

  const screen: NetworkScreen = {
    root: el("div"),
    layout: null,
    async load() {
      const networkId = getNetworkId();
      if (!networkId) return;
      const token = sequencer.next();
      banner.style.display = "none";
      try {
        const fetched = await api.graph(networkId);
        if (!sequencer.isCurrent(token)) return;
        doc = fetched;
        screen.layout = layoutGraph(fetched);
        focused = null;
        viewTransform = null;
        draw();
      } catch (error) {
        if (!sequencer.isCurrent(token)) return;
        clear(banner);
        banner.style.display = "";
        banner.append(
          `Could not load the graph: ${String(error)} `,
          el("button", { onclick: () => void screen.load() }, ["Retry"]),
        );
      }
    },
  };

  function draw(): void {
    clear(canvasWrap);
    if (!screen.layout || !doc) return;
    const keep = focused === null ? null : neighborhood(doc, focused);
    const svg = svgEl("svg", {
      viewBox: `0 0 ${VIEW_WIDTH} ${VIEW_HEIGHT}`,
      width: "100%",
      "data-testid": "graph-canvas",
    });
    const group = svgEl("g", { class: "viewport" });
    if (viewTransform) group.setAttribute("transform", viewTransform);
    for (const edge of screen.layout.edges) {
      if (keep && !(keep.has(edge.source) && keep.has(edge.target))) continue;
      group.append(
        svgEl("line", {
          x1: String(edge.x1),
          y1: String(edge.y1),
          x2: String(edge.x2),
          y2: String(edge.y2),
          stroke: "#a6b4c4",
          "stroke-width": String(Math.min(6, edge.weight)),
          "data-edge": `${edge.source}-${edge.target}`,
        }),
      );
    }
    for (const node of screen.layout.nodes) {
      if (keep && !keep.has(node.dim)) continue;
      const radius = nodeRadius(node.size);
      const circle = svgEl("circle", {
        cx: String(node.x),
        cy: String(node.y),
        r: String(radius),
        fill: node.dim === focused ? "#2b7ce9" : "#97c2fc",
        stroke: "#2b7ce9",
        "data-dim": String(node.dim),
        "data-size": String(node.size),
      });
      circle.addEventListener("click", () => void focusDimension(node.dim));
      group.append(
        circle,
        svgEl(
          "text",
          {
            x: String(node.x),
            y: String(node.y - radius - 4),
            "text-anchor": "middle",
          },
          [`${node.name} (${node.size})`],
        ),
      );
    }
    svg.append(group);
    canvasWrap.append(svg);
  }

  async function focusDimension(dim: number): Promise<void> {
    focused = dim;
    draw();
    const networkId = getNetworkId();
    if (!networkId) return;
    clear(detail);
    detail.style.display = "";
    detail.append(el("span", { class: "muted" }, ["Loading dimension…"]));
    try {
      const info = await api.dimension(networkId, dim, 1, 10);
      clear(detail);
      detail.append(
        el("h3", {}, [`Dim ${info.dimension.index}: ${info.dimension.name}`]),
        el("p", {}, [info.dimension.definition]),
        el("p", { class: "muted" }, [
          `${info.dimension.indicator_count} indicators assigned. Examples: `,
          info.dimension.example_indicators.join(" · "),
        ]),
        el("button", { onclick: () => onOpenDimension?.(dim) }, [
          "Open in Explore",
        ]),
      );
    } catch (error) {
      clear(detail);
      detail.append(el("span", { class: "error" }, [String(error)]));
    }
  }

  function jumpToMatch(): void {
    if (!screen.layout) return;
    const match = findNodeByName(screen.layout.nodes, searchInput.value);
    if (!match) return;
    const node = screen.layout.nodes.find((n) => n.dim === match.dim)!;
    const dx = VIEW_WIDTH / 2 - node.x;
    const dy = VIEW_HEIGHT / 2 - node.y;
    viewTransform = `translate(${dx}, ${dy})`;
    void focusDimension(match.dim);
  }

  searchButton.addEventListener("click", jumpToMatch);
  searchInput.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") jumpToMatch();
  });
  resetButton.addEventListener("click", () => {
    focused = null;
    viewTransform = null;
    detail.style.display = "none";
    draw();
  });

  screen.root.append(
    el("div", { class: "panel" }, [
      el("div", { class: "row" }, [
        el("h2", { style: "margin: 0 0.6rem 0 0;" }, ["Network graph"]),
        searchInput,
        searchButton,
        resetButton,
      ]),
      el("p", { class: "muted" }, [
        "Nodes are dimensions sized by their indicator count; edges count ",
        "indicators loading on both endpoints. Click a node to focus its ",
        "neighborhood.",
      ]),
      banner,
      canvasWrap,
    ]),
    detail,
  );
  return screen;
}
