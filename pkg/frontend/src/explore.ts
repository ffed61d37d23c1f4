// Explore tool: the full loading matrix, one dimension at a time, with
// server-side pagination and search plus a whole-matrix CSV download.

import { ApiClient, DimensionDetail, GraphNode } from "./api";
import { clear, el } from "./dom";
import { RequestSequencer } from "./state";

export const PAGE_SIZE = 25;

export function pageCount(total: number, pageSize: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}

export interface ExploreScreen {
  root: HTMLElement;
  openDimension(dim: number): Promise<void>;
  runSearch(query: string): Promise<void>;
  load(): Promise<void>;
  current: DimensionDetail | null;
}

export function renderExplore(
  api: ApiClient,
  getNetworkId: () => string | null,
  onStateChange?: (dim: number | null, query: string) => void,
): ExploreScreen {
  const sequencer = new RequestSequencer();
  const dimSelect = el("select", { "data-testid": "dim-select" });
  const searchInput = el("input", {
    type: "text",
    placeholder: "Search names, definitions, indicators…",
  });
  const searchButton = el("button", { class: "primary" }, ["Search"]);
  const downloadLink = el("a", { download: "loadings.csv" }, ["Download full matrix (CSV)"]);
  const searchResults = el("div");
  const heading = el("h3");
  const definition = el("p", { class: "muted" });
  const table = el("div");
  const pager = el("div", { class: "row" });
  const status = el("div", { class: "muted" });

  let nodes: GraphNode[] = [];
  let page = 1;

  const screen: ExploreScreen = {
    root: el("div"),
    current: null,
    async load() {
      const networkId = getNetworkId();
      if (!networkId) return;
      downloadLink.setAttribute("href", api.loadingsCsvUrl(networkId));
      const token = sequencer.next();
      try {
        const doc = await api.graph(networkId);
        if (!sequencer.isCurrent(token)) return;
        nodes = doc.nodes;
        clear(dimSelect);
        for (const node of nodes) {
          dimSelect.append(
            el("option", { value: String(node.dim) }, [
              `Dim ${node.dim}: ${node.name} (${node.size})`,
            ]),
          );
        }
        if (nodes.length) await screen.openDimension(nodes[0].dim);
      } catch (error) {
        if (!sequencer.isCurrent(token)) return;
        status.textContent = String(error);
        status.className = "error";
      }
    },
    async openDimension(dim: number) {
      page = 1;
      dimSelect.value = String(dim);
      onStateChange?.(dim, searchInput.value);
      await fetchPage(dim);
    },
    async runSearch(query: string) {
      searchInput.value = query;
      await doSearch();
    },
  };

  async function fetchPage(dim: number): Promise<void> {
    const networkId = getNetworkId();
    if (!networkId) return;
    const token = sequencer.next();
    status.className = "muted";
    status.textContent = "Loading…";
    try {
      const detail = await api.dimension(networkId, dim, page, PAGE_SIZE);
      if (!sequencer.isCurrent(token)) return;
      screen.current = detail;
      status.textContent = "";
      renderDetail(detail);
    } catch (error) {
      if (!sequencer.isCurrent(token)) return;
      status.textContent = String(error);
      status.className = "error";
    }
  }

  function renderDetail(detail: DimensionDetail): void {
    heading.textContent = `Dim ${detail.dimension.index}: ${detail.dimension.name}`;
    definition.textContent = detail.dimension.definition;

    clear(table);
    const header = el("tr", {}, [
      el("th", {}, ["id"]),
      el("th", {}, ["indicator"]),
      el("th", {}, ["loading"]),
      el("th", {}, ["cross-loadings"]),
    ]);
    const body = el("tbody");
    for (const item of detail.items) {
      const cross = item.cross_loadings.length
        ? item.cross_loadings.map((c) =>
            el("span", { class: "pill" }, [
              `Dim ${c.dim}: `,
              el("span", { class: "loading-value" }, [String(c.loading)]),
            ]),
          )
        : [el("span", { class: "muted" }, ["—"])];
      body.append(
        el("tr", { "data-indicator-id": item.id }, [
          el("td", {}, [item.id]),
          el("td", {}, [item.text]),
          el("td", { class: "loading-value" }, [String(item.loading)]),
          el("td", {}, cross),
        ]),
      );
    }
    table.append(el("table", {}, [el("thead", {}, [header]), body]));

    clear(pager);
    const pages = pageCount(detail.total, detail.page_size);
    const prev = el("button", { disabled: detail.page <= 1 }, ["Prev"]);
    const next = el("button", { disabled: detail.page >= pages }, ["Next"]);
    prev.addEventListener("click", () => {
      page = Math.max(1, page - 1);
      void fetchPage(detail.dimension.index);
    });
    next.addEventListener("click", () => {
      page = Math.min(pages, page + 1);
      void fetchPage(detail.dimension.index);
    });
    pager.append(
      prev,
      el("span", { class: "muted", "data-testid": "page-info" }, [
        `Page ${detail.page} of ${pages} — ${detail.total} indicators`,
      ]),
      next,
    );
  }

  async function doSearch(): Promise<void> {
    const networkId = getNetworkId();
    const query = searchInput.value.trim();
    clear(searchResults);
    onStateChange?.(screen.current?.dimension.index ?? null, query);
    if (!networkId || !query) return;
    try {
      const matches = await api.search(networkId, query);
      if (!matches.length) {
        searchResults.append(el("p", { class: "muted" }, ["No matches."]));
        return;
      }
      const list = el("ul");
      for (const match of matches) {
        const link = el("a", { href: "#" }, [
          `Dim ${match.dimension} — ${match.matched_in}: ${match.text}`,
        ]);
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void screen.openDimension(match.dimension);
        });
        list.append(el("li", {}, [link]));
      }
      searchResults.append(list);
    } catch (error) {
      searchResults.append(el("p", { class: "error" }, [String(error)]));
    }
  }

  searchButton.addEventListener("click", () => void doSearch());
  searchInput.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void doSearch();
  });
  dimSelect.addEventListener("change", () => {
    void screen.openDimension(parseInt(dimSelect.value, 10));
  });

  screen.root.append(
    el("div", { class: "panel" }, [
      el("div", { class: "row" }, [
        el("h2", { style: "margin: 0 0.6rem 0 0;" }, ["Explore the matrix"]),
        dimSelect,
        searchInput,
        searchButton,
        downloadLink,
      ]),
      searchResults,
    ]),
    el("div", { class: "panel" }, [heading, definition, status, table, pager]),
  );
  return screen;
}
