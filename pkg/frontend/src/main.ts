// Shell: tool tabs, network picker, URL deep-linking, screen mounting.

import { ApiClient } from "./api";
import { clear, el } from "./dom";
import { renderExplore } from "./explore";
import { renderNetwork } from "./network";
import {
  selectDimension,
  selectNetwork,
  selectTool,
  setQuery,
  stateFromParams,
  stateToParams,
  Tool,
  ViewState,
} from "./state";
import { renderValidate } from "./validate";

const TOOLS: { id: Tool; label: string }[] = [
  { id: "validate", label: "Validate" },
  { id: "network", label: "Network" },
  { id: "explore", label: "Explore" },
];

export function mountApp(root: HTMLElement, api: ApiClient): void {
  let state: ViewState = stateFromParams(
    new URLSearchParams(window.location.search),
  );

  const nav = document.getElementById("tool-nav")!;
  const picker = document.getElementById("network-picker")!;
  const networkSelect = el("select", { "data-testid": "network-select" });
  picker.append(el("span", { class: "muted" }, ["Network:"]), networkSelect);

  const getNetworkId = () => state.networkId;
  const validate = renderValidate(api, getNetworkId);
  const explore = renderExplore(api, getNetworkId, (dim, query) => {
    state = setQuery(selectDimension(state, dim), query);
    syncUrl();
  });
  const network = renderNetwork(api, getNetworkId, (dim) => {
    state = selectTool(selectDimension(state, dim), "explore");
    syncUrl();
    render();
    void explore.openDimension(dim);
  });

  function syncUrl(): void {
    const params = stateToParams(state);
    window.history.replaceState(null, "", `?${params.toString()}`);
  }

  function render(): void {
    clear(nav);
    for (const tool of TOOLS) {
      const button = el(
        "button",
        { class: tool.id === state.tool ? "active" : "" },
        [tool.label],
      );
      button.addEventListener("click", () => {
        state = selectTool(state, tool.id);
        syncUrl();
        render();
        void refreshActive();
      });
      nav.append(button);
    }
    clear(root);
    if (state.tool === "validate") root.append(validate.root);
    else if (state.tool === "network") root.append(network.root);
    else root.append(explore.root);
  }

  async function refreshActive(): Promise<void> {
    if (!state.networkId) return;
    if (state.tool === "network") await network.load();
    if (state.tool === "explore") {
      await explore.load();
      if (state.dimension !== null) await explore.openDimension(state.dimension);
      if (state.query) await explore.runSearch(state.query);
    }
  }

  networkSelect.addEventListener("change", () => {
    state = selectNetwork(state, networkSelect.value || null);
    syncUrl();
    void refreshActive();
  });

  void (async () => {
    try {
      const networks = await api.listNetworks();
      for (const summary of networks) {
        networkSelect.append(
          el("option", { value: summary.id }, [
            `${summary.id} (${summary.p} indicators, ${summary.k} dims)`,
          ]),
        );
      }
      if (networks.length) {
        const wanted = state.networkId;
        const exists = networks.some((n) => n.id === wanted);
        state = selectNetwork(
          { ...state, networkId: null },
          exists && wanted ? wanted : networks[0].id,
        );
        // Restore deep-linked dimension after the network reset.
        const params = stateFromParams(new URLSearchParams(window.location.search));
        if (exists && params.dimension !== null) {
          state = selectDimension(state, params.dimension);
        }
        networkSelect.value = state.networkId!;
        syncUrl();
        await refreshActive();
      }
    } catch (error) {
      root.append(el("div", { class: "banner" }, [`Service unreachable: ${String(error)}`]));
    }
  })();

  render();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!, new ApiClient(""));
}
