// View state shared by the three tools, deep-linkable via URL parameters.
// Invariant: a selected dimension always belongs to the selected network,
// so switching networks clears it.

export type Tool = "validate" | "network" | "explore";

export interface ViewState {
  tool: Tool;
  networkId: string | null;
  dimension: number | null;
  query: string;
}

export function initialState(): ViewState {
  return { tool: "validate", networkId: null, dimension: null, query: "" };
}

export function selectTool(state: ViewState, tool: Tool): ViewState {
  return { ...state, tool };
}

export function selectNetwork(state: ViewState, networkId: string | null): ViewState {
  if (networkId === state.networkId) return state;
  return { ...state, networkId, dimension: null, query: "" };
}

export function selectDimension(state: ViewState, dimension: number | null): ViewState {
  return { ...state, dimension };
}

export function setQuery(state: ViewState, query: string): ViewState {
  return { ...state, query };
}

const TOOLS: Tool[] = ["validate", "network", "explore"];

export function stateFromParams(params: URLSearchParams): ViewState {
  const tool = params.get("tool");
  const dim = params.get("dim");
  return {
    tool: TOOLS.includes(tool as Tool) ? (tool as Tool) : "validate",
    networkId: params.get("network"),
    dimension: dim && /^\d+$/.test(dim) ? parseInt(dim, 10) : null,
    query: params.get("q") ?? "",
  };
}

export function stateToParams(state: ViewState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("tool", state.tool);
  if (state.networkId) params.set("network", state.networkId);
  if (state.dimension !== null) params.set("dim", String(state.dimension));
  if (state.query) params.set("q", state.query);
  return params;
}

// Concurrent requests may resolve out of order; each screen tags requests
// with a sequence number and ignores responses that are no longer current.
export class RequestSequencer {
  private counter = 0;

  next(): number {
    return ++this.counter;
  }

  isCurrent(token: number): boolean {
    return token === this.counter;
  }
}
