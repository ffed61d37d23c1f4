// Typed client for the network service. The UI does no numerical work:
// every number it shows arrives in these payloads and is rendered verbatim.

export interface NetworkSummary {
  id: string;
  p: number;
  k: number;
  threshold: number;
  extraction: string;
  explained_variance: number;
}

export interface GraphNode {
  dim: number;
  name: string;
  size: number;
}

export interface GraphEdge {
  source: number;
  target: number;
  weight: number;
}

export interface GraphDoc {
  version: number;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface Assignment {
  dim: number;
  name: string;
  loading: number;
}

export interface ProjectedItem {
  id: string;
  text: string;
  loadings: number[];
  assignments: Assignment[];
}

export interface ProjectResponse {
  network: string;
  items: ProjectedItem[];
  downloads: { loadings: string; correlations: string; embeddings: string };
}

export interface CrossLoading {
  dim: number;
  loading: number;
}

export interface DimensionItem {
  id: string;
  text: string;
  loading: number;
  cross_loadings: CrossLoading[];
}

export interface DimensionDetail {
  dimension: {
    index: number;
    name: string;
    definition: string;
    example_indicators: string[];
    indicator_count: number;
  };
  page: number;
  page_size: number;
  total: number;
  items: DimensionItem[];
}

export interface SearchMatch {
  dimension: number;
  matched_in: "name" | "definition" | "indicator";
  text: string;
  indicator_id: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown = response.statusText;
  try {
    const body = await response.json();
    detail = body && typeof body === "object" && "detail" in body ? body.detail : body;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listNetworks(): Promise<NetworkSummary[]> {
    return this.getJson("/v1/networks");
  }

  graph(networkId: string, minWeight = 1): Promise<GraphDoc> {
    const id = encodeURIComponent(networkId);
    return this.getJson(`/v1/networks/${id}/graph?min_weight=${minWeight}`);
  }

  dimension(
    networkId: string,
    dim: number,
    page = 1,
    pageSize = 100,
  ): Promise<DimensionDetail> {
    const id = encodeURIComponent(networkId);
    return this.getJson(
      `/v1/networks/${id}/dimensions/${dim}?page=${page}&page_size=${pageSize}`,
    );
  }

  search(networkId: string, query: string, limit = 20): Promise<SearchMatch[]> {
    const id = encodeURIComponent(networkId);
    const q = encodeURIComponent(query);
    return this.getJson(`/v1/networks/${id}/search?q=${q}&limit=${limit}`);
  }

  async project(
    networkId: string,
    items: { id: string; text: string }[],
  ): Promise<ProjectResponse> {
    const id = encodeURIComponent(networkId);
    const response = await fetch(`${this.baseUrl}/v1/networks/${id}/project`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(items),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as ProjectResponse;
  }

  loadingsCsvUrl(networkId: string): string {
    return `${this.baseUrl}/v1/networks/${encodeURIComponent(networkId)}/loadings.csv`;
  }

  downloadUrl(path: string): string {
    return this.baseUrl + path;
  }
}
