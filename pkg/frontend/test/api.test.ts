import { afterEach, describe, expect, test, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api";

function mockFetch(status: number, body: unknown): ReturnType<typeof vi.fn> {
  const mock = vi.fn(async () =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    }),
  );
  vi.stubGlobal("fetch", mock);
  return mock;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  test("listNetworks hits the index endpoint", async () => {
    const mock = mockFetch(200, [{ id: "demo", p: 60, k: 3 }]);
    const api = new ApiClient("http://svc");
    const networks = await api.listNetworks();
    expect(mock).toHaveBeenCalledWith("http://svc/v1/networks");
    expect(networks[0].id).toBe("demo");
  });

  test("dimension builds pagination query", async () => {
    const mock = mockFetch(200, { dimension: {}, items: [] });
    const api = new ApiClient();
    await api.dimension("demo", 2, 3, 25);
    expect(mock).toHaveBeenCalledWith("/v1/networks/demo/dimensions/2?page=3&page_size=25");
  });

  test("search escapes the query", async () => {
    const mock = mockFetch(200, []);
    const api = new ApiClient();
    await api.search("demo", "a b&c");
    expect(mock).toHaveBeenCalledWith("/v1/networks/demo/search?q=a%20b%26c&limit=20");
  });

  test("project posts items as json", async () => {
    const mock = mockFetch(200, { network: "demo", items: [], downloads: {} });
    const api = new ApiClient();
    await api.project("demo", [{ id: "a", text: "hello" }]);
    const [url, init] = mock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/v1/networks/demo/project");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual([{ id: "a", text: "hello" }]);
  });

  test("errors carry status and detail", async () => {
    mockFetch(422, { detail: { empty_items: ["bad"] } });
    const api = new ApiClient();
    const error = await api.project("demo", [{ id: "bad", text: "!!!" }]).catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(422);
    expect(error.detail).toEqual({ empty_items: ["bad"] });
  });

  test("download urls are prefixed with the base", () => {
    const api = new ApiClient("http://svc");
    expect(api.downloadUrl("/v1/downloads/abc/loadings.csv")).toBe(
      "http://svc/v1/downloads/abc/loadings.csv",
    );
    expect(api.loadingsCsvUrl("demo")).toBe("http://svc/v1/networks/demo/loadings.csv");
  });
});
