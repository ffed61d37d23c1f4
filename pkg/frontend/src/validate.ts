// Validate tool: project user-supplied indicators into the selected network.

import Papa from "papaparse";
import { ApiClient, ApiError, ProjectResponse, ProjectedItem } from "./api";
import { clear, el } from "./dom";
import { RequestSequencer } from "./state";

export const MAX_UPLOAD_ITEMS = 10_000;

export interface UploadItem {
  id: string;
  text: string;
}

// Accepts either plain lines (one indicator per line, ids generated) or CSV
// content with id,text columns (ids preserved), which is what the file
// picker feeds in.
export function parseUpload(raw: string): UploadItem[] {
  const trimmed = raw.trim();
  if (!trimmed) return [];
  const headRow = Papa.parse<string[]>(trimmed.split(/\r?\n/, 1)[0]).data[0] ?? [];
  const header = headRow.map((cell) => cell.trim().toLowerCase());
  if (header.includes("id") && header.includes("text")) {
    const parsed = Papa.parse<Record<string, string>>(trimmed, {
      header: true,
      skipEmptyLines: true,
    });
    return parsed.data
      .filter((row) => (row.id ?? "").trim() && (row.text ?? "") !== "")
      .map((row) => ({ id: row.id.trim(), text: row.text }));
  }
  return trimmed
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((text, index) => ({ id: `item-${index + 1}`, text }));
}

export function sortByMaxLoading(items: ProjectedItem[]): ProjectedItem[] {
  const maxAbs = (item: ProjectedItem) =>
    item.loadings.reduce((acc, value) => Math.max(acc, Math.abs(value)), 0);
  return [...items].sort((a, b) => maxAbs(b) - maxAbs(a));
}

export interface ValidateScreen {
  root: HTMLElement;
  submit(): Promise<void>;
  setInput(text: string): void;
  lastResponse: ProjectResponse | null;
}

export function renderValidate(
  api: ApiClient,
  getNetworkId: () => string | null,
): ValidateScreen {
  const sequencer = new RequestSequencer();
  const textarea = el("textarea", {
    rows: "7",
    placeholder:
      "One indicator per line, or paste/upload a CSV with id,text columns.",
    style: "width: 100%; box-sizing: border-box;",
  });
  const fileInput = el("input", { type: "file", accept: ".csv,.txt" });
  const submitButton = el("button", { class: "primary", disabled: true }, [
    "Project indicators",
  ]);
  const status = el("div", { class: "muted" });
  const results = el("div");

  const screen: ValidateScreen = {
    root: el("div", {}, []),
    lastResponse: null,
    setInput(text: string) {
      textarea.value = text;
      refreshSubmit();
    },
    async submit() {
      await submit();
    },
  };

  function refreshSubmit(): void {
    submitButton.disabled = parseUpload(textarea.value).length === 0;
  }

  textarea.addEventListener("input", refreshSubmit);
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    void file.text().then((content) => {
      screen.setInput(content);
    });
  });
  submitButton.addEventListener("click", () => void submit());

  async function submit(): Promise<void> {
    const networkId = getNetworkId();
    clear(results);
    if (!networkId) {
      status.textContent = "Select a network first.";
      return;
    }
    const items = parseUpload(textarea.value);
    if (items.length === 0) return;
    if (items.length > MAX_UPLOAD_ITEMS) {
      status.textContent = `Too many indicators (${items.length}); the limit is ${MAX_UPLOAD_ITEMS}.`;
      status.className = "error";
      return;
    }
    status.className = "muted";
    status.textContent = `Projecting ${items.length} indicator(s)…`;
    const token = sequencer.next();
    try {
      const response = await api.project(networkId, items);
      if (!sequencer.isCurrent(token)) return;
      screen.lastResponse = response;
      status.textContent = "";
      renderResults(response, items);
    } catch (error) {
      if (!sequencer.isCurrent(token)) return;
      screen.lastResponse = null;
      if (error instanceof ApiError) {
        const detail = error.detail as { empty_items?: string[] } | string;
        if (typeof detail === "object" && detail?.empty_items) {
          renderRowErrors(items, new Set(detail.empty_items));
          status.textContent = "";
          return;
        }
        status.textContent = `Projection failed (${error.status}): ${error.message}`;
      } else {
        status.textContent = `Projection failed: ${String(error)}`;
      }
      status.className = "error";
    }
  }

  function renderRowErrors(items: UploadItem[], empty: Set<string>): void {
    const table = el("table", {}, [
      el("thead", {}, [
        el("tr", {}, [el("th", {}, ["id"]), el("th", {}, ["text"]), el("th", {}, ["problem"])]),
      ]),
    ]);
    const body = el("tbody");
    for (const item of items) {
      body.append(
        el("tr", { "data-item-id": item.id }, [
          el("td", {}, [item.id]),
          el("td", {}, [item.text]),
          el("td", { class: empty.has(item.id) ? "error" : "muted" }, [
            empty.has(item.id) ? "empty after preprocessing" : "not submitted",
          ]),
        ]),
      );
    }
    table.append(body);
    results.append(table);
  }

  function renderResults(response: ProjectResponse, submitted: UploadItem[]): void {
    clear(results);
    const downloads = el("div", { class: "downloads" }, [
      el("strong", {}, ["Downloads: "]),
      ...(["loadings", "correlations", "embeddings"] as const).map((kind) =>
        el("a", { href: api.downloadUrl(response.downloads[kind]), download: `${kind}.csv` }, [
          `${kind}.csv`,
        ]),
      ),
    ]);
    const table = el("table", { "data-testid": "projection-table" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["id"]),
          el("th", {}, ["text"]),
          el("th", {}, ["qualifying dimensions"]),
          el("th", {}, ["all loadings"]),
        ]),
      ]),
    ]);
    const body = el("tbody");
    for (const item of sortByMaxLoading(response.items)) {
      const assignments = item.assignments.length
        ? item.assignments.map((a) =>
            el("span", { class: "pill", "data-dim": String(a.dim) }, [
              `Dim ${a.dim}: ${a.name} (`,
              el("span", { class: "loading-value" }, [String(a.loading)]),
              ")",
            ]),
          )
        : [el("span", { class: "muted" }, ["unassigned"])];
      body.append(
        el("tr", { "data-item-id": item.id }, [
          el("td", {}, [item.id]),
          el("td", {}, [item.text]),
          el("td", {}, assignments),
          el("td", { class: "muted loading-row" }, [item.loadings.map(String).join(", ")]),
        ]),
      );
    }
    table.append(body);
    results.append(downloads, table);
    void submitted;
  }

  screen.root.append(
    el("div", { class: "panel" }, [
      el("h2", {}, ["Validate indicators"]),
      el("p", { class: "muted" }, [
        "Project your own survey items into the selected network. Items that ",
        "load at or above the network threshold are assigned to dimensions; ",
        "downloads contain the embeddings, correlation rows, and loadings.",
      ]),
      textarea,
      el("div", { class: "row", style: "margin-top: 0.6rem;" }, [
        fileInput,
        submitButton,
        status,
      ]),
    ]),
    el("div", { class: "panel" }, [results]),
  );
  return screen;
}
