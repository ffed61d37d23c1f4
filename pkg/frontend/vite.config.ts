import { defineConfig } from "vitest/config";

// In dev, API calls are proxied to a locally running service
// (`nomonet serve --networks-dir ... --port 8000`).
export default defineConfig({
  server: {
    proxy: {
      "/v1": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "happy-dom",
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
