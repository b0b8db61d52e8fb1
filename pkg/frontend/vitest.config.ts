import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    hookTimeout: 180_000,
    testTimeout: 30_000,
  },
});
