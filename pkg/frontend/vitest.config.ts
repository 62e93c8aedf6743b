import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // Tests spawn real server processes and run full scenario sweeps.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
