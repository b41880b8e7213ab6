import { defineConfig } from "vitest/config";

// The parity suite spawns the annotation server as a subprocess, so the
// default 5 s budget is far too tight.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
