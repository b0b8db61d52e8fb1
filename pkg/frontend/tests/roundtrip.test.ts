// Round trip against a live server over a synthetic store: the rendered rows
// must match the /api/query JSON, and pivoting must drive new queries.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { initApp } from "../src/app.js";
import type { QueryPayload } from "../src/api.js";

const PYTHON = process.env.PYTHON ?? "python3";

let serverProc: ChildProcess | null = null;
let base = "";
let fixtureDir = "";

async function waitForServer(url: string, attempts = 100): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      const res = await fetch(`${url}/api/stats`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`server at ${url} never became ready`);
}

beforeAll(async () => {
  fixtureDir = mkdtempSync(join(tmpdir(), "termite-ui-"));
  const build = spawnSync(
    PYTHON,
    [
      "-m", "termite.cli", "eval",
      "--synth-groups", "4", "--synth-size", "5",
      "--f", "64", "--dim", "8", "--epochs", "3", "--kh", "3", "--seed", "3",
      "--out", fixtureDir,
    ],
    { encoding: "utf-8" },
  );
  if (build.status !== 0) {
    throw new Error(`fixture build failed: ${build.stderr}`);
  }

  serverProc = spawn(PYTHON, [
    "-m", "termite.cli", "serve",
    "--emb", join(fixtureDir, "embedding.temb"),
    "--hubness", join(fixtureDir, "hubness.json"),
    "--model", join(fixtureDir, "model.tmt"),
    "--port", "0",
  ]);
  base = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    serverProc!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/http:\/\/[\d.]+:\d+/);
      if (match) resolve(match[0]);
    });
    serverProc!.on("exit", (code) => reject(new Error(`server exited early: ${code}`)));
    setTimeout(() => reject(new Error("no server URL printed")), 30_000);
  });
  await waitForServer(base);
});

afterAll(() => {
  serverProc?.kill();
  if (fixtureDir) rmSync(fixtureDir, { recursive: true, force: true });
});

async function firstEntity(): Promise<string> {
  const res = await fetch(`${base}/api/entities?prefix=&limit=1`);
  const names = (await res.json()) as string[];
  expect(names.length).toBe(1);
  return names[0];
}

describe("live round trip", () => {
  it("renders exactly k rows matching the /api/query JSON byte for byte", async () => {
    const entity = await firstEntity();
    const k = 5;
    const res = await fetch(
      `${base}/api/query?entity=${encodeURIComponent(entity)}&k=${k}`,
    );
    const json = (await res.json()) as QueryPayload;
    expect(json.results.length).toBe(k);

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = initApp(root, base);
    await app.search(entity, k);

    const rows = root.querySelectorAll("tr.result-row");
    expect(rows.length).toBe(k);
    rows.forEach((row, i) => {
      expect(row.querySelector("td.entity")!.textContent).toBe(json.results[i].entity);
      expect(row.querySelector("td.distance")!.textContent).toBe(
        json.results[i].distance.toFixed(4),
      );
    });
    document.body.innerHTML = "";
  });

  it("clicking a result issues a query for that entity", async () => {
    const entity = await firstEntity();
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = initApp(root, base);
    await app.search(entity, 3);

    const firstRow = root.querySelector("tr.result-row")!;
    const clicked = firstRow.querySelector("td.entity")!.textContent!;
    firstRow.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await app.whenIdle();

    expect(app.state.current?.query).toBe(clicked);
    expect(root.querySelector(".results-heading")!.textContent).toContain(clicked);
    document.body.innerHTML = "";
  });

  it("three pivots produce a breadcrumb of depth 3", async () => {
    const entity = await firstEntity();
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = initApp(root, base);
    await app.search(entity, 3);

    for (let i = 0; i < 3; i++) {
      root.querySelector("tr.result-row")!.dispatchEvent(
        new MouseEvent("click", { bubbles: true }),
      );
      await app.whenIdle();
    }
    expect(app.state.history.length).toBe(3);
    expect(root.querySelectorAll("#breadcrumbs .crumb").length).toBe(3);

    // the server is deterministic: replaying the first crumb reproduces it
    (root.querySelector("#breadcrumbs .crumb") as HTMLElement).click();
    await app.whenIdle();
    expect(app.state.current?.query).toBe(entity);
    document.body.innerHTML = "";
  });
});
