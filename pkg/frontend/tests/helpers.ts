// Test scaffolding: a real experiment service subprocess plus in-memory
// stand-ins for the browser audio element and localStorage.

import { ChildProcess, spawn, spawnSync } from "node:child_process";
import fs from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";

import type { AudioPlayer } from "../src/player.js";

export const ADMIN_TOKEN = "ui-test-token";

export interface ServiceHandle {
  url: string;
  experimentId: string;
  dataDir: string;
  stop(): void;
}

export function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("could not allocate a port"));
      }
    });
  });
}

/** Build a small unimpaired experiment and serve it from a subprocess. */
export async function startService(nRecordings = 3): Promise<ServiceHandle> {
  const dataDir = fs.mkdtempSync(path.join(os.tmpdir(), "mcvlab-ui-"));
  const configPath = path.join(dataDir, "config.json");
  fs.writeFileSync(
    configPath,
    JSON.stringify({
      n_recordings: nRecordings,
      codecs: ["passthrough"],
      burst_sizes: [1],
      p_gb: 0.0,
      frame_drops: [0.0],
      seed: 20260809,
    })
  );
  const experimentId = "exp-ui";
  const build = spawnSync(
    "python3",
    ["-m", "mcvlab.cli", "build", "--config", configPath,
     "--data-dir", dataDir, "--id", experimentId],
    { encoding: "utf8" }
  );
  if (build.status !== 0) {
    throw new Error(`experiment build failed: ${build.stderr}`);
  }

  const port = await freePort();
  const url = `http://127.0.0.1:${port}`;
  const proc: ChildProcess = spawn(
    "python3",
    ["-m", "mcvlab.cli", "serve", "--data-dir", dataDir,
     "--port", String(port), "--admin-token", ADMIN_TOKEN],
    { stdio: "ignore" }
  );

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const resp = await fetch(`${url}/api/health`);
      if (resp.ok) {
        break;
      }
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error("service did not come up in 30s");
    }
    await sleep(100);
  }

  return {
    url,
    experimentId,
    dataDir,
    stop: () => {
      proc.kill("SIGKILL");
    },
  };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Resolves instantly; records what was handed to it. */
export class InstantPlayer implements AudioPlayer {
  played: Blob[] = [];

  async play(data: Blob): Promise<void> {
    this.played.push(data);
  }
}

export class MemoryStorage {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}

export function mountRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("no #app");
  }
  return root;
}
