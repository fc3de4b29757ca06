/** Subprocess bridge to the pointfreq command-line interface. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Raised when the CLI reports a failure. */
export class CliError extends Error {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(args: string[], exitCode: number | null, stderr: string) {
    super(
      `pointfreq ${args.join(" ")} failed with exit code ${exitCode}:\n${stderr}`,
    );
    this.name = "CliError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

export function cliBinary(): string[] {
  const override = process.env.POINTFREQ_BIN;
  if (override && override.trim()) {
    return override.trim().split(/\s+/);
  }
  return ["pointfreq"];
}

export function runCli(args: string[]): string {
  const [bin, ...prefix] = cliBinary();
  const proc = spawnSync(bin, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    throw new CliError(args, proc.status, proc.stderr ?? "");
  }
  return proc.stdout ?? "";
}

/** Scratch directory of input/output files for one CLI invocation. */
export class Workspace {
  readonly root: string;

  constructor() {
    this.root = mkdtempSync(join(tmpdir(), "pointfreq-"));
  }

  path(name: string): string {
    return join(this.root, name);
  }

  write(name: string, content: string): string {
    const full = this.path(name);
    writeFileSync(full, content);
    return full;
  }

  readJson(name: string): unknown {
    return JSON.parse(readFileSync(this.path(name), "utf-8"));
  }

  dispose(): void {
    rmSync(this.root, { recursive: true, force: true });
  }
}

export function withWorkspace<T>(body: (ws: Workspace) => T): T {
  const ws = new Workspace();
  try {
    return body(ws);
  } finally {
    ws.dispose();
  }
}
