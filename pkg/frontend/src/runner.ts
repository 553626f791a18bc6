/**
 * @file runner.ts
 * @brief Launching the ovk CLI and owning per-model scratch directories.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { BindingError, InputError, NumericalError } from "./errors.js";

/** The core executable; override with the OVK_BIN environment variable. */
export function ovkBinary(): string {
  return process.env.OVK_BIN ?? "ovk";
}

/**
 * Run one ovk subcommand synchronously and return its stdout (the list of
 * written result files, one path per line). Exit code 1 raises InputError,
 * 2 raises NumericalError; launch failures raise BindingError. The host
 * process is never taken down by a core failure.
 */
export function runOvk(args: string[]): string {
  const bin = ovkBinary();
  const res = spawnSync(bin, args, { encoding: "utf8" });
  if (res.error) {
    throw new BindingError(`failed to launch ${bin}: ${res.error.message}`);
  }
  const stderr = (res.stderr ?? "").trim();
  if (res.status === 1) {
    throw new InputError(stderr || `${bin} exited with code 1`);
  }
  if (res.status === 2) {
    throw new NumericalError(stderr || `${bin} exited with code 2`);
  }
  if (res.status !== 0) {
    throw new BindingError(`${bin} exited with code ${res.status}: ${stderr}`);
  }
  return res.stdout ?? "";
}

/**
 * Scratch directory backing one model handle: generated configs, data CSVs,
 * the model archive, and one output directory per core run. Deleted on
 * release(); any use after that raises.
 */
export class Workspace {
  readonly dir: string;
  private released = false;
  private counter = 0;

  constructor() {
    this.dir = fs.mkdtempSync(path.join(os.tmpdir(), "ovkflow-"));
  }

  get live(): boolean {
    return !this.released;
  }

  assertLive(): void {
    if (this.released) {
      throw new BindingError("model handle used after release()");
    }
  }

  /** Absolute path inside the workspace. */
  file(name: string): string {
    this.assertLive();
    return path.join(this.dir, name);
  }

  /** A not-yet-used name with the given prefix, for per-call files and run dirs. */
  fresh(prefix: string): string {
    this.assertLive();
    this.counter += 1;
    return path.join(this.dir, `${prefix}-${this.counter}`);
  }

  write(name: string, text: string): string {
    const p = this.file(name);
    fs.writeFileSync(p, text);
    return p;
  }

  release(): void {
    if (!this.released) {
      fs.rmSync(this.dir, { recursive: true, force: true });
      this.released = true;
    }
  }
}
