/**
 * @file index.ts
 * @brief Bindings for the ovk core: fit, predict, predictDt, koopman,
 * decompose, forecast, runExperiment.
 *
 * The core is consumed strictly through its command line: every operation
 * writes a config and data CSVs into a per-model scratch directory, runs one
 * `ovk` subcommand, and parses the result tables back. No numerical logic
 * lives on this side of the boundary, and floats cross it as
 * shortest-round-trip decimals, so bound results equal core results bit for
 * bit.
 *
 * @example
 * ```typescript
 * import { fit, predict, koopman, forecast } from "ovkflow-bindings";
 *
 * const model = fit(inputs, targets, { spatialSigma: 0.3, temporalSigma: 0.3, alpha: 0.1 }, 1e-8);
 * const values = predict(model, probes);   // N x d, one row per probe
 * model.release();
 *
 * const op = koopman({
 *   kernel: { spatialSigma: 0.5, temporalSigma: 1.0 },
 *   system: "linear_contraction", observable: "coordinate",
 *   n: 200, dt: 0.1, rank: 4, maxModes: 8,
 * });
 * forecast(op, [[1.0]], 5);                // ~exp(-0.5)
 * ```
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { BindingError, InputError, NumericalError } from "./errors.js";
import {
  CsvTable,
  IniSection,
  checkMatrix,
  columnBlock,
  csvText,
  formatFloat,
  iniText,
  parseCsv,
} from "./tables.js";
import { Workspace, runOvk } from "./runner.js";

export { BindingError, InputError, NumericalError };
export { ovkBinary } from "./runner.js";

/* #region Kernel configuration */

export type KernelFamily = "gaussian" | "matern32" | "matern52";

/**
 * The separable space-time kernel the core fits with. `alpha` weights the
 * temporal-derivative regularizer block; `outputDim` defaults to the target
 * width on fit() and to 1 on koopman().
 */
export interface KernelConfig {
  spatialSigma: number;
  spatialFamily?: KernelFamily;
  temporalSigma: number;
  temporalFamily?: KernelFamily;
  alpha?: number;
  outputDim?: number;
}

const FAMILIES: ReadonlySet<string> = new Set(["gaussian", "matern32", "matern52"]);

function kernelSection(k: KernelConfig, outputDim: number): IniSection {
  for (const [name, sigma] of [["spatialSigma", k.spatialSigma], ["temporalSigma", k.temporalSigma]] as const) {
    if (typeof sigma !== "number" || !Number.isFinite(sigma) || sigma <= 0) {
      throw new InputError(`kernel.${name} must be a positive finite number`);
    }
  }
  for (const fam of [k.spatialFamily, k.temporalFamily]) {
    if (fam !== undefined && !FAMILIES.has(fam)) {
      throw new InputError(`unknown kernel family ${JSON.stringify(fam)}`);
    }
  }
  const alpha = k.alpha ?? 0;
  if (!Number.isFinite(alpha) || alpha < 0) {
    throw new InputError("kernel.alpha must be a nonnegative finite number");
  }
  if (!Number.isInteger(outputDim) || outputDim < 1) {
    throw new InputError(`kernel.outputDim must be a positive integer, got ${outputDim}`);
  }
  return {
    "spatial.family": k.spatialFamily ?? "gaussian",
    "spatial.sigma": k.spatialSigma,
    "temporal.family": k.temporalFamily ?? "gaussian",
    "temporal.sigma": k.temporalSigma,
    alpha,
    output_dim: outputDim,
  };
}

/* #endregion Kernel configuration */

/* #region Model handles */

/**
 * A fitted space-time field. Wraps the core's model archive inside a scratch
 * workspace; predict()/predictDt() reload the archive per call. release()
 * deletes the workspace, after which every use raises BindingError.
 */
export class FitModel {
  /** spatial input dimension; probe rows carry one extra time column */
  readonly inputDim: number;
  readonly outputDim: number;
  /** @internal */ readonly ws: Workspace;
  /** @internal */ readonly kernel: IniSection;

  /** @internal */
  constructor(ws: Workspace, kernel: IniSection, inputDim: number, outputDim: number) {
    this.ws = ws;
    this.kernel = kernel;
    this.inputDim = inputDim;
    this.outputDim = outputDim;
  }

  /** The plain-text model archive; copy it out to persist beyond release(). */
  get archivePath(): string {
    return this.ws.file(path.join("build", "model.txt"));
  }

  get live(): boolean {
    return this.ws.live;
  }

  release(): void {
    this.ws.release();
  }
}

/** A spectral forecast operator built from snapshot pairs of a flow. */
export class KoopmanModel {
  /** state dimension; forecast states carry no time column */
  readonly stateDim: number;
  /** @internal */ readonly ws: Workspace;
  /** @internal */ readonly kernel: IniSection;

  /** @internal */
  constructor(ws: Workspace, kernel: IniSection, stateDim: number) {
    this.ws = ws;
    this.kernel = kernel;
    this.stateDim = stateDim;
  }

  get archivePath(): string {
    return this.ws.file(path.join("build", "forecast_model.txt"));
  }

  get live(): boolean {
    return this.ws.live;
  }

  release(): void {
    this.ws.release();
  }
}

/* #endregion Model handles */

/* #region Fit and predict */

/**
 * Fit a vector field from samples. `inputs` rows are spatial coordinates
 * followed by the time (N x (inputDim + 1)); `targets` rows are the field
 * values (N x outputDim). Coefficients are bitwise-identical to a core-side
 * fit on the same data.
 */
export function fit(
  inputs: number[][],
  targets: number[][],
  kernel: KernelConfig,
  lambda: number,
): FitModel {
  const inShape = checkMatrix("inputs", inputs);
  if (inShape.cols < 2) {
    throw new InputError(
      `inputs has ${inShape.cols} columns, needs at least 2 (spatial coordinates plus time)`,
    );
  }
  const tgtShape = checkMatrix("targets", targets);
  if (tgtShape.rows !== inShape.rows) {
    throw new InputError(`targets has ${tgtShape.rows} rows, inputs has ${inShape.rows}`);
  }
  if (kernel.outputDim !== undefined && kernel.outputDim !== tgtShape.cols) {
    throw new InputError(
      `targets has ${tgtShape.cols} columns, kernel.outputDim says ${kernel.outputDim}`,
    );
  }
  if (typeof lambda !== "number" || !Number.isFinite(lambda) || lambda < 0) {
    throw new InputError("lambda must be a nonnegative finite number");
  }

  const dIn = inShape.cols - 1;
  const section = kernelSection(kernel, tgtShape.cols);
  const header = [
    ...Array.from({ length: dIn }, (_, j) => `x_${j + 1}`),
    "t",
    ...Array.from({ length: tgtShape.cols }, (_, j) => `y_${j + 1}`),
  ];
  const rows = inputs.map((row, i) => [...row, ...targets[i]]);

  const ws = new Workspace();
  try {
    const trainPath = ws.write("train.csv", csvText(header, rows));
    const cfgPath = ws.write(
      "fit.ini",
      iniText({
        experiment: { name: "fit", lambda: formatFloat(lambda) },
        kernel: section,
        data: { training: trainPath },
      }),
    );
    runOvk(["fit", "--config", cfgPath, "--out", ws.file("build")]);
  } catch (err) {
    ws.release();
    throw err;
  }
  return new FitModel(ws, section, dIn, tgtShape.cols);
}

function fitRun(model: FitModel, probes: number[][]): CsvTable {
  model.ws.assertLive();
  checkMatrix("probes", probes, model.inputDim + 1);
  const header = [...Array.from({ length: model.inputDim }, (_, j) => `x_${j + 1}`), "t"];
  const probesPath = `${model.ws.fresh("probes")}.csv`;
  fs.writeFileSync(probesPath, csvText(header, probes));
  const outDir = model.ws.fresh("run");
  const cfgPath = `${model.ws.fresh("cfg")}.ini`;
  fs.writeFileSync(
    cfgPath,
    iniText({
      experiment: { name: "fit" },
      kernel: model.kernel,
      data: { model_in: model.archivePath, probes: probesPath },
    }),
  );
  runOvk(["fit", "--config", cfgPath, "--out", outDir]);
  return parseCsv(fs.readFileSync(path.join(outDir, "fit_predictions.csv"), "utf8"));
}

/** Field values at probe sites (rows: spatial coordinates plus time). */
export function predict(model: FitModel, probes: number[][]): number[][] {
  return columnBlock(fitRun(model, probes), "f");
}

/** Analytic time derivative of the fitted field at probe sites. */
export function predictDt(model: FitModel, probes: number[][]): number[][] {
  return columnBlock(fitRun(model, probes), "dt_f");
}

/* #endregion Fit and predict */

/* #region Koopman operators */

export interface KoopmanOptions {
  kernel: KernelConfig;
  /** snapshot interval; forecasts advance in multiples of it */
  dt: number;
  /** builtin flow to sample: sine2pi (default), linear_contraction, identity */
  system?: "sine2pi" | "linear_contraction" | "identity";
  /** builtin observable name (the core defaults to "circle") */
  observable?: string;
  /** number of snapshot pairs */
  n?: number;
  /** truncation rank used by forecasts */
  rank?: number;
  /** modes retained by the spectral decomposition */
  maxModes?: number;
  seed?: number;
  pinvRtol?: number;
  /** decay rate of linear_contraction */
  rate?: number;
  domainLo?: number;
  domainHi?: number;
  /** grid nudge away from fixed points (sine2pi) */
  offset?: number;
  /** prebuilt snapshot-pairs CSV; replaces system/n sampling */
  pairsFile?: string;
}

/** Count the x_now_* columns of a pairs CSV to learn the state dimension. */
function pairsStateDim(pairsFile: string): number {
  let text: string;
  try {
    text = fs.readFileSync(pairsFile, "utf8");
  } catch (err) {
    throw new InputError(`cannot read pairs file: ${(err as Error).message}`);
  }
  const header = text.split("\n").find((l) => l.length > 0 && !l.startsWith("#"));
  const k = header ? header.split(",").filter((c) => c.startsWith("x_now_")).length : 0;
  if (k === 0) {
    throw new InputError(`pairs file has no x_now_* columns: ${pairsFile}`);
  }
  return k;
}

/**
 * Build a spectral forecast operator from snapshot pairs of a flow, either
 * sampled from a builtin system or read from a pairs CSV.
 */
export function koopman(options: KoopmanOptions): KoopmanModel {
  if (!Number.isFinite(options.dt) || options.dt <= 0) {
    throw new InputError("dt must be a positive finite number");
  }
  for (const key of ["n", "rank", "maxModes", "seed"] as const) {
    const v = options[key];
    if (v !== undefined && (!Number.isInteger(v) || v < (key === "seed" ? 0 : 1))) {
      throw new InputError(`${key} must be a positive integer, got ${v}`);
    }
  }
  const section = kernelSection(options.kernel, options.kernel.outputDim ?? 1);
  const stateDim = options.pairsFile ? pairsStateDim(options.pairsFile) : 1;

  const ws = new Workspace();
  try {
    const cfgPath = ws.write(
      "koopman.ini",
      iniText({
        experiment: {
          name: "forecast",
          dt: options.dt,
          system: options.system,
          observable: options.observable,
          n: options.n,
          rank: options.rank,
          max_modes: options.maxModes,
          seed: options.seed,
          pinv_rtol: options.pinvRtol,
          rate: options.rate,
          domain_lo: options.domainLo,
          domain_hi: options.domainHi,
          offset: options.offset,
        },
        kernel: section,
        data: { pairs: options.pairsFile },
      }),
    );
    runOvk(["forecast", "--config", cfgPath, "--out", ws.file("build")]);
  } catch (err) {
    ws.release();
    throw err;
  }
  return new KoopmanModel(ws, section, stateDim);
}

/** One retained Koopman mode, in the core's deterministic spectral order. */
export interface KoopmanMode {
  k: number;
  re: number;
  im: number;
  modulus: number;
  argument: number;
  residual: number;
}

/** The modes the model forecasts with (rank rows, largest modulus first). */
export function decompose(model: KoopmanModel): KoopmanMode[] {
  model.ws.assertLive();
  const table = parseCsv(
    fs.readFileSync(model.ws.file(path.join("build", "forecast_eigenvalues.csv")), "utf8"),
  );
  const idx = Object.fromEntries(table.header.map((h, j) => [h, j]));
  for (const name of ["k", "re", "im", "modulus", "argument", "residual"]) {
    if (!(name in idx)) {
      throw new InputError(`eigenvalue table has no column ${name}`);
    }
  }
  return table.rows.map((r) => ({
    k: r[idx.k],
    re: r[idx.re],
    im: r[idx.im],
    modulus: r[idx.modulus],
    argument: r[idx.argument],
    residual: r[idx.residual],
  }));
}

/**
 * Advance the model's observable `steps` snapshot intervals from each state
 * (rows of spatial coordinates, no time column). Returns one row of
 * observable components per state. steps = 0 is the rank-truncated
 * reconstruction.
 */
export function forecast(model: KoopmanModel, states: number[][], steps: number): number[][] {
  model.ws.assertLive();
  checkMatrix("states", states, model.stateDim);
  if (!Number.isInteger(steps) || steps < 0) {
    throw new InputError(`steps must be a nonnegative integer, got ${steps}`);
  }
  const header = Array.from({ length: model.stateDim }, (_, j) => `x_${j + 1}`);
  const statesPath = `${model.ws.fresh("states")}.csv`;
  fs.writeFileSync(statesPath, csvText(header, states));
  const outDir = model.ws.fresh("run");
  const cfgPath = `${model.ws.fresh("cfg")}.ini`;
  fs.writeFileSync(
    cfgPath,
    iniText({
      experiment: { name: "forecast", steps: String(steps) },
      kernel: model.kernel,
      data: { model_in: model.archivePath, states: statesPath },
    }),
  );
  runOvk(["forecast", "--config", cfgPath, "--out", outDir]);
  const table = parseCsv(fs.readFileSync(path.join(outDir, "forecast_values.csv"), "utf8"));
  return columnBlock(table, "f"); // single steps value, rows in input-state order
}

/* #endregion Koopman operators */

/* #region Experiment runner */

const EXPERIMENTS: ReadonlySet<string> = new Set(["exp1", "exp2", "exp3", "fit", "forecast"]);

export interface RunOptions {
  /** output directory; a fresh temp directory is created when omitted */
  out?: string;
  seed?: number;
  parallel?: boolean;
}

export interface ExperimentRun {
  outDir: string;
  /** result files, as reported by the core (manifest.txt excluded) */
  outputs: string[];
  manifestPath: string;
}

/**
 * Run one benchmark experiment from a config file. The output directory is
 * the caller's to keep or delete; nothing is cleaned up automatically.
 */
export function runExperiment(name: string, configPath: string, options: RunOptions = {}): ExperimentRun {
  if (!EXPERIMENTS.has(name)) {
    throw new InputError(`unknown experiment ${JSON.stringify(name)}`);
  }
  const outDir = options.out ?? fs.mkdtempSync(path.join(os.tmpdir(), "ovkflow-run-"));
  const args = [name, "--config", configPath, "--out", outDir];
  if (options.seed !== undefined) {
    if (!Number.isInteger(options.seed) || options.seed < 0) {
      throw new InputError(`seed must be a nonnegative integer, got ${options.seed}`);
    }
    args.push("--seed", String(options.seed));
  }
  if (options.parallel) {
    args.push("--parallel");
  }
  const stdout = runOvk(args);
  const outputs = stdout.split("\n").filter((l) => l.length > 0);
  return { outDir, outputs, manifestPath: path.join(outDir, "manifest.txt") };
}

/* #endregion Experiment runner */
