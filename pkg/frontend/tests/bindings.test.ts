/**
 * @file bindings.test.ts
 * @brief Dual-path suite: every bound result is checked against a raw CLI
 * run built by hand in this file, plus the error-surface contracts.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import {
  BindingError,
  FitModel,
  InputError,
  KoopmanModel,
  decompose,
  fit,
  forecast,
  koopman,
  ovkBinary,
  predict,
  predictDt,
  runExperiment,
} from "../src/index.js";

const DUAL_PATH_TOL = 1e-12;

const cleanups: Array<() => void> = [];
afterAll(() => {
  for (const fn of cleanups) fn();
});

function tempDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "ovkflow-test-"));
  cleanups.push(() => fs.rmSync(dir, { recursive: true, force: true }));
  return dir;
}

function track(model: FitModel | KoopmanModel): void {
  cleanups.push(() => model.release());
}

/** Run ovk directly, bypassing the binding layer entirely. */
function rawOvk(args: string[]): string {
  return execFileSync(ovkBinary(), args, { encoding: "utf8" });
}

function rawTable(file: string): { header: string[]; rows: number[][] } {
  const lines = fs.readFileSync(file, "utf8").split("\n").filter((l) => l.length > 0);
  return {
    header: lines[0].split(","),
    rows: lines.slice(1).map((l) => l.split(",").map(Number)),
  };
}

// small deterministic PRNG so both paths see identical data
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("fit and predict, dual path", () => {
  const rand = mulberry32(7);
  const inputs: number[][] = [];
  const targets: number[][] = [];
  for (let i = 0; i < 12; i++) {
    const x = rand();
    const t = rand();
    inputs.push([x, t]);
    targets.push([Math.sin(x + t) + 0.01 * rand(), Math.cos(x - t)]);
  }
  const probes: number[][] = [];
  for (let i = 0; i < 100; i++) {
    probes.push([rand(), rand()]);
  }
  const kernel = { spatialSigma: 0.35, temporalSigma: 0.4, alpha: 0.2 };

  it("matches a hand-built CLI run to 1e-12 with a bitwise-identical archive", () => {
    const model = fit(inputs, targets, kernel, 1e-8);
    track(model);
    const bound = predict(model, probes);
    const boundDt = predictDt(model, probes);

    // raw path: write the same CSVs and configs by hand, run ovk directly
    const dir = tempDir();
    const cell = (v: number) => String(v);
    const trainCsv =
      "x_1,t,y_1,y_2\n" +
      inputs.map((r, i) => [...r, ...targets[i]].map(cell).join(",")).join("\n") +
      "\n";
    fs.writeFileSync(path.join(dir, "train.csv"), trainCsv);
    fs.writeFileSync(
      path.join(dir, "probes.csv"),
      "x_1,t\n" + probes.map((r) => r.map(cell).join(",")).join("\n") + "\n",
    );
    const kernelIni = [
      "[kernel]",
      "spatial.family = gaussian",
      "spatial.sigma = 0.35",
      "temporal.family = gaussian",
      "temporal.sigma = 0.4",
      "alpha = 0.2",
      "output_dim = 2",
    ];
    fs.writeFileSync(
      path.join(dir, "build.ini"),
      ["[experiment]", "name = fit", "lambda = 1e-8", ...kernelIni,
       "[data]", `training = ${path.join(dir, "train.csv")}`, ""].join("\n"),
    );
    rawOvk(["fit", "--config", path.join(dir, "build.ini"), "--out", path.join(dir, "build")]);
    fs.writeFileSync(
      path.join(dir, "reload.ini"),
      ["[experiment]", "name = fit", ...kernelIni,
       "[data]", `model_in = ${path.join(dir, "build", "model.txt")}`,
       `probes = ${path.join(dir, "probes.csv")}`, ""].join("\n"),
    );
    rawOvk(["fit", "--config", path.join(dir, "reload.ini"), "--out", path.join(dir, "out")]);

    const raw = rawTable(path.join(dir, "out", "fit_predictions.csv"));
    expect(raw.header).toEqual(["x_1", "t", "f_1", "f_2", "dt_f_1", "dt_f_2"]);
    const fCols = [raw.header.indexOf("f_1"), raw.header.indexOf("f_2")];
    const dtCols = [raw.header.indexOf("dt_f_1"), raw.header.indexOf("dt_f_2")];
    for (let i = 0; i < probes.length; i++) {
      for (let j = 0; j < 2; j++) {
        expect(Math.abs(bound[i][j] - raw.rows[i][fCols[j]])).toBeLessThanOrEqual(DUAL_PATH_TOL);
        expect(Math.abs(boundDt[i][j] - raw.rows[i][dtCols[j]])).toBeLessThanOrEqual(DUAL_PATH_TOL);
      }
    }

    // coefficients cross the boundary bit for bit: same archive bytes
    const boundArchive = fs.readFileSync(model.archivePath, "utf8");
    const rawArchive = fs.readFileSync(path.join(dir, "build", "model.txt"), "utf8");
    expect(boundArchive).toBe(rawArchive);
  });

  it("single-site fit at lambda 0 returns the target exactly", () => {
    const model = fit(
      [[0.3, 0.2]],
      [[0.7]],
      { spatialSigma: 0.5, temporalSigma: 0.5, alpha: 0 },
      0,
    );
    track(model);
    // unit self-similarity makes the coefficient equal the target
    expect(predict(model, [[0.3, 0.2]])[0][0]).toBe(0.7);
  });
});

describe("koopman, decompose, forecast", () => {
  const opts = {
    kernel: { spatialSigma: 0.5, temporalSigma: 1.0 },
    system: "linear_contraction" as const,
    observable: "coordinate",
    n: 200,
    dt: 0.1,
    rank: 4,
    maxModes: 8,
  };

  it("contraction forecast matches the flow and the raw CLI path", () => {
    const model = koopman(opts);
    track(model);

    const modes = decompose(model);
    expect(modes).toHaveLength(4);
    expect(Math.abs(modes[0].modulus - 1)).toBeLessThan(1e-5);
    expect(Math.abs(modes[1].modulus - Math.exp(-0.1)) / Math.exp(-0.1)).toBeLessThan(0.05);
    for (const mode of modes) {
      expect(mode.residual).toBeLessThanOrEqual(1e-8);
    }

    const v0 = forecast(model, [[1.0]], 0)[0][0];
    const v5 = forecast(model, [[1.0]], 5)[0][0];
    expect(Math.abs(v5 - Math.exp(-0.5)) / Math.exp(-0.5)).toBeLessThan(0.05);

    // raw path: rebuild the same operator by hand and forecast steps 0 and 5
    const dir = tempDir();
    const buildIni = [
      "[experiment]", "name = forecast", "dt = 0.1", "system = linear_contraction",
      "observable = coordinate", "n = 200", "rank = 4", "max_modes = 8",
      "[kernel]", "spatial.sigma = 0.5", "temporal.sigma = 1", "",
    ];
    fs.writeFileSync(path.join(dir, "build.ini"), buildIni.join("\n"));
    rawOvk(["forecast", "--config", path.join(dir, "build.ini"), "--out", path.join(dir, "build")]);
    fs.writeFileSync(path.join(dir, "states.csv"), "x_1\n1\n");
    fs.writeFileSync(
      path.join(dir, "values.ini"),
      ["[experiment]", "name = forecast", "steps = 0,5",
       "[kernel]", "spatial.sigma = 0.5", "temporal.sigma = 1",
       "[data]", `model_in = ${path.join(dir, "build", "forecast_model.txt")}`,
       `states = ${path.join(dir, "states.csv")}`, ""].join("\n"),
    );
    rawOvk(["forecast", "--config", path.join(dir, "values.ini"), "--out", path.join(dir, "out")]);

    const raw = rawTable(path.join(dir, "out", "forecast_values.csv"));
    const sCol = raw.header.indexOf("steps");
    const fCol = raw.header.indexOf("f_1");
    const rawV0 = raw.rows.find((r) => r[sCol] === 0)![fCol];
    const rawV5 = raw.rows.find((r) => r[sCol] === 5)![fCol];
    expect(Math.abs(v0 - rawV0)).toBeLessThanOrEqual(DUAL_PATH_TOL);
    expect(Math.abs(v5 - rawV5)).toBeLessThanOrEqual(DUAL_PATH_TOL);
    expect(fs.readFileSync(model.archivePath, "utf8")).toBe(
      fs.readFileSync(path.join(dir, "build", "forecast_model.txt"), "utf8"),
    );
  });

  it("identity-flow forecasts are independent of the step count", () => {
    const model = koopman({
      kernel: { spatialSigma: 0.5, temporalSigma: 1.0 },
      system: "identity",
      observable: "coordinate",
      n: 50,
      dt: 0.1,
      rank: 4,
      maxModes: 8,
    });
    track(model);
    const states = [[0.3], [-0.4], [0.75]];
    const base = forecast(model, states, 0);
    for (const steps of [1, 5, 20]) {
      const vals = forecast(model, states, steps);
      for (let i = 0; i < states.length; i++) {
        expect(Math.abs(vals[i][0] - base[i][0])).toBeLessThan(1e-6);
      }
    }
  });
});

describe("error surface", () => {
  const kernel = { spatialSigma: 0.4, temporalSigma: 0.4 };

  it("rejects malformed arrays with the offending dimension named", () => {
    expect(() => fit([], [], kernel, 1e-8)).toThrow(/nonempty/);
    expect(() => fit([[0, 0], [0]], [[1], [1]], kernel, 1e-8)).toThrow(/row 1/);
    expect(() => fit([[0, Number.NaN]], [[1]], kernel, 1e-8)).toThrow(/\[0\]\[1\]/);
    expect(() => fit([[0, 0], [0.5, 0.5]], [[1]], kernel, 1e-8)).toThrow(/1 rows/);
    expect(() => fit([[0.1], [0.2]], [[1], [2]], kernel, 1e-8)).toThrow(/at least 2/);
    expect(() => fit([[0, 0]], [[1]], kernel, -1)).toThrow(InputError);
    expect(() => fit([[0, 0]], [[1, 2]], { ...kernel, outputDim: 1 }, 1e-8)).toThrow(/outputDim/);
  });

  it("validates probe and state shapes against the model", () => {
    const model = fit([[0.1, 0.1], [0.8, 0.6]], [[1], [2]], kernel, 1e-8);
    track(model);
    expect(() => predict(model, [[0.5]])).toThrow(/expected 2/);
    expect(() => predictDt(model, [[0.5, 0.5, 0.5]])).toThrow(/expected 2/);
  });

  it("raises on a released handle instead of touching dead state", () => {
    const model = fit([[0.1, 0.1], [0.8, 0.6]], [[1], [2]], kernel, 1e-8);
    model.release();
    expect(model.live).toBe(false);
    expect(() => predict(model, [[0.5, 0.5]])).toThrow(BindingError);
    expect(() => predict(model, [[0.5, 0.5]])).toThrow(/release/);
    model.release(); // idempotent
  });

  it("rejects bad forecast arguments", () => {
    expect(() => koopman({ kernel, dt: 0 })).toThrow(InputError);
    expect(() => koopman({ kernel, dt: 0.1, n: -5 })).toThrow(/n must be/);
    const model = koopman({
      kernel: { spatialSigma: 0.5, temporalSigma: 1.0 },
      system: "identity",
      observable: "coordinate",
      n: 20,
      dt: 0.1,
      rank: 2,
      maxModes: 4,
    });
    track(model);
    expect(() => forecast(model, [[0.1]], -1)).toThrow(/nonnegative integer/);
    expect(() => forecast(model, [[0.1]], 1.5)).toThrow(/nonnegative integer/);
    expect(() => forecast(model, [[0.1, 0.2]], 1)).toThrow(/expected 1/);
  });

  it("surfaces core input errors as InputError, not a crash", () => {
    // the core refuses a Matern temporal kernel under the derivative penalty
    expect(() =>
      fit([[0.1, 0.1], [0.8, 0.6]], [[1], [2]],
        { spatialSigma: 0.4, temporalSigma: 0.4, temporalFamily: "matern32", alpha: 0.5 }, 1e-8),
    ).toThrow(InputError);
    expect(() => runExperiment("nope", "x.ini")).toThrow(/unknown experiment/);
    expect(() => runExperiment("exp2", path.join(os.tmpdir(), "missing-config.ini")))
      .toThrow(InputError);
    expect(InputError.prototype).toBeInstanceOf(BindingError);
  });
});

describe("runExperiment", () => {
  it("runs a benchmark deterministically and reports its outputs", () => {
    const dir = tempDir();
    const cfg = path.join(dir, "exp2.ini");
    fs.writeFileSync(
      cfg,
      ["[experiment]", "name = exp2", "sweep = 40,80", "dt = 0.1",
       "[kernel]", "spatial.sigma = 0.2", "temporal.sigma = 1", ""].join("\n"),
    );
    const runA = runExperiment("exp2", cfg, { out: path.join(dir, "a"), seed: 7 });
    const runB = runExperiment("exp2", cfg, { out: path.join(dir, "b"), seed: 7 });
    expect(runA.outputs).toHaveLength(2);
    expect(fs.existsSync(runA.manifestPath)).toBe(true);

    const nameOf = (p: string) => path.basename(p);
    expect(runA.outputs.map(nameOf)).toEqual(["exp2_eigenvalues.csv", "exp2_gaps.csv"]);
    for (const out of runA.outputs) {
      const twin = path.join(runB.outDir, nameOf(out));
      expect(fs.readFileSync(out, "utf8")).toBe(fs.readFileSync(twin, "utf8"));
    }

    const eig = rawTable(runA.outputs[0]);
    const residCol = eig.header.indexOf("residual");
    for (const row of eig.rows) {
      expect(row[residCol]).toBeLessThanOrEqual(1e-8);
    }
  });
});
