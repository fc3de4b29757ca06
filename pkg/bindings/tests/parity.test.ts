import { readdirSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  boundHfExtract,
  boundLosses,
  boundMetrics,
  CloudValidationError,
  toolVersion,
  VERSION,
} from "../src/index.js";
import { xyzToCloud } from "../src/buffers.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");
const HF_M = 32;
const TOLERANCE = 1e-12;

interface MetricFixture {
  values: Record<string, number | null>;
}

interface LossFixture {
  raw: Record<string, number>;
  weighted: Record<string, number>;
  weights: Record<string, number>;
  total: number;
}

interface HfFixture {
  indices: number[];
  scores: number[];
}

function loadJson<T>(...parts: string[]): T {
  return JSON.parse(readFileSync(join(FIXTURES, ...parts), "utf-8")) as T;
}

function loadCloud(...parts: string[]): Float64Array {
  return xyzToCloud(readFileSync(join(FIXTURES, ...parts), "utf-8"));
}

const cases = readdirSync(FIXTURES)
  .filter((name) => name.startsWith("case_"))
  .sort();

function expectClose(
  actual: number | null,
  expected: number | null,
  label: string,
): void {
  if (expected === null) {
    expect(actual, label).toBeNull();
    return;
  }
  expect(actual, label).not.toBeNull();
  expect(Math.abs((actual as number) - expected), label).toBeLessThanOrEqual(
    Math.max(TOLERANCE, TOLERANCE * Math.abs(expected)),
  );
}

describe("fixture inventory", () => {
  it("holds the ten stored cases", () => {
    expect(cases).toHaveLength(10);
  });
});

describe("boundMetrics parity with the CLI", () => {
  it.each(cases)("%s", (name) => {
    const up = loadCloud(name, "up.xyz");
    const gt = loadCloud(name, "gt.xyz");
    const expected = loadJson<MetricFixture>(name, "metrics.json").values;
    const got = boundMetrics(up, gt, { hfM: HF_M });
    for (const key of ["cd", "hd", "p2f", "uniformity", "hf_cd", "hf_hd"]) {
      expectClose(
        (got as unknown as Record<string, number | null>)[key],
        expected[key],
        `${name}/${key}`,
      );
    }
  });
});

describe("boundLosses parity with the CLI", () => {
  it.each(cases)("%s", (name) => {
    const up = loadCloud(name, "up.xyz");
    const gt = loadCloud(name, "gt.xyz");
    const ori = loadCloud(name, "ori.xyz");
    const expected = loadJson<LossFixture>(name, "losses.json");
    const got = boundLosses(up, gt, ori);
    for (const key of ["reconstruction", "uniformity", "identity"] as const) {
      expectClose(got.raw[key], expected.raw[key], `${name}/raw/${key}`);
      expectClose(
        got.weighted[key],
        expected.weighted[key],
        `${name}/weighted/${key}`,
      );
      expect(got.weights[key], `${name}/weights/${key}`).toBe(
        expected.weights[key],
      );
    }
    expectClose(got.total, expected.total, `${name}/total`);
  });
});

describe("boundHfExtract parity with the CLI", () => {
  it.each(cases)("%s", (name) => {
    const cloud = loadCloud(name, "up.xyz");
    const expected = loadJson<HfFixture>(name, "hf.json");
    const got = boundHfExtract(cloud, HF_M);
    expect(got.indices, `${name}/indices`).toEqual(expected.indices);
    expect(got.scores).toHaveLength(expected.scores.length);
    got.scores.forEach((score, i) => {
      expectClose(score, expected.scores[i], `${name}/scores[${i}]`);
    });
  });
});

describe("input validation", () => {
  const good = new Float64Array([0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0]);

  it("rejects buffers whose length is not a multiple of 3", () => {
    const bad = new Float64Array(8); // N x 2 layout
    expect(() => boundMetrics(bad, good)).toThrowError(CloudValidationError);
    try {
      boundMetrics(bad, good);
    } catch (error) {
      expect((error as CloudValidationError).argument).toBe("up");
    }
  });

  it("rejects NaN coordinates and names the argument", () => {
    const bad = Float64Array.from(good);
    bad[4] = Number.NaN;
    expect(() => boundMetrics(good, bad)).toThrowError(/gt: non-finite/);
  });

  it("rejects malformed row arrays", () => {
    expect(() =>
      boundLosses([[0, 0]], good, good),
    ).toThrowError(CloudValidationError);
  });

  it("rejects empty clouds and bad m", () => {
    expect(() => boundHfExtract(new Float64Array(0), 1)).toThrowError(
      CloudValidationError,
    );
    expect(() => boundHfExtract(good, 0)).toThrowError(/m: expected/);
  });
});

describe("identity and version checks", () => {
  it("identical buffers score zero on the set metrics", () => {
    const cloud = loadCloud("case_00", "gt.xyz");
    const got = boundMetrics(cloud, cloud, { hfM: HF_M });
    expect(got.cd).toBe(0);
    expect(got.hd).toBe(0);
    expect(got.hf_cd).toBe(0);
    expect(got.hf_hd).toBe(0);
  });

  it("row-array and flat-buffer inputs agree", () => {
    const flat = loadCloud("case_01", "gt.xyz");
    const rows: number[][] = [];
    for (let i = 0; i < flat.length / 3; i++) {
      rows.push([flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]]);
    }
    const a = boundMetrics(flat, flat, { which: ["cd", "hd"] });
    const b = boundMetrics(rows, rows, { which: ["cd", "hd"] });
    expect(a).toEqual(b);
  });

  it("binding version matches the installed tool", () => {
    expect(toolVersion()).toBe(VERSION);
  });
});
