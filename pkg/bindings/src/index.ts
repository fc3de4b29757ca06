/**
 * Typed buffer bindings for the pointfreq evaluation toolkit.
 *
 * Each function validates its N x 3 buffers, ships them to the pointfreq
 * command-line interface as full-precision XYZ text, and returns the parsed
 * JSON report, so results match the CLI bit for bit.
 */

import { CloudInput, CloudValidationError, cloudToXyz } from "./buffers.js";
import { runCli, withWorkspace } from "./runner.js";

export { CloudInput, CloudValidationError } from "./buffers.js";
export { CliError } from "./runner.js";

export const VERSION = "0.1.0";

export interface GraphOptions {
  epsilon?: number;
  sigma?: number;
  fallbackK?: number;
}

export interface MetricOptions extends GraphOptions {
  hfM?: number;
  rQSq?: number;
  seedCount?: number;
  which?: string[];
}

export interface MetricValues {
  cd: number | null;
  hd: number | null;
  p2f: number | null;
  p2f_max: number | null;
  uniformity: number | null;
  hf_cd: number | null;
  hf_hd: number | null;
}

export interface HfExtraction {
  indices: number[];
  scores: number[];
}

export interface LossWeights {
  reconstruction?: number;
  uniformity?: number;
  identity?: number;
}

export interface LossValues {
  raw: { reconstruction: number; uniformity: number; identity: number };
  weighted: { reconstruction: number; uniformity: number; identity: number };
  weights: { reconstruction: number; uniformity: number; identity: number };
  total: number;
}

function graphArgs(options: GraphOptions): string[] {
  const args: string[] = [];
  if (options.epsilon !== undefined) args.push("--epsilon", String(options.epsilon));
  if (options.sigma !== undefined) args.push("--sigma", String(options.sigma));
  if (options.fallbackK !== undefined) {
    args.push("--fallback-k", String(options.fallbackK));
  }
  return args;
}

/** Evaluate an upsampled cloud against its ground truth. */
export function boundMetrics(
  up: CloudInput,
  gt: CloudInput,
  options: MetricOptions = {},
): MetricValues {
  const upText = cloudToXyz(up, "up");
  const gtText = cloudToXyz(gt, "gt");
  return withWorkspace((ws) => {
    const upPath = ws.write("up.xyz", upText);
    const gtPath = ws.write("gt.xyz", gtText);
    const reportPath = ws.path("report.json");
    const args = [
      "metrics", "--up", upPath, "--gt", gtPath, "--json", reportPath,
      ...graphArgs(options),
    ];
    if (options.hfM !== undefined) args.push("--hf-m", String(options.hfM));
    if (options.rQSq !== undefined) args.push("--r-q-sq", String(options.rQSq));
    if (options.seedCount !== undefined) {
      args.push("--seed-count", String(options.seedCount));
    }
    if (options.which !== undefined) args.push("--which", options.which.join(","));
    runCli(args);
    const payload = ws.readJson("report.json") as { values: MetricValues };
    return payload.values;
  });
}

/** Indices and scores of the strongest high-frequency points of a cloud. */
export function boundHfExtract(
  cloud: CloudInput,
  m: number,
  options: GraphOptions & { normalize?: boolean } = {},
): HfExtraction {
  if (!Number.isInteger(m) || m < 1) {
    throw new CloudValidationError("m", `expected a positive integer, got ${m}`);
  }
  const text = cloudToXyz(cloud, "cloud");
  return withWorkspace((ws) => {
    const cloudPath = ws.write("cloud.xyz", text);
    const jsonPath = ws.path("hf.json");
    const args = [
      "hf", "extract", "--in", cloudPath, "--m", String(m),
      "--out", ws.path("hf.xyz"), "--json", jsonPath,
      ...graphArgs(options),
    ];
    if (options.normalize === false) args.push("--no-normalize");
    runCli(args);
    const payload = ws.readJson("hf.json") as HfExtraction;
    return { indices: payload.indices, scores: payload.scores };
  });
}

/** Weighted non-adversarial loss breakdown for an upsampled cloud. */
export function boundLosses(
  up: CloudInput,
  gt: CloudInput,
  ori: CloudInput,
  weights: LossWeights = {},
): LossValues {
  const upText = cloudToXyz(up, "up");
  const gtText = cloudToXyz(gt, "gt");
  const oriText = cloudToXyz(ori, "ori");
  return withWorkspace((ws) => {
    const upPath = ws.write("up.xyz", upText);
    const gtPath = ws.write("gt.xyz", gtText);
    const oriPath = ws.write("ori.xyz", oriText);
    const jsonPath = ws.path("losses.json");
    const args = [
      "losses", "--up", upPath, "--gt", gtPath, "--ori", oriPath,
      "--json", jsonPath,
    ];
    if (weights.reconstruction !== undefined) {
      args.push("--w-rec", String(weights.reconstruction));
    }
    if (weights.uniformity !== undefined) {
      args.push("--w-uni", String(weights.uniformity));
    }
    if (weights.identity !== undefined) {
      args.push("--w-id", String(weights.identity));
    }
    runCli(args);
    return ws.readJson("losses.json") as LossValues;
  });
}

/** Version string reported by the underlying pointfreq installation. */
export function toolVersion(): string {
  const match = runCli(["--version"]).match(/version\s+(\S+)/);
  return match ? match[1] : "";
}
