/**
 * Validation and serialization for N x 3 point buffers.
 *
 * Clouds are accepted either as a flat Float64Array of length 3 * N
 * (x0, y0, z0, x1, ...) or as an array of [x, y, z] rows. Flat buffers are
 * read in place, never copied into an intermediate structure.
 */

export type CloudInput = Float64Array | ReadonlyArray<readonly number[]>;

/** Structured validation failure naming the offending argument. */
export class CloudValidationError extends Error {
  readonly argument: string;

  constructor(argument: string, message: string) {
    super(`${argument}: ${message}`);
    this.name = "CloudValidationError";
    this.argument = argument;
  }
}

export function pointCount(cloud: CloudInput, argument: string): number {
  if (cloud instanceof Float64Array) {
    if (cloud.length === 0 || cloud.length % 3 !== 0) {
      throw new CloudValidationError(
        argument,
        `flat buffer length ${cloud.length} is not a positive multiple of 3`,
      );
    }
    return cloud.length / 3;
  }
  if (!Array.isArray(cloud) || cloud.length === 0) {
    throw new CloudValidationError(argument, "expected at least one point");
  }
  return cloud.length;
}

function checkFinite(value: number, argument: string, index: number): void {
  if (!Number.isFinite(value)) {
    throw new CloudValidationError(
      argument,
      `non-finite coordinate at point ${index}`,
    );
  }
}

/**
 * Serialize a cloud to XYZ text. Number.prototype.toString is the shortest
 * round-trip representation, so float64 values survive exactly.
 */
export function cloudToXyz(cloud: CloudInput, argument: string): string {
  const n = pointCount(cloud, argument);
  const lines: string[] = new Array(n);
  if (cloud instanceof Float64Array) {
    for (let i = 0; i < n; i++) {
      const x = cloud[3 * i];
      const y = cloud[3 * i + 1];
      const z = cloud[3 * i + 2];
      checkFinite(x, argument, i);
      checkFinite(y, argument, i);
      checkFinite(z, argument, i);
      lines[i] = `${x} ${y} ${z}`;
    }
  } else {
    for (let i = 0; i < n; i++) {
      const row = cloud[i];
      if (!Array.isArray(row) || row.length !== 3) {
        throw new CloudValidationError(
          argument,
          `row ${i} is not an [x, y, z] triple`,
        );
      }
      checkFinite(row[0], argument, i);
      checkFinite(row[1], argument, i);
      checkFinite(row[2], argument, i);
      lines[i] = `${row[0]} ${row[1]} ${row[2]}`;
    }
  }
  return lines.join("\n") + "\n";
}

/** Parse XYZ text into a flat Float64Array (3 * N values). */
export function xyzToCloud(text: string): Float64Array {
  const values: number[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line || line.startsWith("#")) continue;
    const tokens = line.split(/\s+/);
    for (let k = 0; k < 3; k++) {
      values.push(Number(tokens[k]));
    }
  }
  return Float64Array.from(values);
}
