/**
 * Shared binary decoding plumbing. Mirrors the error taxonomy of the
 * core writers: every malformed input surfaces as a FormatError naming
 * the file, the field, and the byte offset where decoding stopped.
 */

export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

const VALID_LABELS = new Set<number>([...Array.from({ length: 17 }, (_, i) => i), 255]);

// headers promising more elements than this are corrupt, not allocatable
const MAX_ELEMENTS = 2 ** 40;

export class ByteReader {
  private readonly view: DataView;
  private off = 0;

  constructor(
    private readonly data: Uint8Array,
    private readonly path: string,
  ) {
    this.view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  }

  take(n: number, what: string): Uint8Array {
    if (this.off + n > this.data.length) {
      throw new FormatError(
        `${this.path}: truncated ${what} at byte ${this.off}: ` +
          `need ${n} bytes, have ${this.data.length - this.off}`,
      );
    }
    const chunk = this.data.subarray(this.off, this.off + n);
    this.off += n;
    return chunk;
  }

  u32(what: string): number {
    this.take(4, what);
    return this.view.getUint32(this.off - 4, true);
  }

  f32(what: string): number {
    this.take(4, what);
    return this.view.getFloat32(this.off - 4, true);
  }

  magic(expected: Uint8Array, fmt: string): void {
    const got = this.take(expected.length, `${fmt} magic`);
    for (let i = 0; i < expected.length; i++) {
      if (got[i] !== expected[i]) {
        throw new FormatError(
          `${this.path}: magic mismatch: expected ${printable(expected)}, got ${printable(got)}`,
        );
      }
    }
  }

  done(fmt: string): void {
    if (this.off !== this.data.length) {
      throw new FormatError(
        `${this.path}: ${this.data.length - this.off} trailing bytes after ${fmt} payload`,
      );
    }
  }
}

function printable(bytes: Uint8Array): string {
  return JSON.stringify(
    Array.from(bytes, (b) =>
      b >= 0x20 && b < 0x7f ? String.fromCharCode(b) : `\\x${b.toString(16).padStart(2, "0")}`,
    ).join(""),
  );
}

export function checkDims(path: string, fmt: string, dims: Record<string, number>): number {
  let total = 1;
  for (const [name, value] of Object.entries(dims)) {
    if (value === 0) {
      throw new FormatError(`${path}: zero dimension ${name} in ${fmt} header`);
    }
    total *= value;
  }
  if (total > MAX_ELEMENTS) {
    throw new FormatError(
      `${path}: ${fmt} dimension overflow: ${JSON.stringify(dims)} exceeds ${MAX_ELEMENTS} elements`,
    );
  }
  return total;
}

export function checkLabels(labels: Uint8Array, path: string): void {
  const bad = new Set<number>();
  for (const v of labels) {
    if (!VALID_LABELS.has(v)) bad.add(v);
  }
  if (bad.size > 0) {
    throw new FormatError(`${path}: invalid label ids [${[...bad].sort((a, b) => a - b).join(", ")}]`);
  }
}

export function ascii(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}
