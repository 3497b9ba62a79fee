import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { FormatError, loadGrid, loadStack, loadWeightMap } from "../src/index.js";
import { makeFixtures, type Fixtures } from "./fixtures.js";

let fx: Fixtures;

beforeAll(() => {
  fx = makeFixtures();
});

function mutate(source: string, out: string, f: (bytes: Uint8Array) => Uint8Array): string {
  const path = join(fx.dir, out);
  writeFileSync(path, f(new Uint8Array(readFileSync(source))));
  return path;
}

describe("error taxonomy", () => {
  it("rejects a wrong magic", () => {
    const path = mutate(fx.gridPaths[0], "badmagic.occv1", (b) => {
      b[0] ^= 0xff;
      return b;
    });
    expect(() => loadGrid(path)).toThrowError(FormatError);
    expect(() => loadGrid(path)).toThrowError(/magic mismatch/);
  });

  it("reports truncation with a byte offset", () => {
    const path = mutate(fx.gridPaths[0], "short.occv1", (b) => b.subarray(0, 20));
    expect(() => loadGrid(path)).toThrowError(/truncated .* at byte/);
  });

  it("rejects trailing bytes", () => {
    const path = mutate(fx.gridPaths[0], "long.occv1", (b) => {
      const grown = new Uint8Array(b.length + 3);
      grown.set(b);
      return grown;
    });
    expect(() => loadGrid(path)).toThrowError(/trailing bytes/);
  });

  it("rejects zero dimensions", () => {
    const path = mutate(fx.gridPaths[0], "zerodim.occv1", (b) => {
      const view = new DataView(b.buffer);
      view.setUint32(6 + 4, 0, true); // ny = 0
      return b;
    });
    expect(() => loadGrid(path)).toThrowError(/zero dimension/);
  });

  it("rejects overflowing dimensions", () => {
    const path = mutate(fx.gridPaths[0], "overflow.occv1", (b) => {
      const view = new DataView(b.buffer);
      for (let axis = 0; axis < 3; axis++) {
        view.setUint32(6 + 4 * axis, 1 << 20, true);
      }
      return b;
    });
    expect(() => loadGrid(path)).toThrowError(/overflow/);
  });

  it("rejects invalid labels", () => {
    const path = mutate(fx.gridPaths[0], "badlabel.occv1", (b) => {
      b[b.length - 1] = 99;
      return b;
    });
    expect(() => loadGrid(path)).toThrowError(/invalid label/);
  });

  it("rejects stack sidecar corruption", () => {
    const path = mutate(fx.stackPath, "badsidecar.mpit", (b) => {
      b[b.length - 2] = 0x21; // breaks the closing JSON structure
      return b;
    });
    expect(() => loadStack(path)).toThrowError(FormatError);
  });

  it("rejects a truncated stack", () => {
    const path = mutate(fx.stackPath, "short.mpit", (b) => b.subarray(0, b.length >> 1));
    expect(() => loadStack(path)).toThrowError(FormatError);
  });

  it("rejects negative weights", () => {
    const path = mutate(fx.weightMapPath, "neg.wmap", (b) => {
      const view = new DataView(b.buffer);
      view.setFloat32(16, -1.0, true); // first payload value
      return b;
    });
    expect(() => loadWeightMap(path)).toThrowError(/finite and >= 0/);
  });

  it("survives random corruption with only FormatErrors", () => {
    const good = new Uint8Array(readFileSync(fx.stackPath));
    let seed = 12345;
    const rand = () => {
      // xorshift is plenty for fuzz coverage
      seed ^= seed << 13;
      seed ^= seed >> 17;
      seed ^= seed << 5;
      return (seed >>> 0) / 0xffffffff;
    };
    for (let trial = 0; trial < 200; trial++) {
      let bytes = good.slice();
      if (rand() < 0.5) {
        bytes = bytes.subarray(0, Math.floor(rand() * bytes.length));
      } else {
        for (let k = 0; k < 1 + Math.floor(rand() * 5); k++) {
          bytes[Math.floor(rand() * bytes.length)] = Math.floor(rand() * 256);
        }
      }
      const path = join(fx.dir, "fuzz.mpit");
      writeFileSync(path, bytes);
      try {
        loadStack(path);
      } catch (e) {
        expect(e).toBeInstanceOf(FormatError);
      }
    }
  });
});
