import { describe, expect, it } from "vitest";
import { ALL_KERNELS } from "../src/kernels.js";

/** Minimal structural reader: walks the pool and member tables so a
 *  malformed writer cannot slip through the fixture build. */
function structuralCheck(data: Uint8Array) {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let pos = 0;
  const u1 = () => view.getUint8(pos++);
  const u2 = () => {
    const v = view.getUint16(pos);
    pos += 2;
    return v;
  };
  const u4 = () => {
    const v = view.getUint32(pos);
    pos += 4;
    return v;
  };

  expect(u4()).toBe(0xcafebabe);
  u2(); // minor
  const major = u2();
  expect(major).toBe(49);

  const utf8: Record<number, string> = {};
  const classRefs: number[] = [];
  const poolCount = u2();
  let i = 1;
  while (i < poolCount) {
    const tag = u1();
    switch (tag) {
      case 1: {
        const len = u2();
        utf8[i] = new TextDecoder().decode(data.slice(pos, pos + len));
        pos += len;
        break;
      }
      case 3:
        pos += 4;
        break;
      case 6:
        pos += 8;
        i += 1; // wide entry takes two slots
        break;
      case 7:
        classRefs.push(u2());
        break;
      case 9:
      case 10:
      case 12:
        pos += 4;
        break;
      default:
        throw new Error(`unexpected pool tag ${tag} at entry ${i}`);
    }
    i += 1;
  }
  for (const ref of classRefs) expect(utf8[ref]).toBeDefined();

  u2(); // access
  u2(); // this
  u2(); // super
  expect(u2()).toBe(0); // interfaces
  expect(u2()).toBe(0); // fields
  const methods = u2();
  const names: string[] = [];
  for (let k = 0; k < methods; k++) {
    u2();
    names.push(utf8[u2()]);
    u2(); // descriptor
    const attrs = u2();
    for (let a = 0; a < attrs; a++) {
      u2();
      const len = u4();
      pos += len;
    }
  }
  const classAttrs = u2();
  expect(classAttrs).toBe(0);
  expect(pos).toBe(data.byteLength);
  return names;
}

describe("classfile writer output", () => {
  it("parses structurally with no trailing bytes", () => {
    for (const k of ALL_KERNELS) {
      const names = structuralCheck(k.build());
      expect(names.length).toBeGreaterThan(0);
    }
  });

  it("exposes the documented entry points", () => {
    const byName = Object.fromEntries(
      ALL_KERNELS.map((k) => [k.name, structuralCheck(k.build())]),
    );
    expect(byName.matmul).toContain("multiply");
    expect(byName.histogram).toContain("histogram");
    expect(byName.nbody).toContain("step");
    expect(byName.fft).toContain("transform64");
    expect(byName.fft).toContain("stage64");
    expect(byName.fft).toContain("bitrev64");
  });
});
