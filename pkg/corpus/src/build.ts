/**
 * Writes the kernel classfiles into fixtures/ and emits manifest.json with
 * the expected per-loop analysis verdicts (paths index nested loops in
 * source order: [0] outermost, [0,0] its first child, ...).
 */

import { mkdirSync, writeFileSync } from "fs";
import { join } from "path";
import { ALL_KERNELS } from "./kernels.js";

const root = process.cwd(); // run from corpus/ (npm run build)
const fixtures = join(root, "fixtures");

const manifest = {
  class_version: 49,
  kernels: [
    {
      name: "matmul",
      class: "MatMul",
      file: "MatMul.class",
      entry: { method: "multiply", desc: "([[D[[D[[DI)V" },
      expected: { type: "IP", parallel_levels: ["i", "j"] },
      loops: {
        multiply: [
          { path: [0], ivar: "i", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "IP" },
          { path: [0, 0, 0], ivar: "k", verdict: "DP", reduction: "+" },
        ],
      },
    },
    {
      name: "histogram",
      class: "Histogram",
      file: "Histogram.class",
      entry: { method: "histogram", desc: "([I[I)V" },
      expected: { type: "DP", reduction: "+" },
      loops: {
        histogram: [{ path: [0], ivar: "i", verdict: "DP", reduction: "+" }],
      },
    },
    {
      name: "nbody",
      class: "NBody",
      file: "NBody.class",
      entry: { method: "step", desc: "([D[D[D[D[DI)V" },
      expected: { type: "IP", note: "time loop serial, body loops IP, inner force loop is a + reduction" },
      loops: {
        step: [
          { path: [0], ivar: "t", verdict: "serial" },
          { path: [0, 0], ivar: "i", verdict: "IP" },
          { path: [0, 0, 0], ivar: "j", verdict: "DP", reduction: "+" },
          { path: [0, 1], ivar: "i2", verdict: "IP" },
        ],
      },
    },
    {
      name: "fft",
      class: "Fft",
      file: "Fft.class",
      entry: { method: "transform64", desc: "([D[D)V" },
      expected: { type: "IP", note: "per-stage butterfly (block) loop IP" },
      loops: {
        bitrev64: [
          { path: [0], ivar: "i", verdict: "serial" },
          { path: [0, 0], ivar: "(while)", verdict: "non_canonical" },
        ],
        stage2: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
        stage4: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
        stage8: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
        stage16: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
        stage32: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
        stage64: [
          { path: [0], ivar: "b", verdict: "IP" },
          { path: [0, 0], ivar: "j", verdict: "serial" },
        ],
      },
    },
  ],
};

mkdirSync(fixtures, { recursive: true });
for (const k of ALL_KERNELS) {
  const bytes = k.build();
  writeFileSync(join(fixtures, k.file), bytes);
  console.log(`${k.file}: ${bytes.length} bytes`);
}
writeFileSync(join(root, "manifest.json"), JSON.stringify(manifest, null, 2) + "\n");
console.log("manifest.json written");
