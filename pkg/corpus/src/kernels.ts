/**
 * Benchmark kernels assembled as classfiles: matrix multiplication, histogram,
 * NBody, and an iterative radix-2 FFT (64 points, one method per stage so all
 * butterfly subscripts stay integer-affine).
 *
 * Loop shape matches javac output: init store, forward goto to a bottom test,
 * body, iinc, compare-and-branch back to the body.
 */

import { ACC_PUBLIC, ACC_STATIC, Asm, buildClass, MethodSpec } from "./classfile.js";

const PS = ACC_PUBLIC | ACC_STATIC;

function forLoop(a: Asm, ivar: number, init: () => void, bound: () => void, body: () => void, step = 1) {
  init();
  a.istore(ivar);
  const cond = a.newLabel();
  const top = a.newLabel();
  a.goto_(cond);
  a.place(top);
  body();
  a.iinc(ivar, step);
  a.place(cond);
  a.iload(ivar);
  bound();
  a.if_icmplt(top);
}

// ---------------------------------------------------------------------------
// MatMul.multiply([[D[[D[[DI)V  --  c[i][j] += a[i][k] * b[k][j]
// slots: a=0 b=1 c=2 n=3 i=4 j=5 k=6
export function matmul(): Uint8Array {
  const body = (a: Asm) => {
    forLoop(a, 4, () => a.iconst(0), () => a.iload(3), () => {
      forLoop(a, 5, () => a.iconst(0), () => a.iload(3), () => {
        forLoop(a, 6, () => a.iconst(0), () => a.iload(3), () => {
          a.aload(2); a.iload(4); a.aaload(); a.iload(5);         // c[i], j
          a.aload(2); a.iload(4); a.aaload(); a.iload(5); a.daload(); // c[i][j]
          a.aload(0); a.iload(4); a.aaload(); a.iload(6); a.daload(); // a[i][k]
          a.aload(1); a.iload(6); a.aaload(); a.iload(5); a.daload(); // b[k][j]
          a.dmul();
          a.dadd();
          a.dastore();
        });
      });
    });
    a.ret();
  };
  return buildClass("MatMul", [
    { name: "multiply", desc: "([[D[[D[[DI)V", access: PS, body, argSlots: 4 },
  ]);
}

// ---------------------------------------------------------------------------
// Histogram.histogram([I[I)V -- hist[d mod hist.length] += 1, mod via d-(d/m)*m
// slots: data=0 hist=1 i=2 m=3 d=4 b=5
export function histogram(): Uint8Array {
  const body = (a: Asm) => {
    a.aload(1); a.arraylength(); a.istore(3);                       // m = hist.length
    forLoop(a, 2, () => a.iconst(0), () => { a.aload(0); a.arraylength(); }, () => {
      a.aload(0); a.iload(2); a.iaload(); a.istore(4);              // d = data[i]
      a.iload(4); a.iload(4); a.iload(3); a.idiv(); a.iload(3); a.imul(); a.isub();
      a.istore(5);                                                  // b = d - (d/m)*m
      a.aload(1); a.iload(5);
      a.aload(1); a.iload(5); a.iaload();
      a.iconst(1); a.iadd();
      a.iastore();                                                  // hist[b] = hist[b] + 1
    });
    a.ret();
  };
  return buildClass("Histogram", [
    { name: "histogram", desc: "([I[I)V", access: PS, body, argSlots: 2 },
  ]);
}

// ---------------------------------------------------------------------------
// NBody.step([D[D[D[D[DI)V -- velocity update from pairwise forces, then
// position update; self-interaction contributes zero via softening.
// slots: px=0 py=1 vx=2 vy=3 m=4 steps=5 t=6 i=7 fx=8 fy=10 j=12 dx=13 dy=15 r2=17 inv=19 i2=21
const EPS = 1.0e-9;
const DT = 0.001;

export function nbody(): Uint8Array {
  const body = (a: Asm) => {
    forLoop(a, 6, () => a.iconst(0), () => a.iload(5), () => {
      forLoop(a, 7, () => a.iconst(0), () => { a.aload(0); a.arraylength(); }, () => {
        a.dconst(0); a.dstore(8);                                  // fx = 0
        a.dconst(0); a.dstore(10);                                 // fy = 0
        forLoop(a, 12, () => a.iconst(0), () => { a.aload(0); a.arraylength(); }, () => {
          a.aload(0); a.iload(12); a.daload();
          a.aload(0); a.iload(7); a.daload();
          a.dsub(); a.dstore(13);                                  // dx = px[j] - px[i]
          a.aload(1); a.iload(12); a.daload();
          a.aload(1); a.iload(7); a.daload();
          a.dsub(); a.dstore(15);                                  // dy = py[j] - py[i]
          a.dload(13); a.dload(13); a.dmul();
          a.dload(15); a.dload(15); a.dmul();
          a.dadd(); a.dconst(EPS); a.dadd(); a.dstore(17);         // r2 = dx*dx + dy*dy + eps
          a.aload(4); a.iload(12); a.daload();
          a.dload(17);
          a.dload(17); a.invokestatic("java/lang/Math", "sqrt", "(D)D", 0);
          a.dmul(); a.ddiv(); a.dstore(19);                        // inv = m[j] / (r2*sqrt(r2))
          a.dload(8); a.dload(13); a.dload(19); a.dmul(); a.dadd(); a.dstore(8);
          a.dload(10); a.dload(15); a.dload(19); a.dmul(); a.dadd(); a.dstore(10);
        });
        a.aload(2); a.iload(7);
        a.aload(2); a.iload(7); a.daload();
        a.dload(8); a.dconst(DT); a.dmul(); a.dadd(); a.dastore(); // vx[i] += fx*dt
        a.aload(3); a.iload(7);
        a.aload(3); a.iload(7); a.daload();
        a.dload(10); a.dconst(DT); a.dmul(); a.dadd(); a.dastore();
      });
      forLoop(a, 21, () => a.iconst(0), () => { a.aload(0); a.arraylength(); }, () => {
        a.aload(0); a.iload(21);
        a.aload(0); a.iload(21); a.daload();
        a.aload(2); a.iload(21); a.daload();
        a.dconst(DT); a.dmul(); a.dadd(); a.dastore();             // px[i2] += vx[i2]*dt
        a.aload(1); a.iload(21);
        a.aload(1); a.iload(21); a.daload();
        a.aload(3); a.iload(21); a.daload();
        a.dconst(DT); a.dmul(); a.dadd(); a.dastore();
      });
    });
    a.ret();
  };
  return buildClass("NBody", [
    { name: "step", desc: "([D[D[D[D[DI)V", access: PS, body, argSlots: 6 },
  ]);
}

// ---------------------------------------------------------------------------
// Fft: 64-point iterative radix-2 DIT. transform64 = bitrev64 then one method
// per stage length; constant strides keep butterfly subscripts affine.
const N = 64;

// slots: re=0 im=1 b=2 j=3 wr=4 wi=6 tr=8 ti=10 t2=12
function stageBody(len: number): (a: Asm) => void {
  const half = len / 2;
  const blocks = N / len;
  const cr = Math.cos(-2 * Math.PI / len);
  const ci = Math.sin(-2 * Math.PI / len);
  return (a: Asm) => {
    const p = () => { a.iload(2); a.iconst(len); a.imul(); a.iload(3); a.iadd(); };
    const q = () => { p(); a.iconst(half); a.iadd(); };
    forLoop(a, 2, () => a.iconst(0), () => a.iconst(blocks), () => {
      a.dconst(1); a.dstore(4);                                    // wr = 1
      a.dconst(0); a.dstore(6);                                    // wi = 0
      forLoop(a, 3, () => a.iconst(0), () => a.iconst(half), () => {
        a.aload(0); q(); a.daload(); a.dload(4); a.dmul();
        a.aload(1); q(); a.daload(); a.dload(6); a.dmul();
        a.dsub(); a.dstore(8);                                     // tr = re[q]*wr - im[q]*wi
        a.aload(0); q(); a.daload(); a.dload(6); a.dmul();
        a.aload(1); q(); a.daload(); a.dload(4); a.dmul();
        a.dadd(); a.dstore(10);                                    // ti = re[q]*wi + im[q]*wr
        a.aload(0); q();
        a.aload(0); p(); a.daload(); a.dload(8); a.dsub();
        a.dastore();                                               // re[q] = re[p] - tr
        a.aload(1); q();
        a.aload(1); p(); a.daload(); a.dload(10); a.dsub();
        a.dastore();                                               // im[q] = im[p] - ti
        a.aload(0); p();
        a.aload(0); p(); a.daload(); a.dload(8); a.dadd();
        a.dastore();                                               // re[p] += tr
        a.aload(1); p();
        a.aload(1); p(); a.daload(); a.dload(10); a.dadd();
        a.dastore();                                               // im[p] += ti
        a.dload(4); a.dconst(cr); a.dmul();
        a.dload(6); a.dconst(ci); a.dmul();
        a.dsub(); a.dstore(12);                                    // t2 = wr*cr - wi*ci
        a.dload(4); a.dconst(ci); a.dmul();
        a.dload(6); a.dconst(cr); a.dmul();
        a.dadd(); a.dstore(6);                                     // wi = wr*ci + wi*cr
        a.dload(12); a.dstore(4);                                  // wr = t2
      });
    });
    a.ret();
  };
}

// slots: re=0 im=1 j=2 i=3 bit=4 tr=5 ti=7
function bitrevBody(a: Asm): void {
  a.iconst(0); a.istore(2);                                        // j = 0
  forLoop(a, 3, () => a.iconst(1), () => a.iconst(N), () => {
    a.iconst(N / 2); a.istore(4);                                  // bit = N/2
    {
      const cond = a.newLabel();
      const top = a.newLabel();
      a.goto_(cond);
      a.place(top);
      a.iload(2); a.iload(4); a.isub(); a.istore(2);               // j -= bit
      a.iload(4); a.iconst(2); a.idiv(); a.istore(4);              // bit /= 2
      a.place(cond);
      a.iload(2); a.iload(4);
      a.if_icmpge(top);                                            // while (j >= bit)
    }
    a.iload(2); a.iload(4); a.iadd(); a.istore(2);                 // j += bit
    const skip = a.newLabel();
    a.iload(3); a.iload(2);
    a.if_icmpge(skip);                                             // if (i < j) swap
    a.aload(0); a.iload(3); a.daload(); a.dstore(5);
    a.aload(0); a.iload(3); a.aload(0); a.iload(2); a.daload(); a.dastore();
    a.aload(0); a.iload(2); a.dload(5); a.dastore();
    a.aload(1); a.iload(3); a.daload(); a.dstore(7);
    a.aload(1); a.iload(3); a.aload(1); a.iload(2); a.daload(); a.dastore();
    a.aload(1); a.iload(2); a.dload(7); a.dastore();
    a.place(skip);
  });
  a.ret();
}

export function fft(): Uint8Array {
  const stages = [2, 4, 8, 16, 32, 64];
  const methods: MethodSpec[] = [
    {
      name: "transform64",
      desc: "([D[D)V",
      access: PS,
      argSlots: 2,
      body: (a: Asm) => {
        a.aload(0); a.aload(1); a.invokestatic("Fft", "bitrev64", "([D[D)V", -2);
        for (const len of stages) {
          a.aload(0); a.aload(1);
          a.invokestatic("Fft", `stage${len}`, "([D[D)V", -2);
        }
        a.ret();
      },
    },
    { name: "bitrev64", desc: "([D[D)V", access: PS, argSlots: 2, body: bitrevBody },
    ...stages.map((len) => ({
      name: `stage${len}`,
      desc: "([D[D)V",
      access: PS,
      argSlots: 2,
      body: stageBody(len),
    })),
  ];
  return buildClass("Fft", methods);
}

export const ALL_KERNELS: { name: string; file: string; build: () => Uint8Array }[] = [
  { name: "matmul", file: "MatMul.class", build: matmul },
  { name: "histogram", file: "Histogram.class", build: histogram },
  { name: "nbody", file: "NBody.class", build: nbody },
  { name: "fft", file: "Fft.class", build: fft },
];
