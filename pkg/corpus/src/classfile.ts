/**
 * Minimal JVM classfile writer: constant pool, method assembly with labels,
 * big-endian serialization. Targets class version 49.0 (no StackMapTable).
 */

const MAGIC = 0xcafebabe;
const MAJOR = 49;

export const ACC_PUBLIC = 0x0001;
export const ACC_STATIC = 0x0008;
export const ACC_SUPER = 0x0020;

enum Tag {
  Utf8 = 1,
  Integer = 3,
  Double = 6,
  Class = 7,
  Fieldref = 9,
  Methodref = 10,
  NameAndType = 12,
}

type Entry =
  | { tag: Tag.Utf8; bytes: Uint8Array }
  | { tag: Tag.Integer; raw: Uint8Array }
  | { tag: Tag.Double; raw: Uint8Array }
  | { tag: Tag.Class; name: number }
  | { tag: Tag.Fieldref | Tag.Methodref; cls: number; nat: number }
  | { tag: Tag.NameAndType; name: number; desc: number };

export class Pool {
  entries: (Entry | null)[] = [null];
  private index = new Map<string, number>();

  private intern(key: string, make: () => Entry, wide = false): number {
    const hit = this.index.get(key);
    if (hit !== undefined) return hit;
    const at = this.entries.length;
    this.entries.push(make());
    if (wide) this.entries.push(null);
    this.index.set(key, at);
    return at;
  }

  utf8(s: string): number {
    return this.intern(`u:${s}`, () => ({ tag: Tag.Utf8, bytes: new TextEncoder().encode(s) }));
  }

  cls(name: string): number {
    const n = this.utf8(name);
    return this.intern(`c:${name}`, () => ({ tag: Tag.Class, name: n }));
  }

  nat(name: string, desc: string): number {
    const n = this.utf8(name);
    const d = this.utf8(desc);
    return this.intern(`n:${name}:${desc}`, () => ({ tag: Tag.NameAndType, name: n, desc: d }));
  }

  methodref(owner: string, name: string, desc: string): number {
    const c = this.cls(owner);
    const nt = this.nat(name, desc);
    return this.intern(`m:${owner}.${name}${desc}`, () => ({ tag: Tag.Methodref, cls: c, nat: nt }));
  }

  fieldref(owner: string, name: string, desc: string): number {
    const c = this.cls(owner);
    const nt = this.nat(name, desc);
    return this.intern(`f:${owner}.${name}:${desc}`, () => ({ tag: Tag.Fieldref, cls: c, nat: nt }));
  }

  int(v: number): number {
    const raw = new Uint8Array(4);
    new DataView(raw.buffer).setInt32(0, v | 0);
    return this.intern(`i:${v | 0}`, () => ({ tag: Tag.Integer, raw }));
  }

  double(v: number): number {
    const raw = new Uint8Array(8);
    new DataView(raw.buffer).setFloat64(0, v);
    const bits = Array.from(raw).join(",");
    return this.intern(`d:${bits}`, () => ({ tag: Tag.Double, raw }), true);
  }

  write(out: Sink): void {
    out.u2(this.entries.length);
    for (const e of this.entries) {
      if (e === null) continue;
      out.u1(e.tag);
      switch (e.tag) {
        case Tag.Utf8:
          out.u2(e.bytes.length);
          out.bytes(e.bytes);
          break;
        case Tag.Integer:
        case Tag.Double:
          out.bytes(e.raw);
          break;
        case Tag.Class:
          out.u2(e.name);
          break;
        case Tag.NameAndType:
          out.u2(e.name);
          out.u2(e.desc);
          break;
        default:
          out.u2(e.cls);
          out.u2(e.nat);
      }
    }
  }
}

export class Sink {
  private buf: number[] = [];

  u1(v: number) {
    this.buf.push(v & 0xff);
  }
  u2(v: number) {
    this.buf.push((v >>> 8) & 0xff, v & 0xff);
  }
  u4(v: number) {
    this.buf.push((v >>> 24) & 0xff, (v >>> 16) & 0xff, (v >>> 8) & 0xff, v & 0xff);
  }
  bytes(b: Uint8Array | number[]) {
    for (const x of b) this.buf.push(x & 0xff);
  }
  data(): Uint8Array {
    return Uint8Array.from(this.buf);
  }
  get length(): number {
    return this.buf.length;
  }
}

export class Label {
  at = -1; // bytecode offset once placed
  refs: number[] = []; // positions of 2-byte deltas to patch (branch opcode offset stored alongside)
}

/**
 * Tiny assembler for the opcode subset the kernels use. Tracks operand stack
 * depth (in slots) and the highest local slot to fill in max_stack/max_locals.
 * All branch/join points in the emitted shapes sit at stack depth 0.
 */
export class Asm {
  code: number[] = [];
  private patches: { pos: number; opcodeAt: number; label: Label }[] = [];
  private depth = 0;
  maxStack = 0;
  maxLocals = 0;

  constructor(private pool: Pool, argSlots: number) {
    this.maxLocals = argSlots;
  }

  private bump(delta: number) {
    this.depth += delta;
    if (this.depth < 0) throw new Error(`stack underflow at ${this.code.length}`);
    if (this.depth > this.maxStack) this.maxStack = this.depth;
  }

  private touch(slot: number, width: number) {
    if (slot + width > this.maxLocals) this.maxLocals = slot + width;
  }

  private op(b: number, delta: number) {
    this.code.push(b);
    this.bump(delta);
  }

  newLabel(): Label {
    return new Label();
  }

  place(l: Label) {
    l.at = this.code.length;
    this.depth = 0; // every label in our shapes is a statement boundary
  }

  private branchTo(opcode: number, delta: number, l: Label) {
    const at = this.code.length;
    this.op(opcode, delta);
    this.patches.push({ pos: this.code.length, opcodeAt: at, label: l });
    this.code.push(0, 0);
  }

  // constants
  iconst(v: number) {
    if (v >= -1 && v <= 5) this.op(0x03 + v, +1);
    else if (v >= -128 && v <= 127) {
      this.op(0x10, +1);
      this.code.push(v & 0xff);
    } else if (v >= -32768 && v <= 32767) {
      this.op(0x11, +1);
      this.code.push((v >> 8) & 0xff, v & 0xff);
    } else {
      const idx = this.pool.int(v);
      if (idx <= 255) {
        this.op(0x12, +1);
        this.code.push(idx);
      } else {
        this.op(0x13, +1);
        this.code.push((idx >> 8) & 0xff, idx & 0xff);
      }
    }
  }

  dconst(v: number) {
    if (Object.is(v, 0.0)) this.op(0x0e, +2);
    else if (v === 1.0) this.op(0x0f, +2);
    else {
      const idx = this.pool.double(v);
      this.op(0x14, +2);
      this.code.push((idx >> 8) & 0xff, idx & 0xff);
    }
  }

  // locals
  private loadStore(base: number, shortBase: number, slot: number, delta: number, width: number) {
    this.touch(slot, width);
    if (slot <= 3) this.op(shortBase + slot, delta);
    else {
      this.op(base, delta);
      this.code.push(slot);
    }
  }

  iload(s: number) {
    this.loadStore(0x15, 0x1a, s, +1, 1);
  }
  dload(s: number) {
    this.loadStore(0x18, 0x26, s, +2, 2);
  }
  aload(s: number) {
    this.loadStore(0x19, 0x2a, s, +1, 1);
  }
  istore(s: number) {
    this.loadStore(0x36, 0x3b, s, -1, 1);
  }
  dstore(s: number) {
    this.loadStore(0x39, 0x47, s, -2, 2);
  }
  astore(s: number) {
    this.loadStore(0x3a, 0x4b, s, -1, 1);
  }
  iinc(slot: number, d: number) {
    this.touch(slot, 1);
    this.op(0x84, 0);
    this.code.push(slot, d & 0xff);
  }

  // arrays
  iaload() {
    this.op(0x2e, -1);
  }
  daload() {
    this.op(0x31, 0);
  }
  aaload() {
    this.op(0x32, -1);
  }
  iastore() {
    this.op(0x4f, -3);
  }
  dastore() {
    this.op(0x52, -4);
  }
  arraylength() {
    this.op(0xbe, 0);
  }

  // arithmetic
  iadd() {
    this.op(0x60, -1);
  }
  isub() {
    this.op(0x64, -1);
  }
  imul() {
    this.op(0x68, -1);
  }
  idiv() {
    this.op(0x6c, -1);
  }
  dadd() {
    this.op(0x63, -2);
  }
  dsub() {
    this.op(0x67, -2);
  }
  dmul() {
    this.op(0x6b, -2);
  }
  ddiv() {
    this.op(0x6f, -2);
  }

  // control flow
  goto_(l: Label) {
    this.branchTo(0xa7, 0, l);
    this.depth = 0;
  }
  if_icmplt(l: Label) {
    this.branchTo(0xa1, -2, l);
  }
  if_icmpge(l: Label) {
    this.branchTo(0xa2, -2, l);
  }
  ret() {
    this.op(0xb1, 0);
  }

  invokestatic(owner: string, name: string, desc: string, delta: number) {
    const idx = this.pool.methodref(owner, name, desc);
    this.op(0xb8, delta);
    this.code.push((idx >> 8) & 0xff, idx & 0xff);
  }

  finish(): Uint8Array {
    for (const p of this.patches) {
      if (p.label.at < 0) throw new Error("unplaced label");
      const delta = p.label.at - p.opcodeAt;
      this.code[p.pos] = (delta >> 8) & 0xff;
      this.code[p.pos + 1] = delta & 0xff;
    }
    return Uint8Array.from(this.code);
  }
}

export interface MethodSpec {
  name: string;
  desc: string;
  access: number;
  body: (a: Asm) => void;
  argSlots: number;
}

export function buildClass(name: string, methods: MethodSpec[]): Uint8Array {
  const pool = new Pool();
  const codeAttr = pool.utf8("Code");
  const thisCls = pool.cls(name);
  const superCls = pool.cls("java/lang/Object");

  const assembled = methods.map((m) => {
    const a = new Asm(pool, m.argSlots);
    m.body(a);
    return {
      nameIdx: pool.utf8(m.name),
      descIdx: pool.utf8(m.desc),
      access: m.access,
      code: a.finish(),
      maxStack: a.maxStack,
      maxLocals: a.maxLocals,
    };
  });

  const out = new Sink();
  out.u4(MAGIC);
  out.u2(0); // minor
  out.u2(MAJOR);
  pool.write(out);
  out.u2(ACC_PUBLIC | ACC_SUPER);
  out.u2(thisCls);
  out.u2(superCls);
  out.u2(0); // interfaces
  out.u2(0); // fields
  out.u2(assembled.length);
  for (const m of assembled) {
    out.u2(m.access);
    out.u2(m.nameIdx);
    out.u2(m.descIdx);
    out.u2(1); // one attribute: Code
    out.u2(codeAttr);
    out.u4(2 + 2 + 4 + m.code.length + 2 + 2);
    out.u2(m.maxStack);
    out.u2(m.maxLocals);
    out.u4(m.code.length);
    out.bytes(m.code);
    out.u2(0); // exception table
    out.u2(0); // code attributes
  }
  out.u2(0); // class attributes
  return out.data();
}
