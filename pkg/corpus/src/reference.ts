/** Plain TypeScript reference implementations of the benchmark kernels. */

export function matmulRef(a: number[][], b: number[][], c: number[][], n: number): void {
  for (let i = 0; i < n; i++)
    for (let j = 0; j < n; j++)
      for (let k = 0; k < n; k++)
        c[i][j] += a[i][k] * b[k][j];
}

export function histogramRef(data: number[], hist: number[]): void {
  const m = hist.length;
  for (let i = 0; i < data.length; i++) {
    const d = data[i];
    const b = d - Math.trunc(d / m) * m;
    hist[b] += 1;
  }
}

const EPS = 1.0e-9;
const DT = 0.001;

export function nbodyRef(px: number[], py: number[], vx: number[], vy: number[], m: number[], steps: number): void {
  const n = px.length;
  for (let t = 0; t < steps; t++) {
    for (let i = 0; i < n; i++) {
      let fx = 0.0;
      let fy = 0.0;
      for (let j = 0; j < n; j++) {
        const dx = px[j] - px[i];
        const dy = py[j] - py[i];
        const r2 = dx * dx + dy * dy + EPS;
        const inv = m[j] / (r2 * Math.sqrt(r2));
        fx += dx * inv;
        fy += dy * inv;
      }
      vx[i] += fx * DT;
      vy[i] += fy * DT;
    }
    for (let i = 0; i < n; i++) {
      px[i] += vx[i] * DT;
      py[i] += vy[i] * DT;
    }
  }
}

/** Mirrors the bytecode structure: bit reversal, then stages of length 2..64. */
export function fftRef(re: number[], im: number[]): void {
  const n = 64;
  let j = 0;
  for (let i = 1; i < n; i++) {
    let bit = n / 2;
    while (j >= bit) {
      j -= bit;
      bit = Math.trunc(bit / 2);
    }
    j += bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len *= 2) {
    const half = len / 2;
    const cr = Math.cos(-2 * Math.PI / len);
    const ci = Math.sin(-2 * Math.PI / len);
    for (let b = 0; b < n / len; b++) {
      let wr = 1.0;
      let wi = 0.0;
      for (let k = 0; k < half; k++) {
        const p = b * len + k;
        const q = p + half;
        const tr = re[q] * wr - im[q] * wi;
        const ti = re[q] * wi + im[q] * wr;
        re[q] = re[p] - tr;
        im[q] = im[p] - ti;
        re[p] = re[p] + tr;
        im[p] = im[p] + ti;
        const t2 = wr * cr - wi * ci;
        wi = wr * ci + wi * cr;
        wr = t2;
      }
    }
  }
}

/** O(n^2) DFT used as the independent oracle for fftRef. */
export function dftRef(re: number[], im: number[]): { re: number[]; im: number[] } {
  const n = re.length;
  const outRe = new Array(n).fill(0);
  const outIm = new Array(n).fill(0);
  for (let k = 0; k < n; k++) {
    for (let t = 0; t < n; t++) {
      const ang = (-2 * Math.PI * k * t) / n;
      outRe[k] += re[t] * Math.cos(ang) - im[t] * Math.sin(ang);
      outIm[k] += re[t] * Math.sin(ang) + im[t] * Math.cos(ang);
    }
  }
  return { re: outRe, im: outIm };
}
