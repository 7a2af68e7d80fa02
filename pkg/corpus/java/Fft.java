/** 64-point iterative radix-2 DIT transform. One method per stage length so
 *  every butterfly subscript has compile-time-constant strides; the committed
 *  fixtures bake the per-stage twiddle step into the constant pool. */
public class Fft {
    public static void transform64(double[] re, double[] im) {
        bitrev64(re, im);
        stage2(re, im);
        stage4(re, im);
        stage8(re, im);
        stage16(re, im);
        stage32(re, im);
        stage64(re, im);
    }

    static void bitrev64(double[] re, double[] im) {
        int j = 0;
        for (int i = 1; i < 64; i++) {
            int bit = 32;
            while (j >= bit) {
                j = j - bit;
                bit = bit / 2;
            }
            j = j + bit;
            if (i < j) {
                double tr = re[i];
                re[i] = re[j];
                re[j] = tr;
                double ti = im[i];
                im[i] = im[j];
                im[j] = ti;
            }
        }
    }

    static void stage(double[] re, double[] im, int len, int half, int blocks,
                      double cr, double ci) {
        for (int b = 0; b < blocks; b++) {
            double wr = 1.0;
            double wi = 0.0;
            for (int j = 0; j < half; j++) {
                double tr = re[b * len + j + half] * wr - im[b * len + j + half] * wi;
                double ti = re[b * len + j + half] * wi + im[b * len + j + half] * wr;
                re[b * len + j + half] = re[b * len + j] - tr;
                im[b * len + j + half] = im[b * len + j] - ti;
                re[b * len + j] = re[b * len + j] + tr;
                im[b * len + j] = im[b * len + j] + ti;
                double t2 = wr * cr - wi * ci;
                wi = wr * ci + wi * cr;
                wr = t2;
            }
        }
    }

    static void stage2(double[] re, double[] im) {
        stage(re, im, 2, 1, 32, Math.cos(-2.0 * Math.PI / 2), Math.sin(-2.0 * Math.PI / 2));
    }

    static void stage4(double[] re, double[] im) {
        stage(re, im, 4, 2, 16, Math.cos(-2.0 * Math.PI / 4), Math.sin(-2.0 * Math.PI / 4));
    }

    static void stage8(double[] re, double[] im) {
        stage(re, im, 8, 4, 8, Math.cos(-2.0 * Math.PI / 8), Math.sin(-2.0 * Math.PI / 8));
    }

    static void stage16(double[] re, double[] im) {
        stage(re, im, 16, 8, 4, Math.cos(-2.0 * Math.PI / 16), Math.sin(-2.0 * Math.PI / 16));
    }

    static void stage32(double[] re, double[] im) {
        stage(re, im, 32, 16, 2, Math.cos(-2.0 * Math.PI / 32), Math.sin(-2.0 * Math.PI / 32));
    }

    static void stage64(double[] re, double[] im) {
        stage(re, im, 64, 32, 1, Math.cos(-2.0 * Math.PI / 64), Math.sin(-2.0 * Math.PI / 64));
    }
}
