/** Timing harness for the JVM backend: runs a kernel repeatedly and prints
 *  milliseconds per run so the toolchain can record measured S and E.
 *
 *  Usage: java Runner matmul <n> <repeats>
 *         java Runner histogram <values> <repeats>
 *  Drop the emitted parallel classes on the classpath to time those instead.
 */
public class Runner {
    public static void main(String[] args) {
        String kernel = args.length > 0 ? args[0] : "matmul";
        int n = args.length > 1 ? Integer.parseInt(args[1]) : 512;
        int repeats = args.length > 2 ? Integer.parseInt(args[2]) : 5;
        java.util.Random rng = new java.util.Random(42);

        for (int r = 0; r < repeats; r++) {
            long t0;
            if (kernel.equals("matmul")) {
                double[][] a = randomMatrix(rng, n);
                double[][] b = randomMatrix(rng, n);
                double[][] c = new double[n][n];
                t0 = System.nanoTime();
                MatMul.multiply(a, b, c, n);
            } else if (kernel.equals("histogram")) {
                int[] data = new int[n];
                for (int i = 0; i < n; i++) data[i] = rng.nextInt(1 << 16);
                int[] hist = new int[64];
                t0 = System.nanoTime();
                Histogram.histogram(data, hist);
            } else {
                throw new IllegalArgumentException("unknown kernel " + kernel);
            }
            long dt = System.nanoTime() - t0;
            System.out.println(kernel + "," + n + "," + (dt / 1.0e6));
        }
    }

    static double[][] randomMatrix(java.util.Random rng, int n) {
        double[][] m = new double[n][n];
        for (int i = 0; i < n; i++)
            for (int j = 0; j < n; j++)
                m[i][j] = rng.nextDouble();
        return m;
    }
}
