/** Bin counting with a data-dependent index; modulo spelled with div/mul/sub
 *  so the bytecode stays inside the analyzer's opcode subset. */
public class Histogram {
    public static void histogram(int[] data, int[] hist) {
        int m = hist.length;
        for (int i = 0; i < data.length; i++) {
            int d = data[i];
            int b = d - (d / m) * m;
            hist[b] = hist[b] + 1;
        }
    }
}
