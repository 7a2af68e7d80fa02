/** Vanilla 2-D NBody: per step, velocity update from pairwise forces, then a
 *  position update. Softening makes the self term contribute exactly zero. */
public class NBody {
    public static void step(double[] px, double[] py, double[] vx, double[] vy,
                            double[] m, int steps) {
        for (int t = 0; t < steps; t++) {
            for (int i = 0; i < px.length; i++) {
                double fx = 0.0;
                double fy = 0.0;
                for (int j = 0; j < px.length; j++) {
                    double dx = px[j] - px[i];
                    double dy = py[j] - py[i];
                    double r2 = dx * dx + dy * dy + 1.0E-9;
                    double inv = m[j] / (r2 * Math.sqrt(r2));
                    fx = fx + dx * inv;
                    fy = fy + dy * inv;
                }
                vx[i] = vx[i] + fx * 0.001;
                vy[i] = vy[i] + fy * 0.001;
            }
            for (int i = 0; i < px.length; i++) {
                px[i] = px[i] + vx[i] * 0.001;
                py[i] = py[i] + vy[i] * 0.001;
            }
        }
    }
}
