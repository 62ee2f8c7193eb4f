//! Dormand–Prince 5(4) step with its quartic dense output. Only autonomous
//! fields are needed: non-autonomous systems carry time as a component.

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Coefficients of `θ, θ², θ³, θ⁴` for each stage in the continuous extension.
const P: [[f64; 4]; 7] = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Step<const N: usize> {
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub err: [f64; N],
    pub k: [[f64; N]; 7],
}

impl<const N: usize> Step<N> {
    /// Slope at the end of the step (first stage of the next one).
    pub fn last_slope(&self) -> [f64; N] {
        self.k[6]
    }

    pub fn dense(&self, theta: f64) -> [f64; N] {
        let pw = [theta, theta * theta, theta * theta * theta, theta * theta * theta * theta];
        let mut out = self.y0;
        for (i, ki) in self.k.iter().enumerate() {
            let w: f64 = (0..4).map(|j| P[i][j] * pw[j]).sum();
            if w != 0.0 {
                for c in 0..N {
                    out[c] += self.h * w * ki[c];
                }
            }
        }
        out
    }
}

/// One step from `y0` with first-stage slope `k1`.
pub(crate) fn dopri_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y0: [f64; N], k1: [f64; N], h: f64) -> Step<N> {
    let mut k = [[0.0; N]; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut y = y0;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for c in 0..N {
                    y[c] += h * a * kj[c];
                }
            }
        }
        k[s] = f(&y);
    }
    // FSAL: the seventh stage is evaluated at the fifth-order solution
    let mut y1 = y0;
    for j in 0..6 {
        for c in 0..N {
            y1[c] += h * A[6][j] * k[j][c];
        }
    }
    let mut err = [0.0; N];
    for (j, kj) in k.iter().enumerate() {
        for c in 0..N {
            err[c] += h * E[j] * kj[c];
        }
    }
    Step { h, y0, y1, err, k }
}
