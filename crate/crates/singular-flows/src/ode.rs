//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4)).

/// Error-control and termination settings.
#[derive(Debug, Clone)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    HorizonReached,
    /// A caller-supplied guard fired (diagnostic carried along).
    GuardTriggered(String),
    /// The right-hand side failed to evaluate.
    RhsFailed(String),
    StepUnderflow,
    MaxStepsExceeded,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Accepted steps as (parameter, state), including the initial state.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub status: StopReason,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl Trajectory {
    pub fn last_state(&self) -> &(f64, Vec<f64>) {
        self.samples
            .last()
            .expect("trajectory holds at least the seed")
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/ds = rhs(y)` from `s0` to `s_end` with embedded 5(4) error
/// control. Every accepted step is recorded. `guard` is checked after each
/// accepted step and stops the run with a diagnostic when it returns `Some`.
pub fn integrate<F, G>(
    mut rhs: F,
    y0: &[f64],
    s0: f64,
    s_end: f64,
    opts: &IntegratorOptions,
    mut guard: G,
) -> Trajectory
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, String>,
    G: FnMut(&[f64]) -> Option<String>,
{
    let n = y0.len();
    let direction = if s_end >= s0 { 1.0 } else { -1.0 };
    let span = (s_end - s0).abs().max(1e-300);
    let mut samples = vec![(s0, y0.to_vec())];
    let mut accepted = 0;
    let mut rejected = 0;
    let mut rhs_evals = 0;

    let mut y = y0.to_vec();
    let mut s = s0;
    let mut k1 = match rhs(&y) {
        Ok(v) => v,
        Err(e) => {
            return Trajectory {
                samples,
                status: StopReason::RhsFailed(e),
                accepted,
                rejected,
                rhs_evals: 1,
            }
        }
    };
    rhs_evals += 1;

    // Conservative first step from the initial slope.
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let scale = 1.0 + crate::linalg::norm(&y);
        let slope = crate::linalg::norm(&k1).max(1e-10);
        (1e-3 * scale / slope).min(span / 10.0).max(1e-12)
    }) * direction;

    let status = 'outer: loop {
        if accepted + rejected >= opts.max_steps {
            break StopReason::MaxStepsExceeded;
        }
        if (s - s_end) * direction >= 0.0 {
            break StopReason::HorizonReached;
        }
        if (s + h - s_end) * direction > 0.0 {
            h = s_end - s;
        }
        if h.abs() < 1e-14 * (1.0 + s.abs()) {
            break StopReason::StepUnderflow;
        }

        let mut k = vec![k1.clone()];
        for stage in 0..6 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let coeff = A[stage][j];
                if coeff == 0.0 {
                    continue;
                }
                for i in 0..n {
                    arg[i] += h * coeff * kj[i];
                }
            }
            match rhs(&arg) {
                Ok(v) => k.push(v),
                Err(e) => break 'outer StopReason::RhsFailed(e),
            }
            rhs_evals += 1;
        }

        let mut y5 = y.clone();
        let mut err = vec![0.0; n];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y5[i] += h * B5[j] * kj[i];
                err[i] += h * (B5[j] - B4[j]) * kj[i];
            }
        }
        let mut err_norm = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err_norm += (err[i] / sc) * (err[i] / sc);
        }
        err_norm = (err_norm / n as f64).sqrt();

        if err_norm <= 1.0 {
            s += h;
            y = y5;
            // FSAL: the seventh stage is the first stage of the next step.
            k1 = k.pop().expect("seven stages");
            accepted += 1;
            samples.push((s, y.clone()));
            if let Some(reason) = guard(&y) {
                break StopReason::GuardTriggered(reason);
            }
            let factor = (0.9 * err_norm.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h *= factor;
        } else {
            rejected += 1;
            let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
            h *= factor;
        }
    };

    Trajectory {
        samples,
        status,
        accepted,
        rejected,
        rhs_evals,
    }
}
