//! Derivative-free minimization (Nelder-Mead simplex).

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below
    /// `f_tolerance * (|f_best| + f_tolerance)`.
    pub f_tolerance: f64,
    /// ...and every vertex lies within this distance of the best one.
    pub x_tolerance: f64,
    /// Rebuild the simplex around the optimum this many times after
    /// convergence; guards against collapsed simplices.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            f_tolerance: 1e-14,
            x_tolerance: 1e-10,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `start`, with initial simplex edges `steps`.
///
/// Non-finite objective values are treated as `+∞`, so the simplex retreats
/// from regions where the objective is undefined.
pub fn nelder_mead<F>(f: F, start: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = run(&eval, start, steps, opts);
    for _ in 0..opts.restarts {
        let again = run(&eval, &best.point, steps, opts);
        let improved = again.value < best.value;
        let total = best.iterations + again.iterations;
        if improved {
            best = again;
        }
        best.iterations = total;
        if !improved {
            break;
        }
    }
    best
}

fn run<F>(f: &F, start: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    let point = |centroid: &[f64], worst: &[f64], coef: f64| -> Vec<f64> {
        centroid
            .iter()
            .zip(worst)
            .map(|(c, w)| c + coef * (c - w))
            .collect()
    };

    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if values[0].is_finite()
            && spread <= opts.f_tolerance * (values[0].abs() + opts.f_tolerance)
            && size <= opts.x_tolerance
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let reflected = point(&centroid, &simplex[n], REFLECT);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = point(&centroid, &simplex[n], EXPAND);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        // outside contraction when the reflection beat the worst vertex
        let coef = if fr < values[n] { CONTRACT } else { -CONTRACT };
        let candidate = point(&centroid, &simplex[n], coef);
        let fc = f(&candidate);
        if fc < values[n].min(fr) {
            simplex[n] = candidate;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + SHRINK * (x - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is non-empty");
    Minimum {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}
