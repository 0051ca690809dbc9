use crate::error::{MofError, Result};
use crate::scalar::Real;

/// Least-squares fit of `c + e^{−γτ}(a cos ωτ + b sin ωτ)`, τ = t − t0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedFit<T = f64> {
    pub t0: T,
    pub offset: T,
    pub amplitude: T,
    pub phase: T,
    pub decay: T,
    pub omega: T,
    pub rms_residual: T,
}

fn solve_small<T: Real, const N: usize>(mut a: [[T; N]; N], mut b: [T; N]) -> Option<[T; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::min_positive_value() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for k in row + 1..N {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

struct Data<'a, T> {
    tau: Vec<T>,
    z: &'a [T],
}

impl<T: Real> Data<'_, T> {
    /// Linear coefficients (c, a, b) for fixed (γ, ω), and the residual sum of squares.
    fn project(&self, gamma: T, omega: T) -> Option<([T; 3], T)> {
        let mut ata = [[T::zero(); 3]; 3];
        let mut atz = [T::zero(); 3];
        for (&t, &z) in self.tau.iter().zip(self.z) {
            let e = (-gamma * t).exp();
            let (s, c) = (omega * t).sin_cos();
            let row = [T::one(), e * c, e * s];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] = ata[i][j] + row[i] * row[j];
                }
                atz[i] = atz[i] + row[i] * z;
            }
        }
        let x = solve_small(ata, atz)?;
        Some((x, self.rss(&[x[0], x[1], x[2], gamma, omega])))
    }

    fn rss(&self, p: &[T; 5]) -> T {
        self.tau
            .iter()
            .zip(self.z)
            .map(|(&t, &z)| {
                let e = (-p[3] * t).exp();
                let (s, c) = (p[4] * t).sin_cos();
                let r = z - p[0] - e * (p[1] * c + p[2] * s);
                r * r
            })
            .sum()
    }
}

/// Fit a damped sinusoid with offset; initial frequency from zero crossings.
pub fn fit_damped_oscillation<T: Real>(times: &[T], z: &[T]) -> Result<DampedFit<T>> {
    if times.len() != z.len() || times.len() < 16 {
        return Err(MofError::Fit("need at least 16 samples of equal length".into()));
    }
    let t0 = times[0];
    let data = Data { tau: times.iter().map(|&t| t - t0).collect(), z };
    let n = T::from_usize_lossy(z.len());
    let mean = z.iter().copied().sum::<T>() / n;
    let mut crossings = Vec::new();
    for i in 1..z.len() {
        let (a, b) = (z[i - 1] - mean, z[i] - mean);
        if (a < T::zero()) != (b < T::zero()) {
            let f = a / (a - b);
            crossings.push(data.tau[i - 1] + f * (data.tau[i] - data.tau[i - 1]));
        }
    }
    if crossings.len() < 3 {
        return Err(MofError::Fit("fewer than three zero crossings".into()));
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    let w_guess = T::PI() * T::from_usize_lossy(crossings.len() - 1) / span;

    // coarse scan of the projected residual around the guess
    let mut best = (w_guess, T::infinity());
    for i in 0..=80 {
        let w = w_guess * (T::lit(0.9) + T::lit(0.2) * T::from_usize_lossy(i) / T::lit(80.0));
        if let Some((_, r)) = data.project(T::zero(), w) {
            if r < best.1 {
                best = (w, r);
            }
        }
    }
    let (lin, _) = data.project(T::zero(), best.0).ok_or_else(|| MofError::Fit("singular projection".into()))?;
    let mut p = [lin[0], lin[1], lin[2], T::zero(), best.0];
    let mut rss = data.rss(&p);
    let mut mu = T::lit(1e-6);
    for _ in 0..300 {
        let mut jtj = [[T::zero(); 5]; 5];
        let mut jtr = [T::zero(); 5];
        for (&t, &zz) in data.tau.iter().zip(data.z) {
            let e = (-p[3] * t).exp();
            let (s, c) = (p[4] * t).sin_cos();
            let osc = p[1] * c + p[2] * s;
            let r = zz - p[0] - e * osc;
            let row = [T::one(), e * c, e * s, -t * e * osc, t * e * (-p[1] * s + p[2] * c)];
            for i in 0..5 {
                for j in 0..5 {
                    jtj[i][j] = jtj[i][j] + row[i] * row[j];
                }
                jtr[i] = jtr[i] + row[i] * r;
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = row[i] * (T::one() + mu);
            }
            let Some(step) = solve_small(a, jtr) else {
                mu = mu * T::lit(10.0);
                continue;
            };
            let mut trial = p;
            for i in 0..5 {
                trial[i] = trial[i] + step[i];
            }
            let r = data.rss(&trial);
            if r.is_finite() && r <= rss {
                let gain = rss - r;
                p = trial;
                rss = r;
                mu = (mu / T::lit(10.0)).max(T::lit(1e-15));
                improved = gain > rss * T::lit(1e-14);
                break;
            }
            mu = mu * T::lit(10.0);
        }
        if !improved {
            break;
        }
    }
    let (offset, a, b, decay, omega) = (p[0], p[1], p[2], p[3], p[4]);
    Ok(DampedFit {
        t0,
        offset,
        amplitude: (a * a + b * b).sqrt(),
        phase: (-b).atan2(a),
        decay,
        omega,
        rms_residual: (rss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_signal() {
        let t: Vec<f64> = (0..4000).map(|i| 0.01 * i as f64).collect();
        let z: Vec<f64> = t.iter().map(|&t| 0.3 + 1.7 * (-0.05 * t).exp() * (2.3 * t + 0.4).cos()).collect();
        let f = fit_damped_oscillation(&t, &z).unwrap();
        assert!((f.decay - 0.05).abs() < 1e-9);
        assert!((f.omega - 2.3).abs() < 1e-9);
        assert!((f.offset - 0.3).abs() < 1e-9);
        assert!((f.amplitude - 1.7).abs() < 1e-8);
        assert!((f.phase - 0.4).abs() < 1e-8);
    }

    #[test]
    fn tiny_decay_resolved() {
        let t: Vec<f64> = (0..20000).map(|i| 0.005 * i as f64).collect();
        let z: Vec<f64> = t.iter().map(|&t| (-3e-5 * t).exp() * (2.0 * t).sin()).collect();
        let f = fit_damped_oscillation(&t, &z).unwrap();
        assert!((f.decay - 3e-5).abs() < 1e-10, "{}", f.decay);
    }
}
