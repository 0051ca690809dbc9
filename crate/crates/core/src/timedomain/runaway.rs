//! Removal of the runaway solutions of the static-mirror lattice.
//!
//! A mirror coupled through λqΦ(Z) has one real exponent s > 0 per mirror
//! (m s³ + mΩ²s = λ²/2 for an isolated mirror): a bound, non-radiating solution that
//! grows as e^{st}. Frequency-domain scattering excludes it. The growing subspace G is
//! found by subspace iteration of the drive-free step map; the kick-drift-kick map is
//! symplectic and time-reversal symmetric, so the decaying partners are the
//! momentum-flipped vectors T·G, and the G-amplitude of any state x follows from the
//! symplectic products ω(T·G_i, x). Subtracting it leaves every radiating component
//! untouched.

use crate::error::{MofError, Result};
use crate::scalar::Real;

use super::{step_nonrel, SimState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunawayOptions<T = f64> {
    /// Steps between renormalizations during the search.
    pub chunk: usize,
    pub max_chunks: usize,
    /// Relative invariance residual accepted for the growing subspace.
    pub tolerance: T,
}

impl<T: Real> Default for RunawayOptions<T> {
    fn default() -> Self {
        Self { chunk: 100, max_chunks: 4000, tolerance: T::lit(1e-9) }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Vector<T> {
    phi: Vec<T>,
    pi: Vec<T>,
    q: Vec<T>,
    p: Vec<T>,
}

impl<T: Real> Vector<T> {
    fn read(s: &SimState<T>) -> Self {
        Self {
            phi: s.phi.clone(),
            pi: s.pi.clone(),
            q: s.mirrors.iter().map(|m| m.q).collect(),
            p: s.mirrors.iter().map(|m| m.p).collect(),
        }
    }

    fn write(&self, s: &mut SimState<T>) {
        s.phi.copy_from_slice(&self.phi);
        s.pi.copy_from_slice(&self.pi);
        for (a, m) in s.mirrors.iter_mut().enumerate() {
            m.q = self.q[a];
            m.p = self.p[a];
        }
    }

    fn dot(&self, o: &Self, dx: T) -> T {
        let f: T = self.phi.iter().zip(&o.phi).chain(self.pi.iter().zip(&o.pi)).map(|(a, b)| *a * *b).sum();
        let m: T = self.q.iter().zip(&o.q).chain(self.p.iter().zip(&o.p)).map(|(a, b)| *a * *b).sum();
        f * dx + m
    }

    /// ω(T·self, o): symplectic product with the momentum-flipped vector.
    fn reversed_omega(&self, o: &Self, dx: T) -> T {
        let f: T = self.phi.iter().zip(&o.pi).chain(self.pi.iter().zip(&o.phi)).map(|(a, b)| *a * *b).sum();
        let m: T = self.q.iter().zip(&o.p).chain(self.p.iter().zip(&o.q)).map(|(a, b)| *a * *b).sum();
        f * dx + m
    }

    fn axpy(&mut self, a: T, o: &Self) {
        for (x, y) in self.phi.iter_mut().zip(&o.phi) {
            *x = *x + a * *y;
        }
        for (x, y) in self.pi.iter_mut().zip(&o.pi) {
            *x = *x + a * *y;
        }
        for (x, y) in self.q.iter_mut().zip(&o.q) {
            *x = *x + a * *y;
        }
        for (x, y) in self.p.iter_mut().zip(&o.p) {
            *x = *x + a * *y;
        }
    }

    fn scale(&mut self, a: T) {
        for x in self.phi.iter_mut().chain(self.pi.iter_mut()).chain(self.q.iter_mut()).chain(self.p.iter_mut()) {
            *x = *x * a;
        }
    }
}

/// Growing subspace of a static-mirror lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RunawayModes<T = f64> {
    basis: Vec<Vector<T>>,
    /// Solves A c = b with A_ij = ω(T·G_i, G_j).
    gram_inv: Vec<Vec<T>>,
    /// Per-unit-time growth rates estimated from the final iteration.
    pub rates: Vec<T>,
    dx: T,
}

fn invert<T: Real>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut inv: Vec<Vec<T>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if m[piv][c].abs() <= T::min_positive_value() {
            return None;
        }
        m.swap(c, piv);
        inv.swap(c, piv);
        let d = m[c][c];
        for k in 0..n {
            m[c][k] = m[c][k] / d;
            inv[c][k] = inv[c][k] / d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for k in 0..n {
                    m[r][k] = m[r][k] - f * m[c][k];
                    inv[r][k] = inv[r][k] - f * inv[c][k];
                }
            }
        }
    }
    Some(inv)
}

/// Find the growing subspace of `template` (mirrors must be pinned) for step `dt`.
///
/// Returns an empty set when no direction grows by more than e^5 over the search.
pub fn find_runaway_modes<T: Real>(template: &SimState<T>, dt: T, opts: &RunawayOptions<T>) -> Result<RunawayModes<T>> {
    if template.mirrors.iter().any(|m| !m.pinned) {
        return Err(MofError::param("mirrors", "runaway projection needs pinned mirrors"));
    }
    let dx = template.grid.dx;
    let mut work = template.clone();
    work.drive = None;
    let zero = |s: &mut SimState<T>| {
        s.phi.iter_mut().chain(s.pi.iter_mut()).for_each(|v| *v = T::zero());
        s.mirrors.iter_mut().for_each(|m| {
            m.q = T::zero();
            m.p = T::zero();
        });
    };
    zero(&mut work);
    let n = template.mirrors.iter().filter(|m| m.config.mirosc.lambda() != T::zero()).count();
    let active: Vec<usize> = template
        .mirrors
        .iter()
        .enumerate()
        .filter(|(_, m)| m.config.mirosc.lambda() != T::zero())
        .map(|(i, _)| i)
        .collect();
    let mut basis: Vec<Vector<T>> = active
        .iter()
        .map(|&a| {
            let mut v = Vector::read(&work);
            v.q[a] = T::one();
            v
        })
        .collect();
    let chunk_t = dt * T::from_usize_lossy(opts.chunk);
    let mut rates = vec![T::zero(); n];
    let mut converged = n == 0;
    // log-amplification of the leading direction over the whole search
    let mut lead_growth = T::zero();
    for _ in 0..opts.max_chunks {
        if converged {
            break;
        }
        // advance every basis vector by one chunk
        let mut moved = Vec::with_capacity(basis.len());
        for v in &basis {
            v.write(&mut work);
            work.t = T::zero();
            for _ in 0..opts.chunk {
                step_nonrel(&mut work, dt)?;
            }
            moved.push(Vector::read(&work));
        }
        // invariance residual of span(basis) under the chunk map
        let mut worst = T::zero();
        for w in &moved {
            let mut r = w.clone();
            for b in &basis {
                let c = b.dot(&r, dx) / b.dot(b, dx);
                r.axpy(-c, b);
            }
            let rel = (r.dot(&r, dx) / w.dot(w, dx)).sqrt();
            worst = worst.max(rel);
        }
        // Gram-Schmidt on the advanced vectors
        let mut next: Vec<Vector<T>> = Vec::with_capacity(moved.len());
        for (i, mut w) in moved.into_iter().enumerate() {
            for b in &next {
                let c = b.dot(&w, dx);
                w.axpy(-c, b);
            }
            let norm = w.dot(&w, dx).sqrt();
            rates[i] = norm.ln() / chunk_t;
            if !(norm > T::zero()) || !norm.is_finite() {
                return Err(MofError::NonFinite("runaway search".into()));
            }
            w.scale(norm.recip());
            next.push(w);
        }
        basis = next;
        lead_growth = lead_growth + rates[0] * chunk_t;
        if worst < opts.tolerance {
            converged = true;
        }
    }
    if !converged && lead_growth < T::lit(5.0) {
        // nothing grows by more than e^5 over the horizon: a purely oscillatory lattice
        // (e.g. a closed box too small to bind the runaway) has no subspace to remove
        return Ok(RunawayModes { basis: Vec::new(), gram_inv: Vec::new(), rates: Vec::new(), dx });
    }
    if !converged {
        return Err(MofError::Degenerate("runaway subspace search did not converge".into()));
    }
    // keep only genuinely growing directions
    let keep: Vec<usize> = (0..basis.len()).filter(|&i| rates[i] > T::lit(1e-9) / chunk_t).collect();
    let basis: Vec<Vector<T>> = keep.iter().map(|&i| basis[i].clone()).collect();
    let rates: Vec<T> = keep.iter().map(|&i| rates[i]).collect();
    let a: Vec<Vec<T>> = basis.iter().map(|gi| basis.iter().map(|gj| gi.reversed_omega(gj, dx)).collect()).collect();
    let gram_inv = invert(&a)
        .ok_or_else(|| MofError::Degenerate("runaway subspace has a singular symplectic Gram matrix".into()))?;
    Ok(RunawayModes { basis, gram_inv, rates, dx })
}

impl<T: Real> RunawayModes<T> {
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn max_rate(&self) -> T {
        self.rates.iter().fold(T::zero(), |m, &r| m.max(r))
    }

    /// Remove the growing component from `state`; returns the coefficient norm removed.
    pub fn project(&self, state: &mut SimState<T>) -> T {
        if self.basis.is_empty() {
            return T::zero();
        }
        let mut x = Vector::read(state);
        let b: Vec<T> = self.basis.iter().map(|g| g.reversed_omega(&x, self.dx)).collect();
        let mut removed = T::zero();
        for (row, g) in self.gram_inv.iter().zip(&self.basis) {
            let c: T = row.iter().zip(&b).map(|(a, bb)| *a * *bb).sum();
            x.axpy(-c, g);
            removed = removed + c * c;
        }
        x.write(state);
        removed.sqrt()
    }

    /// Steps between projections so the runaway grows by at most e^`growth` in between.
    pub fn interval(&self, dt: T, growth: T) -> usize {
        let s = self.max_rate();
        if s <= T::zero() {
            return usize::MAX;
        }
        (growth / (s * dt)).floor().to_usize().unwrap_or(1).max(1)
    }
}
