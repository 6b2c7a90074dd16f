use std::f64::consts::PI;

use ndarray::{Array2, ArrayView1};

/// One real Fourier component written as `amp * cos(2πk t / p + phase)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Component {
    pub amp: f64,
    pub phase: f64,
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// The representative of `y` modulo 2π closest to `x`.
pub fn nearest_representative(y: f64, x: f64) -> f64 {
    x + wrap_angle(y - x)
}

/// Maps a frequency onto [0, p/2], identifying k with p − k.
pub fn fold_frequency(k: usize, p: usize) -> usize {
    let k = k % p;
    k.min(p - k)
}

/// Whether folding `k` reflects it (which negates the phase of a component).
pub fn folding_reflects(k: usize, p: usize) -> bool {
    let k = k % p;
    k != 0 && p - k < k
}

/// Real orthonormal Fourier basis on Z/p.
///
/// Row 0 is the constant vector; rows `2k − 1` and `2k` hold the normalized
/// cosine and sine of frequency k for k in 1..=n_freqs. For even p the
/// Nyquist cosine is appended as a final row.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    pub p: usize,
    pub vectors: Array2<f64>,
}

impl FourierBasis {
    pub fn new(p: usize) -> Self {
        let mut vectors = Array2::zeros((p, p));
        let dc = 1.0 / (p as f64).sqrt();
        let norm = (2.0 / p as f64).sqrt();
        vectors.row_mut(0).fill(dc);
        for k in 1..=Self::freq_count(p) {
            for t in 0..p {
                let x = 2.0 * PI * (k * t % p) as f64 / p as f64;
                vectors[[2 * k - 1, t]] = norm * x.cos();
                vectors[[2 * k, t]] = norm * x.sin();
            }
        }
        if p % 2 == 0 && p > 0 {
            for t in 0..p {
                vectors[[p - 1, t]] = if t % 2 == 0 { dc } else { -dc };
            }
        }
        FourierBasis { p, vectors }
    }

    /// Number of non-constant frequencies with a (cos, sin) pair.
    pub fn freq_count(p: usize) -> usize {
        (p.max(1) - 1) / 2
    }

    pub fn n_freqs(&self) -> usize {
        Self::freq_count(self.p)
    }

    /// Coordinates of `f` in this basis.
    pub fn project(&self, f: ArrayView1<f64>) -> Vec<f64> {
        self.vectors.rows().into_iter().map(|v| v.dot(&f)).collect()
    }

    /// Decomposes `f` into its mean and one amplitude/phase pair per frequency.
    /// Index 0 of the returned vector is unused (frequency 0).
    pub fn components(&self, f: ArrayView1<f64>) -> (f64, Vec<Component>) {
        let coords = self.project(f);
        let scale = (2.0 / self.p as f64).sqrt();
        let mean = coords[0] / (self.p as f64).sqrt();
        let mut out = vec![Component { amp: 0.0, phase: 0.0 }];
        for k in 1..=self.n_freqs() {
            // f ≈ A cos + B sin with A = r cos φ, B = −r sin φ.
            let a = coords[2 * k - 1] * scale;
            let b = coords[2 * k] * scale;
            out.push(Component {
                amp: a.hypot(b),
                phase: wrap_angle((-b).atan2(a)),
            });
        }
        (mean, out)
    }

    /// Energy `Σ_t (r cos(...))²` of a single component.
    pub fn component_energy(&self, c: &Component) -> f64 {
        0.5 * self.p as f64 * c.amp * c.amp
    }
}
