//! Binomial coefficients.
//!
//! Everything in the kernels is a ratio of d-subset counts over `C(m, d)`.
//! [`SubsetRatios`] keeps an exact `u128` table when `C(m, d)` fits and falls
//! back to log-factorials otherwise, so numerators are formed exactly and
//! divided once.

/// Exact `C(n, k)`, or `None` when it overflows `u128`.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        let num = u128::from(n - i);
        let den = u128::from(i + 1);
        let g = gcd(acc, den);
        let (a, b) = (acc / g, den / g);
        acc = a.checked_mul(num / b)?;
    }
    Some(acc)
}

/// `C(n, k)` in double precision, via log-gamma terms when `u128` overflows.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    match binomial(n, k) {
        Some(v) => v as f64,
        None => ln_binomial(n, k).exp(),
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Ratios of subset counts to `C(m, d)` for fixed `(m, d)`.
#[derive(Debug, Clone)]
pub struct SubsetRatios {
    m: usize,
    d: usize,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `table[n * (d + 1) + k] = C(n, k)` for `n <= m`, `k <= d`.
    Exact { table: Vec<u128>, total: u128 },
    /// `ln n!` for `n <= m`.
    Log { ln_fact: Vec<f64>, ln_total: f64 },
}

impl SubsetRatios {
    pub fn new(m: usize, d: usize) -> Self {
        assert!(d <= m, "d must not exceed m");
        let fits = binomial(m as u64, (d as u64).min(m as u64 / 2)).is_some();
        let repr = if fits {
            let mut table = vec![0u128; (m + 1) * (d + 1)];
            for n in 0..=m {
                table[n * (d + 1)] = 1;
                for k in 1..=d.min(n) {
                    let above = table[(n - 1) * (d + 1) + k - 1];
                    let left = if k < n {
                        table[(n - 1) * (d + 1) + k]
                    } else {
                        0
                    };
                    table[n * (d + 1) + k] = above + left;
                }
            }
            let total = table[m * (d + 1) + d];
            Repr::Exact { table, total }
        } else {
            let mut ln_fact = vec![0.0; m + 1];
            for n in 1..=m {
                ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
            }
            let ln_total = ln_fact[m] - ln_fact[d] - ln_fact[m - d];
            Repr::Log { ln_fact, ln_total }
        };
        SubsetRatios { m, d, repr }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact { .. })
    }

    /// `C(m, d)` as a float.
    pub fn total(&self) -> f64 {
        match &self.repr {
            Repr::Exact { total, .. } => *total as f64,
            Repr::Log { ln_total, .. } => ln_total.exp(),
        }
    }

    fn exact(table: &[u128], d: usize, n: usize, k: usize) -> u128 {
        if k > n || k > d {
            0
        } else {
            table[n * (d + 1) + k]
        }
    }

    fn ln(ln_fact: &[f64], n: usize, k: usize) -> f64 {
        if k > n {
            f64::NEG_INFINITY
        } else {
            ln_fact[n] - ln_fact[k] - ln_fact[n - k]
        }
    }

    /// `C(n1, k1) * C(n2, k2) / C(m, d)`. Requires `k1 + k2 = d`, `n1 + n2 <= m`.
    pub fn product(&self, n1: usize, k1: usize, n2: usize, k2: usize) -> f64 {
        debug_assert!(k1 + k2 == self.d && n1 + n2 <= self.m);
        match &self.repr {
            Repr::Exact { table, total } => {
                let num = Self::exact(table, self.d, n1, k1) * Self::exact(table, self.d, n2, k2);
                num as f64 / *total as f64
            }
            Repr::Log { ln_fact, ln_total } => {
                (Self::ln(ln_fact, n1, k1) + Self::ln(ln_fact, n2, k2) - ln_total).exp()
            }
        }
    }

    /// `C(n, d) / C(m, d)` for `n <= m`.
    pub fn single(&self, n: usize) -> f64 {
        match &self.repr {
            Repr::Exact { table, total } => {
                Self::exact(table, self.d, n, self.d) as f64 / *total as f64
            }
            Repr::Log { ln_fact, ln_total } => (Self::ln(ln_fact, n, self.d) - ln_total).exp(),
        }
    }

    /// `(C(hi, d) - C(lo, d)) / C(m, d)` for `lo <= hi <= m`.
    pub fn difference(&self, hi: usize, lo: usize) -> f64 {
        debug_assert!(lo <= hi && hi <= self.m);
        match &self.repr {
            Repr::Exact { table, total } => {
                let num =
                    Self::exact(table, self.d, hi, self.d) - Self::exact(table, self.d, lo, self.d);
                num as f64 / *total as f64
            }
            Repr::Log { .. } => (self.single(hi) - self.single(lo)).max(0.0),
        }
    }

    /// `(extra + C(m, d) - C(n, d)) / C(m, d)`.
    pub fn complement_plus(&self, n: usize, extra: u128) -> f64 {
        match &self.repr {
            Repr::Exact { table, total } => {
                let num = extra + *total - Self::exact(table, self.d, n, self.d);
                num as f64 / *total as f64
            }
            Repr::Log { ln_total, .. } => 1.0 - self.single(n) + extra as f64 * (-ln_total).exp(),
        }
    }
}
