//! Exact Euclidean-type lattice sums.
//!
//! `floor_sum` and friends evaluate `sum_{i<n} floor((a*i + b) / m)` together
//! with the `i`-weighted and squared variants in `O(log)` arithmetic steps.
//! They let the grid layer evaluate the step potentials pointwise, and sum
//! them over cell ranges, on grids far beyond the dense-array cap.

use num_bigint::BigInt;
use num_traits::Zero;

/// `sum_{i=0}^{n-1} floor((a*i + b) / m)` for `n >= 0`, `m >= 1`, any `a, b`.
pub fn floor_sum(n: i128, m: i128, a: i128, b: i128) -> BigInt {
    floor_sum_triple(n, m, a, b).0
}

/// `sum_{i=0}^{n-1} i * floor((a*i + b) / m)`.
pub fn floor_sum_i(n: i128, m: i128, a: i128, b: i128) -> BigInt {
    floor_sum_triple(n, m, a, b).1
}

/// Returns `(sum f, sum i*f, sum f^2)` for `f(i) = floor((a*i + b)/m)`.
///
/// Mutual Euclidean recursion: the inner counts `c_j = min{i : f(i) > j}`
/// are floor functions with numerator and denominator swapped, so the triple
/// reduces to the triple of the transposed line.
pub fn floor_sum_triple(n: i128, m: i128, a: i128, b: i128) -> (BigInt, BigInt, BigInt) {
    assert!(n >= 0, "floor_sum: n must be >= 0");
    assert!(m >= 1, "floor_sum: m must be >= 1");
    if n == 0 {
        return (BigInt::zero(), BigInt::zero(), BigInt::zero());
    }
    let nb = BigInt::from(n);
    // sum_{i<n} i and sum_{i<n} i^2
    let t1 = (&nb - 1) * &nb / 2;
    let t2 = (&nb - 1) * &nb * (2 * &nb - 1) / 6;

    let qa = a.div_euclid(m);
    let ra = a.rem_euclid(m);
    let qb = b.div_euclid(m);
    let rb = b.rem_euclid(m);

    let (g0, g1, g2) = floor_sum_core(n, m, ra, rb);

    let qa_b = BigInt::from(qa);
    let qb_b = BigInt::from(qb);
    let s0 = &qa_b * &t1 + &qb_b * &nb + &g0;
    let s1 = &qa_b * &t2 + &qb_b * &t1 + &g1;
    let s2 = &qa_b * &qa_b * &t2
        + 2 * &qa_b * &qb_b * &t1
        + &qb_b * &qb_b * &nb
        + 2 * &qa_b * &g1
        + 2 * &qb_b * &g0
        + g2;
    (s0, s1, s2)
}

/// Core with `0 <= a < m`, `0 <= b < m`, `n >= 1`.
fn floor_sum_core(n: i128, m: i128, a: i128, b: i128) -> (BigInt, BigInt, BigInt) {
    debug_assert!((0..m).contains(&a) && (0..m).contains(&b));
    // v = max value f(n-1); f is nondecreasing since a >= 0.
    let v = (a * (n - 1) + b) / m;
    if v == 0 {
        return (BigInt::zero(), BigInt::zero(), BigInt::zero());
    }
    // c_j = floor((m*j + (m - b - 1)) / a) + 1 is the first index with f > j,
    // so the triple reduces to the triple of the transposed line (v terms,
    // slope m, offset m - b - 1, denominator a).
    let (g0, g1, g2) = floor_sum_triple(v, a, m, m - b - 1);
    let vb = BigInt::from(v);
    let nb = BigInt::from(n);
    let sum_c = &g0 + &vb;
    let sum_c_sq = &g2 + 2 * &g0 + &vb;
    let sum_jc = &g1 + (&vb - 1) * &vb / 2;

    let s0 = &nb * &vb - &sum_c;
    let s1 = &vb * ((&nb - 1) * &nb / 2) - (&sum_c_sq - &sum_c) / 2;
    let s2 = &nb * &vb * &vb - 2 * &sum_jc - &sum_c;
    (s0, s1, s2)
}

/// Modular inverse of `a` modulo `m` (coprime inputs).
pub fn mod_inverse(a: i128, m: i128) -> i128 {
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    assert!(g == 1, "mod_inverse: inputs not coprime");
    x.rem_euclid(m)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if a == 0 {
        (b, 0, 1)
    } else {
        let (g, x, y) = ext_gcd(b % a, a);
        (g, y - (b / a) * x, x)
    }
}

/// Orbit-side prefix weight `A(j) = sum_{i<j} w(i*p mod m)` where the cell
/// weight `w` is `+1` left of the middle cell `(m-1)/2`, `0` on it, `-1`
/// right of it. `A(m) = 0`, so `A` extends periodically.
#[derive(Debug, Clone)]
pub struct OrbitCounter {
    pub m: i128,
    pub p: i128,
    pub q: i128, // p^{-1} mod m
    k: i128,     // middle cell (m-1)/2
    i_k: i128,   // orbit index of the middle cell
}

impl OrbitCounter {
    pub fn new(m: i128, p: i128) -> Self {
        assert!(m >= 1 && m % 2 == 1, "orbit counter needs odd modulus");
        let p = p.rem_euclid(m);
        let q = mod_inverse(p, m);
        let k = (m - 1) / 2;
        let i_k = mul_mod_i128(k, q, m);
        OrbitCounter { m, p, q, k, i_k }
    }

    /// Orbit index of a cell: the unique `j` with `j*p = cell (mod m)`.
    pub fn orbit_index(&self, cell: i128) -> i128 {
        mul_mod_i128(cell.rem_euclid(self.m), self.q, self.m)
    }

    /// `#{i < j : i*p mod m < c}` for `0 <= c <= m`.
    pub fn count_below(&self, j: i128, c: i128) -> BigInt {
        floor_sum(j, self.m, self.p, 0) - floor_sum(j, self.m, self.p, -c)
    }

    /// `A(j)` for `0 <= j <= m`.
    pub fn prefix_weight(&self, j: i128) -> BigInt {
        debug_assert!((0..=self.m).contains(&j));
        let less = self.count_below(j, self.k);
        let mid_seen = BigInt::from(i128::from(self.i_k < j));
        2 * less + mid_seen - j
    }

    /// Potential at a cell: `phi(cell) = A(orbit_index(cell))`.
    pub fn phi_at(&self, cell: i128) -> BigInt {
        self.prefix_weight(self.orbit_index(cell))
    }

    /// `sum_{s<len} w(cell at orbit offset j0+s)` for `0 <= len <= m`.
    pub fn window_sum(&self, j0: i128, len: i128) -> BigInt {
        debug_assert!((0..=self.m).contains(&len));
        let j0 = j0.rem_euclid(self.m);
        self.prefix_weight_ext(j0 + len) - self.prefix_weight(j0)
    }

    fn prefix_weight_ext(&self, j: i128) -> BigInt {
        // A has period m with zero total, so reduce mod m.
        self.prefix_weight(j.rem_euclid(self.m))
    }

    /// Exact `sum_{cell in [lo, hi)} phi(cell)`, via a two-progression
    /// reduction to one-dimensional floor sums (the inner and outer indices
    /// share the multiplier `q`, so their cross terms depend only on the
    /// index difference).
    pub fn phi_range_sum(&self, lo: i128, hi: i128) -> BigInt {
        assert!(0 <= lo && lo <= hi && hi <= self.m);
        let b = hi - lo;
        if b == 0 {
            return BigInt::zero();
        }
        let (m, q, k) = (self.m, self.q, self.k);
        let a = lo;

        // F1 = sum_t floor((a+t)q / m)
        let f1 = floor_sum(b, m, q, a * q);
        // T1 = sum_t X_t with X_t = (a+t)q mod m
        let t1 = BigInt::from(q) * (BigInt::from(b) * BigInt::from(a)
            + BigInt::from(b) * (BigInt::from(b) - 1) / 2)
            - BigInt::from(m) * &f1;
        // T2 = #{t : X_t > i_K}
        let below = floor_sum(b, m, q, a * q) - floor_sum(b, m, q, a * q - (self.i_k + 1));
        let t2 = BigInt::from(b) - below;

        // W = sum_{t<B} sum_{u<K} floor((u - t - a) q / m), via w = u - t.
        let mut w_sum = BigInt::zero();
        if k > 0 {
            let w_lo = 1 - b;
            let w_hi = k - 1;
            let n_at = |w: i128| -> i128 {
                let top = std::cmp::min(b - 1, k - 1 - w);
                let bot = std::cmp::max(0, -w);
                (top - bot + 1).max(0)
            };
            let mut cuts = vec![w_lo, w_hi + 1];
            for c in [0i128, k - b, k - b + 1, 1] {
                if c > w_lo && c <= w_hi {
                    cuts.push(c);
                }
            }
            cuts.sort_unstable();
            cuts.dedup();
            for pair in cuts.windows(2) {
                let (s, e) = (pair[0], pair[1] - 1);
                if s > e {
                    continue;
                }
                let len = e - s + 1;
                let n_s = n_at(s);
                let slope = if len > 1 { n_at(s + 1) - n_s } else { 0 };
                debug_assert_eq!(n_at(e), n_s + slope * (e - s), "trapezoid not linear");
                let offset = (s - a) * q;
                let s0 = floor_sum(len, m, q, offset);
                let s1 = floor_sum_i(len, m, q, offset);
                w_sum += BigInt::from(n_s) * s0 + BigInt::from(slope) * s1;
            }
        }
        // T3 = B * sum_{u<K} floor(uq/m) - (W + K * F1)
        let t3 = BigInt::from(b) * floor_sum(k, m, q, 0) - (w_sum + BigInt::from(k) * &f1);

        2 * t3 + t2 - t1
    }
}

fn mul_mod_i128(a: i128, b: i128, m: i128) -> i128 {
    // Inputs below ~2^63 so the product fits i128.
    debug_assert!(a.abs() < (1 << 63) && b.abs() < (1 << 63));
    (a * b).rem_euclid(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_triple(n: i128, m: i128, a: i128, b: i128) -> (BigInt, BigInt, BigInt) {
        let mut s0 = BigInt::zero();
        let mut s1 = BigInt::zero();
        let mut s2 = BigInt::zero();
        for i in 0..n {
            let f = (a * i + b).div_euclid(m);
            s0 += f;
            s1 += BigInt::from(i) * f;
            s2 += BigInt::from(f) * f;
        }
        (s0, s1, s2)
    }

    #[test]
    fn triple_matches_brute_force() {
        for n in [0i128, 1, 2, 3, 7, 19, 40] {
            for m in [1i128, 2, 3, 5, 12, 23] {
                for a in [-37i128, -12, -1, 0, 1, 3, 11, 29, 60] {
                    for b in [-41i128, -5, 0, 2, 17, 50] {
                        let got = floor_sum_triple(n, m, a, b);
                        let want = brute_triple(n, m, a, b);
                        assert_eq!(got, want, "n={n} m={m} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_counter_matches_dense_sweep() {
        for (m, p) in [(5i128, 1i128), (55, 12), (55, 23), (4895, 1069)] {
            let oc = OrbitCounter::new(m, p);
            let k = (m - 1) / 2;
            let w = |cell: i128| -> i64 {
                use std::cmp::Ordering::*;
                match cell.cmp(&k) {
                    Less => 1,
                    Equal => 0,
                    Greater => -1,
                }
            };
            // dense phi by walking the orbit
            let mut phi = vec![0i64; m as usize];
            let mut cell = 0i128;
            let mut acc = 0i64;
            for _ in 0..m {
                phi[cell as usize] = acc;
                acc += w(cell);
                cell = (cell + p) % m;
            }
            assert_eq!(acc, 0, "full-cycle weight must close at zero");
            for c in 0..m {
                assert_eq!(oc.phi_at(c), BigInt::from(phi[c as usize]), "phi m={m} c={c}");
            }
            // range sums on a sample of windows
            let probes: Vec<(i128, i128)> = vec![
                (0, m),
                (0, 1),
                (m - 1, m),
                (1, m / 2),
                (m / 3, 2 * m / 3 + 1),
                (m / 2, m / 2),
            ];
            for (lo, hi) in probes {
                let want: BigInt = (lo..hi).map(|c| BigInt::from(phi[c as usize])).sum();
                assert_eq!(oc.phi_range_sum(lo, hi), want, "range m={m} [{lo},{hi})");
            }
            // window sums from assorted offsets and lengths
            for j0 in [0i128, 1, m / 2, m - 1] {
                for len in [0i128, 1, 2, m / 2, m - 1, m] {
                    let mut want = 0i64;
                    let mut c = (j0 * p) % m;
                    for _ in 0..len {
                        want += w(c);
                        c = (c + p) % m;
                    }
                    assert_eq!(oc.window_sum(j0, len), BigInt::from(want), "win m={m} j0={j0} len={len}");
                }
            }
        }
    }

    #[test]
    fn phi_range_sums_cover_all_small_ranges() {
        let m = 55i128;
        let oc = OrbitCounter::new(m, 12);
        let dense: Vec<BigInt> = (0..m).map(|c| oc.phi_at(c)).collect();
        for lo in 0..=m {
            for hi in lo..=m {
                let want: BigInt = dense[lo as usize..hi as usize].iter().sum();
                assert_eq!(oc.phi_range_sum(lo, hi), want, "[{lo},{hi})");
            }
        }
    }
}
