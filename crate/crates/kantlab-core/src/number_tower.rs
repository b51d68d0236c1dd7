//! Prime towers, CRT, prime search in arithmetic progressions, and exact
//! circle arithmetic modulo 1.
//!
//! A tower is a sequence of primes `m_1, m_2, ...` (all >= 5) satisfying
//! `m_{i+1} = +1 (mod m_i)` and `m_{i+j} = -1 (mod m_i)` for `j >= 2`. These
//! congruences force the partial sums `alpha_n = sum_{j<=n} 1/M_j` (with
//! `M_j = m_1*...*m_j`) into lowest terms, so the rotation by `alpha_n` acts
//! on the `M_n`-cell grid as a full-cycle permutation.

use crate::rational::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TowerError {
    #[error("m_1 must be a prime >= 5, got {0}")]
    BadBasePrime(u64),
    #[error("tower entry {0} is not a prime >= 5")]
    NotPrime(u64),
    #[error("congruence violated: m_{i1} = {mi1} must be {expect} mod m_{i0} = {mi0}")]
    Congruence {
        i0: usize,
        i1: usize,
        mi0: u64,
        mi1: u64,
        expect: i64,
    },
    #[error("gcd(P_{level}, M_{level}) != 1")]
    NotCoprime { level: usize },
    #[error("CRT moduli not pairwise coprime: {0} and {1}")]
    CrtModuli(String, String),
    #[error("no primes in progression: gcd({residue}, {modulus}) != 1")]
    BadProgression { residue: u64, modulus: u64 },
    #[error("level {0} out of range 1..={1}")]
    LevelOutOfRange(usize, usize),
    #[error("prime search exceeded u64 range")]
    SearchOverflow,
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d_odd = d >> s;
    // This witness set decides primality for all u64.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d_odd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Solve a simultaneous congruence system by the Chinese remainder theorem.
///
/// Returns the unique `x` in `[0, prod of moduli)`. Moduli must be pairwise
/// coprime; residues may be any integers (reduced here).
pub fn crt_solve(residues: &[(BigInt, BigInt)]) -> Result<BigInt, TowerError> {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in residues {
        let g = modulus.gcd(m);
        if !g.is_one() && !modulus.is_one() {
            // Accept consistent overlaps only when moduli are coprime.
            return Err(TowerError::CrtModuli(modulus.to_string(), m.to_string()));
        }
        // x' = x (mod modulus), x' = r (mod m)
        let e = modulus.extended_gcd(m);
        // e.x * modulus + e.y * m = 1
        let diff = (r - &x).mod_floor(m);
        let t = (diff * &e.x).mod_floor(m);
        x += &modulus * t;
        modulus *= m;
        x = x.mod_floor(&modulus);
    }
    Ok(x)
}

/// Smallest prime `p >= lower_bound` with `p = residue (mod modulus)`.
pub fn next_prime_in_progression(
    residue: u64,
    modulus: u64,
    lower_bound: u64,
) -> Result<u64, TowerError> {
    let r = residue % modulus;
    if gcd_u64(r, modulus) != 1 {
        // At most one prime can lie in such a progression.
        return Err(TowerError::BadProgression {
            residue: r,
            modulus,
        });
    }
    let mut candidate = if lower_bound % modulus <= r {
        lower_bound - lower_bound % modulus + r
    } else {
        lower_bound - lower_bound % modulus + modulus + r
    };
    if candidate < lower_bound {
        candidate += modulus;
    }
    loop {
        if candidate >= 2 && is_prime_u64(candidate) {
            return Ok(candidate);
        }
        candidate = candidate
            .checked_add(modulus)
            .ok_or(TowerError::SearchOverflow)?;
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// The prime sequence `m_1..m_n` with products `M_j` and numerators `P_j`
/// of `alpha_j = P_j / M_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TowerWire", into = "TowerWire")]
pub struct PrimeTower {
    primes: Vec<u64>,
    products: Vec<BigInt>,
    numerators: Vec<BigInt>,
}

#[derive(Serialize, Deserialize)]
struct TowerWire {
    primes: Vec<u64>,
}

impl TryFrom<TowerWire> for PrimeTower {
    type Error = TowerError;
    fn try_from(w: TowerWire) -> Result<Self, TowerError> {
        PrimeTower::from_primes(&w.primes)
    }
}

impl From<PrimeTower> for TowerWire {
    fn from(t: PrimeTower) -> TowerWire {
        TowerWire {
            primes: t.primes.clone(),
        }
    }
}

impl PrimeTower {
    /// Start a tower from its base prime `m_1 >= 5`.
    pub fn new(m1: u64) -> Result<Self, TowerError> {
        if m1 < 5 || !is_prime_u64(m1) {
            return Err(TowerError::BadBasePrime(m1));
        }
        Ok(PrimeTower {
            primes: vec![m1],
            products: vec![BigInt::from(m1)],
            numerators: vec![BigInt::one()],
        })
    }

    /// Validate and adopt an explicit prime list.
    pub fn from_primes(primes: &[u64]) -> Result<Self, TowerError> {
        let mut t = PrimeTower::new(*primes.first().ok_or(TowerError::BadBasePrime(0))?)?;
        for &m in &primes[1..] {
            t.push_checked(m)?;
        }
        Ok(t)
    }

    fn push_checked(&mut self, m: u64) -> Result<(), TowerError> {
        if m < 5 || !is_prime_u64(m) {
            return Err(TowerError::NotPrime(m));
        }
        let n = self.primes.len();
        for (i, &mi) in self.primes.iter().enumerate() {
            let expect: i64 = if i + 1 == n { 1 } else { -1 };
            let got = (m % mi) as i64;
            let want = if expect == 1 { 1 } else { (mi as i64) - 1 };
            if got != want {
                return Err(TowerError::Congruence {
                    i0: i + 1,
                    i1: n + 1,
                    mi0: mi,
                    mi1: m,
                    expect,
                });
            }
        }
        let mb = BigInt::from(m);
        let prod = self.products.last().unwrap() * &mb;
        let num: BigInt = self.numerators.last().unwrap() * &mb + 1;
        if !num.gcd(&prod).is_one() {
            return Err(TowerError::NotCoprime {
                level: self.primes.len() + 1,
            });
        }
        self.primes.push(m);
        self.products.push(prod);
        self.numerators.push(num);
        Ok(())
    }

    /// Append the next admissible prime `>= min_next`.
    ///
    /// The CRT residue is `-1 mod m_1..m_{n-1}` and `+1 mod m_n`; among
    /// primes in that class the smallest one `>= min_next` is taken.
    pub fn extend(&self, min_next: u64) -> Result<PrimeTower, TowerError> {
        let n = self.primes.len();
        let residues: Vec<(BigInt, BigInt)> = self
            .primes
            .iter()
            .enumerate()
            .map(|(i, &mi)| {
                let r = if i + 1 == n { 1i64 } else { -1i64 };
                (BigInt::from(r), BigInt::from(mi))
            })
            .collect();
        let x0 = crt_solve(&residues)?;
        let modulus = self.products.last().unwrap();
        let modulus_u64: u64 = modulus
            .try_into()
            .map_err(|_| TowerError::SearchOverflow)?;
        let x0_u64: u64 = x0.try_into().map_err(|_| TowerError::SearchOverflow)?;
        let p = next_prime_in_progression(x0_u64, modulus_u64, min_next.max(5))?;
        let mut t = self.clone();
        t.push_checked(p)?;
        Ok(t)
    }

    /// Grow to `depth` levels with a per-level lower bound on `m_n`.
    pub fn grow_to(&self, depth: usize, min_next: impl Fn(usize) -> u64) -> Result<PrimeTower, TowerError> {
        let mut t = self.clone();
        while t.depth() < depth {
            let next_level = t.depth() + 1;
            t = t.extend(min_next(next_level))?;
        }
        Ok(t)
    }

    pub fn depth(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn prime(&self, level: usize) -> u64 {
        self.primes[level - 1]
    }

    /// `M_level` as a big integer.
    pub fn product(&self, level: usize) -> &BigInt {
        &self.products[level - 1]
    }

    /// `M_level` as u64; errors past 64 bits.
    pub fn product_u64(&self, level: usize) -> Result<u64, TowerError> {
        (&self.products[level - 1])
            .try_into()
            .map_err(|_| TowerError::SearchOverflow)
    }

    /// `P_level`, the numerator of `alpha_level`.
    pub fn numerator(&self, level: usize) -> &BigInt {
        &self.numerators[level - 1]
    }

    /// `alpha_level = P_level / M_level` in lowest terms.
    pub fn alpha(&self, level: usize) -> Result<Rat, TowerError> {
        if level == 0 || level > self.depth() {
            return Err(TowerError::LevelOutOfRange(level, self.depth()));
        }
        Ok(Rat::new(
            self.numerators[level - 1].clone(),
            self.products[level - 1].clone(),
        ))
    }

    /// Re-run every structural invariant; used by the CLI before printing.
    pub fn validate(&self) -> Result<(), TowerError> {
        let rebuilt = PrimeTower::from_primes(&self.primes)?;
        debug_assert_eq!(&rebuilt, self);
        // Alternating tail-sum residues from the coprimality argument:
        // T_k = sum_{j=k..n} m_{j+1}*...*m_n is -1 mod m_k for even n-k
        // and +2 mod m_k for odd n-k.
        let n = self.depth();
        for k in 1..n {
            let tail = self.tail_sum(k);
            let mk = BigInt::from(self.primes[k - 1]);
            let got = tail.mod_floor(&mk);
            let want = if (n - k) % 2 == 0 {
                &mk - 1
            } else {
                BigInt::from(2)
            };
            if got != want {
                return Err(TowerError::NotCoprime { level: k });
            }
        }
        Ok(())
    }

    /// `T_k = sum_{j=k}^{n} M_n / M_j` (the j = n term is 1).
    pub fn tail_sum(&self, k: usize) -> BigInt {
        let n = self.depth();
        let mn = &self.products[n - 1];
        (k..=n).map(|j| mn / &self.products[j - 1]).sum()
    }
}

/// A point of the circle `[0, 1)` with exact rational coordinate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CirclePoint(Rat);

impl CirclePoint {
    pub fn new(value: Rat) -> Self {
        CirclePoint(value.fract_floor())
    }

    pub fn value(&self) -> &Rat {
        &self.0
    }

    /// Addition modulo 1.
    pub fn add(&self, y: &Rat) -> CirclePoint {
        CirclePoint::new(&self.0 + y)
    }

    pub fn sub(&self, y: &Rat) -> CirclePoint {
        CirclePoint::new(&self.0 - y)
    }

    /// Riemannian distance on the circle, in `[0, 1/2]`.
    pub fn dist(&self, other: &CirclePoint) -> Rat {
        let d = (&self.0 - &other.0).abs();
        let alt = Rat::one() - &d;
        if d <= alt {
            d
        } else {
            alt
        }
    }
}

trait FractFloor {
    fn fract_floor(&self) -> Rat;
}

impl FractFloor for Rat {
    fn fract_floor(&self) -> Rat {
        self - self.floor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn crt_examples() {
        // [(0,5)] -> 0 and [(1,5)] -> 1
        assert_eq!(
            crt_solve(&[(BigInt::from(0), BigInt::from(5))]).unwrap(),
            BigInt::from(0)
        );
        assert_eq!(
            crt_solve(&[(BigInt::from(1), BigInt::from(5))]).unwrap(),
            BigInt::from(1)
        );
        // x = -1 mod 5, x = 1 mod 11 -> 34 (brute-force scan oracle below)
        let x = crt_solve(&[
            (BigInt::from(-1), BigInt::from(5)),
            (BigInt::from(1), BigInt::from(11)),
        ])
        .unwrap();
        assert_eq!(x, BigInt::from(34));
        let brute = (0..55)
            .find(|v| v % 5 == 4 && v % 11 == 1)
            .unwrap();
        assert_eq!(x, BigInt::from(brute));
        assert!(crt_solve(&[
            (BigInt::from(1), BigInt::from(6)),
            (BigInt::from(1), BigInt::from(10))
        ])
        .is_err());
    }

    #[test]
    fn prime_progression_examples() {
        assert_eq!(next_prime_in_progression(1, 5, 7).unwrap(), 11);
        assert_eq!(next_prime_in_progression(34, 55, 0).unwrap(), 89);
        assert_eq!(next_prime_in_progression(1, 2, 3).unwrap(), 3);
        assert!(next_prime_in_progression(2, 4, 0).is_err());
    }

    #[test]
    fn extend_minimal_tower() {
        let t = PrimeTower::new(5).unwrap();
        let t = t.extend(0).unwrap();
        assert_eq!(t.primes(), &[5, 11]);
        let t = t.extend(0).unwrap();
        assert_eq!(t.primes(), &[5, 11, 89]);
        assert_eq!(t.alpha(3).unwrap(), Rat::new(BigInt::from(1069), BigInt::from(4895)));
        assert!(t.validate().is_ok());
    }

    #[test]
    fn alpha_values() {
        let t = PrimeTower::from_primes(&[5, 11]).unwrap();
        assert_eq!(t.alpha(1).unwrap(), rat(1, 5));
        assert_eq!(t.alpha(2).unwrap(), rat(12, 55));
        assert!(t.alpha(3).is_err());
        assert!(t.alpha(0).is_err());
    }

    #[test]
    fn alpha_increment_is_one_over_product() {
        let t = PrimeTower::from_primes(&[5, 11, 89]).unwrap();
        for level in 2..=3 {
            let diff = t.alpha(level).unwrap() - t.alpha(level - 1).unwrap();
            let unit = Rat::new(BigInt::from(1), t.product(level).clone());
            assert_eq!(diff, unit);
        }
    }

    #[test]
    fn bad_towers_rejected() {
        assert!(PrimeTower::new(4).is_err());
        assert!(PrimeTower::new(3).is_err());
        assert!(PrimeTower::from_primes(&[5, 7]).is_err()); // 7 != 1 mod 5
        assert!(PrimeTower::from_primes(&[5, 11, 23]).is_err()); // 23 != -1 mod 5
    }

    #[test]
    fn circle_arithmetic() {
        let x = CirclePoint::new(rat(9, 10));
        assert_eq!(x.add(&rat(1, 5)).value(), &rat(1, 10));
        let zero = CirclePoint::new(rat(0, 1));
        assert_eq!(zero.dist(&CirclePoint::new(rat(9, 10))), rat(1, 10));
        assert_eq!(x.dist(&x), rat(0, 1));
        assert_eq!(x.sub(&rat(19, 10)).value(), &rat(0, 1));
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        let trial = |n: u64| {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    return false;
                }
                d += 1;
            }
            true
        };
        for n in 0..2000 {
            assert_eq!(is_prime_u64(n), trial(n), "n={n}");
        }
        assert!(is_prime_u64(2_147_483_647));
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }
}
