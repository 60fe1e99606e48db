//! Points of the d-torus stored as exact rationals `num / den` per coordinate.
//!
//! Integer matrices act on such points without rounding, so orbits, periodic
//! points and the group law `f^a ∘ f^b = f^(a+b)` are exact. Generic points use
//! the dyadic denominator 2^62; periodic points carry `|det(M^k - I)|`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::intmat::IntMatrix;

/// Denominator used for points built from floating-point coordinates.
pub const DYADIC_BITS: u32 = 62;

#[derive(Clone, Debug)]
enum Repr {
    Small { num: Vec<u64>, den: u64 },
    Big { num: Vec<BigUint>, den: BigUint },
}

#[derive(Clone, Debug)]
pub struct TorusPoint {
    repr: Repr,
}

const SMALL_DEN_LIMIT: u64 = 1 << 63;

impl TorusPoint {
    /// Nearest dyadic point with denominator 2^62 to the given coordinates
    /// (reduced mod 1).
    pub fn from_coords(coords: &[f64]) -> Self {
        let den = 1u64 << DYADIC_BITS;
        let num = coords
            .iter()
            .map(|&c| {
                let f = c.rem_euclid(1.0);
                let scaled = (f * den as f64).round();
                (scaled as u64) % den
            })
            .collect();
        TorusPoint {
            repr: Repr::Small { num, den },
        }
    }

    /// The point `(nums[0]/den, ..., nums[d-1]/den)` reduced mod 1.
    pub fn rational(nums: &[i64], den: u64) -> Self {
        assert!(den > 0, "denominator must be positive");
        let big: Vec<BigInt> = nums.iter().map(|&n| BigInt::from(n)).collect();
        Self::from_big(&big, &BigUint::from(den))
    }

    pub(crate) fn from_big(nums: &[BigInt], den: &BigUint) -> Self {
        let den_i = BigInt::from(den.clone());
        let reduced: Vec<BigUint> = nums
            .iter()
            .map(|n| n.mod_floor(&den_i).to_biguint().expect("non-negative after mod_floor"))
            .collect();
        match den.to_u64() {
            Some(d) if d < SMALL_DEN_LIMIT => TorusPoint {
                repr: Repr::Small {
                    num: reduced.iter().map(|n| n.to_u64().expect("below den")).collect(),
                    den: d,
                },
            },
            _ => TorusPoint {
                repr: Repr::Big { num: reduced, den: den.clone() },
            },
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Small { num, .. } => num.len(),
            Repr::Big { num, .. } => num.len(),
        }
    }

    /// Coordinates in [0, 1).
    pub fn coords(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Small { num, den } => num.iter().map(|&n| n as f64 / *den as f64).collect(),
            Repr::Big { num, den } => {
                // Shift both down so the ratio survives conversion to f64.
                let shift = den.bits().saturating_sub(120);
                let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
                num.iter()
                    .map(|n| (n >> shift).to_f64().unwrap_or(0.0) / d)
                    .collect()
            }
        }
    }

    pub(crate) fn numerators(&self) -> Vec<BigInt> {
        match &self.repr {
            Repr::Small { num, .. } => num.iter().map(|&n| BigInt::from(n)).collect(),
            Repr::Big { num, .. } => num.iter().map(|n| BigInt::from_biguint(Sign::Plus, n.clone())).collect(),
        }
    }

    pub(crate) fn denominator(&self) -> BigUint {
        match &self.repr {
            Repr::Small { den, .. } => BigUint::from(*den),
            Repr::Big { den, .. } => den.clone(),
        }
    }

    /// Apply an integer matrix given row-major as signed 64-bit entries.
    pub(crate) fn apply_small(&self, dim: usize, m: &[i64]) -> TorusPoint {
        match &self.repr {
            Repr::Small { num, den } => {
                let den128 = *den as u128;
                let out = (0..dim)
                    .map(|i| {
                        let mut acc: u128 = 0;
                        for j in 0..dim {
                            let e = (m[i * dim + j] as i128).rem_euclid(den128 as i128) as u128;
                            acc = (acc + (e * num[j] as u128) % den128) % den128;
                        }
                        acc as u64
                    })
                    .collect();
                TorusPoint {
                    repr: Repr::Small { num: out, den: *den },
                }
            }
            Repr::Big { .. } => {
                let rows: Vec<Vec<i64>> = m.chunks(dim).map(|r| r.to_vec()).collect();
                self.apply_big(&IntMatrix::from_rows(&rows))
            }
        }
    }

    pub(crate) fn apply_big(&self, m: &IntMatrix) -> TorusPoint {
        let v = m.mul_vec(&self.numerators());
        TorusPoint::from_big(&v, &self.denominator())
    }

    /// Exact equality mod 1: a/b = c/d iff a·d = c·b (both in [0,1)).
    pub fn exact_eq(&self, other: &TorusPoint) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => a
                .iter()
                .zip(c)
                .all(|(&x, &y)| x as u128 * *d as u128 == y as u128 * *b as u128),
            _ => {
                let (a, b) = (self.numerators(), BigInt::from(self.denominator()));
                let (c, d) = (other.numerators(), BigInt::from(other.denominator()));
                a.iter().zip(&c).all(|(x, y)| x * &d == y * &b)
            }
        }
    }

    /// Signed displacement `other - self` per coordinate, wrapped into
    /// [-1/2, 1/2), as exact numerators over the common denominator of
    /// `self` (requires equal denominators).
    pub(crate) fn wrapped_displacement(&self, other: &TorusPoint) -> Option<Vec<BigInt>> {
        let den = self.denominator();
        if den != other.denominator() {
            return None;
        }
        let den = BigInt::from(den);
        let half = &den / 2;
        let a = self.numerators();
        let b = other.numerators();
        Some(
            a.iter()
                .zip(&b)
                .map(|(x, y)| {
                    let mut w = (y - x).mod_floor(&den);
                    if w >= half && !half.is_zero() {
                        w -= &den;
                    }
                    w
                })
                .collect(),
        )
    }
}

impl PartialEq for TorusPoint {
    fn eq(&self, other: &Self) -> bool {
        self.exact_eq(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_reduction() {
        let p = TorusPoint::rational(&[7, -3], 5);
        assert_eq!(p.coords(), vec![0.4, 0.4]);
    }

    #[test]
    fn exact_equality_across_denominators() {
        let a = TorusPoint::rational(&[1, 3], 10);
        let b = TorusPoint::rational(&[2, 6], 20);
        assert!(a.exact_eq(&b));
        assert!(!a.exact_eq(&TorusPoint::rational(&[1, 4], 10)));
    }

    #[test]
    fn big_denominator_coords() {
        let den = BigUint::from(3u32).pow(60);
        let p = TorusPoint::from_big(&[BigInt::from(den.clone()) / 3, BigInt::from(1)], &den);
        let c = p.coords();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(c[1] < 1e-27);
    }
}
