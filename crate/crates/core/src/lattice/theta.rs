//! Theta-series coefficients: the number of lattice vectors of each squared norm.

use std::collections::BTreeMap;

use super::basis::{LatticeBasis, LatticeKind};
use super::enumerate::{BallEnumerator, DEFAULT_BUDGET};
use crate::error::Result;

/// Counts lattice vectors by squared norm up to `max_norm_sq`, by
/// enumerating the ball of that radius. Only norms that occur are present.
pub fn theta_coefficients(basis: &LatticeBasis, max_norm_sq: u64) -> Result<BTreeMap<u64, u64>> {
    theta_coefficients_with_budget(basis, max_norm_sq, DEFAULT_BUDGET)
}

pub fn theta_coefficients_with_budget(
    basis: &LatticeBasis,
    max_norm_sq: u64,
    budget: usize,
) -> Result<BTreeMap<u64, u64>> {
    let enumerator = BallEnumerator::new(basis);
    let center = vec![0.0; basis.dim()];
    let mut counts = BTreeMap::new();
    enumerator.enumerate(&center, max_norm_sq as f64 + 0.5, budget, &mut |c| {
        let n = basis.norm_sq_int(c);
        if n <= max_norm_sq {
            *counts.entry(n).or_insert(0u64) += 1;
        }
    })?;
    Ok(counts)
}

fn divisors(n: u64) -> impl Iterator<Item = u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.into_iter().chain(large.into_iter().rev())
}

/// Theta coefficients from the classical divisor-sum formulas, indexed by
/// squared norm `0..=max_norm_sq` (zero where no vector has that norm).
pub fn theta_closed_form(kind: LatticeKind, max_norm_sq: u64) -> Vec<u64> {
    (0..=max_norm_sq)
        .map(|n| {
            if n == 0 {
                return 1;
            }
            match kind {
                LatticeKind::Z => {
                    let r = (n as f64).sqrt().round() as u64;
                    if r * r == n {
                        2
                    } else {
                        0
                    }
                }
                LatticeKind::Z2 => {
                    let (a, b) = divisors(n).fold((0i64, 0i64), |(a, b), d| match d % 4 {
                        1 => (a + 1, b),
                        3 => (a, b + 1),
                        _ => (a, b),
                    });
                    (4 * (a - b)) as u64
                }
                LatticeKind::A2 => {
                    let (a, b) = divisors(n).fold((0i64, 0i64), |(a, b), d| match d % 3 {
                        1 => (a + 1, b),
                        2 => (a, b + 1),
                        _ => (a, b),
                    });
                    (6 * (a - b)) as u64
                }
                LatticeKind::E8 => {
                    if n % 2 == 1 {
                        0
                    } else {
                        240 * divisors(n / 2).map(|d| d * d * d).sum::<u64>()
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(u64, u64)]) -> BTreeMap<u64, u64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn z_up_to_four() {
        let b = LatticeBasis::new(LatticeKind::Z);
        assert_eq!(
            theta_coefficients(&b, 4).unwrap(),
            map(&[(0, 1), (1, 2), (4, 2)])
        );
    }

    #[test]
    fn z2_up_to_five() {
        let b = LatticeBasis::new(LatticeKind::Z2);
        assert_eq!(
            theta_coefficients(&b, 5).unwrap(),
            map(&[(0, 1), (1, 4), (2, 4), (4, 4), (5, 8)])
        );
    }

    #[test]
    fn e8_minimal_vectors() {
        let b = LatticeBasis::new(LatticeKind::E8);
        assert_eq!(theta_coefficients(&b, 2).unwrap(), map(&[(0, 1), (2, 240)]));
    }

    #[test]
    fn a2_norms_are_loeschian() {
        let b = LatticeBasis::new(LatticeKind::A2);
        let t = theta_coefficients(&b, 7).unwrap();
        assert_eq!(t, map(&[(0, 1), (1, 6), (3, 6), (4, 6), (7, 12)]));
    }

    #[test]
    fn enumeration_matches_closed_forms() {
        let limits = [
            (LatticeKind::Z, 400),
            (LatticeKind::Z2, 200),
            (LatticeKind::A2, 200),
            (LatticeKind::E8, 10),
        ];
        for (kind, max) in limits {
            let enumerated = theta_coefficients(&LatticeBasis::new(kind), max).unwrap();
            let closed = theta_closed_form(kind, max);
            for (n, &c) in closed.iter().enumerate() {
                assert_eq!(
                    enumerated.get(&(n as u64)).copied().unwrap_or(0),
                    c,
                    "{kind} norm {n}"
                );
            }
        }
    }
}
