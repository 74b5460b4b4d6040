//! Scalar arithmetic in the prime field F_p.
//!
//! Elements are canonical residues `0..p`. The characteristic stays tiny at
//! desk scale, so trial division is enough for the primality check.

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
pub fn reduce(n: i64, p: u64) -> u64 {
    let m = n.rem_euclid(p as i64);
    m as u64
}

#[inline]
pub fn add(a: u64, b: u64, p: u64) -> u64 {
    (a + b) % p
}

#[inline]
pub fn sub(a: u64, b: u64, p: u64) -> u64 {
    (a + p - b % p) % p
}

#[inline]
pub fn neg(a: u64, p: u64) -> u64 {
    (p - a % p) % p
}

#[inline]
pub fn mul(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

pub fn pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    base %= p;
    let mut acc = 1 % p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base, p);
        }
        base = mul(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse of a nonzero residue, via Fermat.
pub fn inv(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0, "inverse of zero mod {p}");
    pow(a, p - 2, p)
}

/// Inverse of a possibly signed exponent base: a^e for e in Z.
pub fn pow_signed(a: u64, e: i64, p: u64) -> u64 {
    if e >= 0 {
        pow(a, e as u64, p)
    } else {
        pow(inv(a, p), (-e) as u64, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        assert!(is_prime(2));
        assert!(is_prime(3));
        assert!(is_prime(13));
        assert!(!is_prime(1));
        assert!(!is_prime(9));
        assert!(!is_prime(91));
    }

    #[test]
    fn inverses() {
        for p in [2u64, 3, 5, 7, 11] {
            for a in 1..p {
                assert_eq!(mul(a, inv(a, p), p), 1);
            }
        }
    }

    #[test]
    fn signed_reduction() {
        assert_eq!(reduce(-1, 5), 4);
        assert_eq!(reduce(-7, 3), 2);
        assert_eq!(reduce(6, 3), 0);
    }
}
