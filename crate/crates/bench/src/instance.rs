//! Random (p, q) generation.

use migration_mdp::RngStream;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceRule {
    /// Uniform over the triangle `p, q >= 0, p + q <= 1`.
    UniformSimplex,
}

impl InstanceRule {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "uniform-simplex" => Ok(InstanceRule::UniformSimplex),
            other => Err(BenchError::UnknownRule(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InstanceRule::UniformSimplex => "uniform-simplex",
        }
    }
}

/// Draws `(p, q)` by name.
pub fn random_instance(rule: &str, rng: &mut RngStream) -> Result<(f64, f64)> {
    Ok(draw(InstanceRule::parse(rule)?, rng))
}

/// Two uniforms per draw; points above the diagonal are reflected through
/// the centre of the unit square, which maps the upper triangle onto the
/// lower one while preserving area. No rejection, so every draw consumes
/// exactly two numbers.
pub fn draw(rule: InstanceRule, rng: &mut RngStream) -> (f64, f64) {
    match rule {
        InstanceRule::UniformSimplex => {
            let u1 = rng.uniform();
            let u2 = rng.uniform();
            if u1 + u2 > 1.0 {
                (1.0 - u1, 1.0 - u2)
            } else {
                (u1, u2)
            }
        }
    }
}

/// `(p, q)` of instance `index` in a run with the given master seed.
pub fn instance_params(rule: InstanceRule, master_seed: u64, index: u64) -> (u64, f64, f64) {
    let seed = master_seed.wrapping_add(index);
    let (p, q) = draw(rule, &mut RngStream::new(seed));
    (seed, p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_on_the_simplex() {
        let mut rng = RngStream::new(3);
        for _ in 0..10_000 {
            let (p, q) = random_instance("uniform-simplex", &mut rng).unwrap();
            assert!(p >= 0.0 && q >= 0.0 && p + q <= 1.0);
        }
    }

    #[test]
    fn unknown_rule() {
        let err = random_instance("beta(2,2)", &mut RngStream::new(0)).unwrap_err();
        assert!(matches!(err, BenchError::UnknownRule(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn fixed_seed_repeats() {
        let a: Vec<_> = (0..50).map(|i| instance_params(InstanceRule::UniformSimplex, 42, i)).collect();
        let b: Vec<_> = (0..50).map(|i| instance_params(InstanceRule::UniformSimplex, 42, i)).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
