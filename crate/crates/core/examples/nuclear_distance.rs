//! Nuclear distance between random descriptors: agreement with the
//! brute-force oracle for n = 1 and n = 2, and invariance to the choice of
//! orthonormal basis.

use kshs::metric::{nuclear_distance, nuclear_distance_oracle};
use kshs::subspace::d_se;
use kshs::synth::{random_descriptor, random_orthogonal, RandomSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kshs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in [1, 2] {
        let spec = RandomSpec {
            dim,
            ..RandomSpec::default()
        };
        let a = random_descriptor(&mut rng, &spec)?;
        let b = random_descriptor(&mut rng, &spec)?;
        println!(
            "n={dim}: d_ncl {:.8}, oracle {:.8}, d_se {:.8}",
            nuclear_distance(&a, &b)?,
            nuclear_distance_oracle(&a, &b)?,
            d_se(&a, &b)?
        );
    }

    let spec = RandomSpec::default();
    let a = random_descriptor(&mut rng, &spec)?;
    let b = random_descriptor(&mut rng, &spec)?;
    let rotated = b.with_coefficients(b.coefficients() * random_orthogonal(&mut rng, spec.dim))?;
    println!(
        "n={}: d_ncl {:.12} vs rotated basis {:.12}; d_se {:.6} vs {:.6}",
        spec.dim,
        nuclear_distance(&a, &b)?,
        nuclear_distance(&a, &rotated)?,
        d_se(&a, &b)?,
        d_se(&a, &rotated)?
    );
    Ok(())
}
