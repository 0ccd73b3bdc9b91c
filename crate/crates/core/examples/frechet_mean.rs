//! Fréchet mean of a few random descriptors: prints the objective after
//! every alternating step and the distance from the mean to each member.

use kshs::frechet::{frechet_mean, FrechetConfig};
use kshs::metric::nuclear_distance;
use kshs::synth::{random_descriptor, RandomSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kshs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = RandomSpec::default();
    let members = (0..4)
        .map(|_| random_descriptor(&mut rng, &spec))
        .collect::<kshs::Result<Vec<_>>>()?;

    let config = FrechetConfig {
        support: 12,
        ..FrechetConfig::default()
    };
    let result = frechet_mean(&members, &config)?;
    for (i, loss) in result.loss_trace.iter().enumerate() {
        println!("iteration {i:>2}: loss {loss:.12}");
    }
    println!("converged: {} after {} iterations", result.converged, result.iterations);
    for (i, m) in members.iter().enumerate() {
        println!("d_ncl(mean, member {i}) = {:.6}", nuclear_distance(&result.mean, m)?);
    }
    Ok(())
}
