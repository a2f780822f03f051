use innovation_typology::datamodel::InnovationType;
use innovation_typology::discriminant::Observations;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random labelled observations: `k` groups of `per_group` cases in `p`
/// variables, group centres spread by `spread`.
pub fn random_observations(
    rng: &mut ChaCha8Rng,
    k: usize,
    per_group: usize,
    p: usize,
    spread: f64,
) -> Observations {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (gi, &g) in InnovationType::ALL.iter().take(k).enumerate() {
        let centre: Vec<f64> = (0..p).map(|_| rng.gen_range(-spread..spread)).collect();
        for c in 0..per_group {
            ids.push(format!("g{gi}c{c}"));
            labels.push(g);
            values.push(
                centre
                    .iter()
                    .map(|m| m + rng.gen_range(-1.0..1.0))
                    .collect(),
            );
        }
    }
    let names = (0..p).map(|i| format!("x{i}")).collect();
    Observations::new(ids, labels, values, names).unwrap()
}
