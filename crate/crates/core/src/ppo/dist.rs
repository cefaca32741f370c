//! Factored Bernoulli distribution over the padded action bits.

use rand::Rng;

use crate::mdp::ActionMask;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `ln P(bit)` under `Bernoulli(sigmoid(z))`.
pub fn bit_log_prob(z: f64, bit: u8) -> f64 {
    if bit == 1 {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// Binary entropy of `Bernoulli(sigmoid(z))` in nats.
pub fn bit_entropy(z: f64) -> f64 {
    softplus(z) - z * sigmoid(z)
}

/// Joint log-probability of `bits` over the valid slots only.
pub fn log_prob(logits: &[f64], bits: &[u8], mask: &ActionMask) -> f64 {
    logits
        .iter()
        .zip(bits)
        .enumerate()
        .filter(|(k, _)| mask.is_valid(*k))
        .map(|(_, (&z, &b))| bit_log_prob(z, b))
        .sum()
}

pub fn entropy(logits: &[f64], mask: &ActionMask) -> f64 {
    logits
        .iter()
        .enumerate()
        .filter(|(k, _)| mask.is_valid(*k))
        .map(|(_, &z)| bit_entropy(z))
        .sum()
}

/// Draws every valid bit independently; masked bits are zero.
pub fn sample_action(logits: &[f64], mask: &ActionMask, rng: &mut impl Rng) -> (Vec<u8>, f64) {
    let bits: Vec<u8> = logits
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            if mask.is_valid(k) {
                u8::from(rng.random::<f64>() < sigmoid(z))
            } else {
                0
            }
        })
        .collect();
    let lp = log_prob(logits, &bits, mask);
    (bits, lp)
}

/// Most likely bits: `logit > 0` on valid slots.
pub fn greedy_action(logits: &[f64], mask: &ActionMask) -> Vec<u8> {
    logits
        .iter()
        .enumerate()
        .map(|(k, &z)| u8::from(mask.is_valid(k) && z > 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::mdp::EncodingSpec;

    #[test]
    fn zero_logit_is_fair_coin() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((bit_entropy(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn empty_mask_samples_nothing() {
        let mask = EncodingSpec::default().mask(0, 0);
        let (bits, lp) = sample_action(&[3.0; 15], &mask, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(bits.iter().all(|&b| b == 0));
        assert_eq!(lp, 0.0);
    }

    #[test]
    fn saturated_logit() {
        let mask = EncodingSpec::default().mask(1, 1);
        let mut logits = [0.0; 15];
        logits[0] = 50.0;
        let (bits, lp) = sample_action(&logits, &mask, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(bits[0], 1);
        assert!(lp.abs() < 1e-20);
    }

    #[test]
    fn joint_log_prob_is_product_of_bits() {
        let mask = EncodingSpec::default().mask(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..15).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
            let (bits, lp) = sample_action(&logits, &mask, &mut rng);
            let product: f64 = (0..15)
                .filter(|&k| mask.is_valid(k))
                .map(|k| {
                    let p = 1.0 / (1.0 + (-logits[k]).exp());
                    if bits[k] == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product();
            assert!((lp.exp() - product).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_is_sum_of_binary_entropies() {
        let mask = EncodingSpec::default().mask(3, 2);
        let logits: Vec<f64> = (0..15).map(|k| k as f64 * 0.7 - 4.0).collect();
        let closed: f64 = (0..15)
            .filter(|&k| mask.is_valid(k))
            .map(|k| {
                let p = 1.0 / (1.0 + (-logits[k]).exp());
                -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
            })
            .sum();
        assert!((entropy(&logits, &mask) - closed).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
