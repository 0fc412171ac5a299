use age_cmpc::field::PrimeField;
use age_cmpc::powersets::product_support;
use age_cmpc::protocol::{mask_rank_check, ProtocolError};
use age_cmpc::PartitionScheme;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n);
        out.push(s);
    }
    out
}

#[test]
fn every_colluding_pair_is_masked_in_small_schemes() {
    let f = PrimeField::mersenne61();
    for (s, t, z, l) in [(2, 1, 2, 0), (3, 1, 1, 0), (1, 2, 1, 1)] {
        let sc = PartitionScheme::new(s, t, z, l).unwrap();
        let n = product_support(&sc).len();
        assert!(n <= 12);
        let pts: Vec<_> = (1..=n as u64).map(|x| f.element(x)).collect();
        for c in subsets(n, z as usize) {
            assert!(mask_rank_check(&sc, &c, &pts).unwrap(), "{sc} {c:?}");
        }
    }
}

#[test]
fn random_colluder_sets() {
    let f = PrimeField::mersenne61();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (s, t, z, l) in [(2, 2, 2, 2), (2, 3, 3, 1), (3, 2, 5, 3)] {
        let sc = PartitionScheme::new(s, t, z, l).unwrap();
        let n = product_support(&sc).len();
        let pts: Vec<_> = (1..=n as u64).map(|x| f.element(x)).collect();
        for _ in 0..50 {
            let c: Vec<usize> = sample(&mut rng, n, z as usize).iter().map(|i| i + 1).collect();
            assert!(mask_rank_check(&sc, &c, &pts).unwrap());
        }
    }
}

#[test]
fn zero_point_leaks() {
    // a worker evaluated at 0 sees no mask at all
    let f = PrimeField::mersenne61();
    let sc = PartitionScheme::new(2, 2, 2, 2).unwrap();
    let mut pts: Vec<_> = (1..=17).map(|x| f.element(x)).collect();
    pts[0] = f.zero();
    assert!(!mask_rank_check(&sc, &[1, 2], &pts).unwrap());
}

#[test]
fn too_many_colluders() {
    let f = PrimeField::mersenne61();
    let sc = PartitionScheme::new(2, 2, 1, 1).unwrap();
    let pts: Vec<_> = (1..=13).map(|x| f.element(x)).collect();
    assert_eq!(
        mask_rank_check(&sc, &[1, 2], &pts),
        Err(ProtocolError::TooManyColluders { max: 1, got: 2 })
    );
}
