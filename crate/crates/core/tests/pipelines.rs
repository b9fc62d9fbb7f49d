use proptest::prelude::*;

use rankcrypt::ibe::{setup_rank, Mpk, RankIbeParams};
use rankcrypt::lrpc::LrpcParams;
use rankcrypt::ranksign::{keygen, sign, verify, PublicKey, Signature};
use rankcrypt::ranksign_attack::{self, forged_sign, ForgeKey, Rank1Strategy};
use rankcrypt::rsl::{self, gen_instance, subcode_in, theorem_bound, RslInstance, RslParams, RslStrategy};
use rankcrypt::rng_from_seed;

const DESK: LrpcParams = LrpcParams { n: 8, k: 4, m: 9, d: 2, t: 1, t_prime: 1, w: 4, a: 1 };
const DESK_RSL: RslParams = RslParams { n: 10, k: 3, big_n: 8, w: 2, m: 10, a: 1 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn honest_signatures_verify_and_bind_the_message(seed in any::<u64>(), msg in proptest::collection::vec(any::<u8>(), 0..64)) {
        let mut rng = rng_from_seed(seed);
        let (pk, sk) = keygen(&DESK, &mut rng).unwrap();
        let sig = sign(&sk, &msg, &mut rng).unwrap();
        prop_assert!(verify(&pk, &msg, &sig));
        let mut other = msg.clone();
        other.push(0);
        prop_assert!(!verify(&pk, &other, &sig));
    }

    #[test]
    fn forged_signatures_verify_after_the_break(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (pk, _) = keygen(&DESK, &mut rng).unwrap();
        let out = ranksign_attack::attack(&pk, Rank1Strategy::Enumerate, &mut rng, 1).unwrap();
        let key = ForgeKey::from_text(&out.key.to_text()).unwrap();
        let sig = forged_sign(&key, &pk, b"forged", &mut rng).unwrap();
        let sig = Signature::from_text(&pk.ext, &sig.to_text(&pk.ext)).unwrap();
        let pk = PublicKey::from_text(&pk.to_text()).unwrap();
        prop_assert!(verify(&pk, b"forged", &sig));
    }

    #[test]
    fn rsl_secret_support_contains_a_large_subcode(seed in any::<u64>()) {
        let (inst, sec) = gen_instance(&DESK_RSL, &mut rng_from_seed(seed)).unwrap();
        let inst = RslInstance::from_text(&inst.to_text()).unwrap();
        prop_assert!(subcode_in(&inst, sec.f()).len() >= theorem_bound(&DESK_RSL));
    }

    #[test]
    fn bilinear_rsl_output_lies_in_the_secret_support(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (inst, sec) = gen_instance(&DESK_RSL, &mut rng).unwrap();
        if let Ok(out) = rsl::attack(&inst, RslStrategy::Bilinear, &mut rng, 1) {
            prop_assert!(out.f.is_subspace_of(sec.f()));
        }
    }
}

#[test]
fn master_keys_round_trip_through_text() {
    let p = RankIbeParams { sign: LrpcParams { a: 4, ..DESK }, n_dec: 24, k_dec: 2, d_dec: 2, w_dec: 1 };
    let mk = setup_rank(&p, false, &mut rng_from_seed(1)).unwrap();
    let text = mk.mpk.to_text();
    assert_eq!(Mpk::from_text(&text).unwrap().to_text(), text);
}
