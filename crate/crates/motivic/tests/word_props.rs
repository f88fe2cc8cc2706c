//! Randomized algebraic laws of the word invariants: additivity under
//! composition, anti-symmetry under inversion, and agreement of the
//! divisor-class invariant with the projected strata count, over hundreds
//! of random words in a randomly grown universe.

use motivic::bircalc::{c, pi, tilde_c, Atom, BirWord, Orientation};
use motivic::universe::{ClassFlags, ClassSpec, Universe};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const AMBIENT_DIM: u32 = 4;

struct Pool {
    universe: Universe,
    ambients: Vec<motivic::universe::ClassId>,
    centers: Vec<motivic::universe::ClassId>,
    divisors: Vec<motivic::universe::ClassId>,
}

fn plain(dim: u32) -> ClassSpec {
    ClassSpec {
        dim,
        flags: ClassFlags {
            smooth: true,
            projective: true,
            irreducible: true,
            geometrically_reduced: true,
            ..ClassFlags::default()
        },
        ..ClassSpec::default()
    }
}

fn random_pool(rng: &mut ChaCha8Rng) -> Pool {
    let mut u = Universe::new();
    let p4 = u.projective_space(AMBIENT_DIM);
    let mut ambients = vec![p4];
    // extra models of the same birational class, glued by declared isos
    for i in 0..3 {
        let x = u.register(&format!("X{i}"), plain(AMBIENT_DIM)).unwrap();
        Atom::declared_iso(&mut u, x, p4, rng.gen_bool(0.5)).unwrap();
        ambients.push(x);
    }
    let mut centers = Vec::new();
    for i in 0..10 {
        let dim = rng.gen_range(0..=AMBIENT_DIM - 2);
        centers.push(u.register(&format!("Z{i}"), plain(dim)).unwrap());
    }
    let mut divisors = Vec::new();
    for i in 0..8 {
        divisors.push(u.register(&format!("D{i}"), plain(AMBIENT_DIM - 1)).unwrap());
    }
    // a few random birational identifications among same-dimensional classes
    for _ in 0..4 {
        let (i, j) = (rng.gen_range(0..divisors.len()), rng.gen_range(0..divisors.len()));
        u.declare_birational(divisors[i], divisors[j]).unwrap();
    }
    Pool {
        universe: u,
        ambients,
        centers,
        divisors,
    }
}

fn random_letter(pool: &mut Pool, rng: &mut ChaCha8Rng) -> (Atom, Orientation) {
    let u = &mut pool.universe;
    let ambient = *pool.ambients.choose(rng).unwrap();
    let orient = if rng.gen_bool(0.5) {
        Orientation::Forward
    } else {
        Orientation::Inverse
    };
    let atom = match rng.gen_range(0..3) {
        0 => {
            let center = *pool.centers.choose(rng).unwrap();
            let codim = AMBIENT_DIM - u.dim(center);
            Atom::blow_up(u, ambient, center, codim, None).unwrap()
        }
        1 => {
            let k = rng.gen_range(1..=3);
            let mut complement = Vec::new();
            for _ in 0..k {
                if rng.gen_bool(0.7) {
                    complement.push(*pool.divisors.choose(rng).unwrap());
                } else {
                    complement.push(*pool.centers.choose(rng).unwrap());
                }
            }
            Atom::open_restrict(u, ambient, complement).unwrap()
        }
        _ => {
            let other = *pool.ambients.choose(rng).unwrap();
            Atom::declared_iso(u, ambient, other, rng.gen_bool(0.5)).unwrap()
        }
    };
    (atom, orient)
}

fn random_word(pool: &mut Pool, rng: &mut ChaCha8Rng) -> BirWord {
    let len = rng.gen_range(0..=5);
    let letters: Vec<_> = (0..len).map(|_| random_letter(pool, rng)).collect();
    let source = *pool.ambients.choose(rng).unwrap();
    let target = *pool.ambients.choose(rng).unwrap();
    BirWord::new(&pool.universe, source, target, letters).unwrap()
}

#[test]
fn additivity_antisymmetry_compatibility_on_random_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    for round in 0..10 {
        let mut pool = random_pool(&mut rng);
        for pair in 0..60 {
            let w1 = random_word(&mut pool, &mut rng);
            let w2 = random_word(&mut pool, &mut rng);
            let u = &pool.universe;
            let both = BirWord::compose(u, &w1, &w2).unwrap();
            let context = format!("round {round} pair {pair}");
            assert_eq!(
                tilde_c(&both),
                tilde_c(&w1).add(&tilde_c(&w2)),
                "strata additivity failed at {context}"
            );
            assert_eq!(
                c(u, &both),
                c(u, &w1).add(&c(u, &w2)),
                "divisor additivity failed at {context}"
            );
            assert_eq!(
                c(u, &w1.invert()),
                c(u, &w1).neg(),
                "anti-symmetry failed at {context}"
            );
            assert_eq!(
                c(u, &w1),
                pi(u, AMBIENT_DIM - 1, &tilde_c(&w1)),
                "projection compatibility failed at {context}"
            );
            let round_trip = BirWord::compose(u, &w1, &w1.invert()).unwrap();
            assert!(
                c(u, &round_trip).is_zero() && tilde_c(&round_trip).is_zero(),
                "round trip failed at {context}"
            );
        }
    }
}

#[test]
fn inversion_is_an_involution_on_random_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pool = random_pool(&mut rng);
    for _ in 0..100 {
        let w = random_word(&mut pool, &mut rng);
        assert_eq!(w.invert().invert(), w);
    }
}
