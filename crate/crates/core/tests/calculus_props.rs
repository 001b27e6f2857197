mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rippling::annotation::{all_annotations, front_rooted};
use rippling::difference::{dmatch_all, dmatch_first, dunify, dunify_minimal};
use rippling::rewrite::rewrite_at;
use rippling::ripple::{ripple, ripple_step};
use rippling::search::{lfs, Dir, Expansion, FnTree};
use rippling::theory::Theory;
use rippling::{AnnTerm, Signature, Term};

use common::{mark_placements, measure_oracle, random_ripple_goal, random_term};

const GROUND: [(&str, usize); 4] = [("f", 2), ("g", 1), ("a", 0), ("b", 0)];
const PATTERN: [(&str, usize); 5] = [("f", 2), ("g", 1), ("a", 0), ("X", 0), ("Y", 0)];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn theory() -> Theory {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../theories/list.thy")).unwrap();
    Theory::parse(&text).unwrap()
}

/// `s` is `t` with some nodes deleted, each deleted node keeping one child.
fn embeds(s: &Term, t: &Term) -> bool {
    let here = match (s, t) {
        (Term::Var(a), Term::Var(b)) => a == b,
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| embeds(x, y))
        }
        _ => false,
    };
    here || t.args().iter().any(|c| embeds(s, c))
}

/// A random well-annotated term of at most `max` nodes.
fn random_annotated(r: &mut ChaCha8Rng, max: usize) -> AnnTerm {
    let t = random_term(r, &PATTERN, max);
    let all = mark_placements(&t);
    all[r.gen_range(0..all.len())].clone()
}

fn theory_symbols(th: &Theory) -> Vec<(String, usize)> {
    th.signature
        .symbols()
        .filter(|s| &*s.name != "=")
        .map(|s| (s.name.to_string(), s.arity))
        .chain([("x".to_string(), 0)])
        .collect()
}

proptest! {
    #[test]
    fn skeletons_embed_in_erasure(seed in any::<u64>()) {
        let a = random_annotated(&mut rng(seed), 7);
        let skeletons = a.skeletons();
        prop_assert!(!skeletons.is_empty());
        for s in &skeletons {
            prop_assert!(embeds(s, &a.erase()), "{} in {}", s, a);
        }
    }

    #[test]
    fn constructors_produce_wat_terms(seed in any::<u64>()) {
        let t = random_term(&mut rng(seed), &PATTERN, 6);
        for a in all_annotations(&t, false).iter().chain(&all_annotations(&t, true)).chain(&front_rooted(&t)) {
            prop_assert!(a.is_wat(), "{}", a);
            prop_assert_eq!(a.erase(), t.clone());
            prop_assert!(AnnTerm::from_material(&t, &a.material_positions()).is_wat());
            prop_assert!(a.normalize().is_wat());
        }
    }

    #[test]
    fn annotated_parse_inverts_display(seed in any::<u64>()) {
        let a = random_annotated(&mut rng(seed), 8);
        let back = Signature::permissive().parse_ann_term(&a.to_string()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn measure_matches_oracle(seed in any::<u64>()) {
        let a = random_annotated(&mut rng(seed), 8);
        prop_assert_eq!(a.measure().0, measure_oracle(&a));
    }

    #[test]
    fn dmatch_results_are_sound(p in any::<u64>(), t in any::<u64>()) {
        let pattern = random_term(&mut rng(p), &PATTERN, 5);
        let target = random_term(&mut rng(t), &GROUND, 8);
        let all = dmatch_all(&pattern, &target, usize::MAX);
        for m in &all {
            prop_assert_eq!(m.annotated_target.erase(), target.clone());
            prop_assert!(m.annotated_target.is_wat());
            prop_assert!(m.subst.is_idempotent());
            prop_assert!(m.annotated_target.skeletons().contains(&m.subst.apply(&pattern)));
        }
        prop_assert!(all.windows(2).all(|w| w[0].cost() <= w[1].cost()));
        match dmatch_first(&pattern, &target) {
            Some(m) => prop_assert!(all.contains(&m)),
            None => prop_assert!(all.is_empty()),
        }
    }

    #[test]
    fn dunify_results_are_sound(a in any::<u64>(), b in any::<u64>()) {
        let s = random_term(&mut rng(a), &PATTERN, 5);
        let t = random_term(&mut rng(b), &[("f", 2), ("g", 1), ("a", 0), ("Z", 0), ("W", 0)], 5);
        let all = dunify(&s, &t, usize::MAX);
        for u in &all {
            prop_assert_eq!(u.annotated_left.erase(), s.clone());
            prop_assert_eq!(u.annotated_right.erase(), t.clone());
            prop_assert!(u.annotated_left.is_wat() && u.annotated_right.is_wat());
            prop_assert!(u.subst.is_idempotent());
            let left: Vec<Term> = u.annotated_left.skeletons().iter().map(|k| u.subst.apply(k)).collect();
            prop_assert!(u.annotated_right.skeletons().iter().any(|k| left.contains(&u.subst.apply(k))));
        }
        prop_assert!(all.windows(2).all(|w| w[0].annotation_cost <= w[1].annotation_cost));
        prop_assert_eq!(dunify_minimal(&s, &t).map(|u| u.annotation_cost), all.first().map(|u| u.annotation_cost));
    }

    #[test]
    fn lfs_is_complete_and_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let leaves: usize = r.gen_range(1..200);
        let salt: usize = r.gen();
        let tree = FnTree::new((Vec::<Dir>::new(), leaves), leaves, move |(path, n): &(Vec<Dir>, usize)| {
            if *n == 1 {
                return Expansion::Leaf(path.clone());
            }
            let h = path.iter().fold(salt ^ *n, |h, d| h.wrapping_mul(31).wrapping_add(*d as usize + 1));
            let split = 1 + h % (n - 1);
            let child = |d: Dir| {
                let mut p = path.clone();
                p.push(d);
                p
            };
            Expansion::Branch((child(Dir::L), split), (child(Dir::R), n - split))
        });
        let visits = lfs(&tree).unwrap();
        prop_assert_eq!(visits.len(), leaves);
        prop_assert!(visits.windows(2).all(|w| w[0].left_count <= w[1].left_count));
        for v in &visits {
            prop_assert_eq!(v.left_count, v.path.iter().filter(|d| **d == Dir::L).count());
            prop_assert_eq!(&v.value, &v.path);
        }
        let distinct: std::collections::BTreeSet<&Vec<Dir>> = visits.iter().map(|v| &v.path).collect();
        prop_assert_eq!(distinct.len(), leaves);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ripple_steps_keep_invariants(seed in any::<u64>()) {
        let th = theory();
        let rules = th.wave_rules();
        let symbols = theory_symbols(&th);
        let symbols: Vec<(&str, usize)> = symbols.iter().map(|(n, a)| (n.as_str(), *a)).collect();
        let mut r = rng(seed);
        let goal = random_ripple_goal(&mut r, &rules, &symbols);
        for s in ripple_step(&goal, &rules) {
            prop_assert!(s.after.is_wat());
            let single = s.before.fronts().iter().all(|(_, f)| f.hole_count() == 1);
            if single {
                prop_assert_eq!(s.before.skeletons(), s.after.skeletons());
            }
            let def = th.defs.iter().find(|d| d.name == s.rule.name).unwrap();
            prop_assert_eq!(rewrite_at(&s.before.erase(), &s.position, &def.lhs, &def.rhs), Some(s.after.erase()));
        }
        let size = goal.erase().size();
        let trace = ripple(&goal, &rules, None, usize::MAX);
        prop_assert!(trace.steps.len() <= size * size, "{} steps on {}", trace.steps.len(), goal);
    }
}
