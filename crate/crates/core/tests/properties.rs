use num_complex::Complex64;
use proptest::prelude::*;

use ultralap::assoc::AssociatedFunction;
use ultralap::ultrapoly::{PolyKind, Ultrapolynomial};
use ultralap::weights_seq::{make_gevrey, normalize_r_sequence, RSequence, WeightSequence};

fn sup(log_m: &[f64], rho: f64) -> f64 {
    log_m.iter().enumerate().map(|(p, l)| p as f64 * rho.ln() - l).fold(0.0, f64::max)
}

/// Log-convex tables built from increasing positive quotients.
fn log_convex_table() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..2.0, 5..60).prop_map(|steps| {
        let mut q = 0.5f64;
        let mut table = vec![0.0];
        for s in steps {
            q += s;
            let last = *table.last().unwrap();
            table.push(last + q.ln());
        }
        table
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn associated_matches_sup(table in log_convex_table(), t in 0.0f64..1.0) {
        let seq = WeightSequence::from_log_table(table.clone()).unwrap();
        let af = AssociatedFunction::new(&seq).unwrap();
        let rho = 1e-2 * (af.max_rho() * 0.99 / 1e-2).powf(t);
        let m = af.eval(rho).unwrap();
        let o = sup(&table, rho);
        prop_assert!((m - o).abs() <= 1e-10 * o.abs().max(1.0));
    }

    #[test]
    fn associated_is_monotone(table in log_convex_table(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let seq = WeightSequence::from_log_table(table).unwrap();
        let af = AssociatedFunction::new(&seq).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r = |t: f64| 1e-2 * (af.max_rho() * 0.99 / 1e-2).powf(t);
        prop_assert!(af.eval(r(lo)).unwrap() <= af.eval(r(hi)).unwrap() + 1e-12);
    }

    #[test]
    fn inverse_round_trips(s in 1.05f64..4.0, t in 0.05f64..0.95) {
        let seq = make_gevrey(s, 300).unwrap();
        let af = AssociatedFunction::new(&seq).unwrap();
        let rho = af.m1() * (af.max_rho() * 0.99 / af.m1()).powf(t);
        let back = af.inverse(af.eval(rho).unwrap()).unwrap();
        prop_assert!((back - rho).abs() <= 1e-8 * rho);
    }

    #[test]
    fn normalization_is_below_and_idempotent(noise in prop::collection::vec(0.0f64..2.0, 16..80)) {
        let mut v = Vec::with_capacity(noise.len());
        let mut acc = 1.0;
        for (j, n) in noise.iter().enumerate() {
            acc += (j + 1) as f64 * n;
            v.push(acc);
        }
        let k = RSequence::table(v.clone()).unwrap();
        prop_assume!(k.looks_unbounded(2.0));
        let k1 = normalize_r_sequence(&k, 2.0).unwrap();
        for (a, b) in k1.values().iter().zip(&v) {
            prop_assert!(*a <= b * (1.0 + 1e-12));
        }
        prop_assume!(k1.looks_unbounded(2.0));
        let k2 = normalize_r_sequence(&k1, 2.0).unwrap();
        for (a, b) in k2.values().iter().zip(k1.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn ultrapolynomial_is_even_and_conjugate_symmetric(u in -1e4f64..1e4, v in -2.0f64..2.0) {
        let seq = make_gevrey(2.0, 400).unwrap();
        let p = Ultrapolynomial::new(&seq, PolyKind::Beurling { l: 0.05 }, 3.0, 1, None).unwrap();
        let w = Complex64::new(u, v);
        let a = p.eval_ln(&[w]).unwrap();
        let b = p.eval_ln(&[-w]).unwrap();
        let c = p.eval_ln(&[w.conj()]).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        prop_assert!((a - c).norm() <= 1e-10 * a.norm().max(1.0));
    }
}
