//! Decoders against exhaustive linear-domain likelihood search.

use covert_relay::channel::RngStream;
use covert_relay::decoders::{
    argmax_first, jmap_decode, llcrtf_decode_slot_k, llcrtf_decode_slot_nk, sodtrtf_decode_slot1,
    sodtrtf_decode_slot2, Decoder, DecodeHypothesis,
};
use covert_relay::schemes::{compute_crossover, CrossoverProbs, FrameModel, Scheme, SchemeParams};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn density(r: C, mean: C, var: f64) -> f64 {
    (-(r - mean).norm_sqr() / var).exp() / (PI * var)
}

/// Slot-k means and variances for every `(a, b)`, built from scratch.
fn slot1_table(p: &SchemeParams<f64>, h: C) -> Vec<(C, f64)> {
    let m = p.order;
    let mut v = Vec::new();
    for a in 0..2 {
        for b in 0..m {
            let y = C::from_polar(1.0, -2.0 * PI * b as f64 / m as f64);
            let var = p.noise + if a == 1 { (1.0 - p.alpha) * p.e_h } else { 0.0 };
            v.push((h * y * (p.alpha * p.e_h).sqrt(), var));
        }
    }
    v
}

/// Slot-(n+k) means: index `a*M + b`, `a = 0` the boosted rotated set.
fn slot2_table(p: &SchemeParams<f64>, h: C) -> Vec<C> {
    let m = p.order;
    let y = |b: usize| C::from_polar(1.0, -2.0 * PI * b as f64 / m as f64);
    let boost = C::from_polar(((2.0 - p.alpha) * p.e_h).sqrt(), p.theta);
    (0..m)
        .map(|b| h * y(b) * boost)
        .chain((0..m).map(|b| h * y(b) * p.e_h.sqrt()))
        .collect()
}

fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[test]
fn per_slot_decoders_match_exhaustive_search() {
    for (m, noise) in [(4usize, 0.05), (8, 0.02)] {
        let p = SchemeParams::new(0.8, m, noise);
        let fm = FrameModel::new(&p).unwrap();
        let cp = compute_crossover(&p).unwrap();
        let mut rng = RngStream::new(3, 0, m as u64).rng();
        for _ in 0..100_000 {
            let f = fm.frame(Scheme::Dtrtf, &cp, false, &mut rng);
            let h1 = f.h_hb_k.coefficient;
            let h2 = f.h_hb_nk.coefficient;
            let l1: Vec<f64> = slot1_table(&p, h1).iter().map(|&(mu, v)| density(f.r_k, mu, v)).collect();
            let i1 = first_max(&l1);
            let got1 = sodtrtf_decode_slot1(f.r_k, &f.h_hb_k, &p).unwrap();
            assert_eq!(got1, (i1 >= m, i1 % m));
            assert_eq!(llcrtf_decode_slot_k(f.r_k, &f.h_hb_k, &p).unwrap(), got1);

            let l2: Vec<f64> = slot2_table(&p, h2).iter().map(|&mu| density(f.r_nk, mu, noise)).collect();
            let i2 = first_max(&l2);
            let got2 = sodtrtf_decode_slot2(f.r_nk, &f.h_hb_nk, &p).unwrap();
            assert_eq!(got2, (i2 >= m, i2 % m));
            assert_eq!(llcrtf_decode_slot_nk(f.r_nk, &f.h_hb_nk, &p).unwrap(), got2.1);
        }
    }
}

#[test]
fn jmap_matches_exhaustive_mixture_search() {
    let p = SchemeParams::new(0.9, 4, 0.05);
    let cp = compute_crossover(&p).unwrap();
    let fm = FrameModel::new(&p).unwrap();
    let dec = Decoder::new(&p).unwrap();
    let mut rng = RngStream::new(4, 0, 0).rng();
    let m = p.order;
    for _ in 0..20_000 {
        let f = fm.frame(Scheme::Dtrtf, &cp, false, &mut rng);
        let t1 = slot1_table(&p, f.h_hb_k.coefficient);
        let t2 = slot2_table(&p, f.h_hb_nk.coefficient);
        let lik: Vec<f64> = (0..2 * m * m)
            .map(|i| {
                let h = DecodeHypothesis::from_index(i, m);
                let (mu, v) = t1[h.a as usize * m + h.b_k];
                let mix = cp.prob(h.a, false) * density(f.r_nk, t2[h.b_nk], p.noise)
                    + cp.prob(h.a, true) * density(f.r_nk, t2[m + h.b_nk], p.noise);
                density(f.r_k, mu, v) * mix
            })
            .collect();
        let want = DecodeHypothesis::from_index(first_max(&lik), m);
        let got = jmap_decode(f.r_k, f.r_nk, &f.h_hb_k, &f.h_hb_nk, &cp, &p).unwrap();
        assert_eq!(got.hypothesis, want);
        let scores = dec.jmap_scores(f.r_k, f.r_nk, f.h_hb_k.coefficient, f.h_hb_nk.coefficient, &cp);
        assert_eq!(argmax_first(&scores).0, want.index(m));
    }
}

#[test]
fn perfect_helper_jmap_is_product_ml() {
    let p = SchemeParams::new(0.7, 4, 0.1);
    let cp = CrossoverProbs::perfect();
    let fm = FrameModel::new(&p).unwrap();
    let mut rng = RngStream::new(5, 0, 0).rng();
    let m = p.order;
    for _ in 0..20_000 {
        let f = fm.frame(Scheme::Dtrtf, &cp, false, &mut rng);
        let t1 = slot1_table(&p, f.h_hb_k.coefficient);
        let t2 = slot2_table(&p, f.h_hb_nk.coefficient);
        // Alice's bit picks the slot-(n+k) set directly.
        let lik: Vec<f64> = (0..2 * m * m)
            .map(|i| {
                let h = DecodeHypothesis::from_index(i, m);
                let (mu, v) = t1[h.a as usize * m + h.b_k];
                density(f.r_k, mu, v) * density(f.r_nk, t2[h.a as usize * m + h.b_nk], p.noise)
            })
            .collect();
        let want = DecodeHypothesis::from_index(first_max(&lik), m);
        let got = jmap_decode(f.r_k, f.r_nk, &f.h_hb_k, &f.h_hb_nk, &cp, &p).unwrap();
        assert_eq!(got.hypothesis, want);
    }
}

#[test]
fn noiseless_recovery() {
    let p = SchemeParams::new(0.6, 8, 1e-12);
    let cp = CrossoverProbs::perfect();
    let fm = FrameModel::new(&p).unwrap();
    let mut rng = RngStream::new(6, 0, 0).rng();
    for _ in 0..2000 {
        let f = fm.frame(Scheme::Dtrtf, &cp, false, &mut rng);
        if f.h_hb_k.coefficient.norm() < 1e-3 || f.h_hb_nk.coefficient.norm() < 1e-3 {
            continue;
        }
        let got = jmap_decode(f.r_k, f.r_nk, &f.h_hb_k, &f.h_hb_nk, &cp, &p).unwrap();
        assert_eq!(got.hypothesis.a, f.x);
        assert_eq!(got.hypothesis.b_nk, f.b_nk);
        assert_eq!(sodtrtf_decode_slot2(f.r_nk, &f.h_hb_nk, &p).unwrap(), (f.selector, f.b_nk));
        // With a = 1 Alice's noncoherent OOK term interferes with b_k even
        // without noise.
        if !f.x {
            assert_eq!(got.hypothesis.b_k, f.b_k);
            assert_eq!(sodtrtf_decode_slot1(f.r_k, &f.h_hb_k, &p).unwrap().1, f.b_k);
        }
    }
}

#[test]
fn alice_bit_undecodable_as_alpha_approaches_one() {
    let p = SchemeParams::new(1.0 - 1e-6, 4, 0.01);
    let fm = FrameModel::new(&p).unwrap();
    let cp = CrossoverProbs::perfect();
    let mut rng = RngStream::new(7, 0, 0).rng();
    let n = 200_000;
    let mut errors = 0;
    for _ in 0..n {
        let f = fm.frame(Scheme::Llcrtf, &cp, false, &mut rng);
        errors += (llcrtf_decode_slot_k(f.r_k, &f.h_hb_k, &p).unwrap().0 != f.x) as u32;
    }
    let rate = errors as f64 / n as f64;
    assert!((rate - 0.5).abs() < 0.01, "{rate}");
}
