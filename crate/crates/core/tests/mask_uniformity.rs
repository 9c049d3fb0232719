use statrs::distribution::{ChiSquared, ContinuousCDF};

use inpaint_core::harness::{gen_masks, UttLength};

#[test]
fn onsets_are_uniform_over_the_allowed_range() {
    let len = 48000;
    let (margin, width) = (1600, 3200);
    let utts: Vec<UttLength> = (0..10000)
        .map(|i| UttLength {
            utt: format!("spk{}/utt{i:05}", i % 37),
            len,
            sample_rate: 16000,
        })
        .collect();
    let report = gen_masks(&utts, 200, 11, 100);
    assert_eq!(report.masks.len(), utts.len());
    let lo = margin;
    let span = (len - margin - width - lo + 1) as f64;
    let bins = 20;
    let mut counts = vec![0f64; bins];
    for m in &report.masks {
        let u = (m.t1 - lo) as f64 / span;
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let expected = report.masks.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi-square {chi2:.2}, p = {p:.4}, counts {counts:?}");
}

#[test]
fn different_seeds_move_the_masks() {
    let utts = [UttLength {
        utt: "a".into(),
        len: 40000,
        sample_rate: 16000,
    }];
    let onsets: std::collections::HashSet<usize> =
        (0..50).map(|s| gen_masks(&utts, 100, s, 100).masks[0].t1).collect();
    assert!(onsets.len() > 40);
}
