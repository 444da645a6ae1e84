use crm_core::session::{InterfaceKind, MetricsRow};
use crm_core::stats::special::{chi2_sf, f_sf, incomplete_beta, t_cdf, t_quantile};
use crm_core::stats::{
    backchannel_tally, bic_bayes_factor, bootstrap_feedback_duration, dataset_from_rows, duration_pairs,
    effect_bayes_factor, gg_epsilon, icc_2k, intelligibility_series, nars_score, nars_table, one_sample_t, one_sample_t_values,
    paired_t, read_coded_behaviours, read_metrics_csv, rm_anova, write_anova_csv, write_ttest_csv, Behavior,
    CodedBehavior, Factor, NarsScore, RmDataset, Summary,
};
use crm_core::stimulus::TmrCondition;
use crm_core::voice::VoiceCondition;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, StudentsT};

#[test]
fn distributions_match_statrs() {
    for &df in &[1.0, 2.5, 19.0, 36.0, 104.461] {
        let oracle = StudentsT::new(0.0, 1.0, df).unwrap();
        for &t in &[-5.0, -1.17, 0.0, 0.3, 1.65, 3.83] {
            assert!((t_cdf(t, df) - oracle.cdf(t)).abs() < 1e-10, "t {t} df {df}");
        }
        for &p in &[0.025, 0.5, 0.9, 0.975] {
            assert!((t_quantile(p, df) - oracle.inverse_cdf(p)).abs() < 1e-7);
        }
    }
    for &(d1, d2) in &[(1.0, 26.0), (1.186, 30.826), (3.643, 94.73), (6.0, 156.0)] {
        let oracle = FisherSnedecor::new(d1, d2).unwrap();
        for &f in &[0.065, 0.587, 1.09, 4.0, 50.0] {
            assert!((f_sf(f, d1, d2) - oracle.sf(f)).abs() < 1e-10, "F {f} ({d1},{d2})");
        }
    }
    for &k in &[1.0, 2.0, 5.0, 20.0] {
        let oracle = ChiSquared::new(k).unwrap();
        for &x in &[0.1, 1.0, 3.84, 12.0, 40.0] {
            assert!((chi2_sf(x, k) - oracle.sf(x)).abs() < 1e-10);
        }
    }
    assert!((incomplete_beta(2.0, 3.0, 0.5) - 0.6875).abs() < 1e-14);
}

#[test]
fn nars_table_summary_statistics() {
    let s1 = one_sample_t(Summary { mean: 14.8, sd: 3.73, n: 20 }, 18.0).unwrap();
    assert!((s1.t + 3.83).abs() < 0.02, "{}", s1.t);
    assert_eq!(s1.df, 19.0);
    assert!(s1.p < 0.01);
    assert!((s1.ci95.0 - 13.05).abs() < 0.01 && (s1.ci95.1 - 16.55).abs() < 0.01);
    let s1_text_sd = one_sample_t(Summary { mean: 14.8, sd: 3.74, n: 20 }, 18.0).unwrap();
    assert!((s1_text_sd.t + 3.83).abs() < 0.02);
    let s2 = one_sample_t(Summary { mean: 15.8, sd: 2.17, n: 20 }, 15.0).unwrap();
    assert!((s2.t.abs() - 1.65).abs() < 0.01);
    assert!(s2.t > 0.0, "sign follows mean − expected");
    assert!((s2.ci95.0 - 14.79).abs() < 0.01 && (s2.ci95.1 - 16.81).abs() < 0.01);
    let s3 = one_sample_t(Summary { mean: 8.5, sd: 1.91, n: 20 }, 9.0).unwrap();
    assert!((s3.t.abs() - 1.17).abs() < 0.02);
    assert!((s3.ci95.0 - 7.61).abs() < 0.01 && (s3.ci95.1 - 9.39).abs() < 0.01);
    assert!(s2.p > 0.05 && s3.p > 0.05);
}

#[test]
fn nars_table_from_items() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: Vec<NarsScore> =
        (0..20).map(|_| nars_score(&(0..14).map(|_| rng.random_range(1..=5u8)).collect::<Vec<_>>()).unwrap()).collect();
    let rows = nars_table(&scores).unwrap();
    assert_eq!(rows.len(), 3);
    let s1: Vec<f64> = scores.iter().map(|s| s.s1 as f64).collect();
    assert!((rows[0].test.t - one_sample_t_values(&s1, 18.0).unwrap().t).abs() < 1e-12);
    let mut out = Vec::new();
    write_ttest_csv(&rows, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
}

/// Textbook two-factor within-subjects sums of squares from marginal means.
fn brute_force_2x2(x: &[[[f64; 2]; 2]]) -> [(f64, f64); 3] {
    let n = x.len() as f64;
    let g = x.iter().flatten().flatten().sum::<f64>() / (4.0 * n);
    let s: Vec<f64> = x.iter().map(|m| m.iter().flatten().sum::<f64>() / 4.0).collect();
    let a = |i: usize| x.iter().map(|m| m[i][0] + m[i][1]).sum::<f64>() / (2.0 * n);
    let b = |j: usize| x.iter().map(|m| m[0][j] + m[1][j]).sum::<f64>() / (2.0 * n);
    let ab = |i: usize, j: usize| x.iter().map(|m| m[i][j]).sum::<f64>() / n;
    let sa = |k: usize, i: usize| (x[k][i][0] + x[k][i][1]) / 2.0;
    let sb = |k: usize, j: usize| (x[k][0][j] + x[k][1][j]) / 2.0;
    let mut ss = [(0.0, 0.0); 3];
    for i in 0..2 {
        ss[0].0 += 2.0 * n * (a(i) - g).powi(2);
        ss[1].0 += 2.0 * n * (b(i) - g).powi(2);
        for j in 0..2 {
            ss[2].0 += n * (ab(i, j) - a(i) - b(j) + g).powi(2);
        }
    }
    for k in 0..x.len() {
        for i in 0..2 {
            ss[0].1 += 2.0 * (sa(k, i) - a(i) - s[k] + g).powi(2);
            ss[1].1 += 2.0 * (sb(k, i) - b(i) - s[k] + g).powi(2);
            for j in 0..2 {
                ss[2].1 += (x[k][i][j] - sa(k, i) - sb(k, j) - ab(i, j) + a(i) + b(j) + s[k] - g).powi(2);
            }
        }
    }
    ss
}

#[test]
fn anova_matches_brute_force_decomposition() {
    let x = [[[52.0, 61.0], [70.0, 66.0]], [[48.0, 59.0], [75.0, 71.0]], [[57.0, 58.0], [68.0, 73.0]]];
    let data = RmDataset::new(
        vec![Factor::new("a", ["1", "2"]), Factor::new("b", ["1", "2"])],
        vec!["s1".into(), "s2".into(), "s3".into()],
        x.iter().map(|m| m.iter().flatten().copied().collect()).collect(),
    )
    .unwrap();
    let table = rm_anova(&data).unwrap();
    let oracle = brute_force_2x2(&x);
    for (effect, (ss_eff, ss_err)) in table.effects.iter().zip(oracle) {
        assert!((effect.ss_effect - ss_eff).abs() < 1e-9, "{}", effect.name);
        assert!((effect.ss_error - ss_err).abs() < 1e-9, "{}", effect.name);
        assert!((effect.f - (ss_eff / 1.0) / (ss_err / 2.0)).abs() < 1e-9);
        assert_eq!(effect.epsilon_gg, 1.0);
        assert!(!effect.corrected);
    }
    assert_eq!(table.effects.iter().map(|e| e.name.as_str()).collect::<Vec<_>>(), ["a", "b", "a*b"]);
}

fn random_dataset(rng: &mut ChaCha8Rng, subjects: usize, levels: &[usize]) -> RmDataset {
    let cells: usize = levels.iter().product();
    let factors = levels.iter().enumerate().map(|(i, &l)| Factor::new(format!("f{i}"), (0..l).map(|j| j.to_string()))).collect();
    let values = (0..subjects)
        .map(|_| {
            let offset = rng.random_range(-10.0..10.0);
            (0..cells).map(|c| offset + c as f64 * 0.7 + rng.random_range(-5.0..5.0)).collect()
        })
        .collect();
    RmDataset::new(factors, (0..subjects).map(|s| format!("s{s}")).collect(), values).unwrap()
}

#[test]
fn two_level_f_equals_paired_t_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let d = random_dataset(&mut rng, 3, &[2]);
        let f = rm_anova(&d).unwrap().effects[0].f;
        let a: Vec<f64> = d.values.iter().map(|r| r[0]).collect();
        let b: Vec<f64> = d.values.iter().map(|r| r[1]).collect();
        let t = paired_t(&a, &b).unwrap().t;
        assert!((f - t * t).abs() < 1e-9 * f.max(1.0), "F {f} t² {}", t * t);
    }
}

#[test]
fn full_design_reports_mauchly_and_corrections() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_dataset(&mut rng, 27, &[2, 4, 3]);
    let t = rm_anova(&d).unwrap();
    assert_eq!(t.effects.len(), 7);
    for e in &t.effects {
        assert_eq!(e.df_error, e.df_effect * 26.0);
        let k = e.df_effect;
        assert!(e.epsilon_gg >= 1.0 / k - 1e-12 && e.epsilon_gg <= 1.0);
        assert!((0.0..=1.0).contains(&e.partial_eta_sq));
        assert_eq!(e.mauchly.is_some(), k > 1.0);
        if let Some(m) = e.mauchly {
            assert_eq!(e.corrected, m.p < 0.05);
            assert!((0.0..=1.0).contains(&m.w));
        }
        assert!(effect_bayes_factor(e, t.subjects).bf10 > 0.0);
    }
    // Too few subjects to estimate a 6 × 6 contrast covariance: corrected anyway.
    let small = random_dataset(&mut rng, 4, &[2, 4, 3]);
    let t = rm_anova(&small).unwrap();
    let three_way = t.effect("f0*f1*f2").unwrap();
    assert!(three_way.mauchly.is_none() && three_way.corrected);
    let mut out = Vec::new();
    write_anova_csv(&t, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 8);
}

#[test]
fn compound_symmetry_gives_unit_epsilon() {
    for (k, var, cov) in [(3, 4.0, 1.5), (4, 10.0, -2.0), (6, 1.0, 0.9)] {
        let s: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { var } else { cov }).collect()).collect();
        assert!((gg_epsilon(&s).unwrap() - 1.0).abs() < 1e-9);
    }
    // A single dominant contrast drives ε to its lower bound 1/(k−1).
    let v = [1.0, -1.0, 0.0, 0.0];
    let s: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
    assert!((gg_epsilon(&s).unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn icc_examples() {
    let r = icc_2k(&[vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0], vec![4.0, 5.0]]).unwrap();
    // Hand decomposition: MSR = 10/3, MSC = 2, MSE = 0, n = 4.
    assert!((r.icc - (10.0 / 3.0) / (10.0 / 3.0 + 2.0 / 4.0)).abs() < 1e-9);
    assert!((r.icc - 20.0 / 23.0).abs() < 1e-12);
    // Rater 2 sits 3 points higher and the within-item spread exceeds the
    // between-item spread: MSR = 1/24, MSC = 18, MSE = 17/12.
    let weak = icc_2k(&[vec![1.0, 6.0], vec![3.0, 4.0], vec![2.0, 5.5], vec![2.5, 5.0]]).unwrap();
    assert!((weak.ms_rows - 1.0 / 24.0).abs() < 1e-12 && (weak.ms_error - 17.0 / 12.0).abs() < 1e-12);
    assert!((weak.icc + 22.0 / 67.0).abs() < 1e-12);
}

#[test]
fn bootstrap_envelope() {
    let r = bootstrap_feedback_duration(0.9, 91, (2.5, 3.2), 10_000, 2024).unwrap();
    let closed_form = 91.0 * (2.5 * 0.9 + 3.2 * 0.1) / 60.0;
    assert!((r.mean_min - closed_form).abs() < 0.02);
    assert!((r.mean_min - 3.90).abs() < 0.02);
    assert!((r.sd_s - 0.7 * (91.0f64 * 0.09).sqrt()).abs() < 0.1);
}

fn metrics_rows(participants: usize, seed: u64) -> Vec<MetricsRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for p in 0..participants {
        for interface in [InterfaceKind::Plain, InterfaceKind::Embodied] {
            let duration = rng.random_range(9.0..15.0);
            for v in VoiceCondition::EXPERIMENTAL {
                for tmr in TmrCondition::EXPERIMENTAL_DB {
                    rows.push(MetricsRow {
                        participant: format!("p{p:02}"),
                        interface,
                        tmr,
                        delta_f0: v.delta_f0,
                        delta_vtl: v.delta_vtl,
                        percent_correct: (rng.random_range(0..=7) as f64) * 100.0 / 7.0,
                        duration_min: duration,
                    });
                }
            }
        }
    }
    rows
}

#[test]
fn metrics_table_ingestion() {
    let rows = metrics_rows(5, 1);
    let mut buf = Vec::new();
    crm_core::session::write_metrics_csv(&rows, &mut buf).unwrap();
    let back = read_metrics_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
    let d = dataset_from_rows(&back).unwrap();
    assert_eq!(d.subjects.len(), 5);
    assert_eq!(d.cells(), 24);
    assert_eq!(d.values[0][0], rows[0].percent_correct);
    assert_eq!(d.values[0][23], rows[23].percent_correct);
    assert_eq!(rm_anova(&d).unwrap().effects.len(), 7);
    let (ids, a, b) = duration_pairs(&rows);
    assert_eq!((ids.len(), a.len(), b.len()), (5, 5, 5));
    assert_eq!(intelligibility_series(&rows).len(), 24);
    let mut missing = rows.clone();
    missing.remove(7);
    assert!(dataset_from_rows(&missing).is_err());
}

#[test]
fn backchannel_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut events = Vec::new();
    let mut expected = std::collections::HashMap::new();
    for coder in ["C01", "C02"] {
        for interface in [InterfaceKind::Plain, InterfaceKind::Embodied] {
            for b in Behavior::ALL {
                let n = rng.random_range(0..6);
                expected.insert((coder, interface, b), n);
                for i in 0..n {
                    events.push(CodedBehavior { coder: coder.into(), interface, behavior: b, segment: format!("seg{}", i % 3) });
                }
            }
        }
    }
    let t = backchannel_tally(&events);
    for ((c, i, b), n) in expected {
        assert_eq!(t.count(c, i, b), n);
    }
    let m = t.rating_matrix(Behavior::Smiling);
    assert!(m.iter().all(|r| r.len() == 2));
    let csv = "coder,interface,behavior,segment\nC01,embodied,smiling,s1\nC02,plain,Frowning,s1\n";
    let parsed = read_coded_behaviours(csv.as_bytes()).unwrap();
    assert_eq!(parsed[1].behavior, Behavior::Frowning);
    let mut out = Vec::new();
    backchannel_tally(&parsed).write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1 + 2 * 2 * 4);
}

proptest! {
    #[test]
    fn bic_factors_are_reciprocal(a in -600f64..600.0, b in -600f64..600.0) {
        let prod = bic_bayes_factor(a, b).bf10 * bic_bayes_factor(b, a).bf10;
        prop_assert!((prod - 1.0).abs() < 1e-9);
        let bf = bic_bayes_factor(a, b);
        prop_assert!((bf.bf01() * bf.bf10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nars_is_monotone(items in prop::collection::vec(1u8..=5, 14), pos in 0usize..14) {
        let base = nars_score(&items).unwrap();
        if items[pos] < 5 {
            let mut up = items.clone();
            up[pos] += 1;
            let raised = nars_score(&up).unwrap();
            if pos < 11 {
                prop_assert!(raised.s1 >= base.s1 && raised.s2 >= base.s2);
                prop_assert_eq!(raised.s3, base.s3);
            } else {
                prop_assert!(raised.s3 < base.s3);
            }
        }
        prop_assert!((6..=30).contains(&base.s1) && (5..=25).contains(&base.s2) && (3..=15).contains(&base.s3));
    }

    #[test]
    fn level_permutation_keeps_f(seed in 0u64..500, perm in Just([2usize, 0, 3, 1]).prop_shuffle()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, 6, &[4, 3]);
        let mut permuted = d.clone();
        for (row, orig) in permuted.values.iter_mut().zip(&d.values) {
            for (new_level, &old_level) in perm.iter().enumerate() {
                for j in 0..3 {
                    row[new_level * 3 + j] = orig[old_level * 3 + j];
                }
            }
        }
        let a = rm_anova(&d).unwrap();
        let b = rm_anova(&permuted).unwrap();
        for (x, y) in a.effects.iter().zip(&b.effects) {
            prop_assert!((x.f - y.f).abs() < 1e-9 * x.f.max(1.0));
            prop_assert!((x.epsilon_gg - y.epsilon_gg).abs() < 1e-9);
            prop_assert!((x.p_gg - y.p_gg).abs() < 1e-9);
        }
    }

    #[test]
    fn gg_correction_keeps_f(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rm_anova(&random_dataset(&mut rng, 8, &[3, 3])).unwrap();
        for e in &t.effects {
            prop_assert!((e.df_effect_gg / e.df_effect - e.epsilon_gg).abs() < 1e-12);
            prop_assert!((e.df_error_gg / e.df_error - e.epsilon_gg).abs() < 1e-12);
            let oracle = FisherSnedecor::new(e.df_effect_gg, e.df_error_gg).unwrap().sf(e.f);
            prop_assert!((e.p_gg - oracle).abs() < 1e-9, "{} p_gg {} oracle {}", e.name, e.p_gg, oracle);
        }
    }

    #[test]
    fn paired_t_reduces_to_one_sample(a in prop::collection::vec(-50.0f64..50.0, 3..20), shift in prop::collection::vec(-5.0f64..5.0, 20)) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        if let (Ok(p), Ok(o)) = (paired_t(&a, &b), one_sample_t_values(&diffs, 0.0)) {
            prop_assert!((p.t - o.t).abs() < 1e-12 * p.t.abs().max(1.0));
        }
    }
}
