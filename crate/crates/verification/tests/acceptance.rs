//! Acceptance suite: one test per criterion, each printing PASS/FAIL lines.
//! Run with `cargo test -p typology-verification --test acceptance -- --nocapture --test-threads=1`.

#![allow(clippy::approx_constant, clippy::needless_range_loop)]

use innovation_typology::cli::{self, EXIT_OK, EXIT_REPRODUCTION};
use innovation_typology::datamodel::{reference_dataset, Dimension, InnovationType};
use innovation_typology::discriminant::{
    boxs_m, fit, fit_observations, leave_one_out, leave_one_out_observations, resubstitution,
    DiscriminantOptions, Observations, Priors, VariableSelection,
};
use innovation_typology::numkernel::{eigen_symmetric, log_det_spd, spd_inverse, SymMatrix};
use innovation_typology::pca::{correlation_matrix, run_pca};
use innovation_typology::typology::{band_of, group_profiles, Band};
use innovation_typology::univariate::{anova_table, descriptive_stats, one_way_anova, wilks_table};
use rand::Rng;
use typology_oracles as oracles;
use typology_verification::{
    label_ids, random_observations, random_spd, random_symmetric, Criterion,
};

const ANOVA_F: [f64; 5] = [3.451, 8.510, 10.708, 3.125, 23.572];
/// Printed significance; 0 stands for ".000".
const ANOVA_P: [f64; 5] = [0.027, 0.0, 0.0, 0.038, 0.0];
const ANOVA_SS: [(f64, f64, f64); 5] = [
    (3164.170, 4584.469, 7748.640),
    (5168.638, 3036.874, 8205.511),
    (15549.727, 7260.716, 22810.443),
    (2275.034, 3640.026, 5915.060),
    (15571.418, 3303.005, 18874.423),
];

#[test]
fn criterion_1_anova() {
    let mut c = Criterion::new(1);
    let table = anova_table(&reference_dataset()).unwrap();
    for (i, row) in table.iter().enumerate() {
        let d = row.dimension.label();
        let a = &row.anova;
        let (ssb, ssw, sst) = ANOVA_SS[i];
        for (name, want, got) in [
            ("ss_between", ssb, a.ss_between),
            ("ss_within", ssw, a.ss_within),
            ("ss_total", sst, a.ss_total),
        ] {
            let rel = (got - want).abs() / want;
            c.check(
                &format!("{d} {name}"),
                rel <= 0.005,
                format!("expected {want} ± 0.5%, got {got:.3} ({:.3}%)", 100.0 * rel),
            );
        }
        c.approx(&format!("{d} F"), ANOVA_F[i], 0.02, a.f);
        if ANOVA_P[i] == 0.0 {
            c.check(
                &format!("{d} p"),
                a.p < 0.0005,
                format!("expected < 0.0005, got {:.6}", a.p),
            );
        } else {
            c.approx(&format!("{d} p"), ANOVA_P[i], 0.005, a.p);
        }
    }
    c.finish();
}

#[test]
fn criterion_2_wilks() {
    let mut c = Criterion::new(2);
    let m = reference_dataset();
    let anova = anova_table(&m).unwrap();
    let wilks = wilks_table(&m).unwrap();
    for ((w, a), want) in wilks
        .iter()
        .zip(&anova)
        .zip([0.592, 0.370, 0.318, 0.615, 0.175])
    {
        let d = w.dimension.label();
        c.approx(&format!("{d} lambda"), want, 0.005, w.lambda);
        let rel = (w.f - a.anova.f).abs() / a.anova.f;
        c.check(
            &format!("{d} F equals ANOVA F"),
            rel <= 1e-9,
            format!("relative difference {rel:e}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_3_pca() {
    let mut c = Criterion::new(3);
    let pca = run_pca(&reference_dataset()).unwrap();
    let above = pca.eigenvalues.iter().filter(|&&l| l > 1.0).count();
    c.check(
        "eigenvalues > 1",
        above == 2,
        format!("expected 2, got {above} ({:?})", pca.eigenvalues),
    );
    c.approx("proportion 1", 0.391, 0.01, pca.proportions[0]);
    c.approx("proportion 2", 0.339, 0.01, pca.proportions[1]);
    let printed: [(Dimension, usize, f64); 9] = [
        (Dimension::NewUse, 0, 0.930),
        (Dimension::AdaptationPiece, 0, 0.841),
        (Dimension::AdaptationPiece, 1, 0.418),
        (Dimension::Emulation, 0, 0.251),
        (Dimension::Emulation, 1, 0.814),
        (Dimension::FreeAlternative, 0, -0.476),
        (Dimension::FreeAlternative, 1, 0.668),
        (Dimension::Package, 0, 0.310),
        (Dimension::Package, 1, -0.641),
    ];
    for (d, j, want) in printed {
        c.approx(
            &format!("loading {} component {}", d.label(), j + 1),
            want,
            0.02,
            pca.loading(d, j),
        );
    }
    c.finish();
}

#[test]
fn criterion_4_classification() {
    use InnovationType::*;
    let mut c = Criterion::new(4);
    let m = reference_dataset();
    let opts = DiscriminantOptions::default();
    let resub = resubstitution(&m, &opts).unwrap();
    c.approx("resubstitution rate", 88.0, 0.0, resub.correct_rate);
    let mut errors: Vec<(String, InnovationType)> = resub
        .mismatches()
        .iter()
        .map(|e| (e.software_id.clone(), e.predicted))
        .collect();
    errors.sort();
    let expected = vec![
        ("MinGW".to_string(), Package),
        ("Ncurses".to_string(), NewUseOriented),
        ("Pidgin".to_string(), FreeAlternative),
    ];
    c.check(
        "resubstitution errors",
        errors == expected,
        format!("expected {expected:?}, got {errors:?}"),
    );
    let loo = leave_one_out(&m, &opts).unwrap();
    c.approx("leave-one-out rate", 72.0, 0.0, loo.correct_rate);
    for (g, want) in [
        (AdaptationPiece, [1, 1, 1, 1, 1]),
        (Emulator, [0, 1, 1, 0, 3]),
    ] {
        let got = loo.row(g).unwrap();
        c.check(
            &format!("cross-validated {} row", g.label()),
            got == want,
            format!("expected {want:?}, got {got:?}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_5_box() {
    let mut c = Criterion::new(5);
    let b = boxs_m(&reference_dataset(), &DiscriminantOptions::default()).unwrap();
    c.check(
        "dims_used",
        b.dims_used == 3,
        format!("expected 3, got {}", b.dims_used),
    );
    c.check("df1", b.df1 == 24, format!("expected 24, got {}", b.df1));
    c.best_effort("M", 61.774, 2.0, b.m_statistic);
    c.best_effort("F", 1.681, 0.1, b.f_approx);
    c.best_effort("p", 0.021, 0.01, b.p);
    c.info(format!("df2 = {:.3}; convention: {}", b.df2, b.convention));
    c.finish();
}

#[test]
fn criterion_6_typology() {
    let mut c = Criterion::new(6);
    let m = reference_dataset();
    let resub = resubstitution(&m, &DiscriminantOptions::default()).unwrap();
    let predicted: Vec<_> = resub.per_case.iter().map(|r| r.predicted).collect();
    let model = group_profiles(&m, &predicted, "reference").unwrap();
    use Band::*;
    use InnovationType::*;
    let expected: [(InnovationType, [f64; 5], [Band; 5]); 5] = [
        (
            FreeAlternative,
            [56.89, 74.65, 17.46, 41.06, 26.27],
            [Average, High, VeryLow, Average, Low],
        ),
        (
            AdaptationPiece,
            [92.18, 70.49, 60.22, 61.44, 28.95],
            [VeryHigh, High, High, High, Low],
        ),
        (
            NewUseOriented,
            [74.04, 37.71, 8.61, 68.61, 20.82],
            [High, Low, VeryLow, High, Low],
        ),
        (
            Emulator,
            [79.55, 54.29, 87.12, 55.15, 13.53],
            [High, Average, VeryHigh, Average, VeryLow],
        ),
        (
            Package,
            [73.43, 42.10, 23.62, 62.06, 84.49],
            [High, Average, Low, High, VeryHigh],
        ),
    ];
    for (t, means, bands) in expected {
        let p = model.profile(t);
        for d in Dimension::ALL {
            let item = format!("{} / {}", t.label(), d.label());
            c.approx(&format!("mean {item}"), means[d.index()], 0.1, p.mean(d));
            c.check(
                &format!("band {item}"),
                p.band(d) == bands[d.index()],
                format!("expected {}, got {}", bands[d.index()], p.band(d)),
            );
        }
    }
    for (v, want) in [(60.22, High), (13.53, VeryLow)] {
        let got = band_of(v).unwrap();
        c.check(
            &format!("band_of({v})"),
            got == want,
            format!("expected {want}, got {got}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_7_descriptives() {
    let mut c = Criterion::new(7);
    let desc = descriptive_stats(&reference_dataset()).unwrap();
    let means = [74.0, 56.0, 35.0, 57.0, 38.0];
    let sds = [17.6, 18.1, 30.2, 15.4, 27.5];
    let max = [98.1, 81.3, 92.9, 89.3, 93.5];
    let min = [28.0, 27.6, 2.4, 25.0, 5.9];
    for (i, d) in desc.iter().enumerate() {
        let name = d.dimension.label();
        c.approx(&format!("{name} mean"), means[i], 0.5, d.mean);
        c.approx(&format!("{name} sample sd"), sds[i], 0.1, d.sd);
        c.info(format!(
            "{name} population sd {:.3} (|diff| {:.3}) against printed {}",
            d.sd_population,
            (d.sd_population - sds[i]).abs(),
            sds[i]
        ));
        c.check(
            &format!("{name} max"),
            d.max == max[i],
            format!("expected {}, got {}", max[i], d.max),
        );
        c.check(
            &format!("{name} min"),
            d.min == min[i],
            format!("expected {}, got {}", min[i], d.min),
        );
    }
    c.finish();
}

fn rel(a: f64, b: f64) -> f64 {
    oracles::rel_diff(a, b)
}

#[test]
fn criterion_8_properties() {
    let mut c = Criterion::new(8);
    let mut rng = oracles::seeded_rng(0x5eed_0008);

    // SS partition and ANOVA oracle agreement
    let mut worst_partition: f64 = 0.0;
    let mut worst_anova: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.gen_range(2..=5);
        let n = rng.gen_range(2 * k..=4 * k);
        let groups: Vec<usize> = (0..n)
            .map(|i| {
                if i < 2 * k {
                    i % k
                } else {
                    rng.gen_range(0..k)
                }
            })
            .collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let a = one_way_anova(&values, &groups).unwrap();
        worst_partition = worst_partition.max(rel(a.ss_between + a.ss_within, a.ss_total));
        let o = oracles::anova_bruteforce(&values, &groups);
        for (x, y) in [
            (a.ss_between, o.ss_between),
            (a.ss_within, o.ss_within),
            (a.ss_total, o.ss_total),
            (a.f, o.f.unwrap()),
        ] {
            worst_anova = worst_anova.max(rel(x, y));
        }
    }
    c.check(
        "SS partition identity",
        worst_partition <= 1e-9,
        format!("worst relative gap {worst_partition:e}"),
    );
    c.check(
        "ANOVA oracle agreement (1000)",
        worst_anova <= 1e-9,
        format!("worst relative gap {worst_anova:e}"),
    );

    // eigen residuals
    let mut worst_residual: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let a = random_symmetric(&mut rng, n);
        let e = eigen_symmetric(&a).unwrap();
        for (j, v) in e.eigenvectors.iter().enumerate() {
            let av = a.mul_vec(v);
            let r = av
                .iter()
                .zip(v)
                .map(|(x, y)| (x - e.eigenvalues[j] * y).abs())
                .fold(0.0, f64::max);
            worst_residual = worst_residual.max(r / a.norm_frobenius().max(1.0));
        }
    }
    c.check(
        "eigen residuals",
        worst_residual <= 1e-8,
        format!("worst scaled residual {worst_residual:e}"),
    );

    // determinant and inverse against cofactor / Gauss-Jordan
    let mut worst_det: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=3);
        let rows = random_spd(&mut rng, n);
        let s = SymMatrix::from_rows(&rows).unwrap();
        worst_det = worst_det.max(rel(
            log_det_spd(&s).unwrap().exp(),
            oracles::det_cofactor(&rows),
        ));
        let inv = spd_inverse(&s).unwrap();
        let gj = oracles::gauss_jordan_inverse(&rows).unwrap();
        for i in 0..n {
            for j in 0..n {
                worst_inv = worst_inv.max(rel(inv.get(i, j), gj[i][j]));
            }
        }
    }
    c.check(
        "determinant oracle agreement (1000)",
        worst_det <= 1e-9,
        format!("worst relative gap {worst_det:e}"),
    );
    c.check(
        "inverse oracle agreement (1000)",
        worst_inv <= 1e-8,
        format!("worst relative gap {worst_inv:e}"),
    );

    // two-group discriminant direction
    let mut worst_cos: f64 = 1.0;
    for _ in 0..1000 {
        let p = rng.gen_range(1..=4);
        let per_group = rng.gen_range(p + 2..p + 6);
        let obs = random_observations(&mut rng, 2, per_group, p, 3.0);
        let model = fit_observations(&obs, &DiscriminantOptions::all_variables()).unwrap();
        let pooled = model.pooled_within_cov.to_rows();
        let means = &model.group_means;
        match oracles::lda_two_group_analytic(&means[0].mean, &means[1].mean, &pooled) {
            Ok(dir) => {
                let cos = oracles::abs_cosine(&dir, &model.canonical_functions[0].coefficients);
                worst_cos = worst_cos.min(cos);
            }
            Err(e) => panic!("oracle failed: {e}"),
        }
    }
    c.check(
        "two-group direction oracle agreement (1000)",
        worst_cos >= 1.0 - 1e-8,
        format!("worst |cosine| {worst_cos:.12}"),
    );

    // leave-one-out against per-case brute-force refits
    let mut loo_mismatch = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(2..=4);
        let p = rng.gen_range(1..=3);
        let per_group = rng.gen_range(3..=5).max(p + 1);
        let obs = random_observations(&mut rng, k, per_group, p, 1.5);
        let opts = DiscriminantOptions::all_variables();
        let main: Vec<usize> = leave_one_out_observations(&obs, &opts)
            .unwrap()
            .per_case
            .iter()
            .map(|c| c.predicted.index())
            .collect();
        let brute = oracles::loocv_bruteforce(&obs.values, &label_ids(&obs.labels)).unwrap();
        if main != brute {
            loo_mismatch += 1;
        }
    }
    c.check(
        "LOOCV equals brute-force refit (1000)",
        loo_mismatch == 0,
        format!("{loo_mismatch} mismatching instance(s)"),
    );

    // reference data: LOOCV brute force on the selected variables
    let m = reference_dataset();
    let obs = Observations::from_matrix(&m);
    let model = fit(&m, &DiscriminantOptions::default()).unwrap();
    let projected: Vec<Vec<f64>> = obs
        .values
        .iter()
        .map(|v| model.variables.iter().map(|&i| v[i]).collect())
        .collect();
    let brute = oracles::loocv_bruteforce(&projected, &label_ids(&obs.labels)).unwrap();
    let main: Vec<usize> = leave_one_out(&m, &DiscriminantOptions::default())
        .unwrap()
        .per_case
        .iter()
        .map(|c| c.predicted.index())
        .collect();
    c.check(
        "reference LOOCV equals brute force",
        main == brute,
        format!("{main:?} vs {brute:?}"),
    );

    // loadings reconstruct the correlation matrix
    let pca = run_pca(&m).unwrap();
    let r = correlation_matrix(&m).unwrap();
    let mut worst_rec: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let rec: f64 = (0..5)
                .map(|k| pca.loadings[i][k] * pca.loadings[j][k])
                .sum();
            worst_rec = worst_rec.max((rec - r.get(i, j)).abs());
        }
    }
    c.check(
        "loadings reconstruct correlation",
        worst_rec <= 1e-9,
        format!("worst gap {worst_rec:e}"),
    );

    // affine invariance of predictions
    let mut changed = 0;
    for _ in 0..50 {
        let scale: Vec<f64> = (0..5).map(|_| rng.gen_range(0.05..20.0)).collect();
        let shift: Vec<f64> = (0..5).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let values = obs
            .values
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(d, x)| scale[d] * x + shift[d])
                    .collect()
            })
            .collect();
        let moved = Observations::new(
            obs.ids.clone(),
            obs.labels.clone(),
            values,
            obs.variable_names.clone(),
        )
        .unwrap();
        for opts in [
            DiscriminantOptions::default(),
            DiscriminantOptions::all_variables(),
        ] {
            let a = leave_one_out_observations(&obs, &opts).unwrap();
            let b = leave_one_out_observations(&moved, &opts).unwrap();
            if a.per_case != b.per_case {
                changed += 1;
            }
        }
    }
    c.check(
        "affine invariance of predictions",
        changed == 0,
        format!("{changed} changed run(s)"),
    );

    // equal priors vs proportional with equal group sizes
    let eq = resubstitution(
        &m,
        &DiscriminantOptions {
            selection: VariableSelection::All,
            priors: Priors::Equal,
        },
    )
    .unwrap();
    let pr = resubstitution(
        &m,
        &DiscriminantOptions {
            selection: VariableSelection::All,
            priors: Priors::Proportional,
        },
    )
    .unwrap();
    c.check(
        "priors irrelevant with equal sizes",
        eq.per_case == pr.per_case,
        String::new(),
    );

    // band partition totality
    let mut bad = 0;
    let mut previous = Band::VeryLow;
    for i in 0..=100_000 {
        let v = i as f64 / 1000.0;
        let b = band_of(v).unwrap();
        let (lo, hi) = b.range();
        let inside = v >= lo && (v < hi || (b == Band::VeryHigh && v <= 100.0));
        let members = Band::ALL
            .iter()
            .filter(|x| {
                let (l, h) = x.range();
                v >= l && (v < h || (**x == Band::VeryHigh && v <= 100.0))
            })
            .count();
        if !inside || members != 1 || b < previous {
            bad += 1;
        }
        previous = b;
    }
    c.check(
        "band partition totality",
        bad == 0,
        format!("{bad} bad point(s)"),
    );
    c.finish();
}

fn run_reproduce(extra: &[&str]) -> (Vec<u8>, u8) {
    let argv = ["typology", "reproduce"]
        .into_iter()
        .chain(extra.iter().copied());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    (out, code)
}

#[test]
fn criterion_9_determinism() {
    let mut c = Criterion::new(9);
    for format in ["md", "csv", "json"] {
        let (a, code_a) = run_reproduce(&["--format", format]);
        let (b, code_b) = run_reproduce(&["--format", format]);
        c.check(
            &format!("byte-identical reproduce ({format})"),
            a == b && !a.is_empty(),
            format!("{} and {} bytes", a.len(), b.len()),
        );
        c.check(
            &format!("exit status on pass ({format})"),
            code_a == EXIT_OK && code_b == EXIT_OK,
            format!("expected 0, got {code_a}/{code_b}"),
        );
    }
    // a perturbed transcription must fail a mandatory check
    let m = reference_dataset();
    let mut first = true;
    let bumped = m
        .map_values(|d, v| {
            if first && d == Dimension::Package {
                first = false;
                v + 5.0
            } else {
                v
            }
        })
        .unwrap();
    let path = std::env::temp_dir().join(format!("typology-perturbed-{}.csv", std::process::id()));
    let mut buf = Vec::new();
    innovation_typology::datamodel::write_matrix(&bumped, &mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    let (_, code) = run_reproduce(&["--matrix", path.to_str().unwrap()]);
    let _ = std::fs::remove_file(&path);
    c.check(
        "exit status on failure",
        code == EXIT_REPRODUCTION,
        format!("expected 3, got {code}"),
    );
    c.finish();
}
