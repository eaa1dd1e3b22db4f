use kernel_lab::lab::*;
use kernel_lab::Error;

fn config(json: &str, verb: Verb) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json(json).unwrap();
    c.resolve(verb).unwrap();
    c
}

const LAPLACE: &str = r#"{"kernel":{"family":"laplace","bandwidth":1},"domain":{"kind":"torus","d":1},"n_grid":[48],"seed":5}"#;

#[test]
fn single_cell_scaling() {
    let r = run_interpolation_scaling(&config(LAPLACE, Verb::Scaling)).unwrap();
    assert_eq!(r.records.len(), 1);
    assert!(r.failures.is_empty());
    assert!(r.records[0].risk.unwrap() >= 0.0);
    assert_eq!(r.records[0].n, 48);
    assert!(r.records[0].variance.unwrap() > 0.0);
}

#[test]
fn empty_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&ScalingReport::new("empty"), dir.path()).unwrap();
    let csv = std::fs::read_to_string(&files.records).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert_eq!(csv.trim_end(), RECORD_COLUMNS.join(","));
    let svg = std::fs::read_to_string(&files.plots[0]).unwrap();
    assert!(svg.contains("no data"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files.summary).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "empty");
}

#[test]
fn one_record_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ScalingReport::new("one");
    r.records.push(Record {
        n: 10,
        lambda: Some(0.0),
        seed: 3,
        risk: Some(0.25),
        variance: None,
        wallclock_ms: None,
    });
    let files = emit_report(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(&files.records).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, vec!["n,lambda,seed,risk,variance,wallclock_ms", "10,0,3,0.25,,"]);
}

#[test]
fn records_are_reproducible() {
    let cfg = config(
        r#"{"kernel":{"family":"matern","nu":1.5,"lengthscale":0.5},"domain":{"kind":"cube","d":2},
            "noise":{"model":"rademacher","sigma":0.3},"n_grid":[32,64],"seeds":3,"seed":11}"#,
        Verb::Scaling,
    );
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let bytes: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let r = run_interpolation_scaling(&cfg).unwrap();
            std::fs::read(emit_report(&r, d.path()).unwrap().records).unwrap()
        })
        .collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(String::from_utf8_lossy(&bytes[0]).lines().count(), 7);
}

#[test]
fn worker_count_does_not_change_records() {
    let cfg = config(LAPLACE.replace("[48]", "[24,40]").replace("\"seed\":5", "\"seed\":5,\"seeds\":3").as_str(), Verb::Scaling);
    let one = with_workers(Some(1), || run_interpolation_scaling(&cfg).unwrap()).unwrap();
    let two = with_workers(Some(2), || run_interpolation_scaling(&cfg).unwrap()).unwrap();
    assert_eq!(one.records, two.records);
}

#[test]
fn synthetic_power_law_exponent() {
    let groups: Vec<(usize, Vec<f64>)> = [64usize, 128, 256, 512, 1024]
        .iter()
        .map(|&n| (n, vec![3.0 * (n as f64).powf(-0.7); 5]))
        .collect();
    let f = fit_median_exponent("synthetic", &groups, Some((200, 0.9, 1))).unwrap();
    assert!((f.exponent + 0.7).abs() < 1e-6);
    let (lo, hi) = f.band.unwrap();
    assert!(lo <= f.exponent + 1e-9 && f.exponent <= hi + 1e-9);
}

#[test]
fn empty_lambda_grid_is_rejected() {
    let text = r#"{"kernel":{"family":"periodic_fourier","d":1,"coefficients":{"sobolev":{"max_freq":64,"order":2}}},
        "domain":{"kind":"torus","d":1},"n_grid":[64],"lambda_grid":{"explicit":[]}}"#;
    let mut c = ExperimentConfig::from_json(text).unwrap();
    let e = c.resolve(Verb::Variance).unwrap_err();
    assert!(matches!(e, Error::Config(_)));
    assert!(e.to_string().contains("lambda_grid"));
}

#[test]
fn constant_truth_concentrates_exactly() {
    let cfg = config(
        r#"{"kernel":{"family":"laplace"},"domain":{"kind":"torus","d":1},"n_grid":[20,100],
            "truth":{"kind":"constant","value":1.5},"concentration":{"trials":50},"seed":2}"#,
        Verb::Concentration,
    );
    let r = run_seminorm_concentration(&cfg).unwrap();
    assert!(r.records.iter().all(|rec| rec.risk == Some(2.25)));
    assert_eq!(r.check("bound_frequency_n20").unwrap().value, 1.0);
    assert!(r.passed());
}

#[test]
fn sample_inner_product_is_the_plain_mean() {
    let x = kernel_lab::sample_iid(&kernel_lab::Domain::Cube { d: 2 }, 37, 4).unwrap();
    let f = |p: &[f64]| p[0] * p[0] - p[1];
    let g = |p: &[f64]| (3.0 * p[1]).sin();
    let fx: Vec<f64> = x.iter().map(f).collect();
    let gx: Vec<f64> = x.iter().map(g).collect();
    let mut dot = 0.0;
    for (a, b) in fx.iter().zip(&gx) {
        dot += a * b;
    }
    assert_eq!(sample_inner_product(f, g, &x), dot / 37.0);
}

#[test]
fn conditional_bound_small() {
    let cfg = config(&LAPLACE.replace("[48]", "[40]"), Verb::Scaling);
    let r = run_conditional_bound(&cfg, 60).unwrap();
    assert_eq!(r.records.len(), 1);
    assert!(r.check("mean_risk_above_variance_minus_3se").unwrap().passed);
}

#[test]
fn single_datum_network_and_interpolator_agree() {
    let cfg = config(
        r#"{"kernel":{"family":"ntk2"},"domain":{"kind":"sphere","d":3},"n_grid":[1],"seed":8,
            "ntk":{"widths":[1048576],"eta":1.0,"steps":20000}}"#,
        Verb::Ntk,
    );
    let r = run_ntk_pipeline(&cfg).unwrap();
    let row = &r.details["networks"][0];
    let (nn, ntk) = (row["nn_risk"].as_f64().unwrap(), row["ntk_risk"].as_f64().unwrap());
    assert!((nn - ntk).abs() < 1e-3, "{nn} vs {ntk}: {row}");
}

#[test]
fn ntk_pipeline_needs_a_sphere() {
    let mut c = ExperimentConfig::from_json(LAPLACE).unwrap();
    c.kernel = kernel_lab::KernelSpec::ntk2();
    assert!(c.resolve(Verb::Ntk).is_err());
}

#[test]
fn resolved_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(LAPLACE, Verb::Scaling);
    let path = cfg.write_resolved(dir.path()).unwrap();
    let mut again = ExperimentConfig::load(&path).unwrap();
    again.resolve(Verb::Scaling).unwrap();
    assert_eq!(again, cfg);
    let a = run_interpolation_scaling(&cfg).unwrap();
    let b = run_interpolation_scaling(&again).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn kernel_info_for_the_ntk() {
    let cfg = config(
        r#"{"kernel":{"family":"ntk2"},"domain":{"kind":"sphere","d":3},"n_grid":[256]}"#,
        Verb::KernelInfo,
    );
    let info = kernel_info(&cfg).unwrap();
    assert_eq!(info.kappa_sq, 2.0);
    assert_eq!(info.top.len(), 20);
    let text = info.render();
    assert!(text.contains("kappa^2") && text.contains("holder"), "{text}");
    assert!((info.beta_hat.unwrap() - 1.5).abs() <= 0.2);
}
