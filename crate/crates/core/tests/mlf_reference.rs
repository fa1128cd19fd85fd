//! Mittag-Leffler values against extended-precision references generated by
//! `tests/oracles/mlf_reference.py`.

use fradic::mlf::{mittag_leffler_3, MlfParams};

const DATA: &str = include_str!("data/mlf_reference.csv");

#[test]
fn matches_extended_precision_reference() {
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    for line in DATA.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let (alpha, beta, mu, z, expect) = (f[0], f[1], f[2], f[3], f[4]);
        let got = mittag_leffler_3(&MlfParams::new(alpha, beta).with_mu(mu), z).unwrap();
        let err = if expect == 0.0 { got.abs() } else { ((got - expect) / expect).abs() };
        if err > worst.0 {
            worst = (err, line.to_string());
        }
        if !(err <= 1e-10) {
            failures.push(format!("{line}: got {got:e}, rel err {err:e}"));
        }
    }
    assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
    eprintln!("worst relative error {:e} at {}", worst.0, worst.1);
}
