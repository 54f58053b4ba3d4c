use kfp_core::constants::DomainSpec;
use kfp_core::equilibria::EquilibriumSpec;
use kfp_core::hypo_compare::{benchmark_table, TableOptions};

fn fields(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

#[test]
fn benchmark_table_matches_golden() {
    let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
    let table = benchmark_table(&spec, &DomainSpec::benchmark(), &TableOptions::default()).unwrap();
    let got = table.to_csv();
    let want = include_str!("golden/compare_benchmark.csv");
    let (got, want): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        for (a, b) in fields(g).iter().zip(fields(w)) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * y.abs(), "{x} vs {y}"),
                _ => assert_eq!(a, &b),
            }
        }
    }
    assert!(table.spectral_is_sharpest());
}
