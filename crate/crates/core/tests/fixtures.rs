use std::path::{Path, PathBuf};

use cmde_core::dataio::{load_contracts, write_contracts, write_report_csv};
use cmde_core::valuation::{absolute_error, percent_error, ComparisonRow, Method};
use cmde_core::ExerciseStyle;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

const CONTRACT_FILES: [(&str, usize, ExerciseStyle); 4] = [
    ("spx161216c01925000.csv", 5, ExerciseStyle::European),
    ("spx200918c02200000.csv", 6, ExerciseStyle::European),
    ("nflx190621c00210000.csv", 6, ExerciseStyle::American),
    ("nflx210115c00150000.csv", 6, ExerciseStyle::American),
];

#[test]
fn contract_fixtures_load_and_reserialize() {
    for (name, rows, style) in CONTRACT_FILES {
        let specs = load_contracts(fixture(name)).unwrap();
        assert_eq!(specs.len(), rows, "{name}");
        assert!(specs.iter().all(|s| s.style == style && s.market_price.is_some()));
        let mut buf = Vec::new();
        write_contracts(&specs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), std::fs::read_to_string(fixture(name)).unwrap(), "{name}");
    }
}

#[test]
fn first_rows_match_quotes() {
    let t1 = load_contracts(fixture(CONTRACT_FILES[0].0)).unwrap();
    assert_eq!((t1[0].spot, t1[0].strike, t1[0].maturity_days, t1[0].market_price), (1948.51, 1925.0, 302, Some(143.5)));
    let t4 = load_contracts(fixture(CONTRACT_FILES[3].0)).unwrap();
    assert_eq!((t4[0].spot, t4[0].strike, t4[0].maturity_days, t4[0].market_price), (319.5, 150.0, 382, Some(186.0)));
    assert_eq!(t4[0].style, ExerciseStyle::American);
}

struct Reference {
    market: f64,
    prices: [f64; 3],
    printed_pct: [f64; 3],
}

fn reference_rows() -> Vec<Reference> {
    let mut rdr = csv::Reader::from_path(fixture("reference_comparison.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let n = |i: usize| r[i].parse::<f64>().unwrap();
            Reference {
                market: n(2),
                prices: [n(3), n(4), n(5)],
                printed_pct: [n(6), n(7), n(8)],
            }
        })
        .collect()
}

#[test]
fn reference_error_arithmetic() {
    let rows = reference_rows();
    assert_eq!(rows.len(), 23);
    for row in &rows {
        for k in 0..3 {
            let pct = percent_error(row.prices[k], row.market).unwrap();
            assert!((pct - row.printed_pct[k]).abs() <= 0.01, "{} vs {}", pct, row.printed_pct[k]);
            assert_eq!(pct, 100.0 * absolute_error(row.prices[k], row.market) / row.market);
        }
    }
}

#[test]
fn reference_rows_export_with_matching_errors() {
    let rows: Vec<ComparisonRow> = reference_rows()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            ComparisonRow::from_prices(
                format!("row{i}"),
                Some(p.market),
                &[(Method::BlackScholes, p.prices[0]), (Method::De, p.prices[1]), (Method::Cmde, p.prices[2])],
            )
        })
        .collect();
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (bs, de, cm) = (col("pct_err_bs"), col("pct_err_de"), col("pct_err_cmde"));
    assert!(headers.iter().all(|h| !h.contains("binomial")));
    for (rec, p) in rdr.records().zip(reference_rows()) {
        let rec = rec.unwrap();
        for (k, c) in [bs, de, cm].into_iter().enumerate() {
            let v: f64 = rec[c].parse().unwrap();
            assert!((v - p.printed_pct[k]).abs() <= 0.01);
        }
    }
}
