use std::io::Write;
use std::path::PathBuf;

use kmpar::data::{load_table, Delimiter, TableSchema};

fn spam_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/spambase.data")
}

#[test]
fn spambase_shape() {
    let x = load_table(spam_path(), &TableSchema::spam()).unwrap();
    // This copy has 4597 rows; the UCI original lists 4601.
    assert_eq!(x.len(), 4597);
    assert_eq!(x.dim(), 58);
    assert!(!x.is_weighted());
    assert!(x.coords().iter().all(|v| v.is_finite()));
    // Last column is the 0/1 spam label.
    assert!(x.points().all(|p| p[57] == 0.0 || p[57] == 1.0));
}

#[test]
fn loading_is_deterministic() {
    let a = load_table(spam_path(), &TableSchema::spam()).unwrap();
    let b = load_table(spam_path(), &TableSchema::spam()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn kddcup_style_symbols_get_stable_codes() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let row = |proto: &str, service: &str, flag: &str, label: &str| {
        let mut fields = vec!["0".to_string(), proto.into(), service.into(), flag.into()];
        fields.extend((4..41).map(|i| format!("{}", i as f64 * 0.5)));
        fields.push(label.into());
        fields.join(",")
    };
    writeln!(f, "{}", row("tcp", "http", "SF", "normal.")).unwrap();
    writeln!(f, "{}", row("udp", "private", "SF", "smurf.")).unwrap();
    writeln!(f, "{}", row("tcp", "private", "REJ", "normal.")).unwrap();
    let x = load_table(f.path(), &TableSchema::kddcup()).unwrap();
    assert_eq!(x.dim(), 42);
    let col = |i: usize| x.points().map(|p| p[i]).collect::<Vec<_>>();
    assert_eq!(col(1), vec![0.0, 1.0, 0.0]);
    assert_eq!(col(2), vec![0.0, 1.0, 1.0]);
    assert_eq!(col(3), vec![0.0, 0.0, 1.0]);
    assert_eq!(col(41), vec![0.0, 1.0, 0.0]);
    assert_eq!(col(4), vec![2.0; 3]);
}

#[test]
fn whitespace_tables() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "1 2\t3\n\n4  5 6").unwrap();
    let schema = TableSchema {
        delimiter: Delimiter::Whitespace,
        ..Default::default()
    };
    let x = load_table(f.path(), &schema).unwrap();
    assert_eq!(x.len(), 2);
    assert_eq!(x.point(1), &[4.0, 5.0, 6.0]);
}
