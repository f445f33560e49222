use mediated_core::emit::*;

fn sample() -> Dataset {
    let mut t = Table::new("grid", &["kappa", "label", "xi"]);
    t.push(vec![0.1.into(), "quantum".into(), Some(37.43554903367435).into()]);
    t.push(vec![(1.0 / 3.0).into(), "a, \"quoted\" cell".into(), None.into()]);
    t.push(vec![f64::NAN.into(), 7usize.into(), (-2.5e-300).into()]);
    Dataset {
        command: "fig2".into(),
        provenance: "fig2\nkappa = 0.1".into(),
        notes: vec![("rate-convention".into(), "standard".into())],
        tables: vec![t],
    }
}

#[test]
fn rendering_is_deterministic() {
    for f in [Format::Csv, Format::Json] {
        assert_eq!(render(&sample(), f), render(&sample(), f));
    }
}

#[test]
fn header_carries_version_units_and_hash() {
    let csv = to_csv(&sample());
    assert!(csv.starts_with(&format!("# tool: mediated {}\n", env!("CARGO_PKG_VERSION"))));
    assert!(csv.contains(&format!("# config-sha256: {}\n", config_hash("fig2\nkappa = 0.1"))));
    assert!(csv.contains("# units: "));
    assert_eq!(config_hash("").len(), 64);
    assert_eq!(
        config_hash(""),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}

#[test]
fn numbers_round_trip_exactly() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
        let s = format_number(v).unwrap();
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }
    assert_eq!(format_number(f64::NAN), None);
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let ds = sample();
    let json: serde_json::Value = serde_json::from_str(&to_json(&ds)).unwrap();
    assert_eq!(json["meta"]["command"], "fig2");
    assert_eq!(json["meta"]["config-sha256"], config_hash(&ds.provenance));
    let rows = json["tables"][0]["rows"].as_array().unwrap();
    let csv = to_csv(&ds);
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), data.len());
    let first: Vec<&str> = data[0].split(',').collect();
    assert_eq!(first[0].parse::<f64>().unwrap(), rows[0][0].as_f64().unwrap());
    assert_eq!(first[2].parse::<f64>().unwrap(), rows[0][2].as_f64().unwrap());
    assert!(data[1].contains("\"a, \"\"quoted\"\" cell\""));
    assert_eq!(rows[1][1], "a, \"quoted\" cell");
    assert!(rows[1][2].is_null());
    assert!(data[1].ends_with(','));
    assert!(rows[2][0].is_null());
    assert!(data[2].starts_with("nan,7,"));
    assert_eq!(rows[2][1], 7);
}

#[test]
fn emit_writes_and_reports_io_errors() {
    let dir = std::env::temp_dir().join(format!("emit-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    emit(&sample(), Format::Csv, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), to_csv(&sample()));
    std::fs::remove_dir_all(&dir).unwrap();
    let err = emit(&sample(), Format::Csv, &dir.join("missing").join("x.csv")).unwrap_err();
    assert!(matches!(err, mediated_core::Error::Io { .. }));
}

#[test]
fn format_parsing() {
    assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
    assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
    assert!("xml".parse::<Format>().is_err());
}
