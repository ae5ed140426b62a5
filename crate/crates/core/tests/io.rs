use proptest::prelude::*;
use tsiv::var_model::{random_instrumental_var1, read_sample_csv, write_sample_csv, BlockLayout, ParamFile, VarParameters};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sample_csv_round_trips_exactly(seed in any::<u64>(), di in 1usize..=3, dx in 1usize..=3) {
        let layout = BlockLayout::new(di, 1, dx, 1);
        let m = random_instrumental_var1::<f64>(layout, 0.1, 0.1, 0.9, seed).unwrap();
        let s = m.params().simulate(40, seed).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&s, &mut buf).unwrap();
        let back = read_sample_csv::<f64, _>(buf.as_slice()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn parameter_file_round_trips_exactly(seed in any::<u64>()) {
        let m = random_instrumental_var1::<f64>(BlockLayout::new(2, 1, 2, 1), 0.1, 0.1, 0.9, seed).unwrap();
        let text = ParamFile::from_params(m.params()).to_json();
        let back: VarParameters<f64> = ParamFile::from_json(&text).unwrap().to_params().unwrap();
        prop_assert_eq!(&back, m.params());
    }
}

#[test]
fn header_names_the_blocks() {
    let m = random_instrumental_var1::<f64>(BlockLayout::new(2, 1, 1, 1), 0.1, 0.1, 0.9, 1).unwrap();
    let mut buf = Vec::new();
    write_sample_csv(&m.params().simulate(2, 1).unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,I1,I2,H1,X1,Y1\n1,"));
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(read_sample_csv::<f64, _>("x,I1\n1,0.5\n".as_bytes()).is_err());
    assert!(read_sample_csv::<f64, _>("t,Y1,X1\n1,0.5,0.1\n".as_bytes()).is_err());
    assert!(read_sample_csv::<f64, _>("t,I1,X1\n1,abc,0.1\n".as_bytes()).is_err());
    assert!(ParamFile::from_json("{\"p\": 1}").is_err());
    let bad = r#"{"p":2,"dims":{"d_I":1,"d_H":0,"d_X":1,"d_Y":1},"A":[[[0,0,0],[0,0,0],[0,0,0]]],"Gamma_diag":[1,1,1]}"#;
    assert!(ParamFile::from_json(bad).unwrap().to_params::<f64>().is_err());
}
