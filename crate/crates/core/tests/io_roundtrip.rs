use proptest::prelude::*;
use pssv::io::{encode_pgm, format_matrix_csv, parse_matrix_csv, parse_pgm};
use pssv::DenseMatrix;

fn shaped<T: Strategy<Value = f64> + Clone>(values: T) -> impl Strategy<Value = DenseMatrix> {
    (1usize..12, 1usize..12).prop_flat_map(move |(r, c)| {
        proptest::collection::vec(values.clone(), r * c)
            .prop_map(move |v| DenseMatrix::from_vec(r, c, v))
    })
}

proptest! {
    #[test]
    fn csv_round_trip(m in shaped(prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, Just(0.0)])) {
        let back = parse_matrix_csv(format_matrix_csv(&m).as_bytes(), "prop").unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.iter().zip(m.iter()) {
            prop_assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn pgm_round_trip_is_exact_on_gray_levels(m in shaped((0u8..=255).prop_map(f64::from)), ascii in any::<bool>()) {
        let mut buf = Vec::new();
        encode_pgm(&mut buf, &m, ascii).unwrap();
        prop_assert_eq!(parse_pgm(buf.as_slice()).unwrap(), m);
    }
}
