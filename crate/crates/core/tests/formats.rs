use ndarray::Array2;
use proptest::prelude::*;
use seqplace::dataset::{load_descriptor_file, read_matrix, save_descriptor_file, write_matrix};
use seqplace::neural::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, SequenceModel,
};
use seqplace::DescriptorSequence;

fn finite_f32() -> impl Strategy<Value = f32> {
    prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO
}

fn matrix() -> impl Strategy<Value = Array2<f32>> {
    (1usize..12, 1usize..12).prop_flat_map(|(t, n)| {
        prop::collection::vec(finite_f32(), t * n)
            .prop_map(move |v| Array2::from_shape_vec((t, n), v).unwrap())
    })
}

fn model() -> impl Strategy<Value = SequenceModel> {
    (1usize..5, 1usize..4, 1usize..6, 1usize..4, any::<u64>()).prop_flat_map(
        |(n, h, classes, d_s, seed)| {
            let size = SequenceModel::zeros(n, h, classes, d_s).param_count();
            prop::collection::vec(finite_f32(), size).prop_map(move |values| {
                let mut model = SequenceModel::zeros(n, h, classes, d_s);
                model.rng_seed = seed;
                let mut it = values.into_iter();
                for tensor in model.param_slices_mut() {
                    for v in tensor.iter_mut() {
                        *v = f64::from(it.next().unwrap());
                    }
                }
                model
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spd1_is_bit_exact(data in matrix()) {
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, data.view(), false).unwrap();
        let (back, normalized) = read_matrix(&bytes).unwrap();
        prop_assert!(!normalized);
        prop_assert_eq!(back.dim(), data.dim());
        for (a, b) in back.iter().zip(data.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        let mut again = Vec::new();
        write_matrix(&mut again, back.view(), false).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn spd1_file_round_trip(data in matrix()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.spd1");
        let seq = DescriptorSequence::new(data, false).unwrap();
        save_descriptor_file(&seq, &path).unwrap();
        prop_assert_eq!(load_descriptor_file(&path).unwrap(), seq);
    }

    #[test]
    fn spm1_is_bit_exact(model in model()) {
        let bytes = encode_checkpoint(&model).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        prop_assert_eq!(back.param_slices(), model.param_slices());
        prop_assert_eq!(back.d_s, model.d_s);
        prop_assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn spm1_file_round_trip(seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.spm1");
        let model = SequenceModel::init(3, 4, 5, 2, seed);
        save_checkpoint(&model, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        save_checkpoint(&load_checkpoint(&path).unwrap(), &path).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
