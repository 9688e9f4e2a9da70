use lesionforge::{BinaryMask, FlowField};
use lesionforge_cli::lflo::{self, LfloError};
use proptest::prelude::*;

fn flow_strategy() -> impl Strategy<Value = FlowField> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec((-1e4f32..1e4f32, -1e4f32..1e4f32), w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
            .prop_map(move |(v, valid)| {
                let vectors = v.into_iter().map(|(x, y)| [x as f64, y as f64]).collect();
                FlowField::from_parts(w, h, vectors, BinaryMask::from_raw(w, h, valid).unwrap()).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn encode_decode_encode_is_stable(flow in flow_strategy()) {
        let bytes = lflo::encode(&flow);
        prop_assert_eq!(bytes.len(), lflo::HEADER_LEN + lflo::payload_len(flow.width(), flow.height()));
        let back = lflo::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &flow);
        prop_assert_eq!(lflo::encode(&back), bytes);
    }

    #[test]
    fn truncation_is_rejected(flow in flow_strategy(), cut in 1usize..8) {
        let bytes = lflo::encode(&flow);
        let cut = cut.min(bytes.len());
        prop_assert!(lflo::decode(&bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn bad_magic_is_rejected() {
    let mut bytes = lflo::encode(&FlowField::zeros(2, 2));
    bytes[0] = b'X';
    assert!(matches!(lflo::decode(&bytes), Err(LfloError::BadMagic)));
}
