use lesionforge_web::{clone_lesion, detection_sample, pair_match, tracking_pair};

#[test]
fn clone_frame_is_rgba_and_deterministic() {
    let f = clone_lesion(3, 128, 128, true, false, false).unwrap();
    assert_eq!((f.width(), f.height()), (256, 256));
    assert_eq!(f.rgba().len(), 256 * 256 * 4);
    assert!(f.rgba().chunks(4).all(|p| p[3] == 255));
    assert_eq!(f, clone_lesion(3, 128, 128, true, false, false).unwrap());
}

#[test]
fn blend_differs_from_paste_only_near_the_lesion() {
    let blended = clone_lesion(5, 120, 130, false, false, false).unwrap();
    let pasted = clone_lesion(5, 120, 130, false, false, true).unwrap();
    assert_ne!(blended, pasted);
    // far from the lesion both are the untouched body
    assert_eq!(blended.pixel(10, 10), pasted.pixel(10, 10));
    assert_eq!(blended.pixel(250, 250), pasted.pixel(250, 250));
}

#[test]
fn clone_off_the_frame_is_an_error() {
    assert!(clone_lesion(1, 2, 2, true, false, false).is_err());
}

#[test]
fn overlay_only_tints_pixels() {
    let plain = detection_sample(11, false).unwrap();
    let tinted = detection_sample(11, true).unwrap();
    let changed = plain.rgba().chunks(4).zip(tinted.rgba().chunks(4)).filter(|(a, b)| a != b).count();
    assert!(changed > 0 && changed < 256 * 256 / 4, "{changed}");
}

#[test]
fn zero_strength_pair_maps_points_to_themselves() {
    assert_eq!(pair_match(4, 0.0, 100, 90).unwrap(), Some((100.0, 90.0)));
    let f = tracking_pair(4, 1.0, 100, 90).unwrap();
    assert_eq!((f.width(), f.height()), (2 * 256 + 4, 256));
    assert!(tracking_pair(4, -1.0, 0, 0).is_err());
}
