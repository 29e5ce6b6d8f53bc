use dseqmark::synth::{SynthKind, SynthSpec};
use dseqmark::watermark::{self, BitMatrix, ShiftMode, SpreadCode, WatermarkPlan};
use proptest::prelude::*;

fn cover(kind: SynthKind, seed: u64) -> dseqmark::watermark::GrayImage {
    SynthSpec {
        kind,
        width: 256,
        height: 256,
        seed,
    }
    .render()
    .unwrap()
}

fn kinds() -> impl Strategy<Value = SynthKind> {
    prop_oneof![
        Just(SynthKind::Flat),
        Just(SynthKind::Gradient),
        Just(SynthKind::Checker),
        Just(SynthKind::Texture),
    ]
}

fn modes() -> impl Strategy<Value = ShiftMode> {
    prop_oneof![
        Just(ShiftMode::Selected),
        Just(ShiftMode::Circular),
        Just(ShiftMode::Random)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovers_every_bit(
        kind in kinds(),
        seed in any::<u64>(),
        q in prop::sample::select(vec![283u64, 277, 619]),
        k in 2u32..=6,
        mode in modes(),
        key in any::<u64>(),
        black in 10usize..=54,
    ) {
        let img = cover(kind, seed);
        let mark = BitMatrix::random(8, 8, black, seed ^ key).unwrap();
        let plan = watermark::make_plan(SpreadCode::DSequence { q }, k, (256, 256), (8, 8), mode, key).unwrap();
        let marked = watermark::embed(&img, &mark, &plan).unwrap();
        let result = watermark::extract(&marked, &plan).unwrap();
        prop_assert_eq!(watermark::noise_pixels(&result.recovered, &mark).unwrap(), 0);
    }

    #[test]
    fn sidecar_round_trip_preserves_extraction(
        key in any::<u64>(),
        mode in modes(),
        k in 1u32..=8,
    ) {
        let plan = watermark::make_plan(SpreadCode::DSequence { q: 283 }, k, (256, 256), (8, 8), mode, key).unwrap();
        let back = WatermarkPlan::from_sidecar(&plan.to_sidecar()).unwrap();
        prop_assert_eq!(back.shifts(), plan.shifts());
        prop_assert_eq!(back.to_sidecar(), plan.to_sidecar());
    }
}

#[test]
fn msequence_code_round_trips() {
    let img = cover(SynthKind::Gradient, 0);
    let mark = BitMatrix::random(8, 8, 25, 4).unwrap();
    let plan = watermark::make_plan(
        SpreadCode::MSequence { degree: 7 },
        2,
        (256, 256),
        (8, 8),
        ShiftMode::Random,
        5,
    )
    .unwrap();
    let marked = watermark::embed(&img, &mark, &plan).unwrap();
    let text = plan.to_sidecar();
    assert!(text.contains("lfsr=7"));
    let plan = WatermarkPlan::from_sidecar(&text).unwrap();
    let result = watermark::extract(&marked, &plan).unwrap();
    assert_eq!(result.recovered, mark);
}

#[test]
fn uneven_blocks_leave_margin_untouched() {
    let img = cover(SynthKind::Gradient, 0);
    let small = dseqmark::watermark::GrayImage::new(
        250,
        250,
        (0..250 * 250).map(|j| img.get(j % 250, j / 250)).collect(),
    )
    .unwrap();
    let mark = BitMatrix::random(8, 8, 40, 1).unwrap();
    let plan = watermark::make_plan(
        SpreadCode::DSequence { q: 283 },
        3,
        (250, 250),
        (8, 8),
        ShiftMode::Selected,
        0,
    )
    .unwrap();
    assert_eq!((plan.block_w, plan.block_h), (31, 31));
    let marked = watermark::embed(&small, &mark, &plan).unwrap();
    for y in 0..250 {
        for x in 248..250 {
            assert_eq!(marked.get(x, y), small.get(x, y));
            assert_eq!(marked.get(y, x), small.get(y, x));
        }
    }
    assert_eq!(watermark::extract(&marked, &plan).unwrap().recovered, mark);
}
