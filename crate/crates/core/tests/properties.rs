mod common;

use std::collections::BTreeSet;

use invpat::index::ClassHistogram;
use invpat::io::{decode_model, encode_model, ModelFile, Payload};
use invpat::levels::{histogram_to_metapattern, signature_common, LevelInput};
use invpat::vision::{cluster_pixels, select_pixels, ClassMaskSet, LabeledPixel, RasterImage};
use invpat::{BitPattern, CategoricalModel, FeatureVector, Level, LevelStack, Model, ParamIndex};
use proptest::collection::vec;
use proptest::prelude::*;

/// A model shape, its class prototypes, and a query.
fn instance() -> impl Strategy<Value = (usize, u32, u32, Vec<Vec<u32>>, Vec<u32>)> {
    (1usize..6, 2u32..24).prop_flat_map(|(dims, range)| {
        (
            Just(dims),
            Just(range),
            0..range.min(6),
            vec(vec(0..range, dims), 0..40),
            vec(0..range, dims),
        )
    })
}

fn build(dims: usize, range: u32, radius: u32, protos: &[Vec<u32>]) -> Model {
    Model::from_prototypes(
        dims,
        range,
        radius,
        protos.iter().cloned().map(FeatureVector::new),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn histogram_matches_prototype_scan((dims, range, radius, protos, q) in instance()) {
        let m = build(dims, range, radius, &protos);
        let h = m.classify(&FeatureVector::new(q.clone())).unwrap();
        let expected = common::brute_classify(&m, &q, radius);
        prop_assert_eq!(h.as_slice(), expected.as_slice());
    }

    #[test]
    fn posting_lists_partition_the_classes((dims, range, radius, protos, _q) in instance()) {
        let m = build(dims, range, radius, &protos);
        for k in 0..dims {
            let mut seen = Vec::new();
            for (_, list) in m.lists(k) {
                prop_assert!(list.windows(2).all(|w| w[0] < w[1]));
                seen.extend_from_slice(list);
            }
            seen.sort_unstable();
            let all: Vec<u32> = (1..=protos.len() as u32).collect();
            prop_assert_eq!(seen, all);
        }
    }

    #[test]
    fn retraining_is_idempotent((dims, range, radius, protos, q) in instance()) {
        let mut m = build(dims, range, radius, &protos);
        let x = FeatureVector::new(q);
        let (first, _) = m.train_step(&x).unwrap();
        let n = m.len();
        let (again, created) = m.train_step(&x).unwrap();
        prop_assert!(!created);
        prop_assert_eq!(m.len(), n);
        prop_assert!(again <= first);
        prop_assert_eq!(m.classify(&x).unwrap().max_count() as usize, dims);
    }

    #[test]
    fn wider_radius_never_loses_votes((dims, range, radius, protos, q) in instance()) {
        let m = build(dims, range, radius, &protos);
        let x = FeatureVector::new(q);
        let narrow = m.classify_with_radius(&x, radius).unwrap();
        let wide = m.classify_with_radius(&x, radius + 1).unwrap();
        for (id, c) in narrow.iter() {
            prop_assert!(wide.get(id) >= c);
        }
    }

    #[test]
    fn fast_path_agrees_with_histogram((dims, range, radius, protos, q) in instance()) {
        let m = build(dims, range, radius, &protos);
        let x = FeatureVector::new(q.clone());
        let h = m.classify(&x).unwrap();
        let full = h.argmax().filter(|_| m.is_full_match(&h));
        prop_assert_eq!(m.classify_exact_fast(&x).unwrap(), full);
        prop_assert_eq!(full, common::brute_full_match(&m, &q, radius));
    }

    #[test]
    fn touched_mass_counts_window_entries((dims, range, radius, protos, q) in instance()) {
        let m = build(dims, range, radius, &protos);
        let x = FeatureVector::new(q.clone());
        let analytic = m.touched_mass(&x).unwrap();
        prop_assert_eq!(analytic, m.classify_instrumented(&x, radius).unwrap().1);
        prop_assert_eq!(analytic, common::brute_touched(&m, &q, radius));
        prop_assert_eq!(analytic, m.classify(&x).unwrap().total());
    }

    #[test]
    fn training_is_deterministic((dims, range, radius, protos, _q) in instance()) {
        let train = || {
            let mut m = Model::new(dims, range, radius).unwrap();
            for p in &protos {
                m.train_step(&FeatureVector::new(p.clone())).unwrap();
            }
            m
        };
        prop_assert_eq!(train(), train());
    }

    #[test]
    fn prediction_matches_row_scan(
        (dims, range, rows, q) in (1usize..6, 2u32..16).prop_flat_map(|(dims, range)| (
            Just(dims),
            Just(range),
            vec((vec(0..range, dims), -20i64..40), 1..60),
            vec(0..range, dims),
        ))
    ) {
        let rows: Vec<(FeatureVector, i64)> =
            rows.into_iter().map(|(v, t)| (FeatureVector::new(v), t)).collect();
        let index = ParamIndex::build(dims, range, rows.iter().map(|(v, t)| (v, *t))).unwrap();
        let h = index.predict_histogram(&FeatureVector::new(q.clone())).unwrap();
        let expected = common::brute_param_histogram(&rows, &q);
        prop_assert_eq!(h.as_slice(), expected.as_slice());
        let best = expected.iter().map(|&(_, c)| c).max();
        let argmax = expected.iter().find(|&&(_, c)| Some(c) == best).map(|&(t, _)| t);
        prop_assert_eq!(h.argmax_t(), argmax);
    }

    #[test]
    fn metapattern_shrinks_with_threshold(
        counts in vec((1u32..50, 1u32..10), 0..30),
        lo in 1u32..6,
        step in 0u32..5,
    ) {
        let h = ClassHistogram::from_counts(counts);
        let loose: BTreeSet<u32> = histogram_to_metapattern(&h, lo).present().iter().copied().collect();
        let strict: BTreeSet<u32> = histogram_to_metapattern(&h, lo + step).present().iter().copied().collect();
        prop_assert!(strict.is_subset(&loose));
    }

    #[test]
    fn signature_overlap_is_symmetric(
        a in vec((1u32..30, 1u32..6), 0..20),
        b in vec((1u32..30, 1u32..6), 0..20),
        t1 in 1u32..4,
        t2 in 1u32..4,
    ) {
        let (ha, hb) = (ClassHistogram::from_counts(a), ClassHistogram::from_counts(b));
        prop_assert_eq!(signature_common(&ha, &hb, t1, t2), signature_common(&hb, &ha, t2, t1));
        prop_assert!(signature_common(&ha, &hb, t1, t2) <= histogram_to_metapattern(&ha, t1).len());
    }

    #[test]
    fn one_level_stack_is_the_bare_model(
        (dims, range, radius, protos, _q) in instance(),
        queries in vec(vec(0u32..24, 6), 1..10),
    ) {
        let m = build(dims, range, radius, &protos);
        let inputs: Vec<FeatureVector> = queries
            .iter()
            .map(|q| FeatureVector::new(q.iter().take(dims).map(|v| v % range).collect()))
            .collect();
        let stack = LevelStack::new(Level::numeric(m.clone()));
        let run = stack
            .classify(&inputs.iter().cloned().map(LevelInput::from).collect::<Vec<_>>())
            .unwrap();
        let winners: Vec<Option<u32>> = inputs
            .iter()
            .map(|x| {
                let h = m.classify(x).unwrap();
                h.argmax().filter(|_| m.is_full_match(&h))
            })
            .collect();
        prop_assert_eq!(&run.winners, &winners);
        prop_assert_eq!(run.output(), &ClassHistogram::from_votes(winners.into_iter().flatten()));
    }

    #[test]
    fn clusters_match_union_find(
        raw in vec((0u32..24, 0u32..24, 1u32..5), 0..80),
        d in 1u32..4,
    ) {
        let pixels: Vec<LabeledPixel> = raw.iter().map(|&(y, x, class)| LabeledPixel { y, x, class }).collect();
        let clusters = cluster_pixels(&pixels, d);
        let got: BTreeSet<Vec<(u32, u32)>> = clusters
            .iter()
            .map(|c| c.members.iter().map(|p| (p.y, p.x)).collect())
            .collect();
        prop_assert_eq!(got, common::union_find_components(&pixels, d));
        // ordered by topmost-leftmost member
        let firsts: Vec<(u32, u32)> = clusters.iter().map(|c| (c.members[0].y, c.members[0].x)).collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
        for c in &clusters {
            prop_assert_eq!(c.histogram.total(), c.members.len() as u64);
        }
    }

    #[test]
    fn selection_is_unmasked_full_matches(
        samples in vec(0u8..=255, 48),
        protos in vec(vec(0u32..256, 3), 1..10),
        masked in vec(1u32..10, 0..4),
        radius in 0u32..40,
    ) {
        let img = RasterImage::new(4, 4, 3, samples).unwrap();
        let m = build(3, 256, radius, &protos);
        let mut mask = ClassMaskSet::new();
        for id in masked {
            mask.insert(id);
        }
        let got = select_pixels(&m, &img, &mask).unwrap();
        let mut expected = Vec::new();
        for y in 0..4 {
            for x in 0..4 {
                let px: Vec<u32> = img.pixel(x, y).iter().map(|&v| v as u32).collect();
                if let Some(class) = common::brute_full_match(&m, &px, radius) {
                    if !mask.contains(class) {
                        expected.push(LabeledPixel { y, x, class });
                    }
                }
            }
        }
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn categorical_votes_count_shared_categories(
        stored in vec(vec(1u32..12, 1..5), 1..20),
        query in vec(1u32..12, 0..6),
    ) {
        let mut m = CategoricalModel::new(12, 1).unwrap();
        let stored: Vec<BitPattern> = stored.into_iter().map(BitPattern::new).collect();
        for p in &stored {
            m.insert_class(p).unwrap();
        }
        let q = BitPattern::new(query);
        let h = m.classify(&q).unwrap();
        let expected: Vec<(u32, u32)> = stored
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let n = q.present().iter().filter(|c| p.contains(**c)).count() as u32;
                (n > 0).then_some((i as u32 + 1, n))
            })
            .collect();
        prop_assert_eq!(h.as_slice(), expected.as_slice());
    }

    #[test]
    fn model_files_round_trip((dims, range, radius, protos, q) in instance()) {
        let m = build(dims, range, radius, &protos);
        let file = ModelFile::stack(LevelStack::new(Level::numeric(m.clone())));
        let bytes = encode_model(&file);
        prop_assert_eq!(&bytes, &encode_model(&file));
        let back = decode_model(&bytes).unwrap();
        let Payload::Stack(stack) = &back.payload else { panic!("payload kind changed") };
        let invpat::levels::LevelModel::Numeric(loaded) = &stack.levels()[0].model else {
            panic!("level kind changed")
        };
        let x = FeatureVector::new(q);
        prop_assert_eq!(loaded.classify(&x).unwrap(), m.classify(&x).unwrap());
        prop_assert_eq!(&back, &file);
    }
}
