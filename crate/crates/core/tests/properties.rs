use std::io::Cursor;

use diagram_probe::activations::{Activations, DumpMeta, DumpReader, DumpWriter, Stream};
use diagram_probe::graph::{derive_label, sample_graph, Aspect, AspectLabel, DiagramGraph};
use diagram_probe::intervention::{apply_patch, mean_complement, sample_control, sample_control_with, select_targets, ControlMode};
use diagram_probe::metrics::{max_acc, mean_acc, AccuracyGrid};
use diagram_probe::probe::ProbeParams;
use proptest::prelude::*;

fn meta(n: usize, layers: Vec<u32>, t: usize, d: usize) -> DumpMeta {
    DumpMeta {
        model_id: "prop".into(),
        stream: Stream::LanguageModelText,
        n_samples: n,
        layer_ids: layers,
        positions: t,
        hidden: d,
        grid: None,
        token_strings: None,
        manifest_ref: String::new(),
        dump_version: 1,
    }
}

/// Any bit pattern except NaNs, so -0.0, subnormals and infinities appear.
fn any_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        any::<u32>().prop_map(f32::from_bits).prop_filter("no NaN", |v| !v.is_nan()),
        Just(-0.0f32),
        Just(f32::MIN_POSITIVE / 4.0),
        Just(-f32::from_bits(1)),
    ]
}

fn grids(k: usize, t: usize) -> impl Strategy<Value = Vec<AccuracyGrid>> {
    proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, t), k).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(j, row)| {
                let mut g = AccuracyGrid::new(Aspect::NodeColor, Stream::VisionEncoder, j as u32, vec![0], t, None);
                g.set_row(0, &row).unwrap();
                g
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn admp_round_trip_is_bit_exact(
        n in 1usize..4,
        layers in proptest::collection::btree_set(0u32..40, 1..4),
        t in 1usize..5,
        d in 1usize..6,
        seed_values in proptest::collection::vec(any_f32(), 1..200),
    ) {
        let layers: Vec<u32> = layers.into_iter().collect();
        let m = meta(n, layers.clone(), t, d);
        let len = t * d;
        let blocks: Vec<Vec<f32>> = (0..n * layers.len())
            .map(|b| (0..len).map(|i| seed_values[(b * len + i) % seed_values.len()]).collect())
            .collect();
        let mut w = DumpWriter::new(Vec::new(), m.clone()).unwrap();
        for b in &blocks {
            w.push_block(b).unwrap();
        }
        let bytes = w.finish().unwrap();
        let r = DumpReader::new(Cursor::new(bytes)).unwrap();
        prop_assert_eq!(r.meta(), &m);
        for s in (0..n).rev() {
            for (li, &l) in layers.iter().enumerate() {
                let got = r.read_slice(s, l).unwrap();
                let want = &blocks[s * layers.len() + li];
                prop_assert_eq!(
                    got.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    want.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn admp_rejects_any_truncation(cut in 1usize..64) {
        let m = meta(2, vec![0, 3], 2, 3);
        let mut w = DumpWriter::new(Vec::new(), m).unwrap();
        for _ in 0..4 {
            w.push_block(&[1.0; 6]).unwrap();
        }
        let bytes = w.finish().unwrap();
        let cut = cut.min(bytes.len() - 1);
        prop_assert!(DumpReader::new(Cursor::new(bytes[..bytes.len() - cut].to_vec())).is_err());
    }

    #[test]
    fn argmax_is_invariant_to_a_shared_bias_shift(
        w in proptest::collection::vec(-3.0f32..3.0, 9 * 4),
        b in proptest::collection::vec(-3.0f32..3.0, 9),
        h in proptest::collection::vec(-3.0f32..3.0, 4),
        shift in -8.0f32..8.0,
    ) {
        let p = ProbeParams { aspect: Aspect::NodeColor, d: 4, weights: w, bias: b };
        // dyadic shift so every logit moves by an exactly representable amount
        let shift = (shift * 4.0).round() / 4.0;
        let shifted = ProbeParams { bias: p.bias.iter().map(|v| v + shift).collect(), ..p.clone() };
        let mut sorted = p.logits(&h).unwrap();
        sorted.sort_by(|a, b| b.total_cmp(a));
        // skip near-ties, where rounding of the shifted sum can reorder them
        prop_assume!(sorted[0] - sorted[1] > 1e-4 * (1.0 + sorted[0].abs() + shift.abs()));
        prop_assert_eq!(p.predict(&h).unwrap(), shifted.predict(&h).unwrap());
    }

    #[test]
    fn apply_patch_is_idempotent(
        t in 2usize..12,
        d in 1usize..5,
        data in proptest::collection::vec(-10.0f32..10.0, 12 * 5),
        pick in proptest::collection::btree_set(0usize..12, 0..6),
    ) {
        let h: Vec<f32> = data[..t * d].to_vec();
        let targets: Vec<usize> = pick.into_iter().filter(|&p| p < t).collect();
        prop_assume!(targets.len() < t);
        let mu = mean_complement(&h, d, &targets).unwrap();
        let once = apply_patch(&h, &targets, &mu).unwrap();
        let twice = apply_patch(&once, &targets, &mu).unwrap();
        prop_assert_eq!(&once, &twice);
        for p in 0..t {
            let row = &once[p * d..(p + 1) * d];
            if targets.contains(&p) {
                prop_assert_eq!(row, &mu[..]);
            } else {
                prop_assert_eq!(row, &h[p * d..(p + 1) * d]);
            }
        }
        // complement rows are untouched, so the complement mean is unchanged
        prop_assert_eq!(mean_complement(&once, d, &targets).unwrap(), mu);
    }

    #[test]
    fn control_set_matches_target_size(
        t in 1usize..300,
        pick in proptest::collection::btree_set(0usize..300, 0..40),
        seed in any::<u64>(),
    ) {
        let targets: Vec<usize> = pick.into_iter().filter(|&p| p < t).collect();
        let r = sample_control(&targets, t, seed);
        prop_assert_eq!(r.len(), targets.len());
        prop_assert!(r.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(r.iter().all(|&p| p < t));
        prop_assert_eq!(&r, &sample_control(&targets, t, seed));
        if 2 * targets.len() <= t {
            let disjoint = sample_control_with(&targets, t, seed, ControlMode::Disjoint).unwrap();
            prop_assert_eq!(disjoint.len(), targets.len());
            prop_assert!(disjoint.iter().all(|p| !targets.contains(p)));
        }
    }

    #[test]
    fn max_acc_dominates_max_of_means(g in grids(5, 7)) {
        let means: Vec<f64> = (0..7).map(|t| mean_acc(&g, 0, t).unwrap()).collect();
        let best_mean = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = max_acc(&g, 0).unwrap();
        prop_assert!(m + 1e-12 >= best_mean);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
        for (t, &v) in means.iter().enumerate() {
            let col: Vec<f64> = g.iter().map(|x| x.get(0, t).unwrap()).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= v && v <= hi + 1e-12);
        }
    }

    #[test]
    fn targets_are_exactly_the_cells_above_threshold(g in grids(1, 16), tau in 0.0f64..1.0) {
        let s = select_targets(&g[0], 0, tau).unwrap();
        let want: Vec<usize> = (0..16).filter(|&t| g[0].get(0, t).unwrap() > tau).collect();
        prop_assert_eq!(s, want);
    }

    #[test]
    fn sampled_graphs_meet_their_target(aspect_i in 0usize..11, class in 0usize..9, seed in any::<u64>()) {
        let aspect = Aspect::ALL[aspect_i];
        let target = AspectLabel::Class((class % aspect.num_labels()) as u8);
        let g = sample_graph(aspect, target, seed).unwrap();
        prop_assert_eq!(derive_label(&g, aspect), target);
        prop_assert!(g.nodes().len() == 5);
        prop_assert!(g.nodes().windows(2).all(|w| w[0].id <= w[1].id));
        for e in g.edges() {
            prop_assert!(e.src != e.dst);
            prop_assert!(g.edge(e.dst, e.src).is_none());
        }
        let back = DiagramGraph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back, g);
    }
}
