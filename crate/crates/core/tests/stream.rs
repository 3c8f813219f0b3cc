mod common;

use chantrunc::bitstream::{read_stream, CodecChoice, CodecRegistry, Qrle, Stream};
use chantrunc::metrics::masked_mse;
use chantrunc::pipeline::{decode_stream, encode_sequence, EncoderConfig};
use chantrunc::synth::{Regimes, SynthSpec};
use chantrunc::truncation::plan_sequence;
use chantrunc::{Alpha, CutoffConfig, Error, SequenceF32};
use common::fixtures;

fn small_spec() -> SynthSpec {
    SynthSpec {
        channels: 40,
        active_count: 25,
        height: 6,
        width: 6,
        frame_count: 5,
        ..SynthSpec::default()
    }
}

fn qrle(q: u16) -> CodecChoice {
    CodecChoice::Qrle(Qrle::new(q).unwrap())
}

#[test]
fn golden_fixtures_are_stable() {
    let bless = std::env::var_os("CHANTRUNC_BLESS").is_some();
    let registry = CodecRegistry::default();
    for fx in fixtures() {
        let fresh = fx.encode();
        if bless {
            std::fs::write(fx.path(), &fresh).unwrap();
        }
        let golden = std::fs::read(fx.path())
            .unwrap_or_else(|e| panic!("{}: {e} (run with CHANTRUNC_BLESS=1)", fx.name));
        assert_eq!(
            fresh, golden,
            "{}: encoder output drifted from the fixture",
            fx.name
        );
        let parsed = Stream::parse(&golden, &registry).unwrap();
        assert_eq!(
            parsed.to_bytes(),
            golden,
            "{}: re-serialization differs",
            fx.name
        );
        assert_eq!(parsed.encoded_len(), golden.len());
    }
}

#[test]
fn multi_period_fixture_exercises_the_capacity_clamp() {
    let fx = fixtures()
        .into_iter()
        .find(|f| f.name == "multi_period.fctb")
        .unwrap();
    let seq = fx.sequence();
    let plans = plan_sequence(&seq, &fx.config.cutoff, true).unwrap();
    let counts: Vec<usize> = plans.iter().map(|p| p.mask.active_count()).collect();
    assert_eq!(counts, vec![10, 10, 10]);
    // period 1 had 14 candidates, clamped to 10
    let p1_candidates = fx.spec.active_set(4).iter().filter(|&&b| b).count();
    assert_eq!(p1_candidates, 14);
    // period 2 (12 candidates) also clamps
    assert_eq!(fx.spec.active_set(8).iter().filter(|&&b| b).count(), 12);
}

#[test]
fn decoded_shape_matches_input() {
    let seq: SequenceF32 = small_spec().generate().unwrap();
    for truncation in [true, false] {
        for codec in [CodecChoice::Raw, qrle(1), qrle(16)] {
            let config = EncoderConfig {
                truncation,
                codec,
                ..EncoderConfig::default()
            };
            let e = encode_sequence(&seq, &config).unwrap();
            let d = decode_stream(&e.bytes, &CodecRegistry::default()).unwrap();
            assert_eq!(d.shape(), seq.shape());
            assert_eq!(d.len(), seq.len());
        }
    }
}

#[test]
fn stream_is_self_delimiting() {
    let seq: SequenceF32 = small_spec().generate().unwrap();
    let e = encode_sequence(
        &seq,
        &EncoderConfig {
            codec: qrle(4),
            ..Default::default()
        },
    )
    .unwrap();
    let d = read_stream(&e.bytes, &CodecRegistry::default()).unwrap();
    assert_eq!(d.stream.encoded_len(), e.bytes.len());
    let mut longer = e.bytes.clone();
    longer.extend_from_slice(&[0; 3]);
    assert_eq!(
        read_stream(&longer, &CodecRegistry::default()).unwrap_err(),
        Error::TrailingBytes {
            offset: e.bytes.len(),
            count: 3
        }
    );
}

#[test]
fn write_read_write_is_identity() {
    let spec = SynthSpec {
        regimes: Some(Regimes {
            length: 2,
            active_counts: vec![20, 30, 10],
        }),
        frame_count: 7,
        ..small_spec()
    };
    let seq: SequenceF32 = spec.generate().unwrap();
    let config = EncoderConfig {
        cutoff: CutoffConfig::new(Alpha::new(3, 5).unwrap(), 2).unwrap(),
        codec: qrle(2),
        truncation: true,
    };
    let e = encode_sequence(&seq, &config).unwrap();
    let d = read_stream(&e.bytes, &CodecRegistry::default()).unwrap();
    assert_eq!(d.stream.to_bytes(), e.bytes);
    assert_eq!(d.stream.header.alpha, Alpha::new(3, 5).unwrap());
    assert_eq!(d.stream.periods.len(), 4);
    // every period shares period 0's frame size
    assert!(d.frames.iter().all(|f| f.layout == e.layout));
    let counts: Vec<usize> = e.plans.iter().map(|p| p.mask.active_count()).collect();
    assert_eq!(counts, vec![20, 20, 10, 10]);
}

#[test]
fn pass_through_matches_untruncated_pipeline() {
    let spec = SynthSpec {
        active_count: 40,
        ..small_spec()
    };
    let seq: SequenceF32 = spec.generate().unwrap();
    let on = encode_sequence(
        &seq,
        &EncoderConfig {
            codec: qrle(8),
            ..Default::default()
        },
    )
    .unwrap();
    let off = encode_sequence(
        &seq,
        &EncoderConfig {
            codec: qrle(8),
            truncation: false,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(on.plans.iter().all(|p| !p.truncation_enabled));
    assert_eq!(on.bytes, off.bytes);
    let reg = CodecRegistry::default();
    assert_eq!(
        decode_stream(&on.bytes, &reg).unwrap(),
        decode_stream(&off.bytes, &reg).unwrap()
    );
}

#[test]
fn truncation_leaves_transmitted_channels_untouched() {
    let seq: SequenceF32 = small_spec().generate().unwrap();
    let cutoff = CutoffConfig::default();
    let plans = plan_sequence(&seq, &cutoff, true).unwrap();
    let reg = CodecRegistry::default();
    for q in [1, 4, 16] {
        let run = |truncation| {
            let config = EncoderConfig {
                cutoff,
                truncation,
                codec: qrle(q),
            };
            let e = encode_sequence(&seq, &config).unwrap();
            (e.bytes.len(), decode_stream(&e.bytes, &reg).unwrap())
        };
        let (on_len, on) = run(true);
        let (off_len, off) = run(false);
        assert!(on_len < off_len, "q = {q}");
        assert_eq!(
            masked_mse(&seq, &on, &plans).unwrap(),
            masked_mse(&seq, &off, &plans).unwrap(),
            "q = {q}"
        );
    }
}

#[test]
fn rate_ladder_is_monotone_on_synthetic_content() {
    let seq: SequenceF32 = SynthSpec {
        frame_count: 4,
        ..SynthSpec::default()
    }
    .generate()
    .unwrap();
    for truncation in [true, false] {
        let sizes: Vec<usize> = [1, 2, 4, 8, 16, 32]
            .iter()
            .map(|&q| {
                let c = EncoderConfig {
                    codec: qrle(q),
                    truncation,
                    ..Default::default()
                };
                encode_sequence(&seq, &c).unwrap().bytes.len()
            })
            .collect();
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]), "{sizes:?}");
    }
}
