#![allow(dead_code)]

use std::path::PathBuf;

use chantrunc::bitstream::{CodecChoice, Qrle};
use chantrunc::pipeline::{encode_sequence, EncoderConfig};
use chantrunc::synth::{Regimes, SynthSpec};
use chantrunc::{Alpha, CutoffConfig, SequenceF32};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub struct Fixture {
    pub name: &'static str,
    pub spec: SynthSpec,
    pub config: EncoderConfig,
}

fn qrle(q: u16) -> CodecChoice {
    CodecChoice::Qrle(Qrle::new(q).unwrap())
}

/// The checked-in golden streams and how they were produced.
pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "all_active.fctb",
            spec: SynthSpec {
                channels: 8,
                active_count: 8,
                height: 4,
                width: 4,
                frame_count: 3,
                seed: 1,
                ..SynthSpec::default()
            },
            config: EncoderConfig {
                codec: CodecChoice::Raw,
                ..EncoderConfig::default()
            },
        },
        Fixture {
            name: "truncated.fctb",
            spec: SynthSpec {
                channels: 320,
                active_count: 200,
                height: 2,
                width: 2,
                frame_count: 2,
                seed: 2,
                ..SynthSpec::default()
            },
            config: EncoderConfig {
                codec: qrle(8),
                ..EncoderConfig::default()
            },
        },
        Fixture {
            name: "multi_period.fctb",
            spec: SynthSpec {
                channels: 24,
                active_count: 10,
                height: 3,
                width: 3,
                frame_count: 10,
                seed: 3,
                regimes: Some(Regimes {
                    length: 4,
                    active_counts: vec![10, 14, 12],
                }),
                ..SynthSpec::default()
            },
            config: EncoderConfig {
                cutoff: CutoffConfig::new(Alpha::DEFAULT, 4).unwrap(),
                codec: qrle(4),
                ..EncoderConfig::default()
            },
        },
    ]
}

impl Fixture {
    pub fn sequence(&self) -> SequenceF32 {
        self.spec.generate().unwrap()
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_sequence(&self.sequence(), &self.config)
            .unwrap()
            .bytes
    }

    pub fn path(&self) -> PathBuf {
        fixture_dir().join(self.name)
    }
}

/// The full-size desk corpus: 320 channels, 200 active, 32×32, 128 frames.
pub fn desk_corpus() -> SequenceF32 {
    SynthSpec::default().generate().unwrap()
}
