//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use dvcseq::alignment::segments_to_index_spans;
use dvcseq::baselines::{random_partition, BaselineConfig};
use dvcseq::codec::{decode, decode_with_len, encode, grammar_check, TargetString};
use dvcseq::corpus::to_partition_setting;
use dvcseq::metrics::{bleu4, cider_d, interval_iou, miou, precision_recall_f1, rouge_l};
use dvcseq::{CodecConfig, Formulation, IndexSpan, Mode, Segment, Setting};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn iou_fixtures() -> Outcome {
    let cases = [
        ((58000.0, 77000.0), (57309.0, 78429.5), 0.900),
        ((28000.0, 45000.0), (28005.0, 44894.0), 0.993),
        ((64199.0, 98080.0), (65710.0, 98380.0), 0.947),
        ((65100.0, 124729.0), (63239.5, 124714.5), 0.970),
        ((49000.0, 67000.0), (47114.0, 65354.5), 0.822),
        ((147890.0, 189680.0), (148905.0, 192934.0), 0.905),
    ];
    let mut worst = 0.0f64;
    for ((a0, a1), (b0, b1), want) in cases {
        let v: f64 = interval_iou(&Segment::new(a0, a1), &Segment::new(b0, b1));
        worst = worst.max((v - want).abs());
        check(
            (v - want).abs() <= 0.0005,
            format!("[{a0}, {a1}] vs [{b0}, {b1}]: {v:.5} != {want}"),
        )?;
    }
    Ok(format!("6/6 pairs, max |err| = {worst:.5}"))
}

fn expected_caption(span: &IndexSpan, gold: Option<&str>, cfg: &CodecConfig) -> Option<String> {
    match (cfg.mode, cfg.formulation) {
        (Mode::SegOnly, _) => None,
        (Mode::SegCap, Formulation::Length) => gold.map(str::to_owned),
        (Mode::SegCap, Formulation::Tagging) => {
            let words: Vec<&str> = gold.unwrap_or("").split_whitespace().collect();
            Some(words[..words.len().min(span.len() - 1)].join(" "))
        }
    }
}

fn codec_round_trip() -> Outcome {
    const PER_CONFIG: usize = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut truncated = 0;
    for cfg in CodecConfig::all() {
        for i in 0..PER_CONFIG {
            let tile = cfg.setting == Setting::Partition;
            let ann = common::random_annotation(&mut rng, &format!("v{i}"), tile, cfg.mode == Mode::SegCap);
            let gold = segments_to_index_spans(&ann.segments, &ann.transcript).spans;
            let target = encode(&ann, &cfg).map_err(|e| format!("{cfg} encode: {e}"))?;
            check(
                grammar_check(&target, &cfg).is_empty(),
                format!("{cfg}: grammar_check flags {target}"),
            )?;
            let report = decode(&target, &ann.transcript, &cfg).map_err(|e| format!("{cfg} decode: {e}"))?;
            check(
                report.warnings.is_empty(),
                format!("{cfg}: warnings {:?} for {target}", report.warnings),
            )?;
            check(
                report.spans.len() == gold.len(),
                format!("{cfg}: span count for {target}"),
            )?;
            for (got, want) in report.spans.iter().zip(&gold) {
                check(
                    (got.start, got.end) == (want.start, want.end),
                    format!("{cfg}: {got:?} != {want:?}"),
                )?;
                let cap = expected_caption(want, want.caption.as_deref(), &cfg);
                if cfg.formulation == Formulation::Tagging && cap.as_deref() != want.caption.as_deref() && cap.is_some()
                {
                    truncated += 1;
                }
                check(
                    got.caption == cap,
                    format!("{cfg}: caption {:?} != {cap:?}", got.caption),
                )?;
            }
        }
    }
    Ok(format!(
        "8 configs x {PER_CONFIG} annotations, 0 warnings, {truncated} tagging captions truncated to span length - 1"
    ))
}

fn fuzz_token<R: Rng>(rng: &mut R) -> String {
    match rng.random_range(0..10) {
        0 => "<sep>".into(),
        1 => "<pad>".into(),
        2 => "<end>".into(),
        3 | 4 => rng.random_range(0..30).to_string(),
        5 => ["-3", "007", "+4", "0", "99999999999999999999999", "1.5", "1e3"][rng.random_range(0..7)].into(),
        6 => ["<sep", "sep>", "<SEP>", "<unk>", "ü", "\u{200b}"][rng.random_range(0..6)].into(),
        _ => common::VOCAB[rng.random_range(0..common::VOCAB.len())].into(),
    }
}

fn decode_fuzz() -> Outcome {
    const STRINGS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let configs = CodecConfig::all();
    let mut decodes = 0;
    let mut warned = 0;
    for _ in 0..STRINGS {
        let n = rng.random_range(0..40);
        let target = TargetString::from_tokens(&(0..n).map(|_| fuzz_token(&mut rng)).collect::<Vec<_>>());
        let len = rng.random_range(1..50);
        for cfg in &configs {
            let result = panic::catch_unwind(AssertUnwindSafe(|| decode_with_len(&target, len, cfg)));
            let report = match result {
                Ok(Ok(r)) => r,
                Ok(Err(e)) => return Err(format!("{cfg}: {target:?} failed: {e}")),
                Err(_) => return Err(format!("{cfg}: {target:?} panicked")),
            };
            decodes += 1;
            warned += usize::from(!report.warnings.is_empty());
            for s in &report.spans {
                check(
                    s.start < s.end && s.end <= len,
                    format!("{cfg}: {target:?} span {s:?} out of bounds {len}"),
                )?;
            }
            for w in report.spans.windows(2) {
                check(
                    w[0].end <= w[1].start,
                    format!("{cfg}: {target:?} spans unsorted or overlapping"),
                )?;
            }
        }
    }
    Ok(format!(
        "{STRINGS} strings x 8 configs = {decodes} decodes, none failed, {warned} with recovery warnings"
    ))
}

fn metric_oracles() -> Outcome {
    const INSTANCES: usize = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact_sq = 0;
    let mut checks = 0;
    for _ in 0..INSTANCES {
        let gold = loop {
            let g = common::random_segments(&mut rng, 10);
            if !g.is_empty() {
                break g;
            }
        };
        let pred = common::random_segments(&mut rng, 10);
        let m: f64 = miou(&gold, &pred).map_err(|e| e.to_string())?;
        let want = common::miou_oracle(&gold, &pred);
        check((m - want).abs() < 1e-12, format!("miou {m} != oracle {want}"))?;
        for t in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let prf = precision_recall_f1(&gold, &pred, t).map_err(|e| e.to_string())?;
            let (p, r) = common::pr_oracle(&gold, &pred, t);
            check(
                (prf.precision, prf.recall) == (p, r),
                format!("P/R ({}, {}) != oracle ({p}, {r})", prf.precision, prf.recall),
            )?;
            let pr = p * r;
            // f1 is the correctly rounded square root of P·R; its square differs
            // from P·R by at most the rounding of that square root
            check(prf.f1 == pr.sqrt(), format!("f1 {} != sqrt({pr})", prf.f1))?;
            let residual = prf.f1.mul_add(prf.f1, -pr).abs();
            check(
                residual <= prf.f1 * f64::EPSILON * prf.f1 * 2.0,
                format!("f1^2 - P*R = {residual}"),
            )?;
            exact_sq += usize::from(prf.f1 * prf.f1 == pr);
            checks += 1;
        }
    }
    let b: f64 = bleu4("a b c d e", "a b c d f");
    check((b - 0.6687).abs() < 5e-5, format!("bleu4 {b:.5} != 0.6687"))?;
    let rl: f64 = rouge_l("a c d", "a b c d", 1.2);
    check((rl - 0.8356).abs() < 5e-5, format!("rouge_l {rl:.5} != 0.8356"))?;
    let c = cider_d(&[("whisk eggs with salt", "whisk eggs with salt")], 6.0f64).map_err(|e| e.to_string())?;
    check((c.mean - 10.0).abs() < 1e-12, format!("cider_d {} != 10.0", c.mean))?;
    Ok(format!(
        "{INSTANCES} instances match brute force; f1 == sqrt(P*R) on {checks}/{checks} (f1*f1 == P*R bitwise on {exact_sq}); bleu4 {b:.4}, rouge_l {rl:.4}, cider_d {:.1}",
        c.mean
    ))
}

fn partition_transform() -> Outcome {
    const ANNOTATIONS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..ANNOTATIONS {
        let ann = common::random_annotation(&mut rng, &format!("v{i}"), false, true);
        let out = to_partition_setting(&ann).map_err(|e| e.to_string())?;
        check(out.segments.len() == ann.segments.len(), "segment count changed")?;
        check(out.segments[0].start.get() == 0.0, "first segment does not start at 0")?;
        check(
            out.segments.windows(2).all(|w| w[0].end == w[1].start),
            "gap left between segments",
        )?;
        check(
            out.segments.last().unwrap().end == out.duration,
            "last segment does not reach the duration",
        )?;
        check(
            dvcseq::validate_annotation(&out).is_empty(),
            "transformed annotation invalid",
        )?;
        let again = to_partition_setting(&out).map_err(|e| e.to_string())?;
        check(again == out, format!("not idempotent on v{i}"))?;
    }
    Ok(format!(
        "{ANNOTATIONS} annotations: idempotent, counts preserved, segments tile [0, duration]"
    ))
}

fn baseline_statistics() -> Outcome {
    const DRAWS: usize = 100_000;
    const LEN: usize = 1000;
    let cfg = BaselineConfig::new(20_240_601);
    let mut rng = cfg.rng();
    let mut counts = [0usize; 15];
    for _ in 0..DRAWS {
        let spans = random_partition(LEN, &cfg, &mut rng).map_err(|e| e.to_string())?;
        check(
            spans.first().map(|s| s.start) == Some(0),
            "partition does not start at 0",
        )?;
        check(spans.windows(2).all(|w| w[0].end == w[1].start), "partition has a gap")?;
        check(spans.iter().all(|s| s.start < s.end), "empty span")?;
        check(
            spans.iter().map(IndexSpan::len).sum::<usize>() == LEN,
            "lengths do not sum to the transcript length",
        )?;
        counts[spans.len() - 1] += 1;
    }
    let expected = DRAWS as f64 / 15.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(14.0).map_err(|e| e.to_string())?.cdf(stat);
    check(p > 0.01, format!("chi-square {stat:.2}, p = {p:.4} <= 0.01"))?;
    Ok(format!(
        "{DRAWS} draws, n uniform on 1..=15: chi-square(14) = {stat:.2}, p = {p:.3}; every output tiles [0, {LEN})"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("IoU fixtures", iou_fixtures),
        ("Codec round-trip", codec_round_trip),
        ("Decode robustness", decode_fuzz),
        ("Metric oracles", metric_oracles),
        ("Partition-transform properties", partition_transform),
        ("Baseline statistics", baseline_statistics),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({secs:.2}s)");
            }
        }
    }
    println!(
        "INFO  Not reproducible: trained-model scores and the published random-baseline mIoU need the original \
         video corpora and pretrained models; the invariant and statistics checks above stand in for them."
    );
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
