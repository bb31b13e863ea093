use std::path::Path;

use rayon::prelude::*;

use super::{DatasetError, DatasetSpec, Manifest, Mode, SampleMeta, SampleRecord, StatsAccumulator};
use crate::algorithms::{self, Op, Operands};
use crate::noise::{self, NoiseConfig, NoiseKind, NoiseMeta};
use crate::sampling::{derive_seed, sample_task_inputs, stream_rng, Stream};
use crate::trace::{EventKind, TraceContext, TraceEvent};

#[derive(Debug, Clone, Copy, Default)]
pub struct PostprocessOptions {
    pub keep_code_lines: bool,
}

/// Turns a finished trace into `(problem, cot_lines, answer)`.
pub fn postprocess(
    events: &[TraceEvent],
    options: PostprocessOptions,
) -> Result<(String, Vec<String>, String), DatasetError> {
    let malformed = |m: &str| DatasetError::MalformedTrace(m.to_string());
    let (first, rest) = events.split_first().ok_or_else(|| malformed("empty trace"))?;
    let (last, middle) = rest.split_last().ok_or_else(|| malformed("trace has no answer"))?;
    let problem = match &first.kind {
        EventKind::Problem(p) => p.clone(),
        _ => return Err(malformed("first event is not the problem")),
    };
    let answer = match &last.kind {
        EventKind::Answer(a) => a.clone(),
        _ => return Err(malformed("last event is not the answer")),
    };
    let mut cot = Vec::with_capacity(middle.len());
    for e in middle {
        match &e.kind {
            EventKind::Assign(_) => cot.push(e.line()),
            EventKind::Code(_) if options.keep_code_lines => cot.push(e.line()),
            EventKind::Code(_) => {}
            EventKind::Problem(_) | EventKind::Answer(_) => {
                return Err(malformed("problem or answer inside the trace body"))
            }
        }
    }
    Ok((problem, cot, answer))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordOptions {
    pub noise: NoiseConfig,
    pub mode: Mode,
    pub keep_code_lines: bool,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions { noise: NoiseConfig::none(), mode: Mode::Cot, keep_code_lines: false }
    }
}

/// Traces given operands into a record: noise gate, trace (with the
/// dynamic hook when gated), post-process, direct truncation, static noise.
pub fn trace_record(
    options: &RecordOptions,
    id: String,
    seed: u64,
    op: Op,
    operands: &Operands,
) -> Result<SampleRecord, DatasetError> {
    let noise_cfg = options.noise;
    let noised = !matches!(noise_cfg.kind, NoiseKind::None)
        && noise::select_noised(&mut stream_rng(seed, Stream::Gate), noise_cfg.effective_level());

    let mut ctx = match noise_cfg.kind {
        NoiseKind::Dynamic { intensity } if noised => {
            TraceContext::with_dynamic_noise(stream_rng(seed, Stream::Dynamic), intensity)
        }
        _ => TraceContext::new(),
    }
    .emit_code_lines(options.keep_code_lines);
    algorithms::run(&mut ctx, op, operands)?;
    debug_assert_eq!(ctx.invisibility_depth(), 0);

    let mut meta_noise = None;
    if let NoiseKind::Dynamic { intensity } = noise_cfg.kind {
        if noised {
            meta_noise = Some(NoiseMeta::Dynamic {
                intensity,
                dataset_level: noise_cfg.dataset_level,
                init_sites: ctx.eligible_sites(),
                corruptions: ctx.take_corruptions(),
            });
        }
    }

    let (problem, mut cot_lines, answer) =
        postprocess(ctx.events(), super::PostprocessOptions { keep_code_lines: options.keep_code_lines })?;
    if options.mode == Mode::Direct {
        cot_lines.clear();
    }
    let list_len = match operands {
        Operands::List(xs) => Some(xs.len()),
        Operands::Pair(..) => None,
    };
    let mut record = SampleRecord {
        id,
        task: op,
        problem,
        cot_lines,
        answer,
        noised,
        noise: meta_noise,
        seed,
        meta: SampleMeta { operand_lengths: operands.digit_lengths(), list_len },
    };

    if noised && noise_cfg.is_static() {
        let mut rng = stream_rng(seed, Stream::Static);
        record = match noise_cfg.kind {
            NoiseKind::Char { intensity } => {
                let (mut r, considered, flipped) =
                    noise::apply_char_noise(&mut rng, &record, intensity, noise_cfg.flip_mode);
                r.noise = Some(NoiseMeta::Char {
                    intensity,
                    dataset_level: noise_cfg.dataset_level,
                    flip_mode: noise_cfg.flip_mode,
                    digits_considered: considered,
                    digits_flipped: flipped,
                });
                r
            }
            NoiseKind::Line { intensity } => {
                let (mut r, considered, deleted) = noise::apply_line_noise(&mut rng, &record, intensity);
                r.noise = Some(NoiseMeta::Line {
                    intensity,
                    dataset_level: noise_cfg.dataset_level,
                    lines_considered: considered,
                    lines_deleted: deleted,
                });
                r
            }
            _ => unreachable!("static kinds only"),
        };
    }
    Ok(record)
}

/// Sample `index` of `spec`; depends only on `(spec, index)`.
pub fn build_sample(spec: &DatasetSpec, index: u64) -> Result<SampleRecord, DatasetError> {
    let seed = derive_seed(spec.seed, index);
    let (op, operands) = sample_task_inputs(&mut stream_rng(seed, Stream::Inputs), &spec.inputs);
    trace_record(&spec.record_options(), spec.record_id(index), seed, op, &operands)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, DatasetError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DatasetError::Pool(e.to_string()))
}

fn build_range(spec: &DatasetSpec, range: std::ops::Range<u64>) -> Result<Vec<SampleRecord>, DatasetError> {
    range.into_par_iter().map(|i| build_sample(spec, i)).collect()
}

/// All records of `spec` in index order, built on `workers` threads.
pub fn generate(spec: &DatasetSpec, workers: usize) -> Result<Vec<SampleRecord>, DatasetError> {
    spec.validate()?;
    let start = spec.start_index;
    pool(workers)?.install(|| build_range(spec, start..start + spec.count as u64))
}

const CHUNK: u64 = 8192;

/// Streams `spec` into a JSONL file at `path` (written atomically) and
/// writes the manifest next to it.
pub fn generate_to_file(spec: &DatasetSpec, path: &Path, workers: usize) -> Result<Manifest, DatasetError> {
    spec.validate()?;
    let pool = pool(workers)?;
    let mut acc = StatsAccumulator::default();
    let start = spec.start_index;
    let end = start + spec.count as u64;
    super::io::write_atomic(path, |w| {
        let mut lo = start;
        while lo < end {
            let hi = (lo + CHUNK).min(end);
            let chunk = pool.install(|| build_range(spec, lo..hi))?;
            for r in &chunk {
                acc.add(r);
                super::io::write_record(w, r)?;
            }
            lo = hi;
        }
        Ok(())
    })?;
    let manifest = Manifest::new(spec, path, acc.finish())?;
    manifest.write(&super::manifest_path(path))?;
    Ok(manifest)
}
