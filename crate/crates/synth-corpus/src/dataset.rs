//! On-disk dataset format.
//!
//! A dataset directory holds `manifest.json` (version, vocabulary, tools,
//! observation kind, video list, optional split) and one annotation file per
//! video. Annotation files are delimited text, one frame per line:
//!
//! ```text
//! # endoflow-frames v1
//! video_id<TAB>timestamp<TAB>phase_id<TAB>f1 .. f7<TAB>obs values
//! ```
//!
//! Floats round-trip bit-exactly through the shortest-representation
//! formatter, so `read(write(x)) == x`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};
use crate::observe::ObservationKind;
use crate::split::CorpusSplit;
use crate::vocab::{PhaseVocabulary, N_TOOLS, TOOL_NAMES};

pub const DATASET_VERSION: u32 = 1;
pub const FRAME_FILE_HEADER: &str = "# endoflow-frames v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub vocabulary: PhaseVocabulary,
    pub tools: Vec<String>,
    pub observation: ObservationKind,
    pub videos: Vec<String>,
    pub split: Option<CorpusSplit>,
}

impl Manifest {
    pub fn new(
        vocabulary: PhaseVocabulary,
        observation: ObservationKind,
        videos: Vec<String>,
    ) -> Self {
        Manifest {
            version: DATASET_VERSION,
            vocabulary,
            tools: TOOL_NAMES.iter().map(|s| s.to_string()).collect(),
            observation,
            videos,
            split: None,
        }
    }
}

/// One 1-fps frame: phase label, binary tool flags, observation payload.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub video: String,
    pub t: u32,
    /// Index into the vocabulary.
    pub phase: usize,
    pub tools: [bool; N_TOOLS],
    pub observation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoAnnotations {
    pub id: String,
    pub frames: Vec<FrameRecord>,
}

impl VideoAnnotations {
    pub fn phase_labels(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.phase).collect()
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        self.frames.iter().map(|f| f.observation.clone()).collect()
    }

    pub fn tool_flags(&self, tool: usize) -> Vec<bool> {
        self.frames.iter().map(|f| f.tools[tool]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub videos: Vec<VideoAnnotations>,
}

impl Dataset {
    pub fn video(&self, id: &str) -> Option<&VideoAnnotations> {
        self.videos.iter().find(|v| v.id == id)
    }
}

fn frame_path(dir: &Path, video: &str) -> PathBuf {
    dir.join(format!("{video}.frames"))
}

fn format_frame(f: &FrameRecord, phase_id: &str) -> String {
    let flags: Vec<&str> = f.tools.iter().map(|&b| if b { "1" } else { "0" }).collect();
    let obs: Vec<String> = f.observation.iter().map(|v| format!("{v}")).collect();
    format!(
        "{}\t{}\t{}\t{}\t{}",
        f.video,
        f.t,
        phase_id,
        flags.join(" "),
        obs.join(" ")
    )
}

pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest_text = serde_json::to_string_pretty(&dataset.manifest)?;
    fs::write(dir.join("manifest.json"), manifest_text)?;
    for video in &dataset.videos {
        let mut out = String::with_capacity(video.frames.len() * 64);
        out.push_str(FRAME_FILE_HEADER);
        out.push('\n');
        for f in &video.frames {
            let id = &dataset.manifest.vocabulary.phases[f.phase].id;
            out.push_str(&format_frame(f, id));
            out.push('\n');
        }
        fs::write(frame_path(dir, &video.id), out)?;
    }
    Ok(())
}

fn parse_frame_line(
    line: &str,
    vocab: &PhaseVocabulary,
    obs_len: usize,
) -> std::result::Result<FrameRecord, String> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != 5 {
        return Err(format!("expected 5 tab-separated fields, got {}", parts.len()));
    }
    let video = parts[0].to_string();
    let t: u32 = parts[1]
        .parse()
        .map_err(|_| format!("bad timestamp '{}'", parts[1]))?;
    let phase = vocab
        .index_of(parts[2])
        .ok_or_else(|| format!("phase id '{}' not in vocabulary", parts[2]))?;
    let flag_tokens: Vec<&str> = parts[3].split(' ').collect();
    if flag_tokens.len() != N_TOOLS {
        return Err(format!(
            "expected {N_TOOLS} tool flags, got {}",
            flag_tokens.len()
        ));
    }
    let mut tools = [false; N_TOOLS];
    for (slot, tok) in tools.iter_mut().zip(&flag_tokens) {
        *slot = match *tok {
            "0" => false,
            "1" => true,
            other => return Err(format!("tool flag must be 0 or 1, got '{other}'")),
        };
    }
    let observation: std::result::Result<Vec<f64>, _> = parts[4]
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect();
    let observation = observation.map_err(|e| format!("bad observation value: {e}"))?;
    if observation.len() != obs_len {
        return Err(format!(
            "expected {obs_len} observation values, got {}",
            observation.len()
        ));
    }
    Ok(FrameRecord {
        video,
        t,
        phase,
        tools,
        observation,
    })
}

fn read_video(dir: &Path, id: &str, manifest: &Manifest) -> Result<VideoAnnotations> {
    let path = frame_path(dir, id);
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == FRAME_FILE_HEADER => {}
        Some((_, header)) => {
            return Err(CorpusError::Parse {
                file: path,
                line: 1,
                reason: format!("bad header '{header}'"),
            })
        }
        None => {
            return Err(CorpusError::Parse {
                file: path,
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut frames = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let frame = parse_frame_line(line, &manifest.vocabulary, manifest.observation.len())
            .map_err(|reason| CorpusError::Parse {
                file: path.clone(),
                line: idx + 1,
                reason,
            })?;
        if frame.video != id {
            return Err(CorpusError::Parse {
                file: path.clone(),
                line: idx + 1,
                reason: format!("video id '{}' does not match file '{id}'", frame.video),
            });
        }
        if frame.t as usize != frames.len() {
            return Err(CorpusError::Parse {
                file: path.clone(),
                line: idx + 1,
                reason: format!(
                    "timestamps must be consecutive from 0; expected {}, got {}",
                    frames.len(),
                    frame.t
                ),
            });
        }
        frames.push(frame);
    }
    Ok(VideoAnnotations {
        id: id.to_string(),
        frames,
    })
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.version != DATASET_VERSION {
        return Err(CorpusError::Invalid(format!(
            "unsupported dataset version {} (expected {DATASET_VERSION})",
            manifest.version
        )));
    }
    let videos = manifest
        .videos
        .iter()
        .map(|id| read_video(dir, id, &manifest))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, videos })
}

/// One validation finding, tied to a file and (when line-level) a line.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.file.display(), l, self.message),
            None => write!(f, "{}: {}", self.file.display(), self.message),
        }
    }
}

/// Validates a dataset directory, collecting every violation instead of
/// stopping at the first: schema, timestamp monotonicity, vocabulary
/// membership, and flag arity.
pub fn validate_dataset(dir: &Path) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = match fs::read_to_string(&manifest_path) {
        Ok(text) => match serde_json::from_str(&text) {
            Ok(m) => m,
            Err(e) => {
                diags.push(Diagnostic {
                    file: manifest_path,
                    line: None,
                    message: format!("manifest parse error: {e}"),
                });
                return diags;
            }
        },
        Err(e) => {
            diags.push(Diagnostic {
                file: manifest_path,
                line: None,
                message: format!("cannot read manifest: {e}"),
            });
            return diags;
        }
    };
    if manifest.version != DATASET_VERSION {
        diags.push(Diagnostic {
            file: manifest_path.clone(),
            line: None,
            message: format!("unsupported dataset version {}", manifest.version),
        });
    }

    for id in &manifest.videos {
        let path = frame_path(dir, id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                diags.push(Diagnostic {
                    file: path,
                    line: None,
                    message: format!("cannot read annotation file: {e}"),
                });
                continue;
            }
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == FRAME_FILE_HEADER => {}
            Some((_, h)) => diags.push(Diagnostic {
                file: path.clone(),
                line: Some(1),
                message: format!("bad header '{h}'"),
            }),
            None => {
                diags.push(Diagnostic {
                    file: path.clone(),
                    line: Some(1),
                    message: "empty file".into(),
                });
                continue;
            }
        }
        let mut expected_t = 0usize;
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            match parse_frame_line(line, &manifest.vocabulary, manifest.observation.len()) {
                Ok(frame) => {
                    if frame.video != *id {
                        diags.push(Diagnostic {
                            file: path.clone(),
                            line: Some(idx + 1),
                            message: format!("video id '{}' does not match file", frame.video),
                        });
                    }
                    if frame.t as usize != expected_t {
                        diags.push(Diagnostic {
                            file: path.clone(),
                            line: Some(idx + 1),
                            message: format!(
                                "non-consecutive timestamp: expected {expected_t}, got {}",
                                frame.t
                            ),
                        });
                        expected_t = frame.t as usize;
                    }
                    expected_t += 1;
                }
                Err(reason) => {
                    diags.push(Diagnostic {
                        file: path.clone(),
                        line: Some(idx + 1),
                        message: reason,
                    });
                    // Resync the timestamp check from the raw field so one
                    // malformed line does not cascade.
                    if let Some(t) = line.split('\t').nth(1).and_then(|s| s.parse::<usize>().ok())
                    {
                        expected_t = t + 1;
                    } else {
                        expected_t += 1;
                    }
                }
            }
        }
    }
    diags
}
