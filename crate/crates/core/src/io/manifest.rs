//! Dataset manifests.
//!
//! ```text
//! responses = responses.atn
//! fixations = fixations.csv
//! lag_seconds = 4
//! stimulus = 720x1280
//! voxel_grid = 113x136x113        # optional
//! voxel_mask = mask.atn           # optional
//! truth_attention = truth.atn     # optional
//! train_val_ratio = 9:1           # optional
//! weights_sha256 = 3f2a...         # optional, feature network checksum
//! frame = train 0 features/f000000.atn
//! frame = test 2000 features/f002000.atn
//! ```
//!
//! Relative paths resolve against the manifest's directory. A frame id is
//! the row index of its time point in the response matrix.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::{format_dims, parse_dims2, parse_dims3, KeyValues};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEntry {
    pub split: Split,
    pub frame_id: u64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory that relative paths are resolved against.
    pub root: PathBuf,
    pub responses: PathBuf,
    pub fixations: Option<PathBuf>,
    pub lag_seconds: usize,
    pub stimulus: (usize, usize),
    pub voxel_grid: Option<[usize; 3]>,
    pub voxel_mask: Option<PathBuf>,
    pub truth_attention: Option<PathBuf>,
    /// Train:val ratio used to carve a validation block off the end of the
    /// training frames when no `val` frames are listed.
    pub train_val_ratio: Option<(u32, u32)>,
    /// Checksum of the network weights the features were extracted with.
    /// Carried through, never verified here.
    pub weights_sha256: Option<String>,
    pub frames: Vec<FrameEntry>,
}

const KEYS: [&str; 10] = [
    "responses",
    "fixations",
    "lag_seconds",
    "stimulus",
    "voxel_grid",
    "voxel_mask",
    "truth_attention",
    "train_val_ratio",
    "weights_sha256",
    "frame",
];

fn parse_ratio(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::invalid(format!("bad ratio '{s}', expected e.g. 9:1"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

impl DatasetManifest {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let kv = KeyValues::parse(text, origin)?;
        kv.reject_unknown(&KEYS)?;
        let root = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        let path_of = |key: &str| kv.get(key).map(PathBuf::from);
        let wrap = |key: &str, e: Error| {
            let line = kv.all(key).last().map(|e| e.line).unwrap_or(0);
            kv.error(line, format!("{key}: {e}"))
        };
        let stimulus = parse_dims2(kv.get("stimulus").ok_or_else(|| kv.error(0, "missing required key 'stimulus'"))?)
            .map_err(|e| wrap("stimulus", e))?;
        let voxel_grid = kv.get("voxel_grid").map(parse_dims3).transpose().map_err(|e| wrap("voxel_grid", e))?;
        let train_val_ratio =
            kv.get("train_val_ratio").map(parse_ratio).transpose().map_err(|e| wrap("train_val_ratio", e))?;

        let mut frames = Vec::new();
        let mut seen = BTreeSet::new();
        for e in kv.all("frame") {
            let parts: Vec<&str> = e.value.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(kv.error(e.line, "frame lines are 'frame = <split> <id> <path>'"));
            }
            let split: Split = parts[0].parse().map_err(|err: Error| kv.error(e.line, err.to_string()))?;
            let frame_id: u64 =
                parts[1].parse().map_err(|_| kv.error(e.line, format!("bad frame id '{}'", parts[1])))?;
            if !seen.insert(frame_id) {
                return Err(kv.error(e.line, format!("duplicate frame id {frame_id}")));
            }
            frames.push(FrameEntry { split, frame_id, path: PathBuf::from(parts[2]) });
        }

        Ok(Self {
            root,
            responses: path_of("responses").ok_or_else(|| kv.error(0, "missing required key 'responses'"))?,
            fixations: path_of("fixations"),
            lag_seconds: kv.required("lag_seconds")?,
            stimulus,
            voxel_grid,
            voxel_mask: path_of("voxel_mask"),
            truth_attention: path_of("truth_attention"),
            train_val_ratio,
            weights_sha256: kv.get("weights_sha256").map(str::to_string),
            frames,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m = Self::parse(&text, path)?;
        m.check_files()?;
        Ok(m)
    }

    /// Errors with the first referenced file that does not exist.
    pub fn check_files(&self) -> Result<()> {
        let mut paths = vec![&self.responses];
        paths.extend(self.fixations.iter());
        paths.extend(self.voxel_mask.iter());
        paths.extend(self.truth_attention.iter());
        paths.extend(self.frames.iter().map(|f| &f.path));
        for p in paths {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::io(full, std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file is missing")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("responses", self.responses.display().to_string());
        if let Some(f) = &self.fixations {
            line("fixations", f.display().to_string());
        }
        line("lag_seconds", self.lag_seconds.to_string());
        line("stimulus", format!("{}x{}", self.stimulus.0, self.stimulus.1));
        if let Some(g) = &self.voxel_grid {
            line("voxel_grid", format_dims(g));
        }
        if let Some(m) = &self.voxel_mask {
            line("voxel_mask", m.display().to_string());
        }
        if let Some(t) = &self.truth_attention {
            line("truth_attention", t.display().to_string());
        }
        if let Some((a, b)) = self.train_val_ratio {
            line("train_val_ratio", format!("{a}:{b}"));
        }
        if let Some(w) = &self.weights_sha256 {
            line("weights_sha256", w.clone());
        }
        for f in &self.frames {
            line("frame", format!("{} {} {}", f.split, f.frame_id, f.path.display()));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Frame entries per split, in manifest order. If no `val` frames are
    /// listed and a ratio `a:b` is set, the last `round(n·b/(a+b))` train
    /// frames become validation frames.
    pub fn split_frames(&self) -> [Vec<&FrameEntry>; 3] {
        let pick = |s: Split| self.frames.iter().filter(|f| f.split == s).collect::<Vec<_>>();
        let mut train = pick(Split::Train);
        let mut val = pick(Split::Val);
        if val.is_empty() {
            if let Some((a, b)) = self.train_val_ratio {
                let n = train.len();
                let k = ((n as f64 * b as f64 / (a + b) as f64).round() as usize).min(n.saturating_sub(1));
                val = train.split_off(n - k);
            }
        }
        [train, val, pick(Split::Test)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "responses = r.atn\nfixations = f.csv\nlag_seconds = 4\nstimulus = 720x1280\n\
        voxel_grid = 4x5x6\ntrain_val_ratio = 9:1\nframe = train 0 a.atn\nframe = train 1 b.atn\nframe = test 9 c.atn\n";

    #[test]
    fn load_save_load_fixed_point() {
        let m = DatasetManifest::parse(TEXT, Path::new("/data/m.cfg")).unwrap();
        assert_eq!(m.root, Path::new("/data"));
        assert_eq!(m.stimulus, (720, 1280));
        assert_eq!(m.voxel_grid, Some([4, 5, 6]));
        let again = DatasetManifest::parse(&m.to_text(), Path::new("/data/m.cfg")).unwrap();
        assert_eq!(m, again);
        assert_eq!(again.to_text(), m.to_text());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let t = format!("{TEXT}frame = val 1 d.atn\n");
        assert!(matches!(DatasetManifest::parse(&t, Path::new("m")), Err(Error::Parse { line: 10, .. })));
    }

    #[test]
    fn ratio_carves_validation() {
        let mut t = String::from("responses = r\nlag_seconds = 0\nstimulus = 2x2\ntrain_val_ratio = 9:1\n");
        for i in 0..20 {
            t.push_str(&format!("frame = train {i} f{i}\n"));
        }
        let m = DatasetManifest::parse(&t, Path::new("m")).unwrap();
        let [train, val, test] = m.split_frames();
        assert_eq!((train.len(), val.len(), test.len()), (18, 2, 0));
        assert_eq!(val[0].frame_id, 18);
    }

    #[test]
    fn missing_keys_and_unknown_keys() {
        assert!(DatasetManifest::parse("lag_seconds = 1\nstimulus = 2x2\n", Path::new("m")).is_err());
        assert!(DatasetManifest::parse("responses = r\nlag_seconds = 1\nstimulus = 2x2\nbogus = 1\n", Path::new("m")).is_err());
    }
}
