//! Dataset manifests: which image belongs to which class and split.
//!
//! ```text
//! iris-manifest 1
//! # path class split
//! class00/image00.pgm 0 train
//! class00/image01.pgm 0 test
//! ```
//!
//! Paths are relative to the manifest's directory and may not contain whitespace.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "iris-manifest 1";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(format!("split must be train or test, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the manifest root.
    pub path: String,
    pub class: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Format {
            what: "manifest",
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MANIFEST_HEADER => {}
            _ => return Err(err(1, format!("expected header {MANIFEST_HEADER:?}"))),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [path, class, split] = fields[..] else {
                return Err(err(i + 1, "expected `path class split`".into()));
            };
            let class = class
                .parse()
                .map_err(|_| err(i + 1, format!("bad class id {class:?}")))?;
            let split = split.parse().map_err(|e| err(i + 1, e))?;
            entries.push(ManifestEntry {
                path: path.to_string(),
                class,
                split,
            });
        }
        let m = Self {
            root: root.into(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, root)
    }

    /// Loads `dir/manifest.txt`, or builds a manifest from `classNN/` folders.
    pub fn open(path: &Path, train_fraction: f64, seed: u64) -> Result<Self> {
        if path.is_dir() {
            let file = path.join(MANIFEST_FILE);
            if file.is_file() {
                Self::load(&file)
            } else {
                Self::scan(path, train_fraction, seed)
            }
        } else {
            Self::load(path)
        }
    }

    /// Builds a manifest from `root/class<N>/*` with a seeded per-class split.
    pub fn scan(root: &Path, train_fraction: f64, seed: u64) -> Result<Self> {
        let read = |p: &Path| std::fs::read_dir(p).map_err(|e| Error::io(p, e));
        let mut classes = Vec::new();
        for entry in read(root)? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(id) = name
                .strip_prefix("class")
                .and_then(|n| n.parse::<usize>().ok())
            {
                if entry.path().is_dir() {
                    classes.push((id, name));
                }
            }
        }
        classes.sort();
        let mut entries = Vec::new();
        for (dense, (_, name)) in classes.iter().enumerate() {
            let dir = root.join(name);
            let mut files = Vec::new();
            for f in read(&dir)? {
                let f = f.map_err(|e| Error::io(&dir, e))?;
                let fname = f.file_name().to_string_lossy().into_owned();
                let is_image = Path::new(&fname)
                    .extension()
                    .and_then(|e| e.to_str())
                    .and_then(crate::raster::ImageFormat::from_extension)
                    .is_some();
                if is_image && f.path().is_file() {
                    files.push(fname);
                }
            }
            files.sort();
            let n_train = ((files.len() as f64 * train_fraction).round() as usize)
                .clamp(1, files.len().max(1));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(dense as u64);
            let train: BTreeSet<usize> =
                rand::seq::index::sample(&mut rng, files.len(), n_train.min(files.len()))
                    .into_iter()
                    .collect();
            for (i, f) in files.into_iter().enumerate() {
                entries.push(ManifestEntry {
                    path: format!("{name}/{f}"),
                    class: dense,
                    split: if train.contains(&i) {
                        Split::Train
                    } else {
                        Split::Test
                    },
                });
            }
        }
        let m = Self {
            root: root.to_path_buf(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    /// Class ids are dense `0..C` and every class has a training image.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Empty("manifest has no entries"));
        }
        let classes: BTreeSet<usize> = self.entries.iter().map(|e| e.class).collect();
        let c = classes.len();
        if classes.iter().next_back() != Some(&(c - 1)) {
            return Err(Error::Data(format!(
                "class ids must be dense 0..{}, got {:?}",
                c - 1,
                classes
            )));
        }
        for class in classes {
            if !self
                .entries
                .iter()
                .any(|e| e.class == class && e.split == Split::Train)
            {
                return Err(Error::Data(format!("class {class} has no training image")));
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.entries.iter().map(|e| e.class + 1).max().unwrap_or(0)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n# path class split\n");
        for e in &self.entries {
            s.push_str(&format!("{} {} {}\n", e.path, e.class, e.split));
        }
        s
    }
}
