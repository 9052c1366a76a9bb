use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed CSV header: {0}")]
    Header(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image is {width}x{height}, smaller than the 3x3 Laplacian kernel")]
    ImageTooSmall { width: u32, height: u32 },

    #[error("cannot decode image: {0}")]
    Decode(String),

    #[error("input not sorted: {0}")]
    Unsorted(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("latitude {0} outside Web Mercator validity (|lat| < 85.051)")]
    LatitudeOutOfRange(f64),

    #[error("cannot fit a projection to an empty set of fixes")]
    NoFixes,

    #[error(
        "no image was matched to a GPS fix; the camera often loses GPS indoors, \
         so check that the GPS export covers outdoor periods and that --tz-offset is right"
    )]
    NoGeoImages,

    #[error("episode index {index} out of range ({len} episodes)")]
    EpisodeIndex { index: usize, len: usize },

    #[error("referenced image files are missing: {}", .0.join(", "))]
    MissingImages(Vec<String>),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("unsupported manifest version {found} (this reader understands {supported})")]
    ManifestVersion { found: u64, supported: u64 },

    #[error("cannot encode {what}: {message}")]
    Encode { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure is caused by user input rather than a bug or
    /// an environment fault.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Encode { .. })
    }
}
