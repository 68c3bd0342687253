#![allow(dead_code)]

use std::path::{Path, PathBuf};

use topictrend::pipeline::PipelineConfig;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// The bundled configuration, writing into `out`.
pub fn bundled_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::from_file(&data("synthetic.toml")).unwrap();
    c.out = out.to_path_buf();
    c
}

/// A cheaper variant of the bundled configuration: no K scan, short
/// bootstrap and small embeddings.
pub fn quick_config(out: &Path) -> PipelineConfig {
    let mut c = bundled_config(out);
    let t = c.topics.as_mut().unwrap();
    t.k_range = None;
    t.max_iterations = 30;
    let m = c.multivar.as_mut().unwrap();
    m.replications = 40;
    let e = c.embeddings.as_mut().unwrap();
    e.dim = 10;
    e.iterations = 5;
    c
}
