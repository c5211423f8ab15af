//! The example programs shipped with the crate.

use crate::error::Error;
use crate::surface::Program;

pub const CORPUS: [(&str, &str); 7] = [
    ("mlp", include_str!("../examples/mlp.rva")),
    ("resnet", include_str!("../examples/resnet.rva")),
    ("autoencoder", include_str!("../examples/autoencoder.rva")),
    ("autoencoder_deep", include_str!("../examples/autoencoder_deep.rva")),
    ("cnn", include_str!("../examples/cnn.rva")),
    ("unet", include_str!("../examples/unet.rva")),
    ("ste", include_str!("../examples/ste.rva")),
];

pub fn source(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn program(name: &str) -> Result<Program, Error> {
    let src = source(name).ok_or_else(|| Error::Input(format!("no example named {name}")))?;
    Program::parse(src)
}
