use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let header = cbindgen::Builder::new()
        .with_crate(&dir)
        .with_config(config)
        .generate()
        .expect("header generation");
    let out = dir.join("include").join("sentinel.h");
    std::fs::create_dir_all(out.parent().unwrap()).unwrap();
    // Only touch the file when it changes so dependants do not rebuild.
    let mut text = Vec::new();
    header.write(&mut text);
    if std::fs::read(&out).ok().as_deref() != Some(&text[..]) {
        std::fs::write(&out, text).unwrap();
    }
}
