use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_language(cbindgen::Language::C)
        .with_include_guard("HAHN_H")
        .with_cpp_compat(true)
        .with_documentation(true)
        .generate()
        .expect("unable to generate C bindings")
        .write_to_file(crate_dir.join("include/hahn.h"));
}
