fn main() {
    // Link the system reference BLAS/LAPACK (Debian libblas-dev/liblapack-dev).
    // libgfortran is pulled in transitively by liblapack's DT_NEEDED entries.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
