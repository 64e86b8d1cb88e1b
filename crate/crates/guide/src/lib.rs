//! The book chapters as doc modules, so that `cargo test` runs every Rust
//! snippet in them against the current library.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(data, "data.md");
chapter!(distance, "distance.md");
chapter!(neighborhoods, "neighborhoods.md");
chapter!(fisher, "fisher.md");
chapter!(permutations, "permutations.md");
chapter!(pruning, "pruning.md");
chapter!(reproducibility, "reproducibility.md");
chapter!(cli, "cli.md");
