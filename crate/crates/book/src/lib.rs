//! Runs every Rust snippet in `book/src` as a doctest, so the guide breaks
//! the build when it drifts from the library.

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/comb.md")]
    mod comb {}
    #[doc = include_str!("../../../book/src/generating-functions.md")]
    mod generating_functions {}
    #[doc = include_str!("../../../book/src/cmp.md")]
    mod cmp {}
    #[doc = include_str!("../../../book/src/exchangeability.md")]
    mod exchangeability {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/comm.md")]
    mod comm {}
    #[doc = include_str!("../../../book/src/soybean.md")]
    mod soybean {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
