pub mod classify;
pub mod error;
pub mod families;
pub mod numkernel;
pub mod profiles;
pub mod spinchain;
pub mod sampling;
pub mod transforms;
pub mod weights;

pub use error::{Result, YbeError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/classify.md")]
    mod classify {}
    #[doc = include_str!("../../../book/src/spinchain.md")]
    mod spinchain {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
