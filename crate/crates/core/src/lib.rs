//! Top-down transition-based constituency parsing, with a dynamic oracle
//! and five training procedures: static likelihood, policy gradient on
//! expected F1, likelihood with oracle-supervised exploration, softmax
//! margin, and softmax margin with exploration.
//!
//! The pieces, bottom up:
//!
//! - [`treebank`]: sentences, trees, bracketed I/O, a synthetic treebank
//!   generator.
//! - [`transition`]: the Open/Shift/Close system.
//! - [`oracle`]: the dynamic oracle.
//! - [`scorer`]: a hashed-feature log-linear action model.
//! - [`evalf1`]: labeled F1 and the running cost standardizer.
//! - [`decode`]: sampling, greedy and beam decoding, candidate sets.
//! - [`training`]: the training loop and procedures.
//! - [`experiment`]: procedure × k matrices run from a shared initialization.
//!
//! ```
//! use topdown::transition::{format_actions, tree_to_actions};
//! use topdown::treebank::read_tree;
//!
//! let (_, tree) = read_tree("(S (NP the cat) (VP sleeps))").unwrap();
//! assert_eq!(
//!     format_actions(&tree_to_actions(&tree)),
//!     "NT(S) NT(NP) SHIFT SHIFT REDUCE NT(VP) SHIFT REDUCE REDUCE"
//! );
//! ```

pub mod config;
pub mod decode;
pub mod enumerate;
pub mod error;
pub mod evalf1;
pub mod experiment;
pub mod oracle;
pub mod scorer;
pub mod training;
pub mod transition;
pub mod treebank;

pub use error::{Error, Result};

// The book's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transitions.md")]
    mod transitions {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
