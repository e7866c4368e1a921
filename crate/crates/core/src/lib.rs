//! Monadic datalog over ordered trees.
//!
//! The crate evaluates monadic datalog programs over document trees in time
//! linear in program size times tree size, rewrites programs into a
//! three-form normal form (TMNF), compiles query automata and MSO formulas to
//! and from datalog, and runs Elog-style wrappers that turn HTML pages into
//! labeled output trees.
//!
//! ```
//! use treelog::{datalog::parse_program, eval::evaluate, tree::parse_term_tree};
//!
//! let t = parse_term_tree("a(b,c(b))").unwrap();
//! let p = parse_program("sel(X) :- label_b(X), lastsibling(X).").unwrap();
//! let r = evaluate(&p, &t).unwrap();
//! assert_eq!(r.nodes_of("sel"), vec![3]);
//! ```

pub mod automata;
pub mod cli;
pub mod datalog;
pub mod elog;
pub mod eval;
pub mod mso;
pub mod normalize;
pub mod random;
pub mod tree;
pub mod wrap;
