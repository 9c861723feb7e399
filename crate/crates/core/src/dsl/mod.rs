//! Textual FM language: lexer, parser with positioned diagnostics, and the
//! canonical serializer used by `fmt`.
//!
//! ```text
//! thing book
//! sphere Shelf {
//!   machine Book of book { stages { Storage Release Transfer } }
//! }
//! flow Shelf.Book.Storage -> Shelf.Book.Release
//! trigger A.Concept.Create => A.Word.Create when tick <= 3
//! junction Hire => Recruiter.StartHiring.Create
//! ```

mod diagnostic;
mod lexer;
mod parser;
mod serialize;

pub use diagnostic::{ParseCode, ParseDiagnostic, Severity, SourceSpan};
pub use parser::{parse, parse_bytes, parse_guard, parse_named, ANONYMOUS};
pub use serialize::serialize;
