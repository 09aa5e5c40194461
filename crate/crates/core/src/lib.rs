//! Object-centric event log engine.
//!
//! Loads OCEL 2.0 JSON logs, changes their granularity with drill-down,
//! roll-up, unfold and fold, and discovers object-centric directly-follows
//! graphs from the result.
//!
//! ```
//! use ocellens_core::{discovery, io, model::CompositeObjectType, ops};
//!
//! let log = io::running_example();
//! let drilled = ops::drill_down(&log, &CompositeObjectType::base("Test"), "type").unwrap();
//! let dfg = discovery::discover_ocdfg(&drilled);
//! assert_eq!(dfg.arc("ot", "rt", "Test~type=ECG"), Some(1));
//! ```

pub mod catalog;
pub mod discovery;
pub mod encoding;
pub mod io;
pub mod model;
pub mod ops;
#[cfg(feature = "test-util")]
pub mod testing;
pub mod validate;

pub use catalog::{type_catalog, TypeHierarchy};
pub use discovery::{discover_ocdfg, flatten, render_dot, DotOptions, OcDfg};
pub use encoding::{decode_event_type, decode_object_type, encode_event_type, encode_object_type};
pub use io::{read_ocel_json, write_ocel_json, ReadError};
pub use model::{CompositeEventType, CompositeObjectType, OcelLog};
pub use ops::{apply, drill_down, fold, roll_up, unfold, OpError, Operation, OperationRequest, QualifierSet};
pub use validate::{validate, ValidationReport};
