pub use irsap_core;
