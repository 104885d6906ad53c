//! Name-keyed factories for interchangeable strategies.
//!
//! Each family of algorithms (symbol families, bilinear evaluators, signal
//! generators, averaging windows) implements a common trait; a registry maps
//! names to constructors taking JSON parameters so that the command line and
//! config files can pick a variant at runtime.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::{Error, Result};

type Factory<T> = Box<dyn Fn(&Value) -> Result<Box<T>> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: BTreeMap::new() }
    }

    pub fn register(
        &mut self,
        name: &'static str,
        factory: impl Fn(&Value) -> Result<Box<T>> + Send + Sync + 'static,
    ) -> &mut Self {
        self.entries.insert(name, Box::new(factory));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, name: &str, params: &Value) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(f) => f(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}

/// Deserialize strategy parameters, treating `null` as an empty object.
pub fn params<P: serde::de::DeserializeOwned>(v: &Value) -> Result<P> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| Error::InvalidParameter(e.to_string()))
}
