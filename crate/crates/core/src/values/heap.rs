use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::EvalError;
use crate::signature::Signature;

use super::value::Value;

/// Persistent parameter store. Cloning is cheap and shares storage; only
/// [`Heap::put`] allocates a new map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heap {
    slots: Arc<BTreeMap<String, Arc<[f64]>>>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn from_slots<I: IntoIterator<Item = (String, Vec<f64>)>>(slots: I) -> Self {
        Heap { slots: Arc::new(slots.into_iter().map(|(k, v)| (k, Arc::from(v))).collect()) }
    }

    /// Reads a slot of dimension `n`; an unset slot reads as zeros.
    pub fn get(&self, loc: &str, n: usize) -> Value {
        match self.slots.get(loc) {
            Some(v) => Value::Vec(v.clone()),
            None => Value::vec(vec![0.0; n]),
        }
    }

    pub fn put(&self, loc: &str, n: usize, v: &Value) -> Result<Heap, EvalError> {
        let data = v.as_vec()?;
        if data.len() != n {
            return Err(EvalError::ShapeMismatch {
                detail: format!("put of length {} into location {loc} : {n}", data.len()),
            });
        }
        let mut slots = (*self.slots).clone();
        slots.insert(loc.to_string(), Arc::from(data));
        Ok(Heap { slots: Arc::new(slots) })
    }

    pub fn slot(&self, loc: &str) -> Option<&[f64]> {
        self.slots.get(loc).map(|v| &v[..])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.slots.iter().map(|(k, v)| (k.as_str(), &v[..]))
    }

    /// True when both heaps share the same storage.
    pub fn ptr_eq(&self, other: &Heap) -> bool {
        Arc::ptr_eq(&self.slots, &other.slots)
    }

    /// Checks every slot against the declared locations.
    pub fn validate(&self, sig: &Signature) -> Result<(), String> {
        for (k, v) in self.slots.iter() {
            match sig.locations.get(k) {
                None => return Err(format!("heap slot `{k}` is not a declared location")),
                Some(n) if *n != v.len() => {
                    return Err(format!("heap slot `{k}` has length {} but is declared {n}", v.len()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Explicit zeros for every declared location missing from the heap.
    pub fn completed(&self, sig: &Signature) -> Heap {
        let mut slots = (*self.slots).clone();
        for (k, n) in &sig.locations {
            slots.entry(k.clone()).or_insert_with(|| Arc::from(vec![0.0; *n]));
        }
        Heap { slots: Arc::new(slots) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .slots
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v.to_vec())))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Heap, String> {
        let obj = v.as_object().ok_or("heap must be a JSON object")?;
        let mut slots = Vec::new();
        for (k, val) in obj {
            let arr = val.as_array().ok_or_else(|| format!("heap slot `{k}` must be an array"))?;
            let nums = arr
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| format!("heap slot `{k}` holds a non-number")))
                .collect::<Result<Vec<_>, _>>()?;
            slots.push((k.clone(), nums));
        }
        Ok(Heap::from_slots(slots))
    }

    /// Short stable fingerprint for trace lines.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in self.slots.iter() {
            for b in k.bytes() {
                h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
            }
            for x in v.iter() {
                h = (h ^ x.to_bits()).wrapping_mul(0x100_0000_01b3);
            }
        }
        format!("{:08x}", h >> 32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_put() {
        let hp = Heap::from_slots([("l0".to_string(), vec![1.0, 2.0])]);
        assert_eq!(hp.get("l0", 2), Value::vec(vec![1.0, 2.0]));
        assert_eq!(hp.get("l1", 3), Value::vec(vec![0.0; 3]));
        let hp2 = hp.put("l0", 2, &Value::vec(vec![9.0, 9.0])).unwrap();
        assert_eq!(hp2.slot("l0").unwrap(), &[9.0, 9.0]);
        assert_eq!(hp.slot("l0").unwrap(), &[1.0, 2.0]);
        assert!(hp.put("l0", 2, &Value::vec(vec![1.0])).is_err());
    }

    #[test]
    fn clones_share() {
        let hp = Heap::from_slots([("a".to_string(), vec![1.0])]);
        assert!(hp.clone().ptr_eq(&hp));
    }

    #[test]
    fn json_round_trip() {
        let hp = Heap::from_slots([("a".to_string(), vec![1.5, -2.0])]);
        assert_eq!(Heap::from_json(&hp.to_json()).unwrap(), hp);
    }
}
